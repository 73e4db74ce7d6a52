"""Discrete function space on a box with homogeneous Neumann conditions.

This module owns the spatial discretization used everywhere else: a uniform
tensor grid on an axis-aligned box whose nodes include the boundary, the
3-point mirrored-ghost Laplacian, trapezoidal quadrature matched to the node
layout, the inverse operators N (inverse Neumann Laplacian on mean-zero
data) and N1 = (I - Lap)^-1, and the dual norms built from N.

Discretization facts the rest of the package relies on:

* Nodes along axis ``a`` sit at ``x_i = i * h_a`` with ``h_a = L_a/(n_a-1)``,
  so boundary nodes are included and ``n_a >= 3``.
* The Laplacian uses the second-order 3-point stencil per axis with mirrored
  ghost nodes (``f[-1] = f[1]``), the discrete version of a homogeneous
  Neumann condition.  Combined with trapezoidal weights this makes the
  weighted operator symmetric with zero weighted column sums, so discrete
  integrals of ``Lap f`` vanish exactly and summation by parts is exact:
  ``<-Lap f, g>_w = grad_inner(f, g)``.
* The stencil is diagonalized exactly by the type-I discrete cosine
  transform.  Mode ``cos(pi k i/(n-1))`` is an eigenvector of ``-Lap`` with
  eigenvalue ``lam_k = (2 - 2 cos(pi k/(n-1)))/h^2``; multi-dimensional
  eigenvalues are the sums over axes.  All inverse operators are one
  forward transform, a diagonal scaling, and one inverse transform.

Scalar fields are plain ``numpy`` arrays of shape ``grid.shape`` (C-order,
axis 0 = x).  The :data:`ScalarField` alias is used in signatures for
readability; fields carry no grid pointer of their own, so every operation
lives on :class:`Grid` and validates shapes on entry.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.fft

from .errors import GridMismatch, NonZeroMean

ScalarField = np.ndarray
"""Nodal real values on a :class:`Grid`; shape must equal ``grid.shape``."""


def _fft_workers() -> int:
    """Worker count for the cosine transforms, capped by ``CHLAB_THREADS``."""
    raw = os.environ.get("CHLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _as_tuple(values: Iterable, kind) -> tuple:
    return tuple(kind(v) for v in values)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on a box, 1 to 3 dimensions, nodes on the boundary.

    Parameters
    ----------
    n_per_axis : tuple of int
        Node count per axis, each >= 3.
    length_per_axis : tuple of float
        Box edge lengths, each > 0.

    Two grids compare equal iff they have the same node counts and lengths,
    which is what the ``GridMismatch`` checks rely on.
    """

    n_per_axis: tuple[int, ...]
    length_per_axis: tuple[float, ...]

    def __init__(self, n_per_axis, length_per_axis):
        object.__setattr__(self, "n_per_axis", _as_tuple(np.atleast_1d(n_per_axis), int))
        object.__setattr__(
            self, "length_per_axis", _as_tuple(np.atleast_1d(length_per_axis), float)
        )
        if not 1 <= len(self.n_per_axis) <= 3:
            raise ValueError(f"grid must have 1-3 axes, got {len(self.n_per_axis)}")
        if len(self.length_per_axis) != len(self.n_per_axis):
            raise ValueError(
                f"{len(self.n_per_axis)} node counts but "
                f"{len(self.length_per_axis)} lengths"
            )
        for n in self.n_per_axis:
            if n < 3:
                raise ValueError(f"need at least 3 nodes per axis, got n={n}")
        for length in self.length_per_axis:
            if not (length > 0.0 and math.isfinite(length)):
                raise ValueError(f"axis length must be positive and finite, got {length}")

    # ------------------------------------------------------------------
    # geometry
    # ------------------------------------------------------------------

    @property
    def ndim(self) -> int:
        return len(self.n_per_axis)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_axis

    @property
    def node_count(self) -> int:
        return int(np.prod(self.n_per_axis))

    @cached_property
    def h_per_axis(self) -> tuple[float, ...]:
        return tuple(
            L / (n - 1) for n, L in zip(self.n_per_axis, self.length_per_axis)
        )

    @cached_property
    def volume(self) -> float:
        return float(np.prod(self.length_per_axis))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis, ``0, h, ..., L``."""
        n = self.n_per_axis[axis]
        return np.linspace(0.0, self.length_per_axis[axis], n)

    def coords(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcastable to ``shape`` (ij indexing)."""
        return tuple(
            np.reshape(self.axis_coords(a), [-1 if b == a else 1 for b in range(self.ndim)])
            for a in range(self.ndim)
        )

    # ------------------------------------------------------------------
    # quadrature
    # ------------------------------------------------------------------

    def _axis_weights(self, axis: int) -> np.ndarray:
        n = self.n_per_axis[axis]
        w = np.full(n, self.h_per_axis[axis])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal node weights; positive, summing to the box volume."""
        w = self._axis_weights(0)
        full = w
        for a in range(1, self.ndim):
            full = np.multiply.outer(full, self._axis_weights(a))
        return full

    @cached_property
    def _cell_weights(self) -> tuple[np.ndarray, ...]:
        """Quadrature weights for per-axis cell differences (midpoint along
        the differenced axis, trapezoid along the others); used by
        :meth:`grad_inner` so that summation by parts is exact."""
        out = []
        for a in range(self.ndim):
            vecs = []
            for b in range(self.ndim):
                if b == a:
                    vecs.append(np.full(self.n_per_axis[b] - 1, self.h_per_axis[b]))
                else:
                    vecs.append(self._axis_weights(b))
            w = vecs[0]
            for v in vecs[1:]:
                w = np.multiply.outer(w, v)
            out.append(w)
        return tuple(out)

    # ------------------------------------------------------------------
    # transforms and spectra
    # ------------------------------------------------------------------

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``-Lap`` per cosine mode, shape ``grid.shape``.

        Entry ``(k1, .., kd)`` is ``sum_a (2 - 2 cos(pi k_a/(n_a-1)))/h_a^2``;
        the corner mode (all ``k_a = 0``) is exactly 0.
        """
        total = np.zeros(self.shape)
        for a in range(self.ndim):
            n = self.n_per_axis[a]
            h = self.h_per_axis[a]
            lam = (2.0 - 2.0 * np.cos(np.pi * np.arange(n) / (n - 1))) / h**2
            lam[0] = 0.0
            total = total + np.reshape(lam, [-1 if b == a else 1 for b in range(self.ndim)])
        return total

    @cached_property
    def _eigenvalues_safe(self) -> np.ndarray:
        lam = self.eigenvalues.copy()
        lam.flat[0] = 1.0
        return lam

    @cached_property
    def mode_mass(self) -> np.ndarray:
        """Quadrature mass of each unnormalized DCT-I coefficient.

        For coefficients ``F = dct(f)`` the weighted inner product satisfies
        ``<f, f>_w = sum_k M_k F_k**2`` with per-axis masses
        ``L/(4 (n-1)^2)`` for the two end modes and ``L/(2 (n-1)^2)`` for
        interior modes (discrete orthogonality of the cosine basis under the
        trapezoid weights).  Verified against direct quadrature in the tests.
        """
        m = None
        for a in range(self.ndim):
            n = self.n_per_axis[a]
            L = self.length_per_axis[a]
            axis_m = np.full(n, L / (2.0 * (n - 1) ** 2))
            axis_m[0] = L / (4.0 * (n - 1) ** 2)
            axis_m[-1] = L / (4.0 * (n - 1) ** 2)
            m = axis_m if m is None else np.multiply.outer(m, axis_m)
        return m

    @cached_property
    def _corner_coeff_scale(self) -> float:
        """DCT-I coefficient of the constant field 1 (corner mode value)."""
        return float(np.prod([2.0 * (n - 1) for n in self.n_per_axis]))

    def dct(self, f: ScalarField) -> np.ndarray:
        """Forward (unnormalized) type-I cosine transform over all axes."""
        self._check(f)
        return scipy.fft.dctn(f, type=1, workers=_fft_workers())

    def idct(self, coeffs: np.ndarray) -> ScalarField:
        """Inverse of :meth:`dct`."""
        self._check(coeffs)
        return scipy.fft.idctn(coeffs, type=1, workers=_fft_workers())

    # ------------------------------------------------------------------
    # validation
    # ------------------------------------------------------------------

    def _check(self, f: np.ndarray, *more: np.ndarray) -> None:
        for arr in (f, *more):
            if np.shape(arr) != self.shape:
                raise GridMismatch(
                    f"field of shape {np.shape(arr)} does not match grid {self.shape}"
                )

    # ------------------------------------------------------------------
    # means and inner products
    # ------------------------------------------------------------------

    def integral(self, f: ScalarField) -> float:
        """Trapezoidal approximation of the integral of ``f`` over the box."""
        self._check(f)
        return float(np.sum(self.weights * f))

    def mean(self, f: ScalarField) -> float:
        """Generalized mean value: integral divided by the box volume."""
        return self.integral(f) / self.volume

    def l2_inner(self, f: ScalarField, g: ScalarField) -> float:
        self._check(f, g)
        return float(np.sum(self.weights * f * g))

    def l2_norm(self, f: ScalarField) -> float:
        self._check(f)
        return math.sqrt(float(np.sum(self.weights * f * f)))

    def sup_norm(self, f: ScalarField) -> float:
        self._check(f)
        return float(np.max(np.abs(f)))

    def grad_inner(self, f: ScalarField, g: ScalarField) -> float:
        """Gradient inner product paired exactly with the Laplacian.

        Uses forward cell differences with midpoint weights along the
        differenced axis, so ``<-Lap f, g>_w == grad_inner(f, g)`` to
        round-off (summation by parts; checked against dense matrices in
        the tests).
        """
        self._check(f, g)
        total = 0.0
        for a in range(self.ndim):
            h = self.h_per_axis[a]
            df = np.diff(f, axis=a) / h
            dg = df if g is f else np.diff(g, axis=a) / h
            total += float(np.sum(df * dg * self._cell_weights[a]))
        return total

    def grad_norm(self, f: ScalarField) -> float:
        return math.sqrt(max(self.grad_inner(f, f), 0.0))

    def h1_products(self, f: ScalarField, g: ScalarField) -> tuple[float, float]:
        """Weighted L2 inner product and gradient inner product of (f, g)."""
        return self.l2_inner(f, g), self.grad_inner(f, g)

    # ------------------------------------------------------------------
    # Laplacian and inverses
    # ------------------------------------------------------------------

    def laplacian_neumann(self, f: ScalarField) -> ScalarField:
        """Apply the mirrored-ghost 3-point Laplacian (returns ``Lap f``)."""
        self._check(f)
        out = np.zeros_like(f, dtype=float)
        for a in range(self.ndim):
            pad = [(1, 1) if b == a else (0, 0) for b in range(self.ndim)]
            fp = np.pad(f, pad, mode="reflect")
            lo = [slice(None)] * self.ndim
            hi = [slice(None)] * self.ndim
            lo[a] = slice(0, -2)
            hi[a] = slice(2, None)
            out += (fp[tuple(hi)] - 2.0 * f + fp[tuple(lo)]) / self.h_per_axis[a] ** 2
        return out

    def inv_laplacian_zero_mean(self, f: ScalarField) -> ScalarField:
        """The operator N: the mean-zero solution ``u`` of ``-Lap u = f``.

        Requires ``f`` to be (numerically) mean-free; raises
        :class:`NonZeroMean` otherwise so callers subtract the mean
        deliberately rather than by accident.
        """
        self._check(f)
        fbar = self.mean(f)
        if abs(fbar) > 1e-10 * (1.0 + float(np.max(np.abs(f)))):
            raise NonZeroMean(
                f"inverse Laplacian needs mean-zero data; got mean {fbar:.3e}"
            )
        coeffs = self.dct(f)
        coeffs = coeffs / self._eigenvalues_safe
        coeffs.flat[0] = 0.0
        return self.idct(coeffs)

    def helmholtz_inverse(self, f: ScalarField) -> ScalarField:
        """The operator N1 = (I - Lap)^-1, defined for any field."""
        self._check(f)
        coeffs = self.dct(f) / (1.0 + self.eigenvalues)
        return self.idct(coeffs)

    # ------------------------------------------------------------------
    # dual norms
    # ------------------------------------------------------------------

    def _spectral_mean_and_dual_sq(self, f: ScalarField) -> tuple[float, float]:
        """Mean of ``f`` and ``<f - fbar, N(f - fbar)>_w`` from one transform."""
        coeffs = self.dct(f)
        mean = float(coeffs.flat[0]) / self._corner_coeff_scale
        mass = self.mode_mass / self._eigenvalues_safe
        dual_sq = float(np.sum(mass * coeffs * coeffs)) - float(
            mass.flat[0] * coeffs.flat[0] ** 2
        )
        return mean, max(dual_sq, 0.0)

    def dual_norm_V0(self, f: ScalarField) -> float:
        """Dual norm of mean-zero data: ``sqrt(<f, N f>_w)``.

        Equals the L2 norm of ``grad(N f)`` by summation by parts; computed
        spectrally so it costs one transform and no solve.
        """
        self._check(f)
        fbar = self.mean(f)
        if abs(fbar) > 1e-10 * (1.0 + float(np.max(np.abs(f)))):
            raise NonZeroMean(f"dual norm needs mean-zero data; got mean {fbar:.3e}")
        _, dual_sq = self._spectral_mean_and_dual_sq(f)
        return math.sqrt(dual_sq)

    def dual_norm_H1p(self, f: ScalarField) -> float:
        """Norm dual to H^1: ``sqrt(|f - fbar|_V0'^2 + fbar^2)`` for any f."""
        self._check(f)
        mean, dual_sq = self._spectral_mean_and_dual_sq(f)
        return math.sqrt(dual_sq + mean * mean)
