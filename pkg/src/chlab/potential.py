"""The logarithmic double-well potential and its regularized family.

The bulk free-energy density used throughout is

    Psi(r) = Psi0(r) + (theta0/2) (1 - r^2),
    Psi0(r) = (theta/2) [(1 - r) ln(1 - r) + (1 + r) ln(1 + r)],

with 0 < theta < theta0, so the convex singular part ``Psi0`` (with
``Psi0'' = theta/(1-r^2) >= theta``) competes with the concave quadratic.
``Psi0`` is finite up to the endpoints (``Psi0(+-1) = theta ln 2``) while
``Psi0'(r) = theta artanh(r)`` blows up there, which is what confines the
phase variable to (-1, 1).

For approximation runs the singular derivative is replaced by its C^1
extension ``psi0_prime_reg``: equal to ``Psi0'`` on ``|r| <= 1 - kappa``
and continued linearly with slope ``Psi0''(1 - kappa)`` outside, so the
extension is globally Lipschitz with derivative >= theta everywhere.  Its
antiderivative ``psi0_reg`` (normalized to vanish at 0) continues ``Psi0``
by its second-order Taylor polynomial at the knots; it never exceeds
``Psi0`` on [-1, 1] and is bounded below uniformly in kappa.

All functions accept scalars or arrays and are safe to call inside hot
loops; the scalar implicit solve :func:`newton_scalar_solve` is the
building block of the barrier-certificate integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import KappaZero, NoConvergence, OutOfDomain


@dataclass(frozen=True)
class PotentialParams:
    """Constants of the potential: theta, theta0, a0, and the active kappa.

    Invariants enforced at construction: ``theta > 0``, ``theta0 > theta``
    (the gap ``theta0 - theta`` is the concavity excess that makes the well
    double), ``a0 in (0, 1)`` (the margin within which the convexity of
    ``Psi0''`` is monotone toward the endpoints), and ``0 <= kappa < a0``
    (``kappa = 0`` selects the exact potential).
    """

    theta: float
    theta0: float
    a0: float = 0.99
    kappa: float = 0.0

    def __post_init__(self):
        if not (self.theta > 0.0):
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if not (self.theta0 > self.theta):
            raise ValueError(
                f"theta0 must exceed theta, got theta0={self.theta0} theta={self.theta}"
            )
        if not (0.0 < self.a0 < 1.0):
            raise ValueError(f"a0 must lie in (0,1), got {self.a0}")
        if not (0.0 <= self.kappa < self.a0):
            raise ValueError(
                f"kappa must lie in [0, a0) with a0={self.a0}, got {self.kappa}"
            )


def _require_closed(r, name: str) -> None:
    if np.max(np.abs(r)) > 1.0:
        raise OutOfDomain(f"{name} needs |r| <= 1, got sup |r| = {np.max(np.abs(r))}")


def _require_open(r, name: str) -> None:
    if np.max(np.abs(r)) >= 1.0:
        raise OutOfDomain(f"{name} needs |r| < 1, got sup |r| = {np.max(np.abs(r))}")


# ----------------------------------------------------------------------
# exact potential
# ----------------------------------------------------------------------


def psi0(r, p: PotentialParams):
    """Convex logarithmic part; defined on [-1, 1] with Psi0(+-1) = theta ln 2."""
    _require_closed(r, "psi0")
    # xlogy(0, 0) = 0 gives the correct endpoint limits.
    return 0.5 * p.theta * (xlogy(1.0 - r, 1.0 - r) + xlogy(1.0 + r, 1.0 + r))


def psi0_prime(r, p: PotentialParams):
    """Psi0'(r) = theta artanh(r); singular at the endpoints."""
    _require_open(r, "psi0_prime")
    return p.theta * np.arctanh(r)


def psi0_second(r, p: PotentialParams):
    """Psi0''(r) = theta/(1 - r^2) >= theta on (-1, 1)."""
    _require_open(r, "psi0_second")
    return p.theta / (1.0 - np.square(r))


def psi(r, p: PotentialParams):
    """Full double-well density Psi = Psi0 + (theta0/2)(1 - r^2)."""
    return psi0(r, p) + 0.5 * p.theta0 * (1.0 - np.square(r))


def psi_prime(r, p: PotentialParams):
    """Psi'(r) = theta artanh(r) - theta0 r."""
    return psi0_prime(r, p) - p.theta0 * r


def psi_second(r, p: PotentialParams):
    """Psi''(r) = theta/(1-r^2) - theta0; negative between the spinodal points."""
    return psi0_second(r, p) - p.theta0


# ----------------------------------------------------------------------
# regularized family (kappa > 0)
# ----------------------------------------------------------------------


def _knot_and_slope(p: PotentialParams) -> tuple[float, float]:
    if p.kappa <= 0.0:
        raise KappaZero("regularized potential requires kappa > 0")
    knot = 1.0 - p.kappa
    slope = p.theta / (1.0 - knot * knot)  # = theta / (kappa (2 - kappa))
    return knot, slope


def psi0_prime_reg(r, p: PotentialParams):
    """C^1 extension of Psi0' to all of R: linear outside |r| <= 1 - kappa."""
    knot, slope = _knot_and_slope(p)
    core = np.clip(r, -knot, knot)
    return p.theta * np.arctanh(core) + slope * (r - core)


def psi0_second_reg(r, p: PotentialParams):
    """Derivative of the extension: theta/(1-r^2) inside, constant outside."""
    knot, _ = _knot_and_slope(p)
    core = np.clip(r, -knot, knot)
    return p.theta / (1.0 - core * core)


def psi0_reg(r, p: PotentialParams):
    """Antiderivative of :func:`psi0_prime_reg` with value 0 at r = 0.

    Inside the knots this is ``Psi0``; outside it continues by the quadratic
    Taylor polynomial of ``Psi0`` at ``+-(1 - kappa)``, which keeps it below
    ``Psi0`` on [-1, 1] and bounded from below uniformly in kappa.
    """
    knot, slope = _knot_and_slope(p)
    core = np.clip(r, -knot, knot)
    excess = r - core
    base = 0.5 * p.theta * (xlogy(1.0 - core, 1.0 - core) + xlogy(1.0 + core, 1.0 + core))
    return base + p.theta * np.arctanh(core) * excess + 0.5 * slope * excess * excess


def psi_reg(r, p: PotentialParams):
    """Regularized full density Psi0_kappa + (theta0/2)(1 - r^2)."""
    return psi0_reg(r, p) + 0.5 * p.theta0 * (1.0 - np.square(r))


def psi_prime_reg(r, p: PotentialParams):
    """Regularized Psi': psi0_prime_reg(r) - theta0 r."""
    return psi0_prime_reg(r, p) - p.theta0 * r


# ----------------------------------------------------------------------
# scalar implicit solve
# ----------------------------------------------------------------------


def newton_scalar_solve(c: float, lam: float, p: PotentialParams) -> float:
    """Solve ``r + lam * Psi0'(r) = c`` for the unique root r in (-1, 1).

    The map ``g(r) = r + lam theta artanh(r)`` is strictly increasing and
    onto R for ``lam > 0``, so the root exists and is unique.  A damped-
    artanh initial guess followed by bracket-safeguarded Newton converges
    for any finite ``c``.  When ``|c|`` is so large that the true root lies
    closer to an endpoint than float64 can represent, the residual
    tolerance is unreachable; the solve then finishes on bracket collapse
    and returns the nearest representable interior point, which is accurate
    in root location to machine precision (and errs toward the interior, so
    barrier envelopes built from it stay valid).
    """
    if not lam > 0.0:
        raise ValueError(f"lam must be > 0, got {lam}")
    lo = math.nextafter(-1.0, 0.0)
    hi = math.nextafter(1.0, 0.0)
    lt = lam * p.theta

    def g(r: float) -> float:
        return r + lt * math.atanh(r)

    target_tol = 1e-14 * (1.0 + abs(c))
    if g(hi) <= c:
        return hi
    if g(lo) >= c:
        return lo
    # Damped inverse of the dominant term as a starting point.
    r = math.tanh(c / (1.0 + lt))
    r = min(max(r, lo), hi)
    for _ in range(200):
        res = g(r) - c
        if abs(res) <= target_tol:
            return r
        if res > 0.0:
            hi = r
        else:
            lo = r
        if hi - lo <= 2.0 * 2.3e-16 * max(1.0, abs(r)):
            return r  # converged in location; residual not representable
        deriv = 1.0 + lt / (1.0 - r * r)
        r_new = r - res / deriv
        if not (lo < r_new < hi):
            r_new = 0.5 * (lo + hi)  # bisection fallback keeps the bracket
        r = r_new
    raise NoConvergence(
        f"scalar solve stalled after 200 iterations (c={c}, lam={lam})"
    )
