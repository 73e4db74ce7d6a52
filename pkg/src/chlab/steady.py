"""Stationary states: residuals, the nutrient-phase relation, relaxation.

A stationary pair (phi, sigma) of the coupled system satisfies

    -B Lap phi + A Psi'(phi) - chi sigma + alpha N(phi - mean(phi))
        = A mean(Psi'(phi)) - chi mean(sigma),
    grad(sigma - chi phi) = 0,
    mean(phi) = c0 (when alpha > 0),   mean(sigma) = its initial value,

where ``N`` is the zero-mean inverse Laplacian.  Steady states are located
by relaxation with the barrier-preserving stepper itself rather than by a
direct nonlinear solve: the trajectory inherits interiority, and because
the implicit step's fixed points do not depend on ``dt``, relaxation runs
may take large time steps without moving the target.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import ModelParams, SolverConfig, State, Stepper, StepInfo
from .errors import OutOfDomain
from .grid import Grid, ScalarField
from .potential import psi_prime


@dataclass(frozen=True)
class SteadyReport:
    """Residuals of the stationary system at one state.

    ``residual_phi`` is the dual-space norm of the phase equation residual,
    ``residual_sigma`` the gradient norm of ``sigma - chi phi``,
    ``mean_phi_err`` the distance of the phase mean from its target (zero
    when ``alpha = 0``, where the mean is conserved rather than driven),
    ``mean_sigma_err`` the drift of the nutrient mean from its reference,
    and ``delta_inf = 1 - sup|phi|`` the separation margin of the state.
    """

    residual_phi: float
    residual_sigma: float
    mean_phi_err: float
    mean_sigma_err: float
    delta_inf: float
    converged: bool
    wall_time: float

    def __post_init__(self):
        for name in ("residual_phi", "residual_sigma", "mean_phi_err", "mean_sigma_err"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


def stationary_residual(
    grid: Grid,
    phi: ScalarField,
    sigma: ScalarField,
    mp: ModelParams,
    sigma_bar0: Optional[float] = None,
    tol_residual: float = 1e-8,
    tol_mean: float = 1e-8,
) -> SteadyReport:
    """Measure how far a pair is from solving the stationary system.

    The phase residual folds the unknown constant (the stationary chemical
    potential) out by subtracting the spatial means of its nonconstant
    terms, leaving a zero-mean field measured in the H1-dual norm.  The
    mean defects are reported separately.  ``sigma_bar0`` defaults to the
    pair's own nutrient mean (zero drift).
    """
    started = time.perf_counter()
    grid._check(phi, sigma)
    if float(np.max(np.abs(phi))) >= 1.0:
        raise OutOfDomain("stationary residual needs ||phi||_inf < 1")
    prime = psi_prime(phi, mp.potential)
    mean_sigma = grid.mean(sigma)
    residual_field = (
        -mp.B * grid.laplacian_neumann(phi)
        + mp.A * prime
        - mp.chi * sigma
        - (mp.A * grid.mean(prime) - mp.chi * mean_sigma)
    )
    if mp.alpha > 0.0:
        residual_field += mp.alpha * grid.inv_laplacian_zero_mean(phi - grid.mean(phi))
    residual_phi = grid.dual_norm_H1p(residual_field)
    residual_sigma = grid.grad_norm(sigma - mp.chi * phi)
    mean_phi_err = abs(grid.mean(phi) - mp.c0) if mp.alpha > 0.0 else 0.0
    mean_sigma_err = 0.0 if sigma_bar0 is None else abs(mean_sigma - sigma_bar0)
    sup = float(np.max(np.abs(phi)))
    converged = (
        residual_phi <= tol_residual
        and residual_sigma <= tol_residual
        and mean_phi_err <= tol_mean
        and mean_sigma_err <= tol_mean
    )
    return SteadyReport(
        residual_phi=residual_phi,
        residual_sigma=residual_sigma,
        mean_phi_err=mean_phi_err,
        mean_sigma_err=mean_sigma_err,
        delta_inf=1.0 - sup,
        converged=converged,
        wall_time=time.perf_counter() - started,
    )


def sigma_from_phi(grid: Grid, phi: ScalarField, mp: ModelParams, sigma_bar0: float) -> ScalarField:
    """The unique nutrient field stationary against a given phase field:
    ``chi phi`` plus the constant fixing ``mean(sigma) = sigma_bar0``."""
    return mp.chi * phi + (sigma_bar0 - mp.chi * grid.mean(phi))


def relax_to_steady(
    state0: State,
    mp: ModelParams,
    cfg: SolverConfig,
    tol_rate: float = 1e-9,
    tol_residual: float = 1e-8,
    t_max: float = 1e4,
    observer: Optional[Callable[[State, State, StepInfo], None]] = None,
) -> tuple[State, SteadyReport]:
    """March the dynamics until the motion stalls, then audit the limit.

    Stops when ``sup|dphi|/dt + sup|dsigma|/dt <= tol_rate`` or the horizon
    ``t_max`` is reached; the returned report's ``converged`` flag requires
    both the stall and the stationary residuals at their tolerances.  The
    nutrient-mean reference is taken from the initial state (it is
    conserved exactly by the scheme).
    """
    started = time.perf_counter()
    sigma_bar0 = state0.grid.mean(state0.sigma)
    stepper = Stepper(state0.grid, mp, cfg)
    state = state0
    stalled = False
    while state.t < t_max - 1e-9 * max(1.0, abs(t_max)):
        new = stepper.step(state)
        if observer is not None:
            observer(state, new, stepper.last_info)
        rate = (
            float(np.max(np.abs(new.phi - state.phi)))
            + float(np.max(np.abs(new.sigma - state.sigma)))
        ) / cfg.dt
        state = new
        if rate <= tol_rate:
            stalled = True
            break
    report = stationary_residual(
        state.grid,
        state.phi,
        state.sigma,
        mp,
        sigma_bar0=sigma_bar0,
        tol_residual=tol_residual,
    )
    report = SteadyReport(
        residual_phi=report.residual_phi,
        residual_sigma=report.residual_sigma,
        mean_phi_err=report.mean_phi_err,
        mean_sigma_err=report.mean_sigma_err,
        delta_inf=report.delta_inf,
        converged=stalled and report.converged,
        wall_time=time.perf_counter() - started,
    )
    return state, report


@dataclass(frozen=True)
class OmegaLimitReport:
    """Evidence that a trajectory accumulates on the stationary set.

    ``distances[i]`` is the L2 distance between consecutive samples
    ``i, i+1``; ``window_dissipation`` (when supplied by the caller) holds
    the dissipation integral over each sample window.  Both sequences
    should decrease along a trajectory approaching a steady state.
    """

    times: np.ndarray
    distances: np.ndarray
    distances_decreasing: bool
    window_dissipation: Optional[np.ndarray]
    dissipation_decreasing: Optional[bool]
    final_window_dissipation: Optional[float]


def omega_limit_probe(
    samples: Sequence[State],
    window_dissipation: Optional[Sequence[float]] = None,
) -> OmegaLimitReport:
    """Cauchy test on a sample sequence taken at increasing times.

    Needs at least three samples.  ``window_dissipation`` must align with
    the sample gaps (one value per consecutive pair) when given.
    """
    if len(samples) < 3:
        raise ValueError(f"need at least 3 samples, got {len(samples)}")
    g = samples[0].grid
    times = np.array([s.t for s in samples])
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("sample times must be strictly increasing")
    dist = []
    for a, b in zip(samples, samples[1:]):
        g._check(a.phi, a.sigma, b.phi, b.sigma)
        dist.append(
            math.sqrt(g.l2_norm(a.phi - b.phi) ** 2 + g.l2_norm(a.sigma - b.sigma) ** 2)
        )
    distances = np.array(dist)
    decreasing = bool(np.all(np.diff(distances) < 0.0))
    wd = None
    wd_dec = None
    wd_final = None
    if window_dissipation is not None:
        wd = np.asarray(window_dissipation, dtype=float)
        if len(wd) != len(samples) - 1:
            raise ValueError(
                f"window_dissipation needs {len(samples) - 1} entries, got {len(wd)}"
            )
        wd_dec = bool(np.all(np.diff(wd) < 0.0))
        wd_final = float(wd[-1])
    return OmegaLimitReport(
        times=times,
        distances=distances,
        distances_decreasing=decreasing,
        window_dissipation=wd,
        dissipation_decreasing=wd_dec,
        final_window_dissipation=wd_final,
    )
