"""Energy, dissipation, and barrier-certificate diagnostics.

Everything here is computed from accepted states only; nothing feeds back
into the time stepping.  The central objects are

* the free energy ``E`` (sum of the bulk potential, the chemotaxis
  coupling, the nutrient energy, and the gradient energy),
* the dissipation rate ``D`` and the discrete energy balance residual,
  whose first-order smallness in ``dt`` is a correctness probe of the
  scheme,
* the Lyapunov functional ``F`` for the mean-reverting dynamics,
* the modified potential ``tilde_mu`` and the comparison forcing
  ``tilde_h`` whose sup norm drives the ODE barrier envelopes that certify
  uniform separation of the phase field from +-1,
* the dual-norm distance used by continuous-dependence experiments.

All integrals are trapezoid-weighted, all dual norms come from the grid's
transform-space inverse Laplacian, so every quantity is consistent with the
discrete operators the solver itself uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EpsZero
from .grid import Grid, ScalarField
from .dynamics import ModelParams, SolverConfig, State, scheme_mu
from .potential import (
    newton_scalar_solve,
    psi,
    psi_prime,
    psi_reg,
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of scalar diagnostics; field order matches the CSV layout.

    ``delta = 1 - max(|phi|)`` is the separation margin (positive for
    interior fields).  Entries that a run does not compute (e.g. the
    barrier forcing for viscosity-free or regularized runs, or the bulk
    diagnostics under a lean observer) are NaN.
    """

    t: float
    phi_mean: float
    sigma_mean: float
    E: float
    F: float
    D: float
    energy_balance_residual: float
    min_phi: float
    max_phi: float
    delta: float
    newton_iters: int
    htilde_sup: float


def energy_E(state: State, mp: ModelParams, kappa: float = 0.0) -> float:
    """Total free energy; ``kappa > 0`` evaluates the regularized bulk term."""
    g = state.grid
    phi, sigma = state.phi, state.sigma
    if kappa > 0.0:
        bulk = psi_reg(phi, mp.potential)
    else:
        bulk = psi(phi, mp.potential)
    dens = mp.A * bulk - mp.chi * sigma * phi + 0.5 * sigma * sigma
    return g.integral(dens) + 0.5 * mp.B * g.grad_inner(phi, phi)


def dissipation_D(prev: State, curr: State, mp: ModelParams, cfg: SolverConfig) -> float:
    """Dissipation rate of one accepted step.

    ``|grad mu|^2 + |grad(sigma - chi phi)|^2 + eps |dphi/dt|^2`` with the
    chemical potential reconstructed exactly as the step used it.
    """
    g = curr.grid
    mu = scheme_mu(prev, curr, mp, cfg)
    phi_t = (curr.phi - prev.phi) / cfg.dt
    flux = curr.sigma - mp.chi * curr.phi
    out = g.grad_inner(mu, mu) + g.grad_inner(flux, flux)
    if mp.eps > 0.0:
        out += mp.eps * g.l2_norm(phi_t) ** 2
    return out


def energy_balance_residual(
    prev: State, curr: State, mp: ModelParams, cfg: SolverConfig, kappa: float = 0.0
) -> float:
    """Defect of the discrete energy identity over one step.

    ``|E(curr) - E(prev) + dt (D + alpha <phi - c0, mu>)|``; the scheme
    dissipates at least this identity up to a quadratic-in-``dt`` defect per
    step, so the value is a convergence-order probe.
    """
    g = curr.grid
    e0 = energy_E(prev, mp, kappa=kappa)
    e1 = energy_E(curr, mp, kappa=kappa)
    d = dissipation_D(prev, curr, mp, cfg)
    mu = scheme_mu(prev, curr, mp, cfg)
    reversion = mp.alpha * g.l2_inner(curr.phi - mp.c0, mu)
    return abs(e1 - e0 + cfg.dt * (d + reversion))


def lyapunov_F(state: State, mp: ModelParams, kappa: float = 0.0) -> float:
    """Energy plus the mean-reversion penalty
    ``(alpha/2) |phi - mean(phi)|_{dual}^2``; nonincreasing along the flow
    once the mean has relaxed."""
    out = energy_E(state, mp, kappa=kappa)
    if mp.alpha > 0.0:
        g = state.grid
        fluct = state.phi - g.mean(state.phi)
        out += 0.5 * mp.alpha * g.dual_norm_V0(fluct) ** 2
    return out


def tilde_mu(state: State, mp: ModelParams, phi_t: ScalarField) -> ScalarField:
    """Chemical potential shifted by the nonlocal mean-reversion potential.

    ``A Psi'(phi) - B Lap phi - chi sigma + eps phi_t + alpha N(phi - mean)``
    where ``N`` is the zero-mean inverse Laplacian.  Requires ``phi``
    strictly interior.
    """
    g = state.grid
    out = (
        mp.A * psi_prime(state.phi, mp.potential)
        - mp.B * g.laplacian_neumann(state.phi)
        - mp.chi * state.sigma
        + mp.eps * phi_t
    )
    if mp.alpha > 0.0:
        out += mp.alpha * g.inv_laplacian_zero_mean(state.phi - g.mean(state.phi))
    return out


def tilde_h(state: State, mp: ModelParams, phi_t: ScalarField) -> ScalarField:
    """Forcing seen by the convex part of the potential.

    Rearranging the chemical potential so that ``A Psi0'(phi) + eps phi_t``
    stands alone gives a right-hand side whose sup norm is exactly what the
    ODE barrier envelopes integrate:

    ``h = chi (sigma - mean(sigma)) + A mean(Psi'(phi)) + eps mean(phi_t)
    - N(phi_t - mean(phi_t)) - alpha N(phi - mean(phi)) + A theta0 phi``.
    """
    g = state.grid
    mean_phi_t = g.mean(phi_t)
    out = (
        mp.chi * (state.sigma - g.mean(state.sigma))
        + mp.A * g.mean(psi_prime(state.phi, mp.potential))
        + mp.eps * mean_phi_t
        - g.inv_laplacian_zero_mean(phi_t - mean_phi_t)
        + mp.A * mp.potential.theta0 * state.phi
    )
    if mp.alpha > 0.0:
        out -= mp.alpha * g.inv_laplacian_zero_mean(state.phi - g.mean(state.phi))
    return out


def initial_phi_t(state: State, mp: ModelParams) -> ScalarField:
    """Compatible initial time derivative of the phase field.

    Solves ``(I - eps Lap) phi_t = Lap(A Psi'(phi) - B Lap phi - chi sigma)
    - alpha (phi - c0)`` in transform space; for ``eps = 0`` this reduces to
    the plain right-hand side.
    """
    g = state.grid
    inner = (
        mp.A * psi_prime(state.phi, mp.potential)
        - mp.B * g.laplacian_neumann(state.phi)
        - mp.chi * state.sigma
    )
    rhs = g.laplacian_neumann(inner) - mp.alpha * (state.phi - mp.c0)
    if mp.eps == 0.0:
        return rhs
    coeffs = g.dct(rhs) / (1.0 + mp.eps * g.eigenvalues)
    return g.idct(coeffs)


def record_for(
    prev: Optional[State],
    curr: State,
    mp: ModelParams,
    cfg: SolverConfig,
    newton_iters: int = 0,
    lean: bool = False,
) -> DiagnosticsRecord:
    """Assemble one diagnostics row.

    ``prev is None`` marks initial data: the dissipation and balance columns
    are then zero and the barrier forcing uses the compatible initial time
    derivative.  ``lean=True`` skips the energy/dissipation block (NaN
    columns) for long runs that only need separation tracking.
    """
    g = curr.grid
    exact = cfg.scheme == "exact-log"
    kappa = 0.0 if exact else mp.potential.kappa
    min_phi = float(np.min(curr.phi))
    max_phi = float(np.max(curr.phi))
    delta = 1.0 - max(abs(min_phi), abs(max_phi))

    if lean:
        e = f = d = bal = math.nan
    else:
        e = energy_E(curr, mp, kappa=kappa)
        f = lyapunov_F(curr, mp, kappa=kappa)
        if prev is None:
            d = 0.0
            bal = 0.0
        else:
            d = dissipation_D(prev, curr, mp, cfg)
            bal = energy_balance_residual(prev, curr, mp, cfg, kappa=kappa)

    if exact and mp.eps > 0.0:
        if prev is None:
            phi_t = initial_phi_t(curr, mp)
        else:
            phi_t = (curr.phi - prev.phi) / cfg.dt
        htilde = float(np.max(np.abs(tilde_h(curr, mp, phi_t))))
    else:
        htilde = math.nan

    return DiagnosticsRecord(
        t=curr.t,
        phi_mean=g.mean(curr.phi),
        sigma_mean=g.mean(curr.sigma),
        E=e,
        F=f,
        D=d,
        energy_balance_residual=bal,
        min_phi=min_phi,
        max_phi=max_phi,
        delta=delta,
        newton_iters=newton_iters,
        htilde_sup=htilde,
    )


# ----------------------------------------------------------------------
# barrier envelopes
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryTrace:
    """Separation data of a trajectory at record times, as plain arrays."""

    times: np.ndarray
    min_phi: np.ndarray
    max_phi: np.ndarray
    htilde_sup: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.min_phi) == len(self.max_phi) == len(self.htilde_sup) == n):
            raise ValueError("trace arrays must share one length")
        if n < 1:
            raise ValueError("trace must contain at least one record")


def trace_from_records(records: Sequence[DiagnosticsRecord]) -> TrajectoryTrace:
    return TrajectoryTrace(
        times=np.array([r.t for r in records]),
        min_phi=np.array([r.min_phi for r in records]),
        max_phi=np.array([r.max_phi for r in records]),
        htilde_sup=np.array([r.htilde_sup for r in records]),
    )


@dataclass(frozen=True)
class BarrierTrace:
    """ODE envelopes certifying uniform separation.

    ``lower <= phi <= upper`` is claimed at the trace times; ``c_h`` is the
    sup of the barrier forcing over the window, ``y_star`` the attracting
    equilibrium ``tanh(c_h / (A theta))`` of the envelope ODE, ``delta_min``
    the uniform margin ``1 - max(upper)`` over the window, and ``holds``
    records whether the trajectory actually stayed inside.
    """

    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    c_h: float
    y_star: float
    delta_min: float
    holds: bool


def barrier_check(
    trace: TrajectoryTrace,
    mp: ModelParams,
    delta0: Optional[float] = None,
    slack: float = 1e-10,
) -> BarrierTrace:
    """Integrate the comparison envelopes and test the sandwich property.

    The upper envelope solves ``eps y' + A Psi0'(y) = C_h`` from
    ``1 - delta0`` by implicit Euler on the trace's own time intervals (the
    scalar solves are barrier-respecting, so the envelope never leaves
    (-1, 1)); the lower envelope is its mirror image.  Requires ``eps > 0``
    and finite forcing values on the whole trace.
    """
    if mp.eps <= 0.0:
        raise EpsZero("barrier envelopes require eps > 0")
    h = np.asarray(trace.htilde_sup, dtype=float)
    if not np.all(np.isfinite(h)):
        raise ValueError("trace.htilde_sup contains non-finite entries")
    c_h = float(np.max(h))
    if delta0 is None:
        delta0 = 1.0 - max(abs(trace.min_phi[0]), abs(trace.max_phi[0]))
    if not (0.0 < delta0 < 1.0):
        raise ValueError(f"delta0 must lie in (0,1), got {delta0}")

    p = mp.potential
    y = 1.0 - delta0
    upper = np.empty_like(h)
    upper[0] = y
    for i in range(1, len(h)):
        dt_i = float(trace.times[i] - trace.times[i - 1])
        if dt_i <= 0.0:
            raise ValueError("trace times must be strictly increasing")
        y = newton_scalar_solve(y + dt_i * c_h / mp.eps, dt_i * mp.A / mp.eps, p)
        upper[i] = y
    lower = -upper

    y_star = math.tanh(c_h / (mp.A * p.theta))
    holds = bool(
        np.all(trace.max_phi <= upper + slack) and np.all(trace.min_phi >= lower - slack)
    )
    return BarrierTrace(
        times=np.array(trace.times, dtype=float),
        lower=lower,
        upper=upper,
        c_h=c_h,
        y_star=y_star,
        delta_min=1.0 - float(np.max(upper)),
        holds=holds,
    )


# ----------------------------------------------------------------------
# trajectory distances
# ----------------------------------------------------------------------


def dual_distance(a: State, b: State, mp: ModelParams) -> float:
    """Distance in the norm natural to continuous dependence:

    ``(|dphi|_{H1'}^2 + eps |dphi|_2^2 + |dsigma|_{H1'}^2)^(1/2)``.
    """
    g = a.grid
    g._check(a.phi, a.sigma, b.phi, b.sigma)
    dphi = a.phi - b.phi
    dsig = a.sigma - b.sigma
    out = g.dual_norm_H1p(dphi) ** 2 + g.dual_norm_H1p(dsig) ** 2
    if mp.eps > 0.0:
        out += mp.eps * g.l2_norm(dphi) ** 2
    return math.sqrt(out)
