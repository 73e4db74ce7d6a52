"""Semi-implicit, barrier-preserving time integration of the coupled system.

The evolution integrated here is the viscous phase-separation system with a
nonlocal mean-reversion term and a nutrient equation coupled through
chemotaxis:

    dphi/dt = Lap mu - alpha (phi - c0),
    mu      = A Psi'(phi) - B Lap phi - chi sigma + eps dphi/dt,
    dsigma/dt = Lap sigma - chi Lap phi,

with homogeneous Neumann conditions on a box.  One time step solves

    (phi+ - phi)/dt = Lap mu+ - alpha (phi+ - c0),
    mu+ = A Psi0'(phi+) - A theta0 phi - B Lap phi+ - chi sigma + eps (phi+ - phi)/dt,
    (sigma+ - sigma)/dt = Lap sigma+ - chi Lap phi+,

i.e. the convex singular part of the potential is implicit, the concave
quadratic and the chemotaxis source are explicit, the mean-reversion and
viscous terms are implicit, and the nutrient update is a linear implicit
solve done entirely in transform space.  Consequences used throughout:

* Exact discrete mean laws.  Because the discrete Laplacian has zero
  weighted mean, ``mean(phi+) = (mean(phi) + dt alpha c0)/(1 + dt alpha)``
  and ``mean(sigma+) = mean(sigma)`` hold exactly; the solver additionally
  projects each Newton iterate onto the target mean so the recursions hold
  to round-off no matter how the iteration is stopped.
* Barrier preservation.  For the exact logarithmic potential the implicit
  subproblem is strictly monotone with a singular barrier, so the interior
  solution exists; a backtracking line search keeps every Newton iterate
  inside ``|phi| <= 1 - barrier_margin`` and the singular derivative is
  only ever evaluated on accepted iterates.
* The nonlinear solve is a modified Newton iteration preconditioned in
  cosine-transform space: the pointwise convex coefficient ``A Psi0''`` is
  replaced by the midpoint of its range over the current iterate, which
  makes the linearized operator diagonal in transform space and gives a
  contraction factor bounded by
  ``A (Dmax-Dmin)/2 / (A (Dmax+Dmin)/2 + eps/dt + 2 sqrt(beta B)) < 1``.

The regularized scheme replaces ``Psi0'`` by its global C^1 extension (see
:mod:`chlab.potential`); iterates may then leave [-1, 1] transiently and no
barrier safeguard is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import BarrierBreach, KappaZero, NewtonDiverged, OutOfDomain
from .grid import Grid, ScalarField
from .potential import (
    PotentialParams,
    psi0_prime,
    psi0_prime_reg,
    psi_second,
)

SCHEMES = ("exact-log", "regularized")


@dataclass(frozen=True)
class ModelParams:
    """Constants of the model equations plus the potential parameters.

    ``A`` and ``B`` scale the bulk and interfacial energies, ``eps`` is the
    viscosity coefficient, ``chi`` the chemotaxis strength, ``alpha`` the
    mean-reversion rate, and ``c0`` the target mean of the phase variable.
    ``eps = 0`` and ``alpha = 0`` are admitted (the terms simply vanish) but
    barrier certificates require ``eps > 0``.
    """

    A: float
    B: float
    eps: float
    chi: float
    alpha: float
    c0: float
    potential: PotentialParams

    def __post_init__(self):
        if not (self.A > 0.0):
            raise ValueError(f"A must be > 0, got {self.A}")
        if not (self.B > 0.0):
            raise ValueError(f"B must be > 0, got {self.B}")
        if not (self.eps >= 0.0):
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if not (self.alpha >= 0.0):
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not (-1.0 < self.c0 < 1.0):
            raise ValueError(f"c0 must lie in (-1,1), got {self.c0}")


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls.

    ``barrier_margin`` is the strict-interior margin enforced on every
    accepted iterate of the exact-logarithmic scheme.  ``kappa_schedule``
    lists the regularization strengths for continuation experiments; the
    active kappa of a regularized run lives on
    :attr:`ModelParams.potential`.
    """

    dt: float
    scheme: str = "exact-log"
    newton_tol: float = 1e-10
    newton_max_iters: int = 50
    barrier_margin: float = 1e-12
    kappa_schedule: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.newton_tol > 0.0):
            raise ValueError(f"newton_tol must be > 0, got {self.newton_tol}")
        if self.newton_max_iters < 1:
            raise ValueError(f"newton_max_iters must be >= 1, got {self.newton_max_iters}")
        if not (0.0 < self.barrier_margin <= 1e-6):
            raise ValueError(
                f"barrier_margin must lie in (0, 1e-6], got {self.barrier_margin}"
            )
        object.__setattr__(self, "kappa_schedule", tuple(float(k) for k in self.kappa_schedule))
        for k in self.kappa_schedule:
            if not (0.0 < k < 1.0):
                raise ValueError(f"kappa_schedule entries must lie in (0,1), got {k}")


@dataclass
class State:
    """One snapshot of the coupled fields plus the previous phase field.

    ``prev_phi`` is the phase field of the previous accepted step and feeds
    every difference-quotient diagnostic; it is ``None`` for initial data.
    """

    grid: Grid
    phi: ScalarField
    sigma: ScalarField
    t: float
    prev_phi: Optional[ScalarField] = None
    step_index: int = 0


@dataclass(frozen=True)
class StepInfo:
    """Solver statistics of one accepted step."""

    newton_iters: int
    residual: float
    backtracks: int


class Stepper:
    """Reusable one-step solver bound to a (grid, model, solver config) triple.

    Construction precomputes the transform-space symbols; :meth:`step` is
    then safe to call repeatedly (it has no step-to-step hidden state, so a
    sequence of ``step`` calls is bitwise identical to :func:`run`).
    """

    def __init__(self, grid: Grid, mp: ModelParams, cfg: SolverConfig):
        self.grid = grid
        self.mp = mp
        self.cfg = cfg
        if cfg.scheme == "regularized" and mp.potential.kappa <= 0.0:
            raise KappaZero(
                "regularized scheme needs potential.kappa > 0 "
                "(set it on ModelParams.potential or via the kappa schedule)"
            )
        self.lam = grid.eigenvalues
        self.lam2 = self.lam * self.lam
        # H1-dual residual weights: mass/lam with the corner zeroed, plus the
        # corner-to-mean scale for the mean component.
        self._dual_mass = grid.mode_mass / grid._eigenvalues_safe
        self._dual_mass.flat[0] = 0.0
        self._corner_scale = grid._corner_coeff_scale
        self.beta = 1.0 / cfg.dt + mp.alpha
        self.eta = mp.eps / cfg.dt
        self._sigma_denom = 1.0 + cfg.dt * self.lam
        self.last_info = StepInfo(0, 0.0, 0)

    # -- potential dispatch -------------------------------------------------

    def _prime(self, x: ScalarField) -> ScalarField:
        if self.cfg.scheme == "exact-log":
            return psi0_prime(x, self.mp.potential)
        return psi0_prime_reg(x, self.mp.potential)

    def _second_range(self, x: ScalarField) -> tuple[float, float]:
        """Min and max of the convex part's second derivative over the iterate."""
        p = self.mp.potential
        amin = float(np.min(np.abs(x)))
        amax = float(np.max(np.abs(x)))
        if self.cfg.scheme == "regularized":
            knot = 1.0 - p.kappa
            amin = min(amin, knot)
            amax = min(amax, knot)
        return p.theta / (1.0 - amin * amin), p.theta / (1.0 - amax * amax)

    # -- residual -----------------------------------------------------------

    def _h1p_norm(self, coeffs: np.ndarray) -> float:
        mean = float(coeffs.flat[0]) / self._corner_scale
        dual_sq = float(np.sum(self._dual_mass * coeffs * coeffs))
        return math.sqrt(max(dual_sq, 0.0) + mean * mean)

    # -- one step -----------------------------------------------------------

    def step(self, state: State) -> State:
        g, mp, cfg = self.grid, self.mp, self.cfg
        g._check(state.phi, state.sigma)
        dt = cfg.dt
        exact = cfg.scheme == "exact-log"
        interior = 1.0 - cfg.barrier_margin
        phi_n = state.phi
        sigma_n = state.sigma
        if exact and float(np.max(np.abs(phi_n))) > interior:
            raise OutOfDomain(
                "exact-log step needs ||phi||_inf <= 1 - barrier_margin on entry; "
                f"got {np.max(np.abs(phi_n))}"
            )

        mean_phi_n = g.mean(phi_n)
        mean_sigma_n = g.mean(sigma_n)
        mean_target = (mean_phi_n + dt * mp.alpha * mp.c0) / (1.0 + dt * mp.alpha)

        phi_hat = g.dct(phi_n)
        sigma_hat = g.dct(sigma_n)
        r0_hat = phi_hat / dt
        r0_hat.flat[0] += mp.alpha * mp.c0 * self._corner_scale
        # Explicit part of mu, assembled in transform space from known fields:
        # c_expl = -(A theta0 + eta) phi_n - chi sigma_n.
        c_hat = -(mp.A * mp.potential.theta0 + self.eta) * phi_hat - mp.chi * sigma_hat

        x = self._initial_guess(state, mean_target, exact, interior)
        x_hat = g.dct(x)

        iters = 0
        backtracks = 0
        residual = math.inf
        converged = False
        for iters in range(cfg.newton_max_iters + 1):
            nonlin = mp.A * self._prime(x) + self.eta * x
            G_hat = (
                self.beta * x_hat
                - r0_hat
                + self.lam * (g.dct(nonlin) + c_hat)
                + mp.B * self.lam2 * x_hat
            )
            residual = self._h1p_norm(G_hat)
            if residual <= cfg.newton_tol:
                converged = True
                break
            if iters == cfg.newton_max_iters:
                break
            dmin, dmax = self._second_range(x)
            dbar = 0.5 * (dmin + dmax)
            symbol = self.beta + (mp.A * dbar + self.eta) * self.lam + mp.B * self.lam2
            delta_hat = -G_hat / symbol
            delta = g.idct(delta_hat)
            t = 1.0
            while True:
                cand = x + t * delta
                shift = mean_target - g.mean(cand)
                cand += shift
                if not exact or float(np.max(np.abs(cand))) <= interior:
                    break
                t *= 0.5
                backtracks += 1
                if t < 2.0**-60:
                    raise BarrierBreach(
                        f"line search exhausted at step {state.step_index + 1} "
                        f"(t={state.t + dt:g}); iterate pinned against the barrier"
                    )
            x = cand
            x_hat = x_hat + t * delta_hat
            x_hat.flat[0] += shift * self._corner_scale
        if not converged:
            raise NewtonDiverged(
                f"implicit solve stalled at step {state.step_index + 1}: residual "
                f"{residual:.3e} > tol {cfg.newton_tol:g} "
                f"after {cfg.newton_max_iters} iterations"
            )

        sigma_new_hat = (sigma_hat + dt * mp.chi * self.lam * x_hat) / self._sigma_denom
        sigma_new = g.idct(sigma_new_hat)
        sigma_new += mean_sigma_n - g.mean(sigma_new)

        self.last_info = StepInfo(iters, residual, backtracks)
        return State(
            grid=g,
            phi=x,
            sigma=sigma_new,
            t=state.t + dt,
            prev_phi=phi_n,
            step_index=state.step_index + 1,
        )

    def _initial_guess(
        self, state: State, mean_target: float, exact: bool, interior: float
    ) -> ScalarField:
        """Extrapolated predictor, projected to the target mean and, for the
        exact scheme, pulled inside the barrier if necessary."""
        if state.prev_phi is not None:
            x = 2.0 * state.phi - state.prev_phi
            if exact and float(np.max(np.abs(x))) > interior:
                x = state.phi.copy()
        else:
            x = state.phi.copy()
        x = x + (mean_target - self.grid.mean(x))
        if exact and float(np.max(np.abs(x))) > interior:
            # Shrink the fluctuation just enough; the mean stays put.
            fluct = x - mean_target
            supf = float(np.max(np.abs(fluct)))
            room = interior - abs(mean_target)
            x = mean_target + fluct * (0.999 * room / supf)
        return x

    def run(
        self,
        state: State,
        t_end: float,
        observer: Optional[Callable[[State, State, StepInfo], None]] = None,
    ) -> State:
        n_steps = max(0, math.ceil((t_end - state.t) / self.cfg.dt - 1e-9))
        for _ in range(n_steps):
            new = self.step(state)
            if observer is not None:
                observer(state, new, self.last_info)
            state = new
        return state


# ----------------------------------------------------------------------
# module-level drivers
# ----------------------------------------------------------------------


def step(state: State, mp: ModelParams, cfg: SolverConfig) -> State:
    """Advance one time step with the scheme selected by ``cfg.scheme``."""
    return Stepper(state.grid, mp, cfg).step(state)


def step_regularized(state: State, mp: ModelParams, cfg: SolverConfig) -> State:
    """Advance one time step with the regularized potential regardless of
    ``cfg.scheme``; ``mp.potential.kappa`` selects the regularization."""
    return Stepper(state.grid, mp, replace(cfg, scheme="regularized")).step(state)


def run(
    state0: State,
    mp: ModelParams,
    cfg: SolverConfig,
    t_end: float,
    observer: Optional[Callable[[State, State, StepInfo], None]] = None,
) -> State:
    """March from ``state0`` until ``t >= t_end``; the observer sees every
    accepted step as ``observer(previous_state, new_state, info)``."""
    if t_end < state0.t:
        raise ValueError(f"t_end={t_end} lies before the state time {state0.t}")
    return Stepper(state0.grid, mp, cfg).run(state0, t_end, observer)


def scheme_mu(prev: State, curr: State, mp: ModelParams, cfg: SolverConfig) -> ScalarField:
    """Reconstruct the chemical potential the step actually used.

    ``mu+ = A Psi0'(phi+) - A theta0 phi - B Lap phi+ - chi sigma
    + eps (phi+ - phi)/dt`` with the convex derivative matching the scheme
    (exact or regularized).
    """
    g = curr.grid
    p = mp.potential
    if cfg.scheme == "exact-log":
        prime = psi0_prime(curr.phi, p)
    else:
        prime = psi0_prime_reg(curr.phi, p)
    phi_t = (curr.phi - prev.phi) / cfg.dt
    return (
        mp.A * prime
        - mp.A * p.theta0 * prev.phi
        - mp.B * g.laplacian_neumann(curr.phi)
        - mp.chi * prev.sigma
        + mp.eps * phi_t
    )


# ----------------------------------------------------------------------
# linear theory
# ----------------------------------------------------------------------


def dispersion_system(mp: ModelParams, q: float) -> np.ndarray:
    """The 2x2 matrix governing a single spatial mode of the linearization.

    About the homogeneous state ``(phi, sigma) = (c0, sigma_bar)`` a mode
    with ``-Lap`` eigenvalue ``q`` evolves by ``d/dt (u, v) = M^-1 K (u, v)``
    with ``M = diag(1 + eps q, 1)`` and symmetric
    ``K = [[-q (A Psi''(c0) + B q) - alpha, q chi], [chi q, -q]]``.
    """
    if q < 0.0:
        raise ValueError(f"wavenumber q must be >= 0, got {q}")
    psi2 = float(psi_second(mp.c0, mp.potential))
    visc = 1.0 + mp.eps * q
    return np.array(
        [
            [(-q * (mp.A * psi2 + mp.B * q) - mp.alpha) / visc, q * mp.chi / visc],
            [mp.chi * q, -q],
        ]
    )


def dispersion_rates(mp: ModelParams, q: float) -> tuple[complex, complex]:
    """Growth/decay rates of one linearized mode, largest real part first.

    The underlying pencil is symmetric-definite, so the rates are real; they
    are returned as complex numbers for interface stability.
    """
    ev = np.linalg.eigvals(dispersion_system(mp, q))
    ev = sorted((complex(e) for e in ev), key=lambda z: z.real, reverse=True)
    return ev[0], ev[1]


def _mode_field(grid: Grid, mode_k: tuple[int, ...]) -> ScalarField:
    out = np.ones(grid.shape)
    for k, x, L in zip(mode_k, grid.coords(), grid.length_per_axis):
        if k:
            out = out * np.cos(np.pi * k * x / L)
    return out


def _mode_eigenvalue(grid: Grid, mode_k: tuple[int, ...]) -> float:
    q = 0.0
    for a, k in enumerate(mode_k):
        n = grid.n_per_axis[a]
        h = grid.h_per_axis[a]
        q += (2.0 - 2.0 * math.cos(math.pi * k / (n - 1))) / h**2
    return q


def _mode_amplitude(grid: Grid, f: ScalarField, mode_k: tuple[int, ...]) -> float:
    coeffs = grid.dct(f)
    scale = 1.0
    for a, k in enumerate(mode_k):
        n = grid.n_per_axis[a]
        scale *= (n - 1.0) if 0 < k < n - 1 else 2.0 * (n - 1.0)
    return float(coeffs[tuple(mode_k)]) / scale


def measured_dispersion_rate(
    grid: Grid,
    mp: ModelParams,
    cfg: SolverConfig,
    mode_k: tuple[int, ...],
    branch: int = 0,
    amplitude: float = 1e-6,
    n_steps: int = 200,
    sigma_mean: float = 0.0,
) -> tuple[float, float]:
    """Measure one linear rate from the nonlinear solver.

    Initializes the requested cosine mode along an eigenvector of the
    analytic 2x2 mode system evaluated at the mode's *discrete* eigenvalue
    (so spatial discretization drops out of the comparison), runs
    ``n_steps``, and returns ``(measured, predicted)`` where ``measured`` is
    the log-amplitude slope of the eigenvector's dominant component and
    ``predicted`` the analytic rate of that branch.
    """
    q = _mode_eigenvalue(grid, mode_k)
    sys = dispersion_system(mp, q)
    ev, vecs = np.linalg.eig(sys)
    order = np.argsort(-ev.real)
    lam = float(ev[order[branch]].real)
    vec = vecs[:, order[branch]].real
    vec = vec / np.max(np.abs(vec))
    mode = _mode_field(grid, mode_k)
    state = State(
        grid=grid,
        phi=mp.c0 + amplitude * vec[0] * mode,
        sigma=sigma_mean + amplitude * vec[1] * mode,
        t=0.0,
    )
    comp = 0 if abs(vec[0]) >= abs(vec[1]) else 1
    a0 = _mode_amplitude(grid, (state.phi, state.sigma)[comp], mode_k)
    stepper = Stepper(grid, mp, cfg)
    for _ in range(n_steps):
        state = stepper.step(state)
    a1 = _mode_amplitude(grid, (state.phi, state.sigma)[comp], mode_k)
    measured = math.log(abs(a1 / a0)) / (n_steps * cfg.dt)
    return measured, lam
