"""chlab: a numerical laboratory for viscous phase separation with chemotaxis.

The package integrates a conserved phase field coupled to a nutrient
through chemotaxis, with a singular logarithmic potential, a viscous
chemical potential, and nonlocal mean reversion.  The public surface:

* :mod:`chlab.grid` — Neumann boxes in 1–3 dimensions, cosine-transform
  operators, discrete norms and dual norms.
* :mod:`chlab.potential` — the logarithmic potential, its tangent-line
  regularization, and barrier-respecting scalar solves.
* :mod:`chlab.dynamics` — the semi-implicit barrier-preserving stepper and
  the linearized mode rates.
* :mod:`chlab.diagnostics` — energies, dissipation, balance residuals,
  separation envelopes.
* :mod:`chlab.steady` — stationary residuals and relaxation drivers.
* :mod:`chlab.config` / :mod:`chlab.io` / :mod:`chlab.cli` — experiment
  plumbing: validated INI configs, deterministic CSV/snapshot/JSON
  artifacts, and the ``chlab`` command.
"""

from .errors import (
    BarrierBreach,
    CheckFailed,
    ChlabError,
    CorruptSnapshot,
    EpsZero,
    GridMismatch,
    KappaZero,
    NewtonDiverged,
    NoConvergence,
    NonZeroMean,
    OutOfDomain,
    ParseError,
    ValidationError,
)
from .grid import Grid, ScalarField
from .potential import (
    PotentialParams,
    newton_scalar_solve,
    psi,
    psi0,
    psi0_prime,
    psi0_prime_reg,
    psi0_reg,
    psi0_second,
    psi0_second_reg,
    psi_prime,
    psi_prime_reg,
    psi_reg,
    psi_second,
)
from .dynamics import (
    ModelParams,
    SolverConfig,
    State,
    StepInfo,
    Stepper,
    dispersion_rates,
    dispersion_system,
    measured_dispersion_rate,
    run,
    scheme_mu,
    step,
    step_regularized,
)
from .diagnostics import (
    BarrierTrace,
    DiagnosticsRecord,
    TrajectoryTrace,
    barrier_check,
    dissipation_D,
    dual_distance,
    energy_E,
    energy_balance_residual,
    initial_phi_t,
    lyapunov_F,
    record_for,
    tilde_h,
    tilde_mu,
    trace_from_records,
)
from .steady import (
    OmegaLimitReport,
    SteadyReport,
    omega_limit_probe,
    relax_to_steady,
    sigma_from_phi,
    stationary_residual,
)
from .config import RunConfig, initial_state, load_config, splitmix64_uniform
from .io import (
    CSV_COLUMNS,
    CSVWriter,
    read_csv,
    read_snapshot,
    write_snapshot,
    write_summary,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierBreach",
    "BarrierTrace",
    "CSV_COLUMNS",
    "CSVWriter",
    "CheckFailed",
    "ChlabError",
    "CorruptSnapshot",
    "DiagnosticsRecord",
    "EpsZero",
    "Grid",
    "GridMismatch",
    "KappaZero",
    "ModelParams",
    "NewtonDiverged",
    "NoConvergence",
    "NonZeroMean",
    "OmegaLimitReport",
    "OutOfDomain",
    "ParseError",
    "PotentialParams",
    "RunConfig",
    "ScalarField",
    "SolverConfig",
    "State",
    "StepInfo",
    "Stepper",
    "SteadyReport",
    "TrajectoryTrace",
    "ValidationError",
    "barrier_check",
    "dispersion_rates",
    "dispersion_system",
    "dissipation_D",
    "dual_distance",
    "energy_E",
    "energy_balance_residual",
    "initial_phi_t",
    "initial_state",
    "load_config",
    "lyapunov_F",
    "measured_dispersion_rate",
    "newton_scalar_solve",
    "omega_limit_probe",
    "psi",
    "psi0",
    "psi0_prime",
    "psi0_prime_reg",
    "psi0_reg",
    "psi0_second",
    "psi0_second_reg",
    "psi_prime",
    "psi_prime_reg",
    "psi_reg",
    "psi_second",
    "read_csv",
    "read_snapshot",
    "record_for",
    "relax_to_steady",
    "run",
    "scheme_mu",
    "sigma_from_phi",
    "splitmix64_uniform",
    "stationary_residual",
    "step",
    "step_regularized",
    "tilde_h",
    "tilde_mu",
    "trace_from_records",
    "write_snapshot",
    "write_summary",
]
