"""Experiment configuration: a sectioned INI file, fully validated at load.

Sections and keys (all optional; defaults shown by ``chlab``'s README):

* ``[grid]`` ndim, n, lengths — node counts and box lengths per axis.
* ``[model]`` A, B, eps, chi, alpha, c0, theta, theta0, a0.
* ``[time]`` dt, t_end, scheme, kappa_schedule.
* ``[init]`` phi_mean, phi_amp, sigma_mean, sigma_amp, seed, profile,
  smooth_modes, file.
* ``[output]`` directory, csv_every, snapshot_every.
* ``[compare]`` perturb_amp, perturb_seed — continuous-dependence driver.
* ``[dispersion]`` modes, branches, steps, amplitude — rate measurement.

Validation collects *all* violations before failing, each message naming
the violated hypothesis ("H1:" for potential constraints, "H2:" for model
coefficients).  ``eps = 0`` and ``alpha = 0`` are legal but produce
warnings since they disable barrier certificates and mean reversion.

Random initial data is generated by a counter-based 64-bit mixing function
(splitmix-style) applied to the canonical node index (x fastest), so the
field depends only on the seed and the grid — not on memory layout or
chunking.  The white noise is then low-pass filtered (per-axis cosine
modes up to ``smooth_modes``), exactly de-meaned in transform space, and
rescaled to unit sup norm, giving smooth data with exact mean and
amplitude.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import ModelParams, SolverConfig, State, SCHEMES
from .errors import GridMismatch, OutOfDomain, ParseError, ValidationError
from .grid import Grid, ScalarField
from .potential import PotentialParams

_INTERIOR_HEADROOM = 1e-6

_KNOWN_KEYS = {
    "grid": ("ndim", "n", "lengths"),
    "model": ("a", "b", "eps", "chi", "alpha", "c0", "theta", "theta0", "a0"),
    "time": ("dt", "t_end", "scheme", "kappa_schedule"),
    "init": (
        "phi_mean",
        "phi_amp",
        "sigma_mean",
        "sigma_amp",
        "seed",
        "profile",
        "smooth_modes",
        "file",
    ),
    "output": ("directory", "csv_every", "snapshot_every"),
    "compare": ("perturb_amp", "perturb_seed"),
    "dispersion": ("modes", "branches", "steps", "amplitude"),
}


@dataclass(frozen=True)
class InitSpec:
    profile: str
    mode: Optional[tuple[int, ...]]
    file: Optional[str]
    phi_mean: float
    phi_amp: float
    sigma_mean: float
    sigma_amp: float
    seed: int
    smooth_modes: int


@dataclass(frozen=True)
class OutputSpec:
    directory: str
    csv_every: int
    snapshot_every: int


@dataclass(frozen=True)
class CompareSpec:
    perturb_amp: float
    perturb_seed: int


@dataclass(frozen=True)
class DispersionSpec:
    modes: tuple[int, ...]
    branches: tuple[int, ...]
    steps: int
    amplitude: float


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved, validated experiment description."""

    grid: Grid
    model: ModelParams
    solver: SolverConfig
    t_end: float
    init: InitSpec
    output: OutputSpec
    compare: CompareSpec
    dispersion: DispersionSpec
    warnings: tuple[str, ...]
    resolved: tuple[tuple[str, str], ...]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


class _Reader:
    """Typed key access over configparser with violation collection."""

    def __init__(self):
        self.parser = configparser.ConfigParser(
            inline_comment_prefixes=("#", ";"), interpolation=None
        )
        self.violations: list[str] = []

    def fail(self, msg: str) -> None:
        self.violations.append(msg)

    def get(self, section: str, key: str, default: str) -> str:
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def get_float(self, section: str, key: str, default: float) -> float:
        raw = self.get(section, key, None)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self.fail(f"{section}.{key}: expected a real number, got {raw!r}")
            return default

    def get_int(self, section: str, key: str, default: int) -> int:
        raw = self.get(section, key, None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self.fail(f"{section}.{key}: expected an integer, got {raw!r}")
            return default

    def get_list(self, section: str, key: str, default: str, conv, what: str):
        raw = self.get(section, key, default)
        if not raw:
            return ()
        out = []
        for item in raw.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                out.append(conv(item))
            except ValueError:
                self.fail(f"{section}.{key}: expected {what}, got {item!r}")
        return tuple(out)


def _parse_profile(raw: str, ndim: int, reader: _Reader) -> tuple[str, Optional[tuple[int, ...]]]:
    if raw == "random" or raw == "file":
        return raw, None
    if raw.startswith("single_mode(") and raw.endswith(")"):
        inner = raw[len("single_mode(") : -1]
        try:
            mode = tuple(int(part.strip()) for part in inner.split(","))
        except ValueError:
            reader.fail(f"init.profile: could not parse mode indices in {raw!r}")
            return "single_mode", None
        if len(mode) != ndim:
            reader.fail(
                f"init.profile: single_mode needs {ndim} indices for a "
                f"{ndim}-axis grid, got {len(mode)}"
            )
        if any(k < 0 for k in mode):
            reader.fail("init.profile: mode indices must be >= 0")
        return "single_mode", mode
    reader.fail(
        "init.profile: must be 'random', 'single_mode(k[,k2[,k3]])', or 'file', "
        f"got {raw!r}"
    )
    return "random", None


def load_config(
    path, seed: Optional[int] = None, directory: Optional[str] = None
) -> RunConfig:
    """Parse and validate an experiment file.

    ``seed`` and ``directory`` override ``init.seed`` and
    ``output.directory`` (command-line precedence).  Raises
    :class:`ParseError` on malformed syntax and :class:`ValidationError`
    carrying *every* violated constraint, each message prefixed with the
    hypothesis or section it violates.
    """
    path = Path(path)
    reader = _Reader()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader.parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ParseError(f"malformed config: {exc}") from exc

    for section in reader.parser.sections():
        if section not in _KNOWN_KEYS:
            reader.fail(f"unknown section [{section}]")
            continue
        for key in reader.parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                reader.fail(f"unknown key {section}.{key}")

    # -- grid ---------------------------------------------------------------
    ndim = reader.get_int("grid", "ndim", 1)
    if ndim not in (1, 2, 3):
        reader.fail(f"grid.ndim: must be 1, 2, or 3, got {ndim}")
        ndim = 1
    n_axes = reader.get_list("grid", "n", "129", int, "an integer")
    lengths = reader.get_list("grid", "lengths", "1.0", float, "a real number")
    if len(n_axes) == 1 and ndim > 1:
        n_axes = n_axes * ndim
    if len(lengths) == 1 and ndim > 1:
        lengths = lengths * ndim
    if len(n_axes) != ndim:
        reader.fail(f"grid.n: expected {ndim} node counts, got {len(n_axes)}")
    if len(lengths) != ndim:
        reader.fail(f"grid.lengths: expected {ndim} lengths, got {len(lengths)}")
    for n in n_axes:
        if n < 3:
            reader.fail(f"grid.n: needs >= 3 nodes per axis, got {n}")
    for L in lengths:
        if not (L > 0.0 and math.isfinite(L)):
            reader.fail(f"grid.lengths: must be positive and finite, got {L}")

    # -- model --------------------------------------------------------------
    A = reader.get_float("model", "a", 1.0)
    B = reader.get_float("model", "b", 0.01)
    eps = reader.get_float("model", "eps", 0.1)
    chi = reader.get_float("model", "chi", 0.0)
    alpha = reader.get_float("model", "alpha", 0.0)
    c0 = reader.get_float("model", "c0", 0.0)
    theta = reader.get_float("model", "theta", 1.0)
    theta0 = reader.get_float("model", "theta0", 2.0)
    a0 = reader.get_float("model", "a0", 0.99)
    if not (A > 0.0):
        reader.fail(f"H2: A must be > 0, got {A}")
    if not (B > 0.0):
        reader.fail(f"H2: B must be > 0, got {B}")
    if not (eps >= 0.0):
        reader.fail(f"H2: eps must be >= 0, got {eps}")
    if not (alpha >= 0.0):
        reader.fail(f"H2: alpha must be >= 0, got {alpha}")
    if not (-1.0 < c0 < 1.0):
        reader.fail(f"H2: c0 must lie in (-1,1), got {c0}")
    if not (theta > 0.0):
        reader.fail(f"H1: theta must be > 0, got {theta}")
    if not (theta0 > theta):
        reader.fail(f"H1: theta0 - theta must be > 0, got theta0={theta0}, theta={theta}")
    if not (0.0 < a0 < 1.0):
        reader.fail(f"H1: a0 must lie in (0,1), got {a0}")

    # -- time ---------------------------------------------------------------
    dt = reader.get_float("time", "dt", 1e-3)
    t_end = reader.get_float("time", "t_end", 1.0)
    scheme = reader.get("time", "scheme", "exact-log")
    kappa_schedule = reader.get_list(
        "time", "kappa_schedule", "", float, "a real number"
    )
    if not (dt > 0.0 and math.isfinite(dt)):
        reader.fail(f"time.dt: must be positive and finite, got {dt}")
    if not (t_end >= 0.0 and math.isfinite(t_end)):
        reader.fail(f"time.t_end: must be >= 0 and finite, got {t_end}")
    if scheme not in SCHEMES:
        reader.fail(f"time.scheme: must be one of {', '.join(SCHEMES)}, got {scheme!r}")
        scheme = "exact-log"
    for k in kappa_schedule:
        if not (0.0 < k < a0):
            reader.fail(f"H1: kappa_schedule entries must lie in (0, a0), got {k}")
    if scheme == "regularized" and not kappa_schedule:
        reader.fail("time.scheme: regularized scheme requires a non-empty kappa_schedule")

    # -- init ---------------------------------------------------------------
    phi_mean = reader.get_float("init", "phi_mean", 0.0)
    phi_amp = reader.get_float("init", "phi_amp", 0.1)
    sigma_mean = reader.get_float("init", "sigma_mean", 0.0)
    sigma_amp = reader.get_float("init", "sigma_amp", 0.0)
    cfg_seed = reader.get_int("init", "seed", 0)
    smooth_modes = reader.get_int("init", "smooth_modes", 8)
    profile_raw = reader.get("init", "profile", "random")
    init_file = reader.get("init", "file", "")
    profile, mode = _parse_profile(profile_raw, ndim, reader)
    if seed is not None:
        cfg_seed = seed
    if cfg_seed < 0:
        reader.fail(f"init.seed: must be >= 0, got {cfg_seed}")
    if phi_amp < 0.0:
        reader.fail(f"init.phi_amp: must be >= 0, got {phi_amp}")
    if sigma_amp < 0.0:
        reader.fail(f"init.sigma_amp: must be >= 0, got {sigma_amp}")
    if smooth_modes < 1:
        reader.fail(f"init.smooth_modes: must be >= 1, got {smooth_modes}")
    if profile == "file" and not init_file:
        reader.fail("init.file: required when profile = file")
    if (
        scheme == "exact-log"
        and profile != "file"
        and not (abs(phi_mean) + phi_amp <= 1.0 - _INTERIOR_HEADROOM)
    ):
        reader.fail(
            "init: |phi_mean| + phi_amp must be <= 1 - 1e-6 for the exact-log "
            f"scheme, got {abs(phi_mean) + phi_amp}"
        )

    # -- output -------------------------------------------------------------
    out_dir = reader.get("output", "directory", "out")
    csv_every = reader.get_int("output", "csv_every", 1)
    snapshot_every = reader.get_int("output", "snapshot_every", 0)
    if directory is not None:
        out_dir = directory
    if csv_every < 1:
        reader.fail(f"output.csv_every: must be >= 1, got {csv_every}")
    if snapshot_every < 0:
        reader.fail(f"output.snapshot_every: must be >= 0, got {snapshot_every}")

    # -- compare / dispersion -------------------------------------------------
    perturb_amp = reader.get_float("compare", "perturb_amp", 1e-3)
    perturb_seed = reader.get_int("compare", "perturb_seed", -1)
    if perturb_seed < 0:
        perturb_seed = cfg_seed + 1
    if perturb_amp < 0.0:
        reader.fail(f"compare.perturb_amp: must be >= 0, got {perturb_amp}")
    disp_modes = reader.get_list("dispersion", "modes", "1,2,3,4", int, "an integer")
    disp_branches = reader.get_list("dispersion", "branches", "0,1", int, "an integer")
    disp_steps = reader.get_int("dispersion", "steps", 0)
    disp_amp = reader.get_float("dispersion", "amplitude", 1e-6)
    for k in disp_modes:
        if k < 1:
            reader.fail(f"dispersion.modes: must be >= 1, got {k}")
    for b in disp_branches:
        if b not in (0, 1):
            reader.fail(f"dispersion.branches: must be 0 or 1, got {b}")
    if disp_steps < 0:
        reader.fail(f"dispersion.steps: must be >= 0, got {disp_steps}")
    if not (disp_amp > 0.0):
        reader.fail(f"dispersion.amplitude: must be > 0, got {disp_amp}")

    if reader.violations:
        raise ValidationError(reader.violations)

    warnings = []
    if eps == 0.0:
        warnings.append("eps = 0: barrier certificates and htilde diagnostics unavailable")
    if alpha == 0.0:
        warnings.append("alpha = 0: phase mean is conserved; c0 has no dynamical effect")

    kappa = kappa_schedule[0] if scheme == "regularized" else 0.0
    potential = PotentialParams(theta=theta, theta0=theta0, a0=a0, kappa=kappa)
    model = ModelParams(A=A, B=B, eps=eps, chi=chi, alpha=alpha, c0=c0, potential=potential)
    solver = SolverConfig(dt=dt, scheme=scheme, kappa_schedule=kappa_schedule)
    grid = Grid(n_axes, lengths)
    init = InitSpec(
        profile=profile,
        mode=mode,
        file=init_file or None,
        phi_mean=phi_mean,
        phi_amp=phi_amp,
        sigma_mean=sigma_mean,
        sigma_amp=sigma_amp,
        seed=cfg_seed,
        smooth_modes=smooth_modes,
    )
    output = OutputSpec(directory=out_dir, csv_every=csv_every, snapshot_every=snapshot_every)
    compare = CompareSpec(perturb_amp=perturb_amp, perturb_seed=perturb_seed)
    dispersion = DispersionSpec(
        modes=disp_modes, branches=disp_branches, steps=disp_steps, amplitude=disp_amp
    )

    resolved = (
        ("grid.ndim", _fmt(ndim)),
        ("grid.n", _fmt(n_axes)),
        ("grid.lengths", _fmt(lengths)),
        ("model.A", _fmt(A)),
        ("model.B", _fmt(B)),
        ("model.eps", _fmt(eps)),
        ("model.chi", _fmt(chi)),
        ("model.alpha", _fmt(alpha)),
        ("model.c0", _fmt(c0)),
        ("model.theta", _fmt(theta)),
        ("model.theta0", _fmt(theta0)),
        ("model.a0", _fmt(a0)),
        ("time.dt", _fmt(dt)),
        ("time.t_end", _fmt(t_end)),
        ("time.scheme", scheme),
        ("time.kappa_schedule", _fmt(kappa_schedule)),
        ("init.phi_mean", _fmt(phi_mean)),
        ("init.phi_amp", _fmt(phi_amp)),
        ("init.sigma_mean", _fmt(sigma_mean)),
        ("init.sigma_amp", _fmt(sigma_amp)),
        ("init.seed", _fmt(cfg_seed)),
        ("init.profile", profile_raw),
        ("init.smooth_modes", _fmt(smooth_modes)),
        ("init.file", init_file),
        ("output.directory", out_dir),
        ("output.csv_every", _fmt(csv_every)),
        ("output.snapshot_every", _fmt(snapshot_every)),
        ("compare.perturb_amp", _fmt(perturb_amp)),
        ("compare.perturb_seed", _fmt(perturb_seed)),
        ("dispersion.modes", _fmt(disp_modes)),
        ("dispersion.branches", _fmt(disp_branches)),
        ("dispersion.steps", _fmt(disp_steps)),
        ("dispersion.amplitude", _fmt(disp_amp)),
    )
    return RunConfig(
        grid=grid,
        model=model,
        solver=solver,
        t_end=t_end,
        init=init,
        output=output,
        compare=compare,
        dispersion=dispersion,
        warnings=tuple(warnings),
        resolved=resolved,
    )


# ----------------------------------------------------------------------
# seeded initial data
# ----------------------------------------------------------------------

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64_uniform(seed: int, index: np.ndarray) -> np.ndarray:
    """Counter-based uniform variates in [0, 1): mix ``seed + index * gamma``
    through the splitmix64 finalizer.  Pure integer arithmetic on the node
    index, hence independent of array layout and reproducible bit-for-bit.
    """
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + index.astype(np.uint64) * _SM_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _SM_M1
        z = (z ^ (z >> np.uint64(27))) * _SM_M2
        z = z ^ (z >> np.uint64(31))
    return z.astype(np.float64) / 2.0**64


def _smooth_noise(grid: Grid, seed: int, smooth_modes: int, stream: int) -> ScalarField:
    """Zero-mean, unit-sup smooth noise on the grid.

    White node noise is low-pass filtered to per-axis cosine modes
    ``<= smooth_modes`` (the mean mode is removed exactly in transform
    space) and rescaled so its sup norm is exactly 1.
    """
    count = grid.node_count
    index = np.arange(count, dtype=np.uint64) + np.uint64(stream) * np.uint64(count)
    raw = 2.0 * splitmix64_uniform(seed, index) - 1.0
    field = raw.reshape(grid.shape, order="F")
    coeffs = grid.dct(field)
    for axis, n in enumerate(grid.n_per_axis):
        if smooth_modes < n - 1:
            sl = [slice(None)] * grid.ndim
            sl[axis] = slice(smooth_modes + 1, None)
            coeffs[tuple(sl)] = 0.0
    coeffs.flat[0] = 0.0
    field = grid.idct(coeffs)
    sup = float(np.max(np.abs(field)))
    if sup == 0.0:
        return field
    return field / sup


def _mode_profile(grid: Grid, mode: tuple[int, ...]) -> ScalarField:
    out = np.ones(grid.shape)
    for k, x, L in zip(mode, grid.coords(), grid.length_per_axis):
        if k:
            out = out * np.cos(np.pi * k * x / L)
    return out


def initial_state(cfg: RunConfig) -> State:
    """Construct the initial fields the configuration describes.

    ``profile = file`` reloads a snapshot (the grid must match; the
    snapshot time is preserved so a rerun continues where the file left
    off).  Exact-log runs require interior data: snapshot fields with sup
    norm in (1 - 1e-6, 1] are contracted about their mean to restore the
    working margin, and anything beyond 1 is rejected.
    """
    g = cfg.grid
    init = cfg.init
    if init.profile == "file":
        from .io import read_snapshot

        file_grid, phi, sigma, t = read_snapshot(init.file)
        if file_grid != g:
            raise GridMismatch(
                f"snapshot grid {file_grid.n_per_axis}/{file_grid.length_per_axis} "
                f"does not match config grid {g.n_per_axis}/{g.length_per_axis}"
            )
        if cfg.solver.scheme == "exact-log":
            sup = float(np.max(np.abs(phi)))
            if sup > 1.0:
                raise OutOfDomain(
                    f"snapshot phase field has sup norm {sup} > 1; "
                    "not admissible for the exact-log scheme"
                )
            if sup > 1.0 - _INTERIOR_HEADROOM:
                mean = g.mean(phi)
                room = (1.0 - _INTERIOR_HEADROOM) - abs(mean)
                supf = float(np.max(np.abs(phi - mean)))
                phi = mean + (phi - mean) * (room / supf)
        return State(grid=g, phi=phi, sigma=sigma, t=t)

    if init.profile == "single_mode":
        shape_phi = _mode_profile(g, init.mode)
        shape_sig = shape_phi
    else:
        shape_phi = _smooth_noise(g, init.seed, init.smooth_modes, stream=0)
        shape_sig = _smooth_noise(g, init.seed, init.smooth_modes, stream=1)
    phi = init.phi_mean + init.phi_amp * shape_phi
    sigma = init.sigma_mean + init.sigma_amp * shape_sig
    return State(grid=g, phi=phi, sigma=sigma, t=0.0)
