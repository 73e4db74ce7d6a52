"""Experiment-file parsing, validation, and seeded initial data."""

from __future__ import annotations

import numpy as np
import pytest

from chlab.config import (
    _smooth_noise,
    initial_state,
    load_config,
    splitmix64_uniform,
)
from chlab.dynamics import State
from chlab.errors import GridMismatch, OutOfDomain, ParseError, ValidationError
from chlab.grid import Grid
from chlab.io import write_snapshot


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ----------------------------------------------------------------------
# parsing and validation
# ----------------------------------------------------------------------


def test_empty_config_resolves_documented_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, ""))
    assert cfg.grid == Grid((129,), (1.0,))
    m = cfg.model
    assert (m.A, m.B, m.eps, m.chi, m.alpha, m.c0) == (1.0, 0.01, 0.1, 0.0, 0.0, 0.0)
    assert (m.potential.theta, m.potential.theta0, m.potential.a0) == (1.0, 2.0, 0.99)
    assert m.potential.kappa == 0.0
    assert cfg.solver.dt == 1e-3 and cfg.solver.scheme == "exact-log"
    assert cfg.solver.kappa_schedule == ()
    assert cfg.t_end == 1.0
    init = cfg.init
    assert init.profile == "random" and init.mode is None and init.file is None
    assert (init.phi_mean, init.phi_amp, init.sigma_mean, init.sigma_amp) == (
        0.0,
        0.1,
        0.0,
        0.0,
    )
    assert init.seed == 0 and init.smooth_modes == 8
    out = cfg.output
    assert (out.directory, out.csv_every, out.snapshot_every) == ("out", 1, 0)
    assert cfg.compare.perturb_amp == 1e-3 and cfg.compare.perturb_seed == 1
    d = cfg.dispersion
    assert d.modes == (1, 2, 3, 4) and d.branches == (0, 1)
    assert d.steps == 0 and d.amplitude == 1e-6
    assert any("alpha = 0" in w for w in cfg.warnings)
    assert not any("eps = 0" in w for w in cfg.warnings)
    echo = dict(cfg.resolved)
    assert echo["model.A"] == "1.0"
    assert echo["grid.n"] == "129"
    assert echo["init.profile"] == "random"


def test_explicit_values_parse(tmp_path):
    text = """
[grid]
ndim = 2
n = 17, 33
lengths = 1.5, 2.5

[model]
A = 2.0
B = 0.5
eps = 0
chi = 0.3
alpha = 0.25
c0 = -0.1
theta = 0.8
theta0 = 1.9
a0 = 0.95

[time]
dt = 0.01
t_end = 3.0
scheme = regularized
kappa_schedule = 0.2, 0.1

[init]
profile = single_mode(1, 2)
phi_mean = 0.05
phi_amp = 0.4
sigma_mean = 1.0
sigma_amp = 0.2
seed = 9

[output]
directory = results
csv_every = 5
snapshot_every = 100

[compare]
perturb_amp = 1e-5

[dispersion]
modes = 2, 5
branches = 1
steps = 50
amplitude = 1e-7
"""
    cfg = load_config(_write(tmp_path, text))
    assert cfg.grid == Grid((17, 33), (1.5, 2.5))
    assert cfg.model.A == 2.0 and cfg.model.eps == 0.0 and cfg.model.c0 == -0.1
    assert cfg.solver.scheme == "regularized"
    assert cfg.solver.kappa_schedule == (0.2, 0.1)
    assert cfg.model.potential.kappa == 0.2  # head of the schedule
    assert cfg.init.mode == (1, 2)
    assert cfg.compare.perturb_amp == 1e-5
    assert cfg.compare.perturb_seed == 10  # seed + 1 default
    assert cfg.dispersion.modes == (2, 5) and cfg.dispersion.branches == (1,)
    assert any("eps = 0" in w for w in cfg.warnings)


def test_single_n_broadcasts_across_axes(tmp_path):
    cfg = load_config(_write(tmp_path, "[grid]\nndim = 3\nn = 9\nlengths = 2.0\n"))
    assert cfg.grid == Grid((9, 9, 9), (2.0, 2.0, 2.0))


def test_all_violations_reported_at_once(tmp_path):
    text = """
[grid]
ndim = 5
n = 2

[model]
A = -1
B = 0
eps = -0.5
alpha = -2
c0 = 1.5
theta = 0
theta0 = 0
a0 = 1.5

[time]
dt = -1
scheme = magic

[bogus]
key = 1
"""
    with pytest.raises(ValidationError) as exc:
        load_config(_write(tmp_path, text))
    msgs = exc.value.violations
    assert len(msgs) >= 10
    joined = "\n".join(msgs)
    for frag in (
        "grid.ndim",
        "H2: A must be > 0",
        "H2: B must be > 0",
        "H2: eps must be >= 0",
        "H2: alpha must be >= 0",
        "H2: c0 must lie in (-1,1)",
        "H1: theta must be > 0",
        "H1: a0 must lie in (0,1)",
        "time.dt",
        "time.scheme",
        "unknown section [bogus]",
    ):
        assert frag in joined, frag


def test_unknown_key_is_a_violation(tmp_path):
    with pytest.raises(ValidationError) as exc:
        load_config(_write(tmp_path, "[model]\nchi = 0.1\nmobility = 2\n"))
    assert any("unknown key model.mobility" in m for m in exc.value.violations)


def test_profile_parse_errors(tmp_path):
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, "[init]\nprofile = single_mode(1, 2)\n"))  # 1D grid
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, "[init]\nprofile = single_mode(-1)\n"))
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, "[init]\nprofile = single_mode(x)\n"))
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, "[init]\nprofile = lattice\n"))
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, "[init]\nprofile = file\n"))  # no file key


def test_interior_margin_enforced_for_exact_log(tmp_path):
    with pytest.raises(ValidationError) as exc:
        load_config(_write(tmp_path, "[init]\nphi_mean = 0.95\nphi_amp = 0.1\n"))
    assert any("1e-6" in m for m in exc.value.violations)
    # the regularized scheme has no barrier, so the same data is legal there
    cfg = load_config(
        _write(
            tmp_path,
            "[time]\nscheme = regularized\nkappa_schedule = 0.1\n"
            "[init]\nphi_mean = 0.95\nphi_amp = 0.1\n",
            name="reg.ini",
        )
    )
    assert cfg.init.phi_amp == 0.1


def test_regularized_requires_schedule(tmp_path):
    with pytest.raises(ValidationError) as exc:
        load_config(_write(tmp_path, "[time]\nscheme = regularized\n"))
    assert any("kappa_schedule" in m for m in exc.value.violations)
    with pytest.raises(ValidationError):
        load_config(
            _write(
                tmp_path,
                "[time]\nscheme = regularized\nkappa_schedule = 0.995\n",
                name="bad.ini",
            )
        )  # kappa must stay below a0


def test_cli_overrides_beat_file_values(tmp_path):
    p = _write(tmp_path, "[init]\nseed = 3\n[output]\ndirectory = filedir\n")
    cfg = load_config(p, seed=77, directory="cli-dir")
    assert cfg.init.seed == 77
    assert cfg.output.directory == "cli-dir"
    assert cfg.compare.perturb_seed == 78
    echo = dict(cfg.resolved)
    assert echo["init.seed"] == "77"
    assert echo["output.directory"] == "cli-dir"


def test_missing_file_and_malformed_file(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "nope.ini")
    with pytest.raises(ParseError):
        load_config(_write(tmp_path, "chi = 0.1\nno section header"))


# ----------------------------------------------------------------------
# seeded noise
# ----------------------------------------------------------------------


def test_splitmix_frozen_values():
    got = splitmix64_uniform(42, np.arange(4, dtype=np.uint64))
    want = np.array(
        [
            0.6537157389870546,
            0.7415648787718234,
            0.15991039287692013,
            0.2786011302551388,
        ]
    )
    assert np.array_equal(got, want)
    assert splitmix64_uniform(0, np.arange(1, dtype=np.uint64))[0] == 0.0


def test_splitmix_is_a_pure_function_of_seed_and_index():
    idx = np.arange(100, dtype=np.uint64)
    a = splitmix64_uniform(7, idx)
    b = splitmix64_uniform(7, idx)
    c = splitmix64_uniform(8, idx)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all((a >= 0.0) & (a < 1.0))


def test_smooth_noise_properties():
    g = Grid((33, 17), (1.0, 2.0))
    f = _smooth_noise(g, seed=5, smooth_modes=4, stream=0)
    assert f.shape == g.shape
    assert float(np.max(np.abs(f))) == 1.0  # rescaled exactly
    assert abs(g.mean(f)) < 1e-13
    # band limit: transform support confined to modes <= 4 per axis
    coeffs = g.dct(f)
    assert np.max(np.abs(coeffs[5:, :])) < 1e-12 * np.max(np.abs(coeffs))
    assert np.max(np.abs(coeffs[:, 5:])) < 1e-12 * np.max(np.abs(coeffs))
    # streams decorrelate
    f1 = _smooth_noise(g, seed=5, smooth_modes=4, stream=1)
    assert np.max(np.abs(f - f1)) > 0.1
    # determinism
    again = _smooth_noise(g, seed=5, smooth_modes=4, stream=0)
    assert np.array_equal(f, again)


def test_smooth_noise_is_layout_independent():
    """The node index enters the generator x-fastest, so the raw sample at
    multi-index (i, j) is the scalar draw at flat index i + n1 * j."""
    g = Grid((7, 5), (1.0, 1.0))
    count = g.node_count
    idx = np.arange(count, dtype=np.uint64)
    raw = 2.0 * splitmix64_uniform(11, idx) - 1.0
    field = raw.reshape(g.shape, order="F")
    for i in (0, 3, 6):
        for j in (0, 2, 4):
            one = 2.0 * splitmix64_uniform(11, np.array([i + 7 * j], dtype=np.uint64)) - 1.0
            assert field[i, j] == one[0]


# ----------------------------------------------------------------------
# initial data
# ----------------------------------------------------------------------


def test_random_initial_state(tmp_path):
    text = """
[grid]
n = 65
lengths = 2.0

[init]
profile = random
phi_mean = 0.2
phi_amp = 0.3
sigma_mean = 1.0
sigma_amp = 0.5
seed = 4
"""
    cfg = load_config(_write(tmp_path, text))
    s = initial_state(cfg)
    assert isinstance(s, State) and s.t == 0.0
    g = cfg.grid
    assert abs(g.mean(s.phi) - 0.2) < 1e-13
    assert abs(g.mean(s.sigma) - 1.0) < 1e-13
    assert np.max(np.abs(s.phi - 0.2)) == pytest.approx(0.3, abs=1e-15)
    assert np.max(np.abs(s.sigma - 1.0)) == pytest.approx(0.5, abs=1e-15)
    # phase and nutrient shapes come from separate streams
    assert np.max(np.abs((s.phi - 0.2) / 0.3 - (s.sigma - 1.0) / 0.5)) > 0.1


def test_single_mode_initial_state(tmp_path):
    text = """
[grid]
n = 33
lengths = 2.0

[init]
profile = single_mode(2)
phi_mean = 0.1
phi_amp = 0.05
sigma_mean = 0.3
sigma_amp = 0.2
"""
    cfg = load_config(_write(tmp_path, text))
    s = initial_state(cfg)
    x = cfg.grid.axis_coords(0)
    want = 0.1 + 0.05 * np.cos(2 * np.pi * x / 2.0)
    assert np.max(np.abs(s.phi - want)) < 1e-15
    want_sig = 0.3 + 0.2 * np.cos(2 * np.pi * x / 2.0)
    assert np.max(np.abs(s.sigma - want_sig)) < 1e-15


def test_file_profile_roundtrip_preserves_time(tmp_path):
    g = Grid((17,), (1.0,))
    phi = 0.4 * np.cos(np.pi * g.axis_coords(0))
    sigma = 0.2 + 0.0 * phi
    snap = tmp_path / "state.chsnap"
    write_snapshot(snap, State(g, phi, sigma, 2.75))
    text = f"""
[grid]
n = 17
lengths = 1.0

[init]
profile = file
file = {snap}
"""
    cfg = load_config(_write(tmp_path, text))
    s = initial_state(cfg)
    assert s.t == 2.75
    assert np.array_equal(s.phi, phi)
    assert np.array_equal(s.sigma, sigma)


def test_file_profile_grid_mismatch(tmp_path):
    g = Grid((17,), (1.0,))
    snap = tmp_path / "state.chsnap"
    write_snapshot(snap, State(g, np.zeros(g.shape), np.zeros(g.shape), 0.0))
    text = f"""
[grid]
n = 33
lengths = 1.0

[init]
profile = file
file = {snap}
"""
    cfg = load_config(_write(tmp_path, text))
    with pytest.raises(GridMismatch):
        initial_state(cfg)


def test_file_profile_domain_guard_and_contraction(tmp_path):
    g = Grid((17,), (1.0,))
    over = np.full(g.shape, 0.0)
    over.flat[4] = 1.2
    snap_bad = tmp_path / "bad.chsnap"
    write_snapshot(snap_bad, State(g, over, np.zeros(g.shape), 0.0))
    base = f"[grid]\nn = 17\nlengths = 1.0\n\n[init]\nprofile = file\nfile = "
    cfg = load_config(_write(tmp_path, base + str(snap_bad)))
    with pytest.raises(OutOfDomain):
        initial_state(cfg)

    saturated = np.full(g.shape, 0.0)
    saturated.flat[4] = 1.0  # exactly touching the barrier
    snap_sat = tmp_path / "sat.chsnap"
    write_snapshot(snap_sat, State(g, saturated, np.zeros(g.shape), 1.0))
    cfg2 = load_config(_write(tmp_path, base + str(snap_sat), name="sat.ini"))
    s = initial_state(cfg2)
    assert float(np.max(np.abs(s.phi))) <= 1.0 - 1e-6 + 1e-15
    assert s.t == 1.0

    # the regularized scheme accepts out-of-interval data untouched
    reg = (
        f"[grid]\nn = 17\nlengths = 1.0\n\n"
        f"[time]\nscheme = regularized\nkappa_schedule = 0.1\n\n"
        f"[init]\nprofile = file\nfile = {snap_bad}\n"
    )
    cfg3 = load_config(_write(tmp_path, reg, name="reg.ini"))
    s3 = initial_state(cfg3)
    assert float(np.max(np.abs(s3.phi))) == pytest.approx(1.2)
