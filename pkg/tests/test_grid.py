"""Grid operators against dense oracles and their structural identities."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chlab.errors import GridMismatch, NonZeroMean
from chlab.grid import Grid

from conftest import (
    dense_dual_norm_h1p,
    dense_dual_norm_v0,
    dense_grad_inner,
    dense_helmholtz,
    dense_inv_laplacian,
    dense_laplacian,
    dense_mean,
    dense_weights,
    seeded_field,
)


def test_construction_validation():
    with pytest.raises(ValueError):
        Grid((2,), (1.0,))
    with pytest.raises(ValueError):
        Grid((5,), (-1.0,))
    with pytest.raises(ValueError):
        Grid((5, 5, 5, 5), (1.0, 1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        Grid((5, 5), (1.0,))
    g = Grid((5, 9), (1.0, 2.5))
    assert g.ndim == 2 and g.shape == (5, 9) and g.node_count == 45
    assert g.h_per_axis == (0.25, 2.5 / 8)
    assert g == Grid((5, 9), (1.0, 2.5))
    assert hash(g) == hash(Grid((5, 9), (1.0, 2.5)))


def test_weights_sum_to_volume(small_grids):
    for g in small_grids:
        assert np.sum(g.weights) == pytest.approx(g.volume, rel=1e-14)
        assert dense_weights(g).reshape(g.shape) == pytest.approx(g.weights)


def test_mean_and_integral_of_constant(small_grids):
    for g in small_grids:
        f = np.full(g.shape, 0.7)
        assert g.mean(f) == pytest.approx(0.7, abs=1e-14)
        assert g.integral(f) == pytest.approx(0.7 * g.volume, rel=1e-14)


def test_laplacian_matches_dense(small_grids):
    for g in small_grids:
        for seed in range(5):
            f = seeded_field(g, seed)
            want = (dense_laplacian(g) @ f.ravel()).reshape(g.shape)
            got = g.laplacian_neumann(f)
            assert np.max(np.abs(want - got)) < 1e-10


def test_laplacian_annihilates_constants(small_grids):
    for g in small_grids:
        f = np.full(g.shape, 1.3)
        assert np.max(np.abs(g.laplacian_neumann(f))) == 0.0


def test_laplacian_has_zero_weighted_mean(small_grids):
    for g in small_grids:
        f = seeded_field(g, 3)
        assert abs(g.integral(g.laplacian_neumann(f))) < 1e-11


def test_transform_diagonalizes_laplacian(small_grids):
    """-Laplacian acts as multiplication by the eigenvalue table."""
    for g in small_grids:
        f = seeded_field(g, 4)
        via_transform = g.idct(g.eigenvalues * g.dct(f))
        assert np.max(np.abs(via_transform + g.laplacian_neumann(f))) < 1e-9


def test_transform_roundtrip(small_grids):
    for g in small_grids:
        f = seeded_field(g, 5)
        assert np.max(np.abs(g.idct(g.dct(f)) - f)) < 1e-13


def test_parseval_mode_mass(small_grids):
    """The transform-space mass table reproduces the weighted L2 norm."""
    for g in small_grids:
        f = seeded_field(g, 6)
        coeffs = g.dct(f)
        spectral = float(np.sum(g.mode_mass * coeffs * coeffs))
        assert spectral == pytest.approx(g.l2_norm(f) ** 2, rel=1e-12)


def test_summation_by_parts(small_grids):
    """<-Lap f, g>_w equals the gradient inner product exactly."""
    for g in small_grids:
        f = seeded_field(g, 7)
        h = seeded_field(g, 8)
        lhs = g.l2_inner(-g.laplacian_neumann(f), h)
        rhs = g.grad_inner(f, h)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_grad_inner_matches_dense(small_grids):
    for g in small_grids:
        f = seeded_field(g, 9)
        h = seeded_field(g, 10)
        want = dense_grad_inner(g, f.ravel(), h.ravel())
        assert g.grad_inner(f, h) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_grad_norm_zero_only_for_constants(small_grids):
    for g in small_grids:
        assert g.grad_norm(np.full(g.shape, 2.0)) == 0.0
        f = seeded_field(g, 11)
        assert g.grad_norm(f) > 0.0


def test_inv_laplacian_matches_dense(small_grids):
    for g in small_grids:
        f = seeded_field(g, 12)
        f -= g.mean(f)
        want = dense_inv_laplacian(g, f.ravel()).reshape(g.shape)
        got = g.inv_laplacian_zero_mean(f)
        assert np.max(np.abs(want - got)) < 1e-10


def test_inv_laplacian_inverts(small_grids):
    for g in small_grids:
        f = seeded_field(g, 13)
        f -= g.mean(f)
        u = g.inv_laplacian_zero_mean(f)
        assert abs(g.mean(u)) < 1e-12
        assert np.max(np.abs(-g.laplacian_neumann(u) - f)) < 1e-9


def test_inv_laplacian_rejects_nonzero_mean(small_grids):
    g = small_grids[0]
    with pytest.raises(NonZeroMean):
        g.inv_laplacian_zero_mean(np.full(g.shape, 1.0))


def test_helmholtz_matches_dense(small_grids):
    for g in small_grids:
        f = seeded_field(g, 14)
        want = dense_helmholtz(g, f.ravel()).reshape(g.shape)
        got = g.helmholtz_inverse(f)
        assert np.max(np.abs(want - got)) < 1e-11
        back = got - g.laplacian_neumann(got)
        assert np.max(np.abs(back - f)) < 1e-9


def test_dual_norms_match_dense(small_grids):
    for g in small_grids:
        f = seeded_field(g, 15)
        fluct = f - g.mean(f)
        assert g.dual_norm_V0(fluct) == pytest.approx(
            dense_dual_norm_v0(g, f.ravel()), rel=1e-10, abs=1e-12
        )
        assert g.dual_norm_H1p(f) == pytest.approx(
            dense_dual_norm_h1p(g, f.ravel()), rel=1e-10, abs=1e-12
        )


def test_dual_norm_of_constant_is_its_magnitude(small_grids):
    for g in small_grids:
        f = np.full(g.shape, -0.35)
        assert g.dual_norm_H1p(f) == pytest.approx(0.35, abs=1e-13)


def test_dual_norm_v0_rejects_nonzero_mean(small_grids):
    g = small_grids[1]
    with pytest.raises(NonZeroMean):
        g.dual_norm_V0(np.full(g.shape, 0.2))


def test_grid_mismatch_detection():
    g = Grid((5,), (1.0,))
    other = np.zeros((7,))
    with pytest.raises(GridMismatch):
        g.mean(other)


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(min_value=3, max_value=12),
    length=st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_property_sbp_and_mass(n, length, seed):
    """SBP identity and mode-mass Parseval hold on arbitrary 1D grids."""
    g = Grid((n,), (length,))
    f = seeded_field(g, seed)
    h = seeded_field(g, seed + 1)
    assert g.l2_inner(-g.laplacian_neumann(f), h) == pytest.approx(
        g.grad_inner(f, h), rel=1e-10, abs=1e-10
    )
    coeffs = g.dct(f)
    assert float(np.sum(g.mode_mass * coeffs * coeffs)) == pytest.approx(
        g.l2_norm(f) ** 2, rel=1e-10
    )


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31))
def test_property_inverse_consistency_2d(seed):
    """helmholtz and zero-mean inverses undo their forward operators."""
    g = Grid((6, 5), (1.0, 1.7))
    f = seeded_field(g, seed)
    fluct = f - g.mean(f)
    u = g.inv_laplacian_zero_mean(fluct)
    assert np.max(np.abs(-g.laplacian_neumann(u) - fluct)) < 1e-8
    v = g.helmholtz_inverse(f)
    assert np.max(np.abs(v - g.laplacian_neumann(v) - f)) < 1e-8
