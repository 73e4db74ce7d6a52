"""Shared fixtures: dense-matrix oracles built independently of the package.

Every operator here is assembled from explicit Kronecker products of small
1D matrices acting on C-order-flattened fields, so agreement with the
package's transform-space implementations is a genuine two-route check,
not a reflection of shared code.
"""

from __future__ import annotations

import numpy as np
import pytest

from chlab.grid import Grid


def axis_weights_1d(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


def dense_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weights as a flat vector (C order)."""
    vecs = [
        axis_weights_1d(n, h) for n, h in zip(grid.n_per_axis, grid.h_per_axis)
    ]
    w = vecs[0]
    for v in vecs[1:]:
        w = np.multiply.outer(w, v)
    return w.ravel()


def laplacian_1d(n: int, h: float) -> np.ndarray:
    """Neumann second-difference matrix with mirrored ghost nodes."""
    T = np.zeros((n, n))
    for i in range(n):
        T[i, i] = -2.0
        if i > 0:
            T[i, i - 1] += 1.0
        else:
            T[i, i + 1] += 1.0
        if i < n - 1:
            T[i, i + 1] += 1.0
        else:
            T[i, i - 1] += 1.0
    return T / h**2


def dense_laplacian(grid: Grid) -> np.ndarray:
    """Flat-field Laplacian matrix (C-order flattening)."""
    mats = [
        laplacian_1d(n, h) for n, h in zip(grid.n_per_axis, grid.h_per_axis)
    ]
    total = np.zeros((grid.node_count, grid.node_count))
    for a, T in enumerate(mats):
        op = np.array([[1.0]])
        for b, n in enumerate(grid.n_per_axis):
            op = np.kron(op, T if b == a else np.eye(n))
        total += op
    return total


def dense_mean(grid: Grid, flat: np.ndarray) -> float:
    w = dense_weights(grid)
    return float(w @ flat) / grid.volume


def dense_inv_laplacian(grid: Grid, flat: np.ndarray) -> np.ndarray:
    """Zero-mean inverse of -Laplacian via a rank-one-deflated dense solve."""
    K = -dense_laplacian(grid)
    w = dense_weights(grid)
    rhs = flat - dense_mean(grid, flat)
    u = np.linalg.solve(K + np.outer(w, w), rhs)
    return u - dense_mean(grid, u)


def dense_helmholtz(grid: Grid, flat: np.ndarray) -> np.ndarray:
    """(I - Laplacian)^-1 via a dense solve."""
    A = np.eye(grid.node_count) - dense_laplacian(grid)
    return np.linalg.solve(A, flat)


def dense_grad_inner(grid: Grid, f_flat: np.ndarray, g_flat: np.ndarray) -> float:
    """Gradient inner product from explicit forward-difference matrices."""
    total = 0.0
    for a, (n_a, h_a) in enumerate(zip(grid.n_per_axis, grid.h_per_axis)):
        D1 = (np.eye(n_a)[1:] - np.eye(n_a)[:-1]) / h_a
        op = np.array([[1.0]])
        wvecs = []
        for b, (n_b, h_b) in enumerate(zip(grid.n_per_axis, grid.h_per_axis)):
            if b == a:
                op = np.kron(op, D1)
                wvecs.append(np.full(n_a - 1, h_a))
            else:
                op = np.kron(op, np.eye(n_b))
                wvecs.append(axis_weights_1d(n_b, h_b))
        w = wvecs[0]
        for v in wvecs[1:]:
            w = np.multiply.outer(w, v)
        total += float((op @ f_flat) * w.ravel() @ (op @ g_flat))
    return total


def dense_dual_norm_v0(grid: Grid, flat: np.ndarray) -> float:
    w = dense_weights(grid)
    fluct = flat - dense_mean(grid, flat)
    u = dense_inv_laplacian(grid, fluct)
    return float(np.sqrt(max((fluct * w) @ u, 0.0)))


def dense_dual_norm_h1p(grid: Grid, flat: np.ndarray) -> float:
    m = dense_mean(grid, flat)
    return float(np.sqrt(dense_dual_norm_v0(grid, flat) ** 2 + m * m))


def seeded_field(grid: Grid, seed: int, amp: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return amp * rng.standard_normal(grid.shape)


@pytest.fixture(scope="session")
def small_grids() -> list[Grid]:
    return [
        Grid((7,), (1.3,)),
        Grid((5, 9), (1.0, 2.5)),
        Grid((4, 5, 6), (0.7, 1.1, 2.0)),
    ]
