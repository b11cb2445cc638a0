"""Tests for the direct and Tikhonov solvers and the Jacobi SVD."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.abel_kernel import AbelKernelMatrix, assemble_matrix
from src.errors import ConvergenceError, SingularPivotError, SolverError
from src.model import ScanConfig
from src.solver import (
    TikhonovSystem,
    condition_number,
    conditioning_table,
    singular_values,
    solve_tikhonov,
    solve_triangular,
    tikhonov_objective,
)


@pytest.fixture
def K0() -> AbelKernelMatrix:
    return assemble_matrix(0, ScanConfig(Q=30))


def _complex(rng, size):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


def test_direct_solve_recovers_solution(K0, rng):
    x = _complex(rng, 30)
    assert_allclose(solve_triangular(K0, K0.entries @ x), x, rtol=1e-9, atol=1e-9)


def test_direct_solve_handles_blocks(K0, rng):
    X = _complex(rng, (30, 3))
    assert_allclose(solve_triangular(K0, K0.entries @ X), X, rtol=1e-9, atol=1e-9)


def test_vanishing_pivot_names_the_row():
    A = np.triu(np.ones((5, 5)))
    A[2, 2] = 0.0
    with pytest.raises(SingularPivotError) as info:
        solve_triangular(AbelKernelMatrix(4, A, 8.0, 0.15), np.ones(5))
    assert info.value.row == 2


def test_tikhonov_without_regularization_is_the_direct_solve(K0, rng):
    g = _complex(rng, 30)
    assert_allclose(solve_tikhonov(K0, g, 0.0), solve_triangular(K0, g), rtol=1e-7, atol=1e-7)


def test_tikhonov_minimizes_the_functional(K0, rng):
    g = _complex(rng, 30)
    lam = 1e-3
    x = solve_tikhonov(K0, g, lam)
    gradient = K0.entries.T @ (K0.entries @ x - g) + lam * x
    assert np.linalg.norm(gradient) <= 1e-10 * np.linalg.norm(K0.entries.T @ g)
    best = tikhonov_objective(K0, x, g, lam)
    for _ in range(5):
        trial = x + 1e-3 * _complex(rng, 30)
        assert tikhonov_objective(K0, trial, g, lam) > best


def test_tikhonov_is_monotone_in_lambda(rng):
    K = assemble_matrix(5, ScanConfig(Q=30))
    g = _complex(rng, 30)
    norms, residuals = [], []
    for lam in (1e-6, 1e-4, 1e-2, 1.0):
        x = solve_tikhonov(K, g, lam)
        norms.append(np.linalg.norm(x))
        residuals.append(np.linalg.norm(K.entries @ x - g))
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert all(a < b for a, b in zip(residuals, residuals[1:]))


def test_complex_solve_splits_into_real_parts(K0, rng):
    g = _complex(rng, 30)
    system = TikhonovSystem(K0)
    x = system.solve(g, 1e-4)
    scale = np.abs(x).max()
    assert_allclose(x.real, system.solve(g.real, 1e-4), rtol=1e-12, atol=1e-12 * scale)
    assert_allclose(x.imag, system.solve(g.imag, 1e-4), rtol=1e-12, atol=1e-12 * scale)


def test_factorization_is_cached(K0):
    system = TikhonovSystem(K0)
    assert system.factor(1e-3) is system.factor(1e-3)
    with pytest.raises(SolverError):
        system.factor(-1.0)


# ---- singular values ----


def test_jacobi_matches_lapack(rng):
    A = rng.normal(size=(25, 25))
    assert_allclose(singular_values(A), np.linalg.svd(A, compute_uv=False), rtol=1e-10)
    W = rng.normal(size=(7, 12))
    assert_allclose(singular_values(W), np.linalg.svd(W, compute_uv=False), rtol=1e-10)


def test_kernel_spectrum(K0):
    sv = singular_values(K0)
    assert sv.shape == (30,)
    assert np.all(np.diff(sv) <= 0)
    assert_allclose(sv, np.linalg.svd(K0.entries, compute_uv=False), rtol=1e-9)


@pytest.mark.parametrize("n", [0, 2])
def test_spectrum_of_transpose_and_normal_matrix(n):
    K = assemble_matrix(n, ScanConfig(Q=30)).entries
    sv = singular_values(K)
    assert_allclose(singular_values(K.T), sv, rtol=1e-9, atol=1e-12 * sv[0])
    assert_allclose(singular_values(K.T @ K), sv**2, rtol=1e-8, atol=1e-12 * sv[0] ** 2)


def test_condition_numbers():
    assert condition_number(np.eye(6)) == pytest.approx(1.0)
    assert condition_number(np.diag([4.0, 2.0, 1.0])) == pytest.approx(4.0)
    assert math.isinf(condition_number(np.diag([1.0, 0.0])))


def test_sweep_cap_raises(rng):
    with pytest.raises(ConvergenceError) as info:
        singular_values(rng.normal(size=(10, 10)), max_sweeps=1)
    assert info.value.off_diagonal > 0


def test_conditioning_table_shape():
    rows, spectra = conditioning_table(ScanConfig(Q=12), 3, spectra=True)
    assert [n for n, _ in rows] == [0, 1, 2, 3]
    assert all(kappa >= 1.0 for _, kappa in rows)
    assert sorted(spectra) == [0, 1, 2, 3]
    assert spectra[2].shape == (12,)
    rows, spectra = conditioning_table(ScanConfig(Q=12), 1)
    assert spectra == {}


@pytest.mark.slow
def test_only_n0_is_well_conditioned():
    rows, _ = conditioning_table(ScanConfig(radius_R=8.0, mu=0.15, Q=100), 50)
    kappa = dict(rows)
    assert all(kappa[0] < kappa[n] for n in range(1, 51))
