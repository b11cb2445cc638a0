"""Tests for regularization sweeps and attenuation-mismatch studies."""

from __future__ import annotations

import numpy as np
import pytest

from src.errors import ConfigError
from src.experiments import (
    SweepPoint,
    best_point,
    is_u_shaped,
    lambda_sweep,
    mismatch_experiment,
)
from src.model import CartesianImage, VSinogram

REFERENCE_LAMBDAS = [8e-6, 8e-5, 8e-4, 8e-3, 8e-2]
MISMATCH_MUS = [0.0, 0.125, 0.15, 0.175]


def test_sweep_points_unpack():
    value, error = SweepPoint(8e-4, 0.2)
    assert (value, error) == (8e-4, 0.2)
    assert SweepPoint(1, 2).to_dict() == {"value": 1.0, "error": 2.0}
    pts = [SweepPoint(1, 0.5), SweepPoint(2, 0.1), SweepPoint(3, 0.3)]
    assert best_point(pts).value == 2.0
    assert best_point([]) is None


@pytest.mark.parametrize(
    "errors, expected",
    [
        ([3, 2, 1, 2, 3], True),
        ([3, 1, 2], True),
        ([1, 2, 3], False),
        ([3, 2, 1], False),
        ([3, 1, 1, 2], False),
        ([3, 1, 2, 1.5], False),
        ([1, 2], False),
    ],
)
def test_u_shape(errors, expected):
    assert is_u_shaped(errors) is expected


def test_lambda_grid_is_validated(small_cfg):
    sino = VSinogram(np.zeros((small_cfg.P, small_cfg.Q + 1)), 8.0, small_cfg.mu)
    ref = CartesianImage(np.ones((2 * small_cfg.M + 1,) * 2), 8.0)
    with pytest.raises(ConfigError):
        lambda_sweep(sino, small_cfg, [1e-3, 1e-4], ref)
    with pytest.raises(ConfigError):
        lambda_sweep(sino, small_cfg, [0.0, 1e-4], ref)
    assert lambda_sweep(sino, small_cfg, [], ref) == []


def test_sweep_on_zero_data_has_unit_error(small_cfg):
    sino = VSinogram(np.zeros((small_cfg.P, small_cfg.Q + 1)), 8.0, small_cfg.mu)
    ref = CartesianImage(np.ones((2 * small_cfg.M + 1,) * 2), 8.0)
    points = lambda_sweep(sino, small_cfg, [1e-4, 1e-2], ref)
    assert [p.value for p in points] == [1e-4, 1e-2]
    assert all(p.error == pytest.approx(1.0) for p in points)


def test_mismatch_reports_each_assumption(small_cfg):
    sino = VSinogram(np.zeros((small_cfg.P, small_cfg.Q + 1)), 8.0, small_cfg.mu)
    ref = CartesianImage(np.ones((2 * small_cfg.M + 1,) * 2), 8.0)
    points = mismatch_experiment(sino, small_cfg, [0.0, 0.15], ref)
    assert [p.value for p in points] == [0.0, 0.15]


# ---- acceptance-size experiments ----


@pytest.fixture(scope="module")
def clean_curve(three_discs_sinogram, three_discs_image, reference_cfg):
    return lambda_sweep(three_discs_sinogram, reference_cfg, REFERENCE_LAMBDAS, three_discs_image)


@pytest.fixture(scope="module")
def noisy_curve(noisy_sinogram, three_discs_image, reference_cfg):
    return lambda_sweep(noisy_sinogram, reference_cfg, REFERENCE_LAMBDAS, three_discs_image)


@pytest.mark.slow
def test_clean_sweep_shows_semi_convergence(clean_curve):
    errors = [p.error for p in clean_curve]
    best = best_point(clean_curve)
    assert is_u_shaped(errors), errors
    assert best.value == 8e-4
    assert best.error <= 0.25


@pytest.mark.slow
def test_noise_shifts_the_optimum_upwards(clean_curve, noisy_curve):
    clean, noisy = best_point(clean_curve), best_point(noisy_curve)
    assert noisy.error > clean.error
    assert noisy.value > clean.value
    assert noisy_curve[0].error > clean_curve[0].error


@pytest.mark.slow
def test_true_attenuation_gives_the_smallest_error(noisy_sinogram, three_discs_image, reference_cfg):
    points = mismatch_experiment(noisy_sinogram, reference_cfg, MISMATCH_MUS, three_discs_image)
    err = {p.value: p.error for p in points}
    assert err[0.0] > err[0.125] > err[0.15]
    assert err[0.175] > err[0.15]
    assert err[0.0] > err[0.175]
