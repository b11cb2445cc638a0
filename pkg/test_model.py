"""Tests for the domain types, geometry helpers and config validation."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import ConfigError, ContainerError
from src.model import (
    CartesianImage,
    HarmonicStack,
    PolarImage,
    ScanConfig,
    VSinogram,
    build_lambda,
    disc_mask,
    load_scan_config,
    midpoint_radii,
    opening_angles,
    radii_s,
    require_valid,
    unit_vector,
    validate_config,
    validate_uniqueness_hypothesis,
    vertex_angles,
)


# ---- geometry ----


@pytest.mark.parametrize(
    "phi, expected, orthogonal",
    [
        (0.0, (1.0, 0.0), (0.0, 1.0)),
        (math.pi / 2, (0.0, 1.0), (-1.0, 0.0)),
        (math.pi / 4, (math.sqrt(2) / 2, math.sqrt(2) / 2), (-math.sqrt(2) / 2, math.sqrt(2) / 2)),
    ],
)
def test_unit_vector_examples(phi, expected, orthogonal):
    e, e_perp = unit_vector(phi)
    assert_allclose(e, expected, atol=1e-15)
    assert_allclose(e_perp, orthogonal, atol=1e-15)


def test_unit_vector_is_orthonormal(rng):
    phi = rng.uniform(-10, 10, size=500)
    e, e_perp = unit_vector(phi)
    assert_allclose(np.hypot(e[0], e[1]), 1.0, atol=1e-15)
    assert_allclose(np.hypot(e_perp[0], e_perp[1]), 1.0, atol=1e-15)
    assert np.max(np.abs(e[0] * e_perp[0] + e[1] * e_perp[1])) <= 1e-15


def test_scan_grids():
    assert_allclose(vertex_angles(4), [0, math.pi / 2, math.pi, 3 * math.pi / 2])
    assert_allclose(radii_s(8.0, 4), [0, 2, 4, 6, 8])
    assert_allclose(midpoint_radii(8.0, 4), [1, 3, 5, 7])
    psi = opening_angles(4)
    assert psi[0] == 0.0
    assert psi[-1] == pytest.approx(math.pi / 2)
    assert_allclose(8.0 * np.sin(psi), radii_s(8.0, 4), atol=1e-14)


# ---- ScanConfig ----


def test_default_lambda_vector_spares_n0():
    cfg = ScanConfig(P=8, lam=1e-3)
    assert cfg.lam[0] == 0.0
    assert_allclose(cfg.lam[1:], 1e-3)
    assert cfg.lambda_for(-1) == cfg.lam[7]
    assert build_lambda(4, 2.0, 0.5).tolist() == [0.5, 2.0, 2.0, 2.0]


def test_config_copies_keep_the_other_fields():
    cfg = ScanConfig(P=8, Q=10, M=12, lam=1e-3, lambda0=1e-6)
    other = cfg.with_mu(0.0)
    assert other.mu == 0.0 and other.Q == 10 and other.M == 12
    assert_allclose(other.lam, cfg.lam)
    relaxed = cfg.with_lambda(0.5)
    assert relaxed.lambda_for(0) == 1e-6
    assert relaxed.lambda_for(3) == 0.5
    assert cfg.lambda_for(3) == 1e-3


def test_config_dict_round_trip():
    cfg = ScanConfig(radius_R=6.0, mu=0.1, P=10, Q=12, M=20, lam=2e-3)
    back = ScanConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back.to_dict() == cfg.to_dict()


def test_config_is_read_only():
    cfg = ScanConfig(P=4)
    with pytest.raises(ValueError):
        cfg.lam[1] = 5.0


def test_load_scan_config(tmp_path):
    path = tmp_path / "scan.json"
    path.write_text(json.dumps({"mu": 0.2, "P": 20}))
    cfg = ScanConfig.from_dict(load_scan_config(path))
    assert cfg.mu == 0.2 and cfg.P == 20 and cfg.lam.shape == (20,)

    path.write_text("[1, 2]")
    with pytest.raises(ContainerError):
        load_scan_config(path)
    with pytest.raises(ContainerError):
        load_scan_config(tmp_path / "missing.json")


# ---- validation ----


def test_reference_setup_is_clean():
    report = validate_config(ScanConfig(radius_R=8.0, mu=0.15))
    assert report.ok
    assert report.warnings == []


def test_large_attenuation_warns():
    report = validate_config(ScanConfig(radius_R=8.0, mu=0.2))
    assert report.ok
    assert len(report.warnings) == 1
    assert "1.6" in report.warnings[0]


def test_uniqueness_hypothesis_boundary():
    assert validate_uniqueness_hypothesis(0.15, 8.0)
    assert validate_uniqueness_hypothesis(0.1875, 8.0)
    assert not validate_uniqueness_hypothesis(0.2, 8.0)
    assert validate_config(ScanConfig(radius_R=8.0, mu=0.1875)).warnings == []


@pytest.mark.parametrize(
    "kwargs",
    [
        {"P": 3},
        {"P": 0},
        {"Q": 1},
        {"M": 0},
        {"radius_R": -1.0},
        {"mu": float("nan")},
        {"lam": -1e-3},
    ],
)
def test_hard_errors_are_reported_not_raised(kwargs):
    report = validate_config(ScanConfig(**kwargs))
    assert not report.ok
    with pytest.raises(ConfigError):
        require_valid(ScanConfig(**kwargs))


def test_wrong_lambda_length_is_an_error():
    cfg = ScanConfig(P=8, lam=np.zeros(6))
    assert not validate_config(cfg).ok


# ---- images and data ----


def test_image_masks_outside_disc():
    M, R = 10, 8.0
    img = CartesianImage(np.ones((2 * M + 1, 2 * M + 1)), R)
    assert img.pixel(0, 0) == 1.0
    assert img.pixel(M, 0) == 0.0  # |x| = R exactly
    assert img.pixel(-M, -M) == 0.0
    assert np.array_equal(img.values != 0, disc_mask(M, R))


def test_image_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        CartesianImage(np.ones((4, 4)), 8.0)
    with pytest.raises(ConfigError):
        CartesianImage(np.ones((5, 7)), 8.0)
    with pytest.raises(ConfigError):
        CartesianImage(np.full((5, 5), np.nan), 8.0)


def test_pixel_indexing_follows_coordinates():
    M, R = 4, 8.0
    img = CartesianImage.zeros(M, R)
    x1, x2 = img.coordinates()
    assert x1[M + 1, M] == pytest.approx(2.0)
    assert x2[M, M - 2] == pytest.approx(-4.0)


def test_sinogram_and_polar_shapes():
    sino = VSinogram(np.zeros((6, 9)), 8.0, 0.15)
    assert (sino.P, sino.Q) == (6, 8)
    pol = PolarImage(np.zeros((6, 8)), 8.0)
    assert_allclose(pol.radii, midpoint_radii(8.0, 8))
    assert_allclose(pol.angles, vertex_angles(6))


def test_harmonic_stack_roles():
    HarmonicStack(np.zeros((4, 6)), 5, 8.0, "data")
    HarmonicStack(np.zeros((4, 5)), 5, 8.0, "image")
    with pytest.raises(ConfigError):
        HarmonicStack(np.zeros((4, 5)), 5, 8.0, "data")
    with pytest.raises(ConfigError):
        HarmonicStack(np.zeros((4, 5)), 5, 8.0, "spectrum")
