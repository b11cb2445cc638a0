"""Shared pytest fixtures."""

from __future__ import annotations

import numpy as np
import pytest

import config
from src.model import ScanConfig
from src.phantom import centered_disc, preset, rasterize
from src.pipeline import poisson_noise
from src.projector import forward_vline


@pytest.fixture
def small_cfg() -> ScanConfig:
    return ScanConfig(radius_R=8.0, mu=0.15, P=16, Q=24, M=32)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _isolated_runtime(monkeypatch) -> None:
    monkeypatch.setattr(config, "LOG_FILE", "")
    monkeypatch.setattr(config, "DB_PATH", "")


# ---- acceptance-size data (P = Q = M = 100, R = 8, mu = 0.15) ----


@pytest.fixture(scope="session")
def reference_cfg() -> ScanConfig:
    return ScanConfig()


@pytest.fixture(scope="session")
def three_discs_image(reference_cfg):
    return rasterize(preset("three-discs"), reference_cfg.M, reference_cfg.radius_R)


@pytest.fixture(scope="session")
def three_discs_sinogram(three_discs_image, reference_cfg):
    return forward_vline(three_discs_image, reference_cfg)


@pytest.fixture(scope="session")
def noisy_sinogram(three_discs_sinogram):
    noisy, _ = poisson_noise(three_discs_sinogram, config.DEFAULT_TOTAL_COUNTS, config.DEFAULT_SEED)
    return noisy


@pytest.fixture(scope="session")
def disc_image(reference_cfg):
    return rasterize(centered_disc(2.0), reference_cfg.M, reference_cfg.radius_R, supersample=4)
