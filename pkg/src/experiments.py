"""Regularization sweeps and attenuation-mismatch studies."""

from __future__ import annotations

import logging
from typing import Any, Sequence

import numpy as np

import config
from src.errors import ConfigError
from src.harmonics import analyze, scale_to_abel_rhs, synthesize
from src.model import CartesianImage, ScanConfig, VSinogram
from src.pipeline import (
    KernelBank,
    check_inputs,
    reconstruct,
    relative_l2_error,
    resample_polar_to_cartesian,
    solve_harmonics,
)

logger = logging.getLogger(__name__)


class SweepPoint:
    """Reconstruction error for one value of the swept parameter."""

    __slots__ = ("value", "error")

    def __init__(self, value: float, error: float) -> None:
        self.value = float(value)
        self.error = float(error)

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "error": self.error}

    def __iter__(self):
        yield self.value
        yield self.error

    def __repr__(self) -> str:
        return f"SweepPoint({self.value:g}, {self.error:.6g})"


def best_point(points: Sequence[SweepPoint]) -> SweepPoint | None:
    return min(points, key=lambda p: p.error) if points else None


def lambda_sweep(
    sino: VSinogram,
    cfg: ScanConfig,
    lambda_grid: Sequence[float],
    reference: CartesianImage,
    bank: KernelBank | None = None,
) -> list[SweepPoint]:
    """Relative error of the reconstruction for each ``lambda`` (applied to all
    ``n != 0``; ``lambda_0`` is taken from ``cfg``).

    The angular analysis and the kernel matrices are computed once.
    """
    grid = [float(v) for v in lambda_grid]
    if any(v <= 0 for v in grid):
        raise ConfigError("lambda grid must be positive")
    if grid != sorted(grid):
        raise ConfigError("lambda grid must be sorted ascending")
    if not grid:
        return []
    check_inputs(sino, cfg)
    bank = bank or KernelBank(cfg)
    bank.precompute(cfg.P)
    rhs = scale_to_abel_rhs(analyze(sino), cfg)

    points: list[SweepPoint] = []
    for lam in grid:
        trial = cfg.with_lambda(lam)
        polar = synthesize(solve_harmonics(rhs, trial, bank))
        image = resample_polar_to_cartesian(polar, cfg.M, cfg.radius_R)
        err = relative_l2_error(image, reference)
        logger.info("lambda=%g -> relative error %.5f", lam, err)
        points.append(SweepPoint(lam, err))
    return points


def mismatch_experiment(
    sino: VSinogram,
    cfg: ScanConfig,
    assumed_mu_list: Sequence[float],
    reference: CartesianImage,
    lam: float = config.MISMATCH_LAMBDA,
) -> list[SweepPoint]:
    """Reconstruct with each assumed attenuation in place of ``cfg.mu``."""
    base = cfg.with_lambda(lam)
    points: list[SweepPoint] = []
    for mu in assumed_mu_list:
        image = reconstruct(sino, base.with_mu(float(mu)))
        err = relative_l2_error(image, reference)
        logger.info("assumed mu=%g -> relative error %.5f", mu, err)
        points.append(SweepPoint(mu, err))
    return points


def is_u_shaped(errors: Sequence[float]) -> bool:
    """Strictly decreasing up to the minimum and strictly increasing after."""
    errs = np.asarray(errors, dtype=np.float64)
    if errs.size < 3:
        return False
    k = int(np.argmin(errs))
    if k == 0 or k == errs.size - 1:
        return False
    return bool(np.all(np.diff(errs[: k + 1]) < 0) and np.all(np.diff(errs[k:]) > 0))
