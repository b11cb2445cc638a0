"""Domain types, scan geometry helpers and configuration validation."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

import config
from src.errors import ConfigError, ContainerError

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


def unit_vector(phi: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``Phi(phi) = (cos, sin)`` and ``Phi(phi)^perp = (-sin, cos)``.

    For array input the leading axis of both results has length 2.
    """
    c = np.cos(phi)
    s = np.sin(phi)
    return np.array([c, s]), np.array([-s, c])


def vertex_angles(P: int) -> np.ndarray:
    """Vertex positions ``phi_p = 2 pi p / P``."""
    return 2.0 * np.pi * np.arange(P) / P


def radii_s(radius_R: float, Q: int) -> np.ndarray:
    """Detector offsets ``s_q = q R / Q`` for q = 0..Q."""
    return np.arange(Q + 1) * radius_R / Q


def midpoint_radii(radius_R: float, Q: int) -> np.ndarray:
    """Quadrature nodes ``r_j = (j + 1/2) R / Q`` for j = 0..Q-1."""
    return (np.arange(Q) + 0.5) * radius_R / Q


def opening_angles(Q: int) -> np.ndarray:
    """Half opening angles ``psi_q = arcsin(s_q / R) = arcsin(q / Q)``."""
    return np.arcsin(np.clip(np.arange(Q + 1) / Q, 0.0, 1.0))


def pixel_axis(M: int, radius_R: float) -> np.ndarray:
    """Pixel-centre coordinates ``i R / M`` for i = -M..M along one axis."""
    return np.arange(-M, M + 1) * radius_R / M


def pixel_coordinates(M: int, radius_R: float) -> tuple[np.ndarray, np.ndarray]:
    """Full ``(x1, x2)`` grids; axis 0 runs along x1, axis 1 along x2."""
    axis = pixel_axis(M, radius_R)
    return np.meshgrid(axis, axis, indexing="ij")


def disc_mask(M: int, radius_R: float) -> np.ndarray:
    """Boolean mask of pixels strictly inside the disc ``|x| < R``."""
    x1, x2 = pixel_coordinates(M, radius_R)
    return x1 * x1 + x2 * x2 < radius_R * radius_R


def _frozen(values: np.ndarray, dtype: Any = np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Scan configuration
# ---------------------------------------------------------------------------


def build_lambda(P: int, lam: float, lambda0: float = 0.0) -> np.ndarray:
    """Regularization vector in wrap-around order: ``lambda0`` for n = 0,
    ``lam`` for every other harmonic."""
    vec = np.full(max(int(P), 0), float(lam))
    if vec.size:
        vec[0] = float(lambda0)
    return vec


class ScanConfig:
    """Geometry and physics of one scan plus the regularization vector.

    ``lam`` holds one entry per harmonic, stored in the same wrap-around DFT
    order as the rows of a :class:`HarmonicStack`.
    """

    __slots__ = ("radius_R", "mu", "P", "Q", "M", "lam")

    def __init__(
        self,
        radius_R: float = config.DEFAULT_RADIUS,
        mu: float = config.DEFAULT_MU,
        P: int = config.DEFAULT_P,
        Q: int = config.DEFAULT_Q,
        M: int = config.DEFAULT_M,
        lam: np.ndarray | float | None = None,
        lambda0: float = config.DEFAULT_LAMBDA0,
    ) -> None:
        self.radius_R = float(radius_R)
        self.mu = float(mu)
        self.P = int(P)
        self.Q = int(Q)
        self.M = int(M)
        if lam is None:
            lam = config.DEFAULT_LAMBDA
        if np.ndim(lam) == 0:
            lam = build_lambda(self.P, float(lam), lambda0)
        self.lam = _frozen(lam)

    @property
    def mu_R(self) -> float:
        return self.mu * self.radius_R

    def lambda_for(self, n: int) -> float:
        """Regularization parameter of harmonic ``n`` (any sign)."""
        return float(self.lam[n % self.P])

    def with_mu(self, mu: float) -> "ScanConfig":
        return ScanConfig(self.radius_R, mu, self.P, self.Q, self.M, self.lam)

    def with_lambda(self, lam: float, lambda0: float | None = None) -> "ScanConfig":
        if lambda0 is None:
            lambda0 = float(self.lam[0]) if self.lam.size else 0.0
        vec = build_lambda(self.P, lam, lambda0)
        return ScanConfig(self.radius_R, self.mu, self.P, self.Q, self.M, vec)

    def to_dict(self) -> dict[str, Any]:
        return {
            "radius_R": self.radius_R,
            "mu": self.mu,
            "P": self.P,
            "Q": self.Q,
            "M": self.M,
            "lambda": self.lam.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScanConfig":
        """Build from a mapping; ``lambda`` may be a scalar or a full vector."""
        return cls(
            radius_R=data.get("radius_R", config.DEFAULT_RADIUS),
            mu=data.get("mu", config.DEFAULT_MU),
            P=data.get("P", config.DEFAULT_P),
            Q=data.get("Q", config.DEFAULT_Q),
            M=data.get("M", config.DEFAULT_M),
            lam=data.get("lambda"),
            lambda0=data.get("lambda0", config.DEFAULT_LAMBDA0),
        )

    def __repr__(self) -> str:
        return (
            f"ScanConfig(R={self.radius_R}, mu={self.mu}, P={self.P}, "
            f"Q={self.Q}, M={self.M})"
        )


def load_scan_config(path: str | Path) -> dict[str, Any]:
    """Read a JSON scan-config file and return its raw mapping."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ContainerError(f"cannot read scan config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ContainerError(f"scan config {path} must hold a JSON object")
    return data


class ValidationReport:
    """Outcome of :func:`validate_config`."""

    __slots__ = ("errors", "warnings")

    def __init__(self) -> None:
        self.errors: list[str] = []
        self.warnings: list[str] = []

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict[str, Any]:
        return {"errors": list(self.errors), "warnings": list(self.warnings)}


def _is_int(value: Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def validate_uniqueness_hypothesis(mu: float, radius_R: float) -> bool:
    """Whether ``mu R <= 3/2`` holds."""
    return mu * radius_R <= config.MU_R_LIMIT


def validate_config(cfg: ScanConfig) -> ValidationReport:
    """Check the hard invariants of ``cfg`` and the uniqueness hypothesis.

    Never raises; violations are collected in the report.
    """
    report = ValidationReport()
    if not (np.isfinite(cfg.radius_R) and cfg.radius_R > 0):
        report.errors.append(f"radius_R must be positive, got {cfg.radius_R}")
    if not np.isfinite(cfg.mu):
        report.errors.append(f"mu must be finite, got {cfg.mu}")
    if not _is_int(cfg.P) or cfg.P < 2 or cfg.P % 2:
        report.errors.append(f"P must be even and >= 2, got {cfg.P}")
    if not _is_int(cfg.Q) or cfg.Q < 2:
        report.errors.append(f"Q must be >= 2, got {cfg.Q}")
    if not _is_int(cfg.M) or cfg.M < 1:
        report.errors.append(f"M must be >= 1, got {cfg.M}")
    if cfg.lam.shape != (cfg.P,):
        report.errors.append(
            f"lambda must have {cfg.P} entries, got shape {cfg.lam.shape}"
        )
    elif not np.all(np.isfinite(cfg.lam)) or np.any(cfg.lam < 0):
        report.errors.append("lambda entries must be finite and non-negative")

    if np.isfinite(cfg.mu_R) and not validate_uniqueness_hypothesis(cfg.mu, cfg.radius_R):
        msg = (
            f"mu*R = {cfg.mu_R:.4g} exceeds {config.MU_R_LIMIT}; "
            "uniqueness of the inversion is not guaranteed"
        )
        report.warnings.append(msg)
        logger.warning(msg)
    return report


def require_valid(cfg: ScanConfig) -> ValidationReport:
    """Like :func:`validate_config` but raise :class:`ConfigError` on errors."""
    report = validate_config(cfg)
    if not report.ok:
        raise ConfigError("; ".join(report.errors))
    return report


# ---------------------------------------------------------------------------
# Images and data
# ---------------------------------------------------------------------------


class CartesianImage:
    """Emission values on the ``(2M+1) x (2M+1)`` grid ``x = i R / M``.

    ``values[M + i1, M + i2]`` is the pixel at ``(i1, i2) R / M``. Pixels with
    ``|x| >= R`` are forced to zero on construction.
    """

    __slots__ = ("half_width_M", "radius_R", "values")

    def __init__(self, values: np.ndarray, radius_R: float) -> None:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 == 0:
            raise ConfigError(f"image must be (2M+1)x(2M+1), got {arr.shape}")
        if arr.shape[0] < 3:
            raise ConfigError("image half-width M must be >= 1")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("image values must be finite")
        if not radius_R > 0:
            raise ConfigError(f"radius_R must be positive, got {radius_R}")
        self.half_width_M = (arr.shape[0] - 1) // 2
        self.radius_R = float(radius_R)
        masked = np.where(disc_mask(self.half_width_M, self.radius_R), arr, 0.0)
        self.values = _frozen(masked)

    @classmethod
    def zeros(cls, M: int, radius_R: float) -> "CartesianImage":
        return cls(np.zeros((2 * M + 1, 2 * M + 1)), radius_R)

    def pixel(self, i1: int, i2: int) -> float:
        M = self.half_width_M
        return float(self.values[M + i1, M + i2])

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        return pixel_coordinates(self.half_width_M, self.radius_R)

    def to_dict(self) -> dict[str, Any]:
        return {"M": self.half_width_M, "radius_R": self.radius_R}


class VSinogram:
    """Attenuated V-line data ``values[p, q] ~ V_mu f(phi_p, arcsin(s_q/R))``."""

    __slots__ = ("P", "Q", "radius_R", "mu", "values")

    def __init__(self, values: np.ndarray, radius_R: float, mu: float) -> None:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ConfigError(f"sinogram must be P x (Q+1), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("sinogram values must be finite")
        self.P = arr.shape[0]
        self.Q = arr.shape[1] - 1
        self.radius_R = float(radius_R)
        self.mu = float(mu)
        self.values = _frozen(arr)

    def to_dict(self) -> dict[str, Any]:
        return {"P": self.P, "Q": self.Q, "radius_R": self.radius_R, "mu": self.mu}


class HarmonicStack:
    """Per-harmonic complex radial profiles, rows in wrap-around DFT order.

    ``role`` tells what the columns sample:

    * ``"data"``  -- ``g_n(psi_q)`` for q = 0..Q (Q+1 columns)
    * ``"rhs"``   -- scaled data ``g~_n(s_q)`` for q = 0..Q-1
    * ``"image"`` -- recovered ``f_n(r_j)`` at the midpoint radii
    """

    __slots__ = ("P", "Q", "radius_R", "mu", "role", "coeffs")

    ROLES = ("data", "rhs", "image")

    def __init__(
        self,
        coeffs: np.ndarray,
        Q: int,
        radius_R: float,
        role: str,
        mu: float | None = None,
    ) -> None:
        if role not in self.ROLES:
            raise ConfigError(f"unknown harmonic stack role {role!r}")
        arr = np.asarray(coeffs, dtype=np.complex128)
        expected = Q + 1 if role == "data" else Q
        if arr.ndim != 2 or arr.shape[1] != expected:
            raise ConfigError(
                f"{role} stack needs {expected} columns, got shape {arr.shape}"
            )
        self.P = arr.shape[0]
        self.Q = int(Q)
        self.radius_R = float(radius_R)
        self.mu = None if mu is None else float(mu)
        self.role = role
        self.coeffs = _frozen(arr, np.complex128)

    def to_dict(self) -> dict[str, Any]:
        return {
            "P": self.P,
            "Q": self.Q,
            "radius_R": self.radius_R,
            "mu": self.mu,
            "role": self.role,
        }


class PolarImage:
    """Values on the polar grid ``(phi_p, r_j)``; ``values[p, j]``."""

    __slots__ = ("P", "Q", "radius_R", "values")

    def __init__(self, values: np.ndarray, radius_R: float) -> None:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ConfigError(f"polar image must be P x Q, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("polar image values must be finite")
        self.P, self.Q = arr.shape
        self.radius_R = float(radius_R)
        self.values = _frozen(arr)

    @property
    def radii(self) -> np.ndarray:
        return midpoint_radii(self.radius_R, self.Q)

    @property
    def angles(self) -> np.ndarray:
        return vertex_angles(self.P)

    def to_dict(self) -> dict[str, Any]:
        return {"P": self.P, "Q": self.Q, "radius_R": self.radius_R}
