"""Analytic ellipse phantoms, rasterization and centered-disc oracles."""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

import config
from src.errors import ContainerError, DomainError, PhantomError
from src.model import CartesianImage, ScanConfig, opening_angles, pixel_coordinates

logger = logging.getLogger(__name__)

# Reproduction fixture; the published phantom is not available numerically.
# Rims fall off along a raised cosine over the outer half of each radius.
THREE_DISCS: list[dict[str, Any]] = [
    {"center": [-2.0, 1.5], "axes": [2.0, 2.0], "rotation": 0.0, "intensity": 1.0, "edge": 0.5},
    {"center": [2.5, -1.0], "axes": [1.5, 1.5], "rotation": 0.0, "intensity": 0.6, "edge": 0.5},
    {"center": [1.0, -4.0], "axes": [1.0, 1.0], "rotation": 0.0, "intensity": 0.8, "edge": 0.5},
]
CENTERED_DISC_RADIUS = 2.0


class Ellipse:
    """One additive component of a phantom."""

    __slots__ = ("center", "axes", "rotation", "intensity", "edge")

    def __init__(
        self,
        center: tuple[float, float],
        axes: tuple[float, float],
        rotation: float = 0.0,
        intensity: float = 1.0,
        edge: float = 0.0,
    ) -> None:
        self.center = (float(center[0]), float(center[1]))
        self.axes = (float(axes[0]), float(axes[1]))
        self.rotation = float(rotation)
        self.intensity = float(intensity)
        self.edge = float(edge)
        if self.axes[0] <= 0 or self.axes[1] <= 0:
            raise DomainError(f"ellipse semi-axes must be positive, got {self.axes}")
        if not 0.0 <= self.edge <= 1.0:
            raise DomainError(f"edge width must lie in [0, 1], got {self.edge}")

    def _rho(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        dx = x1 - self.center[0]
        dy = x2 - self.center[1]
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        u = (c * dx + s * dy) / self.axes[0]
        v = (-s * dx + c * dy) / self.axes[1]
        return np.sqrt(u * u + v * v)

    def contains(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return self._rho(x1, x2) <= 1.0

    def profile(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Relative intensity in ``[0, 1]``.

        Flat inside ``rho <= 1 - edge`` and falling to zero along a raised
        cosine on the rim, ``rho`` being the normalised elliptic radius.
        ``edge = 0`` is the indicator of the ellipse.
        """
        rho = self._rho(x1, x2)
        if self.edge == 0.0:
            return (rho <= 1.0).astype(np.float64)
        inner = 1.0 - self.edge
        t = np.clip((rho - inner) / self.edge, 0.0, 1.0)
        return 0.5 * (1.0 + np.cos(np.pi * t))

    def max_radius(self, n_boundary: int = 4096) -> float:
        """Largest distance of the ellipse boundary from the origin."""
        theta = np.linspace(0.0, 2.0 * np.pi, n_boundary, endpoint=False)
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        a, b = self.axes
        bx = self.center[0] + a * np.cos(theta) * c - b * np.sin(theta) * s
        by = self.center[1] + a * np.cos(theta) * s + b * np.sin(theta) * c
        return float(np.max(np.hypot(bx, by)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "center": list(self.center),
            "axes": list(self.axes),
            "rotation": self.rotation,
            "intensity": self.intensity,
            "edge": self.edge,
        }


class EllipsePhantom:
    """Union of constant-intensity ellipses (values add where they overlap)."""

    __slots__ = ("components",)

    def __init__(self, components: list[Ellipse] | None = None) -> None:
        self.components: list[Ellipse] = list(components or [])

    @classmethod
    def from_dicts(cls, items: list[dict[str, Any]]) -> "EllipsePhantom":
        try:
            comps = [
                Ellipse(
                    center=tuple(item["center"]),
                    axes=tuple(item["axes"]),
                    rotation=item.get("rotation", 0.0),
                    intensity=item.get("intensity", 1.0),
                    edge=item.get("edge", 0.0),
                )
                for item in items
            ]
        except (KeyError, TypeError, IndexError) as exc:
            raise ContainerError(f"malformed phantom component: {exc}") from exc
        return cls(comps)

    def to_dicts(self) -> list[dict[str, Any]]:
        return [c.to_dict() for c in self.components]

    def check_support(self, radius_R: float, eps: float = config.SUPPORT_EPS) -> None:
        """Raise :class:`PhantomError` for the first component leaving
        the disc of radius ``R (1 - eps)``."""
        limit = radius_R * (1.0 - eps)
        for idx, comp in enumerate(self.components):
            reach = comp.max_radius()
            if reach >= limit:
                raise PhantomError(
                    f"component {idx} reaches |x| = {reach:.4g} >= {limit:.4g}", idx
                )


def preset(name: str) -> EllipsePhantom:
    """Named fixtures: ``three-discs`` and ``disc`` (centered, radius 2)."""
    if name == "three-discs":
        return EllipsePhantom.from_dicts(THREE_DISCS)
    if name == "disc":
        return centered_disc(CENTERED_DISC_RADIUS)
    raise PhantomError(f"unknown phantom preset {name!r}", -1)


def centered_disc(a: float, intensity: float = 1.0) -> EllipsePhantom:
    return EllipsePhantom([Ellipse((0.0, 0.0), (a, a), 0.0, intensity)])


def load_phantom(path: str | Path) -> EllipsePhantom:
    try:
        with open(path, encoding="utf-8") as f:
            items = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ContainerError(f"cannot read phantom {path}: {exc}") from exc
    if not isinstance(items, list):
        raise ContainerError(f"phantom file {path} must hold a JSON list")
    return EllipsePhantom.from_dicts(items)


def save_phantom(path: str | Path, phantom: EllipsePhantom) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(phantom.to_dicts(), f, indent=2)


def rasterize(
    phantom: EllipsePhantom, M: int, radius_R: float, supersample: int = 1
) -> CartesianImage:
    """Sample the phantom on the ``(2M+1)^2`` grid.

    With ``supersample = 1`` a pixel holds the summed component profiles
    at its centre. Larger values average an
    ``s x s`` block of sub-pixel samples instead.
    """
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    if supersample < 1:
        raise DomainError(f"supersample must be >= 1, got {supersample}")
    phantom.check_support(radius_R)
    x1, x2 = pixel_coordinates(M, radius_R)
    h = radius_R / M
    offsets = (np.arange(supersample) + 0.5) / supersample - 0.5
    values = np.zeros_like(x1)
    for comp in phantom.components:
        hits = np.zeros_like(x1)
        for d1 in offsets:
            for d2 in offsets:
                hits += comp.profile(x1 + d1 * h, x2 + d2 * h)
        values += comp.intensity * hits / (supersample * supersample)
    logger.debug(
        "Rasterized %d components on M=%d (supersample=%d)",
        len(phantom.components), M, supersample,
    )
    return CartesianImage(values, radius_R)


# ---------------------------------------------------------------------------
# Analytic oracles
# ---------------------------------------------------------------------------


def analytic_vline_centered_disc(
    a: float,
    intensity: float,
    cfg: ScanConfig,
    phi: float,
    psi: float | np.ndarray,
) -> float | np.ndarray:
    """Exact attenuated V-line transform of a centered disc of radius ``a``.

    Independent of ``phi``. Each branch crosses the disc along a chord of
    half-length ``h = sqrt(a^2 - s^2)`` centred at distance ``R cos psi``
    from the vertex, with ``s = R sin psi``.
    """
    R = cfg.radius_R
    if not 0 < a < R:
        raise DomainError(f"disc radius must satisfy 0 < a < R, got a={a}")
    psi_arr = np.asarray(psi, dtype=np.float64)
    if np.any(psi_arr < 0) or np.any(psi_arr > np.pi / 2):
        raise DomainError("opening angle must lie in [0, pi/2]")
    s = R * np.sin(psi_arr)
    h = np.sqrt(np.maximum(a * a - s * s, 0.0))
    hit = s < a
    mu = cfg.mu
    if mu == 0.0:
        out = intensity * 4.0 * h
    else:
        near = R * np.cos(psi_arr) - h
        out = intensity * (2.0 / mu) * np.exp(-mu * near) * (-np.expm1(-2.0 * mu * h))
    out = np.where(hit, out, 0.0)
    return float(out) if np.ndim(psi) == 0 else out


def analytic_sinogram_centered_disc(
    a: float, intensity: float, cfg: ScanConfig
) -> np.ndarray:
    """Oracle sinogram ``P x (Q+1)`` on the scan grid of ``cfg``."""
    column = analytic_vline_centered_disc(a, intensity, cfg, 0.0, opening_angles(cfg.Q))
    return np.tile(column, (cfg.P, 1))
