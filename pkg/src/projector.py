"""Discrete forward operators on a :class:`CartesianImage`.

The attenuated V-line transform is computed by sampling both branches of
every V-line at ``2M+1`` equidistant points on ``[0, 2R]`` (step ``R/M``)
and bilinear interpolation of the image. The exponential Radon transform is
a midpoint-rule validation oracle for the V-line/Radon identity.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.ndimage import map_coordinates

import config
from src.errors import ConfigError
from src.model import (
    CartesianImage,
    ScanConfig,
    VSinogram,
    opening_angles,
    unit_vector,
    vertex_angles,
)

logger = logging.getLogger(__name__)


def bilinear_sample_many(img: CartesianImage, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at arbitrary points; zero outside the disc."""
    M = img.half_width_M
    R = img.radius_R
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    coords = np.stack([x1.ravel() * M / R + M, x2.ravel() * M / R + M])
    vals = map_coordinates(img.values, coords, order=1, mode="constant", cval=0.0)
    inside = (x1 * x1 + x2 * x2).ravel() < R * R
    return np.where(inside, vals, 0.0).reshape(x1.shape)


def bilinear_sample(img: CartesianImage, x: tuple[float, float]) -> float:
    """Bilinear interpolation of the four pixels around ``x``."""
    return float(bilinear_sample_many(img, np.array([x[0]]), np.array([x[1]]))[0])


def _branch_nodes(M: int, radius_R: float, mu: float) -> tuple[np.ndarray, np.ndarray]:
    step = radius_R / M
    r = np.arange(2 * M + 1) * step
    return r, step * np.exp(-mu * r)


def vline_value(
    img: CartesianImage, mu: float, phi: float, psi: float, n_steps: int | None = None
) -> float:
    """One V-line integral with vertex ``R Phi(phi)`` and half opening ``psi``.

    ``n_steps`` sets the branch step ``R / n_steps``; it defaults to the
    image half-width ``M``.
    """
    n_steps = n_steps or img.half_width_M
    R = img.radius_R
    r, weights = _branch_nodes(n_steps, R, mu)
    vertex = R * unit_vector(phi)[0]
    total = 0.0
    for sigma in (1, -1):
        direction, _ = unit_vector(phi - sigma * psi)
        px = vertex[0] - r * direction[0]
        py = vertex[1] - r * direction[1]
        total += float(np.dot(bilinear_sample_many(img, px, py), weights))
    return total


def forward_vline(img: CartesianImage, cfg: ScanConfig) -> VSinogram:
    """Attenuated V-line sinogram ``P x (Q+1)`` of ``img``."""
    M = img.half_width_M
    R = img.radius_R
    if abs(R - cfg.radius_R) > 1e-12 * R:
        raise ConfigError(f"image radius {R} does not match scan radius {cfg.radius_R}")
    if M != cfg.M:
        logger.info("Projecting image with M=%d (config M=%d)", M, cfg.M)
    r, weights = _branch_nodes(M, R, cfg.mu)
    phis = vertex_angles(cfg.P)
    psis = opening_angles(cfg.Q)

    def row(phi: float) -> np.ndarray:
        out = np.zeros(psis.size)
        vertex = R * unit_vector(phi)[0]
        for sigma in (1, -1):
            direction, _ = unit_vector(phi - sigma * psis)  # (2, Q+1)
            px = vertex[0] - np.outer(direction[0], r)
            py = vertex[1] - np.outer(direction[1], r)
            out += bilinear_sample_many(img, px, py) @ weights
        return out

    with ThreadPoolExecutor(max_workers=config.thread_count()) as pool:
        rows = list(pool.map(row, phis))
    logger.info("Forward projection: P=%d, Q=%d, M=%d, mu=%g", cfg.P, cfg.Q, M, cfg.mu)
    return VSinogram(np.vstack(rows), R, cfg.mu)


def forward_exponential_radon(
    img: CartesianImage, nu: float, alpha: float, s: float, n_samples: int
) -> float:
    """``int f(s Phi(alpha) + t Phi(alpha)^perp) exp(nu t) dt`` over the chord.

    Midpoint rule with ``n_samples`` nodes on ``[-sqrt(R^2-s^2), sqrt(R^2-s^2)]``.
    """
    R = img.radius_R
    if abs(s) >= R:
        return 0.0
    half = np.sqrt(R * R - s * s)
    dt = 2.0 * half / n_samples
    t = -half + (np.arange(n_samples) + 0.5) * dt
    e, e_perp = unit_vector(alpha)
    px = s * e[0] + t * e_perp[0]
    py = s * e[1] + t * e_perp[1]
    vals = bilinear_sample_many(img, px, py)
    return float(np.dot(vals, np.exp(nu * t)) * dt)


def exponential_radon_residual(
    img: CartesianImage,
    cfg: ScanConfig,
    phi: float,
    psi: float,
    n_samples: int = 4001,
) -> float:
    """``|V f(phi, psi) - exp(-R mu cos psi) sum_sigma T_{-mu} f(pi/2 + phi - sigma psi,
    sigma R sin psi)|`` with both sides evaluated by this module's quadratures."""
    R = cfg.radius_R
    mu = cfg.mu
    lhs = vline_value(img, mu, phi, psi)
    rhs = 0.0
    for sigma in (1, -1):
        rhs += forward_exponential_radon(
            img, -mu, np.pi / 2 + phi - sigma * psi, sigma * R * np.sin(psi), n_samples
        )
    rhs *= np.exp(-R * mu * np.cos(psi))
    return abs(lhs - rhs)


lemma1_residual = exponential_radon_residual
