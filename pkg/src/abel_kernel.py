"""Generalized Abel kernels of the per-harmonic V-line equations.

``K_n(s, r)`` is the kernel of the radial integral equation linking the
Fourier coefficients ``g_n`` of the data to ``f_n`` of the image. The
product-integration discretization freezes ``K_n`` at the midpoints
``r_j`` and integrates the weakly singular factor ``r / sqrt(r^2 - s^2)``
exactly, giving the weights ``w_{q,j}`` and an upper triangular matrix per
harmonic.
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

import config
from src.errors import DomainError
from src.model import ScanConfig, midpoint_radii, radii_s

logger = logging.getLogger(__name__)


class AbelKernelMatrix:
    """Discrete kernel ``entries[q, j] = w_{q,j} K_n(s_q, r_j)`` for j >= q."""

    __slots__ = ("n", "Q", "radius_R", "mu", "entries")

    def __init__(
        self, n: int, entries: np.ndarray, radius_R: float, mu: float
    ) -> None:
        arr = np.array(entries, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"kernel matrix must be square, got {arr.shape}")
        arr.setflags(write=False)
        self.n = int(n)
        self.Q = arr.shape[0]
        self.radius_R = float(radius_R)
        self.mu = float(mu)
        self.entries = arr

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "Q": self.Q, "radius_R": self.radius_R, "mu": self.mu}


# ---------------------------------------------------------------------------
# Chebyshev polynomials
# ---------------------------------------------------------------------------


def _clamp_unit(z: np.ndarray, what: str) -> np.ndarray:
    tol = config.CHEB_CLAMP
    if np.any(np.abs(z) > 1.0 + tol) or np.any(np.isnan(z)):
        worst = float(np.nanmax(np.abs(z))) if np.any(~np.isnan(z)) else float("nan")
        raise DomainError(f"{what} outside [-1, 1] (max |z| = {worst!r})")
    return np.clip(z, -1.0, 1.0)


def chebyshev_T(k: int, z: float | np.ndarray) -> float | np.ndarray:
    """``T_k(z) = cos(k arccos z)`` by the three-term recurrence.

    ``|k|`` is used for negative degrees (``T_{-k} = T_k``).
    """
    k = abs(int(k))
    scalar = np.ndim(z) == 0
    x = _clamp_unit(np.asarray(z, dtype=np.float64), "Chebyshev argument")
    prev = np.ones_like(x)
    if k == 0:
        out = prev
    else:
        cur = x.copy()
        for _ in range(k - 1):
            prev, cur = cur, 2.0 * x * cur - prev
        out = cur
    return float(out) if scalar else out


def _sigma_power(n: int, sigma: int) -> float:
    # sigma^n for sigma = -1 uses the parity of |n|
    if sigma == 1:
        return 1.0
    return -1.0 if abs(n) % 2 else 1.0


# ---------------------------------------------------------------------------
# Kernel evaluations
# ---------------------------------------------------------------------------


def kernel_K(
    n: int,
    s: float | np.ndarray,
    r: float | np.ndarray,
    mu: float,
    radius_R: float,
) -> float | np.ndarray:
    """Trigonometric form of ``K_n(s, r)``, valid for ``0 <= s <= r <= R``."""
    scalar = np.ndim(s) == 0 and np.ndim(r) == 0
    s_arr = np.asarray(s, dtype=np.float64)
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(s_arr > r_arr) or np.any(s_arr < 0) or np.any(r_arr > radius_R):
        raise DomainError("kernel_K requires 0 <= s <= r <= R")
    depth = np.sqrt(np.maximum(r_arr * r_arr - s_arr * s_arr, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        inner = np.where(r_arr > 0, s_arr / np.where(r_arr > 0, r_arr, 1.0), 0.0)
    a = np.arcsin(np.clip(inner, -1.0, 1.0))
    b = np.arcsin(np.clip(s_arr / radius_R, -1.0, 1.0))
    out = np.zeros(np.broadcast(s_arr, r_arr).shape)
    for sigma in (1, -1):
        out = out + _sigma_power(n, sigma) * np.exp(sigma * mu * depth) * np.cos(
            n * (a - sigma * b)
        )
    return float(out) if scalar else out


def kernel_K_chebyshev(
    n: int,
    s: float | np.ndarray,
    r: float | np.ndarray,
    mu: float,
    radius_R: float,
) -> float | np.ndarray:
    """Chebyshev form of ``K_n(s, r)`` with argument
    ``(sqrt(r^2-s^2) sqrt(R^2-s^2) + sigma s^2) / (r R)``."""
    scalar = np.ndim(s) == 0 and np.ndim(r) == 0
    s_arr = np.asarray(s, dtype=np.float64)
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(s_arr >= r_arr) or np.any(s_arr < 0) or np.any(r_arr > radius_R):
        raise DomainError("Chebyshev kernel form requires 0 <= s < r <= R")
    depth = np.sqrt(r_arr * r_arr - s_arr * s_arr)
    cross = depth * np.sqrt(radius_R * radius_R - s_arr * s_arr)
    out = np.zeros(np.broadcast(s_arr, r_arr).shape)
    for sigma in (1, -1):
        arg = (cross + sigma * s_arr * s_arr) / (r_arr * radius_R)
        out = out + _sigma_power(n, sigma) * np.exp(sigma * mu * depth) * chebyshev_T(
            n, np.atleast_1d(arg)
        ).reshape(out.shape)
    return float(out) if scalar else out


def kernel_form_crosscheck(
    n: int,
    s: float | np.ndarray,
    r: float | np.ndarray,
    mu: float,
    radius_R: float,
) -> float | np.ndarray:
    """``|trigonometric form - Chebyshev form|`` of ``K_n(s, r)``."""
    return np.abs(
        kernel_K(n, s, r, mu, radius_R) - kernel_K_chebyshev(n, s, r, mu, radius_R)
    )


def kernel_K_hat(
    n: int,
    t: float | np.ndarray,
    rho: float | np.ndarray,
    mu: float,
    radius_R: float,
) -> float | np.ndarray:
    """Substituted kernel ``K^_n(t, rho)`` on ``0 <= rho <= t <= 1, rho < 1``.

    The Chebyshev argument is evaluated as
    ``sqrt(t) sqrt((t-rho)/(1-rho)) + sigma sqrt(1-t) sqrt((1-t)/(1-rho))``
    which reduces to ``sigma sqrt(1-t)`` exactly on the diagonal.
    """
    scalar = np.ndim(t) == 0 and np.ndim(rho) == 0
    t_arr, rho_arr = np.broadcast_arrays(
        np.asarray(t, dtype=np.float64), np.asarray(rho, dtype=np.float64)
    )
    if (
        np.any(rho_arr < 0)
        or np.any(rho_arr > t_arr)
        or np.any(t_arr > 1)
        or np.any(rho_arr >= 1)
    ):
        raise DomainError("kernel_K_hat requires 0 <= rho <= t <= 1 and rho < 1")
    gap = t_arr - rho_arr
    denom = 1.0 - rho_arr
    along = np.sqrt(t_arr) * np.sqrt(gap / denom)
    across = np.sqrt(1.0 - t_arr) * np.sqrt((1.0 - t_arr) / denom)
    mu_R = mu * radius_R
    out = np.zeros(t_arr.shape)
    for sigma in (1, -1):
        arg = np.atleast_1d(along + sigma * across)
        cheb = chebyshev_T(n, arg).reshape(out.shape)
        out = out + _sigma_power(n, sigma) * np.exp(sigma * mu_R * np.sqrt(gap)) * cheb
    out = 0.5 * out
    return float(out) if scalar else out


def kernel_diagonal(n: int, t: float | np.ndarray) -> float | np.ndarray:
    """Diagonal ``k_n(t) = T_n(sqrt(1 - t))``."""
    return chebyshev_T(n, np.sqrt(1.0 - np.asarray(t, dtype=np.float64)))


def diagonal_zeros(n: int) -> np.ndarray:
    """Zeros of ``k_n`` in ``[0, 1)``, ascending."""
    n = abs(int(n))
    if n == 0:
        return np.empty(0)
    # only the roots with (2i - 1) < n lie at positive z, i.e. t < 1
    i = np.arange(1, n // 2 + 1)
    x = np.cos((2 * i - 1) * np.pi / (2 * n))
    return np.sort(1.0 - x * x)


# ---------------------------------------------------------------------------
# Product integration
# ---------------------------------------------------------------------------


def weight_matrix(radius_R: float, Q: int) -> np.ndarray:
    """All weights ``w_{q,j}`` as a Q x Q upper triangular array.

    ``w_{q,j} = sqrt(s_{j+1}^2 - s_q^2) - sqrt(s_j^2 - s_q^2)``, evaluated in
    the cancellation-free form ``h (2j+1) / (sqrt((j+1)^2-q^2) + sqrt(j^2-q^2))``.
    """
    h = radius_R / Q
    q = np.arange(Q)[:, None].astype(np.float64)
    j = np.arange(Q)[None, :].astype(np.float64)
    upper = j >= q
    outer = np.sqrt(np.where(upper, (j + 1) ** 2 - q * q, 1.0))
    inner = np.sqrt(np.where(upper, np.maximum(j * j - q * q, 0.0), 0.0))
    return np.where(upper, h * (2.0 * j + 1.0) / (outer + inner), 0.0)


def weight_w(q: int, j: int, radius_R: float, Q: int) -> float:
    """Single product-integration weight; zero below the diagonal."""
    if j < q:
        return 0.0
    h = radius_R / Q
    outer = np.sqrt((j + 1) ** 2 - q * q)
    inner = np.sqrt(j * j - q * q)
    return float(h * (2 * j + 1) / (outer + inner))


def assemble_matrix(n: int, cfg: ScanConfig) -> AbelKernelMatrix:
    """Assemble ``(w_{q,j} K_n(s_q, r_j))_{q,j}`` for harmonic ``n``."""
    Q = cfg.Q
    R = cfg.radius_R
    s = radii_s(R, Q)[:Q][:, None]
    r = midpoint_radii(R, Q)[None, :]
    upper = np.arange(Q)[None, :] >= np.arange(Q)[:, None]
    # below the diagonal s > r; evaluate at a harmless point and zero it
    s_eval = np.where(upper, s, 0.0)
    r_eval = np.broadcast_to(r, (Q, Q))
    K = kernel_K(n, s_eval, r_eval, cfg.mu, R)
    entries = np.where(upper, weight_matrix(R, Q) * K, 0.0)
    logger.debug("Assembled kernel matrix n=%d (Q=%d, mu=%g)", n, Q, cfg.mu)
    return AbelKernelMatrix(n, entries, R, cfg.mu)
