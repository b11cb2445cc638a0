"""Angular Fourier analysis and synthesis over the vertex angle."""

from __future__ import annotations

import logging

import numpy as np

import config
from src.errors import ConfigError, SymmetryError
from src.model import HarmonicStack, PolarImage, ScanConfig, VSinogram, radii_s

logger = logging.getLogger(__name__)


def harmonic_indices(P: int) -> np.ndarray:
    """Harmonic index of each row in wrap-around order: 0..P/2-1, -P/2..-1."""
    return np.fft.fftfreq(P, d=1.0 / P).astype(int)


def _dft_matrix(P: int, sign: int) -> np.ndarray:
    idx = np.arange(P)
    return np.exp(sign * 2j * np.pi * np.outer(idx, idx) / P)


def _forward(values: np.ndarray, method: str) -> np.ndarray:
    P = values.shape[0]
    if method == "fft":
        return np.fft.fft(values, axis=0) / P
    if method == "direct":
        return _dft_matrix(P, -1) @ values / P
    raise ConfigError(f"unknown DFT method {method!r}")


def _inverse(coeffs: np.ndarray, method: str) -> np.ndarray:
    P = coeffs.shape[0]
    if method == "fft":
        return np.fft.ifft(coeffs, axis=0) * P
    if method == "direct":
        return _dft_matrix(P, 1) @ coeffs
    raise ConfigError(f"unknown DFT method {method!r}")


def analyze(sino: VSinogram, method: str | None = None) -> HarmonicStack:
    """``g_n(psi_q) = (1/P) sum_p g[p, q] exp(-i n phi_p)`` for every column."""
    method = method or config.DFT_METHOD
    coeffs = _forward(sino.values, method)
    return HarmonicStack(coeffs, sino.Q, sino.radius_R, "data", mu=sino.mu)


def max_asymmetry(stack: HarmonicStack) -> float:
    """Largest ``|c[-n] - conj(c[n])|`` relative to ``max|c|``."""
    c = stack.coeffs
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        return 0.0
    mirrored = np.roll(c[::-1], 1, axis=0)  # row k -> row (-k) mod P
    return float(np.max(np.abs(mirrored - np.conj(c))) / scale)


def synthesize(
    stack: HarmonicStack,
    method: str | None = None,
    rtol: float = config.SYMMETRY_RTOL,
) -> PolarImage:
    """``values[p, j] = Re sum_n c_n[j] exp(i n phi_p)``.

    The stack must describe a real field; a conjugate-symmetry defect or an
    imaginary residual above ``rtol`` raises :class:`SymmetryError`.
    """
    method = method or config.DFT_METHOD
    asym = max_asymmetry(stack)
    if asym > rtol:
        raise SymmetryError(
            f"harmonic stack is not conjugate symmetric (defect {asym:.3e})", asym
        )
    field = _inverse(stack.coeffs, method)
    scale = float(np.max(np.abs(field))) if field.size else 0.0
    if scale > 0:
        residual = float(np.max(np.abs(field.imag))) / scale
        logger.debug("Synthesis imaginary residual %.3e", residual)
        if residual > rtol:
            raise SymmetryError(
                f"imaginary residual {residual:.3e} after synthesis", residual
            )
    return PolarImage(field.real, stack.radius_R)


def scale_to_abel_rhs(stack: HarmonicStack, cfg: ScanConfig) -> HarmonicStack:
    """``g~_n(s_q) = 1/2 exp(mu sqrt(R^2 - s_q^2)) g_n(psi_q)`` for q < Q."""
    if stack.role != "data":
        raise ConfigError(f"expected a data stack, got role {stack.role!r}")
    if stack.Q != cfg.Q or stack.P != cfg.P:
        raise ConfigError(
            f"stack is {stack.P}x{stack.Q}, config expects {cfg.P}x{cfg.Q}"
        )
    R = cfg.radius_R
    s = radii_s(R, cfg.Q)[: cfg.Q]
    factor = 0.5 * np.exp(cfg.mu * np.sqrt(R * R - s * s))
    return HarmonicStack(
        stack.coeffs[:, : cfg.Q] * factor[None, :], cfg.Q, R, "rhs", mu=cfg.mu
    )
