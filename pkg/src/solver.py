"""Per-harmonic linear algebra: direct and Tikhonov solves, conditioning."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg as la

import config
from src.abel_kernel import AbelKernelMatrix, assemble_matrix
from src.errors import (
    ConvergenceError,
    FactorizationError,
    SingularPivotError,
    SolverError,
)
from src.model import ScanConfig

logger = logging.getLogger(__name__)


def _as_columns(rhs: np.ndarray) -> tuple[np.ndarray, tuple[int, ...], bool]:
    """Split a complex right-hand side (vector or Q x k) into real columns."""
    rhs = np.asarray(rhs)
    shape = rhs.shape
    cols = rhs.reshape(shape[0], -1)
    is_complex = np.iscomplexobj(cols)
    if is_complex:
        stacked = np.concatenate([cols.real, cols.imag], axis=1)
    else:
        stacked = cols.astype(np.float64)
    return stacked, shape, is_complex


def _from_columns(x: np.ndarray, shape: tuple[int, ...], is_complex: bool) -> np.ndarray:
    if is_complex:
        k = x.shape[1] // 2
        x = x[:, :k] + 1j * x[:, k:]
    return x.reshape(shape)


# ---------------------------------------------------------------------------
# Direct solve
# ---------------------------------------------------------------------------


def solve_triangular(
    K: AbelKernelMatrix, rhs: np.ndarray, pivot_rtol: float = config.PIVOT_RTOL
) -> np.ndarray:
    """Solve ``K x = rhs`` by back substitution (``K`` is upper triangular).

    Raises :class:`SingularPivotError` naming the first row whose diagonal
    entry falls below ``pivot_rtol * max|K|``.
    """
    A = K.entries
    floor = pivot_rtol * float(np.max(np.abs(A))) if A.size else 0.0
    small = np.flatnonzero(np.abs(np.diag(A)) <= floor)
    if small.size:
        row = int(small[0])
        raise SingularPivotError(
            f"near-zero pivot {A[row, row]:.3e} at row {row} (n={K.n})", row
        )
    b, shape, is_complex = _as_columns(rhs)
    x = la.solve_triangular(A, b, lower=False, check_finite=False)
    return _from_columns(x, shape, is_complex)


# ---------------------------------------------------------------------------
# Tikhonov
# ---------------------------------------------------------------------------


class TikhonovSystem:
    """Normal equations ``(K^T K + lambda I) x = K^T g`` for one kernel matrix.

    ``K^T K`` is formed once; the Cholesky factor is cached per ``lambda`` so
    real/imaginary parts and the ``+-n`` pair share one factorization.
    """

    __slots__ = ("K", "_gram", "_factors")

    def __init__(self, K: AbelKernelMatrix) -> None:
        self.K = K
        self._gram = K.entries.T @ K.entries
        self._factors: dict[float, tuple[np.ndarray, bool]] = {}

    def factor(self, lam: float) -> tuple[np.ndarray, bool]:
        if lam < 0 or not np.isfinite(lam):
            raise SolverError(f"regularization parameter must be >= 0, got {lam}")
        cached = self._factors.get(lam)
        if cached is not None:
            return cached
        A = self._gram + lam * np.eye(self._gram.shape[0])
        try:
            cho = la.cho_factor(A, lower=False, check_finite=False)
        except la.LinAlgError as exc:
            raise FactorizationError(
                f"Cholesky breakdown for n={self.K.n}, lambda={lam:g}: {exc}"
            ) from exc
        if np.any(np.diag(cho[0]) <= 0) or not np.all(np.isfinite(cho[0])):
            raise FactorizationError(
                f"non-positive pivot in Cholesky factor (n={self.K.n}, lambda={lam:g})"
            )
        self._factors[lam] = cho
        return cho

    def solve(self, rhs: np.ndarray, lam: float) -> np.ndarray:
        cho = self.factor(lam)
        b, shape, is_complex = _as_columns(rhs)
        x = la.cho_solve(cho, self.K.entries.T @ b, check_finite=False)
        return _from_columns(x, shape, is_complex)


def solve_tikhonov(K: AbelKernelMatrix, rhs: np.ndarray, lam: float) -> np.ndarray:
    """Minimizer of ``|K x - rhs|^2 + lam |x|^2`` via Cholesky."""
    return TikhonovSystem(K).solve(rhs, lam)


def tikhonov_objective(
    K: AbelKernelMatrix, x: np.ndarray, rhs: np.ndarray, lam: float
) -> float:
    residual = K.entries @ x - rhs
    return float(np.vdot(residual, residual).real + lam * np.vdot(x, x).real)


# ---------------------------------------------------------------------------
# Conditioning
# ---------------------------------------------------------------------------


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint column pairings covering all pairs once per sweep."""
    players = list(range(n + (n % 2)))
    dummy = n if n % 2 else -1
    half = len(players) // 2
    rounds = []
    for _ in range(len(players) - 1):
        top, bottom = players[:half], players[half:][::-1]
        pairs = [
            (min(a, b), max(a, b))
            for a, b in zip(top, bottom)
            if a != dummy and b != dummy
        ]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def singular_values(
    K: AbelKernelMatrix | np.ndarray,
    tol: float = config.JACOBI_TOL,
    max_sweeps: int = config.JACOBI_MAX_SWEEPS,
) -> np.ndarray:
    """Singular values by one-sided (Hestenes) Jacobi, descending.

    Each round rotates a set of disjoint column pairs at once. A sweep with no
    pair whose cosine exceeds ``tol`` ends the iteration.
    """
    A = np.array(K.entries if isinstance(K, AbelKernelMatrix) else K, dtype=np.float64)
    if A.ndim != 2:
        raise SolverError(f"expected a matrix, got shape {A.shape}")
    if A.shape[1] > A.shape[0]:
        A = A.T.copy()
    n = A.shape[1]
    rounds = _round_robin(n) if n > 1 else []
    off = 0.0
    for sweep in range(max_sweeps):
        off = 0.0
        for p, q in rounds:
            ap, aq = A[:, p], A[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            norm = np.sqrt(alpha * beta)
            cosine = np.where(norm > 0, np.abs(gamma) / np.where(norm > 0, norm, 1.0), 0.0)
            off = max(off, float(cosine.max(initial=0.0)))
            rotate = cosine > tol
            if not np.any(rotate):
                continue
            zeta = (beta - alpha) / (2.0 * np.where(rotate, gamma, 1.0))
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = np.where(rotate, 1.0 / np.hypot(1.0, t), 1.0)
            s = np.where(rotate, c * t, 0.0)
            A[:, p] = c * ap - s * aq
            A[:, q] = s * ap + c * aq
        if off <= tol:
            logger.debug("Jacobi SVD converged after %d sweeps", sweep + 1)
            break
    else:
        raise ConvergenceError(
            f"one-sided Jacobi did not converge in {max_sweeps} sweeps "
            f"(off-diagonal {off:.3e})",
            off,
        )
    return np.sort(np.linalg.norm(A, axis=0))[::-1]


def condition_number(K: AbelKernelMatrix | np.ndarray) -> float:
    """``sigma_max / sigma_min``; ``inf`` for a singular matrix."""
    sv = singular_values(K)
    if sv.size == 0 or sv[-1] == 0.0:
        logger.warning("Singular kernel matrix: infinite condition number")
        return math.inf
    return float(sv[0] / sv[-1])


def conditioning_table(
    cfg: ScanConfig, n_max: int, spectra: bool = False
) -> tuple[list[tuple[int, float]], dict[int, np.ndarray]]:
    """Condition numbers of ``K_n`` for n = 0..n_max, optionally the spectra."""
    def one(n: int) -> tuple[int, np.ndarray]:
        return n, singular_values(assemble_matrix(n, cfg))

    with ThreadPoolExecutor(max_workers=config.thread_count()) as pool:
        results = list(pool.map(one, range(n_max + 1)))

    rows: list[tuple[int, float]] = []
    spectra_by_n: dict[int, np.ndarray] = {}
    for n, sv in results:
        kappa = math.inf if sv[-1] == 0.0 else float(sv[0] / sv[-1])
        rows.append((n, kappa))
        if spectra:
            spectra_by_n[n] = sv
    logger.info("Conditioning table for n=0..%d computed", n_max)
    return rows, spectra_by_n
