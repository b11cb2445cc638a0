"""End-to-end reconstruction (steps N1-N4), noise simulation and metrics."""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Iterator

import numpy as np

import config
from src.abel_kernel import AbelKernelMatrix, assemble_matrix, diagonal_zeros
from src.errors import (
    ConfigError,
    NoiseError,
    PhysicsWarning,
    ReconstructionError,
    SingularPivotError,
    SolverError,
)
from src.harmonics import analyze, harmonic_indices, scale_to_abel_rhs, synthesize
from src.model import (
    CartesianImage,
    HarmonicStack,
    PolarImage,
    ScanConfig,
    VSinogram,
    pixel_coordinates,
    require_valid,
)
from src.solver import TikhonovSystem, solve_triangular

logger = logging.getLogger(__name__)

STAGES = ("assembly", "N1", "N2", "N3", "N4")


class StageTimer:
    """Wall-clock seconds per pipeline stage (accumulated)."""

    __slots__ = ("seconds",)

    def __init__(self) -> None:
        self.seconds: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.seconds[name] = self.seconds.get(name, 0.0) + elapsed

    @property
    def total(self) -> float:
        return sum(self.seconds.values())

    def to_dict(self) -> dict[str, float]:
        return {**self.seconds, "total": self.total}


class KernelBank:
    """Kernel matrices and their normal equations, cached per ``|n|``.

    ``K_{-n} = K_n``, so one entry serves both members of a harmonic pair.
    Bound to one ``(mu, R, Q)``.
    """

    __slots__ = ("cfg", "_systems")

    def __init__(self, cfg: ScanConfig) -> None:
        self.cfg = cfg
        self._systems: dict[int, TikhonovSystem] = {}

    def matches(self, cfg: ScanConfig) -> bool:
        return (
            cfg.mu == self.cfg.mu
            and cfg.radius_R == self.cfg.radius_R
            and cfg.Q == self.cfg.Q
        )

    def system(self, n: int) -> TikhonovSystem:
        key = abs(int(n))
        sys_ = self._systems.get(key)
        if sys_ is None:
            sys_ = TikhonovSystem(assemble_matrix(key, self.cfg))
            self._systems[key] = sys_
        return sys_

    def matrix(self, n: int) -> AbelKernelMatrix:
        return self.system(n).K

    def precompute(self, P: int) -> None:
        """Assemble every ``K_{|n|}`` needed for ``P`` vertex angles."""
        needed = [m for m in range(P // 2 + 1) if m not in self._systems]
        if not needed:
            return
        with ThreadPoolExecutor(max_workers=config.thread_count()) as pool:
            built = list(pool.map(lambda m: TikhonovSystem(assemble_matrix(m, self.cfg)), needed))
        self._systems.update(zip(needed, built))
        logger.debug("Kernel bank: assembled %d matrices", len(needed))


def _solve_group(
    bank: KernelBank, m: int, lam: float, rows: list[int], ns: list[int], rhs: np.ndarray
) -> tuple[list[int], np.ndarray]:
    """Solve the systems of all harmonics ``+-m`` sharing one lambda."""
    system = bank.system(m)
    block = rhs[rows].T  # Q x k
    n_label = ns[0]
    try:
        if lam == 0.0:
            try:
                x = solve_triangular(system.K, block)
            except SingularPivotError as exc:
                zero_radii = bank.cfg.radius_R * np.sqrt(1.0 - diagonal_zeros(m))
                logger.warning(
                    "n=%d: %s; diagonal vanishes at s=%s; falling back to Tikhonov lambda=%g",
                    n_label, exc, np.array2string(zero_radii, precision=4), config.LAMBDA0_FALLBACK,
                )
                x = system.solve(block, config.LAMBDA0_FALLBACK)
        else:
            x = system.solve(block, lam)
    except SolverError as exc:
        raise ReconstructionError(f"harmonic n={n_label}: {exc}", n_label) from exc
    return rows, x.T


def solve_harmonics(
    rhs: HarmonicStack, cfg: ScanConfig, bank: KernelBank | None = None
) -> HarmonicStack:
    """Step N2 after scaling: recover ``f_n(r_j)`` for every harmonic."""
    bank = bank or KernelBank(cfg)
    if not bank.matches(cfg):
        raise ConfigError("kernel bank was built for a different scan geometry")
    ns = harmonic_indices(cfg.P)
    groups: dict[tuple[int, float], tuple[list[int], list[int]]] = {}
    for row, n in enumerate(ns):
        key = (abs(int(n)), cfg.lambda_for(int(n)))
        rows_, ns_ = groups.setdefault(key, ([], []))
        rows_.append(row)
        ns_.append(int(n))

    coeffs = rhs.coeffs
    out = np.zeros((cfg.P, cfg.Q), dtype=np.complex128)
    bank.precompute(cfg.P)
    with ThreadPoolExecutor(max_workers=config.thread_count()) as pool:
        futures = [
            pool.submit(_solve_group, bank, m, lam, rows_, ns_, coeffs)
            for (m, lam), (rows_, ns_) in groups.items()
        ]
        for fut in futures:
            rows_, x = fut.result()
            out[rows_] = x
    return HarmonicStack(out, cfg.Q, cfg.radius_R, "image", mu=cfg.mu)


def check_inputs(sino: VSinogram, cfg: ScanConfig) -> None:
    report = require_valid(cfg)
    for msg in report.warnings:
        warnings.warn(msg, PhysicsWarning, stacklevel=3)
    if sino.P != cfg.P or sino.Q != cfg.Q:
        raise ConfigError(
            f"sinogram is {sino.P}x{sino.Q + 1}, config expects {cfg.P}x{cfg.Q + 1}"
        )
    if abs(sino.radius_R - cfg.radius_R) > 1e-12 * cfg.radius_R:
        raise ConfigError(
            f"sinogram radius {sino.radius_R} does not match config {cfg.radius_R}"
        )


def reconstruct_polar(
    sino: VSinogram,
    cfg: ScanConfig,
    bank: KernelBank | None = None,
    timer: StageTimer | None = None,
) -> PolarImage:
    """Steps N1-N3: harmonic analysis, per-harmonic solves, synthesis."""
    check_inputs(sino, cfg)
    timer = timer or StageTimer()
    bank = bank or KernelBank(cfg)
    with timer.stage("assembly"):
        bank.precompute(cfg.P)
    with timer.stage("N1"):
        data = analyze(sino)
    with timer.stage("N2"):
        rhs = scale_to_abel_rhs(data, cfg)
        f_stack = solve_harmonics(rhs, cfg, bank)
    with timer.stage("N3"):
        polar = synthesize(f_stack)
    return polar


def reconstruct(
    sino: VSinogram,
    cfg: ScanConfig,
    bank: KernelBank | None = None,
    timer: StageTimer | None = None,
) -> CartesianImage:
    """Invert the attenuated V-line transform (steps N1-N4)."""
    timer = timer or StageTimer()
    polar = reconstruct_polar(sino, cfg, bank, timer)
    with timer.stage("N4"):
        image = resample_polar_to_cartesian(polar, cfg.M, cfg.radius_R)
    logger.info(
        "Reconstruction P=%d Q=%d M=%d mu=%g done in %.3fs",
        cfg.P, cfg.Q, cfg.M, cfg.mu, timer.total,
    )
    return image


def resample_polar_to_cartesian(pol: PolarImage, M: int, radius_R: float) -> CartesianImage:
    """Bilinear interpolation in ``(r, phi)``, periodic in ``phi``.

    Radii below ``r_0`` or above ``r_{Q-1}`` are clamped to the end nodes.
    """
    P, Q = pol.P, pol.Q
    x1, x2 = pixel_coordinates(M, radius_R)
    r = np.hypot(x1, x2)
    phi = np.mod(np.arctan2(x2, x1), 2.0 * np.pi)

    a = phi * P / (2.0 * np.pi)
    p0f = np.floor(a)
    wa = a - p0f
    p0 = p0f.astype(int) % P
    p1 = (p0 + 1) % P

    rho = np.clip(r * Q / pol.radius_R - 0.5, 0.0, Q - 1)
    j0 = np.minimum(np.floor(rho).astype(int), max(Q - 2, 0))
    wr = rho - j0
    j1 = np.minimum(j0 + 1, Q - 1)

    v = pol.values
    values = (
        (1 - wa) * (1 - wr) * v[p0, j0]
        + (1 - wa) * wr * v[p0, j1]
        + wa * (1 - wr) * v[p1, j0]
        + wa * wr * v[p1, j1]
    )
    return CartesianImage(values, radius_R)


def poisson_noise(
    sino: VSinogram, total_counts: int, seed: int | None = config.DEFAULT_SEED
) -> tuple[VSinogram, int]:
    """Photon-limited data: scale to ``total_counts`` expected photons, draw
    Poisson counts per bin, scale back. Returns the noisy sinogram and the
    largest single-bin count."""
    if total_counts <= 0:
        raise NoiseError(f"total_counts must be positive, got {total_counts}")
    values = sino.values
    if np.any(values < 0):
        raise NoiseError("sinogram must be non-negative for count simulation")
    total = float(values.sum())
    if total <= 0:
        raise NoiseError("cannot simulate counts for an all-zero sinogram")
    scale = total_counts / total
    rng = np.random.default_rng(seed)
    counts = rng.poisson(values * scale)
    max_bin = int(counts.max())
    logger.info(
        "Poisson noise: %d counts realised (target %d), max bin %d",
        int(counts.sum()), total_counts, max_bin,
    )
    return VSinogram(counts / scale, sino.radius_R, sino.mu), max_bin


def relative_l2_error(a: CartesianImage, b: CartesianImage) -> float:
    """``|b - a|_2 / |b|_2`` with ``b`` the reference image."""
    if a.values.shape != b.values.shape:
        raise ConfigError(f"image shapes differ: {a.values.shape} vs {b.values.shape}")
    ref = float(np.linalg.norm(b.values))
    if ref == 0.0:
        raise ConfigError("reference image is identically zero")
    return float(np.linalg.norm(b.values - a.values) / ref)
