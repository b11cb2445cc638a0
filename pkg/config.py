"""Configuration loaded from environment variables and sensible defaults."""

import os

from dotenv import load_dotenv

load_dotenv()

# --- Runtime ---
VLT_THREADS: int = int(os.getenv("VLT_THREADS", "0"))  # 0 = auto
DFT_METHOD: str = os.getenv("VLT_DFT", "fft")  # "fft" or "direct"
LOG_FILE: str = os.getenv("VLT_LOG_FILE", "vline.log")
LOG_LEVEL: str = os.getenv("VLT_LOG_LEVEL", "INFO")
DB_PATH: str = os.getenv("VLT_DB_PATH", "")  # empty = no run ledger

# --- Scan geometry and physics (reference set-up) ---
DEFAULT_RADIUS: float = 8.0  # cm
DEFAULT_MU: float = 0.15  # 1/cm, soft tissue
DEFAULT_P: int = 100  # vertex angles
DEFAULT_Q: int = 100  # opening-angle / radial samples
DEFAULT_M: int = 100  # grid half-width, image is (2M+1)^2

# --- Regularization and experiments ---
DEFAULT_LAMBDA: float = 8e-4
DEFAULT_LAMBDA0: float = 0.0
MISMATCH_LAMBDA: float = 0.03
DEFAULT_TOTAL_COUNTS: int = 1_894_918
DEFAULT_SEED: int = 7

# --- Numerical tolerances ---
PIVOT_RTOL: float = 1e-12  # direct solve pivot floor, relative to max|K|
LAMBDA0_FALLBACK: float = 1e-12  # Tikhonov fallback for the n = 0 system
JACOBI_TOL: float = 1e-12
JACOBI_MAX_SWEEPS: int = 60
CHEB_CLAMP: float = 1e-12
SYMMETRY_RTOL: float = 1e-8
SUPPORT_EPS: float = 1e-3
MU_R_LIMIT: float = 1.5  # uniqueness hypothesis mu * R <= 3/2


def thread_count() -> int:
    """Effective worker count for the parallel loops."""
    if VLT_THREADS > 0:
        return VLT_THREADS
    return os.cpu_count() or 1
