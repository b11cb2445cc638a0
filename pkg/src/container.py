"""On-disk container format, PGM preview export and CSV tables.

An object is stored as ``<name>.json`` (header) plus ``<name>.f64le`` (raw
little-endian float64 payload, row-major, complex values interleaved as
real, imag).
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

from src.abel_kernel import AbelKernelMatrix
from src.errors import ContainerError
from src.model import CartesianImage, HarmonicStack, PolarImage, VSinogram

logger = logging.getLogger(__name__)

Storable = Union[CartesianImage, VSinogram, HarmonicStack, PolarImage, AbelKernelMatrix]

HEADER_SUFFIX = ".json"
PAYLOAD_SUFFIX = ".f64le"
_LE_F64 = np.dtype("<f8")


def container_paths(path: str | Path) -> tuple[Path, Path]:
    """Header and payload paths for ``path`` (a known suffix is stripped)."""
    base = Path(path)
    if base.suffix in (HEADER_SUFFIX, PAYLOAD_SUFFIX):
        base = base.with_suffix("")
    return (
        base.with_name(base.name + HEADER_SUFFIX),
        base.with_name(base.name + PAYLOAD_SUFFIX),
    )


def _header_and_payload(obj: Storable) -> tuple[dict[str, Any], np.ndarray]:
    header: dict[str, Any] = {"dtype": "f64le", "ordering": "row-major"}
    if isinstance(obj, CartesianImage):
        header.update(kind="image", dims=list(obj.values.shape), radius_R=obj.radius_R,
                      M=obj.half_width_M)
        return header, obj.values
    if isinstance(obj, VSinogram):
        header.update(kind="sinogram", dims=list(obj.values.shape), radius_R=obj.radius_R,
                      mu=obj.mu, P=obj.P, Q=obj.Q)
        return header, obj.values
    if isinstance(obj, HarmonicStack):
        header.update(kind="harmonics", dims=list(obj.coeffs.shape), radius_R=obj.radius_R,
                      mu=obj.mu, P=obj.P, Q=obj.Q, role=obj.role, complex=True)
        return header, obj.coeffs.view(np.float64)
    if isinstance(obj, PolarImage):
        header.update(kind="polar", dims=list(obj.values.shape), radius_R=obj.radius_R,
                      P=obj.P, Q=obj.Q)
        return header, obj.values
    if isinstance(obj, AbelKernelMatrix):
        header.update(kind="kernel", dims=list(obj.entries.shape), radius_R=obj.radius_R,
                      mu=obj.mu, n=obj.n, Q=obj.Q)
        return header, obj.entries
    raise ContainerError(f"cannot store objects of type {type(obj).__name__}")


def save_container(path: str | Path, obj: Storable) -> tuple[Path, Path]:
    """Write ``obj`` as a header/payload pair; returns both paths."""
    header, payload = _header_and_payload(obj)
    if not np.all(np.isfinite(payload)):
        raise ContainerError("refusing to store non-finite values")
    head_path, data_path = container_paths(path)
    try:
        with open(head_path, "w", encoding="utf-8") as f:
            json.dump(header, f, indent=2)
        np.ascontiguousarray(payload, dtype=_LE_F64).tofile(data_path)
    except OSError as exc:
        raise ContainerError(f"cannot write container {head_path.stem}: {exc}") from exc
    logger.debug("Saved %s %s to %s", header["kind"], header["dims"], data_path)
    return head_path, data_path


def _require(header: dict[str, Any], *keys: str) -> None:
    missing = [k for k in keys if k not in header]
    if missing:
        raise ContainerError(f"header lacks fields: {', '.join(missing)}")


def load_container(path: str | Path) -> Storable:
    """Read an object written by :func:`save_container`."""
    head_path, data_path = container_paths(path)
    try:
        with open(head_path, encoding="utf-8") as f:
            header = json.load(f)
        raw = np.fromfile(data_path, dtype=_LE_F64)
    except (OSError, json.JSONDecodeError) as exc:
        raise ContainerError(f"cannot read container {head_path}: {exc}") from exc

    _require(header, "kind", "dims", "dtype", "ordering", "radius_R")
    if header["dtype"] != "f64le" or header["ordering"] != "row-major":
        raise ContainerError(
            f"unsupported layout {header['dtype']}/{header['ordering']}"
        )
    kind = header["kind"]
    dims = tuple(int(d) for d in header["dims"])
    is_complex = bool(header.get("complex", False))
    expected = int(np.prod(dims)) * (2 if is_complex else 1)
    if raw.size != expected:
        raise ContainerError(
            f"shape mismatch: header declares {dims} "
            f"({expected} values) but payload holds {raw.size}"
        )
    if np.isnan(raw).any():
        raise ContainerError("payload contains NaN")
    data = raw.astype(np.float64)
    R = float(header["radius_R"])

    if kind == "image":
        return CartesianImage(data.reshape(dims), R)
    if kind == "sinogram":
        _require(header, "mu")
        return VSinogram(data.reshape(dims), R, float(header["mu"]))
    if kind == "harmonics":
        _require(header, "Q", "role")
        coeffs = data.view(np.complex128).reshape(dims) if is_complex else data.reshape(dims)
        return HarmonicStack(coeffs, int(header["Q"]), R, header["role"], mu=header.get("mu"))
    if kind == "polar":
        return PolarImage(data.reshape(dims), R)
    if kind == "kernel":
        _require(header, "n", "mu")
        return AbelKernelMatrix(int(header["n"]), data.reshape(dims), R, float(header["mu"]))
    raise ContainerError(f"unknown container kind {kind!r}")


def load_kind(path: str | Path, expected: type) -> Any:
    """Load a container and insist on its Python type."""
    obj = load_container(path)
    if not isinstance(obj, expected):
        raise ContainerError(
            f"{path}: expected {expected.__name__}, found {type(obj).__name__}"
        )
    return obj


def export_pgm(path: str | Path, obj: CartesianImage | VSinogram | PolarImage) -> None:
    """8-bit binary PGM preview, ``[min, max]`` mapped affinely to ``[0, 255]``.

    Images are drawn with x1 to the right and x2 upwards.
    """
    values = obj.values
    if isinstance(obj, CartesianImage):
        values = values.T[::-1]
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        scaled = np.rint((values - lo) * (255.0 / (hi - lo)))
    else:
        scaled = np.zeros_like(values)
    pixels = np.clip(scaled, 0, 255).astype(np.uint8)
    height, width = pixels.shape
    try:
        with open(path, "wb") as f:
            f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            f.write(pixels.tobytes())
    except OSError as exc:
        raise ContainerError(f"cannot write {path}: {exc}") from exc


def format_float(value: float) -> str:
    """Shortest string that round-trips to the same float64."""
    return repr(float(value))


def write_csv(
    path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> None:
    """Comma-separated table with a header row; floats round-trip exactly."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(
                    [format_float(v) if isinstance(v, (float, np.floating)) else v for v in row]
                )
    except OSError as exc:
        raise ContainerError(f"cannot write {path}: {exc}") from exc


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise ContainerError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ContainerError(f"{path} is empty")
    return rows[0], rows[1:]
