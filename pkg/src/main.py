"""Entry point: batch command line for simulation, reconstruction and diagnostics.

Usage: ``python -m src.main <command> [options]``. Exit codes are 0 on
success, 1 on a usage error and 2 on a data or solver error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import math
import sqlite3
import sys
from typing import Any, Callable, Sequence

import config
from src.abel_kernel import assemble_matrix, diagonal_zeros
from src.container import export_pgm, format_float, load_container, load_kind, save_container, write_csv
from src.db import Database
from src.errors import ConfigError, ContainerError, VLineError
from src.experiments import best_point, lambda_sweep, mismatch_experiment
from src.model import (
    CartesianImage,
    PolarImage,
    ScanConfig,
    VSinogram,
    load_scan_config,
    validate_config,
)
from src.phantom import load_phantom, preset, rasterize, save_phantom
from src.pipeline import (
    STAGES,
    KernelBank,
    StageTimer,
    poisson_noise,
    reconstruct_polar,
    relative_l2_error,
    resample_polar_to_cartesian,
)
from src.projector import forward_vline
from src.solver import conditioning_table

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------


def setup_logging(verbose: bool = False) -> None:
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.LOG_FILE:
        handlers.append(logging.FileHandler(config.LOG_FILE))
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
    )
    logging.captureWarnings(True)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _add_geometry(p: argparse.ArgumentParser, *fields: str) -> None:
    if "R" in fields:
        p.add_argument("--R", type=float, help=f"disc radius in cm (default {config.DEFAULT_RADIUS})")
    if "mu" in fields:
        p.add_argument("--mu", type=float, help="attenuation coefficient in 1/cm")
    if "P" in fields:
        p.add_argument("--P", type=int, help=f"number of vertex angles (default {config.DEFAULT_P})")
    if "Q" in fields:
        p.add_argument("--Q", type=int, help=f"number of opening angles (default {config.DEFAULT_Q})")
    if "M" in fields:
        p.add_argument("--M", type=int, help=f"image half-width in pixels (default {config.DEFAULT_M})")


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scan configuration; flags override its values")
    common.add_argument("--db", help="SQLite run ledger (default $VLT_DB_PATH)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = ArgumentParser(prog="vline", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("phantom", parents=[common], help="rasterize an ellipse phantom")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=["three-discs", "disc"])
    source.add_argument("--from", dest="from_json", help="phantom description (JSON list)")
    _add_geometry(p, "M", "R")
    p.add_argument("--supersample", type=int, default=1, help="sub-samples per pixel axis")
    p.add_argument("--emit-json", help="also write the phantom description here")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("forward", parents=[common], help="attenuated V-line projection")
    _add_geometry(p, "mu", "P", "Q")
    p.add_argument("-i", "--input", required=True, help="image container")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("noise", parents=[common], help="Poisson photon-count noise")
    p.add_argument("--total-counts", type=int, default=config.DEFAULT_TOTAL_COUNTS)
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p.add_argument("-i", "--input", required=True, help="sinogram container")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("recon", parents=[common], help="invert a V-line sinogram")
    p.add_argument("--lambda", dest="lam", type=float, help=f"regularization for n != 0 (default {config.DEFAULT_LAMBDA})")
    p.add_argument("--lambda0", type=float, help="regularization for n = 0")
    _add_geometry(p, "mu", "M")
    p.add_argument("--timings", action="store_true", help="print per-stage wall-clock times")
    p.add_argument("--polar", help="also store the polar reconstruction here")
    p.add_argument("-i", "--input", required=True, help="sinogram container")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("sweep", parents=[common], help="relative error over a lambda grid")
    p.add_argument("--lambdas", type=_float_list, required=True)
    p.add_argument("--lambda0", type=float)
    _add_geometry(p, "mu", "M")
    p.add_argument("-i", "--input", required=True, help="sinogram container")
    p.add_argument("--ref", required=True, help="reference image container")
    p.add_argument("-o", "--output", required=True, help="CSV output")

    p = sub.add_parser("mismatch", parents=[common], help="error under assumed attenuations")
    p.add_argument("--mus", type=_float_list, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=config.MISMATCH_LAMBDA)
    _add_geometry(p, "M")
    p.add_argument("-i", "--input", required=True, help="sinogram container")
    p.add_argument("--ref", required=True, help="reference image container")
    p.add_argument("-o", "--output", required=True, help="CSV output")

    p = sub.add_parser("diag", parents=[common], help="kernel conditioning and dumps")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--cond", action="store_true", help="condition numbers of K_n")
    what.add_argument("--kernel", type=int, metavar="N", help="dump the kernel matrix K_N")
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--spectra", help="CSV of full singular spectra (with --cond)")
    _add_geometry(p, "R", "mu", "Q")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("error", parents=[common], help="relative L2 error |b - a| / |b|")
    p.add_argument("-a", required=True, help="image container")
    p.add_argument("-b", required=True, help="reference image container")

    p = sub.add_parser("export-pgm", parents=[common], help="8-bit PGM preview")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a scan configuration")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambda0", type=float)
    _add_geometry(p, "R", "mu", "P", "Q", "M")

    p = sub.add_parser("history", parents=[common], help="list ledger runs")
    p.add_argument("--limit", type=int, default=20)

    return parser


# ---------------------------------------------------------------------------
# Configuration resolution
# ---------------------------------------------------------------------------

_FLAG_KEYS = (
    ("R", "radius_R"),
    ("mu", "mu"),
    ("P", "P"),
    ("Q", "Q"),
    ("M", "M"),
    ("lam", "lambda"),
    ("lambda0", "lambda0"),
)


def resolve_config(
    args: argparse.Namespace,
    sino: VSinogram | None = None,
    image: CartesianImage | None = None,
) -> ScanConfig:
    """Defaults, then the geometry of the input data, then ``--config``, then
    explicit flags."""
    data: dict[str, Any] = {}
    if sino is not None:
        data.update(radius_R=sino.radius_R, mu=sino.mu, P=sino.P, Q=sino.Q)
    if image is not None:
        data.update(radius_R=image.radius_R, M=image.half_width_M)
    if args.config:
        data.update(load_scan_config(args.config))
    for flag, key in _FLAG_KEYS:
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    return ScanConfig.from_dict(data)


# ---------------------------------------------------------------------------
# Run ledger
# ---------------------------------------------------------------------------


class RunRecord:
    """What a ledger-backed command reports back for recording."""

    __slots__ = ("params", "parameter", "points", "summary")

    def __init__(
        self,
        params: dict[str, Any],
        summary: str,
        parameter: str = "",
        points: Sequence[tuple[float, float]] = (),
    ) -> None:
        self.params = params
        self.summary = summary
        self.parameter = parameter
        self.points = list(points)


LEDGER_COMMANDS = ("recon", "sweep", "mismatch")


def _ledger_path(args: argparse.Namespace) -> str:
    return args.db or config.DB_PATH


async def _store_run(path: str, command: str, status: str, record: RunRecord) -> int:
    async with Database(path) as db:
        run_id = await db.insert_run(command, record.params)
        if record.points:
            await db.insert_sweep_points(run_id, record.parameter, record.points)
        await db.finish_run(run_id, status, record.summary)
        await db.log_activity(
            f"{command} run {run_id}: {record.summary}",
            "success" if status == "ok" else "error",
        )
    return run_id


def record_run(args: argparse.Namespace, status: str, record: RunRecord) -> None:
    path = _ledger_path(args)
    if not path:
        return
    try:
        run_id = asyncio.run(_store_run(path, args.command, status, record))
    except sqlite3.Error:
        logger.exception("Could not record %s run in %s", args.command, path)
        return
    logger.info("Recorded %s run %d in %s", args.command, run_id, path)


def _params(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"db", "verbose", "handler"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_phantom(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    phantom = preset(args.preset) if args.preset else load_phantom(args.from_json)
    image = rasterize(phantom, cfg.M, cfg.radius_R, supersample=args.supersample)
    save_container(args.output, image)
    if args.emit_json:
        save_phantom(args.emit_json, phantom)
    logger.info("Phantom with %d components written to %s", len(phantom.components), args.output)


def cmd_forward(args: argparse.Namespace) -> None:
    image = load_kind(args.input, CartesianImage)
    cfg = resolve_config(args, image=image)
    save_container(args.output, forward_vline(image, cfg))


def cmd_noise(args: argparse.Namespace) -> None:
    sino = load_kind(args.input, VSinogram)
    noisy, max_bin = poisson_noise(sino, args.total_counts, args.seed)
    save_container(args.output, noisy)
    print(f"max_bin_count {max_bin}")


def cmd_recon(args: argparse.Namespace) -> RunRecord:
    sino = load_kind(args.input, VSinogram)
    cfg = resolve_config(args, sino)
    timer = StageTimer()
    polar = reconstruct_polar(sino, cfg, bank=KernelBank(cfg), timer=timer)
    with timer.stage("N4"):
        image = resample_polar_to_cartesian(polar, cfg.M, cfg.radius_R)
    logger.info("Reconstruction took %.3fs (%s)", timer.total, ", ".join(
        f"{k}={v:.4f}s" for k, v in timer.seconds.items()))
    save_container(args.output, image)
    if args.polar:
        save_container(args.polar, polar)
    if args.timings:
        print_timings(timer)
    return RunRecord(
        {**_params(args), "scan": cfg.to_dict(), "timings": timer.to_dict()},
        f"reconstructed in {timer.total:.3f}s",
    )


def print_timings(timer: StageTimer) -> None:
    print("stage,seconds")
    for name in STAGES:
        print(f"{name},{format_float(timer.seconds.get(name, 0.0))}")
    print(f"total,{format_float(timer.total)}")


def cmd_sweep(args: argparse.Namespace) -> RunRecord:
    sino = load_kind(args.input, VSinogram)
    reference = load_kind(args.ref, CartesianImage)
    cfg = resolve_config(args, sino)
    points = lambda_sweep(sino, cfg, args.lambdas, reference)
    write_csv(args.output, ["lambda", "relative_error"], [(p.value, p.error) for p in points])
    best = best_point(points)
    summary = f"best lambda {best.value:g} (error {best.error:.5f})" if best else "empty"
    return RunRecord(_params(args), summary, "lambda", [tuple(p) for p in points])


def cmd_mismatch(args: argparse.Namespace) -> RunRecord:
    sino = load_kind(args.input, VSinogram)
    reference = load_kind(args.ref, CartesianImage)
    cfg = resolve_config(args, sino)
    points = mismatch_experiment(sino, cfg, args.mus, reference, lam=args.lam)
    write_csv(args.output, ["mu_assumed", "relative_error"], [(p.value, p.error) for p in points])
    best = best_point(points)
    summary = f"best mu {best.value:g} (error {best.error:.5f})" if best else "empty"
    return RunRecord(_params(args), summary, "mu", [tuple(p) for p in points])


def cmd_diag(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    if args.kernel is not None:
        save_container(args.output, assemble_matrix(args.kernel, cfg))
        for t in diagonal_zeros(args.kernel):
            print("diagonal_zero_s", format_float(cfg.radius_R * math.sqrt(1.0 - t)))
        return
    if args.n_max < 0:
        raise ConfigError(f"--n-max must be non-negative, got {args.n_max}")
    rows, spectra = conditioning_table(cfg, args.n_max, spectra=bool(args.spectra))
    write_csv(args.output, ["n", "condition_number"], rows)
    if args.spectra:
        write_csv(
            args.spectra,
            ["n", "index", "singular_value"],
            [(n, k, sv[k]) for n, sv in sorted(spectra.items()) for k in range(sv.size)],
        )


def cmd_error(args: argparse.Namespace) -> None:
    a = load_kind(args.a, CartesianImage)
    b = load_kind(args.b, CartesianImage)
    print(format_float(relative_l2_error(a, b)))


def cmd_export_pgm(args: argparse.Namespace) -> None:
    obj = load_container(args.input)
    if not isinstance(obj, (CartesianImage, VSinogram, PolarImage)):
        raise ContainerError(f"cannot preview a {type(obj).__name__}")
    export_pgm(args.output, obj)


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate_config(resolve_config(args))
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.ok else EXIT_FAILURE


async def _history(path: str, limit: int) -> list[dict[str, Any]]:
    async with Database(path) as db:
        runs = await db.get_runs(limit)
        for run in runs:
            run["best"] = await db.best_point(run["id"])
    return runs


def cmd_history(args: argparse.Namespace) -> None:
    path = _ledger_path(args)
    if not path:
        raise ConfigError("no run ledger configured (use --db or VLT_DB_PATH)")
    for run in asyncio.run(_history(path, args.limit)):
        best = run["best"]
        best_text = f"{best['parameter']}={best['value']:g} error={best['error']:.5f}" if best else "-"
        print(f"{run['id']}\t{run['timestamp']}\t{run['command']}\t{run['status']}\t{best_text}")


COMMANDS: dict[str, Callable[[argparse.Namespace], Any]] = {
    "phantom": cmd_phantom,
    "forward": cmd_forward,
    "noise": cmd_noise,
    "recon": cmd_recon,
    "sweep": cmd_sweep,
    "mismatch": cmd_mismatch,
    "diag": cmd_diag,
    "error": cmd_error,
    "export-pgm": cmd_export_pgm,
    "validate": cmd_validate,
    "history": cmd_history,
}


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run one command and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    setup_logging(args.verbose)
    try:
        result = COMMANDS[args.command](args)
    except (VLineError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc, exc_info=args.verbose)
        if args.command in LEDGER_COMMANDS:
            record_run(args, "failed", RunRecord(_params(args), str(exc)))
        return EXIT_FAILURE

    if isinstance(result, RunRecord):
        record_run(args, "ok", result)
        return EXIT_OK
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
