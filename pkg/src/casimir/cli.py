"""Command-line driver: ``casimir <mode> --config <path> [--threads N] [--analytic]``."""

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv

from .analytic import (
    BoxPartition,
    box_energy_lattice,
    extrapolated_box_energy,
    tictactoe_exact,
    tictactoe_spectral,
)
from .bridges import EnsembleSpec
from .errors import CasimirError, ConfigError
from .geometry import Configuration, IsoTriangle, LineObject, TicTacToe
from .parser import MODES, parse_config
from .spectral import (
    DIRICHLET,
    PotentialObject,
    default_sampling_box,
    estimate_irreducible_spectral_density,
    monotonicity_curve,
)
from .types import RunConfig
from .worldline import estimate_energy, estimate_line_spectral, sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SWEEP_HEADER = ("ratio", "epsilon", "std_error", "loops")
QUANTITY_HEADER = ("quantity", "value", "std_error")
BOX_SCALE = 10.0

Row = Tuple[Any, ...]


def _ensemble(config: RunConfig, points: Optional[int] = None) -> EnsembleSpec:
    return EnsembleSpec(
        seed=config["seed"],
        loop_count=config["loops"],
        points_per_loop=points or config["points"],
        rotations=config["rotations"],
    )


def _line_configuration(config: RunConfig) -> Configuration:
    geometry = config["geometry"]
    if geometry == "tictactoe":
        return TicTacToe(config["w"], config["h"]).configuration()
    if geometry == "triangle":
        return IsoTriangle(config["base"], config["height"]).configuration()
    lines = tuple(LineObject((nx, ny), offset) for nx, ny, offset in config["lines"])
    return Configuration(lines, name="lines", area=config["area"])


def _disks(config: RunConfig) -> List[PotentialObject]:
    default = config.get("strength", DIRICHLET)
    return [
        PotentialObject((row[0], row[1]), row[2], row[3] if len(row) == 4 else default)
        for row in config["disks"]
    ]


def _run_sweep(config: RunConfig, threads: int, analytic: bool) -> Tuple[Row, List[Row], Dict[str, Any]]:
    family = TicTacToe if config["mode"] == "tictactoe-sweep" else IsoTriangle
    results = sweep(
        family, config["ratios"], _ensemble(config), config["area"], threads, config["extrapolate"]
    )
    rows: List[Row] = [
        (ratio, est.epsilon, est.std_error * math.sqrt(config["area"]), est.loop_count)
        for ratio, est in results
    ]
    flagged = [ratio for ratio, est in results if est.flagged]
    return SWEEP_HEADER, rows, {"flagged": flagged}


def _run_energy(config: RunConfig, threads: int, analytic: bool) -> Tuple[Row, List[Row], Dict[str, Any]]:
    line_config = _line_configuration(config)
    spec = _ensemble(config)
    estimate = estimate_energy(line_config, spec, threads, extrapolate=config["extrapolate"])
    rows: List[Row] = [("mc", estimate.value, estimate.std_error)]
    if analytic:
        if isinstance(line_config.shape, TicTacToe):
            rows.append(("exact", tictactoe_exact(config["w"], config["h"], config["tol"]), 0.0))
        elif isinstance(line_config.shape, IsoTriangle):
            closed = estimate_energy(
                line_config, spec, threads, method="closed-form", extrapolate=config["extrapolate"]
            )
            rows.append(("closed_form", closed.value, closed.std_error))
        else:
            logger.info("no analytic reference for a custom line configuration")
    return QUANTITY_HEADER, rows, {}


def _run_spectral_check(config: RunConfig, threads: int, analytic: bool) -> Tuple[Row, List[Row], Dict[str, Any]]:
    spec = _ensemble(config)
    rows: List[Row] = []
    if config["geometry"] == "disks":
        objects = _disks(config)
        for beta in config["betas"]:
            est = estimate_irreducible_spectral_density(
                objects, beta, spec, default_sampling_box(objects, beta),
                config["positions_per_loop"], threads,
            )
            rows.append((f"phi(beta={beta:g})", est.value, est.std_error))
        return QUANTITY_HEADER, rows, {}

    line_config = _line_configuration(config)
    is_tictactoe = config["geometry"] == "tictactoe"
    for beta in config["betas"]:
        est = estimate_line_spectral(line_config, beta, spec, threads, config["extrapolate"])
        rows.append((f"phi_mc(beta={beta:g})", est.value, est.std_error))
        if is_tictactoe:
            rows.append((f"phi_exact(beta={beta:g})", tictactoe_spectral(config["w"], config["h"], beta), 0.0))
    if analytic and is_tictactoe:
        w, h = config["w"], config["h"]
        rows.append(("energy_exact", tictactoe_exact(w, h, config["tol"]), 0.0))
        box = BoxPartition.centered(w, h, BOX_SCALE)
        rows.append(("energy_box_lattice", box_energy_lattice(box, config["tol"]), 0.0))
        rows.append(("energy_box_extrapolated", extrapolated_box_energy(w, h), 0.0))
    return QUANTITY_HEADER, rows, {}


def _run_monotonicity(config: RunConfig, threads: int, analytic: bool) -> Tuple[Row, List[Row], Dict[str, Any]]:
    if "disks" in config:
        obj1, obj2 = _disks(config)
    else:
        strength = config.get("strength", DIRICHLET)
        obj1 = PotentialObject((0.0, 0.0), config["radius"], strength)
        obj2 = PotentialObject((0.0, 0.0), config["radius"], strength)
    curve = monotonicity_curve(
        obj1, obj2, config["gaps"], config["beta"], _ensemble(config),
        config["positions_per_loop"], threads,
    )
    rows: List[Row] = [
        (f"phi(gap={gap:g})", est.value, est.std_error) for gap, est in zip(config["gaps"], curve)
    ]
    return QUANTITY_HEADER, rows, {}


def _run_convergence(config: RunConfig, threads: int, analytic: bool) -> Tuple[Row, List[Row], Dict[str, Any]]:
    line_config = TicTacToe(config["w"], config["h"]).configuration()
    root_area = math.sqrt(line_config.area)
    rows: List[Row] = []
    previous: Optional[Tuple[int, float, float]] = None
    for points in config["points_list"]:
        est = estimate_energy(
            line_config, _ensemble(config, points), threads, extrapolate=config["extrapolate"]
        )
        err = est.std_error * root_area
        rows.append((f"epsilon(N={points})", est.epsilon, err))
        if previous is not None:
            n0, eps0, err0 = previous
            rows.append((f"drift(N={n0}->{points})", est.epsilon - eps0, math.hypot(err, err0)))
        previous = (points, est.epsilon, err)
    if analytic:
        rows.append(("epsilon_exact", tictactoe_exact(config["w"], config["h"], config["tol"]) * root_area, 0.0))
    return QUANTITY_HEADER, rows, {}


RUNNERS = {
    "tictactoe-sweep": _run_sweep,
    "triangle-sweep": _run_sweep,
    "energy": _run_energy,
    "spectral-check": _run_spectral_check,
    "monotonicity": _run_monotonicity,
    "convergence-study": _run_convergence,
}


def _format(value: Any) -> str:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise CasimirError(f"refusing to write non-finite value {value!r}")
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Row]) -> None:
    """UTF-8 CSV with LF line endings and 17 significant digits."""
    formatted = [[_format(v) for v in row] for row in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(formatted)


def write_sidecar(path: Path, config: RunConfig, threads: int, analytic: bool, extras: Dict[str, Any]) -> None:
    """Resolved configuration, sufficient to reproduce the CSV."""
    payload: Dict[str, Any] = {**config, "threads": threads, "analytic": analytic, **extras}
    with path.open("w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")


def run(config: RunConfig, threads: int = 1, analytic: bool = False) -> int:
    """
    Execute one configured run and write its CSV and JSON sidecar.

    Args:
        config: Resolved configuration from ``parse_config``
        threads: Worker threads for ensemble evaluation
        analytic: Add exact reference rows where available

    Returns:
        Exit status: 0 on success, 2 for invalid configuration, 3 for numerical failure
    """
    analytic = analytic or bool(config.get("analytic", False))
    try:
        runner = RUNNERS.get(config.get("mode", ""))
        if runner is None:
            raise ConfigError(f"unknown mode {config.get('mode')!r}", field="mode")
        logger.info("Running %s with seed=%d, threads=%d", config["mode"], config["seed"], threads)
        header, rows, extras = runner(config, threads, analytic)
        output = Path(config["output"])
        write_csv(output, header, rows)
        write_sidecar(Path(f"{output}.json"), config, threads, analytic, extras)
    except ConfigError as e:
        print(f"casimir: invalid configuration ({e.field or 'config'}): {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (CasimirError, ValueError) as e:
        print(f"casimir: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    logger.info("Wrote %d rows to %s", len(rows), output)
    return EXIT_OK


def resolve_threads(cli_threads: Optional[int], config: RunConfig) -> int:
    """``--threads``, else ``CASIMIR_THREADS``, else the configured value, else 1."""
    if cli_threads is not None:
        if cli_threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {cli_threads}", field="threads")
        return cli_threads
    env = os.getenv("CASIMIR_THREADS")
    if env:
        try:
            threads = int(env)
        except ValueError as e:
            raise ConfigError(f"CASIMIR_THREADS must be an integer, got {env!r}", field="CASIMIR_THREADS") from e
        if threads < 1:
            raise ConfigError(f"CASIMIR_THREADS must be >= 1, got {threads}", field="CASIMIR_THREADS")
        return threads
    return int(config.get("threads", 1))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casimir",
        description="World-line Monte Carlo for irreducible Casimir energies of lines and disks in 2D",
    )
    parser.add_argument("mode", choices=MODES, help="what to compute")
    parser.add_argument("--config", "-c", required=True, help="path to a JSON run configuration")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: CASIMIR_THREADS or 1)")
    parser.add_argument("--analytic", action="store_true", help="add exact reference rows")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    load_dotenv()
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        config = parse_config(text, mode=args.mode)
        threads = resolve_threads(args.threads, config)
    except OSError as e:
        print(f"casimir: cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"casimir: invalid configuration ({e.field or 'config'}): {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config, threads, args.analytic)


if __name__ == "__main__":
    sys.exit(main())
