"""
Command line of gjsq.

    gjsq sqa --s 2 --rho 0.7
    gjsq oracle --config system.json --out oracle.json
    gjsq rates --s 4 --rho 0.7 --sources oracle approximation --out rates.csv
    gjsq table2 --reps 10 --departures 200000 --out table2.csv
    gjsq figure fig4 --out figures/
    gjsq compare oracle.json sqa.json --tolerance 1e-9

Exit status is 0 on success, 2 when ``compare`` exceeds its tolerance and 1 on any error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, NoReturn, Optional

from .experiments import (
    COMMANDS,
    DESK_DEPARTURES,
    DESK_REPS,
    FIGURES,
    FULL_DEPARTURES,
    FULL_REPS,
    JOINT_MIN_PROB,
    RATE_SOURCES,
    ExperimentOutput,
    ExperimentSpec,
    run_experiment,
)
from .model.base import SystemConfig
from .reporting import FORMATS, write_bundle, write_document, write_rows

__all__ = ["build_parser", "main"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TOLERANCE = 2

SYSTEM_COMMANDS = ("simulate", "oracle", "sqa", "rates", "table2")


class GjsqArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with ``EXIT_ERROR``, keeping ``EXIT_TOLERANCE`` for ``compare``."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=str, help="Output file, or directory for figure bundles (default: stdout)")
    parser.add_argument("--format", choices=FORMATS, default=None, help="Output format of tables and series")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level")
    parser.add_argument("--no-progress", action="store_true", help="Hide progress bars")


def _add_system(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("system")
    group.add_argument("--config", type=str, help="JSON file with rates, lambda (or rho), jobsize, tie_prob")
    group.add_argument("--s", type=int, help="Rate of the fast server of the canonical (1, s) system")
    group.add_argument("--rho", type=float, help="Load of the canonical system")
    group.add_argument("--jobsize", choices=("uni", "exp", "weib", "logn"), default="exp", help="Job-size law")
    group.add_argument("--policy", choices=("gjsq", "jsq"), default="gjsq", help="Routing policy")


def _add_simulation(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("simulation")
    group.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    group.add_argument("--reps", type=int, default=None, help=f"Replications (default: {DESK_REPS})")
    group.add_argument(
        "--departures", type=int, default=None, help=f"Departures per replication (default: {DESK_DEPARTURES})"
    )
    group.add_argument("--workers", type=int, default=None, help="Process pool size for replications")
    group.add_argument(
        "--full-scale",
        action="store_true",
        help=f"Use {FULL_DEPARTURES} departures and {FULL_REPS} replications unless given explicitly",
    )


def _add_series(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-max", type=int, default=30, help="Largest state of rate series (default: 30)")
    parser.add_argument("--truncation", "-K", type=int, default=None, help="Oracle truncation level")


def build_parser() -> argparse.ArgumentParser:
    """Build the ``gjsq`` argument parser."""
    parser = GjsqArgumentParser(
        prog="gjsq",
        description="Simulation, exact oracle and single queue approximation of GJSQ-routed PS servers",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")

    simulate = commands.add_parser("simulate", help="Replicate a simulation")
    _add_system(simulate)
    _add_simulation(simulate)
    _add_series(simulate)

    oracle = commands.add_parser("oracle", help="Solve the truncated Markov chain (exponential sizes)")
    _add_system(oracle)
    _add_series(oracle)
    oracle.add_argument(
        "--joint-min-prob",
        type=float,
        default=JOINT_MIN_PROB,
        help=f"Smallest probability in the joint table of a directory --out (default: {JOINT_MIN_PROB})",
    )

    sqa = commands.add_parser("sqa", help="Run the single queue approximation")
    _add_system(sqa)
    sqa.add_argument("--rate-source", choices=("approximation", "oracle"), default="approximation")

    rates = commands.add_parser("rates", help="Conditional arrival-rate series per source")
    _add_system(rates)
    _add_simulation(rates)
    _add_series(rates)
    rates.add_argument("--sources", nargs="+", choices=RATE_SOURCES, default=["oracle", "approximation"])

    table2 = commands.add_parser("table2", help="Simulated moments per job-size law next to the SQA")
    _add_system(table2)
    _add_simulation(table2)

    figure = commands.add_parser("figure", help="Data series of a figure")
    figure.add_argument("figure", choices=FIGURES)
    _add_simulation(figure)
    _add_series(figure)

    compare = commands.add_parser("compare", help="Compare two JSON result documents")
    compare.add_argument("inputs", nargs=2, help="Reference document and compared document")
    compare.add_argument("--metrics", nargs="+", default=None, help="Glob patterns of metrics (default: metrics.*)")
    compare.add_argument("--tolerance", type=float, default=None, help="Largest accepted |relative difference|")

    for subparser in commands.choices.values():
        _add_common(subparser)
    return parser


def _system(args: argparse.Namespace) -> Optional[SystemConfig]:
    if getattr(args, "config", None):
        return SystemConfig.from_json(args.config)
    if getattr(args, "s", None) is not None and getattr(args, "rho", None) is not None:
        return SystemConfig.two_server(args.s, args.rho, args.jobsize, policy=args.policy)
    if args.command in SYSTEM_COMMANDS and args.command != "table2":
        raise ValueError("Give --config or both --s and --rho")
    return None


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """Translate parsed arguments into an ``ExperimentSpec``."""
    full = getattr(args, "full_scale", False)
    reps = getattr(args, "reps", None) or (FULL_REPS if full else DESK_REPS)
    departures = getattr(args, "departures", None) or (FULL_DEPARTURES if full else DESK_DEPARTURES)
    return ExperimentSpec(
        command=args.command,
        config=_system(args),
        figure=getattr(args, "figure", None),
        sources=tuple(getattr(args, "sources", None) or ("oracle", "approximation")),
        n_max=getattr(args, "n_max", 30),
        reps=reps,
        departures=departures,
        seed=getattr(args, "seed", 0),
        workers=getattr(args, "workers", None),
        rate_source=getattr(args, "rate_source", "approximation"),
        truncation=getattr(args, "truncation", None),
        inputs=tuple(getattr(args, "inputs", None) or ()),
        metrics=tuple(args.metrics) if getattr(args, "metrics", None) else None,
        tolerance=getattr(args, "tolerance", None),
        joint_min_prob=getattr(args, "joint_min_prob", JOINT_MIN_PROB),
        progress=not args.no_progress,
    )


def write_output(output: ExperimentOutput, out: Optional[str], fmt: Optional[str]) -> None:
    """
    Write a command's output.

    A directory ``out``, existing or ending with a separator, receives the document as ``<name>.json``
    and every table as ``<table>.<fmt>``. Otherwise documents go out as JSON and tables as CSV unless
    ``fmt`` says otherwise; an output with both writes its tables when ``tables_first`` is set. Several
    tables need ``out`` to be a directory, a single table is written to ``out`` or stdout.
    """
    if out is not None and (Path(out).is_dir() or out.endswith(("/", os.sep))):
        if output.document is not None:
            write_document(output.document, Path(out) / f"{output.name}.json")
        if output.tables:
            write_bundle(output.tables, out, fmt or "csv")
        return
    if output.document is not None and (fmt == "json" or not output.tables or not output.tables_first):
        write_document(output.document, out, stream=None if out else sys.stdout)
        return
    fmt = fmt or "csv"
    if len(output.tables) > 1:
        if out is None:
            for name, rows in output.tables.items():
                sys.stdout.write(f"# {name}\n")
                write_rows(rows, fmt=fmt, stream=sys.stdout)
            return
        write_bundle(output.tables, out, fmt)
        return
    (rows,) = output.tables.values()
    write_rows(rows, out, fmt, stream=None if out else sys.stdout)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ``gjsq`` console script."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code is None else int(e.code)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    try:
        output = run_experiment(spec_from_args(args))
        write_output(output, args.out, args.format)
    except Exception as e:
        logger.error("%s failed: %s", args.command, e)
        logger.debug("Traceback", exc_info=True)
        return EXIT_ERROR
    if not output.ok:
        logger.warning("Relative differences exceed the tolerance %s", args.tolerance)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
