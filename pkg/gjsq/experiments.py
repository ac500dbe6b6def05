"""
Experiment commands behind the ``gjsq`` command line.

Every command is a plain function returning either a JSON-ready document or a bundle of row
tables, so the same experiments run from the CLI, from tests and from notebooks. Commands are
deterministic given their arguments and the master seed.
"""

import fnmatch
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from .model.base import SystemConfig
from .model.jobsize import TARGET_VARIANCE
from .model.results import RateProfile, flatten_metrics, relative_difference
from .oracle.ctmc import oracle_conditional_rates, oracle_marginals, solve_oracle
from .pipeline.base import Pipeline
from .pipeline.sqa import sqa_pipeline
from .reporting import Row, joint_rows, profile_rows
from .simulation.estimators import pooled_conditional_rates
from .simulation.replicate import replicate
from .sqa.approximation import approximate_profile
from .sqa.spectral import limiting_rates
from .step.foreach import ForEachStep
from .step.simulation import SimulateStep
from .step.sqa import ApproximateRatesStep, BirthDeathStep, CellConfigStep, LimitingRatesStep

__all__ = [
    "COMMANDS",
    "CompareReport",
    "ExperimentOutput",
    "ExperimentSpec",
    "FIGURES",
    "cmd_compare",
    "cmd_figure",
    "cmd_oracle",
    "cmd_rates",
    "cmd_simulate",
    "cmd_sqa",
    "cmd_table2",
    "run_experiment",
    "table2_cells",
]

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "oracle", "sqa", "rates", "compare", "table2", "figure")
FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")
RATE_SOURCES = ("oracle", "approximation", "simulation")
JOBSIZES = tuple(TARGET_VARIANCE)
TABLE_METRICS = ("mean_q1", "std_q1", "mean_q2", "std_q2")

DESK_DEPARTURES = 200_000
DESK_REPS = 10
FULL_DEPARTURES = 2_000_000
FULL_REPS = 50
JOINT_MIN_PROB = 1e-12

Tables = Dict[str, List[Row]]


def table2_cells(jobsize: str = "exp") -> List[Dict[str, Any]]:
    """The ``s in {2, 4}`` by ``rho in {0.7, 0.9}`` grid of the comparison table."""
    return [{"s": s, "rho": rho, "jobsize": jobsize} for s in (2, 4) for rho in (0.7, 0.9)]


@dataclass
class ExperimentSpec:
    """
    One command-line invocation.

    Attributes:
        command: One of ``COMMANDS``.
        config: System of the single-system commands.
        cells: Grid of ``table2``; the default grid when omitted.
        figure: Figure id of ``figure``.
        sources: Rate sources of ``rates``.
        n_max: Largest state of rate series.
        reps: Replications per simulated system.
        departures: Departures per replication.
        seed: Master seed.
        workers: Replication process pool size.
        rate_source: Rate source of ``sqa``.
        truncation: Oracle truncation level; adaptive when omitted.
        inputs: The two JSON documents of ``compare``.
        metrics: Glob patterns of the compared metrics.
        tolerance: Largest accepted absolute relative difference of ``compare``.
        joint_min_prob: Smallest probability listed in the joint table of ``oracle``.
        progress: Show progress bars.
    """

    command: str
    config: Optional[SystemConfig] = None
    cells: Optional[List[Dict[str, Any]]] = None
    figure: Optional[str] = None
    sources: Tuple[str, ...] = ("oracle", "approximation")
    n_max: int = 30
    reps: int = DESK_REPS
    departures: int = DESK_DEPARTURES
    seed: int = 0
    workers: Optional[int] = None
    rate_source: str = "approximation"
    truncation: Optional[int] = None
    inputs: Tuple[str, ...] = ()
    metrics: Optional[Tuple[str, ...]] = None
    tolerance: Optional[float] = None
    joint_min_prob: float = JOINT_MIN_PROB
    progress: bool = True

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown command: {self.command}")
        if self.command == "figure" and self.figure not in FIGURES:
            raise ValueError(f"Unknown figure id: {self.figure}")
        if self.command in ("simulate", "oracle", "sqa", "rates") and self.config is None:
            raise ValueError(f"Command {self.command} needs a system configuration")
        if self.command == "compare" and len(self.inputs) != 2:
            raise ValueError("Command compare needs exactly two input documents")
        if self.cells is not None and not self.cells:
            raise ValueError("Parameter grid is empty")
        unknown = set(self.sources) - set(RATE_SOURCES)
        if unknown:
            raise ValueError(f"Unknown rate sources: {sorted(unknown)}")
        if self.reps <= 0 or self.departures <= 0:
            raise ValueError("Replications and departures must be positive")
        if self.n_max < 0:
            raise ValueError(f"Largest state must be nonnegative, got {self.n_max}")


@dataclass
class ExperimentOutput:
    """
    A JSON document, a bundle of row tables, or both, plus the tolerance verdict.

    ``name`` names the document inside an output directory. With ``tables_first`` a single output
    file or stdout gets the tables, otherwise the document.
    """

    document: Optional[Dict[str, Any]] = None
    tables: Tables = field(default_factory=dict)
    ok: bool = True
    name: str = "document"
    tables_first: bool = True


@dataclass
class CompareReport:
    """Per-metric differences between two result documents."""

    rows: List[Row]
    tolerance: Optional[float] = None

    @property
    def ok(self) -> bool:
        if self.tolerance is None:
            return True
        for row in self.rows:
            rel = row["rel_diff"]
            if math.isnan(rel) or abs(rel) > self.tolerance:
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {"tolerance": self.tolerance, "ok": self.ok, "metrics": self.rows}


def cmd_simulate(
    config: SystemConfig,
    departures: int = DESK_DEPARTURES,
    reps: int = DESK_REPS,
    seed: int = 0,
    workers: Optional[int] = None,
    n_max: int = 30,
    progress: bool = True,
) -> Dict[str, Any]:
    """Replicate a simulation; the document carries metric means, stds and pooled rate series."""
    summary = replicate(config, departures, reps, master_seed=seed, workers=workers, progress=progress)
    document = summary.to_dict()
    for profile in pooled_conditional_rates(summary.results):
        document.setdefault("rates", {})[str(profile.server + 1)] = profile.values(n_max).tolist()
    return document


def cmd_oracle(
    config: SystemConfig, truncation: Optional[int] = None, n_max: int = 30, joint_min_prob: float = JOINT_MIN_PROB
) -> Tuple[Dict[str, Any], List[Row]]:
    """
    Solve the exact chain.

    Returns:
        The document, laid out like the SQA document for ``compare``, and the ``{q1, q2, prob}`` rows of
        the joint distribution above ``joint_min_prob``.
    """
    dist = solve_oracle(config, K=truncation)
    stats = oracle_marginals(dist)
    profiles = oracle_conditional_rates(dist)
    document: Dict[str, Any] = {
        "config": config.to_dict(),
        "K": dist.chain.K,
        "tail_mass": dist.tail_mass,
        "residual": dist.residual,
        "metrics": {},
    }
    for marginal, profile in zip(stats, profiles):
        document["metrics"].update(marginal.metrics())
        document[str(marginal.server + 1)] = marginal.to_dict(profile, n_max)
    return document, joint_rows(dist, min_prob=joint_min_prob)


def cmd_sqa(
    config: SystemConfig, rate_source: str = "approximation", reference: Optional[Dict[str, float]] = None
) -> Dict[str, Any]:
    """Run the single queue approximation."""
    return sqa_pipeline(config, reference=reference, rate_source=rate_source).to_dict()


def _source_profiles(
    config: SystemConfig,
    source: str,
    departures: int,
    reps: int,
    seed: int,
    workers: Optional[int],
    truncation: Optional[int],
) -> List[RateProfile]:
    if source == "oracle":
        return oracle_conditional_rates(solve_oracle(config, K=truncation))
    if source == "approximation":
        _, lam2_lim = limiting_rates(config.rho, config.s)
        return [approximate_profile(server, config.rho, config.s, lam2_lim) for server in (0, 1)]
    summary = replicate(config, departures, reps, master_seed=seed, workers=workers, progress=False)
    return pooled_conditional_rates(summary.results, min_time=1.0)


def cmd_rates(
    config: SystemConfig,
    sources: Sequence[str] = ("oracle", "approximation"),
    n_max: int = 30,
    departures: int = DESK_DEPARTURES,
    reps: int = DESK_REPS,
    seed: int = 0,
    workers: Optional[int] = None,
    truncation: Optional[int] = None,
    **extra: Any,
) -> List[Row]:
    """
    Conditional arrival-rate series of every source, aligned on ``n = 0..n_max``.

    Rows are ``{..extra, server, n, source, value, stderr}``. Simulated states with less than one
    time unit of exposure are left empty.
    """
    rows: List[Row] = []
    for source in sources:
        if source not in RATE_SOURCES:
            raise ValueError(f"Unknown rate source: {source}")
        profiles = _source_profiles(config, source, departures, reps, seed, workers, truncation)
        rows.extend(profile_rows(profiles, n_max, **extra))
    return rows


def _table2_pipeline(
    jobsizes: Sequence[str], departures: int, reps: int, seed: int, workers: Optional[int], progress: bool
) -> Pipeline:
    cell_loop = ForEachStep(progress=progress, name="Table2").add_sub_step(CellConfigStep())
    for jobsize in jobsizes:
        cell_loop.add_sub_step(
            SimulateStep(departures, reps, seed=seed, jobsize=jobsize, key=f"sim_{jobsize}", workers=workers)
        )
    cell_loop.add_sub_step(LimitingRatesStep()).add_sub_step(ApproximateRatesStep()).add_sub_step(BirthDeathStep())
    return Pipeline("Table2").add_step(cell_loop)


def cmd_table2(
    cells: Optional[List[Dict[str, Any]]] = None,
    jobsizes: Sequence[str] = JOBSIZES,
    departures: int = DESK_DEPARTURES,
    reps: int = DESK_REPS,
    seed: int = 0,
    workers: Optional[int] = None,
    progress: bool = True,
) -> List[Row]:
    """
    Simulated moments under several job-size laws next to the SQA values.

    One row per cell and metric: ``{s, rho, metric, <law>, <law>_std, ..., sqa, diff}`` where
    ``diff = (exp - sqa) / exp`` uses the exponential column (the first law without one). Stds
    are empty for a single replication.
    """
    data = _table2_pipeline(jobsizes, departures, reps, seed, workers, progress).process(
        {"cells": cells if cells is not None else table2_cells()}
    )
    base = "exp" if "exp" in jobsizes else jobsizes[0]
    rows: List[Row] = []
    for result in data["cell_results"]:
        sqa: Dict[str, float] = {}
        for stats in result["stats"]:
            sqa.update(stats.metrics())
        for metric in TABLE_METRICS:
            row: Row = {"s": result["cell"]["s"], "rho": result["cell"]["rho"], "metric": metric}
            for jobsize in jobsizes:
                summary = result[f"sim_{jobsize}"]
                row[jobsize] = summary.mean[metric]
                row[f"{jobsize}_std"] = summary.std[metric]
            row["sqa"] = sqa[metric]
            row["diff"] = relative_difference(row[base], sqa[metric])
            rows.append(row)
    return rows


def _figure_fractions(departures: int, reps: int, seed: int, workers: Optional[int], progress: bool) -> Tables:
    rows = []
    grid = [round(0.1 + 0.05 * k, 2) for k in range(18)]
    for rho in tqdm(grid, desc="Routing fractions", unit="rho", disable=not progress):
        for policy in ("gjsq", "jsq"):
            config = SystemConfig.two_server(4, rho, policy=policy)
            summary = replicate(config, departures, reps, master_seed=seed, workers=workers, progress=False)
            std = summary.std
            rows.append(
                {
                    "rho": rho,
                    "policy": policy,
                    "fraction_1": summary.mean["fraction_1"],
                    "fraction_1_std": std["fraction_1"],
                    "fraction_2": summary.mean["fraction_2"],
                }
            )
    return {"fig1_fractions": rows}


def _grid_rates(
    name: str,
    cells: Sequence[Dict[str, Any]],
    sources: Sequence[str],
    n_max: int,
    run: Callable[..., List[Row]],
    progress: bool,
) -> Tables:
    rows: List[Row] = []
    for cell in tqdm(cells, desc=name, unit="cell", disable=not progress):
        config = SystemConfig.two_server(cell["s"], cell["rho"], cell.get("jobsize", "exp"))
        rows.extend(run(config, sources=sources, n_max=n_max, **cell))
    return {name: rows}


def cmd_figure(
    figure: str,
    departures: int = DESK_DEPARTURES,
    reps: int = DESK_REPS,
    seed: int = 0,
    workers: Optional[int] = None,
    n_max: int = 30,
    truncation: Optional[int] = None,
    progress: bool = True,
) -> Tables:
    """
    Data series underlying one of the figures.

    - ``fig1``: fraction of jobs routed to the slow server, GJSQ and JSQ, ``s = 4``.
    - ``fig2``: oracle and simulated rates for ``s in {2, 3, 4}`` at ``rho = 0.7``.
    - ``fig3``: simulated rates under the four job-size laws, ``s = 4``, ``rho in {0.7, 0.9}``.
    - ``fig4``: approximation against oracle rates, ``s in {3, 4}``.
    - ``fig5``: simulated rates of three servers with rates 1, 2 and 5 at ``rho = 0.7``.

    Raises:
        ValueError: If the figure id is unknown.
    """
    if figure not in FIGURES:
        raise ValueError(f"Unknown figure id: {figure}")

    def run(config: SystemConfig, **kwargs: Any) -> List[Row]:
        return cmd_rates(
            config, departures=departures, reps=reps, seed=seed, workers=workers, truncation=truncation, **kwargs
        )

    if figure == "fig1":
        return _figure_fractions(departures, reps, seed, workers, progress)
    if figure == "fig2":
        cells = [{"s": s, "rho": 0.7} for s in (2, 3, 4)]
        return _grid_rates("fig2_rates", cells, ("oracle", "simulation"), n_max, run, progress)
    if figure == "fig3":
        cells = [{"s": 4, "rho": rho, "jobsize": jobsize} for rho in (0.7, 0.9) for jobsize in JOBSIZES]
        return _grid_rates("fig3_rates", cells, ("simulation",), n_max, run, progress)
    if figure == "fig4":
        cells = [{"s": s, "rho": rho} for s in (3, 4) for rho in (0.4, 0.6, 0.7, 0.8, 0.9)]
        return _grid_rates("fig4_rates", cells, ("approximation", "oracle"), n_max, run, progress)

    config = SystemConfig(rates=(1.0, 2.0, 5.0), arrival_rate=0.7 * 8.0)
    summary = replicate(config, departures, reps, master_seed=seed, workers=workers, progress=progress)
    return {"fig5_rates": profile_rows(pooled_conditional_rates(summary.results, min_time=1.0), n_max)}


def cmd_compare(
    a: Mapping[str, Any],
    b: Mapping[str, Any],
    metrics: Optional[Sequence[str]] = None,
    tolerance: Optional[float] = None,
) -> CompareReport:
    """
    Compare two result documents metric by metric.

    Both documents are flattened to dotted keys; ``metrics`` are glob patterns over those keys and
    default to the shared ``metrics.*`` section. ``rel_diff = (a - b) / a``.

    Raises:
        ValueError: If no metric is shared by both documents.
    """
    flat_a = flatten_metrics(dict(a))
    flat_b = flatten_metrics(dict(b))
    patterns = list(metrics) if metrics else ["metrics.*"]
    keys = [key for key in flat_a if key in flat_b and any(fnmatch.fnmatchcase(key, p) for p in patterns)]
    if not keys:
        raise ValueError(f"No shared metric matches {patterns}")
    rows = [
        {
            "metric": key,
            "a": flat_a[key],
            "b": flat_b[key],
            "abs_diff": flat_a[key] - flat_b[key],
            "rel_diff": relative_difference(flat_a[key], flat_b[key]),
        }
        for key in keys
    ]
    return CompareReport(rows=rows, tolerance=tolerance)


def _load_document(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path) as f:
        document: Dict[str, Any] = json.load(f)
    return document


def run_experiment(spec: ExperimentSpec) -> ExperimentOutput:
    """Dispatch an ``ExperimentSpec`` to its command."""
    logger.info("Running %s", spec.command)
    if spec.command == "compare":
        report = cmd_compare(
            _load_document(spec.inputs[0]), _load_document(spec.inputs[1]), spec.metrics, spec.tolerance
        )
        return ExperimentOutput(
            document=report.to_dict(), tables={"compare": report.rows}, ok=report.ok, name="compare"
        )
    if spec.command == "table2":
        cells = spec.cells
        if cells is None and spec.config is not None:
            cells = [{"s": spec.config.s, "rho": spec.config.rho}]
        rows = cmd_table2(
            cells,
            departures=spec.departures,
            reps=spec.reps,
            seed=spec.seed,
            workers=spec.workers,
            progress=spec.progress,
        )
        return ExperimentOutput(tables={"table2": rows})
    if spec.command == "figure":
        assert spec.figure is not None
        tables = cmd_figure(
            spec.figure,
            departures=spec.departures,
            reps=spec.reps,
            seed=spec.seed,
            workers=spec.workers,
            n_max=spec.n_max,
            truncation=spec.truncation,
            progress=spec.progress,
        )
        return ExperimentOutput(tables=tables)

    config = spec.config
    assert config is not None
    if spec.command == "simulate":
        document = cmd_simulate(
            config, spec.departures, spec.reps, spec.seed, spec.workers, spec.n_max, progress=spec.progress
        )
        return ExperimentOutput(document=document, name="simulate")
    if spec.command == "oracle":
        document, joint = cmd_oracle(config, spec.truncation, spec.n_max, spec.joint_min_prob)
        return ExperimentOutput(document=document, tables={"joint": joint}, name="oracle", tables_first=False)
    if spec.command == "sqa":
        return ExperimentOutput(document=cmd_sqa(config, spec.rate_source), name="sqa")
    rows = cmd_rates(
        config,
        spec.sources,
        spec.n_max,
        departures=spec.departures,
        reps=spec.reps,
        seed=spec.seed,
        workers=spec.workers,
        truncation=spec.truncation,
    )
    return ExperimentOutput(tables={"rates": rows})
