"""Independent replications of a simulation and their aggregation."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from ..model.base import SystemConfig
from .engine import SimResult, run_simulation
from .estimators import queue_length_stats, routing_fractions

__all__ = [
    "ReplicationSummary",
    "replicate",
    "replication_metrics",
]

logger = logging.getLogger(__name__)

_Job = Tuple[SystemConfig, int, np.random.SeedSequence, float, Optional[float], int]


def replication_metrics(result: SimResult) -> Dict[str, float]:
    """Scalar metrics of one run, keyed with 1-based server numbers."""
    metrics: Dict[str, float] = {}
    for stats in queue_length_stats(result):
        metrics.update(stats.metrics())
    for i, fraction in enumerate(routing_fractions(result), start=1):
        metrics[f"fraction_{i}"] = float(fraction)
    return metrics


@dataclass
class ReplicationSummary:
    """
    Per-metric mean and sample standard deviation across replications.

    A metric can be missing from a replication, for example ``response_i`` when server ``i`` saw no
    departure. Its moments then cover the replications that carry it and ``counts`` says how many
    those are. ``std`` is ``None`` for a metric carried by fewer than two replications.
    """

    config: SystemConfig
    n_departures: int
    master_seed: Optional[int]
    metrics: List[Dict[str, float]]
    results: List[SimResult] = field(default_factory=list, repr=False)

    @property
    def reps(self) -> int:
        return len(self.metrics)

    @property
    def counts(self) -> Dict[str, int]:
        """Number of replications carrying each metric, in order of first appearance."""
        counts: Dict[str, int] = {}
        for m in self.metrics:
            for key in m:
                counts[key] = counts.get(key, 0) + 1
        return counts

    @property
    def incomplete(self) -> List[str]:
        """Metrics missing from at least one replication."""
        return [key for key, count in self.counts.items() if count < self.reps]

    def _values(self, key: str) -> List[float]:
        return [m[key] for m in self.metrics if key in m]

    @property
    def mean(self) -> Dict[str, float]:
        return {key: float(np.mean(self._values(key))) for key in self.counts}

    @property
    def std(self) -> Dict[str, Optional[float]]:
        return {
            key: float(np.std(self._values(key), ddof=1)) if count >= 2 else None
            for key, count in self.counts.items()
        }

    def to_dict(self) -> Dict[str, Any]:
        """JSON form with the configuration, the settings, the metric moments and their replication counts."""
        return {
            "config": self.config.to_dict(),
            "departures": self.n_departures,
            "reps": self.reps,
            "seed": self.master_seed,
            "metrics": self.mean,
            "std": self.std,
            "counts": self.counts,
        }


def _run_job(job: _Job) -> SimResult:
    config, n_departures, seed, warmup_fraction, max_time, tag = job
    return run_simulation(config, n_departures, seed=seed, warmup_fraction=warmup_fraction, max_time=max_time, tag=tag)


def replicate(
    config: SystemConfig,
    n_departures: int,
    reps: int,
    master_seed: Optional[int] = 0,
    warmup_fraction: float = 0.0,
    max_time: Optional[float] = None,
    workers: Optional[int] = None,
    progress: bool = True,
) -> ReplicationSummary:
    """
    Run ``reps`` independent replications and aggregate their metrics.

    Replication ``k`` uses the ``k``-th child of ``SeedSequence(master_seed)``, so the summary is
    reproducible and independent of ``workers``.

    Args:
        config: System to simulate.
        n_departures: Departures per replication.
        reps: Number of replications.
        master_seed: Seed of the whole experiment.
        warmup_fraction: Warm-up fraction per replication.
        max_time: Optional time limit per replication.
        workers: Size of the process pool; replications run in-process when ``None`` or 1.
        progress: Show a progress bar.

    Returns:
        The summary, with the raw results attached.

    Raises:
        ValueError: If ``reps`` is not positive.
    """
    if reps <= 0:
        raise ValueError(f"Number of replications must be positive, got {reps}")
    children = np.random.SeedSequence(master_seed).spawn(reps)
    jobs: List[_Job] = [
        (config, n_departures, child, warmup_fraction, max_time, k) for k, child in enumerate(children)
    ]
    bar = {"total": reps, "desc": f"Replicating rho={config.rho:.3g}", "unit": "rep", "disable": not progress}
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(_run_job, jobs), **bar))
    else:
        results = [_run_job(job) for job in tqdm(jobs, **bar)]
    metrics = [replication_metrics(result) for result in results]
    logger.debug("Finished %d replications of %d departures (seed %s)", reps, n_departures, master_seed)
    summary = ReplicationSummary(
        config=config, n_departures=n_departures, master_seed=master_seed, metrics=metrics, results=results
    )
    if summary.incomplete:
        logger.warning("Metrics missing from some replications: %s", ", ".join(summary.incomplete))
    for key, value in summary.mean.items():
        if math.isnan(value):
            logger.warning("Metric %s is undefined in some replication", key)
    return summary
