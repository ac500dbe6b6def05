"""Simulation steps: replicate a configuration and expose its statistics to later steps."""

from dataclasses import replace
from typing import Any, Dict, Optional

from ..model.base import SystemConfig
from ..model.jobsize import make_distribution
from ..simulation.replicate import replicate
from .base import BasePipelineStep

__all__ = ["SimulateStep"]


class SimulateStep(BasePipelineStep):
    """
    Run independent replications of ``config`` and store the summary under ``key``.

    With ``jobsize`` set, the configuration is first copied with that job-size law, so one data
    dictionary can carry simulations of several laws side by side. With ``as_reference`` the
    replication means become the ``reference`` of a later ``RelativeDifferenceStep``.
    """

    requires = ("config",)

    def __init__(
        self,
        n_departures: int,
        reps: int,
        seed: Optional[int] = 0,
        jobsize: Optional[str] = None,
        key: str = "simulation",
        as_reference: bool = False,
        warmup_fraction: float = 0.0,
        workers: Optional[int] = None,
        name: Optional[str] = None,
    ):
        """
        Initialize the step.

        Args:
            n_departures: Departures per replication.
            reps: Number of replications.
            seed: Master seed.
            jobsize: Optional job-size law overriding the configured one.
            key: Data key of the ``ReplicationSummary``.
            as_reference: Store the means under ``reference``.
            warmup_fraction: Warm-up fraction per replication.
            workers: Process pool size.
            name: Name of this pipeline step.
        """
        super().__init__(name or (f"Simulate[{jobsize}]" if jobsize else None))
        self.n_departures = n_departures
        self.reps = reps
        self.seed = seed
        self.jobsize = jobsize
        self.key = key
        self.as_reference = as_reference
        self.warmup_fraction = warmup_fraction
        self.workers = workers

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        config: SystemConfig = data["config"]
        if self.jobsize is not None:
            config = replace(config, jobsize=make_distribution(self.jobsize))
        summary = replicate(
            config,
            self.n_departures,
            self.reps,
            master_seed=self.seed,
            warmup_fraction=self.warmup_fraction,
            workers=self.workers,
            progress=False,
        )
        data[self.key] = summary
        if self.as_reference:
            data["reference"] = summary.mean
        return data
