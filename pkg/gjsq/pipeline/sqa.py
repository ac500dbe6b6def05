"""
Single queue approximation of the two-server GJSQ system.

Each server is treated as an isolated birth-death queue whose arrival rate depends on its own
queue length. ``sqa_pipeline`` chains the limiting rates, the approximation profiles, the
birth-death solves and the comparison with a reference.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..model.base import SystemConfig
from ..model.results import QueueStats, RateProfile
from ..sqa.spectral import SpectralData
from ..step.sqa import (
    ApproximateRatesStep,
    BirthDeathStep,
    LimitingRatesStep,
    OracleRatesStep,
    RelativeDifferenceStep,
)
from .base import Pipeline

__all__ = [
    "SQAResult",
    "build_sqa_pipeline",
    "sqa_pipeline",
]

RATE_SOURCES = ("approximation", "oracle")


@dataclass
class SQAResult:
    """Per-server profiles and statistics of an SQA run, with optional comparison."""

    config: SystemConfig
    profiles: List[RateProfile]
    stats: List[QueueStats]
    spectral: Optional[SpectralData] = None
    differences: Dict[str, float] = field(default_factory=dict)

    def metrics(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for stats in self.stats:
            out.update(stats.metrics())
        return out

    def to_dict(self) -> Dict[str, Any]:
        """JSON form ``{"1": {rates, pi, mean, std, lambda_bar}, "2": {...}}`` plus flat ``metrics`` and extras."""
        data: Dict[str, Any] = {"config": self.config.to_dict(), "metrics": self.metrics()}
        for stats, profile in zip(self.stats, self.profiles):
            data[str(stats.server + 1)] = stats.to_dict(profile)
        if self.spectral is not None:
            data["limiting_rates"] = {"lam1": self.spectral.lam1_lim, "lam2": self.spectral.lam2_lim.tolist()}
        if self.differences:
            data["differences"] = self.differences
        return data


def build_sqa_pipeline(rate_source: str = "approximation", K: Optional[int] = None) -> Pipeline:
    """
    Build the SQA pipeline.

    Args:
        rate_source: ``"approximation"`` for the fitted and limiting rates, ``"oracle"`` for the exact
            conditional rates of the truncated chain (exponential sizes only).
        K: Truncation level of the oracle.

    Raises:
        ValueError: If the rate source is unknown.
    """
    if rate_source not in RATE_SOURCES:
        raise ValueError(f"Unknown rate source: {rate_source}")
    pipeline = Pipeline("SQA")
    if rate_source == "approximation":
        pipeline.add_step(LimitingRatesStep()).add_step(ApproximateRatesStep())
    else:
        pipeline.add_step(OracleRatesStep(K=K))
    return pipeline.add_step(BirthDeathStep()).add_step(RelativeDifferenceStep())


def sqa_pipeline(
    config: SystemConfig, reference: Optional[Dict[str, float]] = None, rate_source: str = "approximation"
) -> SQAResult:
    """
    Run the single queue approximation of ``config``.

    Args:
        config: Canonical ``(1, s)`` system with uniform tie breaking.
        reference: Optional metrics (``mean_q1``, ``std_q1``, ...) to compare with, for example a
            simulation summary mean.
        rate_source: See ``build_sqa_pipeline``.

    Returns:
        The per-server results; ``differences`` holds ``(reference - sqa) / reference``.

    Example:
        >>> result = sqa_pipeline(SystemConfig.two_server(2, 0.7))
        >>> round(result.stats[1].mean, 3)
        2.033
    """
    data: Dict[str, Any] = {"config": config}
    if reference is not None:
        data["reference"] = reference
    data = build_sqa_pipeline(rate_source).process(data)
    return SQAResult(
        config=config,
        profiles=data["profiles"],
        stats=data["stats"],
        spectral=data.get("spectral"),
        differences=data.get("differences", {}),
    )
