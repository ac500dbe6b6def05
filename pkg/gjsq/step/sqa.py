"""
Single queue approximation steps.

Data keys:
    - ``config``: the ``SystemConfig`` (read by every step).
    - ``spectral``: ``SpectralData`` of ``(rho, s)``.
    - ``profiles``: one ``RateProfile`` per server.
    - ``stats``: one ``QueueStats`` per server from the birth-death solve.
    - ``oracle``: the exact ``JointDistribution`` and ``reference`` its marginal metrics.
    - ``reference``: metrics ``{"mean_q1": ...}`` to compare against.
    - ``differences``: relative differences ``(reference - sqa) / reference`` per metric.
"""

import logging
from typing import Any, Dict, Optional

from ..model.base import SystemConfig
from ..model.results import relative_difference
from ..oracle.ctmc import oracle_conditional_rates, oracle_marginals, solve_oracle
from ..sqa.approximation import approximate_profile
from ..sqa.birth_death import birth_death_solve
from ..sqa.spectral import spectral_data
from .base import BasePipelineStep

__all__ = [
    "ApproximateRatesStep",
    "BirthDeathStep",
    "CellConfigStep",
    "LimitingRatesStep",
    "OracleRatesStep",
    "RelativeDifferenceStep",
]

logger = logging.getLogger(__name__)


def _canonical(config: SystemConfig) -> int:
    s = config.s
    if not config.has_uniform_ties:
        raise ValueError("The single queue approximation assumes uniform tie breaking")
    if config.policy != "gjsq":
        raise ValueError(f"The single queue approximation needs GJSQ routing, got {config.policy}")
    return s


class CellConfigStep(BasePipelineStep):
    """Build ``config`` from a grid cell ``{"s": ..., "rho": ..., "jobsize": ...}``."""

    requires = ("cell",)

    def __init__(self, jobsize: str = "exp", name: Optional[str] = None):
        super().__init__(name)
        self.jobsize = jobsize

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        cell = data["cell"]
        data["config"] = SystemConfig.two_server(cell["s"], cell["rho"], cell.get("jobsize", self.jobsize))
        return data


class LimitingRatesStep(BasePipelineStep):
    """Compute the spectral data and limiting rates of the configured system."""

    requires = ("config",)

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        config: SystemConfig = data["config"]
        s = _canonical(config)
        data["spectral"] = spectral_data(config.rho, s)
        return data


class ApproximateRatesStep(BasePipelineStep):
    """Build the approximation profiles of both servers from the limiting rates."""

    requires = ("config", "spectral")

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        config: SystemConfig = data["config"]
        s = _canonical(config)
        lam2_lim = data["spectral"].lam2_lim
        data["profiles"] = [approximate_profile(server, config.rho, s, lam2_lim) for server in (0, 1)]
        return data


class OracleRatesStep(BasePipelineStep):
    """
    Solve the exact chain and use its conditional rates as the profiles.

    The oracle marginals are stored as ``reference`` unless one is already present.
    """

    requires = ("config",)

    def __init__(self, K: Optional[int] = None, name: Optional[str] = None):
        super().__init__(name)
        self.K = K

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        dist = solve_oracle(data["config"], K=self.K)
        data["oracle"] = dist
        data["profiles"] = oracle_conditional_rates(dist)
        if "reference" not in data:
            reference: Dict[str, float] = {}
            for stats in oracle_marginals(dist):
                reference.update(stats.metrics())
            data["reference"] = reference
        return data


class BirthDeathStep(BasePipelineStep):
    """Solve the birth-death queue of every server; server ``i`` serves at its own rate."""

    requires = ("config", "profiles")

    def __init__(self, tol: float = 1e-12, name: Optional[str] = None):
        super().__init__(name)
        self.tol = tol

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        config: SystemConfig = data["config"]
        stats = []
        for profile in data["profiles"]:
            result = birth_death_solve(profile, config.rates[profile.server], tol=self.tol)
            if result.lambda_bar > 0:
                result.response_time = result.mean / result.lambda_bar
            stats.append(result)
        data["stats"] = stats
        return data


class RelativeDifferenceStep(BasePipelineStep):
    """Compare the solved metrics with ``reference`` when one is given."""

    requires = ("stats",)

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        reference: Optional[Dict[str, float]] = data.get("reference")
        if not reference:
            return data
        metrics: Dict[str, float] = {}
        for stats in data["stats"]:
            metrics.update(stats.metrics())
        data["differences"] = {
            key: relative_difference(reference[key], value) for key, value in metrics.items() if key in reference
        }
        return data
