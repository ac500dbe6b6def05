"""Result types shared by the simulator, the oracle and the single queue approximation."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

__all__ = [
    "Provenance",
    "QueueStats",
    "RateProfile",
    "flatten_metrics",
    "relative_difference",
]


class Provenance(str, Enum):
    """Where a conditional arrival-rate profile comes from."""

    ORACLE = "oracle"
    APPROXIMATION = "approximation"
    SIMULATION = "simulation"


@dataclass(frozen=True)
class RateProfile:
    """
    Conditional arrival rates ``n -> lambda_i(n)`` of one server.

    The profile has an explicit head ``rates[0..len-1]`` where ``nan`` marks an absent state, and
    an optional periodic tail: for ``n >= len(rates)`` the rate is ``tail[n % len(tail)]``. Without
    a tail the states beyond the head are absent.

    Attributes:
        server: 0-based server index.
        rates: Head of the profile, jobs per unit time.
        provenance: Source of the rates.
        tail: Periodic continuation indexed by absolute ``n`` modulo its length.
        stderr: Optional standard errors aligned with ``rates``.
    """

    server: int
    rates: np.ndarray
    provenance: Provenance
    tail: Tuple[float, ...] = ()
    stderr: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        object.__setattr__(self, "rates", rates)
        present = rates[~np.isnan(rates)]
        if (present < 0).any() or any(value < 0 for value in self.tail):
            raise ValueError("Conditional arrival rates must be nonnegative")

    def rate(self, n: int) -> Optional[float]:
        """
        Return ``lambda_i(n)``, or ``None`` when state ``n`` is absent.

        Raises:
            ValueError: If ``n`` is negative.
        """
        if n < 0:
            raise ValueError(f"State must be nonnegative, got {n}")
        if n < len(self.rates):
            value = self.rates[n]
            return None if math.isnan(value) else float(value)
        if self.tail:
            return self.tail[n % len(self.tail)]
        return None

    def values(self, n_max: int) -> np.ndarray:
        """Return the rates for ``n = 0..n_max`` with ``nan`` for absent states."""
        out = np.full(n_max + 1, np.nan)
        for n in range(n_max + 1):
            value = self.rate(n)
            if value is not None:
                out[n] = value
        return out

    def stderr_at(self, n: int) -> Optional[float]:
        """Standard error of the rate at ``n`` when known."""
        if self.stderr is None or n >= len(self.stderr) or math.isnan(self.stderr[n]):
            return None
        return float(self.stderr[n])


@dataclass
class QueueStats:
    """
    Marginal queue-length statistics of one server.

    Attributes:
        server: 0-based server index.
        pi: Distribution of the number of jobs, ``pi[n]`` for ``n = 0..len-1``.
        mean: Mean number of jobs.
        std: Standard deviation of the number of jobs.
        lambda_bar: Time-average arrival rate.
        response_time: Mean sojourn time when known.
    """

    server: int
    pi: np.ndarray
    mean: float
    std: float
    lambda_bar: float
    response_time: Optional[float] = None

    @classmethod
    def from_distribution(
        cls, server: int, pi: np.ndarray, lambda_bar: float, response_time: Optional[float] = None
    ) -> "QueueStats":
        """Build the statistics from a distribution over ``n = 0, 1, ...``."""
        pi = np.asarray(pi, dtype=float)
        n = np.arange(len(pi))
        mean = float(np.dot(n, pi))
        second = float(np.dot(n * n, pi))
        return cls(
            server=server,
            pi=pi,
            mean=mean,
            std=math.sqrt(max(second - mean * mean, 0.0)),
            lambda_bar=lambda_bar,
            response_time=response_time,
        )

    def metrics(self) -> Dict[str, float]:
        """Return the scalar metrics keyed with the 1-based server number."""
        i = self.server + 1
        out = {f"mean_q{i}": self.mean, f"std_q{i}": self.std, f"lambda_bar_{i}": self.lambda_bar}
        if self.response_time is not None:
            out[f"response_{i}"] = self.response_time
        return out

    def to_dict(self, profile: Optional[RateProfile] = None, n_max: Optional[int] = None) -> Dict[str, Any]:
        """JSON form ``{rates, pi, mean, std, lambda_bar}``."""
        out: Dict[str, Any] = {
            "pi": self.pi.tolist(),
            "mean": self.mean,
            "std": self.std,
            "lambda_bar": self.lambda_bar,
        }
        if self.response_time is not None:
            out["response_time"] = self.response_time
        if profile is not None:
            rates = profile.values(n_max if n_max is not None else len(self.pi) - 1)
            out["rates"] = [None if math.isnan(value) else float(value) for value in rates]
        return out


def relative_difference(reference: float, value: float) -> float:
    """
    Return ``(reference - value) / reference``.

    This is the sign convention of the comparison tables: a positive difference means ``value``
    underestimates ``reference``. Two zeros give 0; a zero reference otherwise gives ``nan``.
    """
    if reference == 0.0:
        return 0.0 if value == 0.0 else math.nan
    return (reference - value) / reference


def flatten_metrics(data: Any, prefix: str = "") -> Dict[str, float]:
    """
    Flatten nested JSON-like data into ``{dotted.key: number}``.

    Used to compare result documents of different engines; lists are indexed by position.
    """
    out: Dict[str, float] = {}
    if isinstance(data, bool):
        return out
    if isinstance(data, (int, float)):
        out[prefix] = float(data)
    elif isinstance(data, dict):
        for key, value in data.items():
            out.update(flatten_metrics(value, f"{prefix}.{key}" if prefix else str(key)))
    elif isinstance(data, list):
        items: List[Any] = data
        for index, value in enumerate(items):
            out.update(flatten_metrics(value, f"{prefix}[{index}]"))
    return out
