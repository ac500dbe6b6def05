"""
Core domain types of the GJSQ model.

This module holds the system configuration shared by every engine, the generalized
join-the-shortest-queue (GJSQ) routing rule and the load arithmetic.

A server with rate ``s`` holding ``q`` jobs has GJSQ index ``(q + 1) / s``; an arrival joins
the server with the smallest index and ties are broken at random.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .jobsize import JobSizeDistribution, distribution_from_dict, make_distribution

__all__ = [
    "GJSQRouter",
    "RouteDecision",
    "SystemConfig",
    "gjsq_index",
    "gjsq_route",
    "load",
]

POLICIES = ("gjsq", "jsq")

# Absolute tolerance for index comparison when some rate is not an integer.
FLOAT_TIE_TOL = 1e-12


def gjsq_index(q: int, rate: float) -> float:
    """
    Return the GJSQ index ``(q + 1) / rate`` of a server.

    Args:
        q: Number of jobs at the server.
        rate: Service rate of the server.

    Returns:
        The index of the server.

    Raises:
        ValueError: If ``rate`` is not positive or ``q`` is negative.
    """
    if rate <= 0:
        raise ValueError(f"Service rate must be positive, got {rate}")
    if q < 0:
        raise ValueError(f"Queue length must be nonnegative, got {q}")
    return (q + 1) / rate


def load(lam: float, rates: Sequence[float]) -> float:
    """
    Return the load ``lam / sum(rates)`` of a system.

    Args:
        lam: Poisson arrival rate.
        rates: Service rates of the servers.

    Returns:
        The load of the system.

    Raises:
        ValueError: If ``rates`` is empty or contains a non-positive rate.
    """
    if not rates:
        raise ValueError("At least one service rate is required")
    if any(rate <= 0 for rate in rates):
        raise ValueError(f"Service rates must be positive, got {list(rates)}")
    return lam / math.fsum(rates)


@dataclass(frozen=True)
class RouteDecision:
    """
    Outcome of a routing decision.

    A single entry in ``servers`` routes the job to that server (``Server(i)``), two or more
    entries list the tied servers (``Tie([...])``). Indices are 0-based.
    """

    servers: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.servers:
            raise ValueError("A route decision needs at least one server")
        if len(set(self.servers)) != len(self.servers):
            raise ValueError(f"Duplicate servers in route decision: {self.servers}")

    @property
    def is_tie(self) -> bool:
        """Whether two or more servers share the smallest index."""
        return len(self.servers) > 1

    @property
    def server(self) -> int:
        """
        The chosen server of a tie-free decision.

        Raises:
            ValueError: If the decision is a tie.
        """
        if self.is_tie:
            raise ValueError(f"Decision is a tie between servers {self.servers}")
        return self.servers[0]


def _is_integral(value: float) -> bool:
    return float(value).is_integer()


class GJSQRouter:
    """
    Reusable GJSQ (or JSQ) routing rule for a fixed vector of service rates.

    With integer rates the indices are compared exactly as integers ``(q_i + 1) * L / s_i``
    where ``L`` is the least common multiple of the rates. Otherwise the indices are compared
    as floats with absolute tolerance ``FLOAT_TIE_TOL``.
    """

    def __init__(self, rates: Sequence[float], policy: str = "gjsq"):
        """
        Initialize the router.

        Args:
            rates: Service rates of the servers.
            policy: ``"gjsq"`` to route on ``(q + 1) / s``, ``"jsq"`` to route on ``q`` only.

        Raises:
            ValueError: If the rates are empty or non-positive, or the policy is unknown.
        """
        if not rates:
            raise ValueError("At least one service rate is required")
        if any(rate <= 0 for rate in rates):
            raise ValueError(f"Service rates must be positive, got {list(rates)}")
        if policy not in POLICIES:
            raise ValueError(f"Unknown routing policy: {policy}")
        self.rates = tuple(float(rate) for rate in rates)
        self.policy = policy
        self.exact = policy == "jsq" or all(_is_integral(rate) for rate in self.rates)
        self._weights: Tuple[Union[int, float], ...]
        if policy == "jsq":
            self._weights = tuple(1 for _ in self.rates)
        elif self.exact:
            ints = [int(rate) for rate in self.rates]
            lcm = 1
            for value in ints:
                lcm = lcm * value // math.gcd(lcm, value)
            self._weights = tuple(lcm // value for value in ints)
        else:
            self._weights = tuple(1.0 / rate for rate in self.rates)

    @property
    def weights(self) -> Tuple[Union[int, float], ...]:
        """Per-server multipliers: the compared index of server i is ``(q_i + 1) * weights[i]``."""
        return self._weights

    def minimizers(self, queue_lengths: Sequence[int]) -> Tuple[int, ...]:
        """
        Return the 0-based servers with the smallest index.

        Args:
            queue_lengths: Current number of jobs per server.

        Returns:
            The minimizing servers in increasing order.
        """
        weights = self._weights
        if len(queue_lengths) != len(weights):
            raise ValueError(f"Expected {len(weights)} queue lengths, got {len(queue_lengths)}")
        if self.exact:
            indices = [(q + 1) * w for q, w in zip(queue_lengths, weights)]
            best = min(indices)
            return tuple(i for i, index in enumerate(indices) if index == best)
        findices = [(q + 1) * w for q, w in zip(queue_lengths, weights)]
        fbest = min(findices)
        return tuple(i for i, index in enumerate(findices) if index - fbest <= FLOAT_TIE_TOL)

    def route(self, queue_lengths: Sequence[int]) -> RouteDecision:
        """Return the routing decision for an arrival seeing ``queue_lengths``."""
        return RouteDecision(self.minimizers(queue_lengths))


def gjsq_route(queue_lengths: Sequence[int], rates: Sequence[float]) -> RouteDecision:
    """
    Route an arrival by the GJSQ rule.

    Args:
        queue_lengths: Number of jobs per server just before the arrival.
        rates: Service rates of the servers.

    Returns:
        ``RouteDecision`` with one server, or all tied servers.

    Raises:
        ValueError: If the lists are empty, differ in length or hold invalid values.

    Example:
        >>> gjsq_route([0, 3], [1, 4]).servers
        (0, 1)
    """
    if not queue_lengths or not rates:
        raise ValueError("Queue lengths and rates must be nonempty")
    if len(queue_lengths) != len(rates):
        raise ValueError(f"Got {len(queue_lengths)} queue lengths for {len(rates)} rates")
    if any(q < 0 for q in queue_lengths):
        raise ValueError(f"Queue lengths must be nonnegative, got {list(queue_lengths)}")
    if all(_is_integral(rate) for rate in rates):
        indices = [Fraction(q + 1, int(rate)) for q, rate in zip(queue_lengths, rates) if rate > 0]
        if len(indices) != len(rates):
            raise ValueError(f"Service rates must be positive, got {list(rates)}")
        best = min(indices)
        return RouteDecision(tuple(i for i, index in enumerate(indices) if index == best))
    return GJSQRouter(rates).route(queue_lengths)


@dataclass(frozen=True)
class SystemConfig:
    """
    Configuration of a heterogeneous processor-sharing system.

    Attributes:
        rates: Service rates ``s_1..s_N``; the canonical two-server system is ``(1, s)``.
        arrival_rate: Poisson arrival rate ``lambda`` (JSON key ``"lambda"``).
        jobsize: Unit-mean job-size distribution.
        tie_prob: Tie-break weights per server, renormalized over the tied servers.
            Defaults to uniform.
        policy: ``"gjsq"`` (default) or ``"jsq"``.
    """

    rates: Tuple[float, ...]
    arrival_rate: float
    jobsize: JobSizeDistribution = field(default_factory=lambda: make_distribution("exp"))
    tie_prob: Optional[Tuple[float, ...]] = None
    policy: str = "gjsq"

    def __post_init__(self) -> None:
        rates = tuple(float(rate) for rate in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise ValueError("At least one service rate is required")
        if any(rate <= 0 for rate in rates):
            raise ValueError(f"Service rates must be positive, got {list(rates)}")
        if self.arrival_rate < 0:
            raise ValueError(f"Arrival rate must be nonnegative, got {self.arrival_rate}")
        if self.rho >= 1:
            raise ValueError(f"Unstable system: rho = {self.rho:.6g} >= 1")
        if self.policy not in POLICIES:
            raise ValueError(f"Unknown routing policy: {self.policy}")
        if self.tie_prob is None:
            object.__setattr__(self, "tie_prob", tuple(1.0 / len(rates) for _ in rates))
        else:
            tie_prob = tuple(float(p) for p in self.tie_prob)
            if len(tie_prob) != len(rates):
                raise ValueError(f"tie_prob needs {len(rates)} entries, got {len(tie_prob)}")
            if any(p < 0 for p in tie_prob) or not math.isclose(math.fsum(tie_prob), 1.0, abs_tol=1e-9):
                raise ValueError(f"tie_prob must be nonnegative and sum to 1, got {list(tie_prob)}")
            object.__setattr__(self, "tie_prob", tie_prob)

    @classmethod
    def two_server(
        cls, s: int, rho: float, jobsize: Union[str, JobSizeDistribution] = "exp", **kwargs: Any
    ) -> "SystemConfig":
        """
        Build the canonical system with rates ``(1, s)`` and load ``rho``.

        Args:
            s: Rate of the fast server.
            rho: Load, so that ``lambda = rho * (1 + s)``.
            jobsize: Distribution or its short name.
            **kwargs: Forwarded to the constructor (``tie_prob``, ``policy``).

        Returns:
            The configuration.
        """
        dist = make_distribution(jobsize) if isinstance(jobsize, str) else jobsize
        return cls(rates=(1.0, float(s)), arrival_rate=rho * (1 + s), jobsize=dist, **kwargs)

    @property
    def n_servers(self) -> int:
        """Number of servers."""
        return len(self.rates)

    @property
    def rho(self) -> float:
        """Load ``lambda / sum(rates)``."""
        return load(self.arrival_rate, self.rates)

    @property
    def s(self) -> int:
        """
        Integer rate of the fast server of a canonical ``(1, s)`` system.

        Raises:
            ValueError: If the system is not of the form ``(1, s)`` with integer ``s >= 1``.
        """
        if self.n_servers != 2 or self.rates[0] != 1.0 or not _is_integral(self.rates[1]) or self.rates[1] < 1:
            raise ValueError(f"Expected rates (1, s) with integer s >= 1, got {list(self.rates)}")
        return int(self.rates[1])

    @property
    def has_uniform_ties(self) -> bool:
        """Whether the tie-break weights are uniform."""
        assert self.tie_prob is not None
        return all(math.isclose(p, self.tie_prob[0]) for p in self.tie_prob)

    def router(self) -> GJSQRouter:
        """Return the routing rule of this system."""
        return GJSQRouter(self.rates, self.policy)

    def tie_weights(self, servers: Sequence[int]) -> List[float]:
        """
        Return the probabilities of each tied server.

        Args:
            servers: The tied servers.

        Returns:
            ``tie_prob`` restricted to ``servers`` and renormalized; uniform when all are zero.
        """
        assert self.tie_prob is not None
        raw = [self.tie_prob[i] for i in servers]
        total = math.fsum(raw)
        if total <= 0:
            return [1.0 / len(servers)] * len(servers)
        return [p / total for p in raw]

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the JSON document layout."""
        data: Dict[str, Any] = {
            "rates": list(self.rates),
            "lambda": self.arrival_rate,
            "jobsize": self.jobsize.to_dict(),
            "tie_prob": list(self.tie_prob or ()),
        }
        if self.policy != "gjsq":
            data["policy"] = self.policy
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SystemConfig":
        """
        Build a configuration from its JSON document.

        Either ``lambda`` or ``rho`` must be given; ``jobsize`` defaults to ``exp``.

        Raises:
            ValueError: If required keys are missing or values are invalid.
        """
        if "rates" not in data:
            raise ValueError("Configuration needs 'rates'")
        rates = tuple(float(rate) for rate in data["rates"])
        if "lambda" in data:
            arrival_rate = float(data["lambda"])
        elif "rho" in data:
            arrival_rate = float(data["rho"]) * math.fsum(rates)
        else:
            raise ValueError("Configuration needs 'lambda' or 'rho'")
        jobsize = distribution_from_dict(data.get("jobsize", "exp"))
        tie_prob = data.get("tie_prob")
        return cls(
            rates=rates,
            arrival_rate=arrival_rate,
            jobsize=jobsize,
            tie_prob=tuple(tie_prob) if tie_prob else None,
            policy=data.get("policy", "gjsq"),
        )

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SystemConfig":
        """Load a configuration from a JSON file."""
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_json(self) -> str:
        """Serialize to a JSON string."""
        return json.dumps(self.to_dict(), indent=2)
