"""Estimators computed from the counters of simulation runs."""

from typing import List, Sequence

import numpy as np

from ..model.results import Provenance, QueueStats, RateProfile
from .engine import SimResult

__all__ = [
    "arrival_seen_distribution",
    "estimate_conditional_rates",
    "estimate_time_average_rates",
    "flow_balance_gap",
    "pooled_conditional_rates",
    "queue_length_stats",
    "routing_fractions",
]


def _padded(counter: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=float)
    out[: len(counter)] = counter
    return out


def _rates_from_counts(
    server: int, arrivals: np.ndarray, times: np.ndarray, min_time: float
) -> RateProfile:
    length = max(len(arrivals), len(times))
    a = _padded(arrivals, length)
    t = _padded(times, length)
    rates = np.full(length, np.nan)
    stderr = np.full(length, np.nan)
    exposed = t > min_time
    rates[exposed] = a[exposed] / t[exposed]
    # Poisson count error on A_{i,n}
    stderr[exposed] = np.sqrt(a[exposed]) / t[exposed]
    return RateProfile(server=server, rates=rates, provenance=Provenance.SIMULATION, stderr=stderr)


def estimate_conditional_rates(result: SimResult, min_time: float = 0.0) -> List[RateProfile]:
    """
    Estimate ``lam_i(n) = A_{i,n} / T_{i,n}`` for every server.

    States with ``T_{i,n} <= min_time`` are absent from the profile, never zero. Standard errors
    treat ``A_{i,n}`` as a Poisson count.

    Raises:
        ValueError: If ``min_time`` is negative.
    """
    if min_time < 0:
        raise ValueError(f"Exposure threshold must be nonnegative, got {min_time}")
    return [
        _rates_from_counts(i, result.arrivals_by_state[i], result.time_by_state[i], min_time)
        for i in range(result.n_servers)
    ]


def pooled_conditional_rates(results: Sequence[SimResult], min_time: float = 0.0) -> List[RateProfile]:
    """Estimate the conditional rates from the summed counters of several replications."""
    if not results:
        raise ValueError("At least one simulation result is required")
    if min_time < 0:
        raise ValueError(f"Exposure threshold must be nonnegative, got {min_time}")
    profiles = []
    for i in range(results[0].n_servers):
        length = max(max(len(r.arrivals_by_state[i]), len(r.time_by_state[i])) for r in results)
        arrivals = sum((_padded(r.arrivals_by_state[i], length) for r in results), np.zeros(length))
        times = sum((_padded(r.time_by_state[i], length) for r in results), np.zeros(length))
        profiles.append(_rates_from_counts(i, arrivals, times, min_time))
    return profiles


def estimate_time_average_rates(result: SimResult) -> np.ndarray:
    """Return ``A_i / t`` per server; zeros for an empty window."""
    if result.duration <= 0:
        return np.zeros(result.n_servers)
    return result.arrivals / result.duration


def routing_fractions(result: SimResult) -> np.ndarray:
    """Fraction of the arrivals routed to each server."""
    total = result.total_arrivals
    if total == 0:
        return np.zeros(result.n_servers)
    return result.arrivals / total


def arrival_seen_distribution(result: SimResult, server: int) -> np.ndarray:
    """Distribution of the number of jobs at ``server`` seen by all arrivals."""
    seen = result.seen_by_state[server].astype(float)
    total = seen.sum()
    return seen / total if total > 0 else seen


def queue_length_stats(result: SimResult) -> List[QueueStats]:
    """
    Return the time-weighted queue-length statistics of every server.

    ``pi_i(n) = T_{i,n} / t``; the mean response time covers departed jobs only.
    """
    stats = []
    duration = result.duration
    lambda_bar = estimate_time_average_rates(result)
    for i in range(result.n_servers):
        times = result.time_by_state[i]
        pi = times / duration if duration > 0 else np.eye(1, len(times))[0]
        departed = int(result.departed[i])
        response = float(result.response_sum[i] / departed) if departed else None
        stats.append(QueueStats.from_distribution(i, pi, float(lambda_bar[i]), response))
    return stats


def flow_balance_gap(result: SimResult, server: int) -> float:
    """Return ``lambda_bar_i - rate_i * (1 - pi_i(0))``, zero in equilibrium."""
    stats = queue_length_stats(result)[server]
    idle = float(stats.pi[0]) if len(stats.pi) else 1.0
    return stats.lambda_bar - result.rates[server] * (1.0 - idle)
