"""
Discrete-event simulation of heterogeneous processor-sharing servers under GJSQ routing.

A server of rate ``s`` holding ``q`` jobs serves each of them at rate ``s / q``. Each server keeps
its jobs in a heap ordered by *finish mark*: the cumulative per-job service the server must have
delivered when the job completes. A per-server ``served`` offset tracks the cumulative per-job
service, so an arrival or departure costs ``O(log q)`` and the next departure of a server is at
``(mark - served) * q / s`` after its last update.

Counters follow the rate definitions: ``A_{i,n}`` counts arrivals routed to server ``i`` that see
``n`` jobs there, ``T_{i,n}`` the time server ``i`` holds ``n`` jobs. The run starts empty and ends
at the epoch of the ``n``-th departure; an optional warm-up fraction of the departures is
discarded by resetting every counter.
"""

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..model.base import SystemConfig

__all__ = [
    "SimResult",
    "Simulation",
    "run_simulation",
]

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, None]

# Draws fetched from the generator per refill.
BUFFER_SIZE = 4096


@dataclass
class SimResult:
    """
    Counters of one simulation run.

    Attributes:
        rates: Service rates of the servers.
        arrivals: ``A_i``, arrivals routed to each server.
        arrivals_by_state: ``A_{i,n}``, routed arrivals that saw ``n`` jobs at their server.
        time_by_state: ``T_{i,n}``, time each server held exactly ``n`` jobs.
        seen_by_state: Number of all arrivals that saw ``n`` jobs at server ``i``.
        t_start: Start of the observation window (end of warm-up).
        t_end: End of the observation window.
        departures: Departures inside the window.
        departed: Departures per server inside the window.
        response_sum: Sum of the sojourn times of the departed jobs per server.
        busy_time: Time each server was busy.
        work_in: Work in the system at ``t_start`` plus the work admitted afterwards.
        work_residual: Residual work in the system at ``t_end``.
        tag: Replication index.
    """

    rates: Tuple[float, ...]
    arrivals: np.ndarray
    arrivals_by_state: List[np.ndarray]
    time_by_state: List[np.ndarray]
    seen_by_state: List[np.ndarray]
    t_start: float
    t_end: float
    departures: int
    departed: np.ndarray
    response_sum: np.ndarray
    busy_time: np.ndarray
    work_in: float
    work_residual: float
    tag: int = 0

    @property
    def n_servers(self) -> int:
        return len(self.rates)

    @property
    def duration(self) -> float:
        """Length of the observation window."""
        return self.t_end - self.t_start

    @property
    def total_arrivals(self) -> int:
        return int(self.arrivals.sum())

    def work_balance_error(self) -> float:
        """Relative gap between ``work_in - work_residual`` and ``sum_i rate_i * busy_i``."""
        processed = float(np.dot(self.rates, self.busy_time))
        admitted = self.work_in - self.work_residual
        scale = max(abs(admitted), abs(processed), 1e-300)
        return abs(admitted - processed) / scale


def _seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is not None and seed < 0:
        raise ValueError(f"Seed must be nonnegative, got {seed}")
    return np.random.SeedSequence(seed)


class _BufferedStream:
    """Hands out draws one at a time from batches produced by ``draw(size)``."""

    def __init__(self, draw: Callable[[int], np.ndarray]):
        self._draw = draw
        self._values: Sequence[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._values):
            self._values = self._draw(BUFFER_SIZE).tolist()
            self._pos = 0
        value = self._values[self._pos]
        self._pos += 1
        return value


def _bump(counter: List[Any], n: int, amount: Union[int, float]) -> None:
    if n >= len(counter):
        counter.extend([0] * (n + 1 - len(counter)))
    counter[n] += amount


class Simulation:
    """
    One replication of the PS system.

    Interarrival times, job sizes and tie-break uniforms come from three independent generators
    spawned from ``seed``, so a run is fully determined by ``(config, seed)``.
    """

    def __init__(self, config: SystemConfig, seed: SeedLike = None):
        """
        Initialize the simulation.

        Args:
            config: System to simulate; any number of servers.
            seed: Integer seed or ``SeedSequence`` of this replication.
        """
        self.config = config
        self.rates = config.rates
        self.router = config.router()
        arrival_rng, size_rng, tie_rng = (np.random.default_rng(child) for child in _seed_sequence(seed).spawn(3))
        lam = config.arrival_rate
        if lam > 0:
            self._interarrivals: Optional[_BufferedStream] = _BufferedStream(
                lambda n: arrival_rng.exponential(1.0 / lam, n)
            )
        else:
            self._interarrivals = None
        self._sizes = _BufferedStream(lambda n: config.jobsize.sample_batch(size_rng, n))
        self._uniforms = _BufferedStream(tie_rng.random)

        n = config.n_servers
        self.now = 0.0
        self.heaps: List[List[Tuple[float, float, int]]] = [[] for _ in range(n)]
        self.served = [0.0] * n
        self.touched = [0.0] * n
        self.next_departure = [math.inf] * n
        self._seq = 0
        self.total_departures = 0
        self._reset_counters()

    def _reset_counters(self) -> None:
        n = self.config.n_servers
        self.t_start = self.now
        self.arrivals = [0] * n
        self.arrivals_by_state: List[List[int]] = [[0] for _ in range(n)]
        self.time_by_state: List[List[float]] = [[0.0] for _ in range(n)]
        self.seen_by_state: List[List[int]] = [[0] for _ in range(n)]
        self.departed = [0] * n
        self.response_sum = [0.0] * n
        self.busy_time = [0.0] * n
        self.departures = 0
        self.work_in = self._residual_work()

    def _residual_work(self) -> float:
        return math.fsum(mark - self.served[i] for i, heap in enumerate(self.heaps) for mark, _, _ in heap)

    def _advance(self, i: int, t: float) -> None:
        """Bring server ``i`` forward to time ``t``."""
        dt = t - self.touched[i]
        if dt > 0:
            q = len(self.heaps[i])
            _bump(self.time_by_state[i], q, dt)
            if q:
                self.served[i] += dt * self.rates[i] / q
                self.busy_time[i] += dt
        self.touched[i] = t

    def _schedule(self, i: int) -> None:
        heap = self.heaps[i]
        if heap:
            remaining = max(heap[0][0] - self.served[i], 0.0)
            self.next_departure[i] = self.touched[i] + remaining * len(heap) / self.rates[i]
        else:
            self.next_departure[i] = math.inf

    def _choose(self, servers: Tuple[int, ...]) -> int:
        if len(servers) == 1:
            return servers[0]
        u = self._uniforms.next()
        cumulative = 0.0
        for server, weight in zip(servers, self.config.tie_weights(servers)):
            cumulative += weight
            if u < cumulative:
                return server
        return servers[-1]

    def _arrive(self, t: float) -> None:
        queue_lengths = [len(heap) for heap in self.heaps]
        for i, q in enumerate(queue_lengths):
            _bump(self.seen_by_state[i], q, 1)
        target = self._choose(self.router.minimizers(queue_lengths))
        _bump(self.arrivals_by_state[target], queue_lengths[target], 1)
        self.arrivals[target] += 1

        size = self._sizes.next()
        self.work_in += size
        self._advance(target, t)
        heapq.heappush(self.heaps[target], (self.served[target] + size, t, self._seq))
        self._seq += 1
        self._schedule(target)

    def _depart(self, i: int, t: float) -> None:
        self._advance(i, t)
        mark, arrived, _ = heapq.heappop(self.heaps[i])
        self.served[i] = mark
        self.departed[i] += 1
        self.response_sum[i] += t - arrived
        self.departures += 1
        self.total_departures += 1
        self._schedule(i)

    def _advance_all(self, t: float) -> None:
        for i in range(self.config.n_servers):
            self._advance(i, t)

    def run(self, n_departures: int, warmup_fraction: float = 0.0, max_time: Optional[float] = None) -> "SimResult":
        """
        Simulate until the ``n_departures``-th departure, or until ``max_time``.

        Args:
            n_departures: Total departures to simulate, warm-up included.
            warmup_fraction: Fraction of ``n_departures`` after which all counters are reset.
            max_time: Optional time limit; required when the arrival rate is zero.

        Returns:
            The counters of the observation window.

        Raises:
            ValueError: On a non-positive ``n_departures``, a warm-up fraction outside ``[0, 1)``
                or a zero arrival rate without ``max_time``.
        """
        if n_departures <= 0:
            raise ValueError(f"Number of departures must be positive, got {n_departures}")
        if not 0.0 <= warmup_fraction < 1.0:
            raise ValueError(f"Warm-up fraction must lie in [0, 1), got {warmup_fraction}")
        if self._interarrivals is None and max_time is None:
            raise ValueError("A zero arrival rate needs max_time")
        warmup = math.ceil(warmup_fraction * n_departures)

        next_arrival = self._interarrivals.next() if self._interarrivals is not None else math.inf
        while self.total_departures < n_departures:
            server = min(range(self.config.n_servers), key=self.next_departure.__getitem__)
            t_departure = self.next_departure[server]
            t_next = min(next_arrival, t_departure)
            if max_time is not None and t_next > max_time:
                self.now = max_time
                break
            self.now = t_next
            if next_arrival <= t_departure:
                self._arrive(next_arrival)
                assert self._interarrivals is not None
                next_arrival += self._interarrivals.next()
            else:
                self._depart(server, t_departure)
                if warmup and self.total_departures == warmup:
                    self._advance_all(self.now)
                    self._reset_counters()
                    logger.debug("Warm-up ended at t=%.6g after %d departures", self.now, warmup)
        self._advance_all(self.now)
        return self._result()

    def _result(self) -> SimResult:
        return SimResult(
            rates=self.rates,
            arrivals=np.array(self.arrivals, dtype=np.int64),
            arrivals_by_state=[np.array(c, dtype=np.int64) for c in self.arrivals_by_state],
            time_by_state=[np.array(c, dtype=float) for c in self.time_by_state],
            seen_by_state=[np.array(c, dtype=np.int64) for c in self.seen_by_state],
            t_start=self.t_start,
            t_end=self.now,
            departures=self.departures,
            departed=np.array(self.departed, dtype=np.int64),
            response_sum=np.array(self.response_sum),
            busy_time=np.array(self.busy_time),
            work_in=self.work_in,
            work_residual=self._residual_work(),
        )


def run_simulation(
    config: SystemConfig,
    n_departures: int,
    seed: SeedLike = None,
    warmup_fraction: float = 0.0,
    max_time: Optional[float] = None,
    tag: int = 0,
) -> SimResult:
    """
    Simulate ``config`` from an empty system until ``n_departures`` jobs have departed.

    Example:
        >>> config = SystemConfig.two_server(s=4, rho=0.7)
        >>> result = run_simulation(config, n_departures=1000, seed=1)
        >>> result.departures
        1000
    """
    result = Simulation(config, seed).run(n_departures, warmup_fraction=warmup_fraction, max_time=max_time)
    result.tag = tag
    logger.debug(
        "Replication %d: %d arrivals, %d departures over %.6g time units",
        tag,
        result.total_arrivals,
        result.departures,
        result.duration,
    )
    return result
