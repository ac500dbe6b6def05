"""
Exact equilibrium of the Markovian two-server system on a truncated grid.

With exponential unit-mean job sizes the number of jobs ``(q1, q2)`` is a continuous-time Markov
chain. The chain is truncated to ``[0, K]^2``: arrivals that would leave the grid are dropped and
the probability mass near the edge is reported as ``tail_mass`` so callers can raise ``K``.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ..model.base import SystemConfig
from ..model.jobsize import Exponential
from ..model.results import Provenance, QueueStats, RateProfile

__all__ = [
    "JointDistribution",
    "OracleError",
    "TruncatedChain",
    "build_generator",
    "default_truncation",
    "oracle_conditional_rates",
    "oracle_marginals",
    "reduced_system",
    "solve_oracle",
    "solve_stationary",
]

logger = logging.getLogger(__name__)

# States whose marginal probability is below this are reported absent.
ABSENT_PROB = 1e-14


class OracleError(RuntimeError):
    """The stationary solve did not meet its residual tolerance."""


def default_truncation(rho: float) -> int:
    """Return ``max(200, ceil(40 / (1 - rho)))``."""
    return max(200, math.ceil(40.0 / (1.0 - rho)))


@dataclass(frozen=True)
class TruncatedChain:
    """
    Generator of the chain on ``[0, K]^2``.

    Attributes:
        config: The two-server exponential system.
        K: Truncation level.
        generator: Sparse ``(K+1)^2`` square generator, state ``(q1, q2)`` at index ``q1 * (K+1) + q2``.
        arrival_rates: Effective arrival rate into each server per state, shape ``(2, K+1, K+1)``;
            zero where the arrival would leave the grid.
        dropped_rate: Arrival rate dropped at the edge per state, shape ``(K+1, K+1)``.
    """

    config: SystemConfig
    K: int
    generator: sp.csr_matrix
    arrival_rates: np.ndarray
    dropped_rate: np.ndarray

    @property
    def n_states(self) -> int:
        return (self.K + 1) ** 2


@dataclass(frozen=True)
class JointDistribution:
    """
    Stationary distribution of a truncated chain.

    Attributes:
        chain: The chain that was solved.
        pi: Probabilities ``pi[q1, q2]``.
        tail_mass: Probability of the boundary band of width ``band``.
        residual: ``max |pi Q|`` after normalization.
        band: Width of the boundary band.
    """

    chain: TruncatedChain
    pi: np.ndarray
    tail_mass: float
    residual: float
    band: int

    def marginal(self, server: int) -> np.ndarray:
        """Marginal distribution ``pi_i(n)`` of a 0-based server."""
        return self.pi.sum(axis=1 - server)


def _check_config(config: SystemConfig) -> int:
    if config.n_servers != 2:
        raise ValueError(f"The oracle handles two servers, got {config.n_servers}")
    s = config.s
    if not isinstance(config.jobsize, Exponential) or config.jobsize.rate != 1.0:
        raise ValueError("The oracle needs exponential unit-mean job sizes")
    return s


def build_generator(config: SystemConfig, K: int) -> TruncatedChain:
    """
    Build the generator of the truncated chain.

    Arrivals are routed by the configured policy at the pre-arrival state and split per
    ``tie_prob`` on ties; server 1 departs at rate 1 and server 2 at rate ``s`` when busy.

    Raises:
        ValueError: If the system is not ``(1, s)`` with exponential sizes, or ``K < 2s``.
    """
    s = _check_config(config)
    if K < 2 * s:
        raise ValueError(f"Truncation level must be at least 2s = {2 * s}, got {K}")
    size = K + 1
    q1, q2 = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")

    weights = config.router().weights
    index1 = (q1 + 1) * weights[0]
    index2 = (q2 + 1) * weights[1]
    tie_share = config.tie_weights([0, 1])
    lam = config.arrival_rate
    share1 = np.where(index1 < index2, 1.0, np.where(index1 > index2, 0.0, tie_share[0]))
    routed = np.stack([lam * share1, lam * (1.0 - share1)])

    dropped = np.where(q1 == K, routed[0], 0.0) + np.where(q2 == K, routed[1], 0.0)
    arrivals = routed.copy()
    arrivals[0][q1 == K] = 0.0
    arrivals[1][q2 == K] = 0.0

    state = (q1 * size + q2).ravel()
    moves = [
        (arrivals[0].ravel(), size),
        (arrivals[1].ravel(), 1),
        (np.where(q1 > 0, config.rates[0], 0.0).ravel(), -size),
        (np.where(q2 > 0, config.rates[1], 0.0).ravel(), -1),
    ]
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    for rate, shift in moves:
        live = rate > 0
        rows.append(state[live])
        cols.append(state[live] + shift)
        vals.append(rate[live])
    row = np.concatenate(rows)
    col = np.concatenate(cols)
    val = np.concatenate(vals)
    n_states = size * size
    outflow = np.bincount(row, weights=val, minlength=n_states)
    generator = sp.coo_matrix(
        (np.concatenate([val, -outflow]), (np.concatenate([row, state]), np.concatenate([col, state]))),
        shape=(n_states, n_states),
    ).tocsr()

    row_sums = float(np.abs(np.asarray(generator.sum(axis=1))).max())
    assert row_sums <= 1e-12 * (lam + sum(config.rates)), "Generator rows must sum to zero"
    logger.debug("Built generator: K=%d, %d states, %d nonzeros", K, n_states, generator.nnz)
    return TruncatedChain(config=config, K=K, generator=generator, arrival_rates=arrivals, dropped_rate=dropped)


def _boundary_band(K: int, s: int) -> int:
    return max(2 * s, K // 20)


def reduced_system(chain: TruncatedChain) -> Tuple[sp.csc_matrix, np.ndarray]:
    """
    Return ``(A, b)`` with ``A x = b`` the balance equations of every state but ``(0, 0)`` once
    ``pi(0, 0)`` is fixed to 1.

    ``A`` is ``Q[1:, 1:].T`` and keeps the sparsity of the generator.
    """
    generator = chain.generator.tocsr()
    system = generator[1:, 1:].T.tocsc()
    rhs = -np.asarray(generator[0, 1:].todense()).ravel()
    return system, rhs


def solve_stationary(chain: TruncatedChain, residual_tol: float = 1e-12) -> JointDistribution:
    """
    Solve ``pi Q = 0`` with ``sum(pi) = 1`` by a sparse direct solve.

    The empty state gets weight 1 and the balance equations of the other states are solved for the
    rest, so the factorized matrix has no dense row. Tiny negative round-off is clipped before
    renormalizing.

    Raises:
        OracleError: If ``max |pi Q|`` exceeds ``residual_tol``.
    """
    size = chain.K + 1
    system, rhs = reduced_system(chain)
    pi = np.concatenate([[1.0], spsolve(system, rhs)])
    pi = np.clip(np.real(pi), 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(chain.generator.T @ pi).max())
    if residual > residual_tol:
        raise OracleError(f"Stationary residual {residual:.3g} exceeds {residual_tol:.3g}")

    grid = pi.reshape(size, size)
    band = _boundary_band(chain.K, chain.config.s)
    edge = size - band
    tail_mass = float(grid[edge:, :].sum() + grid[:edge, edge:].sum())
    logger.debug("Solved K=%d: residual %.3g, tail mass %.3g", chain.K, residual, tail_mass)
    return JointDistribution(chain=chain, pi=grid, tail_mass=tail_mass, residual=residual, band=band)


def solve_oracle(
    config: SystemConfig, K: Optional[int] = None, tail_tol: float = 1e-10, max_doublings: int = 2
) -> JointDistribution:
    """
    Build and solve the chain, doubling ``K`` until the tail mass is below ``tail_tol``.

    Args:
        config: Two-server exponential system.
        K: Initial truncation level; ``default_truncation(rho)`` when omitted.
        tail_tol: Target boundary-band mass.
        max_doublings: Maximum number of doublings of ``K``.

    Returns:
        The distribution on the last grid tried.
    """
    K = K or default_truncation(config.rho)
    dist = solve_stationary(build_generator(config, K))
    for _ in range(max_doublings):
        if dist.tail_mass < tail_tol:
            break
        K *= 2
        logger.info("Tail mass %.3g above %.3g, raising truncation to K=%d", dist.tail_mass, tail_tol, K)
        dist = solve_stationary(build_generator(config, K))
    if dist.tail_mass >= tail_tol:
        logger.warning("Tail mass %.3g still above %.3g at K=%d", dist.tail_mass, tail_tol, K)
    return dist


def _routed_mass(dist: JointDistribution, server: int) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(pi_i(n), sum over the other queue of pi * arrival rate into i)``."""
    flow = dist.pi * dist.chain.arrival_rates[server]
    other = 1 - server
    return dist.marginal(server), flow.sum(axis=other)


def oracle_conditional_rates(dist: JointDistribution, config: Optional[SystemConfig] = None) -> List[RateProfile]:
    """
    Return the exact conditional arrival-rate profiles of both servers.

    ``lam_i(n)`` is the arrival flow into server ``i`` over states with ``q_i = n`` divided by
    ``pi_i(n)``. States with ``pi_i(n) < 1e-14`` are absent. ``config`` defaults to the chain's.
    """
    if config is not None and config != dist.chain.config:
        raise ValueError("Distribution was solved for a different configuration")
    profiles = []
    for server in (0, 1):
        marginal, flow = _routed_mass(dist, server)
        rates = np.full(len(marginal), np.nan)
        present = marginal >= ABSENT_PROB
        rates[present] = flow[present] / marginal[present]
        profiles.append(RateProfile(server=server, rates=rates, provenance=Provenance.ORACLE))
    return profiles


def oracle_marginals(dist: JointDistribution) -> List[QueueStats]:
    """
    Return the marginal statistics of both servers.

    ``lambda_bar_i = sum_n lam_i(n) pi_i(n)``, which equals the total arrival flow into server ``i``.
    """
    stats = []
    for server in (0, 1):
        marginal, flow = _routed_mass(dist, server)
        safe = np.where(marginal > 0, marginal, 1.0)
        lambda_bar = float(np.dot(flow / safe, marginal))
        stats.append(QueueStats.from_distribution(server, marginal, lambda_bar))
    return stats
