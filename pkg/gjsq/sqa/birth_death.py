"""Equilibrium of a birth-death queue with state-dependent arrival rates and a constant service rate."""

import logging
import math
from typing import List, Optional

import numpy as np

from ..model.results import QueueStats, RateProfile

__all__ = [
    "DivergentProfileError",
    "birth_death_solve",
]

logger = logging.getLogger(__name__)

MAX_STATES = 100_000


class DivergentProfileError(RuntimeError):
    """The profile has no equilibrium: the product of rate ratios does not converge."""


def _period_ratios(profile: RateProfile, mu: float) -> Optional[np.ndarray]:
    if not profile.tail:
        return None
    return np.asarray(profile.tail, dtype=float) / mu


def birth_death_solve(
    profile: RateProfile, mu: float, tol: float = 1e-12, max_states: int = MAX_STATES
) -> QueueStats:
    """
    Solve ``pi(n) ~ prod_{k<n} lam(k) / mu``.

    The series stops at the first absent or zero rate, or once the exact tail of the periodic part
    ``w_n * S_n / (1 - gamma)``, weighted by ``(n + period) ** 2``, drops below ``tol`` times the
    running normalizer, where ``gamma`` is the product of the ratios over one period and ``S_n`` the sum
    of the partial products over the next period. The weight keeps the truncated second moment within
    ``tol`` as well as the truncated mass.

    Args:
        profile: Conditional arrival rates of the server.
        mu: Service rate, 1 for server 1 and ``s`` for server 2.
        tol: Relative truncation tolerance.
        max_states: Hard cap on the number of states.

    Returns:
        ``QueueStats`` with ``pi``, mean, standard deviation and ``lambda_bar = sum lam(n) pi(n)``.

    Raises:
        ValueError: If ``mu`` is not positive.
        DivergentProfileError: If the periodic tail has ``gamma >= 1``.

    Example:
        >>> import numpy as np
        >>> from gjsq.model.results import Provenance, RateProfile
        >>> flat = RateProfile(0, np.array([]), Provenance.APPROXIMATION, tail=(0.5,))
        >>> round(birth_death_solve(flat, 1.0).mean, 6)
        1.0
    """
    if mu <= 0:
        raise ValueError(f"Service rate must be positive, got {mu}")
    ratios = _period_ratios(profile, mu)
    gamma = 0.0
    if ratios is not None:
        gamma = float(np.prod(ratios))
        if gamma >= 1.0:
            raise DivergentProfileError(f"Periodic tail does not converge: product of ratios {gamma:.6g} >= 1")

    weights: List[float] = [1.0]
    total = 1.0
    head = len(profile.rates)
    n = 0
    while True:
        rate = profile.rate(n)
        if rate is None or rate == 0.0:
            break
        if ratios is not None and n >= head:
            period = len(ratios)
            partial = np.cumprod(np.roll(ratios, -(n % period)))
            tail = weights[-1] * float(partial.sum()) / (1.0 - gamma)
            if tail * (n + period) ** 2 < tol * total:
                break
        if len(weights) >= max_states:
            logger.warning("Birth-death series truncated at the cap of %d states", max_states)
            break
        w = weights[-1] * rate / mu
        if not math.isfinite(w):
            raise DivergentProfileError(f"Birth-death weights overflow at n={n + 1}")
        weights.append(w)
        total += w
        n += 1

    pi = np.array(weights) / total
    rates = np.nan_to_num(profile.values(len(pi) - 1), nan=0.0)
    lambda_bar = float(np.dot(rates, pi))
    logger.debug("Birth-death solve for server %d: %d states", profile.server + 1, len(pi))
    return QueueStats.from_distribution(profile.server, pi, lambda_bar)
