"""
Approximate conditional arrival rates for the single queue approximation.

Server 1 uses three fitted boundary rates for ``n < 3`` and the exact limit ``rho ** (1 + s)``
beyond. Server 2 receives every arrival while it holds at most ``s - 2`` jobs, uses a damped
version of the limiting pattern for ``s - 1 <= n <= 2s - 1`` and the limiting pattern from ``2s``
on. The fits were made for ``s = 1..4`` and ``rho`` from 0.3 to 0.99; other inputs are served with
an ``OutOfFitRangeWarning``.
"""

import warnings
from typing import Optional, Sequence

import numpy as np

from ..model.results import Provenance, RateProfile
from .spectral import limiting_rates

__all__ = [
    "N1",
    "OutOfFitRangeWarning",
    "approx_rate_server1",
    "approx_rate_server2",
    "approximate_profile",
    "n2",
]

# Cut-off of the fitted server-1 head.
N1 = 3

FIT_S_MAX = 4
FIT_RHO = (0.3, 0.99)

_COEF_N0 = np.array([0.669, -1.90, 1.23, 1.86, -0.192])
_COEF_N1 = np.array([-0.00856, 1.37, -0.0578, 0.123, -0.254])
_COEF_N2 = np.array([-0.131, -0.820, -6.48, 10.4, 0.893])


class OutOfFitRangeWarning(UserWarning):
    """Fitted rates requested outside the parameter range they were fitted on."""


def n2(s: int) -> int:
    """Cut-off ``2s`` of the damped server-2 head."""
    return 2 * s


def _warn_if_outside(rho: float, s: int) -> None:
    if s > FIT_S_MAX or not FIT_RHO[0] <= rho <= FIT_RHO[1]:
        warnings.warn(
            f"Fitted rates used outside s <= {FIT_S_MAX}, {FIT_RHO[0]} <= rho <= {FIT_RHO[1]}: s={s}, rho={rho}",
            OutOfFitRangeWarning,
            stacklevel=3,
        )


def _check(n: int, rho: float, s: int) -> None:
    if n < 0:
        raise ValueError(f"State must be nonnegative, got {n}")
    if not 0 < rho < 1:
        raise ValueError(f"Load must lie in (0, 1), got {rho}")
    if int(s) != s or s < 1:
        raise ValueError(f"Fast server rate must be an integer >= 1, got {s}")


def _server1_scale(n: int, rho: float, s: int) -> float:
    """Fitted ``lam1(n) / rho ** (1 + s)``."""
    if n == 0:
        features = np.array([s * rho, s, s / rho, 1.0, rho**2 / s**2])
        return float(features @ _COEF_N0)
    if n == 1:
        features = np.array([s * rho**2, 1.0, 1.0 / rho, 1.0 / (s * rho), rho ** (1.0 / s)])
        return float(features @ _COEF_N1)
    if n == 2:
        features = np.array([s * rho, 1.0 / (s * rho), rho / s**2, 1.0 / s**2, rho ** (1.0 / s)])
        return 1.0 + float(features @ _COEF_N2) / 100.0
    return 1.0


def approx_rate_server1(n: int, rho: float, s: int) -> float:
    """
    Approximate ``lam1(n)``.

    Args:
        n: Number of jobs at server 1.
        rho: Load.
        s: Rate of server 2.

    Returns:
        The fitted rate for ``n < 3``, clamped at 0, and ``rho ** (1 + s)`` otherwise.
    """
    _check(n, rho, s)
    if n < N1:
        _warn_if_outside(rho, s)
    return max(rho ** (1 + s) * _server1_scale(n, rho, s), 0.0)


def approx_rate_server2(n: int, rho: float, s: int, lam2_lim: Optional[Sequence[float]] = None) -> float:
    """
    Approximate ``lam2(n)``.

    Args:
        n: Number of jobs at server 2.
        rho: Load.
        s: Rate of server 2.
        lam2_lim: Limiting rates ``lam2_lim(0..s-1)``; computed when omitted.

    Returns:
        ``lam`` for ``n <= s - 2``, ``(1 + (1/s - rho/(2s - 1)) / 2**(n - s + 1)) * lam2_lim(n mod s)``
        for ``s - 1 <= n <= 2s - 1`` and ``lam2_lim(n mod s)`` from ``2s`` on. With ``s = 1`` both
        servers are alike and the server-1 rates are returned.
    """
    _check(n, rho, s)
    s = int(s)
    if s == 1:
        return approx_rate_server1(n, rho, s)
    if n <= s - 2:
        return (1 + s) * rho
    if lam2_lim is None:
        lam2_lim = limiting_rates(rho, s)[1]
    limit = float(lam2_lim[n % s])
    if n >= n2(s):
        return limit
    _warn_if_outside(rho, s)
    return (1.0 + (1.0 / s - rho / (2 * s - 1)) / 2.0 ** (n - (s - 1))) * limit


def approximate_profile(server: int, rho: float, s: int, lam2_lim: Optional[Sequence[float]] = None) -> RateProfile:
    """
    Build the approximation profile of a server.

    Server 1 (``server=0``) has head ``lam1(0..2)`` and tail ``(rho ** (1 + s),)``; server 2 has head
    ``lam2(0..2s-1)`` and the periodic tail ``lam2_lim``.
    """
    if server not in (0, 1):
        raise ValueError(f"Server must be 0 or 1, got {server}")
    alpha = rho ** (1 + s)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", OutOfFitRangeWarning)
        if server == 0 or s == 1:
            head = [approx_rate_server1(n, rho, s) for n in range(N1)]
            tail = (alpha,)
        else:
            if lam2_lim is None:
                lam2_lim = limiting_rates(rho, s)[1]
            head = [approx_rate_server2(n, rho, s, lam2_lim) for n in range(n2(s))]
            tail = tuple(float(rate) for rate in lam2_lim)
    # one fit-range warning per profile
    fit = [w for w in caught if issubclass(w.category, OutOfFitRangeWarning)]
    for other in caught:
        if other not in fit:
            warnings.warn(other.message, other.category, stacklevel=2)
    if fit:
        warnings.warn(fit[0].message, OutOfFitRangeWarning, stacklevel=2)
    return RateProfile(server=server, rates=np.array(head), provenance=Provenance.APPROXIMATION, tail=tail)
