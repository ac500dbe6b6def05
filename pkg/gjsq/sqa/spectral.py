"""
Limiting conditional arrival rates of the two-server GJSQ system.

For a system with rates ``(1, s)``, load ``rho`` and ``lam = (1 + s) * rho`` the conditional arrival
rates become ``lam1(n) -> alpha`` and ``lam2(s * n + r) -> lam2_lim(r)`` for ``n -> inf``, where
``alpha = rho ** (1 + s)``. The server-2 limits are ratios of the phase constants ``A(0..s-1)``
which are assembled from

* the ``s`` roots ``beta_1..beta_s`` inside the disc ``|beta| < alpha`` of the positive-side
  characteristic equation,
* the single root ``beta_{s+1}`` inside the disc of the negative-side characteristic equation,
* the eigenvector ratios ``ipos`` and ``ineg`` and
* the coefficients ``c_hat`` and boundary vector ``h`` of an ``s x s`` linear system.

Both characteristic equations are solved in the scaled variable ``z = beta / alpha`` as explicit
polynomials (the power sum ``g+^s + g-^s`` is a polynomial in ``beta``) by companion-matrix
eigenvalues. Complex arithmetic is used throughout; only ``A`` and the rates are required to be
real.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "SpectralData",
    "SpectralError",
    "a_of_r",
    "f_func",
    "f_func_on_roots",
    "g_pm",
    "ineg_ratio",
    "inner_root_neg",
    "inner_roots_pos",
    "ipos_ratio",
    "limiting_rates",
    "power_sum",
    "solve_coefficients",
    "spectral_data",
]

logger = logging.getLogger(__name__)

# Roots with | |z| - 1 | below this are too close to the disc boundary to classify.
DISC_TOL = 1e-10
# Relative size of the imaginary part of A tolerated as round-off.
REALITY_TOL = 1e-9


class SpectralError(RuntimeError):
    """Numerical failure in the spectral layer, with the offending quantities attached."""

    def __init__(self, message: str, **diagnostics: Any):
        super().__init__(message)
        self.diagnostics = diagnostics


def _check_params(rho: float, s: int) -> None:
    if not 0 < rho < 1:
        raise ValueError(f"Load must lie in (0, 1), got {rho}")
    if int(s) != s or s < 1:
        raise ValueError(f"Fast server rate must be an integer >= 1, got {s}")


def _constants(rho: float, s: int) -> Tuple[float, float, float]:
    """Return ``(alpha, lam, total)`` with ``total = (1 + s) * (rho + 1) = lam + 1 + s``."""
    return rho ** (1 + s), (1 + s) * rho, (1 + s) * (rho + 1)


def _check_r(r: int, s: int) -> None:
    if not 0 <= r < s:
        raise ValueError(f"Phase r must lie in 0..{s - 1}, got {r}")


def ipos_ratio(alpha: float, beta: complex, r: int, rho: float, s: int) -> complex:
    """
    Return ``ipos(alpha, beta, r) / ipos(alpha, beta, 0)``.

    The positive-side eigenvector is geometric with base
    ``(alpha * beta * total - beta**2 * lam - alpha**2) / (alpha * beta * s)``.

    Raises:
        ValueError: If ``r`` is outside ``0..s-1`` or ``alpha * beta == 0``.
    """
    _check_r(r, s)
    if alpha * beta == 0:
        raise ValueError("ipos needs alpha * beta != 0")
    if r == 0:
        return complex(1.0)
    _, lam, total = _constants(rho, s)
    base = (alpha * beta * total - beta * beta * lam - alpha * alpha) / (alpha * beta * s)
    return complex(base**r)


def g_pm(beta: complex, rho: float, s: int) -> Tuple[complex, complex]:
    """
    Return ``(g+, g-)``, the two roots of ``s * x**2 - (total - beta) * x + lam = 0``.

    They satisfy ``g+ + g- = (total - beta) / s`` and ``g+ * g- = lam / s``.
    """
    _, lam, total = _constants(rho, s)
    root = np.sqrt(complex((beta - total) ** 2 - 4 * s * lam))
    return complex((total - beta + root) / (2 * s)), complex((total - beta - root) / (2 * s))


def f_func(alpha: float, beta: complex, x: complex, rho: float, s: int) -> complex:
    """Return ``F(alpha, beta, x) = beta - total + s * x + (beta / alpha) * lam * x**(s - 1)``."""
    _, lam, total = _constants(rho, s)
    return complex(beta - total + s * x + (beta / alpha) * lam * x ** (s - 1))


def f_func_on_roots(alpha: float, beta: complex, x: complex, rho: float, s: int) -> complex:
    """
    Second form of ``F``, ``lam / x * ((beta / alpha) * x**s - 1)``, valid when ``x`` is ``g+`` or ``g-``.

    Raises:
        ValueError: If ``x == 0``.
    """
    if x == 0:
        raise ValueError("The second form of F is undefined at x = 0")
    lam = (1 + s) * rho
    return complex(lam / x * ((beta / alpha) * x**s - 1))


def ineg_ratio(alpha: float, beta: complex, r: int, rho: float, s: int) -> complex:
    """
    Return ``ineg(alpha, beta, r) / ineg(alpha, beta, 0)``.

    Raises:
        ValueError: If ``r`` is outside ``0..s-1``.
        SpectralError: If ``F(g-) == F(g+)`` (double root of the quadratic).
    """
    _check_r(r, s)
    if r == 0:
        return complex(1.0)
    g_plus, g_minus = g_pm(beta, rho, s)
    f_minus = f_func(alpha, beta, g_minus, rho, s)
    f_plus = f_func(alpha, beta, g_plus, rho, s)
    denominator = f_minus - f_plus
    if abs(denominator) <= 1e-14 * max(abs(f_minus), abs(f_plus), 1.0):
        raise SpectralError(
            "Degenerate ineg denominator: F(g-) == F(g+)", beta=beta, g_plus=g_plus, g_minus=g_minus
        )
    return complex((f_minus * g_plus**r - f_plus * g_minus**r) / denominator)


def power_sum(e1: Any, e2: Any, k: int) -> Any:
    """
    Return ``p_k = x1**k + x2**k`` for the roots of ``x**2 - e1 * x + e2``.

    Uses ``p_0 = 2``, ``p_1 = e1`` and ``p_k = e1 * p_{k-1} - e2 * p_{k-2}``, so it works for numbers
    and for ``numpy.polynomial.Polynomial`` coefficients alike.
    """
    prev, cur = 2 * (e1**0), e1
    if k == 0:
        return prev
    for _ in range(k - 1):
        prev, cur = cur, e1 * cur - e2 * prev
    return cur


def _positive_polynomial(rho: float, s: int) -> Polynomial:
    """``(-lam z**2 + total z - 1)**s - alpha s**s z**(s+1)``, the positive equation divided by ``alpha**(2s)``."""
    alpha, lam, total = _constants(rho, s)
    quad = Polynomial([-1.0, total, -lam])
    return quad**s - Polynomial.basis(s + 1) * (alpha * s**s)


def _negative_polynomial(rho: float, s: int) -> Polynomial:
    """``s**s + lam**s z**2 - s**s z p_s(z)``, the negative equation divided by ``alpha**2``."""
    alpha, lam, total = _constants(rho, s)
    e1 = Polynomial([total / s, -alpha / s])
    e2 = Polynomial([lam / s])
    p_s = power_sum(e1, e2, s)
    z = Polynomial.basis(1)
    return Polynomial([float(s**s)]) + Polynomial.basis(2) * lam**s - z * p_s * float(s**s)


def _roots_in_disc(poly: Polynomial, label: str) -> np.ndarray:
    roots = poly.roots().astype(complex)
    moduli = np.abs(roots)
    ambiguous = np.abs(moduli - 1.0) <= DISC_TOL
    if ambiguous.any():
        raise SpectralError(f"{label} root on the disc boundary", roots=roots)
    inside = roots[moduli < 1.0]
    order = np.lexsort((np.angle(inside), np.abs(inside)))
    return inside[order]


def inner_roots_pos(rho: float, s: int) -> np.ndarray:
    """
    Return ``beta_1..beta_s``, the roots with ``|beta| < alpha`` of the positive-side equation.

    Sorted by modulus, then argument.

    Raises:
        SpectralError: If the number of roots inside the disc is not ``s``.
    """
    _check_params(rho, s)
    alpha = rho ** (1 + s)
    inside = _roots_in_disc(_positive_polynomial(rho, s), "Positive-side")
    logger.debug("rho=%s s=%d: %d positive-side roots inside the disc", rho, s, len(inside))
    if len(inside) != s:
        raise SpectralError(f"Expected {s} positive-side roots inside the disc, found {len(inside)}", z=inside)
    return inside * alpha


def inner_root_neg(rho: float, s: int) -> complex:
    """
    Return ``beta_{s+1}``, the single root with ``|beta| < alpha`` of the negative-side equation.

    Raises:
        SpectralError: Listing all candidates if zero or several roots lie inside the disc.
    """
    _check_params(rho, s)
    alpha = rho ** (1 + s)
    inside = _roots_in_disc(_negative_polynomial(rho, s), "Negative-side")
    if len(inside) != 1:
        raise SpectralError(
            f"Expected a single negative-side root inside the disc, found {len(inside)}", candidates=inside * alpha
        )
    return complex(inside[0] * alpha)


def _matrices(rho: float, s: int) -> Dict[str, np.ndarray]:
    alpha, lam, total = _constants(rho, s)
    eye = np.eye(s, dtype=complex)
    lower = np.eye(s, k=-1, dtype=complex)
    m_0_last = np.zeros((s, s), dtype=complex)
    m_0_last[0, s - 1] = 1.0
    m_last_0 = np.zeros((s, s), dtype=complex)
    m_last_0[s - 1, 0] = 1.0
    return {
        "K": 0.5 * lam * m_0_last + alpha * eye,
        "D": -total * eye + s * lower.T + lam * lower,
        "B": lam * eye + alpha * s * m_last_0,
        "R": lam * m_0_last + alpha * eye,
    }


def ipos_vector(alpha: float, beta: complex, rho: float, s: int) -> np.ndarray:
    """Return ``ipos(alpha, beta, 0..s-1)``."""
    return np.array([ipos_ratio(alpha, beta, r, rho, s) for r in range(s)])


def ineg_vector(alpha: float, beta: complex, rho: float, s: int) -> np.ndarray:
    """Return ``ineg(alpha, beta, 0..s-1)``."""
    return np.array([ineg_ratio(alpha, beta, r, rho, s) for r in range(s)])


def solve_coefficients(
    rho: float, s: int, betas: np.ndarray, beta_neg: complex
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Solve the boundary system for ``c_hat_1..c_hat_s`` and compute ``h(0..s-1)``.

    Column ``i`` of the system is ``(beta_i * B + alpha**2 * D @ inv(K)) @ ipos_i`` and the right-hand
    side is ``-beta_{s+1} * R @ ineg``, with ``K = lam/2 M[0,s-1] + alpha I``,
    ``D = -total I + s Lo^T + lam Lo``, ``B = lam I + alpha s M[s-1,0]`` and
    ``R = lam M[0,s-1] + alpha I``. Then ``h = alpha * inv(K) @ sum_i c_hat_i ipos_i``.

    Returns:
        ``(c_hat, h, residual)`` where ``residual`` is the max-norm residual of the system.

    Raises:
        SpectralError: If the system is singular.
    """
    _check_params(rho, s)
    alpha = rho ** (1 + s)
    mats = _matrices(rho, s)
    k_inv = np.linalg.inv(mats["K"])
    boundary = alpha * alpha * mats["D"] @ k_inv
    vectors = np.column_stack([ipos_vector(alpha, beta, rho, s) for beta in betas])
    system = np.column_stack(
        [(beta * mats["B"] + boundary) @ vectors[:, i] for i, beta in enumerate(betas)]
    )
    rhs = -beta_neg * mats["R"] @ ineg_vector(alpha, beta_neg, rho, s)
    try:
        c_hat = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as err:
        raise SpectralError("Singular coefficient system", system=system) from err
    residual = float(np.max(np.abs(system @ c_hat - rhs)))
    h = alpha * k_inv @ (vectors @ c_hat)
    return c_hat, h, residual


def _assemble_a(
    rho: float, s: int, betas: np.ndarray, beta_neg: complex, c_hat: np.ndarray, h: np.ndarray
) -> np.ndarray:
    alpha = rho ** (1 + s)
    vectors = np.column_stack([ipos_vector(alpha, beta, rho, s) for beta in betas])
    weights = c_hat * betas / (alpha - betas)
    negative = beta_neg / (1 - beta_neg) * ineg_vector(alpha, beta_neg, rho, s)
    return np.asarray(vectors @ weights + h + negative, dtype=complex)


@dataclass(frozen=True)
class SpectralData:
    """
    Spectral quantities of one ``(rho, s)`` pair.

    ``a_values`` holds ``A(0..s-1)``; ``A`` is determined up to a common constant and is stored
    real and oriented positive.
    """

    rho: float
    s: int
    alpha: float
    betas: np.ndarray
    beta_neg: complex
    c_hat: np.ndarray
    h: np.ndarray
    a_values: np.ndarray
    system_residual: float = 0.0
    max_imag: float = 0.0

    @property
    def lam1_lim(self) -> float:
        return self.alpha

    @property
    def lam2_lim(self) -> np.ndarray:
        """``s A(r+1) / A(r)`` for ``r < s-1`` and ``s alpha A(0) / A(s-1)`` for ``r = s-1``."""
        a = self.a_values
        rates = np.empty(self.s)
        rates[:-1] = self.s * a[1:] / a[:-1]
        rates[-1] = self.s * self.alpha * a[0] / a[-1]
        return rates

    def to_dict(self) -> Dict[str, Any]:
        """Diagnostics: roots, coefficients, ``A`` and the polynomial and system residuals."""

        def pairs(values: np.ndarray) -> List[List[float]]:
            return [[float(v.real), float(v.imag)] for v in np.atleast_1d(values)]

        z_pos = self.betas / self.alpha
        z_neg = self.beta_neg / self.alpha
        return {
            "rho": self.rho,
            "s": self.s,
            "alpha": self.alpha,
            "betas": pairs(self.betas),
            "beta_neg": pairs(np.array([self.beta_neg])),
            "c_hat": pairs(self.c_hat),
            "h": pairs(self.h),
            "A": self.a_values.tolist(),
            "lam2_lim": self.lam2_lim.tolist(),
            "residuals": {
                "positive_polynomial": float(np.max(np.abs(_positive_polynomial(self.rho, self.s)(z_pos)))),
                "negative_polynomial": float(abs(_negative_polynomial(self.rho, self.s)(z_neg))),
                "coefficient_system": self.system_residual,
                "max_imag_A": self.max_imag,
            },
        }


def spectral_data(rho: float, s: int) -> SpectralData:
    """
    Compute all spectral quantities for ``(rho, s)``.

    Raises:
        ValueError: If ``rho`` is outside ``(0, 1)`` or ``s`` is not an integer >= 1.
        SpectralError: On root-count, degeneracy, singularity or reality failures.
    """
    _check_params(rho, s)
    s = int(s)
    alpha = rho ** (1 + s)
    betas = inner_roots_pos(rho, s)
    beta_neg = inner_root_neg(rho, s)
    c_hat, h, residual = solve_coefficients(rho, s, betas, beta_neg)
    a_complex = _assemble_a(rho, s, betas, beta_neg, c_hat, h)

    scale = float(np.max(np.abs(a_complex)))
    if scale == 0 or not math.isfinite(scale):
        raise SpectralError("A vanishes or is not finite", A=a_complex)
    max_imag = float(np.max(np.abs(a_complex.imag))) / scale
    if max_imag > REALITY_TOL:
        raise SpectralError(f"A is not real: relative imaginary part {max_imag:.3g}", A=a_complex)
    a_real = a_complex.real
    if (a_real < 0).all():
        a_real = -a_real
    if not (a_real > 0).all():
        raise SpectralError("A changes sign", A=a_real)
    logger.debug("rho=%s s=%d: A=%s, system residual %.3g", rho, s, a_real, residual)
    return SpectralData(
        rho=rho,
        s=s,
        alpha=alpha,
        betas=betas,
        beta_neg=beta_neg,
        c_hat=c_hat,
        h=h,
        a_values=a_real,
        system_residual=residual,
        max_imag=max_imag,
    )


def a_of_r(spectral: SpectralData, r: int) -> float:
    """Return ``A(r)``."""
    _check_r(r, spectral.s)
    return float(spectral.a_values[r])


def limiting_rates(rho: float, s: int) -> Tuple[float, np.ndarray]:
    """
    Return ``(lam1_lim, lam2_lim)`` with ``lam1_lim = rho ** (1 + s)`` and ``lam2_lim`` of length ``s``.

    Example:
        >>> lam1, lam2 = limiting_rates(0.7, 4)
        >>> round(lam1, 5)
        0.16807
    """
    data = spectral_data(rho, s)
    return data.lam1_lim, data.lam2_lim
