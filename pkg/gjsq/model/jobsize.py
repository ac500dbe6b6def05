"""
Unit-mean job-size distributions.

Four laws are used for the near-insensitivity experiments, all with mean 1:

=====  ===========  ==========  ========
name   law          support     variance
=====  ===========  ==========  ========
uni    Uniform      [0, 2]      1/3
exp    Exponential  [0, inf)    1
weib   Weibull      (0, inf)    5
logn   Log-normal   (0, inf)    10
=====  ===========  ==========  ========

Uniform, exponential and Weibull draws use inversion of the CDF; log-normal draws exponentiate
a normal draw. All draws come from a ``numpy.random.Generator`` owned by the caller.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma

__all__ = [
    "Exponential",
    "JobSizeDistribution",
    "LogNormal",
    "Uniform",
    "Weibull",
    "distribution_from_dict",
    "make_distribution",
    "moments",
    "sample",
]

TARGET_VARIANCE = {"uni": 1.0 / 3.0, "exp": 1.0, "weib": 5.0, "logn": 10.0}


class JobSizeDistribution(ABC):
    """Abstract base class for job-size laws."""

    name: str = ""

    @abstractmethod
    def moments(self) -> Tuple[float, float]:
        """Return the closed-form ``(mean, variance)``."""
        raise NotImplementedError()

    @abstractmethod
    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """
        Draw ``size`` independent job sizes.

        Args:
            rng: Random stream.
            size: Number of draws.

        Returns:
            Array of strictly positive draws.
        """
        raise NotImplementedError()

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Return the fully parameterized JSON form."""
        raise NotImplementedError()

    def sample(self, rng: np.random.Generator) -> float:
        """Draw one job size."""
        return float(self.sample_batch(rng, 1)[0])

    @property
    def support(self) -> Tuple[float, float]:
        """Closed hull of the support."""
        return (0.0, math.inf)


class _InverseCdfDistribution(JobSizeDistribution):
    """Distribution sampled by inverting its CDF at uniform draws in ``(0, 1)``."""

    @abstractmethod
    def quantile(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Inverse CDF."""
        raise NotImplementedError()

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        values = np.asarray(self.quantile(rng.random(size)), dtype=float)
        bad = values <= 0.0
        # a draw of exactly zero is redrawn
        while bad.any():
            values[bad] = self.quantile(rng.random(int(bad.sum())))
            bad = values <= 0.0
        return values


@dataclass(frozen=True)
class Uniform(_InverseCdfDistribution):
    """Uniform law on ``[lo, hi]``."""

    lo: float = 0.0
    hi: float = 2.0
    name = "uni"

    def quantile(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.lo + (self.hi - self.lo) * u

    def moments(self) -> Tuple[float, float]:
        return (self.lo + self.hi) / 2.0, (self.hi - self.lo) ** 2 / 12.0

    @property
    def support(self) -> Tuple[float, float]:
        return (self.lo, self.hi)

    def to_dict(self) -> Dict[str, Any]:
        return {"uniform": {"lo": self.lo, "hi": self.hi}}


@dataclass(frozen=True)
class Exponential(_InverseCdfDistribution):
    """Exponential law with the given rate."""

    rate: float = 1.0
    name = "exp"

    def quantile(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return -np.log1p(-u) / self.rate

    def moments(self) -> Tuple[float, float]:
        return 1.0 / self.rate, 1.0 / self.rate**2

    def to_dict(self) -> Dict[str, Any]:
        return {"exponential": {"rate": self.rate}}


@dataclass(frozen=True)
class Weibull(_InverseCdfDistribution):
    """Weibull law with CDF ``1 - exp(-(x / scale) ** shape)``."""

    shape: float
    scale: float
    name = "weib"

    def quantile(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def moments(self) -> Tuple[float, float]:
        g1 = gamma(1.0 + 1.0 / self.shape)
        g2 = gamma(1.0 + 2.0 / self.shape)
        return float(self.scale * g1), float(self.scale**2 * (g2 - g1**2))

    def to_dict(self) -> Dict[str, Any]:
        return {"weibull": {"shape": self.shape, "scale": self.scale}}


@dataclass(frozen=True)
class LogNormal(JobSizeDistribution):
    """Log-normal law: ``exp(mu + sqrt(sigma2) * Z)`` with ``Z`` standard normal."""

    mu: float
    sigma2: float
    name = "logn"

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.exp(self.mu + math.sqrt(self.sigma2) * rng.standard_normal(size))

    def moments(self) -> Tuple[float, float]:
        mean = math.exp(self.mu + self.sigma2 / 2.0)
        return mean, math.expm1(self.sigma2) * math.exp(2.0 * self.mu + self.sigma2)

    def to_dict(self) -> Dict[str, Any]:
        return {"lognormal": {"mu": self.mu, "sigma2": self.sigma2}}


def _weibull_shape_for_scv(scv: float) -> float:
    """Solve ``gamma(1 + 2/k) / gamma(1 + 1/k)**2 = 1 + scv`` for the shape ``k``."""

    def excess(k: float) -> float:
        return float(gamma(1.0 + 2.0 / k) / gamma(1.0 + 1.0 / k) ** 2) - (1.0 + scv)

    return float(brentq(excess, 0.1, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200))


def make_distribution(name: str) -> JobSizeDistribution:
    """
    Build one of the four unit-mean laws by short name.

    Args:
        name: One of ``uni``, ``exp``, ``weib``, ``logn``.

    Returns:
        The distribution with mean 1 and the tabulated variance.

    Raises:
        ValueError: If the name is unknown.
    """
    if name == "uni":
        return Uniform(0.0, 2.0)
    if name == "exp":
        return Exponential(1.0)
    if name == "weib":
        shape = _weibull_shape_for_scv(TARGET_VARIANCE["weib"])
        return Weibull(shape=shape, scale=float(1.0 / gamma(1.0 + 1.0 / shape)))
    if name == "logn":
        sigma2 = math.log(1.0 + TARGET_VARIANCE["logn"])
        return LogNormal(mu=-sigma2 / 2.0, sigma2=sigma2)
    raise ValueError(f"Unknown job-size distribution: {name}")


def distribution_from_dict(data: Union[str, Dict[str, Any]]) -> JobSizeDistribution:
    """
    Build a distribution from its JSON form.

    Accepts a short name (``"weib"``), ``{"name": "weib"}`` or a fully parameterized form such as
    ``{"weibull": {"shape": k, "scale": c}}``.

    Raises:
        ValueError: If the form is not recognized.
    """
    if isinstance(data, str):
        return make_distribution(data)
    if "name" in data:
        return make_distribution(data["name"])
    if len(data) != 1:
        raise ValueError(f"Cannot parse job-size distribution: {data}")
    kind, params = next(iter(data.items()))
    if kind == "uniform":
        return Uniform(float(params.get("lo", 0.0)), float(params.get("hi", 2.0)))
    if kind == "exponential":
        return Exponential(float(params.get("rate", 1.0)))
    if kind == "weibull":
        return Weibull(shape=float(params["shape"]), scale=float(params["scale"]))
    if kind == "lognormal":
        return LogNormal(mu=float(params["mu"]), sigma2=float(params["sigma2"]))
    raise ValueError(f"Unknown job-size distribution: {kind}")


def sample(dist: JobSizeDistribution, rng: np.random.Generator) -> float:
    """Draw one job size from ``dist``."""
    return dist.sample(rng)


def moments(dist: JobSizeDistribution) -> Tuple[float, float]:
    """Return the closed-form ``(mean, variance)`` of ``dist``."""
    return dist.moments()
