"""Analytic reference distributions: the exponential target and the mean-one data generators."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np
from scipy import special

from expo_distance.common import EmptySampleError, InvalidParameterError, PitSample

if TYPE_CHECKING:
    from expo_distance.common import FloatArray

logger = logging.getLogger(__name__)


class DistributionKind(StrEnum):
    """Families of analytic distributions."""

    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    GAMMA = "gamma"


def exponential_cdf(t: FloatArray | float, mu: float) -> FloatArray:
    """Distribution function G_mu(t) = 1 - exp(-t/mu) of the exponential law with mean `mu`."""
    return -np.expm1(-np.maximum(np.asarray(t, dtype=np.float64), 0.0) / mu)


def exponential_tail_integral(t: FloatArray | float, mu: float) -> FloatArray:
    """Integral of 1 - G_mu over [t, inf), which is mu * exp(-t/mu) for t >= 0."""
    return mu * np.exp(-np.maximum(np.asarray(t, dtype=np.float64), 0.0) / mu)


@dataclass(frozen=True)
class RefDistribution:
    """A positive continuous distribution with closed-form distribution function.

    Args:
        kind (DistributionKind): The family.
        shape (float): Shape parameter a, ignored for the exponential family.
        scale (float): Scale parameter lambda (the mean for the exponential family).

    """

    kind: DistributionKind
    shape: float
    scale: float

    def __post_init__(self) -> None:
        """Validate the parameters."""
        if not (self.shape > 0.0 and math.isfinite(self.shape)):
            msg = f"shape must be positive, got {self.shape}"
            raise InvalidParameterError(msg)
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            msg = f"scale must be positive, got {self.scale}"
            raise InvalidParameterError(msg)

    @property
    def label(self) -> str:
        """Short human readable name, e.g. `weibull(0.9)`."""
        if self.kind is DistributionKind.EXPONENTIAL:
            return f"exponential({self.scale:g})"
        return f"{self.kind}({self.shape:g})"

    @property
    def mean(self) -> float:
        """Expectation of the distribution."""
        match self.kind:
            case DistributionKind.EXPONENTIAL:
                return self.scale
            case DistributionKind.WEIBULL:
                return self.scale * float(special.gamma(1.0 + 1.0 / self.shape))
            case DistributionKind.GAMMA:
                return self.shape * self.scale

    @property
    def variance(self) -> float:
        """Variance of the distribution."""
        match self.kind:
            case DistributionKind.EXPONENTIAL:
                return self.scale**2
            case DistributionKind.WEIBULL:
                g1 = float(special.gamma(1.0 + 1.0 / self.shape))
                g2 = float(special.gamma(1.0 + 2.0 / self.shape))
                return self.scale**2 * (g2 - g1**2)
            case DistributionKind.GAMMA:
                return self.shape * self.scale**2

    def cdf(self, t: FloatArray | float) -> FloatArray:
        """Evaluate the distribution function; zero on the negative half-line."""
        x = np.maximum(np.asarray(t, dtype=np.float64), 0.0)
        match self.kind:
            case DistributionKind.EXPONENTIAL:
                return exponential_cdf(x, self.scale)
            case DistributionKind.WEIBULL:
                return -np.expm1(-((x / self.scale) ** self.shape))
            case DistributionKind.GAMMA:
                return special.gammainc(self.shape, x / self.scale)

    def sf(self, t: FloatArray | float) -> FloatArray:
        """Evaluate the survival function 1 - F without cancellation in the tail."""
        x = np.maximum(np.asarray(t, dtype=np.float64), 0.0)
        match self.kind:
            case DistributionKind.EXPONENTIAL:
                return np.exp(-x / self.scale)
            case DistributionKind.WEIBULL:
                return np.exp(-((x / self.scale) ** self.shape))
            case DistributionKind.GAMMA:
                return special.gammaincc(self.shape, x / self.scale)

    def pdf(self, t: FloatArray | float) -> FloatArray:
        """Evaluate the density; zero for t <= 0."""
        x = np.asarray(t, dtype=np.float64)
        positive = np.where(x > 0.0, x, 1.0)
        match self.kind:
            case DistributionKind.EXPONENTIAL:
                density = np.exp(-positive / self.scale) / self.scale
            case DistributionKind.WEIBULL:
                z = positive / self.scale
                density = self.shape / self.scale * z ** (self.shape - 1.0) * np.exp(-(z**self.shape))
            case DistributionKind.GAMMA:
                log_density = (
                    (self.shape - 1.0) * np.log(positive)
                    - positive / self.scale
                    - special.gammaln(self.shape)
                    - self.shape * math.log(self.scale)
                )
                density = np.exp(log_density)
        return np.where(x > 0.0, density, 0.0)

    def quantile(self, p: FloatArray | float) -> FloatArray:
        """Evaluate the inverse distribution function for p in [0, 1)."""
        q = np.asarray(p, dtype=np.float64)
        match self.kind:
            case DistributionKind.EXPONENTIAL:
                return -self.scale * np.log1p(-q)
            case DistributionKind.WEIBULL:
                return self.scale * (-np.log1p(-q)) ** (1.0 / self.shape)
            case DistributionKind.GAMMA:
                return self.scale * special.gammaincinv(self.shape, q)

    def integrated_tail(self, t: FloatArray | float) -> FloatArray:
        """Integral of the survival function over [t, inf), i.e. E(X - t)+ for t >= 0."""
        x = np.maximum(np.asarray(t, dtype=np.float64), 0.0)
        match self.kind:
            case DistributionKind.EXPONENTIAL:
                return exponential_tail_integral(x, self.scale)
            case DistributionKind.WEIBULL:
                z = (x / self.scale) ** self.shape
                return self.mean * special.gammaincc(1.0 / self.shape, z)
            case DistributionKind.GAMMA:
                z = x / self.scale
                return self.mean * special.gammaincc(self.shape + 1.0, z) - x * special.gammaincc(self.shape, z)

    def horizon(self, tol: float = 1e-6) -> float:
        """Smallest integer at or above the (1 - tol) quantile."""
        return float(math.ceil(float(self.quantile(1.0 - tol))))

    def draw(self, n: int, rng: np.random.Generator) -> FloatArray:
        """Draw `n` positive variates from `rng`.

        Exponential and Weibull draws use the closed-form inverse distribution function, so
        rescaling the distribution rescales every draw. Gamma draws use numpy's exact
        Marsaglia-Tsang sampler.
        """
        if self.kind is DistributionKind.GAMMA:
            values = rng.gamma(self.shape, self.scale, size=n)
        else:
            u = rng.random(n)
            values = self.quantile(np.where(u == 0.0, np.finfo(np.float64).tiny, u))
        return np.where(values > 0.0, values, np.finfo(np.float64).tiny)


def make_exponential(mu: float) -> RefDistribution:
    """Build the exponential distribution with mean `mu`.

    Raises:
        InvalidParameterError: If `mu` is not positive.

    """
    if not mu > 0.0:
        msg = f"exponential mean must be positive, got {mu}"
        raise InvalidParameterError(msg)
    return RefDistribution(DistributionKind.EXPONENTIAL, 1.0, mu)


def make_mean_one(kind: DistributionKind | str, shape: float) -> RefDistribution:
    """Build a member of `kind` with the given shape and expectation 1.

    Weibull uses scale 1/Gamma(1 + 1/shape), gamma uses scale 1/shape.

    Raises:
        InvalidParameterError: If `shape` is not positive.

    """
    kind = DistributionKind(kind)
    if not shape > 0.0:
        msg = f"shape must be positive, got {shape}"
        raise InvalidParameterError(msg)
    match kind:
        case DistributionKind.EXPONENTIAL:
            return make_exponential(1.0)
        case DistributionKind.WEIBULL:
            return RefDistribution(kind, shape, 1.0 / float(special.gamma(1.0 + 1.0 / shape)))
        case DistributionKind.GAMMA:
            return RefDistribution(kind, shape, 1.0 / shape)


def parse_distribution(text: str) -> RefDistribution:
    """Parse `exp`, `weibull:0.9` or `gamma:1.1` into a mean-one distribution.

    Raises:
        InvalidParameterError: If the family or shape cannot be parsed.

    """
    name, _, shape_text = text.strip().lower().partition(":")
    if name in {"exp", "exponential"}:
        return make_exponential(1.0)
    try:
        return make_mean_one(DistributionKind(name), float(shape_text))
    except ValueError as error:
        if isinstance(error, InvalidParameterError):
            raise
        msg = f"cannot parse distribution {text!r}; expected exp, weibull:<shape> or gamma:<shape>"
        raise InvalidParameterError(msg) from error


def sample(dist: RefDistribution, n: int, seed: int) -> PitSample:
    """Draw a seeded i.i.d. sample of size `n` from `dist`.

    Raises:
        EmptySampleError: If `n` is zero.

    """
    if n < 1:
        msg = f"sample size must be at least 1, got {n}"
        raise EmptySampleError(msg)
    logger.debug("Drawing %s values from %s with seed %s", n, dist.label, seed)
    return PitSample.from_values(dist.draw(n, np.random.default_rng(seed)))
