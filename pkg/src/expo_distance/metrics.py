"""Distances of an empirical distribution to the exponential law with matched mean.

Every estimator compares the empirical distribution function F_n of a `PitSample` with
G_mu, the exponential distribution function whose mean mu is the sample mean. The
Wasserstein and Zolotarev integrals are split into closed-form head and tail terms and a
middle part over [X(1), X(n)], discretized on an equispaced grid of `grid_points`
subintervals and integrated with the trapezoid rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate

from expo_distance.common import ConfigError, Metric, QuadratureError
from expo_distance.distributions import exponential_cdf, exponential_tail_integral

if TYPE_CHECKING:
    from expo_distance.common import FloatArray, PitSample
    from expo_distance.distributions import RefDistribution

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 20_000
ORACLE_GRID_POINTS = 2_000_000
ANALYTIC_GRID_POINTS = 100_000
CLAMP_TOLERANCE = 1e-9
FAILURE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DistanceEstimate:
    """A plug-in distance d(F_n, G_mu_hat).

    Args:
        metric (Metric): Which distance was computed.
        value (float): The nonnegative distance.
        n (int): Sample size.
        grid_points (int): Number of quadrature subintervals, 0 for grid-free metrics.

    """

    metric: Metric
    value: float
    n: int
    grid_points: int


def _check_grid_points(grid_points: int) -> None:
    if grid_points < 1:
        msg = f"grid_points must be at least 1, got {grid_points}"
        raise ConfigError(msg)


def _middle_grid(sample: PitSample, grid_points: int) -> FloatArray:
    """Equispaced nodes X(1) + k*delta, k = 0..grid_points, with both ends exact."""
    return np.linspace(sample.first, sample.last, grid_points + 1)


def kolmogorov(sample: PitSample) -> DistanceEstimate:
    """Exact supremum distance between F_n and G_mu_hat.

    Both sides of every jump are compared, so no grid is involved.
    """
    g = exponential_cdf(sample.values, sample.mean_hat)
    upper = np.arange(1, sample.n + 1) / sample.n
    lower = np.arange(0, sample.n) / sample.n
    value = float(max(np.max(np.abs(upper - g)), np.max(np.abs(lower - g))))
    return DistanceEstimate(Metric.KOLMOGOROV, value, sample.n, 0)


def wasserstein(sample: PitSample, grid_points: int = DEFAULT_GRID_POINTS) -> DistanceEstimate:
    """Wasserstein distance: integral of |F_n - G_mu_hat| over the half-line.

    The head X(1) - mu*G(X(1)) and tail mu*exp(-X(n)/mu) are exact; the middle integral uses
    the trapezoid rule on the grid. It vanishes when X(1) = X(n), including n = 1.
    """
    _check_grid_points(grid_points)
    mu = sample.mean_hat
    head = sample.first - mu * float(exponential_cdf(sample.first, mu))
    tail = float(exponential_tail_integral(sample.last, mu))
    middle = 0.0
    if sample.last > sample.first:
        nodes = _middle_grid(sample, grid_points)
        integrand = np.abs(sample.ecdf(nodes) - exponential_cdf(nodes, mu))
        middle = float(integrate.trapezoid(integrand, nodes))
    return DistanceEstimate(Metric.WASSERSTEIN, max(head + middle + tail, 0.0), sample.n, grid_points)


def _running_difference_integral(sample: PitSample, nodes: FloatArray) -> FloatArray:
    """Exact integral of F_n - G_mu_hat over [0, t] at every node t >= X(1)."""
    mu = sample.mean_hat
    counts = np.searchsorted(sample.values, nodes, side="right")
    prefix = np.concatenate(([0.0], np.cumsum(sample.values)))
    empirical = (counts * nodes - prefix[counts]) / sample.n
    exponential = nodes - mu * exponential_cdf(nodes, mu)
    return empirical - exponential


def zolotarev2(sample: PitSample, grid_points: int = DEFAULT_GRID_POINTS) -> DistanceEstimate:
    """Zolotarev zeta_2 distance to G_mu_hat.

    Uses zeta_2 = 2 * int (int_0^t (F_n - G))+ dt + mu^2 - a2/2, where the positive part can
    only be nonzero on [X(1), X(n)]. The inner integral is exact at each grid node (it starts
    at -X(1) + mu*G(X(1))); the outer integral uses the trapezoid rule.

    Raises:
        QuadratureError: If the result is clearly negative.

    """
    _check_grid_points(grid_points)
    mu = sample.mean_hat
    positive_part = 0.0
    if sample.last > sample.first:
        nodes = _middle_grid(sample, grid_points)
        running = np.maximum(_running_difference_integral(sample, nodes), 0.0)
        positive_part = float(integrate.trapezoid(running, nodes))
    value = 2.0 * positive_part + mu**2 - sample.a2 / 2.0

    scale = max(1.0, mu**2)
    if value < -FAILURE_TOLERANCE * scale:
        msg = f"zeta_2 quadrature returned {value:.3e}; the grid of {grid_points} points is too coarse"
        raise QuadratureError(msg)
    if value < 0.0:
        if value < -CLAMP_TOLERANCE * scale:
            logger.warning("Clamping negative zeta_2 value %.3e to 0", value)
        value = 0.0
    return DistanceEstimate(Metric.ZOLOTAREV2, value, sample.n, grid_points)


def normalized(sample: PitSample, metric: Metric, grid_points: int = DEFAULT_GRID_POINTS) -> DistanceEstimate:
    """Scale-free Wasserstein (divided by mu_hat) or Zolotarev (divided by mu_hat squared) distance.

    Raises:
        ConfigError: If `metric` is not a normalized metric.

    """
    match metric:
        case Metric.NORM_WASSERSTEIN:
            raw = wasserstein(sample, grid_points)
            value = raw.value / sample.mean_hat
        case Metric.NORM_ZOLOTAREV2:
            raw = zolotarev2(sample, grid_points)
            value = raw.value / sample.mean_hat**2
        case _:
            msg = f"{metric} is not a normalized metric"
            raise ConfigError(msg)
    return DistanceEstimate(metric, value, sample.n, grid_points)


def distance(sample: PitSample, metric: Metric, grid_points: int = DEFAULT_GRID_POINTS) -> DistanceEstimate:
    """Compute any of the five distances."""
    match metric:
        case Metric.KOLMOGOROV:
            return kolmogorov(sample)
        case Metric.WASSERSTEIN:
            return wasserstein(sample, grid_points)
        case Metric.ZOLOTAREV2:
            return zolotarev2(sample, grid_points)
        case Metric.NORM_WASSERSTEIN | Metric.NORM_ZOLOTAREV2:
            return normalized(sample, metric, grid_points)


def all_distances(sample: PitSample, grid_points: int = DEFAULT_GRID_POINTS) -> dict[Metric, float]:
    """Compute all five distances, sharing the two grid integrals."""
    omega = wasserstein(sample, grid_points).value
    zeta = zolotarev2(sample, grid_points).value
    return {
        Metric.KOLMOGOROV: kolmogorov(sample).value,
        Metric.WASSERSTEIN: omega,
        Metric.ZOLOTAREV2: zeta,
        Metric.NORM_WASSERSTEIN: omega / sample.mean_hat,
        Metric.NORM_ZOLOTAREV2: zeta / sample.mean_hat**2,
    }


def wasserstein_exact_oracle(sample: PitSample) -> float:
    """Closed-form Wasserstein distance, integrating |i/n - G| piecewise between order statistics.

    Each interval [X(i), X(i+1)) is split at the crossing t* = -mu*log(1 - i/n) when it falls
    inside; the antiderivative of G is t + mu*exp(-t/mu).
    """
    mu = sample.mean_hat
    x = sample.values

    def antiderivative(t: FloatArray) -> FloatArray:
        return t + mu * np.exp(-t / mu)

    head = sample.first - mu * float(exponential_cdf(sample.first, mu))
    tail = float(exponential_tail_integral(sample.last, mu))
    if sample.n == 1:
        return head + tail

    left, right = x[:-1], x[1:]
    level = np.arange(1, sample.n) / sample.n
    crossing = np.clip(-mu * np.log1p(-level), left, right)
    below = level * (crossing - left) - (antiderivative(crossing) - antiderivative(left))
    above = (antiderivative(right) - antiderivative(crossing)) - level * (right - crossing)
    return float(head + np.sum(below + above) + tail)


def zolotarev2_fine_oracle(sample: PitSample) -> float:
    """Zolotarev distance recomputed on a 2,000,000-subinterval grid."""
    return zolotarev2(sample, ORACLE_GRID_POINTS).value


def analytic_distance(dist: RefDistribution, metric: Metric, grid_points: int = ANALYTIC_GRID_POINTS) -> float:
    """True distance d(F, G_mu) between an analytic F and the exponential law with the same mean.

    Uses the dual representations int |F - G| and int |int_t^inf (F - G)| on [0, T], with
    T = ceil(F^-1(1 - 1e-6)) extended to cover the exponential tail as well.
    """
    _check_grid_points(grid_points)
    mu = dist.mean
    horizon = max(dist.horizon(), float(np.ceil(-mu * np.log(1e-6))))
    nodes = np.linspace(0.0, horizon, grid_points + 1)
    match metric:
        case Metric.KOLMOGOROV:
            return float(np.max(np.abs(dist.cdf(nodes) - exponential_cdf(nodes, mu))))
        case Metric.WASSERSTEIN | Metric.NORM_WASSERSTEIN:
            value = float(integrate.trapezoid(np.abs(dist.cdf(nodes) - exponential_cdf(nodes, mu)), nodes))
        case Metric.ZOLOTAREV2 | Metric.NORM_ZOLOTAREV2:
            inner = exponential_tail_integral(nodes, mu) - dist.integrated_tail(nodes)
            value = float(integrate.trapezoid(np.abs(inner), nodes))
    return value / mu ** metric_scale_power(metric)


def metric_scale_power(metric: Metric) -> int:
    """Power of the mean that a normalized metric divides by; 0 for the others."""
    return {Metric.NORM_WASSERSTEIN: 1, Metric.NORM_ZOLOTAREV2: 2}.get(metric, 0)
