"""Monte Carlo simulation of the limit laws of the plug-in distances, confidence intervals and GOF tests.

The standardized error sqrt(n) * (d(F_n, G_mu_hat) - d(F, G_mu)) converges to a functional of a
Gaussian process X_{d,F}, itself a linear transform of the F-Brownian bridge B o F. Paths are
discretized on an equispaced grid of [0, T] and all integrals use the trapezoid rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property, lru_cache, partial
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np
from scipy import integrate, stats

from expo_distance.common import (
    ConfigError,
    DegenerateDataError,
    DimensionError,
    Metric,
    PitSample,
    replicate_rng,
)
from expo_distance.distributions import (
    exponential_cdf,
    exponential_tail_integral,
    make_exponential,
)
from expo_distance.metrics import DEFAULT_GRID_POINTS, analytic_distance, distance
from expo_distance.replicates import map_replicates

if TYPE_CHECKING:
    from expo_distance.common import FloatArray
    from expo_distance.distributions import RefDistribution

logger = logging.getLogger(__name__)

MIN_GRID_SUBINTERVALS = 1000
MIN_REPLICATES = 200
MIN_ASYMPTOTIC_SAMPLE = 30
MIN_GOF_SAMPLE = 20


class CdfReference(Protocol):
    """A distribution F that limit processes can be built from."""

    @property
    def label(self) -> str:
        """Short description of F."""
        ...

    @property
    def mean(self) -> float:
        """Expectation of F."""
        ...

    def cdf(self, t: FloatArray) -> FloatArray:
        """Distribution function of F."""
        ...

    def integrated_tail(self, t: FloatArray) -> FloatArray:
        """Integral of 1 - F over [t, inf)."""
        ...

    def horizon(self, tol: float = 1e-6) -> float:
        """Integer truncation point of the time axis."""
        ...


@dataclass(frozen=True)
class EmpiricalReference:
    """The empirical distribution of a sample, used as plug-in for the unknown F.

    Its horizon is ceil(X(n)), the point where F_n reaches 1.
    """

    sample: PitSample

    @property
    def label(self) -> str:
        """Short description of F_n."""
        return f"empirical(n={self.sample.n})"

    @property
    def mean(self) -> float:
        """Sample mean."""
        return self.sample.mean_hat

    def cdf(self, t: FloatArray) -> FloatArray:
        """Empirical distribution function."""
        return self.sample.ecdf(t)

    @cached_property
    def _suffix_sums(self) -> FloatArray:
        return np.concatenate((np.cumsum(self.sample.values[::-1])[::-1], [0.0]))

    def integrated_tail(self, t: FloatArray) -> FloatArray:
        """Mean of (X_i - t)+ over the sample."""
        points = np.maximum(np.asarray(t, dtype=np.float64), 0.0)
        first_above = np.searchsorted(self.sample.values, points, side="right")
        above = self.sample.n - first_above
        return (self._suffix_sums[first_above] - above * points) / self.sample.n

    def horizon(self, tol: float = 1e-6) -> float:
        """Smallest integer at or above the largest observation; `tol` only matters below 1/n."""
        del tol
        return float(math.ceil(self.sample.last))


@dataclass(frozen=True)
class BridgeConfig:
    """Discretization and Monte Carlo settings for limit-law simulation.

    Args:
        horizon (float | None): Time horizon T; derived from F and `tol` when None.
        grid_subintervals (int): Number of equispaced subintervals of [0, T].
        tol (float): Tail probability left beyond T when T is derived.
        reps (int): Number of Monte Carlo draws.
        seed (int): Seed of the per-replicate random streams.
        workers (int): Number of worker processes.
        zero_tol (float): |g_d(t)| at or below this value counts as the zero set I(g_d).

    """

    horizon: float | None = None
    grid_subintervals: int = 50_000
    tol: float = 1e-6
    reps: int = 10_000
    seed: int = 0
    workers: int = 1
    zero_tol: float = 1e-10

    def __post_init__(self) -> None:
        """Validate the settings."""
        if self.grid_subintervals < MIN_GRID_SUBINTERVALS:
            msg = f"grid_subintervals must be at least {MIN_GRID_SUBINTERVALS}, got {self.grid_subintervals}"
            raise ConfigError(msg)
        if not 0.0 < self.tol < 1.0:
            msg = f"tol must lie in (0, 1), got {self.tol}"
            raise ConfigError(msg)
        if self.horizon is not None and not self.horizon > 0.0:
            msg = f"horizon must be positive, got {self.horizon}"
            raise ConfigError(msg)
        if self.reps < 1:
            msg = f"reps must be at least 1, got {self.reps}"
            raise ConfigError(msg)

    def resolve_horizon(self, reference: CdfReference) -> float:
        """The explicit horizon, or the integer horizon of `reference`."""
        return self.horizon if self.horizon is not None else reference.horizon(self.tol)

    def time_grid(self, reference: CdfReference) -> FloatArray:
        """Nodes t_k = k * T / grid_subintervals."""
        return np.linspace(0.0, self.resolve_horizon(reference), self.grid_subintervals + 1)


@dataclass(frozen=True)
class BridgePath:
    """One discretized trajectory of the F-Brownian bridge."""

    reference: str
    times: FloatArray
    values: FloatArray


@dataclass(frozen=True)
class LimitLawDraws:
    """Monte Carlo draws from a limit law.

    Args:
        metric (Metric): The distance whose limit law was sampled.
        reference (str): Description of F.
        draws (FloatArray): The draws, read-only.
        seed (int): Seed of the replicate streams.

    """

    metric: Metric
    reference: str
    draws: FloatArray
    seed: int

    @property
    def reps(self) -> int:
        """Number of draws."""
        return int(self.draws.size)

    def quantile(self, p: float) -> float:
        """Linear-interpolation sample quantile of the draws."""
        return float(np.quantile(self.draws, p))


def _bridge_increments(u: FloatArray) -> FloatArray:
    """Standard deviations of the Brownian increments over [0, u_0], [u_0, u_1], ..., [u_M, 1]."""
    return np.sqrt(np.maximum(np.diff(np.concatenate(([0.0], u, [1.0]))), 0.0))


def _bridge_values(u: FloatArray, sqrt_increments: FloatArray, rng: np.random.Generator) -> FloatArray:
    """B(u) = W(u) - u * W(1) from independent Gaussian increments of W."""
    walk = np.cumsum(sqrt_increments * rng.standard_normal(sqrt_increments.size))
    return walk[:-1] - u * walk[-1]


def simulate_bridge_path(reference: CdfReference, cfg: BridgeConfig, rng: np.random.Generator) -> BridgePath:
    """Simulate B(F(t_k)) on the time grid of `cfg`, with B a standard Brownian bridge on [0, 1]."""
    times = cfg.time_grid(reference)
    u = np.clip(reference.cdf(times), 0.0, 1.0)
    return BridgePath(reference.label, times, _bridge_values(u, _bridge_increments(u), rng))


def g_function(metric: Metric, reference: CdfReference, times: FloatArray) -> FloatArray:
    """The deterministic function g_d whose sign enters the limit functional.

    Raises:
        ConfigError: For the Kolmogorov metric, which has no L1 limit process.

    """
    mu = reference.mean
    match metric:
        case Metric.WASSERSTEIN | Metric.NORM_WASSERSTEIN:
            difference = reference.cdf(times) - exponential_cdf(times, mu)
            return difference if metric is Metric.WASSERSTEIN else difference / mu
        case Metric.ZOLOTAREV2 | Metric.NORM_ZOLOTAREV2:
            tail = exponential_tail_integral(times, mu) - reference.integrated_tail(times)
            return tail if metric is Metric.ZOLOTAREV2 else tail / mu**2
        case Metric.KOLMOGOROV:
            msg = "the Kolmogorov distance has no limit process in this package"
            raise ConfigError(msg)


@dataclass(frozen=True)
class LimitOperator:
    """The linear map from a bridge path to the process X_{d,F}.

    X = factor * (base + coefficient * int_0^inf B_F), where base is B_F itself for the
    Wasserstein metrics and int_t^inf B_F for the Zolotarev metrics.
    """

    metric: Metric
    times: FloatArray
    factor: float
    uses_tail: bool
    coefficient: FloatArray

    @classmethod
    def build(cls, metric: Metric, reference: CdfReference, times: FloatArray) -> LimitOperator:
        """Precompute the deterministic parts of the operator on `times`."""
        mu = reference.mean
        decay = np.exp(-times / mu)
        match metric:
            case Metric.WASSERSTEIN:
                return cls(metric, times, 1.0, False, -(times / mu**2) * decay)
            case Metric.NORM_WASSERSTEIN:
                g = g_function(metric, reference, times)
                return cls(metric, times, 1.0 / mu, False, g - (times / mu**2) * decay)
            case Metric.ZOLOTAREV2:
                return cls(metric, times, 1.0, True, -(1.0 + times / mu) * decay)
            case Metric.NORM_ZOLOTAREV2:
                g = g_function(metric, reference, times)
                return cls(metric, times, 1.0 / mu**2, True, 2.0 * mu * g - (1.0 + times / mu) * decay)
            case Metric.KOLMOGOROV:
                msg = "the Kolmogorov distance has no limit process in this package"
                raise ConfigError(msg)

    def apply(self, values: FloatArray) -> FloatArray:
        """Transform one discretized bridge path.

        Raises:
            DimensionError: If the path does not live on the operator's grid.

        """
        if values.shape != self.times.shape:
            msg = f"path has shape {values.shape}, the grid has shape {self.times.shape}"
            raise DimensionError(msg)
        total = float(integrate.trapezoid(values, self.times))
        if self.uses_tail:
            base = total - integrate.cumulative_trapezoid(values, self.times, initial=0.0)
        else:
            base = values
        return self.factor * (base + self.coefficient * total)


def limit_process(metric: Metric, reference: CdfReference, path: BridgePath) -> FloatArray:
    """Evaluate the trajectory of X_{metric,F} driven by `path`.

    Raises:
        DimensionError: If `path` was simulated for another distribution or grid.

    """
    if path.reference != reference.label:
        msg = f"path was simulated for {path.reference}, not {reference.label}"
        raise DimensionError(msg)
    return LimitOperator.build(metric, reference, path.times).apply(path.values)


def delta_functional(process: FloatArray, g: FloatArray, times: FloatArray, zero_tol: float = 1e-10) -> float:
    """Integral of |X| over the zero set of g plus the integral of X * sgn(g) elsewhere."""
    integrand = np.where(np.abs(g) <= zero_tol, np.abs(process), process * np.sign(g))
    return float(integrate.trapezoid(integrand, times))


@dataclass(frozen=True)
class _LimitKernel:
    """Picklable per-replicate computation of one draw of delta_inf(d, F)."""

    operator: LimitOperator
    u: FloatArray
    sqrt_increments: FloatArray
    g: FloatArray
    seed: int
    zero_tol: float

    def __call__(self, index: int) -> float:
        path = _bridge_values(self.u, self.sqrt_increments, replicate_rng(self.seed, index))
        return delta_functional(self.operator.apply(path), self.g, self.operator.times, self.zero_tol)


def sample_delta_infinity(metric: Metric, reference: CdfReference, cfg: BridgeConfig) -> LimitLawDraws:
    """Draw `cfg.reps` realizations of the limit delta_inf(d, F).

    Replicate i uses the stream `replicate_rng(cfg.seed, i)`, so two distributions sampled with the
    same seed share their Gaussian increments whenever their grids map to the same u-values.
    """
    times = cfg.time_grid(reference)
    u = np.clip(reference.cdf(times), 0.0, 1.0)
    kernel = _LimitKernel(
        operator=LimitOperator.build(metric, reference, times),
        u=u,
        sqrt_increments=_bridge_increments(u),
        g=g_function(metric, reference, times),
        seed=cfg.seed,
        zero_tol=cfg.zero_tol,
    )
    logger.info(
        "Sampling %s draws of the %s limit law for %s on [0, %g] with %s subintervals",
        cfg.reps,
        metric,
        reference.label,
        times[-1],
        cfg.grid_subintervals,
    )
    draws = map_replicates(kernel, cfg.reps, workers=cfg.workers)
    draws.flags.writeable = False
    return LimitLawDraws(metric, reference.label, draws, cfg.seed)


@lru_cache(maxsize=32)
def null_law(metric: Metric, cfg: BridgeConfig, mu: float = 1.0) -> LimitLawDraws:
    """Limit law of sqrt(n) * d(F_n, G_mu_hat) for exponential data, which does not depend on mu.

    Results are cached per (metric, cfg, mu).

    Raises:
        ConfigError: If `metric` is not a normalized metric.

    """
    if not metric.is_normalized:
        msg = f"the null law of {metric} depends on the unknown mean; use nw or nz2"
        raise ConfigError(msg)
    return sample_delta_infinity(metric, make_exponential(mu), cfg)


def _delta_n_draw(
    index: int,
    *,
    dist: RefDistribution,
    metric: Metric,
    n: int,
    truth: float,
    seed: int,
    grid_points: int,
) -> float:
    rng = replicate_rng(seed, dist.label, metric.value, n, index)
    estimate = distance(PitSample.from_values(dist.draw(n, rng)), metric, grid_points).value
    return math.sqrt(n) * (estimate - truth)


def sample_delta_n(
    metric: Metric,
    dist: RefDistribution,
    n: int,
    reps: int,
    seed: int,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    truth: float | None = None,
    workers: int = 1,
) -> FloatArray:
    """Draw `reps` realizations of delta_n(d, F) = sqrt(n) * (d(F_n, G_mu_hat) - d(F, G_mu)).

    Replicate i uses the stream keyed by (seed, F, metric, n, i).
    """
    if truth is None:
        truth = analytic_distance(dist, metric)
    kernel = partial(
        _delta_n_draw, dist=dist, metric=metric, n=n, truth=truth, seed=seed, grid_points=grid_points
    )
    return map_replicates(kernel, reps, workers=workers)


class IntervalMethod(StrEnum):
    """Confidence interval constructions."""

    ASYMPTOTIC_NORMAL = "asymptotic-normal"
    ASYMPTOTIC_QUANTILE = "asymptotic-quantile"
    BOOTSTRAP_PERCENTILE = "bootstrap-percentile"


@dataclass(frozen=True)
class ConfidenceInterval:
    """A confidence interval for d(F, G_mu)."""

    lo: float
    hi: float
    estimate: float
    level: float
    method: IntervalMethod

    @property
    def width(self) -> float:
        """Length of the interval."""
        return self.hi - self.lo


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        msg = f"level must lie in (0, 1), got {level}"
        raise ConfigError(msg)


def _check_replicates(count: int, name: str) -> None:
    if count < MIN_REPLICATES:
        msg = f"{name} must be at least {MIN_REPLICATES}, got {count}"
        raise ConfigError(msg)


def _bootstrap_distance(index: int, *, values: FloatArray, metric: Metric, seed: int, grid_points: int) -> float:
    rng = replicate_rng(seed, "bootstrap", index)
    resample = rng.choice(values, size=values.size, replace=True)
    return distance(PitSample.from_values(resample), metric, grid_points).value


def confidence_interval(
    sample: PitSample,
    metric: Metric,
    level: float,
    method: IntervalMethod,
    cfg: BridgeConfig,
    *,
    resamples: int = 999,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> ConfidenceInterval:
    """Confidence interval for the distance of the sampled law to the exponential class.

    The asymptotic methods simulate delta_inf(d, F_n) with F_n plugged in for F; the normal method
    uses the Monte Carlo standard deviation of those draws, the quantile method their quantiles.
    The bootstrap percentile method recomputes the distance on `resamples` resamples of the data.
    Interval ends are clipped at 0.

    Raises:
        ConfigError: For a level outside (0, 1) or fewer than 200 replicates.

    """
    _check_level(level)
    estimate = distance(sample, metric, grid_points).value
    alpha = 1.0 - level

    if method is IntervalMethod.BOOTSTRAP_PERCENTILE:
        _check_replicates(resamples, "resamples")
        kernel = partial(
            _bootstrap_distance, values=sample.values, metric=metric, seed=cfg.seed, grid_points=grid_points
        )
        replicates = map_replicates(kernel, resamples, workers=cfg.workers)
        lo, hi = np.quantile(replicates, [alpha / 2.0, 1.0 - alpha / 2.0])
    else:
        _check_replicates(cfg.reps, "reps")
        if sample.n < MIN_ASYMPTOTIC_SAMPLE:
            logger.warning("Asymptotic interval requested for only %s observations", sample.n)
        draws = sample_delta_infinity(metric, EmpiricalReference(sample), cfg).draws
        root_n = math.sqrt(sample.n)
        if method is IntervalMethod.ASYMPTOTIC_NORMAL:
            half_width = float(stats.norm.ppf(1.0 - alpha / 2.0)) * float(np.std(draws, ddof=1)) / root_n
            lo, hi = estimate - half_width, estimate + half_width
        else:
            q_lo, q_hi = np.quantile(draws, [alpha / 2.0, 1.0 - alpha / 2.0])
            lo, hi = estimate - q_hi / root_n, estimate - q_lo / root_n
    return ConfidenceInterval(max(float(lo), 0.0), max(float(hi), 0.0), estimate, level, method)


class GofMethod(StrEnum):
    """Ways to calibrate the exponentiality test."""

    ASYMPTOTIC = "asymptotic"
    PARAMETRIC_BOOTSTRAP = "parametric-bootstrap"


@dataclass(frozen=True)
class GofResult:
    """Outcome of a goodness-of-fit test of exponentiality."""

    metric: Metric
    statistic: float
    p_value: float
    reject: bool
    level: float
    method: GofMethod
    reps: int
    seed: int
    extras: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready report."""
        return {
            "metric": self.metric.value,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "reject": self.reject,
            "level": self.level,
            "method": self.method.value,
            "reps": self.reps,
            "seed": self.seed,
            **self.extras,
        }


def _bootstrap_statistic(index: int, *, mu: float, n: int, metric: Metric, seed: int, grid_points: int) -> float:
    rng = replicate_rng(seed, "gof", index)
    resample = PitSample.from_values(make_exponential(mu).draw(n, rng))
    return math.sqrt(n) * distance(resample, metric, grid_points).value


def gof_exponentiality(
    sample: PitSample,
    metric: Metric,
    level: float,
    method: GofMethod,
    cfg: BridgeConfig,
    *,
    resamples: int = 999,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> GofResult:
    """Test H0: the sample is exponential, rejecting for large sqrt(n) * d(F_n, G_mu_hat).

    The asymptotic p-value is the fraction of null-law draws at or above the statistic; the
    parametric bootstrap p-value is the fraction of `resamples` exponential(mu_hat) samples of
    size n whose statistic is at or above the observed one.

    Raises:
        ConfigError: For unnormalized metrics, a bad level or too few replicates.
        DegenerateDataError: For fewer than 20 observations.

    """
    if not metric.is_normalized:
        msg = f"GOF test needs a normalized metric (nw or nz2), got {metric}"
        raise ConfigError(msg)
    _check_level(level)
    if sample.n < MIN_GOF_SAMPLE:
        msg = f"GOF test needs at least {MIN_GOF_SAMPLE} observations, got {sample.n}"
        raise DegenerateDataError(msg)

    statistic = math.sqrt(sample.n) * distance(sample, metric, grid_points).value
    if method is GofMethod.ASYMPTOTIC:
        _check_replicates(cfg.reps, "reps")
        reference = null_law(metric, cfg).draws
    else:
        _check_replicates(resamples, "resamples")
        kernel = partial(
            _bootstrap_statistic,
            mu=sample.mean_hat,
            n=sample.n,
            metric=metric,
            seed=cfg.seed,
            grid_points=grid_points,
        )
        reference = map_replicates(kernel, resamples, workers=cfg.workers)

    p_value = float(np.mean(reference >= statistic))
    logger.debug("GOF %s (%s): statistic %.5f, p-value %.4f", metric, method, statistic, p_value)
    return GofResult(
        metric=metric,
        statistic=statistic,
        p_value=p_value,
        reject=p_value <= level,
        level=level,
        method=method,
        reps=int(reference.size),
        seed=cfg.seed,
        extras={"n": sample.n, "mean_hat": sample.mean_hat},
    )
