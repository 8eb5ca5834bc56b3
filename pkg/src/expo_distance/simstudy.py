"""Monte Carlo study of the estimation error delta_n(d, F) against its limit delta_inf(d, F).

For every reference distribution (all with mean 1) and normalized metric, the study draws
`replicates` values of delta_n at each sample size plus `replicates` values of the limit law,
and returns them as one long table. `summarize` reduces the table to Tukey boxplot statistics.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from expo_distance.asymptotics import BridgeConfig, sample_delta_infinity, sample_delta_n
from expo_distance.common import ConfigError, EmptySampleError, Metric, replicate_rng
from expo_distance.distributions import DistributionKind, make_mean_one
from expo_distance.metrics import ANALYTIC_GRID_POINTS, DEFAULT_GRID_POINTS, analytic_distance

if TYPE_CHECKING:
    from collections.abc import Iterable

    from expo_distance.common import FloatArray
    from expo_distance.distributions import RefDistribution

logger = logging.getLogger(__name__)

INFINITY_LABEL = "infinity"
MIN_STUDY_REPLICATES = 100
WHISKER_FACTOR = 1.5


def default_distributions() -> tuple[RefDistribution, ...]:
    """The five mean-one laws of the study: exp(1), gamma(0.9), gamma(1.1), Weibull(0.9), Weibull(1.1)."""
    return (
        make_mean_one(DistributionKind.EXPONENTIAL, 1.0),
        make_mean_one(DistributionKind.GAMMA, 0.9),
        make_mean_one(DistributionKind.GAMMA, 1.1),
        make_mean_one(DistributionKind.WEIBULL, 0.9),
        make_mean_one(DistributionKind.WEIBULL, 1.1),
    )


@dataclass(frozen=True)
class StudyConfig:
    """Grid of the Monte Carlo study.

    Args:
        distributions (tuple[RefDistribution, ...]): Reference laws, each with mean 1.
        sizes (tuple[int, ...]): Strictly ascending sample sizes.
        replicates (int): Draws per cell, at least 100.
        metrics (tuple[Metric, ...]): Normalized metrics to study.
        seed (int): Seed of every random stream in the study.
        grid_points (int): Quadrature subintervals for d(F_n, G_mu_hat).
        bridge (BridgeConfig): Discretization of the limit law; its `reps`, `seed` and `workers`
            are replaced by the study's values.
        workers (int): Number of worker processes.

    """

    distributions: tuple[RefDistribution, ...] = field(default_factory=default_distributions)
    sizes: tuple[int, ...] = (100, 500, 1000, 5000)
    replicates: int = 10_000
    metrics: tuple[Metric, ...] = (Metric.NORM_WASSERSTEIN, Metric.NORM_ZOLOTAREV2)
    seed: int = 0
    grid_points: int = DEFAULT_GRID_POINTS
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    workers: int = 1

    def __post_init__(self) -> None:
        """Validate the grid."""
        if not self.sizes or any(size < 1 for size in self.sizes):
            msg = f"sizes must be a nonempty list of positive integers, got {list(self.sizes)}"
            raise ConfigError(msg)
        if any(later <= earlier for earlier, later in zip(self.sizes, self.sizes[1:], strict=False)):
            msg = f"sizes must be strictly ascending, got {list(self.sizes)}"
            raise ConfigError(msg)
        if self.replicates < MIN_STUDY_REPLICATES:
            msg = f"replicates must be at least {MIN_STUDY_REPLICATES}, got {self.replicates}"
            raise ConfigError(msg)
        if not self.metrics or not all(metric.is_normalized for metric in self.metrics):
            msg = f"the study only covers the normalized metrics nw and nz2, got {[str(m) for m in self.metrics]}"
            raise ConfigError(msg)
        if not self.distributions:
            msg = "the study needs at least one distribution"
            raise ConfigError(msg)
        for dist in self.distributions:
            if not np.isclose(dist.mean, 1.0, rtol=0.0, atol=1e-9):
                msg = f"study distributions must have mean 1, {dist.label} has mean {dist.mean}"
                raise ConfigError(msg)

    def limit_config(self, dist: RefDistribution, metric: Metric) -> BridgeConfig:
        """Bridge settings of the limit cell for (`dist`, `metric`), with its own seed."""
        cell_seed = int(replicate_rng(self.seed, dist.label, metric.value, INFINITY_LABEL).integers(2**62))
        return replace(self.bridge, reps=self.replicates, seed=cell_seed, workers=self.workers)

    def to_dict(self) -> dict[str, object]:
        """Plain representation for output metadata."""
        return {
            "distributions": [dist.label for dist in self.distributions],
            "sizes": list(self.sizes),
            "replicates": self.replicates,
            "metrics": [str(metric) for metric in self.metrics],
            "seed": self.seed,
            "grid_points": self.grid_points,
            "bridge_grid_subintervals": self.bridge.grid_subintervals,
            "bridge_tol": self.bridge.tol,
        }


def true_distances(
    distributions: Iterable[RefDistribution],
    metrics: Iterable[Metric],
    grid_points: int = ANALYTIC_GRID_POINTS,
) -> pd.DataFrame:
    """Table of d(F, G_1) for every distribution and metric."""
    metric_list = list(metrics)
    rows = [
        (dist.label, str(metric), analytic_distance(dist, metric, grid_points))
        for dist in distributions
        for metric in metric_list
    ]
    return pd.DataFrame(rows, columns=["distribution", "metric", "value"])


def _cell_frame(dist: RefDistribution, metric: Metric, n: str, values: FloatArray) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "distribution": dist.label,
            "metric": str(metric),
            "n": n,
            "replicate": np.arange(values.size),
            "value": values,
        }
    )


def run_study(cfg: StudyConfig) -> pd.DataFrame:
    """Draw delta_n at every sample size and delta_inf for every (distribution, metric) cell.

    Returns:
        pd.DataFrame: Long table with columns distribution, metric, n, replicate, value; `n`
            holds the sample size as text, or "infinity" for the limit law.

    """
    frames: list[pd.DataFrame] = []
    for dist in cfg.distributions:
        for metric in cfg.metrics:
            truth = analytic_distance(dist, metric)
            logger.info("Cell %s / %s: true distance %.6g", dist.label, metric, truth)
            for n in cfg.sizes:
                draws = sample_delta_n(
                    metric,
                    dist,
                    n,
                    cfg.replicates,
                    cfg.seed,
                    grid_points=cfg.grid_points,
                    truth=truth,
                    workers=cfg.workers,
                )
                frames.append(_cell_frame(dist, metric, str(n), draws))
            limit = sample_delta_infinity(metric, dist, cfg.limit_config(dist, metric))
            frames.append(_cell_frame(dist, metric, INFINITY_LABEL, limit.draws))
    table = pd.concat(frames, ignore_index=True)
    logger.info("✓ Study finished with %s draws", len(table))
    return table


@dataclass(frozen=True)
class BoxplotStats:
    """Tukey boxplot statistics with linearly interpolated quartiles."""

    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    n_outliers: int

    @property
    def lower_fence(self) -> float:
        """Values below this are outliers."""
        return self.q1 - WHISKER_FACTOR * (self.q3 - self.q1)

    @property
    def upper_fence(self) -> float:
        """Values above this are outliers."""
        return self.q3 + WHISKER_FACTOR * (self.q3 - self.q1)

    def outlier_mask(self, values: FloatArray) -> np.ndarray[tuple[int], np.dtype[np.bool_]]:
        """Which of `values` lie beyond the fences."""
        return (values < self.lower_fence) | (values > self.upper_fence)


def boxplot_stats(values: FloatArray, cell: str = "values") -> BoxplotStats:
    """Quartiles, 1.5 x IQR whiskers and outlier count of `values`.

    The whiskers end at the most extreme values inside the fences.

    Raises:
        EmptySampleError: If `values` is empty; the message names `cell`.

    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        msg = f"no values in cell {cell}"
        raise EmptySampleError(msg)
    q1, median, q3 = (float(q) for q in np.quantile(values, [0.25, 0.5, 0.75], method="linear"))
    spread = q3 - q1
    inside = values[(values >= q1 - WHISKER_FACTOR * spread) & (values <= q3 + WHISKER_FACTOR * spread)]
    return BoxplotStats(
        q1=q1,
        median=median,
        q3=q3,
        whisker_lo=float(inside.min()),
        whisker_hi=float(inside.max()),
        n_outliers=int(values.size - inside.size),
    )


def summarize(table: pd.DataFrame) -> pd.DataFrame:
    """Boxplot statistics for every (distribution, metric, n) cell of a study table.

    Raises:
        EmptySampleError: If the table, or any of its cells, holds no values.

    """
    if table.empty:
        msg = "study table is empty"
        raise EmptySampleError(msg)
    rows: list[dict[str, object]] = []
    for (label, metric, n), cell in table.groupby(["distribution", "metric", "n"], sort=False):
        stats = boxplot_stats(cell["value"].dropna().to_numpy(dtype=np.float64), f"{label}/{metric}/n={n}")
        rows.append({"distribution": label, "metric": metric, "n": n, "count": len(cell), **asdict(stats)})
    return pd.DataFrame(rows)
