"""Event-list ingestion: parsing, energy filtering, gap-aware interarrival times and per-source features.

Input contract:

- events CSV with header `time_s,energy_kev`, one photon per row, rows in time order;
- optional gaps CSV with header `gap_start_s,gap_end_s` listing the intervals [start, end) in which
  the instrument was not observing.

Interarrival times are only formed between consecutive photons of the same good interval;
differences that straddle a gap are discarded, as are zero differences from timestamp ties.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path
from typing import TYPE_CHECKING, TextIO

import numpy as np
import pandas as pd

from expo_distance.common import (
    ConfigError,
    EmptySampleError,
    InputError,
    Metric,
    PitSample,
    SourceClass,
)
from expo_distance.metrics import DEFAULT_GRID_POINTS, all_distances
from expo_distance.replicates import map_tasks

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    import numpy.typing as npt

    from expo_distance.common import FloatArray

logger = logging.getLogger(__name__)

EVENT_COLUMNS = ("time_s", "energy_kev")
GAP_COLUMNS = ("gap_start_s", "gap_end_s")
LABEL_COLUMNS = ("source_id", "label")
FEATURE_COLUMNS = ("source_id", "n_pit", "med_energy_kev", "kappa", "nw", "nz2", "label")
GAPS_SUFFIX = ".gaps.csv"
DEFAULT_BAND = (0.5, 8.0)
DEFAULT_MIN_PIT = 100
ORDER_TOLERANCE = 1e-6

type Interval = tuple[float, float]
type TableSource = str | Path | TextIO


@dataclass(frozen=True)
class EventSeries:
    """Photon arrival times and energies of one source.

    Args:
        source_id (str): Identifier of the source.
        arrivals (FloatArray): Nondecreasing arrival times in seconds.
        energies (FloatArray): Photon energies in keV, aligned with `arrivals`.
        good_intervals (tuple[Interval, ...]): Disjoint ascending observation windows; all are
            half-open [start, end) except the last, which includes its end.

    """

    source_id: str
    arrivals: FloatArray
    energies: FloatArray
    good_intervals: tuple[Interval, ...]

    def __post_init__(self) -> None:
        """Check that arrivals and energies are aligned."""
        if self.arrivals.shape != self.energies.shape:
            msg = f"{self.arrivals.size} arrivals but {self.energies.size} energies for {self.source_id}"
            raise InputError(msg)

    @property
    def size(self) -> int:
        """Number of events."""
        return int(self.arrivals.size)

    def interval_ids(self) -> npt.NDArray[np.intp]:
        """Index of the good interval containing each arrival, or -1 when it lies in none."""
        return _interval_ids(self.arrivals, self.good_intervals)

    def subset(self, mask: npt.NDArray[np.bool_]) -> EventSeries:
        """Keep the events selected by `mask`, with the same good intervals."""
        return replace(self, arrivals=self.arrivals[mask], energies=self.energies[mask])


def _interval_ids(times: FloatArray, intervals: Sequence[Interval]) -> npt.NDArray[np.intp]:
    if not intervals:
        return np.full(times.shape, -1, dtype=np.intp)
    starts = np.array([start for start, _ in intervals])
    ends = np.array([end for _, end in intervals])
    ids = np.searchsorted(starts, times, side="right") - 1
    safe = np.maximum(ids, 0)
    last = len(intervals) - 1
    inside = (ids >= 0) & ((times < ends[safe]) | ((ids == last) & (times <= ends[safe])))
    return np.where(inside, ids, -1)


def good_intervals_from_gaps(first: float, last: float, gaps: Iterable[Interval]) -> tuple[Interval, ...]:
    """Complement of the (merged) gaps within [first, last]."""
    merged: list[list[float]] = []
    for start, end in sorted(gaps):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])

    intervals: list[Interval] = []
    cursor = first
    for start, end in merged:
        if end <= cursor or start > last:
            continue
        if start > cursor:
            intervals.append((cursor, start))
        cursor = max(cursor, end)
    if cursor <= last:
        intervals.append((cursor, last))
    return tuple(intervals)


def _read_table(source: TableSource, columns: tuple[str, ...]) -> pd.DataFrame:
    """Read a CSV as strings and check its header."""
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        msg = f"missing header, expected {','.join(columns)}"
        raise InputError(msg, line=1) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as error:
        msg = f"cannot parse CSV: {error}"
        raise InputError(msg) from error
    if tuple(frame.columns) != columns:
        msg = f"header is {','.join(map(str, frame.columns))}, expected {','.join(columns)}"
        raise InputError(msg, line=1)
    return frame


def _numeric_columns(frame: pd.DataFrame) -> FloatArray:
    """Convert every column to float, reporting the first non-numeric row by file line number."""
    numeric = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad_rows = np.flatnonzero(~np.all(np.isfinite(numeric), axis=1))
    if bad_rows.size:
        row = int(bad_rows[0])
        msg = f"non-numeric or non-finite value in row {','.join(frame.iloc[row].tolist())!r}"
        raise InputError(msg, line=row + 2)
    return numeric.reshape(len(frame), len(frame.columns))


def read_pits(source: TableSource) -> PitSample:
    """Read a headerless one-column file of interarrival times.

    Raises:
        InputError: On extra columns, non-numeric rows or values <= 0.
        EmptySampleError: If the file holds no values.

    """
    try:
        frame = pd.read_csv(source, header=None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        msg = "PIT file is empty"
        raise EmptySampleError(msg) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as error:
        msg = f"cannot parse PIT file: {error}"
        raise InputError(msg) from error
    if frame.shape[1] != 1:
        msg = f"PIT file must have exactly one column, found {frame.shape[1]}"
        raise InputError(msg, line=1)
    values = pd.to_numeric(frame[0].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~(np.isfinite(values) & (values > 0.0)))
    if bad.size:
        msg = f"interarrival time must be a positive number, got {frame.iloc[bad[0], 0]!r}"
        raise InputError(msg, line=int(bad[0]) + 1)
    return PitSample.from_values(values)


def read_gaps(source: TableSource) -> list[Interval]:
    """Read a gaps CSV.

    Raises:
        InputError: If a row is malformed or a gap does not end after it starts.

    """
    numeric = _numeric_columns(_read_table(source, GAP_COLUMNS))
    invalid = np.flatnonzero(numeric[:, 1] <= numeric[:, 0])
    if invalid.size:
        msg = "gap_end_s must be greater than gap_start_s"
        raise InputError(msg, line=int(invalid[0]) + 2)
    return [(float(start), float(end)) for start, end in numeric]


def parse_events(
    source: TableSource,
    gaps: TableSource | None = None,
    *,
    source_id: str | None = None,
    order_tolerance: float = ORDER_TOLERANCE,
) -> EventSeries:
    """Parse an event list and its optional gaps file into a validated series.

    Rows may step backwards in time by at most `order_tolerance` seconds (they are re-sorted);
    larger steps are rejected. Events that fall inside a declared gap are dropped.

    Raises:
        InputError: On a bad header, non-numeric rows, out-of-order times or energies <= 0.

    """
    if source_id is None:
        source_id = Path(source).name.removesuffix(".csv") if isinstance(source, (str, Path)) else "stream"

    numeric = _numeric_columns(_read_table(source, EVENT_COLUMNS))
    times, energies = numeric[:, 0], numeric[:, 1]

    non_positive = np.flatnonzero(energies <= 0.0)
    if non_positive.size:
        msg = f"energy must be positive, got {energies[non_positive[0]]}"
        raise InputError(msg, line=int(non_positive[0]) + 2)
    backwards = np.flatnonzero(np.diff(times) < -order_tolerance)
    if backwards.size:
        msg = f"arrival time {times[backwards[0] + 1]} precedes the previous row"
        raise InputError(msg, line=int(backwards[0]) + 3)

    order = np.argsort(times, kind="stable")
    times, energies = times[order], energies[order]
    if times.size == 0:
        logger.warning("Event list %s is empty", source_id)
        return EventSeries(source_id, times, energies, ())

    gap_list = read_gaps(gaps) if gaps is not None else []
    intervals = good_intervals_from_gaps(float(times[0]), float(times[-1]), gap_list)
    series = EventSeries(source_id, times, energies, intervals)
    inside = series.interval_ids() >= 0
    if not np.all(inside):
        logger.warning("Dropping %s events of %s that fall inside gaps", int(np.sum(~inside)), source_id)
        series = series.subset(inside)
    logger.debug("Parsed %s events in %s good intervals for %s", series.size, len(intervals), source_id)
    return series


def filter_energy(series: EventSeries, lo: float = DEFAULT_BAND[0], hi: float = DEFAULT_BAND[1]) -> EventSeries:
    """Keep the events with lo <= energy <= hi.

    Raises:
        ConfigError: If the band is empty.

    """
    if not lo < hi:
        msg = f"energy band needs lo < hi, got [{lo}, {hi}]"
        raise ConfigError(msg)
    return series.subset((series.energies >= lo) & (series.energies <= hi))


def extract_pits(series: EventSeries) -> PitSample:
    """Interarrival times between consecutive events of the same good interval.

    Raises:
        EmptySampleError: If no good interval holds two distinct arrival times.

    """
    ids = series.interval_ids()
    differences = np.diff(series.arrivals)
    keep = (ids[1:] == ids[:-1]) & (ids[1:] >= 0) & (differences > 0.0)
    if not np.any(keep):
        msg = f"no interarrival times for {series.source_id}: fewer than 2 distinct events in every good interval"
        raise EmptySampleError(msg)
    return PitSample.from_values(differences[keep])


@dataclass(frozen=True)
class SourceFeatures:
    """Per-source summary used for classification."""

    source_id: str
    n_pit: int
    med_energy_kev: float
    kappa: float
    nw: float
    nz2: float
    label: SourceClass | None = None

    def distance(self, metric: Metric) -> float:
        """The stored distance for `metric` (kappa, nw or nz2).

        Raises:
            ConfigError: For the unnormalized metrics, which are not stored.

        """
        match metric:
            case Metric.KOLMOGOROV:
                return self.kappa
            case Metric.NORM_WASSERSTEIN:
                return self.nw
            case Metric.NORM_ZOLOTAREV2:
                return self.nz2
            case _:
                msg = f"features only store kappa, nw and nz2, not {metric}"
                raise ConfigError(msg)

    def scaled_statistic(self, metric: Metric) -> float:
        """The statistic sqrt(n) * d(F_n, G_mu_hat)."""
        return math.sqrt(self.n_pit) * self.distance(metric)


def median_energy(series: EventSeries) -> float:
    """Median photon energy; the mean of the two central values for even counts."""
    if series.size == 0:
        msg = f"no events left for {series.source_id}"
        raise EmptySampleError(msg)
    return float(np.median(series.energies))


def build_features(
    series: EventSeries,
    min_pit: int = DEFAULT_MIN_PIT,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    label: SourceClass | None = None,
) -> SourceFeatures | None:
    """Summarize an energy-filtered series, or return None when it has fewer than `min_pit` PIT."""
    try:
        pits = extract_pits(series)
    except EmptySampleError:
        logger.info("Dropping %s: no interarrival times", series.source_id)
        return None
    if pits.n < min_pit:
        logger.info("Dropping %s: %s PIT < %s", series.source_id, pits.n, min_pit)
        return None

    distances = all_distances(pits, grid_points)
    return SourceFeatures(
        source_id=series.source_id,
        n_pit=pits.n,
        med_energy_kev=median_energy(series),
        kappa=distances[Metric.KOLMOGOROV],
        nw=distances[Metric.NORM_WASSERSTEIN],
        nz2=distances[Metric.NORM_ZOLOTAREV2],
        label=label,
    )


def read_labels(source: TableSource) -> dict[str, SourceClass]:
    """Read a `source_id,label` CSV into a mapping."""
    frame = _read_table(source, LABEL_COLUMNS)
    labels: dict[str, SourceClass] = {}
    for row, (source_id, text) in enumerate(frame.itertuples(index=False, name=None), start=2):
        try:
            labels[str(source_id)] = SourceClass.parse(str(text))
        except InputError as error:
            raise InputError(str(error), line=row) from None
    return labels


def features_frame(features: Sequence[SourceFeatures]) -> pd.DataFrame:
    """Features as a table with columns source_id,n_pit,med_energy_kev,kappa,nw,nz2,label."""
    return pd.DataFrame(
        [
            (item.source_id, item.n_pit, item.med_energy_kev, item.kappa, item.nw, item.nz2, item.label or "")
            for item in features
        ],
        columns=list(FEATURE_COLUMNS),
    )


def write_features(features: Sequence[SourceFeatures], dest: str | Path | TextIO) -> None:
    """Write features as CSV."""
    features_frame(features).to_csv(dest, index=False, lineterminator="\n")


def read_features(source: TableSource) -> list[SourceFeatures]:
    """Read a features CSV written by `write_features`."""
    frame = _read_table(source, FEATURE_COLUMNS)
    numeric = _numeric_columns(frame[list(FEATURE_COLUMNS[1:6])])
    features: list[SourceFeatures] = []
    for row, (source_id, text) in enumerate(zip(frame["source_id"], frame["label"], strict=True)):
        try:
            label = SourceClass.parse(text) if text.strip() else None
        except InputError as error:
            raise InputError(str(error), line=row + 2) from None
        n_pit, med_energy, kappa, nw, nz2 = numeric[row]
        features.append(SourceFeatures(str(source_id), int(n_pit), med_energy, kappa, nw, nz2, label))
    return features


def write_events(series: EventSeries, dest: str | Path | TextIO, gaps_dest: str | Path | TextIO | None = None) -> None:
    """Write a series as an events CSV, and its gaps (between good intervals) when `gaps_dest` is given."""
    pd.DataFrame({"time_s": series.arrivals, "energy_kev": series.energies}).to_csv(
        dest, index=False, lineterminator="\n", float_format="%.17g"
    )
    if gaps_dest is not None:
        intervals = series.good_intervals
        gaps = [(left[1], right[0]) for left, right in zip(intervals, intervals[1:], strict=False)]
        pd.DataFrame(gaps, columns=list(GAP_COLUMNS)).to_csv(
            gaps_dest, index=False, lineterminator="\n", float_format="%.17g"
        )


def simulate_poisson_events(
    source_id: str,
    rate: float,
    duration: float,
    gaps: Sequence[Interval] = (),
    *,
    seed: int,
    band: Interval = DEFAULT_BAND,
) -> EventSeries:
    """Homogeneous Poisson arrivals on [0, duration] with the events inside `gaps` removed.

    Energies are log-uniform on `band`.
    """
    if not (rate > 0.0 and duration > 0.0):
        msg = f"rate and duration must be positive, got {rate} and {duration}"
        raise ConfigError(msg)
    rng = np.random.default_rng(seed)
    count = int(rng.poisson(rate * duration))
    arrivals = np.sort(rng.uniform(0.0, duration, count))
    energies = np.exp(rng.uniform(math.log(band[0]), math.log(band[1]), count))
    in_gap = np.zeros(count, dtype=bool)
    for start, end in gaps:
        in_gap |= (arrivals >= start) & (arrivals < end)
    arrivals, energies = arrivals[~in_gap], energies[~in_gap]
    if arrivals.size == 0:
        return EventSeries(source_id, arrivals, energies, ())
    intervals = good_intervals_from_gaps(float(arrivals[0]), float(arrivals[-1]), gaps)
    return EventSeries(source_id, arrivals, energies, intervals)


def _ingest_file(
    path: Path,
    *,
    labels: Mapping[str, SourceClass],
    band: Interval,
    min_pit: int,
    grid_points: int,
) -> SourceFeatures | None:
    gaps_path = path.with_name(path.name.removesuffix(".csv") + GAPS_SUFFIX)
    series = parse_events(path, gaps_path if gaps_path.is_file() else None)
    filtered = filter_energy(series, *band)
    return build_features(filtered, min_pit, grid_points=grid_points, label=labels.get(series.source_id))


def ingest_sources(
    directory: str | Path,
    *,
    labels: Mapping[str, SourceClass] | None = None,
    band: Interval = DEFAULT_BAND,
    min_pit: int = DEFAULT_MIN_PIT,
    grid_points: int = DEFAULT_GRID_POINTS,
    workers: int = 1,
) -> list[SourceFeatures]:
    """Build features for every `<source_id>.csv` in `directory` (gaps from `<source_id>.gaps.csv`).

    Sources are processed independently and returned sorted by source id; dropped sources are
    omitted.

    Raises:
        EmptySampleError: If the directory holds no event files.

    """
    paths = sorted(path for path in Path(directory).glob("*.csv") if not path.name.endswith(GAPS_SUFFIX))
    if not paths:
        msg = f"no event files in {directory}"
        raise EmptySampleError(msg)
    logger.info("Ingesting %s sources from %s", len(paths), directory)
    task = partial(_ingest_file, labels=dict(labels or {}), band=band, min_pit=min_pit, grid_points=grid_points)
    features = [item for item in map_tasks(task, paths, workers=workers) if item is not None]
    logger.info("✓ Kept %s of %s sources", len(features), len(paths))
    return sorted(features, key=lambda item: item.source_id)
