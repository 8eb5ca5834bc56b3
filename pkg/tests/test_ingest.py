"""Tests for event-list parsing, PIT extraction and feature building."""

from __future__ import annotations

import io
from typing import TYPE_CHECKING

import numpy as np
import pytest

from expo_distance.asymptotics import BridgeConfig, GofMethod, gof_exponentiality
from expo_distance.common import ConfigError, EmptySampleError, InputError, Metric, SourceClass
from expo_distance.ingest import (
    EventSeries,
    SourceFeatures,
    build_features,
    extract_pits,
    features_frame,
    filter_energy,
    good_intervals_from_gaps,
    ingest_sources,
    median_energy,
    parse_events,
    read_features,
    read_gaps,
    read_labels,
    read_pits,
    simulate_poisson_events,
    write_events,
    write_features,
)
from tests.test_helpers import write_events_csv

if TYPE_CHECKING:
    from pathlib import Path

    from expo_distance.ingest import Interval

EVENTS_HEADER = "time_s,energy_kev\n"
GAPS_HEADER = "gap_start_s,gap_end_s\n"


def _events(text: str) -> io.StringIO:
    return io.StringIO(EVENTS_HEADER + text)


def _series(
    arrivals: list[float],
    intervals: tuple[tuple[float, float], ...],
    energies: list[float] | None = None,
) -> EventSeries:
    times = np.array(arrivals, dtype=np.float64)
    values = np.ones_like(times) if energies is None else np.array(energies, dtype=np.float64)
    return EventSeries("test", times, values, intervals)


class TestParseEvents:
    """Tests for parse_events."""

    def test_single_good_interval(self) -> None:
        """Test that a file without gaps spans [first, last]."""
        series = parse_events(_events("1.0,2.0\n2.5,1.5\n4.0,3.0\n"))
        assert series.arrivals.tolist() == [1.0, 2.5, 4.0]
        assert series.energies.tolist() == [2.0, 1.5, 3.0]
        assert series.good_intervals == ((1.0, 4.0),)
        assert series.source_id == "stream"

    def test_gap_splits_the_interval(self) -> None:
        """Test that a gap [2.0, 2.4) leaves two good intervals."""
        series = parse_events(_events("1.0,2.0\n2.5,1.5\n4.0,3.0\n"), io.StringIO(GAPS_HEADER + "2.0,2.4\n"))
        assert series.good_intervals == ((1.0, 2.0), (2.4, 4.0))
        assert series.interval_ids().tolist() == [0, 1, 1]

    def test_non_numeric_row_reports_its_line(self) -> None:
        """Test that the first data row is line 2."""
        with pytest.raises(InputError) as excinfo:
            parse_events(_events("abc,1.0\n"))
        assert excinfo.value.line == 2

    def test_bad_header(self) -> None:
        """Test that the header is checked."""
        with pytest.raises(InputError) as excinfo:
            parse_events(io.StringIO("time,energy\n1.0,2.0\n"))
        assert excinfo.value.line == 1

    def test_non_positive_energy(self) -> None:
        """Test that energies must be positive."""
        with pytest.raises(InputError) as excinfo:
            parse_events(_events("1.0,2.0\n2.0,0.0\n"))
        assert excinfo.value.line == 3

    def test_rejects_time_going_backwards(self) -> None:
        """Test that a step back beyond the tolerance is an error."""
        with pytest.raises(InputError) as excinfo:
            parse_events(_events("1.0,2.0\n3.0,2.0\n2.0,2.0\n"))
        assert excinfo.value.line == 4

    def test_tolerates_tiny_reordering(self) -> None:
        """Test that steps back within the tolerance are re-sorted."""
        series = parse_events(_events("1.0,2.0\n3.0,5.0\n2.9999999,7.0\n"))
        assert series.arrivals.tolist() == [1.0, 2.9999999, 3.0]
        assert series.energies.tolist() == [2.0, 7.0, 5.0]

    def test_events_inside_gaps_are_dropped(self) -> None:
        """Test that photons recorded during a gap are removed."""
        series = parse_events(_events("1.0,1.0\n2.2,1.0\n4.0,1.0\n"), io.StringIO(GAPS_HEADER + "2.0,2.4\n"))
        assert series.arrivals.tolist() == [1.0, 4.0]

    def test_empty_event_list(self) -> None:
        """Test that a header-only file gives an empty series that yields no PIT."""
        series = parse_events(_events(""))
        assert series.size == 0
        with pytest.raises(EmptySampleError):
            extract_pits(series)

    def test_source_id_from_file_name(self, tmp_path: Path) -> None:
        """Test that the id defaults to the file name without its suffix."""
        path = write_events_csv(tmp_path / "coup_0042.csv", [1.0, 2.0], [1.0, 1.0])
        assert parse_events(path).source_id == "coup_0042"


class TestGaps:
    """Tests for gap handling."""

    def test_overlapping_gaps_are_merged(self) -> None:
        """Test the complement of overlapping gaps."""
        assert good_intervals_from_gaps(0.0, 10.0, [(2.0, 4.0), (3.0, 5.0), (8.0, 12.0)]) == ((0.0, 2.0), (5.0, 8.0))

    def test_gaps_outside_the_span_are_ignored(self) -> None:
        """Test gaps before the first and after the last event."""
        assert good_intervals_from_gaps(5.0, 10.0, [(0.0, 1.0), (11.0, 12.0)]) == ((5.0, 10.0),)

    def test_rejects_inverted_gap(self) -> None:
        """Test that gap_end_s must exceed gap_start_s."""
        with pytest.raises(InputError) as excinfo:
            read_gaps(io.StringIO(GAPS_HEADER + "1.0,2.0\n5.0,5.0\n"))
        assert excinfo.value.line == 3


class TestFilterEnergy:
    """Tests for filter_energy."""

    def test_keeps_the_band(self) -> None:
        """Test the default 0.5 to 8 keV band."""
        series = _series([1.0, 2.0, 3.0, 4.0], ((1.0, 4.0),), [0.3, 1.0, 9.2, 4.4])
        filtered = filter_energy(series)
        assert filtered.arrivals.tolist() == [2.0, 4.0]
        assert filtered.energies.tolist() == [1.0, 4.4]

    def test_is_idempotent(self) -> None:
        """Test that filtering twice changes nothing."""
        series = _series([1.0, 2.0, 3.0, 4.0], ((1.0, 4.0),), [0.3, 1.0, 9.2, 4.4])
        once = filter_energy(series)
        twice = filter_energy(once)
        assert np.array_equal(once.arrivals, twice.arrivals)
        assert np.array_equal(once.energies, twice.energies)

    def test_band_ends_are_inclusive(self) -> None:
        """Test lo <= e <= hi."""
        series = _series([1.0, 2.0], ((1.0, 2.0),), [0.5, 8.0])
        assert filter_energy(series).size == 2

    def test_rejects_empty_band(self) -> None:
        """Test band validation."""
        with pytest.raises(ConfigError):
            filter_energy(_series([1.0], ((1.0, 1.0),)), 2.0, 2.0)


class TestExtractPits:
    """Tests for extract_pits."""

    def test_consecutive_differences(self) -> None:
        """Test arrivals [1, 2, 5] in one interval."""
        assert extract_pits(_series([1.0, 2.0, 5.0], ((1.0, 5.0),))).values.tolist() == [1.0, 3.0]

    def test_differences_across_a_gap_are_discarded(self) -> None:
        """Test arrivals [1, 2] and [10, 11] separated by a gap."""
        series = _series([1.0, 2.0, 10.0, 11.0], ((1.0, 3.0), (9.0, 11.0)))
        assert extract_pits(series).values.tolist() == [1.0, 1.0]

    def test_timestamp_ties_are_discarded(self) -> None:
        """Test arrivals [1, 1, 2]."""
        assert extract_pits(_series([1.0, 1.0, 2.0], ((1.0, 2.0),))).values.tolist() == [1.0]

    def test_no_pit_at_all(self) -> None:
        """Test one event per interval."""
        with pytest.raises(EmptySampleError):
            extract_pits(_series([1.0, 10.0], ((1.0, 3.0), (9.0, 10.0))))

    def test_no_pit_straddles_a_gap(self) -> None:
        """Test that a gapped Poisson source yields one PIT fewer than events per interval."""
        gaps = [(300.0, 350.0), (700.0, 720.0)]
        series = simulate_poisson_events("gapped", 2.0, 1000.0, gaps, seed=3)
        pits = extract_pits(series)
        occupied = np.unique(series.interval_ids()).size
        assert pits.n == series.size - occupied
        assert pits.last < 50.0


class TestFeatures:
    """Tests for per-source features."""

    def test_median_energy(self) -> None:
        """Test the median of [1, 2, 3]."""
        assert median_energy(_series([1.0, 2.0, 3.0], ((1.0, 3.0),), [1.0, 2.0, 3.0])) == 2.0

    def test_too_few_pits_drops_the_source(self) -> None:
        """Test that 100 events in one interval (99 PIT) fall below the default minimum."""
        arrivals = np.arange(1.0, 101.0)
        series = EventSeries("short", arrivals, np.ones_like(arrivals), ((1.0, 100.0),))
        assert build_features(series) is None
        assert build_features(series, min_pit=99) is not None

    def test_poisson_source_looks_exponential(self) -> None:
        """Test that 2000 Poisson arrivals give a small nz2."""
        series = simulate_poisson_events("poisson", 1.0, 2000.0, seed=10)
        features = build_features(filter_energy(series))
        assert features is not None
        assert features.n_pit == series.size - 1
        assert features.nz2 < 0.05
        assert features.nw < 0.1
        assert features.kappa < 0.1

    def test_distance_accessors(self) -> None:
        """Test metric lookup and the sqrt(n) scaling."""
        features = SourceFeatures("s", 400, 1.5, 0.1, 0.2, 0.3)
        assert features.distance(Metric.NORM_WASSERSTEIN) == 0.2
        assert features.scaled_statistic(Metric.NORM_ZOLOTAREV2) == pytest.approx(6.0)
        with pytest.raises(ConfigError):
            features.distance(Metric.WASSERSTEIN)

    def test_features_round_trip(self) -> None:
        """Test write_features followed by read_features."""
        features = [
            SourceFeatures("a", 120, 1.25, 0.05, 0.06, 0.004, SourceClass.HO),
            SourceFeatures("b", 300, 2.5, 0.01, 0.02, 0.0005, None),
        ]
        buffer = io.StringIO()
        write_features(features, buffer)
        buffer.seek(0)
        assert read_features(buffer) == features
        assert features_frame(features)["label"].tolist() == ["HO", ""]

    def test_read_labels(self) -> None:
        """Test short and long class names."""
        labels = read_labels(io.StringIO("source_id,label\na,NM\nb,heavily-obscured\nc,lo\n"))
        assert labels == {"a": SourceClass.NM, "b": SourceClass.HO, "c": SourceClass.LO}

    def test_unknown_label_reports_its_line(self) -> None:
        """Test label validation."""
        with pytest.raises(InputError) as excinfo:
            read_labels(io.StringIO("source_id,label\na,NM\nb,star\n"))
        assert excinfo.value.line == 3


class TestReadPits:
    """Tests for the headerless PIT file."""

    def test_reads_values(self) -> None:
        """Test a small file."""
        assert read_pits(io.StringIO("2.0\n1.0\n")).values.tolist() == [1.0, 2.0]

    def test_rejects_non_positive_value(self) -> None:
        """Test that values must be positive."""
        with pytest.raises(InputError) as excinfo:
            read_pits(io.StringIO("1.0\n-2.0\n"))
        assert excinfo.value.line == 2

    def test_empty_file(self) -> None:
        """Test that an empty file has no sample."""
        with pytest.raises(EmptySampleError):
            read_pits(io.StringIO(""))


class TestIngestSources:
    """Tests for directory ingestion."""

    def test_every_source_is_kept_and_sorted(self, poisson_source_dir: Path) -> None:
        """Test that all simulated sources have enough PIT."""
        features = ingest_sources(poisson_source_dir)
        assert [item.source_id for item in features] == [f"src{index}" for index in range(6)]
        assert all(item.n_pit >= 100 for item in features)
        assert all(item.label is None for item in features)

    def test_labels_are_attached(self, poisson_source_dir: Path) -> None:
        """Test that labels are looked up by source id."""
        features = ingest_sources(poisson_source_dir, labels={"src1": SourceClass.LO})
        assert features[1].label is SourceClass.LO
        assert features[0].label is None

    def test_parallel_matches_serial(self, poisson_source_dir: Path) -> None:
        """Test that worker processes do not change the result."""
        assert ingest_sources(poisson_source_dir, grid_points=2000) == ingest_sources(
            poisson_source_dir, grid_points=2000, workers=2
        )

    def test_gaps_file_is_used(self, poisson_source_dir: Path) -> None:
        """Test that a source written with gaps is read back with the same good intervals."""
        series = parse_events(poisson_source_dir / "src1.csv", poisson_source_dir / "src1.gaps.csv")
        assert len(series.good_intervals) == 3
        assert series.good_intervals[1][0] == 5600.0

    def test_empty_directory(self, tmp_path: Path) -> None:
        """Test that a directory without event files is an error."""
        with pytest.raises(EmptySampleError):
            ingest_sources(tmp_path)

    def test_write_events_round_trip(self, tmp_path: Path) -> None:
        """Test that written events parse back to the same arrivals."""
        series = simulate_poisson_events("rt", 0.5, 100.0, [(40.0, 50.0)], seed=2)
        write_events(series, tmp_path / "rt.csv", tmp_path / "rt.gaps.csv")
        parsed = parse_events(tmp_path / "rt.csv", tmp_path / "rt.gaps.csv")
        assert np.array_equal(parsed.arrivals, series.arrivals)
        assert parsed.good_intervals == series.good_intervals


def _random_gaps(seed: int, duration: float, count: int) -> list[Interval]:
    """`count` gaps at uniform positions, 10 to 200 s long, possibly overlapping."""
    rng = np.random.default_rng(seed)
    starts = np.sort(rng.uniform(0.0, duration, count))
    return [(float(start), float(start + rng.uniform(10.0, 200.0))) for start in starts]


class TestPoissonFidelity:
    """Gap-aware extraction must leave Poisson interarrival times exponential."""

    @pytest.mark.slow
    @pytest.mark.parametrize("metric", [Metric.NORM_WASSERSTEIN, Metric.NORM_ZOLOTAREV2])
    def test_gapped_poisson_sources_pass_the_exponentiality_test(self, metric: Metric) -> None:
        """Test that at least 93% of 200 gapped Poisson sources are not rejected at level 0.05."""
        cfg = BridgeConfig(reps=2000, seed=41)
        duration = 2000.0
        seeds = range(200)
        accepted = 0
        for seed in seeds:
            gaps = _random_gaps(seed, duration, 6)
            series = simulate_poisson_events(f"src{seed}", 1.0, duration, gaps, seed=1000 + seed)
            pits = extract_pits(series)
            assert pits.n == series.size - np.unique(series.interval_ids()).size
            accepted += not gof_exponentiality(pits, metric, 0.05, GofMethod.ASYMPTOTIC, cfg).reject
        assert accepted / len(seeds) >= 0.93
