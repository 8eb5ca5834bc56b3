"""Command line tests for the expo-distance entry point."""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
import pytest

from expo_distance.cli import main
from expo_distance.reporting import read_csv
from tests.test_helpers import csv_body, run_cli, write_events_csv

if TYPE_CHECKING:
    from pathlib import Path

FAST_BRIDGE = ["--grid-subintervals", "1000"]


def _pit_file(path: Path, values: list[float] | np.ndarray) -> Path:
    path.write_text("".join(f"{value!r}\n" for value in np.asarray(values, dtype=float).tolist()), encoding="utf8")
    return path


def _label_file(path: Path) -> Path:
    pd.DataFrame(
        {"source_id": [f"src{index}" for index in range(6)], "label": ["NM"] * 3 + ["HO"] * 3}
    ).to_csv(path, index=False)
    return path


class TestDist:
    """Tests for `expo-distance dist`."""

    def test_single_pit(self, tmp_path: Path) -> None:
        """Test the distances of the one-point sample {1}."""
        out = tmp_path / "dist.csv"
        assert main(["dist", str(_pit_file(tmp_path / "one.txt", [1.0])), "--pit", "-o", str(out)]) == 0
        row = csv_body(out).iloc[0]
        assert row["source_id"] == "one"
        assert row["n"] == 1
        assert row["nw"] == pytest.approx(0.73576, abs=1e-5)
        assert row["nz2"] == pytest.approx(0.5, abs=1e-9)
        assert row["kappa"] == pytest.approx(0.63212, abs=1e-5)

    def test_metadata_line(self, tmp_path: Path) -> None:
        """Test that the output starts with the run metadata."""
        out = tmp_path / "dist.csv"
        main(["dist", str(_pit_file(tmp_path / "pits.txt", [1.0, 2.0])), "--pit", "-o", str(out)])
        metadata, frame = read_csv(out)
        assert metadata["tool"] == "expo-distance"
        assert metadata["command"] == "dist"
        assert "output" not in metadata["config"]
        assert list(frame.columns) == ["source_id", "n", "mean_hat", "kappa", "w", "z2", "nw", "nz2"]

    def test_json_output(self, tmp_path: Path) -> None:
        """Test the JSON rendering of the same row."""
        out = tmp_path / "dist.json"
        main(["dist", str(_pit_file(tmp_path / "one.txt", [1.0])), "--pit", "--format", "json", "-o", str(out)])
        document = json.loads(out.read_text(encoding="utf8"))
        assert document["rows"][0]["z2"] == pytest.approx(0.5)
        assert document["metadata"]["command"] == "dist"

    def test_too_few_pits(self, tmp_path: Path) -> None:
        """Test that an event list below --min-pit exits with code 3."""
        events = write_events_csv(tmp_path / "short.csv", [float(t) for t in range(10)], [1.0] * 10)
        assert main(["dist", str(events)]) == 3

    def test_parse_error(self, tmp_path: Path) -> None:
        """Test that a malformed event list exits with code 2."""
        events = tmp_path / "bad.csv"
        events.write_text("time_s,energy_kev\nabc,1.0\n", encoding="utf8")
        assert main(["dist", str(events)]) == 2

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test that a missing input exits with code 2."""
        assert main(["dist", str(tmp_path / "absent.csv")]) == 2

    def test_unknown_flag(self, tmp_path: Path) -> None:
        """Test that usage errors exit with code 4."""
        assert main(["dist", str(tmp_path / "x.csv"), "--no-such-flag"]) == 4


class TestGof:
    """Tests for `expo-distance gof`."""

    def test_exponential_pits(self, tmp_path: Path) -> None:
        """Test a small asymptotic test with a confidence interval."""
        values = np.random.default_rng(3).exponential(2.0, size=200)
        out = tmp_path / "gof.csv"
        code = main(
            [
                "gof",
                str(_pit_file(tmp_path / "pits.txt", values)),
                "--pit",
                "--metric",
                "nw",
                "--reps",
                "200",
                "--grid-points",
                "2000",
                *FAST_BRIDGE,
                "--interval",
                "asymptotic-quantile",
                "--seed",
                "1",
                "-o",
                str(out),
            ]
        )
        assert code == 0
        row = csv_body(out).iloc[0]
        assert 0.0 <= row["p_value"] <= 1.0
        assert 0.0 <= row["ci_lo"] <= row["ci_hi"]

    def test_seed_is_required(self, tmp_path: Path) -> None:
        """Test that the random commands refuse to run without a seed."""
        assert main(["gof", str(_pit_file(tmp_path / "pits.txt", [1.0] * 30)), "--pit"]) == 4

    def test_rejects_unnormalized_metric(self, tmp_path: Path) -> None:
        """Test the metric choices of the test."""
        pits = _pit_file(tmp_path / "pits.txt", [1.0] * 30)
        assert main(["gof", str(pits), "--pit", "--metric", "w", "--seed", "1"]) == 4


class TestLimit:
    """Tests for `expo-distance limit`."""

    def test_reruns_are_byte_identical(self, tmp_path: Path) -> None:
        """Test that the same seed and flags reproduce the output file exactly."""
        outputs = [tmp_path / "first.csv", tmp_path / "second.csv"]
        for out in outputs:
            args = ["limit", "--metric", "nz2", "--dist", "gamma:0.9", "--reps", "50", *FAST_BRIDGE, "--seed", "5"]
            result = run_cli(*args, "-o", out)
            assert result.returncode == 0, result.stderr
        assert outputs[0].read_bytes() == outputs[1].read_bytes()
        assert len(csv_body(outputs[0])) == 50

    def test_bad_distribution(self) -> None:
        """Test that an unknown family is a configuration error."""
        result = run_cli("limit", "--dist", "beta:2", "--seed", "1", "--reps", "10", *FAST_BRIDGE)
        assert result.returncode == 4


class TestSimstudy:
    """Tests for `expo-distance simstudy`."""

    def test_small_study(self, tmp_path: Path) -> None:
        """Test the draws table and the boxplot summary of a tiny study."""
        out = tmp_path / "study.csv"
        summary = tmp_path / "summary.json"
        code = main(
            [
                "simstudy",
                "--distributions",
                "exp",
                "--sizes",
                "20",
                "--replicates",
                "100",
                "--metrics",
                "nw",
                "--grid-points",
                "1000",
                *FAST_BRIDGE,
                "--seed",
                "2",
                "-o",
                str(out),
                "--summary",
                str(summary),
            ]
        )
        assert code == 0
        assert len(csv_body(out)) == 200
        cells = json.loads(summary.read_text(encoding="utf8"))["cells"]
        assert {cell["n"] for cell in cells} == {"20", "infinity"}

    def test_rejects_descending_sizes(self, tmp_path: Path) -> None:
        """Test study validation through the command line."""
        assert main(["simstudy", "--sizes", "500", "100", "--seed", "1", "-o", str(tmp_path / "x.csv")]) == 4


class TestIngestAndClassify:
    """Tests for `expo-distance ingest` followed by `expo-distance classify`."""

    def test_pipeline(self, poisson_source_dir: Path, tmp_path: Path) -> None:
        """Test that features feed the classifier and every requested artifact is written."""
        features = tmp_path / "features.csv"
        labels = _label_file(tmp_path / "labels.csv")
        assert main(["ingest", str(poisson_source_dir), "--labels", str(labels), "-o", str(features)]) == 0
        table = csv_body(features)
        assert len(table) == 6
        assert set(table["label"]) == {"NM", "HO"}

        model = tmp_path / "model.json"
        confusion = tmp_path / "confusion.csv"
        report = tmp_path / "report.json"
        posteriors = tmp_path / "posteriors.csv"
        code = main(
            [
                "classify",
                "--features",
                str(features),
                "--fit",
                "qda",
                "--model-out",
                str(model),
                "--confusion-out",
                str(confusion),
                "--posteriors-out",
                str(posteriors),
                "-o",
                str(report),
            ]
        )
        assert code == 0
        assert json.loads(model.read_text(encoding="utf8"))["kind"] == "qda"
        assert csv_body(confusion)["predicted"].tolist() == ["NM", "HO", "LO"]
        assert len(csv_body(posteriors)) == 6
        assert json.loads(report.read_text(encoding="utf8"))["confusion"]["classes"] == ["NM", "HO", "LO"]

    def test_knn_with_selected_k(self, poisson_source_dir: Path, tmp_path: Path) -> None:
        """Test k-NN with k chosen by leave-one-out."""
        features = tmp_path / "features.csv"
        labels = _label_file(tmp_path / "labels.csv")
        main(["ingest", str(poisson_source_dir), "--labels", str(labels), "-o", str(features)])
        report = tmp_path / "report.json"
        code = main(
            [
                "classify",
                "--features",
                str(features),
                "--fit",
                "knn",
                "--select-k",
                "--k-grid",
                "1",
                "3",
                "--scheme",
                "loo",
                "--seed",
                "0",
                "-o",
                str(report),
            ]
        )
        assert code == 0
        assert json.loads(report.read_text(encoding="utf8"))["k"] in {1, 3}

    def test_saved_model_classifies_unlabeled_sources(self, poisson_source_dir: Path, tmp_path: Path) -> None:
        """Test --model-out followed by --model-in on a features table without labels."""
        labeled = tmp_path / "labeled.csv"
        unlabeled = tmp_path / "unlabeled.csv"
        labels = _label_file(tmp_path / "labels.csv")
        main(["ingest", str(poisson_source_dir), "--labels", str(labels), "-o", str(labeled)])
        main(["ingest", str(poisson_source_dir), "-o", str(unlabeled)])
        model = tmp_path / "model.json"
        fitted = tmp_path / "fitted.csv"
        args = ["classify", "--fit", "knn", "--k", "3", "--metric", "nw"]
        outputs = ["--model-out", str(model), "--predictions-out", str(fitted)]
        assert main([*args, "--features", str(labeled), *outputs]) == 0

        applied = tmp_path / "applied.csv"
        report = tmp_path / "report.json"
        code = main(
            [
                "classify",
                "--features",
                str(unlabeled),
                "--model-in",
                str(model),
                "--predictions-out",
                str(applied),
                "-o",
                str(report),
            ]
        )
        assert code == 0
        assert csv_body(applied)["predicted"].tolist() == csv_body(fitted)["predicted"].tolist()
        assert set(csv_body(applied)["label"].fillna("")) == {""}
        document = json.loads(report.read_text(encoding="utf8"))
        assert document["fit"] == "knn"
        assert document["metric"] == "nw"
        assert document["k"] == 3
        assert "confusion" not in document

    def test_saved_model_scores_labeled_sources(self, poisson_source_dir: Path, tmp_path: Path) -> None:
        """Test that applying a model to labeled rows reproduces its resubstitution confusion matrix."""
        features = tmp_path / "features.csv"
        labels = _label_file(tmp_path / "labels.csv")
        main(["ingest", str(poisson_source_dir), "--labels", str(labels), "-o", str(features)])
        model = tmp_path / "model.json"
        fitted = tmp_path / "fitted.json"
        applied = tmp_path / "applied.json"
        assert main(["classify", "--features", str(features), "--model-out", str(model), "-o", str(fitted)]) == 0
        assert main(["classify", "--features", str(features), "--model-in", str(model), "-o", str(applied)]) == 0
        first = json.loads(fitted.read_text(encoding="utf8"))
        second = json.loads(applied.read_text(encoding="utf8"))
        assert second["fit"] == "qda"
        assert second["confusion"]["counts"] == first["confusion"]["counts"]

    @pytest.mark.parametrize("extra", [["--metric", "kappa"], ["--scheme", "cv5", "--seed", "1"], ["--select-k"]])
    def test_saved_model_flag_conflicts(self, poisson_source_dir: Path, tmp_path: Path, extra: list[str]) -> None:
        """Test that a loaded model cannot be refitted or read on another distance."""
        features = tmp_path / "features.csv"
        labels = _label_file(tmp_path / "labels.csv")
        main(["ingest", str(poisson_source_dir), "--labels", str(labels), "-o", str(features)])
        model = tmp_path / "model.json"
        assert main(["classify", "--features", str(features), "--model-out", str(model)]) == 0
        assert main(["classify", "--features", str(features), "--model-in", str(model), *extra]) == 4

    def test_corrupt_model_file(self, poisson_source_dir: Path, tmp_path: Path) -> None:
        """Test that an unreadable model is an input error."""
        features = tmp_path / "features.csv"
        main(["ingest", str(poisson_source_dir), "-o", str(features)])
        model = tmp_path / "model.json"
        model.write_text('{"kind": "tree"}\n', encoding="utf8")
        assert main(["classify", "--features", str(features), "--model-in", str(model)]) == 2

    def test_cross_validation_needs_a_seed(self, poisson_source_dir: Path, tmp_path: Path) -> None:
        """Test that random fold assignment requires --seed."""
        features = tmp_path / "features.csv"
        labels = _label_file(tmp_path / "labels.csv")
        main(["ingest", str(poisson_source_dir), "--labels", str(labels), "-o", str(features)])
        assert main(["classify", "--features", str(features), "--scheme", "cv5"]) == 4

    def test_empty_directory(self, tmp_path: Path) -> None:
        """Test that a directory without event files exits with code 3."""
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["ingest", str(empty)]) == 3
