"""Command line front end.

Subcommands:

- `dist`: all five distances of one source (event list or raw PIT file);
- `gof`: exponentiality test, optionally with a confidence interval for the distance;
- `limit`: draws of the limit law delta_inf(d, F);
- `simstudy`: the delta_n versus delta_inf Monte Carlo study;
- `ingest`: per-source features for a directory of event lists;
- `classify`: fit and evaluate QDA or k-NN on a features table, or apply a saved model.

Exit codes: 0 success, 2 input error, 3 empty or degenerate data, 4 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any, NoReturn

import pandas as pd

from expo_distance import __version__
from expo_distance.asymptotics import (
    BridgeConfig,
    GofMethod,
    IntervalMethod,
    confidence_interval,
    gof_exponentiality,
    null_law,
    sample_delta_infinity,
)
from expo_distance.classify import (
    DEFAULT_K_GRID,
    ConfusionMatrix,
    FeatureMatrix,
    KnnClassifier,
    KnnModel,
    QdaClassifier,
    QdaModel,
    Scheme,
    class_distance_summary,
    class_null_comparison,
    evaluate,
    load_model,
    posterior_table,
    prediction_table,
    save_model,
    score_model,
    select_k,
)
from expo_distance.common import ConfigError, EmptySampleError, ExpoDistanceError, InputError, Metric
from expo_distance.distributions import parse_distribution
from expo_distance.ingest import (
    DEFAULT_BAND,
    DEFAULT_MIN_PIT,
    extract_pits,
    features_frame,
    filter_energy,
    ingest_sources,
    parse_events,
    read_features,
    read_labels,
    read_pits,
)
from expo_distance.metrics import DEFAULT_GRID_POINTS, all_distances
from expo_distance.reporting import run_metadata, strip_metadata, write_csv, write_json
from expo_distance.simstudy import StudyConfig, run_study, summarize

if TYPE_CHECKING:
    from collections.abc import Sequence

    from expo_distance.common import PitSample

logger = logging.getLogger(__name__)

NORMALIZED_METRICS = [str(Metric.NORM_WASSERSTEIN), str(Metric.NORM_ZOLOTAREV2)]
FEATURE_METRICS = [str(Metric.KOLMOGOROV), *NORMALIZED_METRICS]
UNRECORDED_FLAGS = frozenset({"handler", "output", "verbose", "quiet", "workers"})
STUDY_DISTRIBUTIONS = ("exp", "gamma:0.9", "gamma:1.1", "weibull:0.9", "weibull:1.1")


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as configuration errors."""

    def error(self, message: str) -> NoReturn:
        """Raise instead of exiting, so usage errors share exit code 4."""
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _config(args: argparse.Namespace) -> dict[str, Any]:
    """The resolved flags that affect results, for the metadata header."""
    return {
        key: str(value) if isinstance(value, Path) else value
        for key, value in sorted(vars(args).items())
        if key not in UNRECORDED_FLAGS
    }


def _load_sample(args: argparse.Namespace) -> tuple[str, PitSample]:
    """Interarrival times from a raw PIT file or from an energy-filtered event list."""
    path: Path = args.input
    if args.pit:
        return path.stem, read_pits(path)
    series = filter_energy(parse_events(path, args.gaps), *args.band)
    pits = extract_pits(series)
    if pits.n < args.min_pit:
        msg = f"{series.source_id} has {pits.n} interarrival times, fewer than --min-pit {args.min_pit}"
        raise EmptySampleError(msg)
    return series.source_id, pits


def _bridge_config(args: argparse.Namespace) -> BridgeConfig:
    return BridgeConfig(
        horizon=args.horizon,
        grid_subintervals=args.grid_subintervals,
        tol=args.tol,
        reps=args.reps,
        seed=args.seed,
        workers=args.workers,
    )


def _emit_table(frame: pd.DataFrame, args: argparse.Namespace, command: str) -> None:
    metadata = run_metadata(command, getattr(args, "seed", None), _config(args))
    if args.format == "json":
        write_json({"rows": frame.to_dict(orient="records")}, args.output, metadata)
    else:
        write_csv(frame, args.output, metadata)


def cmd_dist(args: argparse.Namespace) -> int:
    """Print the five distances, n and the sample mean of one source."""
    source_id, pits = _load_sample(args)
    distances = all_distances(pits, args.grid_points)
    row = {"source_id": source_id, "n": pits.n, "mean_hat": pits.mean_hat}
    row |= {str(metric): value for metric, value in distances.items()}
    _emit_table(pd.DataFrame([row]), args, "dist")
    return 0


def cmd_gof(args: argparse.Namespace) -> int:
    """Test exponentiality of one source."""
    source_id, pits = _load_sample(args)
    metric = Metric(args.metric)
    cfg = _bridge_config(args)
    result = gof_exponentiality(
        pits,
        metric,
        args.level,
        GofMethod(args.method),
        cfg,
        resamples=args.resamples,
        grid_points=args.grid_points,
    )
    row: dict[str, Any] = {"source_id": source_id, "n": pits.n, **result.to_dict()}
    if args.interval is not None:
        interval = confidence_interval(
            pits,
            metric,
            args.interval_level,
            IntervalMethod(args.interval),
            cfg,
            resamples=args.resamples,
            grid_points=args.grid_points,
        )
        row |= {
            "ci_lo": interval.lo,
            "ci_hi": interval.hi,
            "ci_level": interval.level,
            "ci_method": str(interval.method),
        }
    logger.info("✓ %s: statistic %.4f, p-value %.4f", source_id, result.statistic, result.p_value)
    _emit_table(pd.DataFrame([row]), args, "gof")
    return 0


def cmd_limit(args: argparse.Namespace) -> int:
    """Draw the limit law of delta_n for one metric and distribution."""
    law = sample_delta_infinity(Metric(args.metric), parse_distribution(args.dist), _bridge_config(args))
    frame = pd.DataFrame({"replicate": range(law.reps), "value": law.draws})
    _emit_table(frame, args, "limit")
    return 0


def cmd_simstudy(args: argparse.Namespace) -> int:
    """Run the Monte Carlo study and write the draws and, optionally, the boxplot summary."""
    bridge = BridgeConfig(grid_subintervals=args.grid_subintervals, tol=args.tol)
    cfg = StudyConfig(
        distributions=tuple(parse_distribution(text) for text in args.distributions),
        sizes=tuple(args.sizes),
        replicates=args.replicates,
        metrics=tuple(Metric(text) for text in args.metrics),
        seed=args.seed,
        grid_points=args.grid_points,
        bridge=bridge,
        workers=args.workers,
    )
    table = run_study(cfg)
    metadata = run_metadata("simstudy", cfg.seed, {**_config(args), **cfg.to_dict()})
    write_csv(table, args.output, metadata)
    if args.summary is not None:
        write_json({"cells": summarize(table).to_dict(orient="records")}, args.summary, metadata)
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    """Build the features table of a directory of event lists."""
    labels = read_labels(args.labels) if args.labels is not None else {}
    features = ingest_sources(
        args.directory,
        labels=labels,
        band=(args.band[0], args.band[1]),
        min_pit=args.min_pit,
        grid_points=args.grid_points,
        workers=args.workers,
    )
    if not features:
        msg = f"no source in {args.directory} has {args.min_pit} interarrival times"
        raise EmptySampleError(msg)
    write_csv(features_frame(features), args.output, run_metadata("ingest", None, _config(args)))
    return 0


def _check_classify_flags(args: argparse.Namespace) -> None:
    if args.model_in is not None and (args.select_k or args.scheme != Scheme.RESUBSTITUTION):
        msg = "--model-in applies a fitted model and cannot be combined with --select-k or a cross-validation scheme"
        raise ConfigError(msg)
    needs_seed = args.select_k or args.scheme != Scheme.RESUBSTITUTION or args.null_reps is not None
    if needs_seed and args.seed is None:
        msg = "--seed is required with --select-k, cross-validation schemes and --null-reps"
        raise ConfigError(msg)


def _fit_model(
    args: argparse.Namespace, matrix: FeatureMatrix, scheme: Scheme, seed: int, report: dict[str, Any]
) -> tuple[QdaModel | KnnModel, ConfusionMatrix]:
    """Evaluate the requested classifier under `scheme`, then fit it to every labeled row."""
    if args.fit == "qda":
        classifier: QdaClassifier | KnnClassifier = QdaClassifier(args.ridge)
    else:
        k = args.k
        if args.select_k:
            selection_scheme = Scheme.CV10 if scheme is Scheme.RESUBSTITUTION else scheme
            selection = select_k(matrix, args.k_grid, selection_scheme, seed)
            k = selection.k
            report["k_selection"] = selection.to_frame().to_dict(orient="records")
        report["k"] = k
        classifier = KnnClassifier(k)
    confusion = evaluate(classifier, matrix, scheme, seed, workers=args.workers)
    return classifier.fit(matrix), confusion


def _resolve_metric(args: argparse.Namespace, model: QdaModel | KnnModel | None) -> Metric:
    """The --metric flag, or the metric a loaded model was fitted on; the two must agree."""
    if model is None:
        return Metric(args.metric or Metric.NORM_ZOLOTAREV2)
    if args.metric is not None and Metric(args.metric) is not model.metric:
        msg = f"--metric {args.metric} differs from the {model.metric} the model was fitted on"
        raise ConfigError(msg)
    return model.metric


def _score_loaded_model(
    args: argparse.Namespace, model: QdaModel | KnnModel, matrix: FeatureMatrix, report: dict[str, Any]
) -> ConfusionMatrix | None:
    """Confusion matrix of a loaded model on the labeled rows, or None when no row is labeled."""
    report["fit"] = "qda" if isinstance(model, QdaModel) else "knn"
    if isinstance(model, KnnModel):
        report["k"] = model.k
    logger.info("Loaded %s model fitted on %s from %s", report["fit"], model.metric, args.model_in)
    return score_model(model, matrix) if any(label is not None for label in matrix.labels) else None


def cmd_classify(args: argparse.Namespace) -> int:
    """Fit QDA or k-NN on labeled features, or apply a saved model, and report its confusion matrix."""
    _check_classify_flags(args)
    loaded = load_model(args.model_in) if args.model_in is not None else None
    metric = _resolve_metric(args, loaded)
    args.metric = str(metric)
    features = read_features(strip_metadata(args.features))
    matrix = FeatureMatrix.from_features(features, metric)
    scheme = Scheme(args.scheme)
    seed = args.seed if args.seed is not None else 0
    metadata = run_metadata("classify", args.seed, _config(args))
    report: dict[str, Any] = {"metric": str(metric), "scheme": str(scheme)}

    confusion: ConfusionMatrix | None
    if loaded is None:
        report["fit"] = args.fit
        model, confusion = _fit_model(args, matrix, scheme, seed, report)
    else:
        model = loaded
        confusion = _score_loaded_model(args, model, matrix, report)
    if confusion is not None:
        report["confusion"] = confusion.to_dict()

    if args.model_out is not None:
        save_model(model, args.model_out)
        logger.info("✓ Wrote model to %s", args.model_out)
    if args.confusion_out is not None:
        if confusion is None:
            msg = "--confusion-out needs labeled sources"
            raise EmptySampleError(msg)
        write_csv(confusion.to_frame(), args.confusion_out, metadata)
    if args.predictions_out is not None:
        write_csv(prediction_table(model, matrix), args.predictions_out, metadata)
    if args.posteriors_out is not None:
        if not isinstance(model, QdaModel):
            msg = "--posteriors-out needs a QDA model"
            raise ConfigError(msg)
        posteriors = posterior_table(model, matrix, misclassified_only=args.misclassified_only)
        write_csv(posteriors, args.posteriors_out, metadata)
    if args.summary_out is not None:
        write_csv(class_distance_summary(features, metric), args.summary_out, metadata)
    if args.null_reps is not None:
        draws = null_law(metric, BridgeConfig(reps=args.null_reps, seed=seed, workers=args.workers)).draws
        report["null_comparison"] = class_null_comparison(features, metric, draws).to_dict(orient="records")
    write_json(report, args.output, metadata)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    parser.add_argument("--workers", type=int, default=1, help="number of worker processes")
    parser.add_argument("-o", "--output", type=Path, default=None, help="output file (default: stdout)")


def _add_sample_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", type=Path, help="events CSV (time_s,energy_kev), or a one-column PIT file with --pit")
    parser.add_argument("--pit", action="store_true", help="read the input as raw interarrival times")
    parser.add_argument("--gaps", type=Path, default=None, help="gaps CSV (gap_start_s,gap_end_s)")
    parser.add_argument(
        "--band", type=float, nargs=2, default=list(DEFAULT_BAND), metavar=("LO", "HI"), help="energy band in keV"
    )
    parser.add_argument("--min-pit", type=int, default=DEFAULT_MIN_PIT, help="minimum number of interarrival times")
    parser.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS, help="quadrature subintervals")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")


def _add_bridge(parser: argparse.ArgumentParser, *, with_reps: bool = True) -> None:
    parser.add_argument("--grid-subintervals", type=int, default=50_000, help="subintervals of [0, T] for the bridge")
    parser.add_argument("--tol", type=float, default=1e-6, help="tail mass beyond the derived horizon T")
    if with_reps:
        parser.add_argument("--horizon", type=float, default=None, help="explicit horizon T")
        parser.add_argument("--reps", type=int, default=10_000, help="limit-law draws")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of all subcommands."""
    parser = _Parser(prog="expo-distance", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    dist = commands.add_parser("dist", help="distances of one source to the exponential class")
    _add_common(dist)
    _add_sample_input(dist)
    dist.set_defaults(handler=cmd_dist)

    gof = commands.add_parser("gof", help="goodness-of-fit test of exponentiality")
    _add_common(gof)
    _add_sample_input(gof)
    _add_bridge(gof)
    gof.add_argument("--metric", choices=NORMALIZED_METRICS, default=str(Metric.NORM_ZOLOTAREV2))
    gof.add_argument("--level", type=float, default=0.05, help="significance level")
    gof.add_argument("--method", choices=[str(m) for m in GofMethod], default=str(GofMethod.ASYMPTOTIC))
    gof.add_argument("--resamples", type=int, default=999, help="bootstrap resamples")
    gof.add_argument("--interval", choices=[str(m) for m in IntervalMethod], help="add a confidence interval")
    gof.add_argument("--interval-level", type=float, default=0.9, help="confidence level of --interval")
    gof.add_argument("--seed", type=int, required=True)
    gof.set_defaults(handler=cmd_gof)

    limit = commands.add_parser("limit", help="draws of the limit law delta_inf")
    _add_common(limit)
    _add_bridge(limit)
    limit_metrics = [str(m) for m in Metric if m is not Metric.KOLMOGOROV]
    limit.add_argument("--metric", choices=limit_metrics, default=str(Metric.NORM_ZOLOTAREV2))
    limit.add_argument("--dist", default="exp", help="exp, weibull:<shape> or gamma:<shape> (mean 1)")
    limit.add_argument("--format", choices=["csv", "json"], default="csv")
    limit.add_argument("--seed", type=int, required=True)
    limit.set_defaults(handler=cmd_limit)

    study = commands.add_parser("simstudy", help="delta_n versus delta_inf Monte Carlo study")
    _add_common(study)
    _add_bridge(study, with_reps=False)
    study.add_argument("--distributions", nargs="+", default=list(STUDY_DISTRIBUTIONS))
    study.add_argument("--sizes", type=int, nargs="+", default=[100, 500, 1000, 5000])
    study.add_argument("--replicates", type=int, default=10_000)
    study.add_argument("--metrics", nargs="+", choices=NORMALIZED_METRICS, default=NORMALIZED_METRICS)
    study.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    study.add_argument("--summary", type=Path, default=None, help="write boxplot statistics as JSON")
    study.add_argument("--seed", type=int, required=True)
    study.set_defaults(handler=cmd_simstudy)

    ingest = commands.add_parser("ingest", help="features of a directory of event lists")
    _add_common(ingest)
    ingest.add_argument("directory", type=Path, help="directory of <source_id>.csv and <source_id>.gaps.csv files")
    ingest.add_argument("--labels", type=Path, default=None, help="CSV with columns source_id,label")
    ingest.add_argument("--band", type=float, nargs=2, default=list(DEFAULT_BAND), metavar=("LO", "HI"))
    ingest.add_argument("--min-pit", type=int, default=DEFAULT_MIN_PIT)
    ingest.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    ingest.set_defaults(handler=cmd_ingest)

    classify = commands.add_parser("classify", help="QDA or k-NN on (log median energy, log distance)")
    _add_common(classify)
    classify.add_argument("--features", type=Path, required=True, help="features CSV written by ingest")
    classify.add_argument(
        "--metric", choices=FEATURE_METRICS, default=None, help="distance feature (default: nz2, or the model's)"
    )
    classify.add_argument("--fit", choices=["qda", "knn"], default="qda")
    classify.add_argument("--ridge", type=float, default=0.0, help="added to QDA covariance diagonals")
    classify.add_argument("--k", type=int, default=5)
    classify.add_argument("--select-k", action="store_true", help="choose k by cross-validation")
    classify.add_argument("--k-grid", type=int, nargs="+", default=list(DEFAULT_K_GRID))
    classify.add_argument("--scheme", choices=[str(s) for s in Scheme], default=str(Scheme.RESUBSTITUTION))
    classify.add_argument("--model-out", type=Path, default=None, help="write the fitted model as JSON")
    classify.add_argument("--model-in", type=Path, default=None, help="apply a model written by --model-out")
    classify.add_argument("--predictions-out", type=Path, default=None, help="predicted class of every source")
    classify.add_argument("--confusion-out", type=Path, default=None)
    classify.add_argument("--posteriors-out", type=Path, default=None)
    classify.add_argument("--misclassified-only", action="store_true")
    classify.add_argument("--summary-out", type=Path, default=None, help="per-class distance boxplot statistics")
    classify.add_argument("--null-reps", type=int, default=None, help="null-law draws to compare classes with")
    classify.add_argument("--seed", type=int, default=None)
    classify.set_defaults(handler=cmd_classify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the `expo-distance` command."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError:
        return ConfigError.exit_code

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.handler(args)
    except ExpoDistanceError as error:
        logger.error("%s", error)  # noqa: TRY400
        return error.exit_code
    except FileNotFoundError as error:
        logger.error("%s", error)  # noqa: TRY400
        return InputError.exit_code
    except OSError:
        logger.exception("I/O failure")
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
