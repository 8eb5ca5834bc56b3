"""Source classification in the (log median energy, log distance) plane.

Two classifiers are provided: quadratic discriminant analysis with Gaussian class-conditional
densities, and the k-nearest-neighbour rule on the raw log features (no standardization).
Both are evaluated by resubstitution or stratified cross-validation.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from functools import partial
from pathlib import Path
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np
import pandas as pd
from scipy import special, stats
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import LeaveOneOut, StratifiedKFold

from expo_distance.common import (
    ConfigError,
    DegenerateDataError,
    EmptySampleError,
    InputError,
    Metric,
    SingularCovarianceError,
    SourceClass,
)
from expo_distance.replicates import map_tasks
from expo_distance.simstudy import boxplot_stats

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Sequence

    import numpy.typing as npt

    from expo_distance.common import FloatArray
    from expo_distance.ingest import SourceFeatures

logger = logging.getLogger(__name__)

CLASSES = tuple(SourceClass)
MIN_CLASS_ROWS = 3
DEFAULT_K_GRID = tuple(range(5, 64, 2))

type IntArray = npt.NDArray[np.intp]


class Scheme(StrEnum):
    """How predictions are obtained for evaluation."""

    RESUBSTITUTION = "resub"
    CV10 = "cv10"
    CV5 = "cv5"
    LOO = "loo"

    @property
    def folds(self) -> int | None:
        """Number of folds, or None for resubstitution and leave-one-out."""
        return {Scheme.CV10: 10, Scheme.CV5: 5}.get(self)


@dataclass(frozen=True)
class FeatureMatrix:
    """Log features of a set of sources.

    Args:
        points (FloatArray): Rows (log med_energy_kev, log distance).
        labels (tuple[SourceClass | None, ...]): Known class of each row, if any.
        source_ids (tuple[str, ...]): Row identifiers.
        metric (Metric): The distance used as second feature.

    """

    points: FloatArray
    labels: tuple[SourceClass | None, ...]
    source_ids: tuple[str, ...]
    metric: Metric

    def __post_init__(self) -> None:
        """Check shapes and finiteness."""
        if self.points.ndim != 2 or self.points.shape[1] != 2:  # noqa: PLR2004
            msg = f"feature points must have shape (m, 2), got {self.points.shape}"
            raise InputError(msg)
        if not len(self.labels) == len(self.source_ids) == self.points.shape[0]:
            msg = "points, labels and source ids differ in length"
            raise InputError(msg)
        if not np.all(np.isfinite(self.points)):
            msg = "feature points must be finite"
            raise InputError(msg)

    @classmethod
    def from_features(cls, features: Sequence[SourceFeatures], metric: Metric) -> FeatureMatrix:
        """Take logs of median energy and of the chosen distance.

        Raises:
            EmptySampleError: If `features` is empty.
            DegenerateDataError: If a source has a zero distance or energy, whose log is undefined.

        """
        if not features:
            msg = "no sources to classify"
            raise EmptySampleError(msg)
        raw = np.array([(item.med_energy_kev, item.distance(metric)) for item in features], dtype=np.float64)
        bad = np.flatnonzero(~np.all(raw > 0.0, axis=1))
        if bad.size:
            msg = f"source {features[bad[0]].source_id} has a nonpositive energy or {metric} distance"
            raise DegenerateDataError(msg)
        return cls(
            points=np.log(raw),
            labels=tuple(item.label for item in features),
            source_ids=tuple(item.source_id for item in features),
            metric=metric,
        )

    @classmethod
    def from_arrays(
        cls,
        points: FloatArray,
        labels: Iterable[SourceClass | None],
        metric: Metric = Metric.NORM_ZOLOTAREV2,
    ) -> FeatureMatrix:
        """Wrap ready-made log features; rows are named by their index."""
        points = np.asarray(points, dtype=np.float64)
        return cls(points, tuple(labels), tuple(str(index) for index in range(points.shape[0])), metric)

    @property
    def size(self) -> int:
        """Number of rows."""
        return int(self.points.shape[0])

    def take(self, rows: IntArray) -> FeatureMatrix:
        """The sub-matrix made of `rows`."""
        return FeatureMatrix(
            self.points[rows],
            tuple(self.labels[i] for i in rows),
            tuple(self.source_ids[i] for i in rows),
            self.metric,
        )

    def labeled(self) -> FeatureMatrix:
        """The rows with a known class.

        Raises:
            EmptySampleError: If no row is labeled.

        """
        rows = np.array([i for i, label in enumerate(self.labels) if label is not None], dtype=np.intp)
        if rows.size == 0:
            msg = "no labeled sources"
            raise EmptySampleError(msg)
        return self.take(rows)

    def class_ranks(self) -> IntArray:
        """Class index (NM=0, HO=1, LO=2) of every row; rows must be labeled."""
        if any(label is None for label in self.labels):
            msg = "every row must be labeled"
            raise EmptySampleError(msg)
        return np.array([label.rank for label in self.labels if label is not None], dtype=np.intp)


class Predictor(Protocol):
    """A fitted classifier."""

    def predict(self, points: FloatArray) -> IntArray:
        """Class ranks predicted for `points`."""
        ...


class Classifier(Protocol):
    """Unfitted classifier settings that can be fitted to labeled features."""

    def fit(self, train: FeatureMatrix) -> Predictor:
        """Fit to the labeled matrix `train`."""
        ...


@dataclass(frozen=True)
class ClassGaussian:
    """Fitted Gaussian of one class."""

    label: SourceClass
    prior: float
    mean: FloatArray
    covariance: FloatArray


@dataclass(frozen=True)
class QdaModel:
    """Quadratic discriminant model: one Gaussian per class weighted by its sample proportion."""

    components: tuple[ClassGaussian, ...]
    ridge: float = 0.0
    metric: Metric = Metric.NORM_ZOLOTAREV2

    @property
    def classes(self) -> tuple[SourceClass, ...]:
        """Classes of the model, in NM < HO < LO order."""
        return tuple(component.label for component in self.components)

    def log_joint(self, points: FloatArray) -> FloatArray:
        """log(prior) + log density of every point under every class, shape (m, classes)."""
        points = np.atleast_2d(points)
        return np.column_stack(
            [
                math.log(component.prior)
                + np.atleast_1d(stats.multivariate_normal.logpdf(points, component.mean, component.covariance))
                for component in self.components
            ]
        )

    def posteriors(self, points: FloatArray) -> FloatArray:
        """Posterior class probabilities of every point, rows summing to 1."""
        joint = self.log_joint(points)
        return np.exp(joint - special.logsumexp(joint, axis=1, keepdims=True))

    def predict(self, points: FloatArray) -> IntArray:
        """Class ranks of the maximum posterior."""
        ranks = np.array([label.rank for label in self.classes], dtype=np.intp)
        return ranks[np.argmax(self.log_joint(points), axis=1)]

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready representation."""
        return {
            "kind": "qda",
            "ridge": self.ridge,
            "metric": str(self.metric),
            "classes": [
                {
                    "label": str(component.label),
                    "prior": component.prior,
                    "mean": component.mean.tolist(),
                    "covariance": component.covariance.tolist(),
                }
                for component in self.components
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> QdaModel:
        """Rebuild a model written by `to_dict`."""
        try:
            components = tuple(
                ClassGaussian(
                    label=SourceClass.parse(item["label"]),
                    prior=float(item["prior"]),
                    mean=np.asarray(item["mean"], dtype=np.float64),
                    covariance=np.asarray(item["covariance"], dtype=np.float64),
                )
                for item in data["classes"]
            )
            metric = Metric(data.get("metric", Metric.NORM_ZOLOTAREV2))
            ridge = float(data.get("ridge", 0.0))
        except (KeyError, TypeError, ValueError) as error:
            msg = f"malformed QDA model: {error}"
            raise InputError(msg) from error
        return cls(components, ridge, metric)


def fit_qda(train: FeatureMatrix, ridge: float = 0.0) -> QdaModel:
    """Fit class priors, means and (unbiased) covariances; `ridge` is added to each diagonal.

    Raises:
        DegenerateDataError: If fewer than two classes are present or a class has fewer than 3 rows.
        SingularCovarianceError: If a class covariance is not positive definite.

    """
    if ridge < 0.0:
        msg = f"ridge must be nonnegative, got {ridge}"
        raise ConfigError(msg)
    labeled = train.labeled()
    ranks = labeled.class_ranks()
    present = [label for label in CLASSES if np.any(ranks == label.rank)]
    if len(present) < 2:  # noqa: PLR2004
        msg = f"fitting needs at least two classes, got {[str(label) for label in present]}"
        raise DegenerateDataError(msg)

    components: list[ClassGaussian] = []
    for label in present:
        rows = labeled.points[ranks == label.rank]
        if rows.shape[0] < MIN_CLASS_ROWS:
            msg = f"class {label} has {rows.shape[0]} rows, at least {MIN_CLASS_ROWS} are needed"
            raise DegenerateDataError(msg)
        covariance = np.cov(rows, rowvar=False) + ridge * np.eye(2)
        try:
            np.linalg.cholesky(covariance)
        except np.linalg.LinAlgError:
            msg = f"covariance of class {label} is singular; retry with a positive ridge"
            raise SingularCovarianceError(msg) from None
        components.append(ClassGaussian(label, rows.shape[0] / labeled.size, rows.mean(axis=0), covariance))
    logger.debug("Fitted QDA on %s rows: %s", labeled.size, ", ".join(f"{c.label}={c.prior:.3f}" for c in components))
    return QdaModel(tuple(components), ridge, train.metric)


@dataclass(frozen=True)
class QdaPrediction:
    """Predicted class and posterior membership probabilities."""

    label: SourceClass
    posteriors: dict[SourceClass, float]

    @property
    def percentages(self) -> dict[SourceClass, float]:
        """Posteriors in percent."""
        return {label: 100.0 * value for label, value in self.posteriors.items()}


def predict_qda(model: QdaModel, point: Sequence[float] | FloatArray) -> QdaPrediction:
    """Classify one point.

    Raises:
        InputError: If the point is not a finite pair.

    """
    array = np.asarray(point, dtype=np.float64)
    if array.shape != (2,) or not np.all(np.isfinite(array)):
        msg = f"expected a finite feature pair, got {point!r}"
        raise InputError(msg)
    posterior = model.posteriors(array)[0]
    return QdaPrediction(
        label=model.classes[int(np.argmax(posterior))],
        posteriors={label: float(value) for label, value in zip(model.classes, posterior, strict=True)},
    )


@dataclass(frozen=True)
class QdaClassifier:
    """QDA settings."""

    ridge: float = 0.0

    def fit(self, train: FeatureMatrix) -> QdaModel:
        """Fit a QDA model."""
        return fit_qda(train, self.ridge)


def _neighbor_order(train: FloatArray, queries: FloatArray) -> tuple[IntArray, FloatArray]:
    """Training rows sorted by Euclidean distance to each query, with the sorted distances."""
    distances = np.linalg.norm(queries[:, None, :] - train[None, :, :], axis=2)
    order = np.argsort(distances, axis=1, kind="stable")
    return order, np.take_along_axis(distances, order, axis=1)


def _vote(ranks: IntArray, distances: FloatArray) -> int:
    """Majority class among neighbours; ties go to the smaller mean distance, then NM < HO < LO."""
    counts = np.bincount(ranks, minlength=len(CLASSES))
    tied = np.flatnonzero(counts == counts.max())
    if tied.size == 1:
        return int(tied[0])
    mean_distance = [float(np.mean(distances[ranks == rank])) for rank in tied]
    return int(tied[int(np.argmin(mean_distance))])


def _knn_votes(train_ranks: IntArray, order: IntArray, distances: FloatArray, k: int) -> IntArray:
    neighbours = train_ranks[order[:, :k]]
    return np.array([_vote(row, dist[:k]) for row, dist in zip(neighbours, distances, strict=True)], dtype=np.intp)


def _check_k(k: int, rows: int) -> None:
    if rows == 0:
        msg = "k-NN needs a nonempty training set"
        raise EmptySampleError(msg)
    if not 1 <= k <= rows:
        msg = f"k must lie in [1, {rows}], got {k}"
        raise ConfigError(msg)


@dataclass(frozen=True)
class KnnModel:
    """k-NN rule stored with its training data."""

    train: FeatureMatrix
    k: int

    @property
    def metric(self) -> Metric:
        """The distance the training features were built from."""
        return self.train.metric

    def predict(self, points: FloatArray) -> IntArray:
        """Class ranks voted for `points`."""
        order, distances = _neighbor_order(self.train.points, np.atleast_2d(points))
        return _knn_votes(self.train.class_ranks(), order, distances, self.k)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready representation, including the training rows."""
        return {
            "kind": "knn",
            "k": self.k,
            "metric": str(self.train.metric),
            "source_ids": list(self.train.source_ids),
            "points": self.train.points.tolist(),
            "labels": [str(label) for label in self.train.labels],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> KnnModel:
        """Rebuild a model written by `to_dict`."""
        try:
            train = FeatureMatrix(
                np.asarray(data["points"], dtype=np.float64),
                tuple(SourceClass.parse(label) for label in data["labels"]),
                tuple(str(item) for item in data["source_ids"]),
                Metric(data["metric"]),
            )
            return cls(train, int(data["k"]))
        except (KeyError, TypeError, ValueError) as error:
            msg = f"malformed k-NN model: {error}"
            raise InputError(msg) from error


def knn_predict(train: FeatureMatrix, k: int, point: Sequence[float] | FloatArray) -> SourceClass:
    """Majority vote among the k training rows nearest to `point`.

    Raises:
        EmptySampleError: If the training set is empty.
        ConfigError: If k is not in [1, rows].

    """
    if train.size == 0:
        msg = "k-NN needs a nonempty training set"
        raise EmptySampleError(msg)
    model = KnnClassifier(k).fit(train)
    return CLASSES[int(model.predict(np.asarray(point, dtype=np.float64))[0])]


@dataclass(frozen=True)
class KnnClassifier:
    """k-NN settings."""

    k: int = 5

    def fit(self, train: FeatureMatrix) -> KnnModel:
        """Store the labeled training rows."""
        labeled = train.labeled()
        _check_k(self.k, labeled.size)
        return KnnModel(labeled, self.k)


def fold_splits(matrix: FeatureMatrix, scheme: Scheme, seed: int) -> list[tuple[IntArray, IntArray]]:
    """(train, test) row indices of every fold; stratified and shuffled with `seed` for k-fold schemes.

    Raises:
        ConfigError: If a class has fewer rows than folds, or for resubstitution.

    """
    ranks = matrix.class_ranks()
    placeholder = np.zeros((matrix.size, 1))
    if scheme is Scheme.LOO:
        return list(LeaveOneOut().split(placeholder))
    folds = scheme.folds
    if folds is None:
        msg = "resubstitution has no folds"
        raise ConfigError(msg)
    counts = np.bincount(ranks, minlength=len(CLASSES))
    for label, count in zip(CLASSES, counts, strict=True):
        if 0 < count < folds:
            msg = f"class {label} has {count} rows, fewer than the {folds} folds of {scheme}"
            raise ConfigError(msg)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return list(splitter.split(placeholder, ranks))


def _fold_predictions(split: tuple[IntArray, IntArray], *, classifier: Classifier, matrix: FeatureMatrix) -> IntArray:
    train, test = split
    return classifier.fit(matrix.take(train)).predict(matrix.points[test])


def cross_predict(
    classifier: Classifier,
    matrix: FeatureMatrix,
    scheme: Scheme,
    seed: int = 0,
    *,
    workers: int = 1,
) -> IntArray:
    """Predicted class rank of every labeled row, by resubstitution or from the fold that holds it out."""
    labeled = matrix.labeled()
    if scheme is Scheme.RESUBSTITUTION:
        return classifier.fit(labeled).predict(labeled.points)
    splits = fold_splits(labeled, scheme, seed)
    predictions = np.empty(labeled.size, dtype=np.intp)
    task = partial(_fold_predictions, classifier=classifier, matrix=labeled)
    for (_, test), fold in zip(splits, map_tasks(task, splits, workers=workers), strict=True):
        predictions[test] = fold
    return predictions


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts of predicted (rows) against actual (columns) classes, in NM, HO, LO order."""

    counts: npt.NDArray[np.int64]

    @classmethod
    def from_ranks(cls, actual: IntArray, predicted: IntArray) -> ConfusionMatrix:
        """Tabulate predictions against the truth."""
        labels = list(range(len(CLASSES)))
        return cls(confusion_matrix(actual, predicted, labels=labels).T.astype(np.int64))

    @property
    def total(self) -> int:
        """Number of classified rows."""
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        """Share of correct classifications."""
        return float(np.trace(self.counts) / self.total) if self.total else math.nan

    @property
    def ppv(self) -> dict[SourceClass, float]:
        """Positive predictive value per class (NaN when the class is never predicted)."""
        predicted = self.counts.sum(axis=1)
        return {
            label: float(self.counts[i, i] / predicted[i]) if predicted[i] else math.nan
            for i, label in enumerate(CLASSES)
        }

    def to_frame(self) -> pd.DataFrame:
        """Counts as a table with a `predicted` column and one column per actual class."""
        frame = pd.DataFrame(self.counts, columns=[str(label) for label in CLASSES])
        frame.insert(0, "predicted", [str(label) for label in CLASSES])
        return frame

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready report."""
        return {
            "classes": [str(label) for label in CLASSES],
            "counts": self.counts.tolist(),
            "accuracy": self.accuracy,
            "ppv": {str(label): None if math.isnan(value) else value for label, value in self.ppv.items()},
        }


def evaluate(
    classifier: Classifier,
    matrix: FeatureMatrix,
    scheme: Scheme = Scheme.RESUBSTITUTION,
    seed: int = 0,
    *,
    workers: int = 1,
) -> ConfusionMatrix:
    """Confusion matrix of `classifier` on the labeled rows of `matrix` under `scheme`."""
    labeled = matrix.labeled()
    predictions = cross_predict(classifier, labeled, scheme, seed, workers=workers)
    result = ConfusionMatrix.from_ranks(labeled.class_ranks(), predictions)
    logger.info("✓ %s accuracy under %s: %.2f%%", type(classifier).__name__, scheme, 100.0 * result.accuracy)
    return result


@dataclass(frozen=True)
class KSelection:
    """Accuracy of every candidate k and the chosen one."""

    k: int
    accuracy: dict[int, float]
    scheme: Scheme

    def to_frame(self) -> pd.DataFrame:
        """Table with columns k and accuracy."""
        return pd.DataFrame({"k": list(self.accuracy), "accuracy": list(self.accuracy.values())})


def select_k(
    train: FeatureMatrix,
    k_grid: Iterable[int] = DEFAULT_K_GRID,
    scheme: Scheme = Scheme.CV10,
    seed: int = 0,
) -> KSelection:
    """Cross-validated accuracy of k-NN for every k in `k_grid`; the best k wins, ties to the smallest.

    Neighbours are sorted once per fold and reused for every k.

    Raises:
        ConfigError: For an empty grid, resubstitution, or a k larger than a training fold.

    """
    if scheme is Scheme.RESUBSTITUTION:
        msg = "choosing k needs a cross-validation scheme"
        raise ConfigError(msg)
    candidates = sorted(set(k_grid))
    if not candidates:
        msg = "k grid is empty"
        raise ConfigError(msg)
    labeled = train.labeled()
    ranks = labeled.class_ranks()
    correct = dict.fromkeys(candidates, 0)
    for train_rows, test_rows in fold_splits(labeled, scheme, seed):
        _check_k(candidates[-1], train_rows.size)
        order, distances = _neighbor_order(labeled.points[train_rows], labeled.points[test_rows])
        for k in candidates:
            votes = _knn_votes(ranks[train_rows], order, distances, k)
            correct[k] += int(np.sum(votes == ranks[test_rows]))
    accuracy = {k: count / labeled.size for k, count in correct.items()}
    best = max(candidates, key=lambda k: (accuracy[k], -k))
    logger.info("✓ Selected k = %s under %s (accuracy %.4f)", best, scheme, accuracy[best])
    return KSelection(best, accuracy, scheme)


def _check_model_metric(model: QdaModel | KnnModel, matrix: FeatureMatrix) -> None:
    if model.metric is not matrix.metric:
        msg = f"model was fitted on {model.metric} features, got {matrix.metric}"
        raise ConfigError(msg)


def prediction_table(model: QdaModel | KnnModel, matrix: FeatureMatrix) -> pd.DataFrame:
    """Class predicted for every row by a fitted model, next to the known label (empty if unknown).

    Raises:
        ConfigError: If the model was fitted on another distance than `matrix`.

    """
    _check_model_metric(model, matrix)
    predicted = model.predict(matrix.points)
    return pd.DataFrame(
        {
            "source_id": list(matrix.source_ids),
            "label": [str(label) if label is not None else "" for label in matrix.labels],
            "predicted": [str(CLASSES[int(rank)]) for rank in predicted],
        }
    )


def score_model(model: QdaModel | KnnModel, matrix: FeatureMatrix) -> ConfusionMatrix:
    """Confusion matrix of a fitted model on the labeled rows of `matrix`, without refitting.

    Raises:
        ConfigError: If the model was fitted on another distance than `matrix`.
        EmptySampleError: If no row is labeled.

    """
    _check_model_metric(model, matrix)
    labeled = matrix.labeled()
    return ConfusionMatrix.from_ranks(labeled.class_ranks(), model.predict(labeled.points))


def posterior_table(model: QdaModel, matrix: FeatureMatrix, *, misclassified_only: bool = False) -> pd.DataFrame:
    """Posterior membership percentages of every row.

    With `misclassified_only`, only labeled rows whose predicted class differs from their label remain.
    """
    percent = 100.0 * model.posteriors(matrix.points)
    predicted = [model.classes[int(i)] for i in np.argmax(percent, axis=1)]
    frame = pd.DataFrame(
        {
            "source_id": list(matrix.source_ids),
            "label": [str(label) if label is not None else "" for label in matrix.labels],
            "predicted": [str(label) for label in predicted],
        }
    )
    for label in CLASSES:
        column = model.classes.index(label) if label in model.classes else None
        frame[str(label)] = percent[:, column] if column is not None else 0.0
    if misclassified_only:
        keep = [label is not None and label != guess for label, guess in zip(matrix.labels, predicted, strict=True)]
        frame = frame[keep].reset_index(drop=True)
    return frame


def _classes_with_rows(features: Sequence[SourceFeatures]) -> Iterator[tuple[SourceClass, list[SourceFeatures]]]:
    for label in CLASSES:
        members = [item for item in features if item.label is label]
        if members:
            yield label, members


def class_distance_summary(features: Sequence[SourceFeatures], metric: Metric) -> pd.DataFrame:
    """Per-class boxplot statistics of the log distance, listing the ids of outlying sources."""
    rows: list[dict[str, Any]] = []
    for label, members in _classes_with_rows(features):
        values = np.log(np.array([item.distance(metric) for item in members], dtype=np.float64))
        box = boxplot_stats(values, f"{label}/{metric}")
        outliers = [item.source_id for item, out in zip(members, box.outlier_mask(values), strict=True) if out]
        rows.append(
            {
                "label": str(label),
                "count": len(members),
                "q1": box.q1,
                "median": box.median,
                "q3": box.q3,
                "whisker_lo": box.whisker_lo,
                "whisker_hi": box.whisker_hi,
                "n_outliers": box.n_outliers,
                "outliers": " ".join(outliers),
            }
        )
    return pd.DataFrame(rows)


def class_null_comparison(features: Sequence[SourceFeatures], metric: Metric, null_draws: FloatArray) -> pd.DataFrame:
    """Two-sample KS comparison of each class's sqrt(n) * d(F_n, G_mu_hat) with draws of the null law."""
    rows: list[dict[str, Any]] = []
    for label, members in _classes_with_rows(features):
        scaled = np.array([item.scaled_statistic(metric) for item in members], dtype=np.float64)
        result = stats.ks_2samp(scaled, null_draws)
        rows.append(
            {
                "label": str(label),
                "count": len(members),
                "median_statistic": float(np.median(scaled)),
                "ks_statistic": float(result.statistic),
                "p_value": float(result.pvalue),
            }
        )
    return pd.DataFrame(rows)


def save_model(model: QdaModel | KnnModel, path: str | Path) -> None:
    """Write a fitted model as JSON."""
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf8")


def load_model(path: str | Path) -> QdaModel | KnnModel:
    """Read a model written by `save_model`.

    Raises:
        InputError: If the file is not a model of a known kind.

    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf8"))
    except json.JSONDecodeError as error:
        msg = f"{path} is not valid JSON: {error}"
        raise InputError(msg, line=error.lineno) from error
    match data.get("kind") if isinstance(data, dict) else None:
        case "qda":
            return QdaModel.from_dict(data)
        case "knn":
            return KnnModel.from_dict(data)
        case kind:
            msg = f"unknown model kind {kind!r} in {path}"
            raise InputError(msg)
