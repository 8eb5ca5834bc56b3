"""Types, errors and seeding helpers shared by all modules of this package."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Iterable

    import numpy.typing as npt

type FloatArray = npt.NDArray[np.float64]


class ExpoDistanceError(Exception):
    """Base class of all errors raised by this package."""

    exit_code = 1


class InputError(ExpoDistanceError):
    """Raised when an input file cannot be parsed.

    Args:
        message (str): What went wrong.
        line (int | None): The 1-based line number of the offending row, if known.

    """

    exit_code = 2

    def __init__(self, message: str, line: int | None = None) -> None:
        """Attach the offending line number to the message."""
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class EmptySampleError(ExpoDistanceError):
    """Raised when no observations are left to work with."""

    exit_code = 3


class DegenerateDataError(ExpoDistanceError):
    """Raised when the data does not allow the requested computation."""

    exit_code = 3


class QuadratureError(DegenerateDataError):
    """Raised when a discretized integral produces an impossible value."""


class SingularCovarianceError(DegenerateDataError):
    """Raised when a class covariance matrix is not positive definite."""


class ConfigError(ExpoDistanceError, ValueError):
    """Raised for invalid parameters or flag combinations."""

    exit_code = 4


class InvalidParameterError(ConfigError):
    """Raised when a distribution parameter is out of range."""


class DimensionError(ConfigError):
    """Raised when discretized objects do not live on the same grid."""


class Metric(StrEnum):
    """Probability metrics to the exponential class, named by their column keys."""

    KOLMOGOROV = "kappa"
    WASSERSTEIN = "w"
    ZOLOTAREV2 = "z2"
    NORM_WASSERSTEIN = "nw"
    NORM_ZOLOTAREV2 = "nz2"

    @property
    def is_normalized(self) -> bool:
        """Whether the metric is homogeneous of degree 0."""
        return self in {Metric.NORM_WASSERSTEIN, Metric.NORM_ZOLOTAREV2}


class SourceClass(StrEnum):
    """Classes of X-ray sources, in the fixed order used for tie-breaking."""

    NM = "NM"
    HO = "HO"
    LO = "LO"

    @classmethod
    def parse(cls, text: str) -> SourceClass:
        """Parse a class label, accepting the short codes and the long class names.

        Raises:
            InputError: If the label is not recognised.

        """
        aliases = {
            "nm": cls.NM,
            "extragalactic": cls.NM,
            "ho": cls.HO,
            "heavilyobscured": cls.HO,
            "heavily-obscured": cls.HO,
            "lo": cls.LO,
            "lightlyobscured": cls.LO,
            "lightly-obscured": cls.LO,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            msg = f"unknown source class {text!r}"
            raise InputError(msg) from None

    @property
    def rank(self) -> int:
        """Position of the class in the tie-breaking order NM < HO < LO."""
        return list(SourceClass).index(self)


@dataclass(frozen=True)
class PitSample:
    """A sorted sample of positive interarrival times.

    Build instances with `PitSample.from_values`, which sorts and validates.

    Args:
        values (FloatArray): Order statistics X(1) <= ... <= X(n), read-only.

    """

    values: FloatArray

    @classmethod
    def from_values(cls, values: Iterable[float] | FloatArray) -> PitSample:
        """Sort and validate raw values into a sample.

        Raises:
            EmptySampleError: If no values are given.
            InputError: If any value is non-finite or not strictly positive.

        """
        array = np.sort(np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64))
        if array.ndim != 1:
            msg = f"expected a one-dimensional sample, got shape {array.shape}"
            raise InputError(msg)
        if array.size == 0:
            msg = "sample is empty"
            raise EmptySampleError(msg)
        if not np.all(np.isfinite(array)) or array[0] <= 0.0:
            msg = "sample values must be finite and strictly positive"
            raise InputError(msg)
        array.flags.writeable = False
        return cls(array)

    @property
    def n(self) -> int:
        """Sample size."""
        return int(self.values.size)

    @cached_property
    def mean_hat(self) -> float:
        """Arithmetic mean of the sample."""
        return float(np.mean(self.values))

    @cached_property
    def a2(self) -> float:
        """Second sample moment, sum of squares over n."""
        return float(np.mean(self.values**2))

    @property
    def first(self) -> float:
        """Smallest order statistic."""
        return float(self.values[0])

    @property
    def last(self) -> float:
        """Largest order statistic."""
        return float(self.values[-1])

    def ecdf(self, t: FloatArray) -> FloatArray:
        """Evaluate the right-continuous empirical distribution function at `t`."""
        return np.searchsorted(self.values, t, side="right") / self.n

    def scaled(self, factor: float) -> PitSample:
        """Return the sample multiplied by a positive constant."""
        return PitSample.from_values(self.values * factor)


def stable_key(value: str | int) -> int:
    """Map a seed key to a non-negative integer that does not change between runs."""
    if isinstance(value, int):
        return value
    return zlib.crc32(value.encode("utf8"))


def replicate_rng(seed: int, *keys: str | int) -> np.random.Generator:
    """Create an independent random stream for one replicate.

    The stream depends only on the seed and the keys, never on execution order,
    so parallel and serial runs draw identical numbers.

    Args:
        seed (int): The user-facing seed.
        *keys (str | int): Replicate coordinates, e.g. a cell name and a replicate index.

    Returns:
        np.random.Generator: A fresh generator.

    """
    return np.random.default_rng(np.random.SeedSequence([seed, *(stable_key(key) for key in keys)]))
