"""Distances to the exponential class for photon interarrival times, with limit laws, tests and classifiers."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("expo-distance")
except PackageNotFoundError:
    __version__ = "0.0.0"
