"""Output writers that prefix every artifact with the run metadata.

CSV files start with one comment line `# {json}` holding the metadata, followed by a
plain header and rows. JSON files carry the metadata under the `"metadata"` key.
Nothing time-dependent goes into the metadata, so reruns with the same inputs and seed
produce byte-identical files.
"""

from __future__ import annotations

import io
import json
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any

import pandas as pd

from expo_distance import __version__
from expo_distance.common import InputError

if TYPE_CHECKING:
    from collections.abc import Mapping

logger = logging.getLogger(__name__)

TOOL_NAME = "expo-distance"
METADATA_PREFIX = "# "


def run_metadata(command: str, seed: int | None, config: Mapping[str, Any]) -> dict[str, Any]:
    """Version, command, seed and resolved configuration of a run."""
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": dict(config),
    }


def _emit(text: str, dest: str | Path | None) -> None:
    if dest is None:
        sys.stdout.write(text)
        return
    path = Path(dest)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf8")
    logger.info("✓ Wrote %s", path)


def format_csv(frame: pd.DataFrame, metadata: Mapping[str, Any]) -> str:
    """Render a table with its metadata line."""
    buffer = io.StringIO()
    buffer.write(METADATA_PREFIX + json.dumps(metadata, sort_keys=True) + "\n")
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_csv(frame: pd.DataFrame, dest: str | Path | None, metadata: Mapping[str, Any]) -> None:
    """Write a table to `dest`, or to stdout when `dest` is None."""
    _emit(format_csv(frame, metadata), dest)


def write_json(payload: Mapping[str, Any], dest: str | Path | None, metadata: Mapping[str, Any]) -> None:
    """Write a JSON document with the metadata under `"metadata"`."""
    document = {"metadata": dict(metadata), **payload}
    _emit(json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + "\n", dest)


def read_csv(source: str | Path) -> tuple[dict[str, Any], pd.DataFrame]:
    """Read a CSV written by `write_csv`; a file without metadata line yields empty metadata.

    Raises:
        InputError: If the metadata line is not valid JSON.

    """
    path = Path(source)
    with path.open(encoding="utf8") as handle:
        first = handle.readline()
    metadata: dict[str, Any] = {}
    skip = 0
    if first.startswith(METADATA_PREFIX):
        try:
            metadata = json.loads(first.removeprefix(METADATA_PREFIX))
        except json.JSONDecodeError as error:
            msg = f"metadata line of {path} is not JSON: {error}"
            raise InputError(msg, line=1) from error
        skip = 1
    return metadata, pd.read_csv(path, skiprows=skip)


def strip_metadata(source: str | Path) -> io.StringIO:
    """The CSV body of `source` without its metadata line, for readers that expect a bare header."""
    text = Path(source).read_text(encoding="utf8")
    if text.startswith(METADATA_PREFIX):
        text = text.split("\n", 1)[1] if "\n" in text else ""
    return io.StringIO(text)
