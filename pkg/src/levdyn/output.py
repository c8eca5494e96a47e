"""Bit-stable CSV and JSON emission with provenance headers.

CSV files open with '#'-prefixed provenance lines (tool version, config
hash, seed, timestamp) followed by a header row; floats are serialized
with 17 significant digits so every value round-trips exactly.  JSON
reports carry the same provenance (minus the timestamp) as an embedded
object, keeping the file valid JSON and byte-identical across reruns.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Any, Iterable, Sequence, TextIO

from . import __version__


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def provenance_lines(
    config_sha256: str, seed: int | None, timestamp: bool = True
) -> list[str]:
    lines = [
        f"# levdyn_version: {__version__}",
        f"# config_sha256: {config_sha256}",
        f"# seed: {'none' if seed is None else seed}",
    ]
    if timestamp:
        lines.append(
            f"# timestamp: {datetime.now(timezone.utc).isoformat(timespec='seconds')}"
        )
    return lines


def write_csv(
    stream: TextIO,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config_sha256: str,
    seed: int | None,
) -> None:
    for line in provenance_lines(config_sha256, seed):
        stream.write(line + "\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(format_value(v) for v in row) + "\n")


def read_csv(stream: TextIO) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Parse a file produced by write_csv.

    Returns (provenance, columns, rows) with cells kept as strings; the
    17-digit float serialization guarantees float(cell) recovers the
    exact written value.
    """
    provenance: dict[str, str] = {}
    columns: list[str] | None = None
    rows: list[list[str]] = []
    for raw in stream:
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                provenance[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = line.split(",")
        else:
            rows.append(line.split(","))
    return provenance, columns or [], rows


def write_json(
    stream: TextIO,
    payload: dict[str, Any],
    config_sha256: str,
    seed: int | None,
) -> None:
    document = dict(payload)
    document["provenance"] = {
        "levdyn_version": __version__,
        "config_sha256": config_sha256,
        "seed": seed,
    }
    json.dump(document, stream, sort_keys=True, indent=2)
    stream.write("\n")
