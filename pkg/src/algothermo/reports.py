"""Deterministic report emission: CSV and JSON with provenance headers.

Reports never embed timestamps or environment noise, so identical
(parameters, seed, version) runs produce identical bytes.  Writes go
through a same-directory temp file and an atomic rename; a crashed run
leaves either the old report or none.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from fractions import Fraction
from importlib import metadata
from typing import Any, Mapping, Sequence

from .numeric import DyadicInterval, decimal_bounds

try:
    TOOL_VERSION = metadata.version("algothermo")
except metadata.PackageNotFoundError:  # running from a source tree
    TOOL_VERSION = "0.1.0"


def meta_header(
    command: str,
    machine: str,
    machine_hash: str,
    precision: int | None = None,
    seed: int | None = None,
    **params: Any,
) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "tool": "algothermo",
        "version": TOOL_VERSION,
        "command": command,
        "machine": machine,
        "machine_hash": machine_hash,
    }
    if precision is not None:
        meta["precision"] = precision
    if seed is not None:
        meta["seed"] = seed
    for k in sorted(params):
        if params[k] is not None:
            meta[k] = params[k]
    return meta


def interval_fields(iv: DyadicInterval | None) -> tuple[str, str]:
    if iv is None:
        return "", ""
    return decimal_bounds(iv)


def render_value(v: Any) -> Any:
    """JSON-safe rendering that keeps exactness where it exists."""
    if isinstance(v, DyadicInterval):
        lo, hi = decimal_bounds(v)
        return {"lo": lo, "hi": hi}
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    if isinstance(v, dict):
        return {str(k): render_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [render_value(x) for x in v]
    return v


def atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json(path: str, payload: Mapping[str, Any]) -> None:
    text = json.dumps(render_value(dict(payload)), indent=2)
    atomic_write(path, (text + "\n").encode())


def csv_text(
    meta: Mapping[str, Any], fieldnames: Sequence[str], rows: Sequence[Mapping[str, Any]]
) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in fieldnames})
    return buf.getvalue()


def write_csv(
    path: str,
    meta: Mapping[str, Any],
    fieldnames: Sequence[str],
    rows: Sequence[Mapping[str, Any]],
) -> None:
    atomic_write(path, csv_text(meta, fieldnames, rows).encode())
