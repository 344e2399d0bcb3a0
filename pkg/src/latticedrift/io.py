"""Bit-stable tabular output: CSV and newline-delimited JSON."""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float):
        return repr(v)  # shortest round-trip representation
    return str(v)


def _csv_escape(s: str) -> str:
    if any(c in s for c in (",", '"', "\n", "\r")):
        return '"' + s.replace('"', '""') + '"'
    return s


def emit_table(
    path: str,
    header: Sequence[str],
    rows: Iterable[Sequence],
    fmt: str = "csv",
) -> str:
    """Write homogeneous records; returns the path.

    CSV uses RFC-4180-style quoting, '.' decimals and full round-trip
    precision for reals; ndjson writes one object per line. Files end with
    a newline either way.
    """
    if fmt not in ("csv", "ndjson"):
        raise ValueError(f"unknown table format {fmt!r}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if fmt == "csv":
            fh.write(",".join(_csv_escape(str(h)) for h in header) + "\n")
            for row in rows:
                fh.write(",".join(_csv_escape(_format_value(v)) for v in row) + "\n")
        else:
            for row in rows:
                obj = {
                    k: (v.item() if hasattr(v, "item") else v)
                    for k, v in zip(header, row)
                }
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    return path


def write_json(path: str, payload: dict) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
