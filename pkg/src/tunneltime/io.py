"""Delimited-text and JSON writers with round-trip float formatting."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(x) -> str:
    """17 significant digits; enough to round-trip any IEEE-754 double."""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_table(path, header: Sequence[str], rows: Iterable, comments: Sequence[str] = ()) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_table(path):
    """Parse a table written by :func:`write_table`.

    Returns ``(comments, header, columns)`` with ``columns`` a dict of lists
    keyed by header name; numeric cells come back as floats.
    """
    comments, header, data = [], None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif header is None:
            header = line.split(",")
        elif line:
            data.append([_maybe_float(v) for v in line.split(",")])
    columns = {name: [row[i] for row in data] for i, name in enumerate(header or [])}
    return comments, header, columns


def _maybe_float(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Table:
    """Small column-oriented result table."""

    def __init__(self, header: Sequence[str], rows: Iterable[Sequence]):
        self.header = list(header)
        self.rows = [list(r) for r in rows]

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def write_csv(self, path, comments: Sequence[str] = ()) -> None:
        write_table(path, self.header, self.rows, comments)

    def to_json_dict(self) -> dict:
        return {name: self.column(name) for name in self.header}
