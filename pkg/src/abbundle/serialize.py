"""JSON/CSV helpers shared by the file formats.

Complex numbers are ``[re, im]`` pairs; matrices are nested row lists of
such pairs.  Every JSON document carries ``schema_version``.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable

import numpy as np

SCHEMA_VERSION = 1


class FormatError(ValueError):
    pass


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(pair) -> complex:
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise FormatError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m)
    return [[complex_to_json(v) for v in row] for row in m]


def matrix_from_json(rows) -> np.ndarray:
    try:
        return np.array([[complex_from_json(v) for v in row] for row in rows], dtype=np.complex128)
    except TypeError as exc:
        raise FormatError(f"bad matrix encoding: {exc}") from exc


def dumps(doc: dict) -> str:
    """Canonical JSON text (sorted keys, fixed separators) for byte-stable files."""
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def require_version(doc: dict, kind: str | None = None) -> None:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {doc.get('schema_version')!r}")
    if kind is not None and doc.get("kind") != kind:
        raise FormatError(f"expected a {kind!r} document, got {doc.get('kind')!r}")


def read_points_csv(path) -> np.ndarray:
    """``x,y`` per line; blank lines and ``#`` comments skipped."""
    rows = []
    try:
        with open(path, newline="") as fh:
            for line in csv.reader(fh):
                if not line or line[0].lstrip().startswith("#"):
                    continue
                if len(line) != 2:
                    raise FormatError(f"{path}: expected 2 columns, got {len(line)}")
                rows.append((float(line[0]), float(line[1])))
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if len(rows) < 2:
        raise FormatError(f"{path}: need at least 2 points")
    return np.asarray(rows)


def write_points_csv(fh, points: Iterable) -> None:
    w = csv.writer(fh, lineterminator="\n")
    for x, y in points:
        w.writerow([repr(float(x)), repr(float(y))])


def section_to_csv(points: np.ndarray, values: np.ndarray) -> str:
    """Rows ``x, y, Re z1, Im z1, ...``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for p, v in zip(points, values):
        row = [repr(float(p[0])), repr(float(p[1]))]
        for z in np.atleast_1d(v):
            row += [repr(float(z.real)), repr(float(z.imag))]
        w.writerow(row)
    return buf.getvalue()


def section_from_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    pts, vals = [], []
    for row in csv.reader(io.StringIO(text)):
        if not row:
            continue
        if len(row) < 4 or len(row) % 2:
            raise FormatError(f"bad section row {row!r}")
        nums = [float(x) for x in row]
        pts.append(nums[:2])
        vals.append([complex(a, b) for a, b in zip(nums[2::2], nums[3::2])])
    return np.asarray(pts), np.asarray(vals, dtype=np.complex128)
