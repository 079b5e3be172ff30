"""CSV/JSON readers and writers.

Floats are written with ``repr`` (shortest string that round-trips).
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from ._util import jsonable
from .embedder import DistanceMatrix, EmbeddingResult
from .errors import InsufficientDataError, MatrixFormatError


def fmt(x: float) -> str:
    return repr(float(x))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_points_csv(path: str | Path) -> list:
    """One point per row; a non-numeric first row is treated as a header.

    Single-column files give scalar points, wider files 1-D arrays.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise InsufficientDataError(f"{path}: no points")
    width = len(rows[0])
    pts = []
    for lineno, r in enumerate(rows, 1):
        if len(r) != width:
            raise ValueError(f"{path}: row {lineno} has {len(r)} columns, expected {width}")
        vals = [float(c) for c in r]
        pts.append(vals[0] if width == 1 else np.array(vals))
    return pts


def write_points_csv(path: str | Path, points) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for p in points:
            w.writerow([fmt(v) for v in np.ravel(p)])


def read_matrix_csv(path: str | Path) -> DistanceMatrix:
    """Square matrix with a header row of labels."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise MatrixFormatError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if all(_is_number(c) for c in header):
        header, body = [], rows
    try:
        E = np.array([[float(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None
    if E.ndim != 2 or (header and len(header) != E.shape[0]):
        raise MatrixFormatError(f"{path}: rows and header do not describe a square matrix")
    return DistanceMatrix(E, header)


def write_matrix_csv(path: str | Path, D: DistanceMatrix) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(D.labels)
        for row in D.entries:
            w.writerow([fmt(v) for v in row])


def write_coordinates_csv(path: str | Path, result: EmbeddingResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"x{k + 1}" for k in range(result.coordinates.shape[1])])
        for lab, row in zip(result.labels, result.coordinates):
            w.writerow([lab] + [fmt(v) for v in row])


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path: str | Path) -> Any:
    with open(path) as fh:
        return json.load(fh)
