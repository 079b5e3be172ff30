"""Finite Hilbert embeddings by double centering.

A finite distance matrix D is Euclidean-embeddable exactly when the
double-centered matrix ``G = -1/2 J (D*D) J`` (``J = I - 11^T/n``) is positive
semidefinite; the scaled eigenvectors of G are then explicit coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._util import jsonable
from .errors import DimensionError, EvaluationError, InsufficientDataError, MatrixFormatError
from .linalg import eigenpair_residuals

EMBEDDABLE = "embeddable"
NOT_EMBEDDABLE = "not-embeddable"

DEFAULT_TOL_REL = 1e-9
SYMMETRY_RTOL = 1e-9


@dataclass
class DistanceMatrix:
    entries: np.ndarray
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        E = np.array(self.entries, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise MatrixFormatError(f"distance matrix must be square, got shape {E.shape}")
        if not np.all(np.isfinite(E)):
            raise MatrixFormatError("distance matrix has non-finite entries")
        if np.any(np.diag(E) != 0):
            raise MatrixFormatError("distance matrix must have a zero diagonal")
        if np.any(E < 0):
            raise MatrixFormatError("distance matrix has negative entries")
        scale = max(float(np.max(np.abs(E), initial=0.0)), 1e-300)
        if np.max(np.abs(E - E.T), initial=0.0) > SYMMETRY_RTOL * scale:
            raise MatrixFormatError("distance matrix is not symmetric")
        self.entries = (E + E.T) / 2.0
        if not self.labels:
            self.labels = [f"p{i}" for i in range(E.shape[0])]
        elif len(self.labels) != E.shape[0]:
            raise DimensionError(f"{len(self.labels)} labels for a {E.shape[0]}x{E.shape[0]} matrix")
        self.labels = [str(lab) for lab in self.labels]

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> dict:
        return {"labels": self.labels, "entries": jsonable(self.entries)}

    @classmethod
    def from_json(cls, obj: dict) -> DistanceMatrix:
        return cls(np.asarray(obj["entries"], dtype=float), list(obj.get("labels") or []))


@dataclass
class EmbeddingResult:
    coordinates: np.ndarray
    gram_eigenvalues: np.ndarray
    min_eigenvalue: float
    residual: float
    verdict: str
    rank: int
    labels: list[str]
    eigen_residual: float
    tol_rel: float

    @property
    def embeddable(self) -> bool:
        return self.verdict == EMBEDDABLE

    def to_json(self) -> dict:
        return jsonable({
            "verdict": self.verdict,
            "eigenvalues": self.gram_eigenvalues,
            "min_eigenvalue": self.min_eigenvalue,
            "residual": self.residual,
            "rank": self.rank,
            "labels": self.labels,
            "coordinates": self.coordinates,
            "eigen_residual": self.eigen_residual,
            "tol_rel": self.tol_rel,
        })


def distance_matrix(metric, points: Sequence[Any], labels: Sequence[str] | None = None) -> DistanceMatrix:
    """Evaluate ``metric`` once per unordered pair of ``points``."""
    n = len(points)
    if n < 2:
        raise InsufficientDataError("a distance matrix needs at least 2 points")
    E = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            try:
                E[i, j] = E[j, i] = metric(points[i], points[j])
            except EvaluationError as exc:
                raise EvaluationError(f"entry ({i}, {j}): {exc}", i=i, j=j, **exc.context) from exc
    return DistanceMatrix(E, list(labels) if labels is not None else [])


def double_center(D: np.ndarray) -> np.ndarray:
    n = D.shape[0]
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    G = -0.5 * J @ (D * D) @ J
    return (G + G.T) / 2.0


def schoenberg_embed(D: DistanceMatrix, tol_rel: float = DEFAULT_TOL_REL) -> EmbeddingResult:
    if not isinstance(D, DistanceMatrix):
        D = DistanceMatrix(np.asarray(D, dtype=float))
    if D.n < 2:
        raise InsufficientDataError("embedding needs at least 2 points")
    G = double_center(D.entries)
    w, V = np.linalg.eigh(G)
    w, V = w[::-1], V[:, ::-1]

    g_norm = float(np.linalg.norm(G, 2)) if np.any(G) else 0.0
    eig_res = float(np.max(eigenpair_residuals(G, w, V)))
    if eig_res > 1e-9 * max(g_norm, 1e-300) and g_norm > 0:
        raise ArithmeticError(f"eigensolver residual {eig_res:.3e} exceeds 1e-9 * ||G||")

    top = float(np.max(np.abs(w)))
    min_eig = float(w[-1])
    verdict = EMBEDDABLE if min_eig >= -tol_rel * top else NOT_EMBEDDABLE
    keep = w > tol_rel * max(float(w[0]), 0.0) if w[0] > 0 else np.zeros(len(w), dtype=bool)
    Vk = V[:, keep]
    # fix eigenvector signs so that output is reproducible
    flip = np.sign(Vk[np.argmax(np.abs(Vk), axis=0), np.arange(Vk.shape[1])])
    X = Vk * flip * np.sqrt(w[keep])
    result = EmbeddingResult(X, w, min_eig, 0.0, verdict, int(keep.sum()), list(D.labels), eig_res, tol_rel)
    result.residual = isometry_residual(result, D)
    return result


def coordinate_distances(X: np.ndarray) -> np.ndarray:
    if X.shape[1] == 0:
        return np.zeros((X.shape[0], X.shape[0]))
    return squareform(pdist(X))


def isometry_residual(result: EmbeddingResult, D: DistanceMatrix) -> float:
    """``max_ij | ||x_i - x_j|| - D_ij |``."""
    E = D.entries if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=float)
    X = result.coordinates
    if X.shape[0] != E.shape[0]:
        raise DimensionError(f"{X.shape[0]} embedded points but a {E.shape[0]}-point distance matrix")
    return float(np.max(np.abs(coordinate_distances(X) - E)))
