"""Base kernels on the target space and negative-definiteness certificates.

A kernel ``L`` is negative definite when ``sum_ij L(x_i, x_j) c_i c_j <= 0``
for every finite point set and every coefficient vector with ``sum c = 0``.
The checkers here cannot prove that; they search for counterexamples and
hand back a reproducible witness when one is found.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ._util import as_point, has_duplicates, jsonable, trial_draws
from .errors import DimensionError, EvaluationError, InsufficientDataError, PreconditionError
from .linalg import helmert_basis

PASS = "pass"
FAIL = "fail"
DEGENERATE = "degenerate"

DEFAULT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Kernel:
    """Symmetric real function of two points of the target space.

    ``squared_distance`` marks kernels that play the role of ``D**2``: they
    vanish on the diagonal and are (asserted to be) negative definite.
    """

    fn: Callable[[Any, Any], Any]
    label: str
    squared_distance: bool = False
    builtin: bool = False

    def __call__(self, u, v) -> float:
        return float(self.fn(u, v))


def _sqdiff(u, v):
    d = float(u) - float(v)
    return d * d


def _sqeuclid(u, v):
    d = np.subtract(u, v, dtype=float)
    return float(np.dot(np.ravel(d), np.ravel(d)))


squared_difference = Kernel(_sqdiff, "squared_difference", squared_distance=True, builtin=True)
squared_euclidean = Kernel(_sqeuclid, "squared_euclidean", squared_distance=True, builtin=True)
absolute_difference = Kernel(lambda u, v: abs(float(u) - float(v)), "absolute_difference",
                             squared_distance=True, builtin=True)
# positive definite; handy as a counterexample
product = Kernel(lambda u, v: float(u) * float(v), "product", builtin=True)
negative_product = Kernel(lambda u, v: -(float(u) * float(v)), "negative_product", builtin=True)

KERNELS = {
    k.label: k
    for k in (squared_difference, squared_euclidean, absolute_difference, product, negative_product)
}


def user_kernel(fn: Callable[[Any, Any], Any], label: str = "user", *, squared_distance: bool = False) -> Kernel:
    return Kernel(fn, label, squared_distance=squared_distance, builtin=False)


def get_kernel(name: str, params: dict | None = None) -> Kernel:
    if params:
        raise ValueError(f"kernel {name!r} takes no parameters, got {sorted(params)}")
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


def check_symmetry(k: Kernel, points: Sequence[Any]) -> float:
    """Largest ``|k(u, v) - k(v, u)|`` over all pairs of ``points``."""
    pts = [as_point(p) for p in points]
    worst = 0.0
    for i, u in enumerate(pts):
        for v in pts[i + 1:]:
            worst = max(worst, abs(k(u, v) - k(v, u)))
    return worst


class CoefficientVector:
    """Real coefficients c_1..c_n with the mean removed so that sum(c) = 0."""

    __slots__ = ("values",)

    def __init__(self, values):
        if isinstance(values, CoefficientVector):
            values = values.values
        arr = np.array(values, dtype=float).ravel()
        if arr.size < 2:
            raise DimensionError("a coefficient vector needs at least 2 entries")
        self.values = arr - arr.mean()
        self.values.setflags(write=False)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self):
        return f"CoefficientVector({self.values.tolist()!r})"


@dataclass
class Witness:
    points: list
    coefficients: np.ndarray | None = None
    value: float | None = None
    indices: list | None = None

    def to_dict(self) -> dict:
        return jsonable({
            "points": self.points,
            "coefficients": self.coefficients,
            "value": self.value,
            "indices": self.indices,
        })


@dataclass
class CheckReport:
    """Outcome of a randomized certificate search.

    ``worst_value`` is the extremal value found; what "extremal" means is
    documented by each check (largest form for negative definiteness,
    smallest signed m-form, smallest triangle slack, ...).
    """

    verdict: str
    worst_value: float
    witness: Witness | None
    trials: int
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "worst_value": jsonable(self.worst_value),
            "witness": None if self.witness is None else self.witness.to_dict(),
            "trials": int(self.trials),
            "tolerance": float(self.tolerance),
            "details": jsonable(self.details),
        }


def gram(k: Kernel, points: Sequence[Any]) -> np.ndarray:
    """Matrix ``K[i, j] = k(x_i, x_j)``; evaluated on ``i <= j`` and mirrored."""
    pts = [as_point(p) for p in points]
    n = len(pts)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = k(pts[i], pts[j])
            if not math.isfinite(v):
                raise EvaluationError(f"kernel {k.label} is not finite at points {i}, {j}",
                                      i=i, j=j, u=pts[i], v=pts[j])
            K[i, j] = K[j, i] = v
    return K


def form_from_gram(K: np.ndarray, c) -> float:
    """``sum_ij K_ij c_i c_j`` with exactly rounded summation."""
    c = np.asarray(c, dtype=float)
    return math.fsum((K * np.outer(c, c)).ravel())


def quadratic_form(k: Kernel, points: Sequence[Any], c) -> float:
    """The double sum ``sum_i sum_j k(x_i, x_j) c_i c_j``.

    >>> quadratic_form(squared_difference, [0.0, 1.0], [1.0, -1.0])
    -2.0
    """
    c = CoefficientVector(c)
    if len(points) != len(c):
        raise DimensionError(f"{len(points)} points but {len(c)} coefficients")
    return form_from_gram(gram(k, points), c.values)


def spectral_probes(K: np.ndarray) -> list[np.ndarray]:
    """Zero-sum directions extremal for the form of ``K``.

    Returns the eigenvectors (in the zero-sum hyperplane) of the smallest
    |eigenvalue| and of the largest eigenvalue, each scaled to max|c| = 1 with
    a deterministic sign.  The first is where equality is closest to being
    attained; the second is the most positive direction.
    """
    n = K.shape[0]
    B = helmert_basis(n)
    M = B.T @ K @ B
    w, V = np.linalg.eigh((M + M.T) / 2.0)
    probes = []
    for col in (int(np.argmin(np.abs(w))), int(np.argmax(w))):
        c = B @ V[:, col]
        c = c / np.max(np.abs(c))
        if c[int(np.argmax(np.abs(c)))] < 0:
            c = -c
        probes.append(c - c.mean())
    return probes


def _prepare(sample_points, tolerance):
    pts = [as_point(p) for p in sample_points]
    if len(pts) < 2:
        raise InsufficientDataError("need at least 2 sample points")
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    return pts


def check_negative_definite(k: Kernel, sample_points: Sequence[Any], trials: int = 1000,
                            seed: int = 0, tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """Randomized search for a zero-sum ``c`` with a positive quadratic form.

    ``worst_value`` is the largest form value seen.  The verdict is ``fail``
    when it exceeds ``tolerance`` and ``degenerate`` when every form was
    zero to within ``tolerance`` (nothing was actually tested).
    """
    pts = _prepare(sample_points, tolerance)
    K = gram(k, pts)
    worst, witness, all_zero = -math.inf, None, True
    for idx, c in trial_draws(seed, trials, len(pts)):
        v = form_from_gram(K[np.ix_(idx, idx)], c)
        if abs(v) > tolerance:
            all_zero = False
        if v > worst:
            worst = v
            witness = Witness([pts[i] for i in idx], c, v, idx.tolist())
    if worst > tolerance:
        verdict = FAIL
    elif all_zero:
        verdict = DEGENERATE
    else:
        verdict = PASS
    return CheckReport(verdict, worst, witness, trials, tolerance,
                       {"kernel": k.label, "seed": seed, "n_points": len(pts)})


def check_strictly_negative_definite(k: Kernel, sample_points: Sequence[Any], trials: int = 1000,
                                     seed: int = 0, tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """Search for a nonzero zero-sum ``c`` at which the form vanishes (or is positive).

    Besides the random trials, the two spectral probes of the full sample
    Gram matrix are evaluated: random directions almost never hit a null
    direction, the eigenvector of the smallest |eigenvalue| does.  A pass
    only means no violation was found.  ``worst_value`` is the form value of
    the witness on failure, otherwise the value of smallest magnitude.
    """
    pts = _prepare(sample_points, tolerance)
    if has_duplicates(pts):
        raise PreconditionError("strict check needs pairwise distinct points")
    K = gram(k, pts)
    candidates = [(idx, c) for idx, c in trial_draws(seed, trials, len(pts))]
    everything = np.arange(len(pts))
    candidates += [(everything, c) for c in spectral_probes(K)]
    threshold = math.sqrt(tolerance)

    violation, violation_score, closest = None, None, None
    for idx, c in candidates:
        v = form_from_gram(K[np.ix_(idx, idx)], c)
        w = Witness([pts[i] for i in idx], c, v, idx.tolist())
        if closest is None or abs(v) < abs(closest.value):
            closest = w
        nontrivial = np.max(np.abs(c)) > threshold
        if v > tolerance or (abs(v) <= tolerance and nontrivial):
            score = (1, v) if v > tolerance else (0, -abs(v))
            if violation is None or score > violation_score:
                violation, violation_score = w, score
    details = {"kernel": k.label, "seed": seed, "n_points": len(pts), "spectral_probes": 2}
    if violation is not None:
        details["reason"] = "positive form" if violation.value > tolerance else "form vanishes at nonzero c"
        return CheckReport(FAIL, violation.value, violation, trials, tolerance, details)
    return CheckReport(PASS, closest.value, closest, trials, tolerance, details)


def replay_witness(k: Kernel, witness: Witness) -> float:
    """Re-evaluate a recorded witness from scratch."""
    return quadratic_form(k, witness.points, witness.coefficients)


__all__ = [
    "Kernel", "CoefficientVector", "CheckReport", "Witness", "KERNELS", "PASS", "FAIL", "DEGENERATE",
    "squared_difference", "squared_euclidean", "absolute_difference", "product", "negative_product",
    "user_kernel", "get_kernel", "check_symmetry", "gram", "form_from_gram", "quadratic_form",
    "spectral_probes", "check_negative_definite", "check_strictly_negative_definite", "replay_witness",
]
