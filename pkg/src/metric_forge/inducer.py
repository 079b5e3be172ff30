"""Distances induced by integrating a base squared distance through a family.

For points x1, x2 of an abstract set the induced distance is

    rho(x1, x2) = ( integral over y of D2(f_y(x1), f_y(x2)) )^(1/2)

where D2 is a negative definite kernel vanishing on the diagonal.  ``rho**2``
then inherits negative definiteness, which is what makes rho embeddable in
a Hilbert space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ._util import as_point, has_duplicates, point_key
from .errors import EvaluationError, InsufficientDataError, PreconditionError, UnsupportedOperationError
from .kernels import FAIL, PASS, CheckReport, Kernel, Witness
from .measures import (
    DEFAULT_MC_SAMPLES,
    FunctionFamily,
    IndexMeasure,
    IntegralEstimate,
    integrate,
    support_sample,
)


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    stderr: float
    squared: IntegralEstimate
    clamped: bool


@dataclass(frozen=True, eq=False)
class InducedMetric:
    family: FunctionFamily
    measure: IndexMeasure
    base: Kernel
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int | None = None
    quotient: bool = False

    def squared(self, x1, x2) -> IntegralEstimate:
        """Integral of ``base(f_y(x1), f_y(x2))`` over the index measure."""
        x1, x2 = _canonical(as_point(x1), as_point(x2))
        f, k = self.family, self.base

        def integrand(y):
            try:
                v = k(f(y, x1), f(y, x2))
            except (ValueError, TypeError, ArithmeticError) as exc:
                raise EvaluationError(f"evaluation failed at y={y!r}: {exc}", y=y, x1=x1, x2=x2) from exc
            if not math.isfinite(v):
                raise EvaluationError(f"non-finite base kernel value at y={y!r}, x=({x1!r}, {x2!r})",
                                      y=y, x1=x1, x2=x2)
            return v

        return integrate(self.measure, integrand, self.mc_samples, self.seed)

    def estimate(self, x1, x2) -> DistanceEstimate:
        sq = self.squared(x1, x2)
        clamped = sq.value < 0
        value = math.sqrt(max(sq.value, 0.0))
        # delta method; falls back to sqrt(stderr) when the distance is ~0
        if sq.stderr == 0.0:
            stderr = 0.0
        elif value > 0:
            stderr = sq.stderr / (2.0 * value)
        else:
            stderr = math.sqrt(sq.stderr)
        return DistanceEstimate(value, stderr, sq, clamped)

    def dist(self, x1, x2) -> float:
        return self.estimate(x1, x2).value

    __call__ = dist

    def as_kernel(self) -> Kernel:
        """``rho**2`` packaged as a kernel (for the negative-definiteness checkers)."""
        return Kernel(lambda u, v: self.squared(u, v).value, f"induced[{self.family.label}]",
                      squared_distance=True)


def _canonical(x1, x2):
    return (x1, x2) if point_key(x1) <= point_key(x2) else (x2, x1)


def induce_distance(family: FunctionFamily, measure: IndexMeasure, base: Kernel, *,
                    mc_samples: int = DEFAULT_MC_SAMPLES, seed: int | None = None,
                    quotient: bool = False) -> InducedMetric:
    if not base.squared_distance:
        raise PreconditionError(
            f"base kernel {base.label!r} is not registered as a squared distance "
            "(construct it with squared_distance=True to attest negative definiteness)")
    if not measure.deterministic:
        measure._seed(seed)  # raises SeedRequiredError when neither is given
    return InducedMetric(family, measure, base, mc_samples, seed, quotient)


def check_separation(metric: InducedMetric, probe_points: Sequence[Any], support_count: int = 256,
                     seed: int | None = None, tolerance: float = 1e-12) -> CheckReport:
    """Look for distinct probes that no sampled support index separates.

    For each pair the separation is ``max_y base(f_y(x1), f_y(x2))`` over the
    support sample; a pair whose separation is <= ``tolerance`` makes the
    induced distance a pseudometric on the probes.  ``worst_value`` is the
    smallest separation over all pairs.  With ``metric.quotient`` set, such
    pairs are reported as identified and the verdict stays ``pass``.
    """
    pts = [as_point(p) for p in probe_points]
    if has_duplicates(pts):
        raise PreconditionError("probe points must be pairwise distinct")
    seed = metric.seed if seed is None else seed
    ys = support_sample(metric.measure, support_count, seed)
    f, k = metric.family, metric.base
    images = [[f(y, x) for y in ys] for x in pts]

    collapsed, smallest, witness = [], math.inf, None
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            sep = max(k(a, b) for a, b in zip(images[i], images[j]))
            if sep < smallest:
                smallest = sep
            if sep <= tolerance:
                collapsed.append([i, j])
                if witness is None:
                    witness = Witness([pts[i], pts[j]], value=sep, indices=[i, j])
    details = {"support_size": len(ys), "pairs": len(pts) * (len(pts) - 1) // 2,
               "identified_pairs": collapsed, "quotient": metric.quotient}
    if not collapsed:
        return CheckReport(PASS, smallest if math.isfinite(smallest) else 0.0, None, len(ys), tolerance, details)
    verdict = PASS if metric.quotient else FAIL
    return CheckReport(verdict, smallest, witness, len(ys), tolerance, details)


def verify_metric_axioms(metric: InducedMetric, probe_points: Sequence[Any], triple_trials: int = 200,
                         seed: int = 0, tolerance: float = 1e-10) -> CheckReport:
    """Empirical check of nonnegativity, identity, symmetry and the triangle inequality.

    Zero distances between distinct probes are allowed (pseudometric) and
    reported through ``details["zero_distance_pairs"]``.  ``worst_value``
    is the smallest triangle slack ``rho(a,c) + rho(c,b) - rho(a,b)``.
    """
    pts = [as_point(p) for p in probe_points]
    n = len(pts)
    if triple_trials > 0 and n < 3:
        raise InsufficientDataError("triangle checks need at least 3 probe points")
    D = np.zeros((n, n))
    max_stderr, clamps = 0.0, 0
    a1 = a2 = a3 = True
    worst_pair = None
    for i in range(n):
        e = metric.estimate(pts[i], pts[i])
        if e.value > tolerance:
            a2 = False
            worst_pair = worst_pair or (i, i)
        for j in range(i + 1, n):
            e = metric.estimate(pts[i], pts[j])
            back = metric.estimate(pts[j], pts[i])
            max_stderr = max(max_stderr, e.stderr)
            clamps += e.clamped
            if e.value < 0:
                a1 = False
            if abs(e.value - back.value) > tolerance:
                a3 = False
                worst_pair = worst_pair or (i, j)
            D[i, j] = e.value
            D[j, i] = back.value

    rng = np.random.default_rng(seed)
    worst_slack, witness = math.inf, None
    for _ in range(triple_trials):
        a, b, c = rng.choice(n, size=3, replace=False)
        slack = D[a, c] + D[c, b] - D[a, b]
        if slack < worst_slack:
            worst_slack = slack
            witness = Witness([pts[a], pts[b], pts[c]], value=float(slack), indices=[int(a), int(b), int(c)])
    a4 = worst_slack >= -tolerance
    zero_pairs = [[i, j] for i in range(n) for j in range(i + 1, n) if D[i, j] <= tolerance]
    details = {
        "nonnegativity": a1, "identity": a2, "symmetry": a3, "triangle": a4,
        "zero_distance_pairs": zero_pairs,
        "zero_diameter": bool(np.max(D, initial=0.0) <= tolerance),
        "max_stderr": max_stderr, "clamped_estimates": clamps,
        "deterministic_measure": metric.measure.deterministic,
        "seed": seed,
    }
    if not (a1 and a2 and a3 and a4):
        if witness is None or a4:
            i, j = worst_pair or (0, 0)
            witness = Witness([pts[i], pts[j]], indices=[i, j])
        return CheckReport(FAIL, worst_slack if triple_trials else 0.0, witness, triple_trials, tolerance, details)
    if details["zero_diameter"]:
        details["note"] = "all probe distances vanish"
    return CheckReport(PASS, worst_slack if triple_trials else 0.0, witness, triple_trials, tolerance, details)


@dataclass(frozen=True, eq=False)
class InnerProductSpace:
    """Inner product and norm induced by a family of linear functionals."""

    family: FunctionFamily
    measure: IndexMeasure
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int | None = None

    def __post_init__(self):
        if not self.family.linear:
            raise UnsupportedOperationError(f"family {self.family.label!r} is not linear")
        if not self.measure.deterministic:
            self.measure._seed(self.seed)

    def inner(self, x1, x2) -> float:
        return self.inner_estimate(x1, x2).value

    def inner_estimate(self, x1, x2) -> IntegralEstimate:
        x1, x2 = _canonical(as_point(x1), as_point(x2))
        f = self.family

        def integrand(y):
            return float(np.dot(np.ravel(f(y, x1)), np.ravel(f(y, x2))))

        return integrate(self.measure, integrand, self.mc_samples, self.seed)

    def norm(self, x) -> float:
        return math.sqrt(max(self.inner(x, x), 0.0))

    def origin(self, like):
        return self.family.zero_like(as_point(like))

    def gram_matrix(self, points: Sequence[Any]) -> np.ndarray:
        pts = [as_point(p) for p in points]
        n = len(pts)
        G = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                G[i, j] = G[j, i] = self.inner(pts[i], pts[j])
        return G


def induced_inner_product(space: InnerProductSpace, x1, x2) -> float:
    return space.inner(x1, x2)


def induced_norm(space: InnerProductSpace, x) -> float:
    return space.norm(x)


def inner_product_space(family: FunctionFamily, measure: IndexMeasure, *, mc_samples: int = DEFAULT_MC_SAMPLES,
                        seed: int | None = None) -> InnerProductSpace:
    return InnerProductSpace(family, measure, mc_samples, seed)


__all__ = [
    "InducedMetric", "DistanceEstimate", "InnerProductSpace", "induce_distance", "check_separation",
    "verify_metric_axioms", "induced_inner_product", "induced_norm", "inner_product_space",
]
