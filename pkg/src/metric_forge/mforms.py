"""m-argument kernels, their signed m-forms, induced m-kernels and L^m distances.

For an even ``m`` and a symmetric kernel ``L`` of ``m`` arguments the signed
m-form of zero-sum coefficients ``h`` on points ``x_1..x_n`` is

    (-1)^(m/2) * sum over all n^m index tuples of L(x_i1, ..., x_im) h_i1 ... h_im

and ``L`` is m-negative definite when this is always >= 0.  At ``m = 2``
this is minus the quadratic form used in :mod:`metric_forge.kernels`.
"""
from __future__ import annotations

import functools
import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from ._util import as_point, has_duplicates, jsonable, point_key, trial_draws
from .errors import (
    BudgetExceededError,
    CertificateError,
    DimensionError,
    DomainError,
    EvaluationError,
    InsufficientDataError,
    PreconditionError,
    UnsupportedOperationError,
)
from .kernels import (
    DEFAULT_TOLERANCE,
    DEGENERATE,
    FAIL,
    KERNELS,
    PASS,
    CheckReport,
    CoefficientVector,
    Kernel,
    Witness,
    spectral_probes,
)
from .linalg import helmert_basis
from .measures import DEFAULT_MC_SAMPLES, DISCRETE, FunctionFamily, IndexMeasure, integrate

DEFAULT_BUDGET = 10_000_000
BUDGET_ENV = "METRIC_FORGE_BUDGET"


def term_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_BUDGET


@dataclass(frozen=True)
class MKernel:
    """Symmetric real function of ``m`` points (``m`` even).

    ``domain`` declares whether arguments live in a vector space (needed by
    :func:`lm_distance`).  Symmetry is assumed by the evaluators, which call
    ``fn`` once per multiset of arguments; :func:`check_symmetry` tests it.
    """

    m: int
    fn: Callable[..., Any]
    label: str
    domain: str = "real"

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 2 or self.m % 2:
            raise ValueError(f"m must be an even integer >= 2, got {self.m!r}")

    def __call__(self, *args) -> float:
        return float(self.fn(*args))

    @property
    def vector_space(self) -> bool:
        return self.domain in ("real", "vector")

    @classmethod
    def from_kernel(cls, k: Kernel, domain: str = "real") -> MKernel:
        return cls(2, k.fn, k.label, domain)


def _perfect_matchings(items: tuple) -> list[list[tuple]]:
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in _perfect_matchings(remaining):
            out.append([(first, partner)] + tail)
    return out


def matching_kernel(base: Kernel, m: int = 4, domain: str = "real") -> MKernel:
    """Average over perfect matchings of the ``m`` arguments of products of ``base``.

    For m = 4: ``(b(a,b) b(c,d) + b(a,c) b(b,d) + b(a,d) b(b,c)) / 3``.  Its
    signed m-form equals ``(-Q)^(m/2)`` where ``Q`` is the quadratic form of
    ``base``, so it is m-negative definite whenever ``base`` is negative
    definite; with a base vanishing on the diagonal it also vanishes there.
    """
    if not isinstance(m, (int, np.integer)) or m < 2 or m % 2:
        raise ValueError(f"m must be an even integer >= 2, got {m!r}")
    matchings = _perfect_matchings(tuple(range(m)))
    scale = 1.0 / len(matchings)

    def fn(*args):
        total = 0.0
        for pairing in matchings:
            term = 1.0
            for i, j in pairing:
                term *= base(args[i], args[j])
            total += term
        return total * scale

    return MKernel(m, fn, f"matching{m}[{base.label}]", domain)


def negated(L: MKernel) -> MKernel:
    return MKernel(L.m, lambda *a: -L.fn(*a), f"-{L.label}", L.domain)


def get_mkernel(name: str, m: int, params: dict | None = None) -> MKernel:
    """Resolve an m-kernel by name.

    ``matching`` / ``negated_matching`` take an optional ``base`` kernel name
    (default ``squared_difference``); any 2-kernel name from
    :data:`metric_forge.kernels.KERNELS` is accepted for ``m = 2``.
    """
    params = dict(params or {})
    domain = params.pop("domain", "real")
    if name in ("matching", "negated_matching"):
        base = KERNELS[params.pop("base", "squared_difference")]
        L = matching_kernel(base, m, domain)
        L = negated(L) if name == "negated_matching" else L
    elif name in KERNELS and m == 2:
        L = MKernel.from_kernel(KERNELS[name], domain)
    elif name in KERNELS:
        raise ValueError(f"kernel {name!r} has two arguments; use 'matching' for m={m}")
    else:
        raise ValueError(f"unknown m-kernel {name!r}")
    if params:
        raise ValueError(f"m-kernel {name!r} got unexpected parameters {sorted(params)}")
    return L


def check_symmetry(L, points: Sequence[Any], samples: int = 50, seed: int = 0) -> float:
    """Largest relative asymmetry over random argument tuples and permutations."""
    pts = [as_point(p) for p in points]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        args = [pts[i] for i in rng.integers(len(pts), size=L.m)]
        ref = L(*args)
        perm = rng.permutation(L.m)
        other = L(*[args[i] for i in perm])
        worst = max(worst, abs(ref - other) / max(1.0, abs(ref)))
    return worst


def kernel_tensor(L, points: Sequence[Any], budget: int | None = None) -> np.ndarray:
    """Full ``n^m`` tensor of ``L`` values, evaluating ``L`` once per multiset."""
    pts = [as_point(p) for p in points]
    n, m = len(pts), L.m
    budget = term_budget() if budget is None else budget
    if n**m > budget:
        raise BudgetExceededError(
            f"{n}^{m} = {n**m} terms exceeds the budget of {budget}; raise {BUDGET_ENV} "
            "or use m_form_sampled() for a Monte Carlo estimate with stderr")
    shape = (n,) * m
    lookup = np.zeros(n**m)
    for combo in itertools.combinations_with_replacement(range(n), m):
        v = L(*[pts[i] for i in combo])
        if not math.isfinite(v):
            raise EvaluationError(f"{L.label} is not finite at index tuple {combo}", indices=combo)
        lookup[np.ravel_multi_index(combo, shape)] = v
    sorted_idx = np.sort(np.indices(shape).reshape(m, -1), axis=0)
    flat = lookup[np.ravel_multi_index(tuple(sorted_idx), shape)]
    return flat.reshape(shape)


def _outer_power(h: np.ndarray, m: int) -> np.ndarray:
    return functools.reduce(np.multiply.outer, [h] * m)


def signed_form_from_tensor(T: np.ndarray, h, m: int) -> float:
    h = np.asarray(h, dtype=float)
    return (-1) ** (m // 2) * math.fsum((T * _outer_power(h, m)).ravel())


def m_form(L, points: Sequence[Any], h, budget: int | None = None) -> float:
    """Signed m-form ``(-1)^(m/2) sum L(x_i1..x_im) h_i1..h_im`` by full enumeration."""
    h = CoefficientVector(h).values
    if len(points) != h.size:
        raise DimensionError(f"{len(points)} points but {h.size} coefficients")
    return signed_form_from_tensor(kernel_tensor(L, points, budget), h, L.m)


@dataclass(frozen=True)
class FormEstimate:
    value: float
    stderr: float
    samples_used: int


def m_form_sampled(L, points: Sequence[Any], h, samples: int = 100_000, seed: int = 0) -> FormEstimate:
    """Unbiased estimate of the signed m-form from uniformly sampled index tuples."""
    h = CoefficientVector(h).values
    pts = [as_point(p) for p in points]
    n, m = len(pts), L.m
    if n != h.size:
        raise DimensionError(f"{n} points but {h.size} coefficients")
    rng = np.random.default_rng(seed)
    tuples = rng.integers(n, size=(samples, m))
    vals = np.empty(samples)
    for s, idx in enumerate(tuples):
        vals[s] = L(*[pts[i] for i in idx]) * float(np.prod(h[idx]))
    sign = (-1) ** (m // 2)
    scale = float(n) ** m
    return FormEstimate(sign * scale * math.fsum(vals) / samples,
                        scale * float(np.std(vals, ddof=1)) / math.sqrt(samples), samples)


def _strict_probes(T: np.ndarray, m: int, seed: int, starts: int = 8) -> list[np.ndarray]:
    """Zero-sum directions (max|h| = 1) minimizing |signed form| / ||h||^m."""
    n = T.shape[0]
    if m == 2:
        # same probes as the 2-kernel checker, with the sign convention flipped
        return spectral_probes(T)
    B = helmert_basis(n)
    if n == 2:
        return [np.array([1.0, -1.0])]

    def contract(z):
        h = B @ z
        out = T
        for _ in range(m):
            out = out @ h
        return (-1) ** (m // 2) * float(out) / float(np.dot(z, z)) ** (m / 2)

    rng = np.random.default_rng([seed, 0x5EED])
    probes = []
    for _ in range(starts):
        z0 = rng.standard_normal(n - 1)
        res = minimize(lambda z: abs(contract(z)), z0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-300, "maxiter": 4000 * n})
        h = B @ res.x
        h = h / np.max(np.abs(h))
        if h[int(np.argmax(np.abs(h)))] < 0:
            h = -h
        probes.append(h - h.mean())
    return probes


def check_m_negative_definite(L, sample_points: Sequence[Any], trials: int = 1000, seed: int = 0,
                              tolerance: float = DEFAULT_TOLERANCE, strict: bool = False,
                              budget: int | None = None) -> CheckReport:
    """Randomized search for a zero-sum ``h`` with a negative signed m-form.

    ``worst_value`` is the smallest signed form found; ``fail`` when it is
    below ``-tolerance``, ``degenerate`` when every form is within
    ``tolerance`` of zero.  In strict mode near-zero forms at nontrivial
    ``h`` are violations too, and deterministic minimizing probes are added.
    Trials use the same random streams as
    :func:`metric_forge.kernels.check_negative_definite`, so at ``m = 2`` the two
    agree value-for-value up to sign.
    """
    pts = [as_point(p) for p in sample_points]
    if len(pts) < 2:
        raise InsufficientDataError("need at least 2 sample points")
    if strict and has_duplicates(pts):
        raise PreconditionError("strict check needs pairwise distinct points")
    m = L.m
    T = kernel_tensor(L, pts, budget)
    candidates = list(trial_draws(seed, trials, len(pts)))
    if strict:
        everything = np.arange(len(pts))
        candidates += [(everything, h) for h in _strict_probes(T, m, seed)]
    threshold = math.sqrt(tolerance)

    worst, worst_w, all_zero = math.inf, None, True
    violation, violation_score, closest = None, None, None
    for idx, h in candidates:
        v = signed_form_from_tensor(T[np.ix_(*[idx] * m)], h, m)
        w = Witness([pts[i] for i in idx], h, v, idx.tolist())
        if abs(v) > tolerance:
            all_zero = False
        if v < worst:
            worst, worst_w = v, w
        if closest is None or abs(v) < abs(closest.value):
            closest = w
        if strict and (v < -tolerance or (abs(v) <= tolerance and np.max(np.abs(h)) > threshold)):
            score = (1, -v) if v < -tolerance else (0, -abs(v))
            if violation is None or score > violation_score:
                violation, violation_score = w, score

    details = {"kernel": L.label, "m": m, "seed": seed, "n_points": len(pts), "strict": strict}
    if strict:
        details["minimizing_probes"] = len(candidates) - trials
        if violation is not None:
            details["reason"] = ("negative form" if violation.value < -tolerance
                                 else "form vanishes at nonzero h")
            return CheckReport(FAIL, violation.value, violation, trials, tolerance, details)
        return CheckReport(PASS, closest.value, closest, trials, tolerance, details)
    if worst < -tolerance:
        return CheckReport(FAIL, worst, worst_w, trials, tolerance, details)
    if all_zero:
        return CheckReport(DEGENERATE, worst, worst_w, trials, tolerance, details)
    return CheckReport(PASS, worst, worst_w, trials, tolerance, details)


class SignedDiscreteMeasure:
    """Finitely supported measure Q with a density h of Q-mean zero."""

    def __init__(self, points: Sequence[Any], q, h):
        self.points = [as_point(p) for p in points]
        q = np.array(q, dtype=float).ravel()
        h = np.array(h, dtype=float).ravel()
        if not (len(self.points) == q.size == h.size):
            raise DimensionError("points, q and h must have equal length")
        if q.size < 1 or np.any(q < 0) or not q.sum() > 0:
            raise ValueError("q must be nonnegative with positive total mass")
        self.q = q / math.fsum(q)
        self.h = h - math.fsum(self.q * h)

    @classmethod
    def from_json(cls, obj: dict) -> SignedDiscreteMeasure:
        return cls(obj["points"], obj["q"], obj["h"])

    def to_json(self) -> dict:
        return jsonable({"points": self.points, "q": self.q, "h": self.h})

    @property
    def weighted(self) -> np.ndarray:
        """Coefficients ``h(x_i) q_i`` turning the double integral into an m-form."""
        return self.h * self.q

    def nontrivial(self, threshold: float) -> bool:
        return bool(np.any(np.abs(self.h[self.q > 0]) > threshold))


def strong_form(L, Q: SignedDiscreteMeasure, budget: int | None = None) -> float:
    """``(-1)^(m/2) * integral of L h...h dQ...dQ`` for a finitely supported Q."""
    T = kernel_tensor(L, Q.points, budget)
    return signed_form_from_tensor(T, Q.weighted, L.m)


def check_strong_m_negative(L, measures: Sequence[SignedDiscreteMeasure], trials: int = 0, seed: int = 0,
                            tolerance: float = DEFAULT_TOLERANCE, budget: int | None = None) -> CheckReport:
    """Look for densities h, not Q-a.e. zero, at which the integral form vanishes or goes negative.

    Every supplied (Q, h) is evaluated; ``trials`` extra random densities per
    Q, and the minimizing probes of the strict check, are added.
    ``degenerate`` means only trivial densities were examined.
    """
    threshold = math.sqrt(tolerance)
    violation, violation_score, closest, examined = None, None, None, 0
    for qi, Q in enumerate(measures):
        pos = Q.q > 0
        candidates = [Q]
        sub = [p for p, keep in zip(Q.points, pos) if keep]
        if int(pos.sum()) >= 2:
            rng = np.random.default_rng([seed, qi])
            for _ in range(trials):
                candidates.append(SignedDiscreteMeasure(Q.points, Q.q, np.where(pos, rng.standard_normal(pos.size), 0.0)))
            if not has_duplicates(sub):
                T = kernel_tensor(L, sub, budget)
                for c in _strict_probes(T, L.m, seed):
                    h = np.zeros(pos.size)
                    h[pos] = c / Q.q[pos]
                    candidates.append(SignedDiscreteMeasure(Q.points, Q.q, h))
        for cand in candidates:
            v = strong_form(L, cand, budget)
            w = Witness(cand.points, cand.h, v, [qi])
            if not cand.nontrivial(threshold):
                continue
            examined += 1
            if closest is None or abs(v) < abs(closest.value):
                closest = w
            if v < -tolerance or abs(v) <= tolerance:
                score = (1, -v) if v < -tolerance else (0, -abs(v))
                if violation is None or score > violation_score:
                    violation, violation_score = w, score
    details = {"kernel": L.label, "m": L.m, "measures": len(measures), "densities_examined": examined,
               "seed": seed}
    if violation is not None:
        details["reason"] = "negative form" if violation.value < -tolerance else "form vanishes at nontrivial h"
        return CheckReport(FAIL, violation.value, violation, trials, tolerance, details)
    if closest is None:
        return CheckReport(DEGENERATE, 0.0, None, trials, tolerance, details)
    return CheckReport(PASS, closest.value, closest, trials, tolerance, details)


@dataclass(frozen=True, eq=False)
class InducedMKernel:
    """``R_m(x_1..x_m) = integral over y of L(f_y(x_1), ..., f_y(x_m))``."""

    source: MKernel
    family: FunctionFamily
    measure: IndexMeasure
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int | None = None

    @property
    def m(self) -> int:
        return self.source.m

    @property
    def label(self) -> str:
        return f"R[{self.source.label}|{self.family.label}]"

    @property
    def domain(self) -> str:
        return self.family.domain

    @property
    def vector_space(self) -> bool:
        return self.family.vector_space

    def estimate(self, *args):
        if len(args) != self.m:
            raise DimensionError(f"{self.label} takes {self.m} arguments, got {len(args)}")
        xs = [as_point(a) for a in args]
        f, L = self.family, self.source

        def integrand(y):
            return L(*[f(y, x) for x in xs])

        return integrate(self.measure, integrand, self.mc_samples, self.seed)

    def __call__(self, *args) -> float:
        return self.estimate(*args).value


def induce_m_kernel(L: MKernel, family: FunctionFamily, measure: IndexMeasure, *,
                    mc_samples: int = DEFAULT_MC_SAMPLES, seed: int | None = None) -> InducedMKernel:
    if not measure.deterministic:
        measure._seed(seed)
    return InducedMKernel(L, family, measure, mc_samples, seed)


def per_atom_forms(L: MKernel, family: FunctionFamily, measure: IndexMeasure, points: Sequence[Any], h,
                   budget: int | None = None) -> list[tuple[Any, float, float]]:
    """``[(y, weight, signed m-form of L at f_y(points))]`` for every positive-weight atom."""
    if measure.kind != DISCRETE:
        raise UnsupportedOperationError("per-atom forms need a discrete index measure")
    pts = [as_point(p) for p in points]
    out = []
    for y, w in zip(measure.nodes, measure.weights):
        if w > 0:
            out.append((y, float(w), m_form(L, [family(y, x) for x in pts], h, budget)))
    return out


@dataclass
class PropagationReport:
    per_y_vanishing: bool
    ambient_vanishing: bool | None
    hypothesis_holds: bool
    strictness_transferred: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable({
            "per_y_vanishing": self.per_y_vanishing,
            "ambient_vanishing": self.ambient_vanishing,
            "hypothesis_holds": self.hypothesis_holds,
            "strictness_transferred": self.strictness_transferred,
            "details": self.details,
        })


def check_assumption1(L: MKernel, family: FunctionFamily, measure: IndexMeasure, points: Sequence[Any], h,
                      tolerance: float = DEFAULT_TOLERANCE, seed: int = 0) -> PropagationReport:
    """Test the propagation hypothesis on one instance ``(points, h)``.

    * ``per_y_vanishing``: every per-atom signed form of ``L`` is ~0;
    * ``ambient_vanishing``: the signed form of ``L`` on the raw points is ~0
      (``None`` when ``L`` cannot take raw points);
    * ``hypothesis_holds``: the first implies the second;
    * ``strictness_transferred``: the strict verdict of the induced kernel on
      ``points`` matches the strict verdict of ``L`` (on the raw points, or on
      the pooled images when ``L`` cannot take raw points).
    """
    if measure.kind != DISCRETE:
        raise UnsupportedOperationError("propagation checks need a discrete index measure")
    pts = [as_point(p) for p in points]
    forms = per_atom_forms(L, family, measure, pts, h)
    per_y = all(abs(v) <= tolerance for _, _, v in forms)
    try:
        ambient_value = m_form(L, pts, h)
        ambient = abs(ambient_value) <= tolerance
        source_pts = pts
    except (TypeError, ValueError):
        ambient_value, ambient = None, None
        images = [family(y, x) for y, w in zip(measure.nodes, measure.weights) if w > 0 for x in pts]
        source_pts = _distinct(images)

    R = induce_m_kernel(L, family, measure)
    strict_R = _strict_pass(R, pts, seed, tolerance)
    strict_L = _strict_pass(L, source_pts, seed, tolerance)
    return PropagationReport(
        per_y_vanishing=per_y,
        ambient_vanishing=ambient,
        hypothesis_holds=(not per_y) or bool(ambient),
        strictness_transferred=strict_R == strict_L,
        details={"per_atom_forms": [v for _, _, v in forms], "ambient_form": ambient_value,
                 "strict_induced": strict_R, "strict_source": strict_L},
    )


def _distinct(points):
    seen, out = set(), []
    for p in points:
        key = point_key(p)
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def _strict_pass(L, points, seed, tolerance) -> bool:
    if len(points) < 2 or has_duplicates(points):
        return False
    return check_m_negative_definite(L, points, trials=64, seed=seed, tolerance=tolerance, strict=True).passed


def lm_distance(R, s, t, tolerance: float = DEFAULT_TOLERANCE) -> float:
    """``((-1)^(m/2) R(s-t, ..., s-t))^(1/m)``."""
    if not getattr(R, "vector_space", False):
        raise DomainError(f"{R.label} is not defined on a vector space; s - t is meaningless")
    d = np.subtract(as_point(s), as_point(t))
    d = float(d) if np.ndim(d) == 0 else d
    m = R.m
    value = (-1) ** (m // 2) * R(*[d] * m)
    if value < -tolerance:
        raise CertificateError(f"signed value {value:.3e} < 0 on the diagonal direction s - t; "
                               f"{R.label} is not m-negative definite there")
    return max(value, 0.0) ** (1.0 / m)


def verify_lm_metric(R, points: Sequence[Any], triple_trials: int = 200, seed: int = 0,
                     tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """Triangle-inequality and zero-diameter report for the L^m-type distance on ``points``."""
    pts = [as_point(p) for p in points]
    n = len(pts)
    if n < 3:
        raise InsufficientDataError("need at least 3 points")
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = lm_distance(R, pts[i], pts[j], tolerance)
    rng = np.random.default_rng(seed)
    worst, witness = math.inf, None
    for _ in range(triple_trials):
        a, b, c = rng.choice(n, size=3, replace=False)
        slack = D[a, c] + D[c, b] - D[a, b]
        if slack < worst:
            worst = float(slack)
            witness = Witness([pts[a], pts[b], pts[c]], value=worst, indices=[int(a), int(b), int(c)])
    zero_diameter = bool(np.max(D) <= tolerance)
    details = {"zero_diameter": zero_diameter, "max_distance": float(np.max(D)), "seed": seed}
    if worst < -tolerance:
        return CheckReport(FAIL, worst, witness, triple_trials, tolerance, details)
    if zero_diameter:
        return CheckReport(DEGENERATE, worst, witness, triple_trials, tolerance, details)
    return CheckReport(PASS, worst, witness, triple_trials, tolerance, details)
