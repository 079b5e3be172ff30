"""Index measures, function families and integration over the index set.

Three measure kinds are representable:

* ``discrete`` -- finitely many atoms ``(y, weight)``;
* ``grid`` -- uniform probability on a real interval, discretized by a
  positive-weight quadrature rule (composite Simpson for odd node counts,
  trapezoid otherwise);
* ``sampler`` -- a named seeded distribution, integrated by Monte Carlo.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ._util import as_point
from .errors import EvaluationError, SeedRequiredError

DISCRETE = "discrete"
GRID = "grid"
SAMPLER = "sampler"

DEFAULT_MC_SAMPLES = 10_000


def _uniform(rng, count, low=0.0, high=1.0, dim=None):
    size = count if dim is None else (count, int(dim))
    return rng.uniform(low, high, size=size)


def _normal(rng, count, loc=0.0, scale=1.0, dim=None):
    size = count if dim is None else (count, int(dim))
    return rng.normal(loc, scale, size=size)


def _sphere(rng, count, dim):
    g = rng.standard_normal((count, int(dim)))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


SAMPLERS: dict[str, Callable] = {"uniform": _uniform, "normal": _normal, "sphere": _sphere}


@functools.lru_cache(maxsize=64)
def _cached_draws(name: str, params_json: str, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = np.asarray(SAMPLERS[name](rng, count, **json.loads(params_json)), dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class IndexMeasure:
    """Probability measure on the index set.

    Use the :meth:`discrete`, :meth:`grid`, :meth:`sampler` or
    :meth:`from_json` constructors rather than the raw initializer.
    """

    kind: str
    nodes: tuple = ()
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sampler_name: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int | None = None
    spec: dict = field(default_factory=dict)

    @classmethod
    def discrete(cls, atoms: Sequence[tuple[Any, float]]) -> IndexMeasure:
        atoms = list(atoms)
        if not atoms:
            raise ValueError("a discrete measure needs at least one atom")
        ys = tuple(as_point(y) for y, _ in atoms)
        w = np.array([float(wt) for _, wt in atoms])
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("atom weights must be finite and nonnegative")
        total = math.fsum(w)
        if total <= 0:
            raise ValueError("atom weights must not all be zero")
        w = w / total
        w.setflags(write=False)
        spec = {"kind": DISCRETE, "atoms": [[_y_json(y), float(wt)] for (y, _), wt in zip(atoms, w)]}
        return cls(DISCRETE, ys, w, spec=spec)

    @classmethod
    def grid(cls, a: float, b: float, nodes: int, rule: str = "simpson") -> IndexMeasure:
        a, b, nodes = float(a), float(b), int(nodes)
        if not b > a:
            raise ValueError("grid interval must satisfy a < b")
        if nodes < 1:
            raise ValueError("grid needs at least one node")
        if nodes == 1:
            ys, w = np.array([(a + b) / 2.0]), np.array([1.0])
        else:
            ys = np.linspace(a, b, nodes)
            if rule == "simpson" and nodes % 2 == 1 and nodes >= 3:
                w = np.ones(nodes)
                w[1:-1:2] = 4.0
                w[2:-1:2] = 2.0
                w /= 3.0 * (nodes - 1)
            elif rule in ("simpson", "trapezoid"):
                w = np.ones(nodes)
                w[[0, -1]] = 0.5
                w /= nodes - 1
            else:
                raise ValueError(f"unknown quadrature rule {rule!r}")
        w.setflags(write=False)
        spec = {"kind": GRID, "interval": [a, b], "nodes": nodes, "rule": rule}
        return cls(GRID, tuple(float(y) for y in ys), w, spec=spec)

    @classmethod
    def sampler(cls, name: str, params: Mapping[str, Any] | None = None, seed: int | None = None) -> IndexMeasure:
        if name not in SAMPLERS:
            raise ValueError(f"unknown sampler {name!r}; choose from {sorted(SAMPLERS)}")
        params = dict(params or {})
        # validate parameters eagerly
        SAMPLERS[name](np.random.default_rng(0), 1, **params)
        spec = {"kind": SAMPLER, "name": name, "params": params, "seed": seed}
        return cls(SAMPLER, sampler_name=name, params=params, seed=seed, spec=spec)

    @classmethod
    def from_json(cls, spec: Mapping[str, Any]) -> IndexMeasure:
        kind = spec.get("kind")
        if kind == DISCRETE:
            return cls.discrete([(y, w) for y, w in spec["atoms"]])
        if kind == GRID:
            a, b = spec["interval"]
            return cls.grid(a, b, spec["nodes"], spec.get("rule", "simpson"))
        if kind == SAMPLER:
            return cls.sampler(spec["name"], spec.get("params"), spec.get("seed"))
        raise ValueError(f"unknown measure kind {kind!r}")

    def to_json(self) -> dict:
        return self.spec

    @property
    def deterministic(self) -> bool:
        return self.kind != SAMPLER

    def draws(self, count: int, seed: int | None = None) -> np.ndarray:
        """Seeded sample of ``count`` index points (sampler kind only)."""
        seed = self._seed(seed)
        return _cached_draws(self.sampler_name, json.dumps(dict(self.params), sort_keys=True), int(count), seed)

    def _seed(self, seed):
        seed = self.seed if seed is None else seed
        if seed is None:
            raise SeedRequiredError(f"sampler measure {self.sampler_name!r} needs a seed")
        return int(seed)


def _y_json(y):
    return y.tolist() if isinstance(y, np.ndarray) else y


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    stderr: float = 0.0
    samples_used: int = 0


def integrate(measure: IndexMeasure, g: Callable[[Any], float], mc_samples: int = DEFAULT_MC_SAMPLES,
              seed: int | None = None) -> IntegralEstimate:
    """Integrate ``g`` against ``measure``.

    Deterministic kinds return the exact weighted sum over positive-weight
    nodes (stderr 0).  The sampler kind returns the sample mean over
    ``mc_samples`` seeded draws with stderr = sample std / sqrt(n).
    """
    if measure.kind == SAMPLER:
        if mc_samples < 2:
            raise ValueError("Monte Carlo integration needs at least 2 samples")
        ys = measure.draws(mc_samples, seed)
        vals = np.empty(len(ys))
        for i, y in enumerate(ys):
            vals[i] = _finite(g, y)
        n = len(vals)
        mean = math.fsum(vals) / n
        stderr = float(np.std(vals, ddof=1)) / math.sqrt(n)
        return IntegralEstimate(mean, stderr, n)

    w = measure.weights
    terms, used = [], []
    for y, wt in zip(measure.nodes, w):
        if wt > 0:
            terms.append(wt * _finite(g, y))
            used.append(wt)
    return IntegralEstimate(math.fsum(terms) / math.fsum(used), 0.0, len(used))


def _finite(g, y) -> float:
    v = float(g(y))
    if not math.isfinite(v):
        raise EvaluationError(f"integrand is not finite at y={_y_json(y)!r}", y=y)
    return v


def support_sample(measure: IndexMeasure, count: int = 256, seed: int | None = None) -> list:
    """Finite proxy for the support: positive-weight nodes, or ``count`` seeded draws."""
    if count < 1:
        raise ValueError("count must be positive")
    if measure.kind == SAMPLER:
        return list(measure.draws(count, seed))
    return [y for y, wt in zip(measure.nodes, measure.weights) if wt > 0]


@dataclass(frozen=True)
class FunctionFamily:
    """The map ``(y, x) -> f_y(x)``.

    ``domain`` describes the point set: ``"real"``, ``"vector"`` (both
    support subtraction) or ``"any"``.  ``linear`` marks families of linear
    functionals; ``origin`` is the zero element used by induced norms
    (``None`` means "zeros shaped like the argument").
    """

    apply: Callable[[Any, Any], Any]
    label: str
    linear: bool = False
    domain: str = "vector"
    codomain: str = "real"
    origin: Any = None
    spec: dict = field(default_factory=dict)

    def __call__(self, y, x):
        return self.apply(y, x)

    @property
    def vector_space(self) -> bool:
        return self.domain in ("real", "vector")

    def zero_like(self, x):
        if self.origin is not None:
            return as_point(self.origin)
        if isinstance(x, np.ndarray):
            return np.zeros_like(x, dtype=float)
        return 0.0


def _coordinate(y, x):
    return float(np.asarray(x, dtype=float).ravel()[int(round(float(np.ravel(y)[0])))])


def _functional(y, x):
    return float(np.dot(np.ravel(np.asarray(y, dtype=float)), np.ravel(np.asarray(x, dtype=float))))


def _scale(y, x):
    return float(y) * x


def _threshold(y, x):
    return 1.0 if float(x) <= float(y) else 0.0


def make_family(name: str, params: Mapping[str, Any] | None = None) -> FunctionFamily:
    """Builtin families, selectable by name from configuration files.

    ``coordinates``         f_y(x) = x[y]            (y an integer index; linear)
    ``linear_functionals``  f_y(x) = <y, x>          (y a vector; linear)
    ``scale``               f_y(x) = y * x           (real y; linear)
    ``identity``            f_y(x) = x               (linear)
    ``constant``            f_y(x) = value           (linear only when value == 0)
    ``threshold``           f_y(x) = 1[x <= y]       (real x; not linear)
    """
    params = dict(params or {})
    spec = {"name": name, "params": dict(params)}
    if name == "coordinates":
        family = FunctionFamily(_coordinate, name, linear=True, domain="vector", spec=spec)
    elif name == "linear_functionals":
        family = FunctionFamily(_functional, name, linear=True, domain="vector", spec=spec)
    elif name in ("scale", "identity"):
        domain = params.pop("domain", "real")
        fn = _scale if name == "scale" else (lambda y, x: x)
        family = FunctionFamily(fn, name, linear=True, domain=domain,
                                codomain="real" if domain == "real" else "vector", spec=spec)
    elif name == "constant":
        value = float(params.pop("value", 0.0))
        family = FunctionFamily(lambda y, x: value, name, linear=value == 0.0,
                                domain=params.pop("domain", "vector"), spec=spec)
    elif name == "threshold":
        family = FunctionFamily(_threshold, name, domain="real", spec=spec)
    else:
        raise ValueError(f"unknown family {name!r}")
    if params:
        raise ValueError(f"family {name!r} got unexpected parameters {sorted(params)}")
    return family


def check_linearity(family: FunctionFamily, probes: Sequence[Any], index_points: Sequence[Any],
                    seed: int = 0, trials: int = 50) -> float:
    """Largest relative error of ``f_y(a x1 + b x2) = a f_y(x1) + b f_y(x2)`` on random probes."""
    rng = np.random.default_rng(seed)
    probes = [as_point(p) for p in probes]
    ys = list(index_points)
    worst = 0.0
    for _ in range(trials):
        x1 = probes[rng.integers(len(probes))]
        x2 = probes[rng.integers(len(probes))]
        y = ys[rng.integers(len(ys))]
        a, b = rng.normal(size=2)
        lhs = np.asarray(family(y, a * x1 + b * x2), dtype=float)
        rhs = a * np.asarray(family(y, x1), dtype=float) + b * np.asarray(family(y, x2), dtype=float)
        scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    return worst
