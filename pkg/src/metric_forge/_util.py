from __future__ import annotations

import math
from typing import Any, Iterator, Sequence

import numpy as np


def as_point(p: Any) -> Any:
    """Normalize a point: scalars become ``float``, sequences a 1-D float array."""
    if isinstance(p, np.ndarray):
        return float(p) if p.ndim == 0 else np.asarray(p, dtype=float)
    if isinstance(p, (list, tuple)):
        return np.asarray(p, dtype=float)
    if isinstance(p, (int, float, np.number)):
        return float(p)
    return p


def point_key(p: Any) -> tuple:
    """Hashable key used for equality tests and canonical ordering."""
    if isinstance(p, (int, float, np.number)):
        return (float(p),)
    if isinstance(p, (np.ndarray, list, tuple)):
        return tuple(float(v) for v in np.ravel(np.asarray(p, dtype=float)))
    return (repr(p),)


def has_duplicates(points: Sequence[Any]) -> bool:
    keys = [point_key(p) for p in points]
    return len(set(keys)) != len(keys)


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy containers/scalars into JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return v
    return obj


def trial_draws(seed: int, trials: int, n: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(indices, coefficients)`` for randomized falsification trials.

    Each trial owns an RNG stream derived from ``(seed, trial)`` so trials
    can be replayed (or evaluated in parallel) independently.  The subset
    size is uniform on ``2..n``; coefficients are i.i.d. standard normal with
    the mean subtracted.
    """
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        size = int(rng.integers(2, n + 1))
        idx = np.sort(rng.choice(n, size=size, replace=False))
        c = rng.standard_normal(size)
        c = c - c.mean()
        yield idx, c
