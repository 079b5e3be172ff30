"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Each criterion is a plain function returning ``(passed, detail)``.  Under
pytest every criterion is one test and a PASS/FAIL line per criterion is
printed in the terminal summary; run this file directly to print the same
lines without pytest.
"""
import itertools
import math
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from metric_forge.embedder import DistanceMatrix, distance_matrix, double_center, schoenberg_embed
from metric_forge.inducer import check_separation, induce_distance, inner_product_space
from metric_forge.kernels import check_negative_definite, squared_difference
from metric_forge.linalg import jacobi_eigh
from metric_forge.measures import IndexMeasure, make_family
from metric_forge.mforms import (
    MKernel,
    check_m_negative_definite,
    induce_m_kernel,
    m_form,
    matching_kernel,
    per_atom_forms,
)

ROOT = Path(__file__).resolve().parents[1]
RESULTS: dict[int, tuple[bool, str]] = {}


def _random_linear_config(seed):
    rng = np.random.default_rng([2024, seed])
    d = int(rng.integers(1, 5))
    atoms = int(rng.integers(1, 9))
    mu = IndexMeasure.discrete([(rng.normal(size=d), w) for w in rng.uniform(0.05, 1.0, size=atoms)])
    metric = induce_distance(make_family("linear_functionals"), mu, squared_difference)
    n = int(rng.integers(2, 11))
    pts = list(rng.normal(size=(n, d)))
    return metric, pts, rng


def criterion_1():
    start = time.perf_counter()
    worst = -math.inf
    for s in range(50):
        metric, pts, rng = _random_linear_config(s)
        R2 = distance_matrix(metric, pts).entries ** 2
        for _ in range(200):
            c = rng.normal(size=len(pts))
            c -= c.mean()
            worst = max(worst, math.fsum((R2 * np.outer(c, c)).ravel()))
    elapsed = time.perf_counter() - start
    return worst <= 1e-10 and elapsed < 10, f"max form {worst:.3e} (<= 1e-10), {elapsed:.2f}s (< 10s)"


def criterion_2():
    start = time.perf_counter()
    bad, worst_ratio = [], 0.0
    for s in range(50):
        metric, pts, _ = _random_linear_config(s)
        D = distance_matrix(metric, pts)
        res = schoenberg_embed(D)
        bound = 1e-8 * (1.0 + float(D.entries.max()))
        worst_ratio = max(worst_ratio, res.residual / bound)
        if not res.embeddable or res.residual > bound:
            bad.append(s)
    elapsed = time.perf_counter() - start
    return (not bad and elapsed < 10,
            f"failures {bad}, worst residual/bound {worst_ratio:.2e}, {elapsed:.2f}s (< 10s)")


def criterion_3():
    start = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(3)
    for _ in range(100):
        n, d = int(rng.integers(2, 31)), int(rng.integers(1, 6))
        x = rng.normal(size=(n, d)) * rng.uniform(0.1, 10)
        D = DistanceMatrix(np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1)))
        res = schoenberg_embed(D)
        worst = max(worst, res.residual if res.embeddable else math.inf)
    star = np.array([[0, 1, 1, 1], [1, 0, 2, 2], [1, 2, 0, 2], [1, 2, 2, 0]], dtype=float)
    res = schoenberg_embed(DistanceMatrix(star))
    oracle_min = jacobi_eigh(double_center(star))[0][0]
    star_ok = (res.verdict == "not-embeddable" and res.min_eigenvalue < -1e-3 and oracle_min < -1e-3
               and abs(res.min_eigenvalue - oracle_min) <= 1e-9 * abs(oracle_min))
    elapsed = time.perf_counter() - start
    return (worst <= 1e-8 and star_ok and elapsed < 30,
            f"max round-trip residual {worst:.2e} (<= 1e-8), star min eigenvalue {res.min_eigenvalue:.6f} "
            f"(oracle {oracle_min:.6f}), {elapsed:.2f}s (< 30s)")


def criterion_4():
    line = schoenberg_embed(DistanceMatrix([[0, 1, 2], [1, 0, 1], [2, 1, 0]]))
    eig_err = float(np.max(np.abs(line.gram_eigenvalues - np.array([2.0, 0.0, 0.0]))))
    coords, two = make_family("coordinates"), IndexMeasure.discrete([(0, 0.5), (1, 0.5)])
    dist_err = abs(induce_distance(coords, two, squared_difference).dist((0, 0), (2, 0)) - math.sqrt(2))
    inner = abs(inner_product_space(coords, two).inner((2, 0), (0, 3)))
    ok = eig_err <= 1e-10 and dist_err <= 1e-12 and inner <= 1e-12
    return ok, f"eigenvalue error {eig_err:.1e}, distance error {dist_err:.1e}, inner {inner:.1e}"


def criterion_5():
    start = time.perf_counter()
    zs = []
    for seed in range(10):
        mu = IndexMeasure.sampler("uniform", {"low": 0.0, "high": 1.0}, seed=1000 + seed)
        est = induce_distance(make_family("scale"), mu, squared_difference, mc_samples=100_000).estimate(0.0, 3.0)
        zs.append(abs(est.value - math.sqrt(3)) / est.stderr if est.stderr > 0 else math.inf)
    elapsed = time.perf_counter() - start
    return max(zs) <= 4 and elapsed < 10, f"max |error|/stderr {max(zs):.2f} (<= 4), {elapsed:.2f}s (< 10s)"


def criterion_6():
    sq2 = MKernel.from_kernel(squared_difference)
    worst, mismatched = 0.0, 0
    for s in range(20):
        rng = np.random.default_rng([6, s])
        pts = list(rng.normal(size=int(rng.integers(2, 9))))
        a = check_negative_definite(squared_difference, pts, trials=200, seed=s)
        b = check_m_negative_definite(sq2, pts, trials=200, seed=s)
        mismatched += a.verdict != b.verdict
        scale = max(abs(a.worst_value), 1e-300)
        worst = max(worst, abs(b.worst_value + a.worst_value) / scale)
    return mismatched == 0 and worst <= 1e-12, f"verdict mismatches {mismatched}, max relative gap {worst:.1e}"


def _pairing_oracle(a, b, c, d):
    sq = lambda u, v: (u - v) ** 2
    return (sq(a, b) * sq(c, d) + sq(a, c) * sq(b, d) + sq(a, d) * sq(b, c)) / 3.0


def criterion_7():
    L = matching_kernel(squared_difference, 4)
    worst = 0.0
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        x = rng.normal(size=n)
        h = rng.normal(size=n)
        h -= h.mean()
        closed = 4.0 * float(np.dot(x, h)) ** 4
        direct = math.fsum(_pairing_oracle(*x[list(idx)]) * math.prod(h[list(idx)])
                           for idx in itertools.product(range(n), repeat=4))
        value = m_form(L, list(x), h)
        denom = max(abs(closed), 1e-300)
        worst = max(worst, abs(value - closed) / denom, abs(direct - closed) / denom)
    return worst <= 1e-9, f"max relative error {worst:.1e} (<= 1e-9)"


def criterion_8():
    sources = {2: MKernel.from_kernel(squared_difference), 4: matching_kernel(squared_difference, 4)}
    fam = make_family("linear_functionals")
    min_form, worst_rel, checked = math.inf, 0.0, 0
    for s in range(20):
        rng = np.random.default_rng([8, s])
        m = 2 if s % 2 == 0 else 4
        d = int(rng.integers(1, 4))
        mu = IndexMeasure.discrete([(rng.normal(size=d), w) for w in rng.uniform(0.1, 1, size=int(rng.integers(1, 6)))])
        R = induce_m_kernel(sources[m], fam, mu)
        n = int(rng.integers(2, 6))
        pts = list(rng.normal(size=(n, d)))
        h = rng.normal(size=n)
        h -= h.mean()
        forms = per_atom_forms(sources[m], fam, mu, pts, h)
        value = m_form(R, pts, h)
        combined = math.fsum(w * v for _, w, v in forms)
        if all(v >= 0 for _, _, v in forms):
            checked += 1
            min_form = min(min_form, value)
        worst_rel = max(worst_rel, abs(value - combined) / max(abs(combined), 1e-300))
    ok = checked == 20 and min_form >= -1e-10 and worst_rel <= 1e-10
    return ok, f"{checked}/20 with nonnegative atoms, min form {min_form:.2e}, max relative gap {worst_rel:.1e}"


def criterion_9():
    coords = make_family("coordinates")
    probes = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
    one = check_separation(induce_distance(coords, IndexMeasure.discrete([(0, 1.0)]), squared_difference), probes)
    two = check_separation(induce_distance(coords, IndexMeasure.discrete([(0, .5), (1, .5)]), squared_difference),
                           probes)
    ok = one.verdict == "fail" and one.witness is not None and two.verdict == "pass"
    return ok, f"single projection {one.verdict}, two projections {two.verdict}"


CLI_RUNS = [
    ("check-ndk", "check_ndk.json"),
    ("check-m", "check_m4.json"),
    ("induce", "induce_two_projections.json"),
    ("embed", "embed_induced.json"),
    ("demo-example1", "demo_example1.json"),
]


def criterion_10():
    differing = []
    with tempfile.TemporaryDirectory() as tmp:
        for command, config in CLI_RUNS:
            outputs = []
            for run in range(2):
                out = Path(tmp) / f"{command}-{run}"
                proc = subprocess.run([sys.executable, "-m", "metric_forge", command, "--config",
                                       str(ROOT / "configs" / config), "--out", str(out)],
                                      capture_output=True, check=False)
                files = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
                outputs.append((proc.returncode, proc.stdout, files))
            if outputs[0] != outputs[1]:
                differing.append(command)
    return not differing, f"{len(CLI_RUNS)} commands run twice, differing: {differing or 'none'}"


CRITERIA = {
    1: ("negative definiteness transfers to induced distances", criterion_1),
    2: ("induced distance matrices embed isometrically", criterion_2),
    3: ("embedder round trip and star metric", criterion_3),
    4: ("hand-computed fixtures", criterion_4),
    5: ("Monte Carlo distance within 4 stderr", criterion_5),
    6: ("m=2 forms agree with 2-kernel checks", criterion_6),
    7: ("m=4 pairing identity", criterion_7),
    8: ("m-negativity preserved by induction", criterion_8),
    9: ("pseudometric detection", criterion_9),
    10: ("byte-identical CLI reports", criterion_10),
}


def summary_lines() -> list[str]:
    lines = []
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        lines.append(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {CRITERIA[number][0]}: {detail}")
    return lines


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, detail = CRITERIA[number][1]()
    RESULTS[number] = (ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for number, (_, fn) in CRITERIA.items():
        RESULTS[number] = fn()
    print("\n".join(summary_lines()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
