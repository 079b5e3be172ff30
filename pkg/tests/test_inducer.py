import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metric_forge.errors import (
    EvaluationError,
    InsufficientDataError,
    PreconditionError,
    SeedRequiredError,
    UnsupportedOperationError,
)
from metric_forge.inducer import (
    check_separation,
    induce_distance,
    induced_inner_product,
    induced_norm,
    inner_product_space,
    verify_metric_axioms,
)
from metric_forge.kernels import absolute_difference, product, quadratic_form, squared_difference, user_kernel
from metric_forge.measures import FunctionFamily, IndexMeasure, make_family

COORDS = make_family("coordinates")
TWO_PROJ = IndexMeasure.discrete([(0, 0.5), (1, 0.5)])


@pytest.fixture
def two_projection():
    return induce_distance(COORDS, TWO_PROJ, squared_difference)


def test_two_projection_hand_value(two_projection):
    assert two_projection.dist((0, 0), (2, 0)) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_identity_and_symmetry(two_projection):
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.normal(size=(2, 2))
        assert two_projection.dist(a, a) == 0.0
        assert two_projection.dist(a, b) == two_projection.dist(b, a)


def test_monte_carlo_scale_family():
    fam = make_family("scale")
    mu = IndexMeasure.sampler("uniform", {"low": 0.0, "high": 1.0}, seed=12)
    metric = induce_distance(fam, mu, squared_difference, mc_samples=100_000)
    est = metric.estimate(0.0, 3.0)
    assert est.stderr > 0
    assert abs(est.value - math.sqrt(3)) <= 4 * est.stderr


def test_sampler_without_seed_rejected():
    with pytest.raises(SeedRequiredError):
        induce_distance(make_family("scale"), IndexMeasure.sampler("uniform"), squared_difference)


def test_base_must_be_squared_distance():
    with pytest.raises(PreconditionError):
        induce_distance(COORDS, TWO_PROJ, product)
    attested = user_kernel(lambda u, v: (u - v) ** 2, squared_distance=True)
    assert induce_distance(COORDS, TWO_PROJ, attested).dist((0, 0), (0, 2)) == pytest.approx(math.sqrt(2))


def test_non_finite_evaluation_reports_context():
    fam = FunctionFamily(lambda y, x: math.inf if y == 1 else float(x), "bad", domain="real")
    metric = induce_distance(fam, IndexMeasure.discrete([(0, 1), (1, 1)]), squared_difference)
    with pytest.raises(EvaluationError) as info:
        metric.dist(0.0, 1.0)
    assert info.value.context["y"] == 1.0


def test_separation_single_projection_fails():
    metric = induce_distance(COORDS, IndexMeasure.discrete([(0, 1.0)]), squared_difference)
    rep = check_separation(metric, [(0, 0), (0, 1)])
    assert rep.verdict == "fail"
    np.testing.assert_array_equal(rep.witness.points, [[0, 0], [0, 1]])


def test_separation_quotient_flag():
    metric = induce_distance(COORDS, IndexMeasure.discrete([(0, 1.0)]), squared_difference, quotient=True)
    rep = check_separation(metric, [(0, 0), (0, 1), (1, 0)])
    assert rep.verdict == "pass"
    assert rep.details["identified_pairs"] == [[0, 1]]


def test_separation_two_projections_pass(two_projection):
    assert check_separation(two_projection, [(0, 0), (0, 1), (1, 0)]).verdict == "pass"
    assert check_separation(two_projection, [(0, 0)]).verdict == "pass"
    with pytest.raises(PreconditionError):
        check_separation(two_projection, [(0, 0), (0, 0)])


def test_axioms_on_unit_square(two_projection):
    probes = [(0, 0), (1, 0), (0, 1), (1, 1)]
    rep = verify_metric_axioms(two_projection, probes, triple_trials=200, seed=0)
    assert rep.verdict == "pass"
    # oracle: Euclidean distance / sqrt(2)
    for a in probes:
        for b in probes:
            assert two_projection.dist(a, b) == pytest.approx(math.dist(a, b) / math.sqrt(2), abs=1e-15)


def test_axioms_constant_family_zero_diameter():
    metric = induce_distance(make_family("constant", {"value": 3.0}), TWO_PROJ, squared_difference)
    rep = verify_metric_axioms(metric, [(0, 0), (1, 0), (0, 1)], triple_trials=50)
    assert rep.verdict == "pass"
    assert rep.details["zero_diameter"] is True


def test_axioms_sampler_report_carries_stderr():
    mu = IndexMeasure.sampler("uniform", seed=3)
    metric = induce_distance(make_family("scale"), mu, squared_difference, mc_samples=500)
    rep = verify_metric_axioms(metric, [0.0, 1.0, 2.5, -1.0], triple_trials=100, tolerance=0.0)
    assert rep.details["max_stderr"] > 0
    assert rep.details["deterministic_measure"] is False


def test_axioms_need_three_points(two_projection):
    with pytest.raises(InsufficientDataError):
        verify_metric_axioms(two_projection, [(0, 0), (1, 1)], triple_trials=5)


def test_inner_product_hand_values():
    space = inner_product_space(COORDS, TWO_PROJ)
    assert induced_inner_product(space, (2, 0), (0, 3)) == 0.0
    assert induced_norm(space, (2, 0)) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_inner_product_requires_linear_family():
    with pytest.raises(UnsupportedOperationError):
        inner_product_space(make_family("threshold"), TWO_PROJ)


def _random_functional_space(seed, d=3, atoms=5):
    rng = np.random.default_rng(seed)
    mu = IndexMeasure.discrete([(rng.normal(size=d), w) for w in rng.uniform(0.1, 1, size=atoms)])
    return make_family("linear_functionals"), mu, rng


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_polarization_bilinearity_and_distance_link(seed):
    fam, mu, rng = _random_functional_space(seed)
    space = inner_product_space(fam, mu)
    metric = induce_distance(fam, mu, squared_difference)
    x1, x2, x3 = rng.normal(size=(3, 3))
    a, b = rng.normal(size=2)
    ip = space.inner(x1, x2)
    pol = 0.25 * (space.norm(x1 + x2) ** 2 - space.norm(x1 - x2) ** 2)
    assert ip == pytest.approx(pol, rel=1e-10, abs=1e-12)
    assert space.inner(x1, x2) == space.inner(x2, x1)
    assert space.inner(a * x1 + b * x3, x2) == pytest.approx(a * space.inner(x1, x2) + b * space.inner(x3, x2),
                                                               rel=1e-10, abs=1e-12)
    assert space.norm(x1) ** 2 == pytest.approx(space.inner(x1, x1), rel=1e-10)
    assert metric.dist(x1, x2) ** 2 == pytest.approx(space.inner(x1 - x2, x1 - x2), rel=1e-10)
    assert space.norm(x1) == pytest.approx(metric.dist(x1, space.origin(x1)), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 8))
def test_negative_definiteness_transfers(seed, n):
    fam, mu, rng = _random_functional_space(seed, d=2, atoms=4)
    for base in (squared_difference, absolute_difference):
        metric = induce_distance(fam, mu, base)
        pts = list(rng.normal(size=(n, 2)))
        R2 = np.array([[metric.dist(a, b) ** 2 for b in pts] for a in pts])
        for _ in range(20):
            c = rng.normal(size=n)
            c -= c.mean()
            value = float(c @ R2 @ c)
            assert value <= 1e-10
            # finite-sum interchange: equals the weighted per-atom forms
            per_atom = sum(w * quadratic_form(base, [fam(y, x) for x in pts], c)
                           for y, w in zip(mu.nodes, mu.weights))
            scale = max(1.0, float(np.abs(R2).sum() * np.max(np.abs(c)) ** 2))
            assert value == pytest.approx(per_atom, abs=1e-10 * scale)


@pytest.mark.parametrize("t", [0.0, 0.5, 3.0])
def test_scaling_family_scales_distance(t):
    scaled = FunctionFamily(lambda y, x: t * COORDS(y, x), "scaled", linear=True)
    a, b = (0.3, -1.0), (2.0, 0.25)
    base = induce_distance(COORDS, TWO_PROJ, squared_difference).dist(a, b)
    assert induce_distance(scaled, TWO_PROJ, squared_difference).dist(a, b) == pytest.approx(t * base, rel=1e-12)
