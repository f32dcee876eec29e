import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convexpoincare import DiscreteMeasure, InputError
from convexpoincare.measures import (
    entropy_functional, entropy_of_exp, median, median_variance_check, mixture,
    perturb, power_measure, product_measure, pushforward_stats, quantile_radius,
    relative_entropy,
)


def test_duplicates_merged_and_sorted():
    mu = DiscreteMeasure([[1.0], [0.0], [1.0]], [0.25, 0.5, 0.25])
    assert mu.points.ravel().tolist() == [0.0, 1.0]
    assert mu.weights.tolist() == [0.5, 0.5]


def test_zero_weights_dropped():
    mu = DiscreteMeasure([[0.0], [1.0]], [1.0, 0.0])
    assert len(mu) == 1


@pytest.mark.parametrize("w", [[0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0]])
def test_bad_weights(w):
    with pytest.raises(InputError):
        DiscreteMeasure([[0.0], [1.0]], w)


def test_nonfinite_point():
    with pytest.raises(InputError):
        DiscreteMeasure([[np.inf], [1.0]])


def test_entropy_examples(bern):
    assert relative_entropy(bern, bern) == 0.0
    assert relative_entropy(DiscreteMeasure.dirac([2.0]), bern) == math.inf
    nu = DiscreteMeasure.bernoulli(0.75)
    expected = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
    assert relative_entropy(nu, bern) == pytest.approx(expected, abs=1e-15)


def test_entropy_dimension_mismatch(bern):
    with pytest.raises(InputError):
        relative_entropy(DiscreteMeasure.dirac([0.0, 0.0]), bern)


def test_entropy_functional_examples(bern):
    assert entropy_functional(bern, lambda x: np.full(len(x), 7.0)) == 0.0
    f = lambda x: x[:, 0]
    e = math.e
    expected = e / 2 - (1 + e) / 2 * math.log((1 + e) / 2)
    assert entropy_of_exp(bern, f) == pytest.approx(expected, rel=1e-14)
    g = lambda x: np.exp(x[:, 0])
    assert entropy_functional(bern, lambda x: 3 * g(x)) == pytest.approx(3 * expected, rel=1e-13)


def test_entropy_functional_rejects_negative(bern):
    with pytest.raises(InputError):
        entropy_functional(bern, lambda x: x[:, 0] - 2)


def test_pushforward_examples(bern):
    st_ = pushforward_stats(DiscreteMeasure.dirac([3.0]), lambda x: x[:, 0] ** 2)
    assert st_.variance == 0 and st_.median == 9.0
    assert median(bern, lambda x: x[:, 0]) == 0.0
    st_ = pushforward_stats(DiscreteMeasure([[1.0], [2.0], [3.0]]), lambda x: x[:, 0])
    assert st_.mean == pytest.approx(2.0)
    assert st_.variance == pytest.approx(2 / 3)
    assert st_.median == 2.0


def test_median_variance_examples(bern):
    r = median_variance_check(bern, lambda x: x[:, 0])
    assert r["lhs"] == pytest.approx(0.5) and r["rhs"] == pytest.approx(0.5) and r["holds"]
    assert median_variance_check(bern, lambda x: 0 * x[:, 0])["holds"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_median_variance_property(seed):
    rng = np.random.default_rng(seed)
    mu = DiscreteMeasure(rng.normal(size=(10, 2)), rng.dirichlet(np.ones(10)))
    a = rng.normal(size=2)
    assert median_variance_check(mu, lambda x: np.abs(x @ a) ** 1.5)["holds"]


def test_quantile_radius_examples(bern):
    assert quantile_radius(DiscreteMeasure.dirac([4.0]), 0.3) == 0.0
    assert quantile_radius(bern, 0.75) == 0.5
    assert quantile_radius(DiscreteMeasure([[-1.0], [0.0], [1.0]]), 2 / 3) == 1.0


def test_constructions(bern):
    d = product_measure(DiscreteMeasure.dirac([1.0]), DiscreteMeasure.dirac([2.0]))
    assert len(d) == 1 and d.points.tolist() == [[1.0, 2.0]]
    m = mixture(bern, bern, 0.3)
    assert np.array_equal(m.points, bern.points)
    np.testing.assert_allclose(m.weights, bern.weights, atol=1e-15)
    sq = power_measure(bern, 2)
    assert sq.points.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    np.testing.assert_allclose(sq.weights, 0.25)


def test_mixture_errors(bern):
    with pytest.raises(InputError):
        mixture(bern, bern, 1.0)
    with pytest.raises(InputError):
        mixture(bern, DiscreteMeasure.dirac([0.0, 0.0]), 0.5)


def test_perturb(bern):
    nu, osc = perturb(bern, lambda x: math.log(3) * x[:, 0])
    np.testing.assert_allclose(nu.weights, [0.25, 0.75])
    assert osc == pytest.approx(math.log(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
def test_weights_normalized(m, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 3, size=(m, 1)).astype(float)
    w = rng.dirichlet(np.ones(m))
    mu = DiscreteMeasure(X, w)
    assert abs(mu.weights.sum() - 1) <= 1e-12
    assert mu.expect(mu.points[:, 0]) == pytest.approx(float(w @ X[:, 0]), abs=1e-12)


def test_roundtrip_dict(bern):
    from convexpoincare.io import measure_from_dict

    mu = measure_from_dict(bern.to_dict())
    assert np.array_equal(mu.points, bern.points)
    with pytest.raises(InputError):
        measure_from_dict({**bern.to_dict(), "extra": 1})
