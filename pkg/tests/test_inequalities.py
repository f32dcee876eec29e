import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convexpoincare import DiscreteMeasure, InputError
from convexpoincare.constants import ConstantsPipeline, mls_convex_constant, transport_cost_params
from convexpoincare.costs import PerCoordQuadLinear, QuadLinear
from convexpoincare.families import function_family, random_max_affine
from convexpoincare.hopflax import MaxAffineFunction
from convexpoincare.inequalities import (
    CONCENTRATION_MODES, TAIL_BOUNDS, ConvexPoincareEstimator, check_dual_Tminus,
    check_dual_Tplus, check_inf_convolution_t2, check_mls_concave, check_mls_convex, combined,
    dual_value, empirical_concentration_check, enlargement, estimate_convex_poincare, lipschitz_conc,
    lower_lp, lower_tail, moment_quantile, moment_upper, nonlip_lower, nonlip_lower_quantile,
    poincare_ratio, selfnorm_moment, tail_bound, upper_tail,
)
from convexpoincare.measures import power_measure

PIPE = ConstantsPipeline(2.0, 0.5, M=0.5, c_plus=0.02)
ZERO = MaxAffineFunction.constant(0.0)


# --------------------------------------------------------------- Poincare

def test_ratio_of_kink_family(bern):
    for a in (0.5, 0.1, 1e-3):
        f = MaxAffineFunction([[0.0], [1 / (1 - a)]], [0.0, -a / (1 - a)])
        expected = 0.25 / (0.5 / (1 - a) ** 2)
        assert poincare_ratio(bern, f) == pytest.approx(expected, rel=1e-12)


def test_estimator_bernoulli(bern):
    est = estimate_convex_poincare(bern, k_pieces=2, restarts=16, seed=0)
    assert 0.45 <= est.best_ratio <= 0.5 + 1e-6
    assert est.lambda_hat == pytest.approx(1 / est.best_ratio)
    assert poincare_ratio(bern, est.witness) == pytest.approx(est.best_ratio, rel=1e-12)


def test_estimator_point_mass():
    est = estimate_convex_poincare(DiscreteMeasure.dirac([1.0, 2.0]))
    assert est.best_ratio == 0.0 and est.lambda_hat == math.inf


def test_estimator_monotone_in_k(rng):
    for seed in range(3):
        mu = DiscreteMeasure(rng.normal(size=(5, 1)), rng.dirichlet(np.ones(5)))
        vals = [estimate_convex_poincare(mu, k, restarts=4, seed=seed).best_ratio
                for k in (2, 3, 4)]
        assert vals[0] <= vals[1] + 1e-15 <= vals[2] + 2e-15


def test_product_embedding(bern):
    est = estimate_convex_poincare(bern, restarts=8)
    prod = power_measure(bern, 2)
    lifted = est.witness.embed(2, [0])
    assert poincare_ratio(prod, lifted) == pytest.approx(est.best_ratio, rel=1e-12)
    assert estimate_convex_poincare(prod, restarts=8).best_ratio >= est.best_ratio - 1e-3


def test_sklearn_estimator(bern):
    from sklearn.base import clone

    est = ConvexPoincareEstimator(restarts=8, random_state=3)
    assert clone(est).get_params() == est.get_params()
    est.fit([[0.0], [1.0], [1.0], [0.0]])
    assert 0.45 <= est.best_ratio_ <= 0.5 + 1e-6
    w = ConvexPoincareEstimator(restarts=8).fit([[0.0], [1.0]], sample_weight=[0.5, 0.5])
    assert w.lambda_hat_ == pytest.approx(1 / w.best_ratio_)
    with pytest.raises(InputError):
        estimate_convex_poincare(bern, k_pieces=1)


# ---------------------------------------------------------------- duals

@pytest.mark.parametrize("check", [check_dual_Tplus, check_dual_Tminus, check_inf_convolution_t2])
def test_zero_function_is_tight(bern, check):
    rep = check(bern, QuadLinear(1.0, 1.0), ZERO)
    assert rep.passed and rep.details["max_value"] == pytest.approx(1.0, abs=1e-15)


def test_pipeline_dual_sweep(bern):
    fs = function_family(11, 150)
    assert check_dual_Tplus(bern, PIPE.cost("plus"), fs).passed
    assert check_dual_Tminus(bern, PIPE.cost("minus"), fs).passed
    assert check_inf_convolution_t2(bern, PIPE.cost("plus"), fs).passed


def test_large_scale_cost_limit(bern, rng):
    # with a huge C the cost is nearly free and Q_1 f tends to inf f
    th = QuadLinear(1e8, 1e3)
    for _ in range(10):
        a, c = rng.uniform(0.1, 5, size=2)
        f = MaxAffineFunction([[a], [-c]], rng.normal(size=2))
        vals = f(bern.points)
        m = f.minimum() - vals.min()
        limit = math.exp(m) * bern.expect(np.exp(-(vals - vals.min())))
        v = dual_value(bern, th, f, "plus")
        assert v == pytest.approx(limit, abs=1e-6)
        assert v <= 1


def test_small_slope_expansion(bern):
    th = PIPE.cost("minus")
    gaps = []
    for eps in (1e-1, 5e-2, 2.5e-2):
        f = MaxAffineFunction.linear([eps])
        gaps.append(1 - dual_value(bern, th, f, "minus"))
    assert all(g > 0 for g in gaps)
    # second order: halving eps divides the gap by about four
    for a, b in zip(gaps, gaps[1:]):
        assert 3.5 <= a / b <= 4.5


def test_violation_is_reported(bern):
    # a very expensive cost leaves Q_1 f close to f, and Jensen breaks the bound
    f = MaxAffineFunction.linear([3.0])
    rep = check_dual_Tminus(bern, QuadLinear(1e-3, 1e3), f)
    assert not rep.passed and rep.violations[0]["index"] == 0


# ------------------------------------------------------------------ MLS

def test_mls_convex(bern):
    assert check_mls_convex(bern, ZERO, 2.0, 0.5).worst_slack == 0.0
    c = 0.5
    f = MaxAffineFunction.linear([c])
    rep = check_mls_convex(bern, f, 2.0, c)
    e = math.exp(c)
    ent = 0.5 * c * e - (1 + e) / 2 * math.log((1 + e) / 2)
    rhs = mls_convex_constant(2.0, c) * c * c * (1 + e) / 2
    assert rep.details["worst_instance"]["lhs"] == pytest.approx(ent, rel=1e-12)
    assert rep.details["worst_instance"]["rhs"] == pytest.approx(rhs, rel=1e-12)
    assert ent < rhs
    assert check_mls_convex(bern, function_family(3, 200, slope_cap=0.5), 2.0, 0.5).passed
    with pytest.raises(InputError):
        check_mls_convex(bern, MaxAffineFunction.linear([0.6]), 2.0, 0.5)


def test_mls_concave(bern):
    rep = check_mls_concave(bern, MaxAffineFunction.linear([0.01]), 2.0, 0.02)
    assert rep.passed and rep.details["M"] == 0.5
    assert rep.details["empirical_ratio"] * 1e3 < rep.details["constant"]
    assert check_mls_concave(bern, function_family(4, 200, slope_cap=0.02), 2.0, 0.02).passed
    assert check_mls_concave(bern, ZERO, 2.0, 0.02).worst_slack == 0.0


# ----------------------------------------------------------- tail bounds

def test_tail_bound_spot_values():
    assert upper_tail(2.0, 1.0, 0.0).value == 8.0
    assert upper_tail(1.0, 2.0, 1.0).value == pytest.approx(8 * math.exp(-0.26))
    assert upper_tail(4.0, 1.0, 3.0).value == pytest.approx(8 * math.exp(-3.12))
    assert moment_upper(2.0, 2.0, 1.0).value == pytest.approx(1.0)
    assert moment_upper(0.5, 4.0, 2.0).value == pytest.approx(8.0)
    assert not moment_upper(2.0, 1.0, 1.0).applicable
    assert not lower_tail(2.0, 0.5, 1.0, 16.0).applicable
    assert lower_tail(2.0, 0.5, 1.0, 32.0).value == pytest.approx(8 * math.exp(-math.sqrt(2)))
    assert lower_tail(1.0, 0.0, 0.5, 16.0).value == pytest.approx(8 * math.exp(-1))
    assert enlargement(1.0, 0.0).value == 1.0
    assert enlargement(0.5, math.log(2)).value == pytest.approx(1.0)
    assert not enlargement(0.0, 1.0).applicable
    assert lipschitz_conc(0.0).value == 4.0
    assert lipschitz_conc(math.log(4)).value == pytest.approx(1.0)
    assert lipschitz_conc(2.0).value == pytest.approx(4 * math.exp(-2))
    assert selfnorm_moment(1).value == 3.0
    assert selfnorm_moment(2).value == pytest.approx(math.sqrt(3))
    assert not selfnorm_moment(0.5).applicable
    assert nonlip_lower(1.0, 0.25).threshold == 4.0
    assert nonlip_lower(2.0).value == pytest.approx(4 * math.exp(-2))
    assert nonlip_lower(0.0, 1.0).value == 4.0
    assert nonlip_lower_quantile(1.0, 1.0, 1.0).threshold == pytest.approx(1 + math.log(8))
    assert nonlip_lower_quantile(1.0, 0.75, 2.0).threshold == pytest.approx(
        2 * (1 + math.log(16)))
    assert not nonlip_lower_quantile(1.0, 0.5, 1.0).applicable
    assert lower_lp(2.0, 0.5).value == 24.0
    assert lower_lp(1.0, 1.0).value == 48.0
    assert not lower_lp(0.0, 1.0).applicable
    assert combined(3 * math.e, 1.0, lambda s: float(s >= 1)).value == pytest.approx(
        math.exp(-1) + 1)
    assert combined(1.0, 2.0, lambda s: 0.0).value == pytest.approx(math.exp(-2))
    assert not combined(1.0, 0.5, lambda s: 0.0).applicable
    assert moment_quantile(1.0, 1.0).threshold == pytest.approx(3 * math.e ** 2)
    assert moment_quantile(2.0, 1.0).value == pytest.approx(6 * math.exp(-2))
    assert not moment_quantile(0.5, 1.0).applicable


def test_tail_bound_dispatch():
    assert tail_bound("selfnorm_moment", p=1).value == 3.0
    assert set(TAIL_BOUNDS) >= {"upper_tail", "lower_tail", "moment_quantile"}
    with pytest.raises(InputError):
        tail_bound("nope")


# --------------------------------------------------------- concentration

def _product_setup(n=3):
    A, D = transport_cost_params(2.0, 0.02, "plus", M=0.5)
    return power_measure(DiscreteMeasure.bernoulli(0.5), n), PerCoordQuadLinear(2 * A, D, n)


def test_concentration_constant_function():
    mu, th = _product_setup(2)
    for mode in CONCENTRATION_MODES:
        rep = empirical_concentration_check(mu, MaxAffineFunction.constant(1.0, 2), th, 3.0,
                                            mode=mode)
        assert rep.passed
    rep = empirical_concentration_check(mu, MaxAffineFunction.constant(1.0, 2), th, 3.0,
                                        mode="moment_quantile")
    assert rep.vacuous == 1


def test_concentration_vacuity():
    mu, th = _product_setup(2)
    f = MaxAffineFunction.linear([1.0, 1.0])
    rep = empirical_concentration_check(mu, f, th, 0.5, mode="lipschitz")
    assert rep.vacuous == 1
    assert empirical_concentration_check(mu, f, th, 5.0).vacuous == 0
    with pytest.raises(InputError):
        empirical_concentration_check(mu, f, th, 0.5, mode="selfnorm")
    with pytest.raises(InputError):
        empirical_concentration_check(mu, f, th, 0.5, mode="moment_quantile")
    with pytest.raises(InputError):
        empirical_concentration_check(mu, f, th, 1.0, mode="bogus")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 2.0, 4.0]))
def test_concentration_sweep(seed, p):
    mu, th = _product_setup(3)
    f = random_max_affine(np.random.default_rng(seed), 3)
    for mode in CONCENTRATION_MODES:
        assert empirical_concentration_check(mu, f, th, p, mode=mode).passed
