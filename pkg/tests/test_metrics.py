import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ldao.metrics import (EmptyInput, LengthMismatch, RelevanceFunction, TooFewPairs, ZeroSpread,
                          build_relevance, mae, rmse, sera, sera_closed_form, wilcoxon_signed_rank)

from oracles import brute_force_wilcoxon_p


def loop_rmse(a, b):
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) * (x - y)
    return math.sqrt(total / len(a))


# -- rmse / mae ---------------------------------------------------------------

def test_rmse_examples():
    assert rmse([1, 2], [1, 2]) == 0.0
    assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5), rel=1e-15)
    assert rmse([0, 0], [3, 4]) == pytest.approx(3.53553, abs=1e-5)


def test_rmse_matches_loop(rng):
    a, b = rng.normal(size=100), rng.normal(size=100)
    assert rmse(a, b) == pytest.approx(loop_rmse(a, b), rel=1e-12)


def test_mae_examples():
    assert mae([1, 2], [2, 1]) == 1.0
    assert mae([3, -1, 4], [3, -1, 4]) == 0.0


def test_mae_never_exceeds_rmse(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        a, b = rng.normal(size=n), rng.standard_cauchy(size=n)
        assert mae(a, b) <= rmse(a, b) * (1 + 1e-12)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40))
def test_rmse_squared_times_n_is_sse(errs):
    e = np.array(errs)
    assert rmse(np.zeros_like(e), e) ** 2 * len(e) == pytest.approx(np.sum(e ** 2), rel=1e-9, abs=1e-9)


def test_metric_input_errors():
    with pytest.raises(LengthMismatch):
        rmse([1, 2], [1])
    with pytest.raises(EmptyInput):
        mae([], [])


# -- relevance ----------------------------------------------------------------

def test_relevance_control_points(rng):
    y = rng.lognormal(size=300)
    phi = build_relevance(y)
    assert phi(np.median(y)) == 0.0
    assert np.all(phi(phi.y[-1] + np.array([0.0, 1.0, 100.0])) == 1.0)


def test_relevance_fences_clamped_to_data():
    y = np.arange(1.0, 11.0)  # no outliers: fences pulled to min and max
    phi = build_relevance(y)
    assert phi.y.tolist() == [1.0, 5.5, 10.0]
    assert phi.phi.tolist() == [1.0, 0.0, 1.0]


def test_relevance_uses_whisker_fence_when_outliers_exist():
    y = np.array([1, 2, 3, 4, 5, 6, 7, 8, 100.0])
    q1, q3 = np.percentile(y, [25, 75])
    phi = build_relevance(y)
    assert phi.y[-1] == q3 + 1.5 * (q3 - q1)
    assert phi.y[0] == 1.0


def test_relevance_bounded_over_grid():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        y = rng.gamma(rng.uniform(0.3, 5), size=int(rng.integers(5, 200)))
        phi = build_relevance(y)
        grid = np.linspace(y.min() - 1, y.max() + 1, 2001)
        v = phi(grid)
        assert np.all((v >= 0) & (v <= 1))


def test_relevance_monotone_on_each_side(rng):
    y = rng.normal(size=500) ** 3
    phi = build_relevance(y)
    med = np.median(y)
    left = phi(np.linspace(phi.y[0], med, 1000))
    right = phi(np.linspace(med, phi.y[-1], 1000))
    assert np.all(np.diff(left) <= 0)
    assert np.all(np.diff(right) >= 0)


def test_relevance_zero_spread():
    with pytest.raises(ZeroSpread):
        build_relevance([3.0] * 10)


def test_relevance_slope_limiting_prevents_overshoot():
    phi = RelevanceFunction([0.0, 1.0, 2.0], [0.0, 1.0, 1.0], [50.0, 50.0, 0.0])
    v = phi(np.linspace(-1, 3, 4001))
    assert v.min() >= 0.0 and v.max() <= 1.0
    assert np.all(np.diff(phi(np.linspace(0, 1, 500))) >= 0)


def test_relevance_from_file(tmp_path):
    f = tmp_path / "rel.txt"
    f.write_text("# y phi slope\n10 1 0\n0 0 0\n\n20 0.5 0 # trailing\n")
    phi = RelevanceFunction.from_file(f)
    assert phi.y.tolist() == [0.0, 10.0, 20.0]
    assert phi(np.array([0.0, 10.0, 20.0, 99.0])).tolist() == [0.0, 1.0, 0.5, 0.5]


# -- SERA ---------------------------------------------------------------------

def test_sera_constant_relevance():
    phi = RelevanceFunction.constant(1.0)
    assert sera([0.0, 0.0], [1.0, 2.0], phi) == pytest.approx(5.0, rel=1e-12)


def test_sera_perfect_prediction(rng):
    y = rng.normal(size=50)
    assert sera(y, y.copy()) == 0.0


def test_sera_matches_closed_form(rng):
    for _ in range(50):
        y = rng.normal(size=80) * rng.uniform(0.5, 5)
        yhat = y + rng.normal(size=80)
        phi = build_relevance(y)
        assert sera(y, yhat, phi) == pytest.approx(sera_closed_form(y, yhat, phi), rel=1e-3)


def test_sera_scales_quadratically(rng):
    y = rng.normal(size=60)
    e = rng.normal(size=60)
    phi = build_relevance(y)
    assert sera(y, y + 3 * e, phi) == pytest.approx(9 * sera(y, y + e, phi), rel=1e-12)


def test_sera_accepts_precomputed_relevance(rng):
    y, yhat = rng.normal(size=30), rng.normal(size=30)
    phi = build_relevance(y)
    assert sera(y, yhat, phi(y)) == sera(y, yhat, phi)


def test_sera_step_bounds():
    with pytest.raises(ValueError):
        sera([1.0, 2.0], [1.0, 2.0], RelevanceFunction.constant(), step=0.0)


# -- Wilcoxon -----------------------------------------------------------------

def test_wilcoxon_all_zero_differences():
    with pytest.raises(TooFewPairs):
        wilcoxon_signed_rank([1.0, 2, 3, 4, 5, 6], [1.0, 2, 3, 4, 5, 6])


def test_wilcoxon_six_positive():
    res = wilcoxon_signed_rank([1.0, 2, 3, 4, 5, 6])
    assert res.w_minus == 0
    assert res.p_value == pytest.approx(2 / 2**6, abs=1e-15)
    assert res.p_value == pytest.approx(0.03125)
    assert res.significant


@pytest.mark.parametrize("n", range(5, 13))
def test_wilcoxon_exact_matches_enumeration(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        d = np.round(rng.normal(size=n), 1)  # rounding creates ties
        if np.count_nonzero(d) < 5:
            continue
        res = wilcoxon_signed_rank(d)
        assert res.p_value == pytest.approx(brute_force_wilcoxon_p(d), abs=1e-12)


def test_wilcoxon_matches_scipy_without_ties(rng):
    d = rng.normal(size=15)
    ours = wilcoxon_signed_rank(d).p_value
    ref = stats.wilcoxon(d, method="exact").pvalue
    assert ours == pytest.approx(ref, abs=1e-12)


def test_wilcoxon_branches_agree_at_twenty():
    for seed in range(30):
        rng = np.random.default_rng(seed)
        d = rng.normal(loc=rng.uniform(-0.5, 0.5), size=20)
        exact = wilcoxon_signed_rank(d, method="exact").p_value
        approx = wilcoxon_signed_rank(d, method="normal").p_value
        assert abs(exact - approx) < 0.01


def test_wilcoxon_is_symmetric(rng):
    a, b = rng.normal(size=12), rng.normal(size=12) + 0.8
    ab, ba = wilcoxon_signed_rank(a, b), wilcoxon_signed_rank(b, a)
    assert ab.p_value == ba.p_value
    assert {ab.winner, ba.winner} == {"a", "b"}
    assert 0 < ab.p_value <= 1


def test_wilcoxon_unpacks_to_triple():
    stat, p, sig = wilcoxon_signed_rank([1.0, -2, 3, 4, 5, 6, 7])
    assert stat == 2.0
    assert 0 < p <= 1
    assert isinstance(sig, bool)


def test_wilcoxon_large_n_uses_normal(rng):
    res = wilcoxon_signed_rank(rng.normal(size=40) + 0.3)
    assert res.method == "normal"
    assert 0 < res.p_value <= 1
