
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ustatgl.kernels import analytic_model_uniform_qn, builtin_kernel
from ustatgl.uprocess import empirical_u_dist
from ustatgl.uquantile import (StabilityResult, StepFunction, bahadur_grid, bahadur_remainder,
                               fast_u_quantile, generalized_inverse_stability_check, stability_fuzz,
                               pair_rank, qn_select, u_quantile)

from oracles import kth_pair_statistic, order_stat_quantile

QN = builtin_kernel("qn")
DISTANCE_KERNELS = ["qn", "gini", "variance", "winsorized-variance"]
probs = st.floats(1e-6, 1.0).filter(lambda p: 0 < p <= 1)
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_worked_examples():
    d = empirical_u_dist([0, 1, 3], QN)
    assert [u_quantile(d, p) for p in (0.25, 0.5, 1.0)] == [1.0, 2.0, 3.0]
    assert qn_select(np.arange(10.0), QN, 0.25) == 2.0
    assert pair_rank(10, 0.25) == 12
    assert qn_select([3.5, -1.25], QN, 0.3) == 4.75


def test_p_range():
    d = empirical_u_dist([0, 1, 3], QN)
    for p in (0.0, -0.1, 1.01):
        with pytest.raises(ValueError):
            u_quantile(d, p)
        with pytest.raises(ValueError):
            qn_select([0, 1, 3], QN, p)


def test_qn_select_rejects_non_distance_kernel():
    with pytest.raises(ValueError, match="u_quantile"):
        qn_select([0, 1, 3], builtin_kernel("cdf-average"), 0.5)


def test_exact_rank_uses_rationals():
    # 0.1 * 45 = 4.500000000000001 in floating point; the rank must still be 5
    assert pair_rank(10, 0.1) == 5
    assert pair_rank(2, 1.0) == 1


@pytest.mark.parametrize("name", DISTANCE_KERNELS)
def test_select_matches_brute_force(name):
    k = builtin_kernel(name)
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 300))
        x = rng.normal(size=n) * 10 ** rng.uniform(-3, 3)
        if rng.random() < 0.3:
            x = np.round(x)  # ties
        for p in (0.1, 0.25, 0.5, 0.9, 1.0):
            assert qn_select(x, k, p) == kth_pair_statistic(x, k.pair_statistic, p)


@given(arrays(np.float64, st.integers(2, 60), elements=finite), probs)
def test_select_equals_sorted_path(x, p):
    for name in DISTANCE_KERNELS:
        k = builtin_kernel(name)
        assert qn_select(x, k, p) == u_quantile(empirical_u_dist(x, k), p)


@given(arrays(np.float64, st.integers(2, 40), elements=finite))
def test_galois_properties(x):
    for k in (QN, builtin_kernel("cdf-average")):
        d = empirical_u_dist(x, k)
        jumps = d.jump_points()
        ps = np.unique(np.concatenate([np.linspace(0.01, 1, 37), np.clip(d(jumps), 1e-12, 1)]))
        q = np.array([d.quantile(p) for p in ps])
        assert np.all(np.diff(q) >= 0)
        assert np.all(d(q) >= ps)
        for t in jumps:
            assert d.quantile(d(t)) <= t
            for p in ps:
                assert (d.quantile(p) > t) == (d(t) < p)


def test_fast_quantile_cdf_average_is_order_statistic(rng):
    for _ in range(20):
        x = rng.normal(size=rng.integers(2, 500))
        for p in (0.1, 0.25, 0.5, 0.75, 1.0):
            assert fast_u_quantile(x, builtin_kernel("cdf-average"), p) == order_stat_quantile(x, p)


def test_rank_rule_reads_decimal_probabilities():
    # Fraction(0.1) * 450 is slightly above 45; the rank is still 45
    assert pair_rank(31, 0.1) == 47  # N = 465, 46.5 -> 47
    from ustatgl.uprocess import rank_at_least
    assert rank_at_least(0.1, 450) == 45
    assert rank_at_least(0.2, 20) == 4
    assert rank_at_least(1 / 3, 9) == 3


def test_bahadur_n2_formula():
    m = analytic_model_uniform_qn()
    x = np.array([0.2, 0.7])
    d = abs(x[0] - x[1])
    grid = bahadur_grid((0.2, 0.8), 12)
    diag = bahadur_remainder(x, QN, m, grid)
    tp = m.quantile(grid)
    expect = d - tp - (grid - (d <= tp)) / m.u(tp)
    assert np.array_equal(diag.remainders, expect)
    assert diag.sup == np.max(np.abs(expect)) and diag.n == 2


def test_bahadur_methods_agree(rng):
    m = analytic_model_uniform_qn()
    x = rng.random(400)
    a = bahadur_remainder(x, QN, m, method="sort")
    b = bahadur_remainder(x, QN, m, method="select")
    assert np.array_equal(a.remainders, b.remainders)
    assert a.p_grid.size == 201 and a.p_grid[0] == 0.2 and a.p_grid[-1] == pytest.approx(0.8)
    assert a.grid_error >= 0


def test_bahadur_rejects_vanishing_density():
    m = analytic_model_uniform_qn()
    with pytest.raises(ValueError, match="vanishes"):
        bahadur_remainder(np.random.default_rng(0).random(20), QN, m, [0.5, 1.0])


def test_step_function_inverse():
    F = StepFunction([0.0, 1.0, 2.0], [0.0, 0.2, 0.5, 1.0])
    assert F(-1) == 0.0 and F(0.0) == 0.2 and F(1.5) == 0.5
    assert F.inverse(0.2) == 0.0 and F.inverse(0.21) == 1.0 and F.inverse(1.0) == 2.0
    with pytest.raises(ValueError):
        StepFunction([1.0, 0.0], [0, 0.5, 1])


def test_identity_like_function_holds():
    # fine staircase approximating F(t) = t
    h = 1e-4
    breaks = np.arange(-1, 2, h)
    levels = np.concatenate([[breaks[0] - h], breaks])
    F = StepFunction(breaks, levels)
    assert generalized_inverse_stability_check(F, c=2e-3, l=0.05, C1=-0.5, C2=1.5) is StabilityResult.HOLDS


def test_u_dist_composed_with_inverse_model():
    m = analytic_model_uniform_qn()
    x = np.random.default_rng(11).random(120)
    F = StepFunction.from_u_dist(empirical_u_dist(x, QN), m)
    # c chosen above the sup deviation of F from the identity on [0, 1]
    dev = np.max(np.abs(F(F.breaks) - F.breaks))
    c = 1.5 * dev
    res = generalized_inverse_stability_check(F, c=c, l=0.1, C1=0.0, C2=1.0)
    assert res is StabilityResult.HOLDS


def test_hypothesis_failure_is_reported_separately():
    F = StepFunction([0.5], [0.0, 1.0])
    res = generalized_inverse_stability_check(F, c=0.01, l=0.1, C1=0.0, C2=1.0)
    assert res is StabilityResult.HYPOTHESIS_NOT_SATISFIED
    assert not res


def test_checker_has_teeth():
    # A step function whose inverse jumps although the hypothesis would be
    # met for a looser c is flagged once the conclusion alone is tested:
    # here the hypothesis check is bypassed by calling the raw kernel.
    from ustatgl import _numba
    breaks = np.array([0.0, 0.5, 0.5001, 1.0])
    levels = np.array([0.0, 0.1, 0.45, 0.5, 1.0])
    worst = _numba.conclusion_sup(breaks, levels, 0.2, -1.0, 2.0, 1e-12)
    assert worst > 0.3  # inverse moves by ~0.5 while p moves by 0.05-0.35


def test_fuzz_small():
    out = stability_fuzz(2000, seed=3)
    assert out["hypothesis_satisfied"] >= 2000
    assert out["violations"] == 0
    assert out["conclusion_checked"] > 0
