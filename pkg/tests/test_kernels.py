import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ustatgl.kernels import (BUILTIN_KERNELS, analytic_model, analytic_model_uniform_cdf_average,
                             analytic_model_uniform_qn, analytic_model_uniform_winsorized,
                             builtin_kernel, iid_gamma)

from oracles import uniform_qn_gamma

reals = st.floats(-1e3, 1e3, allow_nan=False)
NAMES = ["variance", "gini", "qn", "cdf_average", "winsorized_variance"]


def test_qn_indicator_values():
    h = builtin_kernel("qn")
    assert h(0.0, 1.0, 1.0) == 1.0
    assert h(0.0, 1.0, 0.5) == 0.0


def test_cdf_average_value():
    assert builtin_kernel("cdf_average")(2.0, 5.0, 3.0) == 0.5


def test_winsorized_is_qn_at_sqrt_2t():
    h = builtin_kernel("winsorized-variance")
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 2000))
    t = rng.uniform(0, 3, 2000)
    assert np.array_equal(h(x, y, t), (np.abs(x - y) <= np.sqrt(2 * t)).astype(float))


def test_names_accept_both_spellings():
    assert builtin_kernel("cdf_average") is builtin_kernel("cdf-average")
    assert set(BUILTIN_KERNELS) == {"variance", "gini", "qn", "cdf-average", "winsorized-variance"}


def test_unknown_kernel():
    with pytest.raises(ValueError, match="unknown kernel"):
        builtin_kernel("median")


@pytest.mark.parametrize("name", NAMES)
@given(x=reals, y=reals, t=reals)
def test_symmetry(name, x, y, t):
    h = builtin_kernel(name)
    assert h(x, y, t) == h(y, x, t)


@pytest.mark.parametrize("name", NAMES)
@given(x=reals, y=reals, t=reals, dt=st.floats(0, 1e3))
def test_monotone_and_bounded(name, x, y, t, dt):
    h = builtin_kernel(name)
    assert h(x, y, t) <= h(x, y, t + dt)
    assert abs(h(x, y, t)) <= h.bounded_by


@pytest.mark.parametrize("name", NAMES)
def test_limits_in_t(name):
    h = builtin_kernel(name)
    x, y = np.random.default_rng(1).normal(size=(2, 100))
    assert np.all(h(x, y, -1e12) == 0.0)
    assert np.all(h(x, y, 1e12) == 1.0)


@pytest.mark.parametrize("name", ["variance", "gini", "qn", "winsorized-variance"])
@given(x=reals, y=reals, t=reals)
def test_pair_statistic_fast_path(name, x, y, t):
    k = builtin_kernel(name)
    assert k(x, y, t) == float(k.pair_statistic(x, y) <= t)
    assert k.distance_map(abs(x - y)) == k.pair_statistic(x, y)


def test_uniform_qn_model_values():
    m = analytic_model_uniform_qn()
    assert m.U(0.0) == 0.0 and m.U(1.0) == 1.0
    assert m.U(0.5) == pytest.approx(0.75, abs=1e-15)
    assert m.quantile(0.75) == pytest.approx(0.5, abs=1e-15)
    assert m.u(0.5) == 1.0 and m.u(0.0) == 2.0


@pytest.mark.parametrize("factory", [analytic_model_uniform_qn, analytic_model_uniform_cdf_average,
                                     analytic_model_uniform_winsorized])
def test_model_derivative_matches(factory):
    m = factory()
    a, b = m.interval
    t = np.linspace(a, b, 102)[1:-1]
    eps = 1e-6
    num = (m.U(t + eps) - m.U(t - eps)) / (2 * eps)
    assert np.max(np.abs(num - m.u(t))) < 1e-6
    assert np.all(m.u(t) > 0)
    assert np.all(np.diff(m.U(np.linspace(-1, 2, 500))) >= 0)


@pytest.mark.parametrize("factory", [analytic_model_uniform_qn, analytic_model_uniform_cdf_average,
                                     analytic_model_uniform_winsorized])
def test_model_quantile_inverts(factory):
    m = factory()
    p = np.linspace(0.05, 0.95, 19)
    assert np.allclose(m.U(m.quantile(p)), p, atol=1e-12)


@pytest.mark.parametrize("factory", [analytic_model_uniform_qn, analytic_model_uniform_cdf_average,
                                     analytic_model_uniform_winsorized])
def test_h1_is_centred(factory):
    m = factory()
    x = np.random.default_rng(3).random(200_000)
    for t in m.quantile(np.array([0.2, 0.5, 0.8])):
        vals = m.h1(x, t)
        assert abs(vals.mean()) < 4 * vals.std() / math.sqrt(x.size)


def test_h1_matches_monte_carlo_definition():
    # h1(x, t) = E h(x, Y, t) - U(t)
    m = analytic_model_uniform_qn()
    h = builtin_kernel("qn")
    y = np.random.default_rng(4).random(400_000)
    for x0, t in [(0.1, 0.3), (0.5, 0.5), (0.9, 0.2)]:
        mc = h(x0, y, t).mean() - m.U(t)
        assert mc == pytest.approx(m.h1(x0, t), abs=5e-3)


def test_uniform_variation_bound():
    # interval of width 2 sqrt(2) eps and u <= 2 give C = 4 sqrt(2)
    m = analytic_model_uniform_qn()
    t = np.linspace(0, 1, 201)
    for eps in (1e-3, 1e-2, 0.05):
        d = math.sqrt(2) * eps
        assert np.all(np.abs(m.U(t + d) - m.U(t - d)) <= 4 * math.sqrt(2) * eps + 1e-15)


def test_iid_gamma_against_direct_quadrature():
    g = iid_gamma(analytic_model_uniform_qn())
    for t in (0.1, 0.2679491924311228, 0.5, 0.8):
        assert g(t, t) == pytest.approx(uniform_qn_gamma(t), rel=1e-9)
    assert g(0.5, 0.5) == pytest.approx(1 / 12, rel=1e-10)


def test_cdf_average_gamma_is_brownian_bridge():
    g = iid_gamma(analytic_model_uniform_cdf_average())
    for t, s in [(0.25, 0.75), (0.5, 0.5), (0.1, 0.3)]:
        assert g(t, s) == pytest.approx(min(t, s) - t * s, abs=1e-12)


def test_analytic_model_registry():
    assert analytic_model("iid_uniform", "qn").name == analytic_model_uniform_qn().name
    with pytest.raises(ValueError):
        analytic_model("ar1", "qn")
