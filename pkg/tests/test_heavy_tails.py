import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from branchtail import heavy_tails as ht
from branchtail.errors import InfiniteMean, UnsupportedAnalytic
from branchtail.kernels.rng import RandomStream


def test_pareto_tail_examples():
    p = ht.Pareto(1.5, 1.0)
    assert ht.tail(p, 4.0) == pytest.approx(0.125, rel=1e-15)
    assert ht.tail(p, 0.5) == 1.0


def test_constant_tail_is_a_step():
    c = ht.Constant(3.0)
    assert ht.tail(c, 2.0) == 1.0
    assert ht.tail(c, 3.0) == 0.0


def test_tail_rejects_negative_x():
    with pytest.raises(ValueError):
        ht.tail(ht.Pareto(1.5), -1.0)


def test_empirical_tail_is_not_analytic():
    with pytest.raises(UnsupportedAnalytic):
        ht.tail(ht.Empirical((1.0, 2.0)), 1.0)


def test_inverse_transform_examples():
    assert ht.quantile(ht.Pareto(1.5, 1.0), 0.25) == pytest.approx(0.25 ** (-2 / 3))
    assert ht.quantile(ht.Pareto(1.5, 1.0), 0.25) == pytest.approx(2.5198, abs=1e-4)
    assert ht.quantile(ht.ParetoInteger(1.5, 1.0), 0.25) == 2.0
    assert ht.quantile(ht.Constant(3.0), 0.731) == 3.0


def test_sample_types():
    rs = RandomStream(3)
    assert isinstance(ht.sample(ht.ParetoInteger(1.5), rs), int)
    assert isinstance(ht.sample(ht.Pareto(1.5), rs), float)
    assert ht.sample(ht.Constant(3.0), rs) == 3


def test_means():
    assert ht.mean(ht.Pareto(1.5, 1.0)) == pytest.approx(3.0)
    assert ht.mean(ht.Exponential(2.0)) == 0.5
    with pytest.raises(InfiniteMean):
        ht.mean(ht.Pareto(0.9, 1.0))


def test_pareto_ks_against_cdf():
    x = ht.sample(ht.Pareto(1.5, 1.0), RandomStream(11), size=10**5)
    d = stats.kstest(x, lambda t: 1 - np.minimum(1.0, t ** -1.5)).statistic
    assert d <= 0.01


def test_pareto_sample_mean():
    x = ht.sample(ht.Pareto(1.5, 1.0), RandomStream(12), size=10**6)
    assert abs(x.mean() / 3.0 - 1) <= 0.05


def test_pareto_integer_is_floor_of_continuous_draw():
    a = ht.sample(ht.Pareto(1.5, 2.0), RandomStream(5), size=10**4)
    b = ht.sample(ht.ParetoInteger(1.5, 2.0), RandomStream(5), size=10**4)
    assert np.array_equal(np.floor(a), b)


def _floor_mean_oracle(alpha, xm, b, c, J=10**6):
    # E floor(cX) = sum_{j >= 1} P(cX >= j), truncated with an integral remainder
    j = np.arange(1, J + 1, dtype=np.float64)
    s = c * xm
    p = np.where(j < s, 1 - (1 - b) * j / s, b * (s / j) ** alpha)
    tail = b * s**alpha * (J + 0.5) ** (1 - alpha) / (alpha - 1)
    return p.sum() + tail


@pytest.mark.parametrize("alpha,xm,b,c", [(1.5, 1.0, 1.0, 1.0), (1.5, 1.0, 0.05, 1.0), (2.5, 3.7, 0.4, 0.6),
                                          (1.5, 1.0, 1.0, 1 / 3)])
def test_floor_mean_against_direct_sum(alpha, xm, b, c):
    got = ht.Pareto(alpha, xm, b).floor_mean(c)
    assert got == pytest.approx(_floor_mean_oracle(alpha, xm, b, c), rel=1e-7)


def test_pareto_integer_mean_is_zeta():
    assert ht.ParetoInteger(1.5, 1.0).mean() == pytest.approx(special.zeta(1.5), rel=1e-12)


def test_exponential_floor_mean():
    e = ht.Exponential(0.7)
    j = np.arange(1, 400)
    assert ht.floor_mean(e, 1.0) == pytest.approx(np.exp(-0.7 * j).sum(), rel=1e-12)


def test_poisson_tail_matches_scipy():
    p = ht.Poisson(2.5)
    for x in (0.0, 1.5, 4.0, 10.0):
        assert p.tail(x) == pytest.approx(stats.poisson.sf(math.floor(x), 2.5))


def test_tail_weight_and_index():
    assert ht.tail_weight(ht.Pareto(1.5, 2.0, 0.5), 1.5) == pytest.approx(0.5 * 2**1.5)
    assert ht.tail_weight(ht.Pareto(2.5), 1.5) == 0.0
    assert ht.tail_weight(ht.Poisson(1.0), 1.5) == 0.0
    assert ht.tail_index(ht.Exponential(1.0)) == math.inf
    with pytest.raises(ValueError):
        ht.tail_weight(ht.Pareto(1.2), 1.5)


def test_rejects_bad_parameters():
    for bad in (lambda: ht.Pareto(0.0), lambda: ht.Pareto(1.5, -1.0), lambda: ht.Pareto(1.5, 1.0, 2.0),
                lambda: ht.Exponential(0.0), lambda: ht.Bernoulli(1.5), lambda: ht.Constant(-1.0),
                lambda: ht.Empirical(())):
        with pytest.raises(ValueError):
            bad()


def test_backends_draw_the_same(backend):
    for d in (ht.Pareto(1.5, 2.0, 0.3), ht.ParetoInteger(1.5), ht.Exponential(2.0), ht.Poisson(3.0),
              ht.Poisson(40.0), ht.Bernoulli(0.3), ht.Constant(2.0), ht.Empirical((1.0, 5.0, 7.0))):
        x = ht.sample(d, RandomStream(9), size=2000, backend=backend)
        y = ht.sample(d, RandomStream(9), size=2000, backend="numpy")
        np.testing.assert_allclose(x, y, rtol=1e-13)


@pytest.mark.parametrize("mu", [0.3, 4.0, 25.0, 300.0])
def test_poisson_sampler_law(mu):
    x = ht.sample(ht.Poisson(mu), RandomStream(21), size=2 * 10**5)
    assert abs(x.mean() - mu) <= 4 * math.sqrt(mu / x.size)
    lo, hi = stats.poisson.ppf([0.01, 0.99], mu)
    k = np.arange(int(lo), int(hi) + 1)
    emp = np.array([(x == v).mean() for v in k])
    assert np.abs(emp - stats.poisson.pmf(k, mu)).max() <= 5 * math.sqrt(0.25 / x.size)


dists = st.one_of(
    st.builds(ht.Pareto, st.floats(0.3, 5), st.floats(0.1, 10), st.floats(0, 1)),
    st.builds(ht.ParetoInteger, st.floats(0.3, 5), st.floats(0.1, 10), st.floats(0, 1)),
    st.builds(ht.Exponential, st.floats(0.01, 10)),
    st.builds(ht.Poisson, st.floats(0, 50)),
    st.builds(ht.Bernoulli, st.floats(0, 1)),
    st.builds(ht.Constant, st.floats(0, 100)),
)


@given(dists, st.floats(0, 1e4), st.floats(0, 1e4))
def test_tail_is_a_survival_function(d, x, y):
    lo, hi = min(x, y), max(x, y)
    assert 0.0 <= d.tail(hi) <= d.tail(lo) <= 1.0


@given(dists)
def test_dict_round_trip(d):
    assert ht.from_dict(d.to_dict()) == d


@settings(max_examples=50)
@given(st.floats(0.5, 4), st.floats(0.1, 5), st.floats(0.01, 1), st.floats(1e-9, 1 - 1e-9))
def test_quantile_inverts_tail(alpha, xm, b, u):
    p = ht.Pareto(alpha, xm, b)
    x = p.quantile(u)
    if u <= b:
        # the Pareto part: u is exactly the tail probability of the draw
        assert p.tail(x) == pytest.approx(u, rel=1e-9, abs=1e-12)
    else:
        assert 0.0 <= x < xm
