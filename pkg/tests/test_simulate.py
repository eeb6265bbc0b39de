import math

import numpy as np
import pytest

from branchtail import asymptotics as A
from branchtail import heavy_tails as ht
from branchtail import models as md
from branchtail import presets
from branchtail import simulate as S
from branchtail import tailstats as T
from branchtail.config import parse
from branchtail.errors import ConfigError, DimensionMismatch, IndexOutOfRange
from branchtail.kernels.rng import RandomStream

SINGLE = ["mg1_flagship", "dominant_q", "dominant_n", "atomic_single", "no_offspring", "bernoulli_progeny"]


def _preset_model(name):
    return parse(presets.load_raw(name)).model


def _bernoulli(q=ht.Constant(1.0), p=0.5):
    return md.IndependentPair(q, ht.Bernoulli(p))


def test_sim_config_checks():
    for kw in (dict(cap=0), dict(replications=0), dict(workers=0), dict(seed=-1), dict(seed=2**64)):
        with pytest.raises(ConfigError):
            S.SimConfig(**kw)


# -- single replications ----------------------------------------------------

def test_r_single_without_offspring(backend):
    m = md.IndependentPair(ht.Pareto(1.5, 1.0), ht.Constant(0.0))
    rs = RandomStream(1)
    out = S.simulate_R_single(m, rs, backend=backend)
    assert out.tree_size == 1 and not out.truncated
    assert out.value >= 1.0
    one = md.IndependentPair(ht.Constant(1.0), ht.Constant(0.0))
    assert {S.simulate_R_single(one, rs, backend=backend).value for _ in range(10)} == {1.0}


def test_tau_without_offspring(backend):
    m = md.IndependentPair(ht.Pareto(1.5), ht.Constant(0.0))
    rs = RandomStream(2)
    assert {S.simulate_tau(m, rs, backend=backend).value for _ in range(10)} == {1.0}


def _geometric_check(values):
    n = values.size
    for k in range(1, 8):
        p = 0.5**k
        assert abs((values == k).mean() - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_bernoulli_tree_and_walk_are_geometric():
    cfg = S.SimConfig(seed=3, replications=2 * 10**5)
    _geometric_check(S.run_replications("R", _bernoulli(), cfg).values)
    _geometric_check(S.run_replications("tau", _bernoulli(), S.SimConfig(seed=4, replications=2 * 10**5)).values)


def test_tau_mean_is_wald():
    m = md.IndependentPair(ht.Constant(1.0), ht.Poisson(0.75))
    v = S.run_replications("tau", m, S.SimConfig(seed=5, replications=10**6)).values
    assert abs(v.mean() / 4.0 - 1) <= 0.02


def test_v_special_cases(backend):
    m = md.IndependentPair(ht.Pareto(1.5), ht.Poisson(0.6))
    for seed in range(20):
        tau = S.simulate_tau(m, RandomStream(seed), backend=backend)
        v10 = S.simulate_V(m, 1.0, 0.0, RandomStream(seed), backend=backend)
        assert v10.value == tau.value
    unit = md.IndependentPair(ht.Constant(1.0), ht.Poisson(0.6))
    for seed in range(20):
        assert (S.simulate_V(unit, 0.0, 1.0, RandomStream(seed), backend=backend).value
                == S.simulate_tau(unit, RandomStream(seed), backend=backend).value)
    with pytest.raises(ValueError):
        S.simulate_V(m, 0.0, 0.0, RandomStream(0))


def test_v01_is_r_pathwise_on_shared_keys():
    # same key, same draws: V(0, 1) is the tree weight summed in walk order
    m = _preset_model("mg1_flagship")
    cfg = S.SimConfig(seed=6, replications=10**4)
    r = S.run_replications("R", m, cfg).values
    v = S.run_replications("V", m, cfg, k0=0.0, k1=1.0).values
    np.testing.assert_allclose(v, r, rtol=1e-12)


@pytest.mark.parametrize("name", SINGLE)
def test_v01_and_r_agree_in_law(name):
    m = _preset_model(name)
    r = S.run_replications("R", m, S.SimConfig(seed=31, replications=10**6)).values
    v = S.run_replications("V", m, S.SimConfig(seed=32, replications=10**6)).values
    assert T.ks_two_sample(r, v) <= 0.005


def test_r_multi_degenerate_cases(backend):
    mm = md.MulticlassModel([md.Independent(ht.Pareto(1.5), (ht.Constant(0.0),) * 2)] * 2)
    out = S.simulate_R_multi(mm, 1, RandomStream(7), backend=backend)
    assert out.tree_size == 1
    m = _preset_model("mg1_flagship")
    for seed in range(10):
        a = S.simulate_R_single(m, RandomStream(seed), backend=backend)
        b = S.simulate_R_multi(m, 0, RandomStream(seed), backend=backend)
        assert a == b
    with pytest.raises(IndexOutOfRange):
        S.simulate_R_multi(m, 1, RandomStream(0))
    with pytest.raises(DimensionMismatch):
        S.simulate_tau(_preset_model("atomic_two_type"), RandomStream(0))


@pytest.mark.parametrize("name", ["mg1_three_type", "atomic_two_type"])
def test_multiclass_means(name):
    mm = _preset_model(name)
    rbar = A.solve_means(mm.M, mm.qbar).rbar
    for i in range(mm.K):
        v = S.run_replications("R", mm, S.SimConfig(seed=40 + i, replications=10**6), i=i).values
        assert abs(v.mean() / rbar[i] - 1) <= 0.02, (i, v.mean(), rbar[i])


# -- reduced pairs ----------------------------------------------------------

def test_reduced_pair_without_type_k_children():
    mm = md.MulticlassModel([md.Independent(ht.Constant(2.0), (ht.Poisson(0.3), ht.Constant(0.0))),
                             md.Independent(ht.Constant(1.0), (ht.Poisson(0.3), ht.Constant(0.0)))])
    for seed in range(20):
        rs = RandomStream(seed)
        q, n = S.simulate_reduced_pair(mm, 0, rs)
        key = RandomStream(seed).next_key()
        tr = S.reduced_pair_trace(2, 0, S.ModelDraws(mm, key))
        assert q == 2.0 and n.tolist() == [tr.counts[0]]


def test_scripted_two_type_tree():
    # ancestor of type 1 with two type-2 daughters; the first heads a direct
    # line of four (herself, two daughters, one granddaughter), the second has
    # no type-2 offspring.  Type-1 children inside the first line: one from
    # her and one from her first daughter.
    root = (1.0, [1, 2])
    line = [
        (0.5, [1, 2]),   # m
        (0.25, [1, 1]),  # her upper daughter
        (0.125, [0, 0]),
        (0.0625, [0, 0]),
        (2.0, [0, 0]),   # the other direct-line daughter of the ancestor
    ]
    tr = S.reduced_pair_trace(2, 0, S.ScriptedDraws(root, line))
    assert tr.counts[1] == 2
    assert tr.subtree_sizes == (4, 1)
    assert tr.subtree_counts == ((2,), (0,))
    q, n = S.reduced_pair_from_trace(tr)
    assert q == pytest.approx(1.0 + 0.5 + 0.25 + 0.125 + 0.0625 + 2.0)
    assert n.tolist() == [3]


def test_model_draws_match_kernel():
    mm = _preset_model("mg1_three_type")
    for seed in range(30):
        key = RandomStream(seed).next_key()
        q1, n1 = S.reduced_pair_from_trace(S.reduced_pair_trace(3, 1, S.ModelDraws(mm, key)))
        q2, n2 = S.simulate_reduced_pair(mm, 1, RandomStream(seed))
        assert q1 == pytest.approx(q2, rel=1e-12)
        assert n1.tolist() == n2.tolist()


def test_reduced_pair_means():
    mm = _preset_model("mg1_three_type")
    red = A.reduce_means(mm.M, mm.qbar)
    for i in range(2):
        rows = S.run_replications("reduced_pair", mm, S.SimConfig(seed=50 + i, replications=10**6), i=i).values
        assert abs(rows[:, 0].mean() / red.qbar[i] - 1) <= 0.02
        np.testing.assert_allclose(rows[:, 1:].mean(axis=0), red.M[i], rtol=0.02)


def test_reduced_pair_rejects_last_type():
    mm = _preset_model("mg1_three_type")
    with pytest.raises(IndexOutOfRange):
        S.simulate_reduced_pair(mm, 2, RandomStream(0))
    with pytest.raises(DimensionMismatch):
        S.simulate_reduced_pair(_preset_model("mg1_flagship"), 0, RandomStream(0))


# -- batches ----------------------------------------------------------------

def test_replications_split_and_rerun():
    m = _preset_model("mg1_flagship")
    cfg = S.SimConfig(seed=8, replications=8, workers=2)
    assert S._chunks(8, 2) == [(0, 4), (4, 8)]
    a = S.run_replications("R", m, cfg)
    b = S.run_replications("R", m, cfg)
    assert a.values.tobytes() == b.values.tobytes()


@pytest.mark.parametrize("kind", ["R", "progeny", "tau", "V"])
def test_worker_count_does_not_change_values(kind):
    m = _preset_model("mg1_flagship")
    a = S.run_replications(kind, m, S.SimConfig(seed=9, replications=5000, workers=1))
    b = S.run_replications(kind, m, S.SimConfig(seed=9, replications=5000, workers=4))
    assert a.values.tobytes() == b.values.tobytes()
    assert np.array_equal(a.sizes, b.sizes)


def test_flagship_truncation_fraction():
    m = _preset_model("mg1_flagship")
    batch = S.run_replications("R", m, S.SimConfig(seed=10, replications=10**6, cap=10**7))
    assert batch.truncation_fraction < 1e-4


def test_truncation_flags_and_sizes():
    m = md.IndependentPair(ht.Constant(1.0), ht.Poisson(0.95))
    for kind in ("R", "tau"):
        batch = S.run_replications(kind, m, S.SimConfig(seed=11, replications=2000, cap=5))
        t = batch.truncated
        assert t.any() and (~t).any()
        assert (batch.sizes[t] == 5).all()
        assert (batch.sizes[~t] <= 5).all()
        assert (batch.values >= 0).all()


def test_unknown_kind():
    with pytest.raises(ValueError):
        S.run_replications("bogus", _preset_model("mg1_flagship"), S.SimConfig())


@pytest.mark.parametrize("name", presets.names())
def test_backends_agree_on_presets(name):
    if name == "supercritical_mg1":
        pytest.skip("not simulable")
    mm = parse(presets.load_raw(name)).model
    kinds = ["R", "progeny"] + (["tau", "V"] if mm.K == 1 else ["reduced_R", "reduced_pair"])
    for kind in kinds:
        out = [S.run_replications(kind, mm, S.SimConfig(seed=12, replications=3000, cap=10**5, backend=be),
                                  i=0, k0=0.5, k1=2.0) for be in ("numba", "numpy")]
        np.testing.assert_allclose(out[0].values, out[1].values, rtol=1e-12)
        assert np.array_equal(out[0].sizes, out[1].sizes)
        assert np.array_equal(out[0].truncated, out[1].truncated)


def test_backends_agree_on_large_multitype_trees():
    # near-critical, so many trees outgrow the initial queue
    mm = md.MulticlassModel([md.MG1(ht.Pareto(1.5), (0.16, 0.16)), md.MG1(ht.Pareto(1.5), (0.165, 0.165))])
    assert A.spectral_radius(mm.M) > 0.95
    cfg = dict(seed=13, replications=400, cap=10**6)
    a = S.run_replications("R", mm, S.SimConfig(backend="numba", **cfg))
    b = S.run_replications("R", mm, S.SimConfig(backend="numpy", **cfg))
    assert a.sizes.max() > 1024
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12)
    assert np.array_equal(a.sizes, b.sizes)


def test_compound_and_extended_vectors():
    n, s = S.simulate_compound(ht.Poisson(2.0), ht.Constant(1.5), S.SimConfig(seed=14, replications=1000))
    np.testing.assert_allclose(s, 1.5 * n)
    n, s = S.simulate_compound(None, ht.Constant(1.0), S.SimConfig(seed=14, replications=10), fixed_count=3)
    assert n.tolist() == [3] * 10 and s.tolist() == [3.0] * 10
    m = _preset_model("mg1_flagship")
    cfg = S.SimConfig(seed=15, replications=2000)
    V = S.extended_vectors(m, cfg)
    r = S.run_replications("R", m, cfg).values
    np.testing.assert_allclose(V[:, 0] + V[:, -1], r, rtol=1e-10)
    assert V.shape == (2000, 3)
