"""Acceptance criteria, each at its stated tolerance and sample size.

Every test records one PASS/FAIL line (shown in the terminal summary, or
printed directly when this file is run as a script) before asserting.
"""
import itertools
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from branchtail import asymptotics as A
from branchtail import cli
from branchtail import heavy_tails as ht
from branchtail import models as md
from branchtail import presets
from branchtail import tailstats as T
from branchtail.config import parse
from branchtail.simulate import SimConfig, run_replications, simulate_compound

try:
    from conftest import ACCEPTANCE
except ImportError:  # run as a script
    ACCEPTANCE = []


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def _preset(name, **kw):
    return parse(presets.load_raw(name), **kw)


# -- 1 ----------------------------------------------------------------------

def _random_model(rng):
    K = int(rng.integers(1, 6))
    raw = rng.random((K, K)) * (rng.random((K, K)) < 0.7)
    target = rng.uniform(0.05, 0.95)
    rho = A.spectral_radius(raw) if raw.any() else 0.0
    # nilpotent draws have rho = 0 and any scale is subcritical; keep them O(1)
    rates = raw * (target / rho) if rho > 1e-6 else raw * target
    types = []
    for i in range(K):
        Q = ht.Pareto(1.5, float(rng.uniform(0.5, 2.0)))
        # MG1 rates are per unit of Q: divide out E Q so M has radius `target`
        types.append(md.MG1(Q, tuple(rates[i] / Q.mean())))
    return md.MulticlassModel(types)


def test_c1_linear_algebra_residuals():
    rng = np.random.default_rng(1)
    worst_r = worst_d = 0.0
    for _ in range(1000):
        mm = _random_model(rng)
        ts, alpha, rbar = A.tail_multipliers(mm)
        M, q = mm.M, mm.qbar
        worst_r = max(worst_r, np.abs(rbar - q - M @ rbar).max())
        worst_d = max(worst_d, np.abs(ts.d - ts.c - M @ ts.d).max())
    ok = worst_r <= 1e-10 and worst_d <= 1e-10
    record(1, ok, f"max residual rbar {worst_r:.2e}, d {worst_d:.2e} over 1000 models (tol 1e-10)")
    assert ok


# -- 2 ----------------------------------------------------------------------

def test_c2_wald_identity():
    details, ok = [], True
    for j, nbar in enumerate((0.25, 0.5, 0.75, 0.9)):
        m = md.IndependentPair(ht.Constant(1.0), ht.Poisson(nbar))
        tau = run_replications("tau", m, SimConfig(seed=200 + j, replications=10**6)).values
        se = tau.std(ddof=1) / math.sqrt(tau.size)
        z = (tau.mean() - 1 / (1 - nbar)) / se
        ok &= abs(z) <= 3
        details.append(f"nbar={nbar}: z={z:+.2f}")
    record(2, ok, "; ".join(details) + " (|z| <= 3)")
    assert ok


# -- 3 ----------------------------------------------------------------------

def test_c3_dwass_identity():
    details, ok = [], True
    for name, N in (("Bernoulli(0.5)", ht.Bernoulli(0.5)), ("Poisson(0.75)", ht.Poisson(0.75))):
        m = md.IndependentPair(ht.Constant(1.0), N)
        # distinct seeds: with a shared seed the two are equal path by path
        tau = run_replications("tau", m, SimConfig(seed=301, replications=10**6)).values
        prog = run_replications("progeny", m, SimConfig(seed=302, replications=10**6)).values
        ks = T.ks_two_sample(tau, prog)
        ok &= ks <= 0.005
        details.append(f"{name}: KS={ks:.4f}")
    record(3, ok, "; ".join(details) + " (<= 0.005)")
    assert ok


# -- 4 ----------------------------------------------------------------------

def _bernoulli_tau_law(kmax):
    """P(tau = k) by enumerating every Bernoulli(1/2) step sequence."""
    law = {}
    for k in range(1, kmax + 1):
        hits = 0
        for steps in itertools.product((0, 1), repeat=k):
            s = 0
            for i, n in enumerate(steps, 1):
                s += n - 1
                if s == -1:
                    break
            hits += s == -1 and i == k
        law[k] = hits / 2**k
    return law


def test_c4_exact_small_case():
    law = _bernoulli_tau_law(10)
    m = _preset("bernoulli_progeny").model
    n = 10**6
    tau = run_replications("tau", m, SimConfig(seed=400, replications=n)).values
    worst = 0.0
    for k, p in law.items():
        assert p == 0.5**k
        se = math.sqrt(p * (1 - p) / n)
        worst = max(worst, abs((tau == k).mean() - p) / se)
    ok = worst <= 3
    record(4, ok, f"max |P^(tau=k) - 0.5^k| = {worst:.2f} binomial s.e. over k <= 10 (<= 3)")
    assert ok


# -- 5 ----------------------------------------------------------------------

def _validate(name):
    rc = _preset(name)
    batch = run_replications("R", rc.model, rc.sim, i=rc.validate.type)
    rep = T.ratio_diagnostic(batch.values, cli._predictor(rc), (0.99, 0.999))
    return rep, batch


@pytest.mark.parametrize("name", ["mg1_flagship", "dominant_q", "dominant_n"])
def test_c5_single_class_tail(name):
    rep, batch = _validate(name)
    assert batch.values.size == 10**7
    ratios = rep.ratios()
    ok = bool(np.all((ratios >= 0.8) & (ratios <= 1.2)))
    shown = ", ".join(f"q={g}: x={r.x:.4g} ratio={r.ratio:.3f}" for g, r in zip((0.99, 0.999), rep.rows))
    record(5, ok, f"[{name}] {shown} (band [0.8, 1.2], 1e7 reps)")
    assert ok


# -- 6 ----------------------------------------------------------------------

@pytest.mark.parametrize("i", [0, 1])
def test_c6_multiclass_tail(i):
    rc = _preset("atomic_two_type")
    ts, alpha, _ = A.tail_multipliers(rc.model)
    sim = SimConfig(seed=rc.sim.seed + i, replications=10**7, workers=4)
    vals = run_replications("R", rc.model, sim, i=i).values
    rep = T.ratio_diagnostic(vals, lambda x: ts.d[i] * x ** -alpha, (0.999,))
    r = rep.rows[0]
    ok = 0.75 <= r.ratio <= 1.25
    record(6, ok, f"[type {i + 1}] d={ts.d[i]:.4f} x={r.x:.4g} ratio={r.ratio:.3f} (band [0.75, 1.25])")
    assert ok


# -- 7 ----------------------------------------------------------------------

def test_c7_reduction_soundness():
    rc = _preset("atomic_two_type")
    mm = rc.model
    orig = run_replications("R", mm, SimConfig(seed=701, replications=10**6), i=0).values
    red = run_replications("reduced_R", mm, SimConfig(seed=702, replications=10**6), i=0).values
    ks = T.ks_two_sample(orig, red)

    pairs = run_replications("reduced_pair", mm, SimConfig(seed=703, replications=10**6), i=0).values
    target = A.reduce_means(mm.M, mm.qbar)
    q_err = abs(pairs[:, 0].mean() / target.qbar[0] - 1)
    m_err = abs(pairs[:, 1].mean() / target.M[0, 0] - 1)

    three = _preset("mg1_three_type").model
    Mk, qk = three.M, three.qbar
    while Mk.shape[0] > 1:
        Mk, qk = A.reduce_means(Mk, qk)
    chain = qk[0] / (1 - Mk[0, 0])
    direct = A.solve_means(three.M, three.qbar).rbar[0]

    ok = (ks <= 0.01 and q_err <= 0.02 and m_err <= 0.02 and abs(chain - direct) <= 1e-9
          and abs(target.M[0, 0] - 0.4) < 1e-12 and abs(target.qbar[0] - 1.25) < 1e-12)
    record(7, ok, f"KS={ks:.4f} (<= 0.01); q~ err {q_err:.3%}, m~ err {m_err:.3%} (<= 2%); "
                  f"chained rbar_1 diff {abs(chain - direct):.1e} (<= 1e-9)")
    assert ok


# -- 8 and 9 ----------------------------------------------------------------

N_LAW = ht.ParetoInteger(1.5, 1.0)
Z_LAW = ht.Pareto(1.5, 1.0)


@pytest.fixture(scope="module")
def compound_sample():
    return simulate_compound(N_LAW, Z_LAW, SimConfig(seed=801, replications=10**7, workers=4))


def test_c8_compound_constant(compound_sample):
    _, s = compound_sample
    alpha = 1.5
    # F̄(x) = x^-1.5; P(N > x) ~ F̄(x) and P(Z > x) = F̄(x), so cN = cZ = 1
    c = A.compound_tail_constant(1.0, 1.0, N_LAW.mean(), Z_LAW.mean(), alpha)
    r = T.ratio_diagnostic(s, lambda x: c * x ** -alpha, (0.999,)).rows[0]
    ok = abs(r.ratio - 1) <= 0.15
    record(8, ok, f"c={c:.4f} x={r.x:.4g} ratio={r.ratio:.3f} (within 15%)")
    assert ok


def test_c9_angular_atoms(compound_sample):
    n, s = compound_sample
    cN = cZ = 1.0
    nbar, zbar = N_LAW.mean(), Z_LAW.mean()
    b1 = (1 / (1 + zbar), zbar / (1 + zbar))
    b2 = (0.0, 1.0)
    # masses exactly as stated by the criterion
    w1 = cN / (cN + cZ * nbar)
    w2 = cZ * nbar / (cN + cZ * nbar)
    stated = md.AngularMeasure(((w1, b1), (w2, b2)))
    V = np.column_stack([n, s])
    thr = float(np.quantile(V.sum(axis=1), 0.999))
    est = T.empirical_angular(V, thr, atoms=stated)
    (d1, m1), (d2, m2) = T.nearest_atoms(est, stated)
    atoms_ok = d1 <= 0.05 and d2 <= 0.05
    mass_ok = abs(m1 - w1) <= 0.05 and abs(m2 - w2) <= 0.05
    ok = atoms_ok and mass_ok
    record(9, ok, f"atom L1 distances {d1:.3f}, {d2:.3f} (<= 0.05); masses {m1:.3f}, {m2:.3f} "
                  f"vs {w1:.3f}, {w2:.3f} (within 0.05)")
    assert ok


# -- 10 ---------------------------------------------------------------------

def test_c10_nagaev_uniformity():
    k = 200
    _, s = simulate_compound(None, Z_LAW, SimConfig(seed=1001, replications=10**7, workers=4), fixed_count=k)
    s.sort()
    zbar = Z_LAW.mean()
    details, ok = [], True
    for y in (k, 2 * k, 4 * k):
        emp = T.empirical_ccdf(s, k * zbar + y, assume_sorted=True)
        ratio = emp / (k * Z_LAW.tail(y))
        ok &= 0.7 <= ratio <= 1.3
        details.append(f"y/k={y // k}: {ratio:.3f}")
    record(10, ok, "; ".join(details) + " (band [0.7, 1.3])")
    assert ok


# -- 11 ---------------------------------------------------------------------

def _run(args, tmp):
    return subprocess.run([sys.executable, "-m", "branchtail", *args, "--quiet"], cwd=tmp,
                          capture_output=True, check=False)


def test_c11_determinism(tmp_path):
    cfg = presets.load_raw("atomic_two_type")
    cfg["sim"]["replications"] = 20000
    cfg["reduce"] = {"samples": 2000}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outputs = {}
    for workers in (1, 4):
        for rerun in (0, 1):
            tag = f"w{workers}r{rerun}"
            files = {}
            for cmd in ("simulate", "validate", "reduce", "analyze"):
                out = tmp_path / f"{cmd}_{tag}.txt"
                res = _run([cmd, "--config", str(path), "--out", str(out), "--workers", str(workers)], tmp_path)
                assert res.returncode in (0, 5), res.stderr
                files[cmd] = out.read_bytes()
            files["meta"] = (tmp_path / f"simulate_{tag}.txt.meta.json").read_bytes()
            outputs[tag] = files
    ref = outputs["w1r0"]
    ok = all(o == ref for o in outputs.values())
    record(11, ok, "simulate/validate/reduce/analyze outputs byte-identical across reruns and workers {1, 4}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
