"""Closed-form side: means, the Perron root, tail multipliers, compound-sum
constants and the mean-level type elimination."""
import math
from typing import NamedTuple

import numpy as np

from . import heavy_tails as ht
from . import models as md
from .errors import (DegenerateSubtree, DimensionMismatch, NoConvergence, Supercritical,
                     UnsupportedAnalytic)

RESIDUAL_TOL = 1e-10
SHIFT = 1e-9


class MeanSolution(NamedTuple):
    rbar: np.ndarray
    qbar: np.ndarray
    M: np.ndarray


class TailSolution(NamedTuple):
    d: np.ndarray
    c: np.ndarray


class ReducedMeans(NamedTuple):
    M: np.ndarray
    qbar: np.ndarray


def _square(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if (M < 0).any():
        raise ValueError("mean matrices are nonnegative")
    return M


def spectral_radius(M, tol=1e-10, max_iter=10**5):
    """Perron root of a nonnegative matrix.

    Powers of B = M + eps*I are taken by repeated squaring, so B^(2^j)
    reaches the dominant direction even when M is periodic or reducible
    (the shift makes the Perron root strictly dominant, but only by a
    factor 1 + O(eps)).  The growth rate of B^(2^j) 1 is the estimate.
    ``max_iter`` bounds the number of squarings.
    """
    M = _square(M)
    K = M.shape[0]
    B = M + SHIFT * np.eye(K)
    one = np.ones(K)
    scale = max(np.abs(M).max(), SHIFT)
    A = B / np.abs(B).max()
    logscale = math.log(np.abs(B).max())
    prev = None
    power = 1
    for _ in range(min(max_iter, 1100)):
        A2 = A @ A
        c = np.abs(A2).max()
        v1 = A @ one
        v2 = A2 @ one
        # log |B^(2p) 1| - log |B^p 1|, divided by p
        est = math.exp((math.log(v2.sum()) + logscale - math.log(v1.sum())) / power)
        # a periodic part -rho + eps only fades once power >> rho / eps
        settled = power * SHIFT >= 25.0 * est
        if settled and prev is not None and abs(est - prev) <= tol * max(est, SHIFT):
            rho = est - SHIFT
            # anything this small is what is left of the shift after rounding
            return rho if rho > 1e-13 * scale else 0.0
        prev = est
        A = A2 / c
        logscale = 2 * logscale + math.log(c)
        power *= 2
    raise NoConvergence("spectral radius did not converge")


def _check_subcritical(M):
    if M.shape[0] == 1:
        rho = float(M[0, 0])
    else:
        rho = spectral_radius(M)
    if rho >= 1:
        raise Supercritical(f"spectral radius {rho:.6g} >= 1", rho)
    return rho


def _solve(M, b, what):
    K = M.shape[0]
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if b.shape != (K,):
        raise DimensionMismatch(f"{what} has length {b.size}, expected {K}")
    x = np.linalg.solve(np.eye(K) - M, b)
    res = np.abs(x - b - M @ x).max() if K else 0.0
    if res > RESIDUAL_TOL * max(1.0, np.abs(x).max()):
        # one step of iterative refinement
        x = x + np.linalg.solve(np.eye(K) - M, b + M @ x - x)
    return x


def solve_means(M, qbar):
    """r̄ = (I - M)^-1 q̄."""
    M = _square(M)
    _check_subcritical(M)
    qbar = np.asarray(qbar, dtype=np.float64).reshape(-1)
    return MeanSolution(_solve(M, qbar, "qbar"), qbar, M)


def solve_tail_constants(M, c):
    """d = (I - M)^-1 c."""
    M = _square(M)
    _check_subcritical(M)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    if (c < 0).any():
        raise ValueError("tail constants are nonnegative")
    return TailSolution(_solve(M, c, "c"), c)


def angular_tail_constant(b, mu, a, alpha):
    """b * sum over atoms of weight * (a . theta)_+ ** alpha."""
    if mu is None or b == 0:
        return 0.0
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (mu.dim,):
        raise DimensionMismatch(f"coefficients have length {a.size}, measure dimension {mu.dim}")
    if (a < 0).any():
        raise ValueError("coefficients must be nonnegative")
    dots = mu.points @ a
    return float(b * np.sum(mu.weights * np.where(dots > 0, dots, 0.0) ** alpha))


def compound_tail_constant(cN, cZ, nbar, zbar, alpha):
    """Limit of P(Z_1 + ... + Z_N > x) / F̄(x) when P(N > x) ~ cN F̄(x) and
    P(Z > x) ~ cZ F̄(x)."""
    if min(cN, cZ, nbar, zbar) < 0:
        raise ValueError("inputs must be nonnegative")
    return cN * zbar ** alpha + cZ * nbar


def compound_angular(cN, cZ, nbar, zbar, alpha):
    """MRV data of the pair (N, S) with S = Z_1 + ... + Z_N.

    A big N drags S along at S ~ z̄ N (direction (1, z̄)/(1 + z̄), tail of
    N + S ~ cN (1 + z̄)^alpha F̄), a single big Z moves S alone (direction
    (0, 1), tail cZ n̄ F̄).  Returns the radial multiplier and the measure.
    """
    big_n = cN * (1.0 + zbar) ** alpha
    big_z = cZ * nbar
    total = big_n + big_z
    if total <= 0:
        raise ValueError("need cN + cZ > 0")
    b1 = (1.0 / (1.0 + zbar), zbar / (1.0 + zbar))
    atoms = [(big_n / total, b1), (big_z / total, (0.0, 1.0))]
    return total, md.AngularMeasure.from_masses([(th, w) for w, th in atoms if w > 0])


def extended_angular(model, i=0):
    """MRV data of (Q, N^(1..K), S) for a type-i root, S the total weight
    of her descendants.

    Either the root's own (Q, N) is big, and then S ~ r̄ . N follows along,
    or one descendant's subtree is big and S moves alone (tail
    sum_k m_ik d_k x**-alpha).  Returns the radial multiplier and the measure.
    """
    mm = md.as_multiclass(model)
    ts, alpha, rbar = tail_multipliers(mm)
    jm = mm[i]
    masses = []
    if jm.tail_index() <= alpha:
        t = jm.mrv(alpha)
        if t.angular is not None:
            for w, th in t.angular.atoms:
                th = np.asarray(th)
                ext = np.append(th, th[1:] @ rbar)
                size = ext.sum()
                masses.append((tuple(ext / size), t.b * w * size**alpha))
    one_big = float(mm.M[i] @ ts.d)
    masses.append((_unit_last(mm.K + 2), one_big))
    masses = [(th, w) for th, w in masses if w > 0]
    total = sum(w for _, w in masses)
    if total <= 0:
        raise UnsupportedAnalytic("no regularly varying part in the extended vector")
    return total, md.AngularMeasure.from_masses(masses)


def _unit_last(p):
    return (0.0,) * (p - 1) + (1.0,)


def compound_vector_constant(c, ENs):
    """c_1 E N_1 + ... + c_p E N_p: the one-big-Z part of the tail of
    Z_1^(1) + ... + Z_{N_1}^(1) + ... + Z_{N_p}^(p)."""
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    ENs = np.asarray(ENs, dtype=np.float64).reshape(-1)
    if c.shape != ENs.shape:
        raise DimensionMismatch(f"{c.size} constants but {ENs.size} means")
    if (c < 0).any() or (ENs < 0).any():
        raise ValueError("inputs must be nonnegative")
    return float(c @ ENs)


def reduce_means(M, qbar, order=None):
    """Mean matrix and mean weights after eliminating the last type.

    ``order`` optionally permutes the types first, so that ``order[-1]`` is
    the one eliminated.
    """
    M = _square(M)
    qbar = np.asarray(qbar, dtype=np.float64).reshape(-1)
    if qbar.shape != (M.shape[0],):
        raise DimensionMismatch("qbar length does not match M")
    if M.shape[0] < 2:
        raise DimensionMismatch("need at least two types to eliminate one")
    if order is not None:
        order = np.asarray(order)
        M = M[np.ix_(order, order)]
        qbar = qbar[order]
    mkk = M[-1, -1]
    if mkk >= 1:
        raise DegenerateSubtree(f"m_KK = {mkk:.6g} >= 1: direct-line subtrees are not a.s. finite")
    g = 1.0 / (1.0 - mkk)
    col = M[:-1, -1]
    Mt = M[:-1, :-1] + g * np.outer(col, M[-1, :-1])
    qt = qbar[:-1] + g * col * qbar[-1]
    return ReducedMeans(Mt, qt)


# -- tail constants of models -----------------------------------------------

def class_tail_constants(model, rbar=None):
    """c_i(1, r̄_1, ..., r̄_K) for every type, against the reference tail
    x**-alpha with alpha the smallest tail index of the model.

    Types with no tail at that index get c_i = 0.
    """
    mm = md.as_multiclass(model)
    if rbar is None:
        rbar = solve_means(mm.M, mm.qbar).rbar
    alpha = mm.tail_index()
    if not math.isfinite(alpha):
        raise UnsupportedAnalytic("model has no regularly varying component")
    a = np.concatenate([[1.0], rbar])
    c = np.empty(mm.K)
    for i, jm in enumerate(mm.types):
        if jm.tail_index() > alpha:
            c[i] = 0.0
            continue
        t = jm.mrv(alpha)
        c[i] = angular_tail_constant(t.b, t.angular, a, alpha)
    return c, alpha


def tail_multipliers(model):
    """d with P(R(i) > x) ~ d_i x**-alpha; returns (TailSolution, alpha, r̄)."""
    mm = md.as_multiclass(model)
    ms = solve_means(mm.M, mm.qbar)
    c, alpha = class_tail_constants(mm, ms.rbar)
    return solve_tail_constants(mm.M, c), alpha, ms.rbar


def predicted_tail_multi(model, i, x):
    """d_i x**-alpha."""
    ts, alpha, _ = tail_multipliers(model)
    return float(ts.d[i] * np.asarray(x, dtype=np.float64) ** -alpha)


def _floor_ge(dist, n):
    """P(floor(X) >= n) for integer n >= 1."""
    if dist.integer_valued:
        return dist.tail(n - 1)
    if isinstance(dist, ht.Pareto):
        return dist.tail(n)  # continuous, so P(X >= n) = P(X > n)
    if isinstance(dist, ht.Exponential):
        return dist.tail(n)
    raise UnsupportedAnalytic(f"floor tail of {type(dist).__name__}")


def _independent_pair_tail(Q, N, r, x):
    """P(Q + r floor(N) > x) by summing over the value of floor(N)."""
    if r == 0:
        return Q.tail(x)
    top = int(math.floor(x / r))
    total = _floor_ge(N, top + 1) if top >= 0 else 1.0
    prev = 1.0
    for n in range(0, top + 1):
        nxt = _floor_ge(N, n + 1)
        total += (prev - nxt) * Q.tail(x - r * n)
        prev = nxt
    return total


def _joint(model):
    return model.types[0] if isinstance(model, md.MulticlassModel) else model


def _analytic_pair_tail(jm, a0, a1, x):
    """Closed-form P(a0 Q + a1 N > x), or None.

    Exact for independent pairs, the regular-variation asymptote for MG1
    and atomic models.
    """
    if isinstance(jm, md.Independent) and a0 == 1:
        try:
            return _independent_pair_tail(jm.Q, jm.N[0], a1, x)
        except UnsupportedAnalytic:
            return None
    if isinstance(jm, md.MG1) and type(jm.Q) is ht.Pareto:
        alpha = jm.Q.alpha
        return md.mg1_tail_constant(jm, a0, a1) * jm.Q.tail_weight(alpha) * x ** -alpha
    if isinstance(jm, md.AtomicMRV):
        t = jm.mrv()
        return angular_tail_constant(t.b, t.angular, (a0, a1), t.alpha) * x ** -t.alpha
    return None


def _mc_pair_sample(jm, a0, a1, nsamples, seed):
    q, n = md.sample_vectors(md.as_multiclass(jm, check=False), 0, nsamples, seed=seed)
    return np.sort(a0 * q + a1 * n[:, 0])


def pair_tail(model, a0, a1, x, method="auto", nsamples=10**6, seed=0):
    """P(a0 Q + a1 N > x) for a single-type model.

    ``method="auto"`` uses a closed form when there is one (see
    ``_analytic_pair_tail``) and Monte Carlo otherwise.
    """
    jm = _joint(model)
    if method == "auto":
        v = _analytic_pair_tail(jm, a0, a1, x)
        if v is not None:
            return v
        method = "mc"
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    s = _mc_pair_sample(jm, a0, a1, nsamples, seed)
    return float((s.size - np.searchsorted(s, x, side="right")) / s.size)


def single_tail_predictor(model, rbar=None, nsamples=10**6, method="auto", seed=0):
    """x -> (1 / (1 - n̄)) P(Q + r̄ N > x), drawing any Monte Carlo sample once."""
    jm = _joint(model)
    pm = md.pair_means(jm)
    if rbar is None:
        rbar = pm.qbar / (1.0 - pm.nbar)
    pref = 1.0 / (1.0 - pm.nbar)
    if method == "auto" and _analytic_pair_tail(jm, 1.0, rbar, 1.0) is not None:
        return lambda x: pref * _analytic_pair_tail(jm, 1.0, rbar, x)
    s = _mc_pair_sample(jm, 1.0, rbar, nsamples, seed)
    return lambda x: pref * float((s.size - np.searchsorted(s, x, side="right")) / s.size)


def predicted_tail_single(model, x, nsamples=10**6, method="auto", seed=0, rbar=None):
    """(1 / (1 - n̄)) P(Q + r̄ N > x).

    ``rbar`` replaces the solved mean of R (used for sensitivity checks).
    """
    return single_tail_predictor(model, rbar, nsamples, method, seed)(x)
