"""Vectorised numpy kernels.

Same streams and same algorithms as :mod:`numba_impl`, organised generation
by generation instead of node by node.  Uniforms and integer draws agree
exactly.  Continuous draws can differ in the last ulp (numpy and LLVM use
different pow/log routines) and sums are accumulated in a different order,
so floating results agree to rounding only.
"""
import numpy as np
from scipy.special import gammaln

from . import codes as C
from .rng import child_key_vec, sub_base_vec, uniform_vec, SLOT_SHIFT


def _slot(comp, draw=0):
    comp = np.asarray(comp, dtype=np.uint64)
    return (comp << np.uint64(SLOT_SHIFT)) + np.uint64(draw)


def pareto_quantile(u, alpha, xm, b):
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    tail = u <= b
    out[tail] = xm * (u[tail] / b) ** (-1.0 / alpha)
    if not tail.all():
        out[~tail] = xm * (u[~tail] - b) / (1.0 - b)
    return out


def poisson(mu, keys, comp):
    mu = np.broadcast_to(np.asarray(mu, dtype=np.float64), keys.shape)
    comp = np.broadcast_to(np.asarray(comp, dtype=np.uint64), keys.shape)
    out = np.zeros(keys.shape, dtype=np.int64)

    small = (mu > 0) & (mu < C.POISSON_INVERSION_MAX)
    if small.any():
        idx = np.flatnonzero(small)
        m = mu[idx]
        u = uniform_vec(keys[idx], _slot(comp[idx]))
        p = np.exp(-m)
        cdf = p.copy()
        k = np.zeros(idx.size, dtype=np.int64)
        act = np.flatnonzero(u > cdf)
        while act.size:
            k[act] += 1
            p[act] *= m[act] / k[act]
            cdf[act] += p[act]
            act = act[(u[act] > cdf[act]) & (k[act] < 1000)]
        out[idx] = k

    big = mu >= C.POISSON_INVERSION_MAX
    if big.any():
        idx = np.flatnonzero(big)
        m = mu[idx]
        kk = keys[idx]
        cc = comp[idx]
        slam = np.sqrt(m)
        loglam = np.log(m)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        invalpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2.0)
        res = np.zeros(idx.size, dtype=np.int64)
        act = np.arange(idx.size)
        j = 0
        while act.size:
            U = uniform_vec(kk[act], _slot(cc[act], j)) - 0.5
            V = uniform_vec(kk[act], _slot(cc[act], j + 1))
            j += 2
            us = 0.5 - np.abs(U)
            k = np.floor((2.0 * a[act] / us + b[act]) * U + m[act] + 0.43)
            fast = (us >= 0.07) & (V <= vr[act])
            reject = (k < 0) | ((us < 0.013) & (V > us))
            with np.errstate(divide="ignore", invalid="ignore"):
                slow = (~fast & ~reject) & (
                    np.log(V) + np.log(invalpha[act]) - np.log(a[act] / (us * us) + b[act])
                    <= -m[act] + k * loglam[act] - gammaln(k + 1.0))
            ok = fast | slow
            res[act[ok]] = k[ok].astype(np.int64)
            act = act[~ok]
        out[idx] = res
    return out


def sample_dist(d, pool, keys, comp=0):
    keys = np.asarray(keys, dtype=np.uint64)
    kind = int(d[0])
    if kind == C.POISSON:
        return poisson(d[1], keys, comp).astype(np.float64)
    if kind == C.CONST:
        return np.full(keys.shape, d[1])
    u = uniform_vec(keys, _slot(comp))
    if kind == C.PARETO:
        return pareto_quantile(u, d[1], d[2], d[3])
    if kind == C.PARETO_INT:
        return np.floor(pareto_quantile(u, d[1], d[2], d[3]))
    if kind == C.EXPONENTIAL:
        return -np.log(u) / d[1]
    if kind == C.BERNOULLI:
        return np.where(u < d[1], 1.0, 0.0)
    off, n = int(d[1]), int(d[2])
    i = np.minimum((u * n).astype(np.int64), n - 1)
    return pool[off + i]


def draw_nodes(P, types, keys):
    """Vectorised joint draw: returns q (m,) and counts (m, K)."""
    keys = np.asarray(keys, dtype=np.uint64)
    types = np.asarray(types, dtype=np.int64)
    m, K = keys.size, P.K
    q = np.empty(m)
    n = np.zeros((m, K), dtype=np.int64)
    for t in np.unique(types):
        sel = np.flatnonzero(types == t)
        ks = keys[sel]
        jk = P.jkind[t]
        if jk == C.ATOMIC:
            qd = P.qd[t]
            rad = pareto_quantile(uniform_vec(ks, _slot(0, 0)), qd[1], qd[2], qd[3])
            u = uniform_vec(ks, _slot(0, 1))
            stride = K + 2
            na = P.an[t]
            cumw = P.pool[P.aoff[t] + stride * np.arange(na)]
            a = np.minimum(np.searchsorted(cumw, u, side="left"), na - 1)
            th = P.aoff[t] + a * stride + 1
            q[sel] = rad * P.pool[th]
            for k in range(K):
                n[sel, k] = np.floor(rad * P.pool[th + 1 + k]).astype(np.int64)
        elif jk == C.TABLE:
            rows = P.tn[t]
            row = np.minimum((uniform_vec(ks, _slot(0, 0)) * rows).astype(np.int64), rows - 1)
            base = P.toff[t] + row * (K + 1)
            q[sel] = P.pool[base]
            for k in range(K):
                n[sel, k] = P.pool[base + 1 + k].astype(np.int64)
        else:
            qs = sample_dist(P.qd[t], P.pool, ks, 0)
            q[sel] = qs
            for k in range(K):
                if jk == C.MG1:
                    n[sel, k] = poisson(P.coef[t, k] * qs, ks, k + 1)
                elif jk == C.LINKED:
                    n[sel, k] = (np.floor(P.coef[t, k] * qs).astype(np.int64)
                                 + np.floor(sample_dist(P.nd[t, k], P.pool, ks, k + 1)).astype(np.int64))
                else:
                    n[sel, k] = np.floor(sample_dist(P.nd[t, k], P.pool, ks, k + 1)).astype(np.int64)
    return q, n


def _forest(group_keys, root_counts, root_types, cap, draw, follow, n_acc):
    """Breadth-first walk of one forest per group, all groups in lockstep.

    Node ``i`` of group ``g`` (ids in enqueue order) draws with key
    ``child_key(group_keys[g], i)``.  ``draw(types, keys)`` returns
    ``(q, counts, node_trunc)``; children of the types in ``follow`` are
    enqueued, the first ``n_acc`` count columns of the rest are summed per
    group.
    """
    G = group_keys.size
    follow = np.asarray(follow, dtype=np.int64)
    qsum = np.zeros(G)
    size = np.zeros(G, dtype=np.int64)
    trunc = np.zeros(G, dtype=bool)
    nacc = np.zeros((G, n_acc), dtype=np.int64)

    root_counts = np.asarray(root_counts, dtype=np.int64)
    fg = np.repeat(np.arange(G), root_counts)
    starts = np.cumsum(root_counts) - root_counts
    fid = np.arange(fg.size) - np.repeat(starts, root_counts)
    ft = np.repeat(np.asarray(root_types, dtype=np.int64), root_counts)
    nxt = root_counts.copy()

    while fg.size:
        over = fid >= cap
        if over.any():
            trunc[fg[over]] = True
            keep = ~over
            fg, fid, ft = fg[keep], fid[keep], ft[keep]
            if not fg.size:
                break
        keys = child_key_vec(group_keys[fg], fid)
        q, n, ntr = draw(ft, keys)
        qsum += np.bincount(fg, weights=q, minlength=G)
        size += np.bincount(fg, minlength=G)
        if ntr is not None and ntr.any():
            trunc[fg[ntr]] = True
        for k in range(n_acc):
            if k not in follow:
                nacc[:, k] += np.bincount(fg, weights=n[:, k], minlength=G).astype(np.int64)

        nf = n[:, follow]
        c = nf.sum(axis=1)
        ex = np.cumsum(c) - c
        first = np.ones(fg.size, dtype=bool)
        first[1:] = fg[1:] != fg[:-1]
        gpos = np.cumsum(first) - 1
        local = ex - ex[first][gpos]
        child_start = nxt[fg] + local
        nxt += np.bincount(fg, weights=c, minlength=G).astype(np.int64)

        tot = int(c.sum())
        if tot == 0:
            break
        fg_new = np.repeat(fg, c)
        fid = np.repeat(child_start, c) + (np.arange(tot) - np.repeat(ex, c))
        ft = np.repeat(np.tile(follow, fg.size), nf.ravel())
        fg = fg_new
    return qsum, size, trunc, nacc


def _plain_draw(P):
    def draw(types, keys):
        q, n = draw_nodes(P, types, keys)
        return q, n, None
    return draw


def reduced_pairs(P, types, keys, cap):
    """Vectorised reduced pairs: (q_tilde, n_tilde (m, K-1), sizes, trunc)."""
    keys = np.asarray(keys, dtype=np.uint64)
    last = P.K - 1
    q, n = draw_nodes(P, types, keys)
    qs, size, trunc, nacc = _forest(
        sub_base_vec(keys), n[:, last], np.full(keys.size, last), cap,
        _plain_draw(P), [last], last)
    return q + qs, n[:, :last] + nacc, size, trunc


def trees(P, root_types, keys, cap, reduced=False):
    keys = np.asarray(keys, dtype=np.uint64)
    G = keys.size
    if reduced:
        last = P.K - 1

        def draw(types, k):
            q, n, _, tr = reduced_pairs(P, types, k, cap)
            return q, n, tr
        follow = np.arange(last)
    else:
        draw = _plain_draw(P)
        follow = np.arange(P.K)
    values, sizes, trunc, _ = _forest(keys, np.ones(G, dtype=np.int64), root_types, cap, draw, follow, 0)
    return values, sizes, trunc


def walks(P, keys, cap, k0, k1):
    keys = np.asarray(keys, dtype=np.uint64)
    R = keys.size
    values = np.zeros(R)
    s = np.zeros(R, dtype=np.int64)
    sizes = np.zeros(R, dtype=np.int64)
    act = np.arange(R)
    zero = np.zeros(R, dtype=np.int64)
    i = 0
    while act.size and i < cap:
        q, n = draw_nodes(P, zero[:act.size], child_key_vec(keys[act], i))
        values[act] += k0 + k1 * q
        s[act] += n[:, 0] - 1
        i += 1
        sizes[act] = i
        act = act[s[act] != -1]
    return values, sizes, s != -1


def compound_sums(counts, zd, pool, keys, chunk=2_000_000):
    keys = np.asarray(keys, dtype=np.uint64)
    counts = np.asarray(counts, dtype=np.int64)
    out = np.zeros(keys.size)
    cum = np.cumsum(counts)
    lo = 0
    # batches of roughly `chunk` summands
    while lo < keys.size:
        done = cum[lo - 1] if lo else 0
        hi = max(int(np.searchsorted(cum, done + chunk, side="right")), lo + 1)
        c = counts[lo:hi]
        tot = int(c.sum())
        if tot:
            owner = np.repeat(np.arange(hi - lo), c)
            j = np.arange(tot) - np.repeat(np.cumsum(c) - c, c)
            z = sample_dist(zd, pool, np.repeat(keys[lo:hi], c), j + 1)
            out[lo:hi] = np.bincount(owner, weights=z, minlength=hi - lo)
        lo = hi
    return out
