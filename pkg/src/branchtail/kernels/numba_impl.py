"""Jitted kernels: one replication at a time, scalar inner loops."""
import math

import numba as nb
import numpy as np

from . import codes as C
from . import rng as R

_U = np.uint64
_GOLDEN = _U(R.GOLDEN)
_WEYL2 = _U(R.WEYL2)
_MIX1 = _U(R.MIX1)
_MIX2 = _U(R.MIX2)
_SUB_SALT = _U(R.SUB_SALT)
_S30 = _U(30)
_S27 = _U(27)
_S31 = _U(31)
_STOP = _U(R.TOP)
_ONE = _U(1)

_opts = dict(nogil=True, cache=True, error_model="numpy")
# Helpers that never allocate skip reference counting; otherwise every call
# pays atomic incref/decref on each array it touches (about 2x per node).
_hot = dict(_opts, _nrt=False)


# -- streams ----------------------------------------------------------------

@nb.njit(**_hot)
def mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@nb.njit(**_hot)
def child_key(base, idx):
    return mix64(base ^ mix64((_U(idx) + _ONE) * _WEYL2))


@nb.njit(**_hot)
def sub_base(key):
    return mix64(key ^ _SUB_SALT)


@nb.njit(**_hot)
def uniform(key, comp, draw):
    s = (_U(comp) << _U(R.SLOT_SHIFT)) + _U(draw)
    z = mix64(key + (s + _ONE) * _GOLDEN)
    return (float(z >> _STOP) + 0.5) * R.UNIT


# -- scalar laws ------------------------------------------------------------

@nb.njit(**_hot)
def pareto_quantile(u, alpha, xm, b):
    if u <= b:
        return xm * (u / b) ** (-1.0 / alpha)
    return xm * (u - b) / (1.0 - b)


@nb.njit(**_hot)
def poisson(mu, key, comp):
    if mu <= 0.0:
        return 0
    if mu < C.POISSON_INVERSION_MAX:
        u = uniform(key, comp, 0)
        p = math.exp(-mu)
        cdf = p
        k = 0
        while u > cdf and k < 1000:
            k += 1
            p *= mu / k
            cdf += p
        return k
    # PTRS transformed rejection (Hoermann 1993)
    slam = math.sqrt(mu)
    loglam = math.log(mu)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    j = 0
    while True:
        U = uniform(key, comp, j) - 0.5
        V = uniform(key, comp, j + 1)
        j += 2
        us = 0.5 - abs(U)
        k = math.floor((2.0 * a / us + b) * U + mu + 0.43)
        if us >= 0.07 and V <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and V > us):
            continue
        if (math.log(V) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -mu + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@nb.njit(**_hot)
def sample_scalar(kind, p1, p2, p3, pool, key, comp):
    """One draw from a packed law given as scalars (no array views in the
    hot path)."""
    if kind == C.POISSON:
        return float(poisson(p1, key, comp))
    if kind == C.CONST:
        return p1
    u = uniform(key, comp, 0)
    if kind == C.PARETO:
        return pareto_quantile(u, p1, p2, p3)
    if kind == C.PARETO_INT:
        return math.floor(pareto_quantile(u, p1, p2, p3))
    if kind == C.EXPONENTIAL:
        return -math.log(u) / p1
    if kind == C.BERNOULLI:
        return 1.0 if u < p1 else 0.0
    # EMPIRICAL: p1 = pool offset, p2 = length
    n = int(p2)
    i = min(int(u * n), n - 1)
    return pool[int(p1) + i]


@nb.njit(**_hot)
def sample_dist(d, pool, key, comp):
    return sample_scalar(int(d[0]), d[1], d[2], d[3], pool, key, comp)


# -- joint draws ------------------------------------------------------------

@nb.njit(**_hot)
def draw_node(P, t, key, nout):
    """Draw (Q, N^(1..K)) for a type-t individual; counts go into ``nout``."""
    K = P.K
    jk = P.jkind[t]
    pool = P.pool
    qd = P.qd
    if jk == C.ATOMIC:
        rad = pareto_quantile(uniform(key, 0, 0), qd[t, 1], qd[t, 2], qd[t, 3])
        u = uniform(key, 0, 1)
        stride = K + 2
        off = P.aoff[t]
        na = P.an[t]
        a = 0
        while a < na - 1 and u > pool[off + a * stride]:
            a += 1
        th = off + a * stride + 1
        for k in range(K):
            nout[k] = int(math.floor(rad * pool[th + 1 + k]))
        return rad * pool[th]
    if jk == C.TABLE:
        n = P.tn[t]
        row = min(int(uniform(key, 0, 0) * n), n - 1)
        base = P.toff[t] + row * (K + 1)
        for k in range(K):
            nout[k] = int(pool[base + 1 + k])
        return pool[base]
    q = sample_scalar(int(qd[t, 0]), qd[t, 1], qd[t, 2], qd[t, 3], pool, key, 0)
    nd = P.nd
    for k in range(K):
        if jk == C.MG1:
            nout[k] = poisson(P.coef[t, k] * q, key, k + 1)
        else:
            x = math.floor(sample_scalar(int(nd[t, k, 0]), nd[t, k, 1], nd[t, k, 2], nd[t, k, 3],
                                         pool, key, k + 1))
            if jk == C.LINKED:
                x += math.floor(P.coef[t, k] * q)
            nout[k] = int(x)
    return q


@nb.njit(**_hot)
def draw_reduced(P, t, key, cap, nout, ntmp, flag):
    """Draw the reduced pair of a type-t individual, absorbing the direct-line
    subtrees of the last type.  Returns (q_tilde, absorbed subtree size)."""
    last = P.K - 1
    q = draw_node(P, t, key, nout)
    pending = nout[last]
    base = sub_base(key)
    j = 0
    while pending > 0:
        if j >= cap:
            flag[0] = 1
            break
        q += draw_node(P, last, child_key(base, j), ntmp)
        for k in range(last):
            nout[k] += ntmp[k]
        pending += ntmp[last] - 1
        j += 1
    return q, j


@nb.njit(**_opts)
def draw_nodes(P, types, keys, q_out, n_out):
    nbuf = np.empty(P.K, dtype=np.int64)
    for i in range(keys.shape[0]):
        q_out[i] = draw_node(P, types[i], keys[i], nbuf)
        for k in range(P.K):
            n_out[i, k] = nbuf[k]


@nb.njit(**_opts)
def reduced_pairs(P, types, keys, cap, q_out, n_out, sizes, trunc):
    nbuf = np.empty(P.K, dtype=np.int64)
    ntmp = np.empty(P.K, dtype=np.int64)
    flag = np.zeros(1, dtype=np.int64)
    for i in range(keys.shape[0]):
        flag[0] = 0
        q, sz = draw_reduced(P, types[i], keys[i], cap, nbuf, ntmp, flag)
        q_out[i] = q
        for k in range(P.K - 1):
            n_out[i, k] = nbuf[k]
        sizes[i] = sz
        trunc[i] = flag[0] != 0


@nb.njit(**_opts)
def sample_dist_batch(d, pool, keys, comp, out):
    for i in range(keys.shape[0]):
        out[i] = sample_dist(d, pool, keys[i], comp)


# -- whole trees ------------------------------------------------------------

@nb.njit(**_hot)
def _one_tree(P, t0, rkey, cap, reduced, queue, nbuf, ntmp, flag):
    """Breadth-first walk; node ids are enqueue order.  Returns (total Q,
    processed nodes, truncated), or processed = -1 when ``queue`` is too
    short, in which case the caller grows it and replays the tree."""
    keff = P.K - 1 if reduced else P.K
    total = 0.0
    processed = 0
    tail = 1
    queue[0] = t0
    flag[0] = 0
    while processed < tail:
        if processed >= cap:
            break
        t = queue[processed]
        key = child_key(rkey, processed)
        if reduced:
            q, _ = draw_reduced(P, t, key, cap, nbuf, ntmp, flag)
        else:
            q = draw_node(P, t, key, nbuf)
        total += q
        processed += 1
        for k in range(keff):
            c = nbuf[k]
            if c <= 0:
                continue
            store = min(c, cap - tail)
            if tail + store > queue.shape[0]:
                return total, -1, False
            for j in range(tail, tail + store):
                queue[j] = k
            tail += c
    trunc = processed < tail or flag[0] != 0
    return total, processed, trunc


@nb.njit(**_hot)
def _one_tree_single(P, rkey, cap, nbuf):
    # one type: the queue is implicit, only its length matters
    total = 0.0
    processed = 0
    pending = 1
    while pending > 0:
        if processed >= cap:
            break
        total += draw_node(P, 0, child_key(rkey, processed), nbuf)
        pending += nbuf[0] - 1
        processed += 1
    return total, processed, pending > 0


@nb.njit(**_opts)
def trees(P, root_types, keys, cap, reduced, values, sizes, trunc):
    nbuf = np.empty(P.K, dtype=np.int64)
    ntmp = np.empty(P.K, dtype=np.int64)
    flag = np.zeros(1, dtype=np.int64)
    queue = np.empty(min(1024, cap + 1), dtype=np.int64)
    single = P.K == 1 and not reduced
    for r in range(keys.shape[0]):
        if single:
            v, s, tr = _one_tree_single(P, keys[r], cap, nbuf)
        else:
            while True:
                v, s, tr = _one_tree(P, root_types[r], keys[r], cap, reduced, queue, nbuf, ntmp, flag)
                if s >= 0:
                    break
                queue = np.empty(min(2 * queue.shape[0], cap + 1), dtype=np.int64)
        values[r] = v
        sizes[r] = s
        trunc[r] = tr


@nb.njit(**_opts)
def walks(P, keys, cap, k0, k1, values, sizes, trunc):
    """Random walk S_n = sum(N_i - 1) run to its first visit of -1, with
    V = sum(k0 + k1 Q_i) accumulated along the way."""
    nbuf = np.empty(P.K, dtype=np.int64)
    for r in range(keys.shape[0]):
        s = 0
        v = 0.0
        i = 0
        while True:
            if i >= cap:
                break
            q = draw_node(P, 0, child_key(keys[r], i), nbuf)
            v += k0 + k1 * q
            s += nbuf[0] - 1
            i += 1
            if s == -1:
                break
        values[r] = v
        sizes[r] = i
        trunc[r] = s != -1


@nb.njit(**_opts)
def compound_sums(counts, zd, pool, keys, out):
    """out[r] = Z_1 + ... + Z_counts[r], summand j drawn on component j+1."""
    for r in range(keys.shape[0]):
        s = 0.0
        for j in range(counts[r]):
            s += sample_dist(zd, pool, keys[r], j + 1)
        out[r] = s
