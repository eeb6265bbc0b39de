"""Exact samplers for the fixed point R, the first-passage time tau of the
walk sum(N_i - 1), the weighted functional V, and the type-eliminated pairs.

Every replication owns one 64-bit key; node i of its tree (and step i of its
walk) draws from ``child_key(key, i)``.  A tree and a walk built on the same
key therefore see the same sequence of (Q, N) draws, which makes tau equal
the total progeny and V(0, 1) equal R path by path.  Batches key replication
r by ``rep_key(seed, r)``, so the split across workers never changes a value.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from . import models as md
from .errors import ConfigError, DegenerateSubtree, DimensionMismatch, IndexOutOfRange
from .kernels import rng as krng

DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    replications: int = 1
    cap: int = DEFAULT_CAP
    workers: int = 1
    backend: str = None

    def __post_init__(self):
        if self.cap < 1:
            raise ConfigError("cap must be >= 1")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")


class SimOutcome(NamedTuple):
    value: float
    truncated: bool
    tree_size: int


class SimBatch(NamedTuple):
    values: np.ndarray
    sizes: np.ndarray
    truncated: np.ndarray

    @property
    def truncation_count(self):
        return int(self.truncated.sum())

    @property
    def truncation_fraction(self):
        return self.truncation_count / max(self.values.size, 1)


def _outcome(values, sizes, trunc):
    return SimOutcome(float(values[0]), bool(trunc[0]), int(sizes[0]))


def _single(model):
    mm = md.as_multiclass(model)
    if mm.K != 1:
        raise DimensionMismatch("single-type sampler given a multitype model")
    return mm


# -- one replication at a time ----------------------------------------------

def simulate_R_single(model, rng, cap=DEFAULT_CAP, backend=None):
    """Total weight of one tree of the single-type model."""
    P = _single(model).packed
    return _outcome(*kernels.trees(P, 0, [rng.next_key()], cap, backend=backend))


def simulate_tau(model, rng, cap=DEFAULT_CAP, backend=None):
    """First n with N_1 + ... + N_n - n = -1."""
    P = _single(model).packed
    v, s, t = kernels.walks(P, [rng.next_key()], cap, 1.0, 0.0, backend=backend)
    return SimOutcome(float(s[0]), bool(t[0]), int(s[0]))


def simulate_V(model, k0, k1, rng, cap=DEFAULT_CAP, backend=None):
    """Sum of k0 + k1 Q_i over the steps of the walk up to tau."""
    if k0 < 0 or k1 < 0 or k0 + k1 <= 0:
        raise ValueError("need k0, k1 >= 0 with k0 + k1 > 0")
    P = _single(model).packed
    return _outcome(*kernels.walks(P, [rng.next_key()], cap, k0, k1, backend=backend))


def simulate_R_multi(model, i, rng, cap=DEFAULT_CAP, backend=None):
    """Total weight of one multitype tree rooted at a type-i individual."""
    mm = md.as_multiclass(model)
    mm[i]
    return _outcome(*kernels.trees(mm.packed, i, [rng.next_key()], cap, backend=backend))


class ReducedTrace(NamedTuple):
    """Bookkeeping of one reduced pair: the original draw and, for each
    type-K daughter, the size of her direct-line subtree and the number of
    each lower type of children born inside it."""

    q: float
    counts: tuple
    subtree_sizes: tuple
    subtree_counts: tuple


def _check_reducible(mm, i):
    if mm.K < 2:
        raise DimensionMismatch("type elimination needs K >= 2")
    if not 0 <= i < mm.K - 1:
        raise IndexOutOfRange(f"reduced type index {i} outside 0..{mm.K - 2}")
    try:
        mkk = mm.M[-1, -1]
    except Exception:
        return
    if mkk >= 1:
        raise DegenerateSubtree(f"m_KK = {mkk:.6g} >= 1")


class ModelDraws:
    """Draw source backed by the model and the counter-based streams."""

    def __init__(self, model, key, backend=None):
        self.P = model.packed
        self.key = key
        self.sub = krng.sub_base(key)
        self.backend = backend

    def _draw(self, t, key):
        q, n = kernels.draw_nodes(self.P, t, [key], backend=self.backend)
        return float(q[0]), [int(x) for x in n[0]]

    def root(self, t):
        return self._draw(t, self.key)

    def subtree_node(self, j):
        return self._draw(self.P.K - 1, krng.child_key(self.sub, j))


class ScriptedDraws:
    """Draw source replaying hand-written ``(q, counts)`` records: first the
    root, then the type-K subtree nodes in processing order."""

    def __init__(self, root, subtree_nodes):
        self._root = root
        self._nodes = list(subtree_nodes)

    def root(self, t):
        q, n = self._root
        return float(q), list(n)

    def subtree_node(self, j):
        q, n = self._nodes[j]
        return float(q), list(n)


def reduced_pair_trace(K, t, draws, cap=DEFAULT_CAP):
    """Reduced pair of one type-t individual, one daughter subtree at a time.

    Each type-K daughter's direct-line subtree is walked to exhaustion before
    the next one starts; node j (over all subtrees) uses draw j.
    """
    q, n = draws.root(t)
    last = K - 1
    sizes, counts = [], []
    j = 0
    for _ in range(n[last]):
        pending, size, inner = 1, 0, [0] * last
        while pending:
            if j >= cap:
                raise RuntimeError("subtree exceeded cap")
            qg, ng = draws.subtree_node(j)
            j += 1
            size += 1
            q += qg
            for k in range(last):
                inner[k] += ng[k]
            pending += ng[last] - 1
        sizes.append(size)
        counts.append(tuple(inner))
    return ReducedTrace(q, tuple(n), tuple(sizes), tuple(counts))


def simulate_reduced_pair(model, i, rng, cap=DEFAULT_CAP, backend=None):
    """(q̃, ñ) for a type-i individual of the model with the last type
    eliminated."""
    mm = md.as_multiclass(model)
    _check_reducible(mm, i)
    q, n, _, _ = kernels.reduced_pairs(mm.packed, i, [rng.next_key()], cap, backend=backend)
    return float(q[0]), n[0].copy()


def reduced_pair_from_trace(tr):
    last = len(tr.counts) - 1
    ntil = np.array(tr.counts[:last], dtype=np.int64)
    for c in tr.subtree_counts:
        ntil += np.asarray(c, dtype=np.int64)
    return tr.q, ntil


# -- batches ----------------------------------------------------------------

KINDS = ("R", "tau", "progeny", "V", "reduced_R", "reduced_pair")


def _chunks(n, workers):
    bounds = np.linspace(0, n, workers + 1).round().astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _batch_fn(kind, mm, cfg, i, k0, k1):
    P = mm.packed
    cap, be = cfg.cap, cfg.backend
    if kind == "R":
        return lambda keys: kernels.trees(P, i, keys, cap, backend=be)
    if kind == "progeny":
        def fn(keys):
            _, s, t = kernels.trees(P, i, keys, cap, backend=be)
            return s.astype(np.float64), s, t
        return fn
    if kind in ("tau", "V"):
        if mm.K != 1:
            raise DimensionMismatch("the walk representation is single-type")
        if kind == "tau":
            def fn(keys):
                _, s, t = kernels.walks(P, keys, cap, 1.0, 0.0, backend=be)
                return s.astype(np.float64), s, t
            return fn
        return lambda keys: kernels.walks(P, keys, cap, k0, k1, backend=be)
    if kind == "reduced_R":
        _check_reducible(mm, i)
        return lambda keys: kernels.trees(P, i, keys, cap, reduced=True, backend=be)
    if kind == "reduced_pair":
        _check_reducible(mm, i)

        def fn(keys):
            q, n, s, t = kernels.reduced_pairs(P, i, keys, cap, backend=be)
            return np.column_stack([q, n]), s, t
        return fn
    raise ValueError(f"unknown simulation kind {kind!r}; expected one of {KINDS}")


def run_replications(kind, model, cfg, i=0, k0=0.0, k1=1.0):
    """``cfg.replications`` independent samples of ``kind``.

    kind is one of "R" (type-i tree weight), "progeny" (type-i tree size),
    "tau", "V" (walk functionals, single type), "reduced_R" (type-i tree of
    the model with the last type eliminated on the fly) and "reduced_pair"
    (rows q̃, ñ).  Workers take contiguous blocks of replications; the
    merged arrays are in replication order.
    """
    mm = md.as_multiclass(model)
    mm[i]
    fn = _batch_fn(kind, mm, cfg, i, k0, k1)
    keys = krng.rep_keys(cfg.seed, np.arange(cfg.replications, dtype=np.uint64))
    parts = _chunks(cfg.replications, cfg.workers)
    if len(parts) == 1:
        results = [fn(keys)]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as ex:
            results = list(ex.map(lambda ab: fn(keys[ab[0]:ab[1]]), parts))
    values = np.concatenate([r[0] for r in results])
    sizes = np.concatenate([r[1] for r in results])
    trunc = np.concatenate([r[2] for r in results])
    return SimBatch(values, sizes, trunc)


# -- compound sums and extended vectors --------------------------------------

def simulate_compound(N, Z, cfg, fixed_count=None):
    """Pairs (N, S) with S = Z_1 + ... + Z_N, N independent of the Z's.

    ``N`` and ``Z`` are scalar laws (N is floored); ``fixed_count`` replaces
    N by a constant.
    """
    from . import heavy_tails as ht

    keys = krng.rep_keys(cfg.seed, np.arange(cfg.replications, dtype=np.uint64))
    zrow, zpool = ht.pack(Z)
    if fixed_count is None:
        nrow, npool = ht.pack(N)

        def fn(k):
            n = np.floor(kernels.sample_dist(nrow, npool, k, 0, backend=cfg.backend)).astype(np.int64)
            return n, kernels.compound_sums(n, zrow, zpool, k, backend=cfg.backend)
    else:
        def fn(k):
            n = np.full(k.size, int(fixed_count), dtype=np.int64)
            return n, kernels.compound_sums(n, zrow, zpool, k, backend=cfg.backend)
    parts = _chunks(cfg.replications, cfg.workers)
    if len(parts) == 1:
        results = [fn(keys)]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as ex:
            results = list(ex.map(lambda ab: fn(keys[ab[0]:ab[1]]), parts))
    return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])


def extended_vectors(model, cfg, i=0):
    """Rows (Q, N^(1), ..., N^(K), S) with S the total weight of the root's
    descendants, so Q + S = R(i).  S is a sum of N independent copies of the
    fixed point, independent of the root's own (Q, N)."""
    mm = md.as_multiclass(model)
    batch = run_replications("R", mm, cfg, i=i)
    keys = krng.rep_keys(cfg.seed, np.arange(cfg.replications, dtype=np.uint64))
    q, n = kernels.draw_nodes(mm.packed, i, krng.child_key_vec(keys, 0), backend=cfg.backend)
    return np.column_stack([q, n, np.maximum(batch.values - q, 0.0)])
