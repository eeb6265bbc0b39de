"""Hot loops behind a backend switch.

``backend`` is ``"numba"`` or ``"numpy"``; ``None`` picks the default from
:mod:`branchtail._jit` (numba unless ``BRANCHTAIL_DISABLE_NUMBA`` is set).
"""
import numpy as np

from .. import _jit
from . import numpy_impl

_numba = None


def _resolve(backend):
    global _numba
    backend = backend or _jit.default_backend()
    if backend == "numba":
        if not _jit.HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        if _numba is None:
            from . import numba_impl
            _numba = numba_impl
        return _numba
    if backend == "numpy":
        return None
    raise ValueError(f"unknown backend {backend!r}")


def _u64(keys):
    return np.ascontiguousarray(keys, dtype=np.uint64)


def draw_nodes(P, types, keys, backend=None):
    keys = _u64(keys)
    types = np.ascontiguousarray(np.broadcast_to(types, keys.shape), dtype=np.int64)
    nb = _resolve(backend)
    if nb is None:
        return numpy_impl.draw_nodes(P, types, keys)
    q = np.empty(keys.size)
    n = np.empty((keys.size, P.K), dtype=np.int64)
    nb.draw_nodes(P, types, keys, q, n)
    return q, n


def sample_dist(d, pool, keys, comp=0, backend=None):
    keys = _u64(keys)
    nb = _resolve(backend)
    if nb is None:
        return numpy_impl.sample_dist(d, pool, keys, comp)
    out = np.empty(keys.size)
    nb.sample_dist_batch(np.asarray(d, dtype=np.float64), pool, keys, comp, out)
    return out


def trees(P, root_types, keys, cap, reduced=False, backend=None):
    keys = _u64(keys)
    root_types = np.ascontiguousarray(np.broadcast_to(root_types, keys.shape), dtype=np.int64)
    nb = _resolve(backend)
    if nb is None:
        return numpy_impl.trees(P, root_types, keys, cap, reduced)
    values = np.empty(keys.size)
    sizes = np.empty(keys.size, dtype=np.int64)
    trunc = np.empty(keys.size, dtype=np.bool_)
    nb.trees(P, root_types, keys, int(cap), bool(reduced), values, sizes, trunc)
    return values, sizes, trunc


def walks(P, keys, cap, k0=1.0, k1=0.0, backend=None):
    keys = _u64(keys)
    nb = _resolve(backend)
    if nb is None:
        return numpy_impl.walks(P, keys, cap, float(k0), float(k1))
    values = np.empty(keys.size)
    sizes = np.empty(keys.size, dtype=np.int64)
    trunc = np.empty(keys.size, dtype=np.bool_)
    nb.walks(P, keys, int(cap), float(k0), float(k1), values, sizes, trunc)
    return values, sizes, trunc


def reduced_pairs(P, types, keys, cap, backend=None):
    keys = _u64(keys)
    types = np.ascontiguousarray(np.broadcast_to(types, keys.shape), dtype=np.int64)
    nb = _resolve(backend)
    if nb is None:
        return numpy_impl.reduced_pairs(P, types, keys, cap)
    q = np.empty(keys.size)
    n = np.empty((keys.size, P.K - 1), dtype=np.int64)
    sizes = np.empty(keys.size, dtype=np.int64)
    trunc = np.empty(keys.size, dtype=np.bool_)
    nb.reduced_pairs(P, types, keys, int(cap), q, n, sizes, trunc)
    return q, n, sizes, trunc


def compound_sums(counts, zd, pool, keys, backend=None):
    keys = _u64(keys)
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    nb = _resolve(backend)
    if nb is None:
        return numpy_impl.compound_sums(counts, zd, pool, keys)
    out = np.empty(keys.size)
    nb.compound_sums(counts, np.asarray(zd, dtype=np.float64), pool, keys, out)
    return out
