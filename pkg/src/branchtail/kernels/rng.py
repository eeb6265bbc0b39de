"""Counter-based random streams.

Every uniform is a pure function of ``(key, slot)``: a SplitMix64 finaliser
applied to a Weyl-sequence counter.  Keys are derived hierarchically:

    replication key  = rep_key(seed, replication index)
    node key         = child_key(replication key, node index)
    uniform          = uniform(node key, slot(component, draw))

so a simulated tree does not depend on how replications are split across
workers.  The scalar (python int), vectorised (numpy uint64) and jitted
versions of these functions produce identical bits.
"""
import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
WEYL2 = 0xDB4F0B9175AE2165
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
SEED_SALT = 0x5851F42D4C957F2D
SUB_SALT = 0xD1B54A32D192ED03
SLOT_SHIFT = 32
# 52 bits: (k + 0.5) * 2**-52 is exact, so uniforms lie strictly inside (0, 1)
TOP = 12
UNIT = 2.0 ** -52


def slot(comp, draw=0):
    return (comp << SLOT_SHIFT) + draw


# -- python ints ------------------------------------------------------------

def mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


def rep_key(seed, rep):
    return mix64(mix64(seed ^ SEED_SALT) + (rep + 1) * GOLDEN)


def child_key(base, idx):
    return mix64(base ^ mix64((idx + 1) * WEYL2))


def sub_base(key):
    return mix64(key ^ SUB_SALT)


def uniform(key, s=0):
    return ((mix64(key + (s + 1) * GOLDEN) >> TOP) + 0.5) * UNIT


# -- numpy uint64 arrays ----------------------------------------------------

_U = np.uint64
# uint64 wrap-around is intended; numpy only warns for 0-d operands
_wrap = np.errstate(over="ignore")


@_wrap
def mix64_vec(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _U(30))) * _U(MIX1)
    z = (z ^ (z >> _U(27))) * _U(MIX2)
    return z ^ (z >> _U(31))


@_wrap
def rep_keys(seed, reps):
    """Replication keys for an array of replication indices."""
    reps = np.asarray(reps, dtype=np.uint64)
    base = _U(mix64(int(seed) ^ SEED_SALT))
    return mix64_vec(base + (reps + _U(1)) * _U(GOLDEN))


@_wrap
def child_key_vec(base, idx):
    idx = np.asarray(idx).astype(np.uint64)
    return mix64_vec(np.asarray(base, dtype=np.uint64) ^ mix64_vec((idx + _U(1)) * _U(WEYL2)))


@_wrap
def sub_base_vec(keys):
    return mix64_vec(np.asarray(keys, dtype=np.uint64) ^ _U(SUB_SALT))


@_wrap
def uniform_vec(keys, s=0):
    s = np.asarray(s).astype(np.uint64)
    z = mix64_vec(np.asarray(keys, dtype=np.uint64) + (s + _U(1)) * _U(GOLDEN))
    return ((z >> _U(TOP)).astype(np.float64) + 0.5) * UNIT


class RandomStream:
    """A single-owner stream handing out fresh node keys and uniforms.

    >>> rs = RandomStream(7)
    >>> 0.0 < rs.uniform() < 1.0
    True
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._base = rep_key(self.seed, self.stream)
        self._counter = 0

    def next_key(self):
        key = child_key(self._base, self._counter)
        self._counter += 1
        return key

    def uniform(self):
        return uniform(self.next_key(), 0)

    def keys(self, n):
        """``n`` consecutive node keys as a uint64 array."""
        idx = np.arange(self._counter, self._counter + n, dtype=np.uint64)
        self._counter += n
        return child_key_vec(_U(self._base), idx)
