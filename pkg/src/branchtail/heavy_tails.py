"""Building-block laws: Pareto-type tails and the light laws used for offspring
counts.

All laws are supported on [0, inf).  A regularly varying tail is represented
with a constant slowly varying factor,

    P(X > x) = b * (xm / x) ** alpha,   x >= xm,

and the remaining mass 1 - b spread uniformly on [0, xm).  ``b = 1`` is the
classical Pareto law.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import InfiniteMean, UnsupportedAnalytic
from .kernels import codes as C
from . import kernels


class ScalarDist:
    """Base class; concrete laws are frozen dataclasses."""

    kind = None
    integer_valued = False

    def tail(self, x):
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def quantile(self, u):
        """Inverse-transform draw from a single uniform."""
        raise UnsupportedAnalytic(f"{type(self).__name__} needs more than one uniform")

    def pack(self, pool):
        """Kernel parameter row; may append data to ``pool`` (a list)."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Pareto(ScalarDist):
    alpha: float
    xm: float = 1.0
    b: float = 1.0

    kind = "pareto"

    def __post_init__(self):
        if not self.alpha > 0 or not self.xm > 0:
            raise ValueError("Pareto needs alpha > 0 and xm > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("tail multiplier b must lie in [0, 1]")

    @property
    def scale(self):
        return self.xm

    def tail(self, x):
        if x < self.xm:
            return 1.0 - (1.0 - self.b) * max(x, 0.0) / self.xm
        return self.b * (self.xm / x) ** self.alpha

    def mean(self):
        if self.b > 0 and self.alpha <= 1:
            raise InfiniteMean(f"alpha={self.alpha} <= 1")
        heavy = self.b * self.alpha * self.xm / (self.alpha - 1) if self.b > 0 else 0.0
        return (1.0 - self.b) * self.xm / 2 + heavy

    def quantile(self, u):
        if u <= self.b:
            return self.xm * (u / self.b) ** (-1.0 / self.alpha)
        return self.xm * (u - self.b) / (1.0 - self.b)

    def tail_weight(self, alpha):
        """C with P(X > x) ~ C x**-alpha (0 when lighter than alpha)."""
        if self.b == 0 or self.alpha > alpha:
            return 0.0
        if self.alpha < alpha:
            raise ValueError(f"law with index {self.alpha} is heavier than reference index {alpha}")
        return self.b * self.xm ** self.alpha

    def floor_mean(self, c=1.0):
        """E floor(c X), summed exactly with the Hurwitz zeta function."""
        if c == 0:
            return 0.0
        if self.b > 0 and self.alpha <= 1:
            raise InfiniteMean(f"alpha={self.alpha} <= 1")
        s = self.xm * c
        # P(cX >= j) = 1 - (1-b) j/s for j < s, b (s/j)^alpha for j >= s
        below = math.ceil(s) - 1
        total = below - (1.0 - self.b) * below * (below + 1) / (2 * s)
        if self.b > 0:
            total += self.b * s ** self.alpha * special.zeta(self.alpha, below + 1)
        return float(total)

    def pack(self, pool):
        return [C.PARETO, self.alpha, self.xm, self.b, 0.0, 0.0]

    def to_dict(self):
        d = {"kind": "pareto", "alpha": self.alpha, "xm": self.xm}
        if self.b != 1.0:
            d["b"] = self.b
        return d


RVTail = Pareto


@dataclass(frozen=True)
class ParetoInteger(Pareto):
    """floor of a :class:`Pareto` draw."""

    kind = "pareto_int"
    integer_valued = True

    def tail(self, x):
        return Pareto.tail(self, math.floor(x) + 1.0)

    def mean(self):
        return self.floor_mean(1.0)

    def quantile(self, u):
        return float(math.floor(Pareto.quantile(self, u)))

    def floor_mean(self, c=1.0):
        if c == 1.0:
            return Pareto.floor_mean(self, 1.0)
        raise UnsupportedAnalytic("E floor(c floor(X)) has no closed form here")

    def pack(self, pool):
        return [C.PARETO_INT, self.alpha, self.xm, self.b, 0.0, 0.0]

    def to_dict(self):
        d = Pareto.to_dict(self)
        d["kind"] = "pareto_int"
        return d


@dataclass(frozen=True)
class Exponential(ScalarDist):
    rate: float

    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def tail(self, x):
        return 1.0 if x <= 0 else math.exp(-self.rate * x)

    def mean(self):
        return 1.0 / self.rate

    def quantile(self, u):
        return -math.log(u) / self.rate

    def floor_mean(self, c=1.0):
        if c == 0:
            return 0.0
        r = math.exp(-self.rate / c)
        return r / (1.0 - r)

    def pack(self, pool):
        return [C.EXPONENTIAL, self.rate, 0.0, 0.0, 0.0, 0.0]

    def to_dict(self):
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Poisson(ScalarDist):
    mean_: float

    kind = "poisson"
    integer_valued = True

    def __post_init__(self):
        if self.mean_ < 0:
            raise ValueError("Poisson mean must be nonnegative")

    def tail(self, x):
        return float(stats.poisson.sf(math.floor(x), self.mean_)) if x >= 0 else 1.0

    def mean(self):
        return self.mean_

    def pack(self, pool):
        return [C.POISSON, self.mean_, 0.0, 0.0, 0.0, 0.0]

    def to_dict(self):
        return {"kind": "poisson", "mean": self.mean_}


@dataclass(frozen=True)
class Bernoulli(ScalarDist):
    p: float

    kind = "bernoulli"
    integer_valued = True

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")

    def tail(self, x):
        if x < 0:
            return 1.0
        return self.p if x < 1 else 0.0

    def mean(self):
        return self.p

    def quantile(self, u):
        return 1.0 if u < self.p else 0.0

    def pack(self, pool):
        return [C.BERNOULLI, self.p, 0.0, 0.0, 0.0, 0.0]

    def to_dict(self):
        return {"kind": "bernoulli", "p": self.p}


@dataclass(frozen=True)
class Constant(ScalarDist):
    value: float

    kind = "constant"

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("laws are supported on [0, inf)")

    @property
    def integer_valued(self):
        return float(self.value).is_integer()

    def tail(self, x):
        return 1.0 if x < self.value else 0.0

    def mean(self):
        return float(self.value)

    def quantile(self, u):
        return float(self.value)

    def floor_mean(self, c=1.0):
        return float(math.floor(c * self.value))

    def pack(self, pool):
        return [C.CONST, self.value, 0.0, 0.0, 0.0, 0.0]

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Empirical(ScalarDist):
    """Uniform resampling from a finite table of values."""

    values: tuple = field(repr=False)

    kind = "empirical"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("empty table")
        if min(vals) < 0:
            raise ValueError("laws are supported on [0, inf)")
        object.__setattr__(self, "values", vals)

    def tail(self, x):
        raise UnsupportedAnalytic("tail of an Empirical law is estimated, not computed")

    def mean(self):
        return float(np.mean(self.values))

    def quantile(self, u):
        n = len(self.values)
        return self.values[min(int(u * n), n - 1)]

    def pack(self, pool):
        off = len(pool)
        pool.extend(self.values)
        return [C.EMPIRICAL, off, len(self.values), 0.0, 0.0, 0.0]

    def to_dict(self):
        return {"kind": "empirical", "values": list(self.values)}


def tail_weight(dist, alpha):
    """Multiplier C with P(X > x) ~ C x**-alpha; 0 for lighter laws."""
    if isinstance(dist, Pareto):
        return dist.tail_weight(alpha)
    return 0.0


def tail_index(dist):
    """Tail index of a regularly varying law, ``inf`` for light laws."""
    if isinstance(dist, Pareto) and dist.b > 0:
        return dist.alpha
    return math.inf


def floor_mean(dist, c=1.0):
    """E floor(c X)."""
    if hasattr(dist, "floor_mean"):
        return dist.floor_mean(c)
    if c == 1.0 and dist.integer_valued:
        return dist.mean()
    raise UnsupportedAnalytic(f"E floor(c X) for {type(dist).__name__}")


# -- the operations ---------------------------------------------------------

def tail(dist, x):
    """P(X > x)."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    return dist.tail(x)


def mean(dist):
    return dist.mean()


def quantile(dist, u):
    return dist.quantile(u)


def pack(dist):
    """(params row, pool array) for direct kernel use."""
    pool = []
    row = np.asarray(dist.pack(pool), dtype=np.float64)
    return row, np.asarray(pool if pool else [0.0], dtype=np.float64)


def sample(dist, rng, size=None, backend=None):
    """Draw from ``dist`` with a :class:`~branchtail.kernels.rng.RandomStream`.

    Each draw consumes one node key of the stream.  Integer laws return
    integers when ``size`` is None.
    """
    row, pool = pack(dist)
    n = 1 if size is None else int(size)
    out = kernels.sample_dist(row, pool, rng.keys(n), 0, backend=backend)
    if size is None:
        v = float(out[0])
        return int(v) if dist.integer_valued else v
    return out


_KINDS = {
    "pareto": lambda d: Pareto(d["alpha"], d.get("xm", 1.0), d.get("b", 1.0)),
    "pareto_int": lambda d: ParetoInteger(d["alpha"], d.get("xm", 1.0), d.get("b", 1.0)),
    "exponential": lambda d: Exponential(d["rate"]),
    "poisson": lambda d: Poisson(d["mean"]),
    "bernoulli": lambda d: Bernoulli(d["p"]),
    "constant": lambda d: Constant(d["value"]),
    "empirical": lambda d: Empirical(tuple(d["values"])),
}


def from_dict(d):
    """Build a law from its tagged record, e.g. ``{"kind": "pareto", "alpha": 1.5}``."""
    try:
        return _KINDS[d["kind"]](d)
    except KeyError as exc:
        raise ValueError(f"bad distribution record {d!r}: missing {exc}") from None
