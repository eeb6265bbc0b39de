"""Joint laws of (Q, N^(1), ..., N^(K)) and the K-type model built from them.

A joint model describes one type of individual: its weight Q and its
offspring counts per type.  With K = 1 it is the dependent pair (Q, N) of
the scalar fixed-point equation.

Types are indexed from 0 in the Python API.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from . import heavy_tails as ht
from . import kernels
from .errors import (DimensionMismatch, IndexOutOfRange, InfiniteMean, Supercritical,
                     UnsupportedAnalytic)
from .kernels import codes as C

NORMALIZATION_TOL = 1e-12


def _as_tuple(x):
    if isinstance(x, (list, tuple, np.ndarray)):
        return tuple(x)
    return (x,)


@dataclass(frozen=True)
class AngularMeasure:
    """Finite atomic probability measure on the L1 unit simplex.

    ``atoms`` is a sequence of ``(weight, theta)`` pairs.
    """

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(w), tuple(float(x) for x in th)) for w, th in self.atoms)
        if not atoms:
            raise ValueError("an angular measure needs at least one atom")
        p = len(atoms[0][1])
        for w, th in atoms:
            if len(th) != p:
                raise DimensionMismatch("atoms of different dimension")
            if w < 0 or min(th) < 0:
                raise ValueError("weights and coordinates must be nonnegative")
            if abs(sum(th) - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"atom {th} is not on the unit simplex")
        if abs(sum(w for w, _ in atoms) - 1.0) > NORMALIZATION_TOL:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def dim(self):
        return len(self.atoms[0][1])

    @property
    def weights(self):
        return np.array([w for w, _ in self.atoms])

    @property
    def points(self):
        return np.array([th for _, th in self.atoms])

    @classmethod
    def from_masses(cls, masses):
        """Normalise a ``{theta: mass}`` mapping, merging repeated points."""
        merged = {}
        for th, m in masses:
            th = tuple(float(x) for x in th)
            merged[th] = merged.get(th, 0.0) + m
        total = sum(merged.values())
        return cls(tuple((m / total, th) for th, m in merged.items() if m > 0))

    def total_variation(self, other):
        """Total-variation distance between two atomic measures."""
        mass = {}
        for w, th in self.atoms:
            key = tuple(round(x, 12) for x in th)
            mass[key] = mass.get(key, 0.0) + w
        for w, th in other.atoms:
            key = tuple(round(x, 12) for x in th)
            mass[key] = mass.get(key, 0.0) - w
        return 0.5 * sum(abs(v) for v in mass.values())

    def to_dict(self):
        return [{"weight": w, "theta": list(th)} for w, th in self.atoms]


class MRVTail(NamedTuple):
    """P(||V|| > x) ~ b x**-alpha with limiting directions ``angular``."""

    b: float
    angular: object
    alpha: float


class PairMeans(NamedTuple):
    qbar: float
    nbar: object
    q_se: float = 0.0
    n_se: object = 0.0


# -- joint models -----------------------------------------------------------

class JointModel:
    """Common interface.  ``K`` is the number of offspring coordinates."""

    K = 1

    def analytic_means(self):
        """(E Q, [E N^(k)]) or UnsupportedAnalytic."""
        raise NotImplementedError

    def tail_index(self):
        raise NotImplementedError

    def mrv(self, alpha=None):
        """MRV data of (Q, N^(1..K)) against the reference tail x**-alpha."""
        raise NotImplementedError

    def pack_into(self, P, t, pool):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


def _unit(p, j):
    v = [0.0] * p
    v[j] = 1.0
    return tuple(v)


def _axis_mrv(weights, alpha):
    b = sum(w for _, w in weights)
    if b == 0:
        return MRVTail(0.0, None, alpha)
    return MRVTail(b, AngularMeasure.from_masses(weights), alpha)


@dataclass(frozen=True)
class Independent(JointModel):
    """Q and the offspring counts drawn independently (counts are floored)."""

    Q: ht.ScalarDist
    N: tuple

    def __post_init__(self):
        object.__setattr__(self, "N", _as_tuple(self.N))

    @property
    def K(self):
        return len(self.N)

    def analytic_means(self):
        return self.Q.mean(), [ht.floor_mean(d, 1.0) for d in self.N]

    def tail_index(self):
        return min(ht.tail_index(d) for d in (self.Q,) + self.N)

    def mrv(self, alpha=None):
        alpha = self.tail_index() if alpha is None else alpha
        p = self.K + 1
        parts = [(_unit(p, 0), ht.tail_weight(self.Q, alpha))]
        parts += [(_unit(p, k + 1), ht.tail_weight(d, alpha)) for k, d in enumerate(self.N)]
        return _axis_mrv(parts, alpha)

    def pack_into(self, P, t, pool):
        P.jkind[t] = C.INDEPENDENT
        P.qd[t] = self.Q.pack(pool)
        for k, d in enumerate(self.N):
            P.nd[t, k] = d.pack(pool)

    def to_dict(self):
        return {"kind": "independent", "Q": self.Q.to_dict(), "N": [d.to_dict() for d in self.N]}


def IndependentPair(Q, N):
    return Independent(Q, (N,))


@dataclass(frozen=True)
class MG1(JointModel):
    """Busy-period input: N^(k) is Poisson(rate_k * q) given Q = q."""

    Q: ht.ScalarDist
    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in _as_tuple(self.rates)))
        if min(self.rates) < 0:
            raise ValueError("arrival rates must be nonnegative")

    @property
    def K(self):
        return len(self.rates)

    @property
    def lam(self):
        return self.rates[0]

    def analytic_means(self):
        q = self.Q.mean()
        return q, [r * q for r in self.rates]

    def tail_index(self):
        return ht.tail_index(self.Q)

    def mrv(self, alpha=None):
        alpha = self.tail_index() if alpha is None else alpha
        cq = ht.tail_weight(self.Q, alpha)
        s = 1.0 + sum(self.rates)
        if cq == 0:
            return MRVTail(0.0, None, alpha)
        theta = tuple(x / s for x in (1.0,) + self.rates)
        return MRVTail(cq * s ** alpha, AngularMeasure(((1.0, theta),)), alpha)

    def pack_into(self, P, t, pool):
        P.jkind[t] = C.MG1
        P.qd[t] = self.Q.pack(pool)
        P.coef[t, :] = self.rates

    def to_dict(self):
        return {"kind": "mg1", "Q": self.Q.to_dict(), "rates": list(self.rates)}


@dataclass(frozen=True)
class LinkedFloor(JointModel):
    """N^(k) = floor(slope_k * Q) + noise_k."""

    Q: ht.ScalarDist
    slopes: tuple
    noise: tuple = None

    def __post_init__(self):
        slopes = tuple(float(s) for s in _as_tuple(self.slopes))
        noise = self.noise
        noise = tuple(ht.Constant(0.0) for _ in slopes) if noise is None else _as_tuple(noise)
        if len(noise) != len(slopes):
            raise DimensionMismatch("one noise law per slope")
        if min(slopes) < 0:
            raise ValueError("slopes must be nonnegative")
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "noise", noise)

    @property
    def K(self):
        return len(self.slopes)

    def analytic_means(self):
        return self.Q.mean(), [ht.floor_mean(self.Q, s) + ht.floor_mean(e, 1.0)
                               for s, e in zip(self.slopes, self.noise)]

    def tail_index(self):
        return min(ht.tail_index(d) for d in (self.Q,) + self.noise)

    def mrv(self, alpha=None):
        alpha = self.tail_index() if alpha is None else alpha
        p = self.K + 1
        s = 1.0 + sum(self.slopes)
        parts = [(tuple(x / s for x in (1.0,) + self.slopes), ht.tail_weight(self.Q, alpha) * s ** alpha)]
        parts += [(_unit(p, k + 1), ht.tail_weight(e, alpha)) for k, e in enumerate(self.noise)]
        return _axis_mrv(parts, alpha)

    def pack_into(self, P, t, pool):
        P.jkind[t] = C.LINKED
        P.qd[t] = self.Q.pack(pool)
        P.coef[t, :] = self.slopes
        for k, d in enumerate(self.noise):
            P.nd[t, k] = d.pack(pool)

    def to_dict(self):
        return {"kind": "linked", "Q": self.Q.to_dict(), "slopes": list(self.slopes),
                "noise": [d.to_dict() for d in self.noise]}


@dataclass(frozen=True)
class AtomicMRV(JointModel):
    """V = R * Theta with R ~ ``radial`` and Theta drawn from ``angular``.

    Q is the first coordinate; the offspring coordinates are floored.
    """

    radial: ht.Pareto
    angular: AngularMeasure

    def __post_init__(self):
        if type(self.radial) is not ht.Pareto:
            raise TypeError("the radial law must be a continuous Pareto law")
        if self.angular.dim < 2:
            raise DimensionMismatch("angular measure needs dimension K + 1 >= 2")

    @property
    def K(self):
        return self.angular.dim - 1

    def analytic_means(self):
        er = self.radial.mean()
        w, pts = self.angular.weights, self.angular.points
        q = er * float(w @ pts[:, 0])
        n = [float(sum(wa * self.radial.floor_mean(th[k + 1]) for wa, th in zip(w, pts)))
             for k in range(self.K)]
        return q, n

    def tail_index(self):
        return ht.tail_index(self.radial)

    def mrv(self, alpha=None):
        alpha = self.tail_index() if alpha is None else alpha
        b = ht.tail_weight(self.radial, alpha)
        return MRVTail(b, self.angular if b > 0 else None, alpha)

    def pack_into(self, P, t, pool):
        P.jkind[t] = C.ATOMIC
        P.qd[t] = self.radial.pack(pool)
        P.aoff[t] = len(pool)
        P.an[t] = len(self.angular.atoms)
        cum = np.cumsum(self.angular.weights)
        cum[-1] = 1.0
        for cw, (_, th) in zip(cum, self.angular.atoms):
            pool.append(float(cw))
            pool.extend(th)

    def to_dict(self):
        return {"kind": "atomic_mrv",
                "radial": {"alpha": self.radial.alpha, "xm": self.radial.xm, "b": self.radial.b},
                "atoms": self.angular.to_dict()}


@dataclass(frozen=True)
class EmpiricalJoint(JointModel):
    """Uniform resampling of rows ``(q, n_1, ..., n_K)``.

    ``means`` optionally declares (E Q, [E N^(k)]) exactly; they take
    precedence over the row averages in every analytic computation.
    """

    rows: np.ndarray = field(repr=False)
    means: tuple = None
    provenance: dict = field(default=None, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] < 2 or rows.shape[0] == 0:
            raise DimensionMismatch("rows must be a nonempty (m, K+1) array")
        object.__setattr__(self, "rows", rows)
        if self.means is not None:
            q, n = self.means
            object.__setattr__(self, "means", (float(q), [float(x) for x in n]))

    @property
    def K(self):
        return self.rows.shape[1] - 1

    def analytic_means(self):
        if self.means is not None:
            return self.means
        cols = self.rows.mean(axis=0)
        return float(cols[0]), [float(x) for x in cols[1:]]

    def tail_index(self):
        return math.inf

    def mrv(self, alpha=None):
        raise UnsupportedAnalytic("tail of a resampled table is not available in closed form")

    def pack_into(self, P, t, pool):
        P.jkind[t] = C.TABLE
        P.toff[t] = len(pool)
        P.tn[t] = self.rows.shape[0]
        pool.extend(self.rows.ravel().tolist())

    def to_dict(self):
        d = {"kind": "empirical", "rows": self.rows.tolist()}
        if self.means is not None:
            d["means"] = {"q": self.means[0], "n": list(self.means[1])}
        if self.provenance:
            d["provenance"] = dict(self.provenance)
        return d


# -- K-type model -----------------------------------------------------------

class MulticlassModel:
    """K types, one joint model each, all with K offspring coordinates.

    Subcriticality (spectral radius of the mean matrix < 1) is enforced at
    construction when the means are known in closed form.
    """

    def __init__(self, types: Sequence[JointModel], check=True):
        self.types = tuple(types)
        if not self.types:
            raise ValueError("at least one type is required")
        K = len(self.types)
        for i, jm in enumerate(self.types):
            if jm.K != K:
                raise DimensionMismatch(f"type {i} has {jm.K} offspring coordinates, expected {K}")
        if check:
            self.check_subcritical()

    @property
    def K(self):
        return len(self.types)

    def __getitem__(self, i):
        if not 0 <= i < self.K:
            raise IndexOutOfRange(f"type index {i} outside 0..{self.K - 1}")
        return self.types[i]

    @cached_property
    def _means(self):
        qbar = np.empty(self.K)
        M = np.empty((self.K, self.K))
        for i, jm in enumerate(self.types):
            q, n = jm.analytic_means()
            qbar[i] = q
            M[i] = n
        return M, qbar

    @property
    def M(self):
        return self._means[0].copy()

    @property
    def qbar(self):
        return self._means[1].copy()

    def check_subcritical(self):
        from .asymptotics import spectral_radius

        try:
            M = self._means[0]
        except (UnsupportedAnalytic, InfiniteMean):
            return None
        if self.K == 1:
            nbar = float(M[0, 0])
            if nbar >= 1:
                raise Supercritical(f"nbar = {nbar:.6g} >= 1", nbar)
            return nbar
        rho = spectral_radius(M)
        if rho >= 1:
            raise Supercritical(f"spectral radius rho = {rho:.6g} >= 1", rho)
        return rho

    def tail_index(self):
        return min(jm.tail_index() for jm in self.types)

    @cached_property
    def packed(self):
        P = C.empty_packed(self.K)
        pool = [0.0]
        for t, jm in enumerate(self.types):
            jm.pack_into(P, t, pool)
        return P._replace(pool=np.asarray(pool, dtype=np.float64))

    def to_dict(self):
        return {"classes": [jm.to_dict() for jm in self.types]}


def as_multiclass(model, check=True):
    if isinstance(model, MulticlassModel):
        return model
    if isinstance(model, JointModel):
        if model.K != 1:
            raise DimensionMismatch("a lone joint model must have K = 1")
        return MulticlassModel([model], check=check)
    raise TypeError(f"not a model: {model!r}")


# -- operations -------------------------------------------------------------

def sample_vector(model, i, rng, backend=None):
    """One joint draw (q, counts) for a type-i individual."""
    mm = as_multiclass(model, check=False)
    mm[i]
    q, n = kernels.draw_nodes(mm.packed, i, rng.keys(1), backend=backend)
    return float(q[0]), n[0].copy()


def sample_pair(model, rng, backend=None):
    """One draw of the dependent pair (q, n) of a single-type model."""
    q, n = sample_vector(as_multiclass(model, check=False), 0, rng, backend=backend)
    return q, int(n[0])


def sample_vectors(model, i, nsamples, seed=0, backend=None):
    """``nsamples`` joint draws for type i as (q array, counts array)."""
    from .kernels.rng import RandomStream

    mm = as_multiclass(model, check=False)
    mm[i]
    rs = RandomStream(seed, stream=1_000_003 + i)
    return kernels.draw_nodes(mm.packed, i, rs.keys(int(nsamples)), backend=backend)


def pair_means(model, method="analytic", nsamples=10**6, seed=0):
    """(q̄, n̄) of a single-type model.

    ``method="mc"`` averages ``nsamples`` draws and reports standard errors.
    Raises Supercritical when n̄ >= 1.
    """
    jm = model.types[0] if isinstance(model, MulticlassModel) else model
    if jm.K != 1:
        raise DimensionMismatch("pair_means is for single-type models")
    if method == "analytic":
        q, n = jm.analytic_means()
        res = PairMeans(float(q), float(n[0]))
    elif method == "mc":
        qs, ns = sample_vectors(as_multiclass(jm, check=False), 0, nsamples, seed=seed)
        nn = ns[:, 0]
        se = lambda a: float(a.std(ddof=1) / math.sqrt(a.size))
        res = PairMeans(float(qs.mean()), float(nn.mean()), se(qs), se(nn.astype(float)))
    else:
        raise ValueError(f"unknown method {method!r}")
    if res.nbar >= 1:
        raise Supercritical(f"nbar = {res.nbar:.6g} >= 1", res.nbar)
    return res


def mg1_tail_constant(model, a0, a1):
    """Limit of P(a0 Q + a1 N > x) / P(Q > x) for an MG1 pair with Pareto Q."""
    if not isinstance(model, MG1) or not isinstance(model.Q, ht.Pareto):
        raise UnsupportedAnalytic("mg1_tail_constant needs an MG1 model with Pareto service times")
    return (a0 + a1 * model.lam) ** model.Q.alpha


# -- config records ---------------------------------------------------------

def joint_from_dict(d):
    kind = d["kind"]
    if kind == "independent":
        return Independent(ht.from_dict(d["Q"]), tuple(ht.from_dict(x) for x in d["N"]))
    if kind == "mg1":
        return MG1(ht.from_dict(d["Q"]), tuple(d["rates"]))
    if kind == "linked":
        noise = d.get("noise")
        noise = None if noise is None else tuple(ht.from_dict(x) for x in noise)
        return LinkedFloor(ht.from_dict(d["Q"]), tuple(d["slopes"]), noise)
    if kind == "atomic_mrv":
        r = d["radial"]
        radial = ht.Pareto(r["alpha"], r.get("xm", 1.0), r.get("b", 1.0))
        return AtomicMRV(radial, AngularMeasure(tuple((a["weight"], a["theta"]) for a in d["atoms"])))
    if kind == "empirical":
        means = d.get("means")
        means = None if means is None else (means["q"], means["n"])
        return EmpiricalJoint(np.asarray(d["rows"], dtype=float), means, d.get("provenance"))
    raise ValueError(f"unknown joint model kind {kind!r}")


def model_from_dict(d, check=True):
    """Build a MulticlassModel from ``{"classes": [...]}``."""
    return MulticlassModel([joint_from_dict(c) for c in d["classes"]], check=check)
