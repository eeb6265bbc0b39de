"""Empirical tails and the diagnostics that hold simulated samples against
predicted asymptotics."""
import io
import math
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import EmptySample, InsufficientData, TooFewExceedances
from .models import AngularMeasure

DEFAULT_GRID = (0.9, 0.99, 0.999, 0.9999)
ANGULAR_QUANTILE = 0.995
GRID_SIDE = 0.05
MIN_EXCEEDANCES = 100


def _nonempty(a, name="sample"):
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size == 0:
        raise EmptySample(f"{name} is empty")
    return a


def empirical_ccdf(sample, x, assume_sorted=False):
    """Fraction of the sample strictly above x (x may be an array)."""
    s = _nonempty(sample)
    if not assume_sorted:
        s = np.sort(s)
    above = s.size - np.searchsorted(s, x, side="right")
    out = above / s.size
    return float(out) if np.ndim(out) == 0 else out


def hill_estimator(sample, k):
    """Hill estimate of the tail index from the k largest order statistics."""
    s = _nonempty(sample)
    n = s.size
    k = int(k)
    if not 2 <= k < n:
        raise InsufficientData(f"need 2 <= k < n, got k={k}, n={n}")
    top = np.sort(np.partition(s, n - k - 1)[n - k - 1:])
    ref = top[0]
    if ref <= 0:
        raise InsufficientData("order statistic X_(n-k) must be positive")
    total = np.log(top[1:] / ref).sum()
    if total <= 0:
        raise InsufficientData("top order statistics are all tied")
    return float(k / total)


def ks_two_sample(a, b):
    """Sup distance between the two empirical CDFs."""
    a = _nonempty(a, "first sample")
    b = _nonempty(b, "second sample")
    return float(stats.ks_2samp(a, b, method="asymp").statistic)


def wilson_interval(k, n, z=1.959963984540054):
    """Wilson score interval (lo, hi) for k successes in n trials."""
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return centre - half, centre + half


class TailRow(NamedTuple):
    x: float
    empirical: float
    predicted: float
    ratio: float
    ci: float


class TailReport(NamedTuple):
    rows: tuple
    n: int
    grid: tuple = ()

    def ratios(self):
        return np.array([r.ratio for r in self.rows])

    def to_csv(self):
        buf = io.StringIO()
        buf.write("x,empirical,predicted,ratio,ci\n")
        for r in self.rows:
            buf.write(f"{r.x:.10g},{r.empirical:.10g},{r.predicted:.10g},{r.ratio:.10g},{r.ci:.10g}\n")
        return buf.getvalue()


def ratio_diagnostic(sample, predicted, grid=DEFAULT_GRID):
    """Empirical vs predicted tail at the sample quantiles of ``grid``.

    ``predicted`` maps x to a probability.  ``ci`` is the Wilson half-width
    of the empirical probability.
    """
    s = np.sort(_nonempty(sample))
    grid = tuple(float(q) for q in grid)
    if any(not 0 < q < 1 for q in grid):
        raise ValueError("quantile levels must lie in (0, 1)")
    rows = []
    for q in sorted(grid):
        x = float(np.quantile(s, q))
        k = s.size - np.searchsorted(s, x, side="right")
        emp = k / s.size
        pred = float(predicted(x))
        lo, hi = wilson_interval(k, s.size)
        ratio = emp / pred if pred > 0 else math.inf
        rows.append(TailRow(x, emp, pred, ratio, (hi - lo) / 2))
    rows.sort(key=lambda r: r.x)
    return TailReport(tuple(rows), s.size, grid)


# -- angular measures -------------------------------------------------------

def _directions(vectors, threshold):
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("vectors must be an (n, p) array")
    norms = np.abs(v).sum(axis=1)
    if threshold is None:
        threshold = float(np.quantile(norms, ANGULAR_QUANTILE))
    keep = norms > threshold
    if keep.sum() < MIN_EXCEEDANCES:
        raise TooFewExceedances(f"{int(keep.sum())} exceedances above {threshold:.6g}, need {MIN_EXCEEDANCES}")
    return v[keep] / norms[keep, None], threshold


def empirical_angular(vectors, threshold=None, atoms=None, side=GRID_SIDE):
    """Estimate the angular measure from the directions of the exceedances.

    Directions V/||V||_1 of vectors with ||V||_1 > threshold (default: the
    99.5% norm quantile) are grouped with the nearest (L1) of the declared
    ``atoms``, an AngularMeasure or an array of points, or else into grid
    cells of the given side.  Each group is reported at its mean direction
    with its relative frequency.
    """
    th, _ = _directions(vectors, threshold)
    if atoms is not None:
        pts = atoms.points if isinstance(atoms, AngularMeasure) else np.asarray(atoms, dtype=np.float64)
        d = np.abs(th[:, None, :] - pts[None, :, :]).sum(axis=2)
        label = d.argmin(axis=1)
    else:
        cells = np.minimum(np.floor(th / side), math.ceil(1 / side) - 1).astype(np.int64)
        _, label = np.unique(cells, axis=0, return_inverse=True)
        label = label.ravel()
    masses = []
    for g in np.unique(label):
        members = th[label == g]
        centre = members.mean(axis=0)
        masses.append((centre / centre.sum(), members.shape[0]))
    return AngularMeasure.from_masses(masses)


def matched_total_variation(estimate, reference):
    """Total variation after moving every estimated atom onto its nearest
    reference atom (L1); compares an estimate with a declared measure."""
    ref = reference.points
    mass = np.zeros(len(ref))
    for w, th in estimate.atoms:
        mass[np.abs(ref - np.asarray(th)).sum(axis=1).argmin()] += w
    return 0.5 * float(np.abs(mass - reference.weights).sum())


def nearest_atoms(estimate, reference):
    """For each reference atom: (L1 distance to the closest estimated atom,
    the estimated mass matched to it)."""
    est = estimate.points
    out = []
    for _, th in reference.atoms:
        d = np.abs(est - np.asarray(th)).sum(axis=1)
        j = int(d.argmin())
        out.append((float(d[j]), float(estimate.weights[j])))
    return out
