"""Regenerate the JSON presets shipped in src/branchtail/presets.

The two-type atomic preset is solved numerically: for each type the radial
tail multiplier b is chosen so that the atom weights that reproduce the
target mean matrix and mean weights sum to one.
"""
import json
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from branchtail import heavy_tails as ht
from branchtail import models as md

OUT = Path(__file__).resolve().parents[1] / "src" / "branchtail" / "presets"

P15 = ht.Pareto(1.5, 1.0)
THIRD = 1.0 / 3.0
MIXED = (THIRD, THIRD, 1.0 - 2 * THIRD)
MIXED_WEIGHT = 0.2

TWO_TYPE_M = np.array([[0.3, 0.2], [0.4, 0.2]])
TWO_TYPE_Q = np.array([1.0, 1.0])


def _atom_weights(row, qi, b):
    r = ht.Pareto(1.5, 1.0, b)
    f1, fm = r.floor_mean(1.0), r.floor_mean(THIRD)
    w0 = qi / r.mean() - MIXED_WEIGHT * MIXED[0]
    w1 = (row[0] - MIXED_WEIGHT * fm) / f1
    w2 = (row[1] - MIXED_WEIGHT * fm) / f1
    return np.array([w0, w1, w2, MIXED_WEIGHT])


def atomic_type(row, qi):
    b = brentq(lambda b: _atom_weights(row, qi, b).sum() - 1.0, 0.01, 1.0, xtol=1e-15, rtol=1e-15)
    w = _atom_weights(row, qi, b)
    w[0] = 1.0 - w[1:].sum()
    pts = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), MIXED]
    return md.AtomicMRV(ht.Pareto(1.5, 1.0, b), md.AngularMeasure(tuple(zip(w, pts))))


def doc(name, description, classes, sim=None, validate=None):
    d = {"name": name, "description": description,
         "model": {"classes": [c.to_dict() for c in classes]}}
    if sim:
        d["sim"] = sim
    if validate:
        d["validate"] = validate
    return d


def presets():
    band = {"grid": [0.99, 0.999], "band": [0.8, 1.2]}
    yield doc("mg1_flagship", "Busy period: Pareto(1.5) service, Poisson arrivals at rate 0.25",
              [md.MG1(P15, (0.25,))],
              {"seed": 20240501, "replications": 10**7, "workers": 4}, band)
    yield doc("dominant_q", "Heavy Pareto(1.5) weight, independent Poisson(0.25) offspring",
              [md.IndependentPair(P15, ht.Poisson(0.25))],
              {"seed": 20240502, "replications": 10**7, "workers": 4}, band)
    yield doc("dominant_n", "Light Exp(1) weight, independent heavy floored-Pareto offspring",
              [md.IndependentPair(ht.Exponential(1.0), ht.ParetoInteger(1.5, 1.0, 0.05))],
              {"seed": 20240503, "replications": 10**7, "workers": 4}, band)
    yield doc("atomic_single", "Jointly regularly varying (Q, N) with three angular atoms",
              [md.AtomicMRV(P15, md.AngularMeasure(((0.6, (1.0, 0.0)), (0.2, (0.5, 0.5)), (0.2, (0.0, 1.0)))))],
              {"seed": 20240504, "replications": 10**6, "workers": 4}, band)
    yield doc("atomic_two_type", "Two types, atomic joint tails, mean matrix [[0.3,0.2],[0.4,0.2]], unit mean weights",
              [atomic_type(TWO_TYPE_M[i], TWO_TYPE_Q[i]) for i in range(2)],
              {"seed": 20240505, "replications": 10**7, "workers": 4, "type": 1},
              {"grid": [0.999], "band": [0.75, 1.25], "type": 1})
    yield doc("mg1_three_type", "Three customer classes sharing Pareto(1.5) service times",
              [md.MG1(P15, (0.05, 0.05, 0.05)), md.MG1(P15, (0.05, 0.1, 0.05)), md.MG1(P15, (0.1, 0.05, 0.05))],
              {"seed": 20240506, "replications": 10**6, "workers": 4})
    yield doc("no_offspring", "N = 0: the fixed point is the weight itself",
              [md.IndependentPair(P15, ht.Constant(0.0))],
              {"seed": 20240507, "replications": 10**6}, {"grid": [0.9, 0.99, 0.999], "band": [0.95, 1.05]})
    yield doc("bernoulli_progeny", "Unit weights and Bernoulli(1/2) offspring: geometric total progeny",
              [md.IndependentPair(ht.Constant(1.0), ht.Bernoulli(0.5))],
              {"seed": 20240508, "replications": 10**5, "kind": "tau"})
    yield doc("supercritical_mg1", "Arrival rate 0.4: mean offspring 1.2, rejected at load",
              [md.MG1(P15, (0.4,))])


def main():
    OUT.mkdir(exist_ok=True)
    for d in presets():
        (OUT / f"{d['name']}.json").write_text(json.dumps(d, indent=2) + "\n")
        print("wrote", d["name"])


if __name__ == "__main__":
    main()
