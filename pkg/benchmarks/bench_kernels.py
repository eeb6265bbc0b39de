"""Numba kernels against the vectorised numpy fallback.

    python3 benchmarks/bench_kernels.py [--reps 200000] [--repeat 3]

Each row times one batch call per backend (best of --repeat, after a warm-up
call so JIT compilation is excluded) and checks that both backends agree:
integer outputs exactly, continuous ones to rounding.
"""
import argparse
import time

import numpy as np

from branchtail import heavy_tails as ht
from branchtail import kernels
from branchtail import presets
from branchtail.config import parse
from branchtail.kernels.rng import rep_keys


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(reps):
    keys = rep_keys(1, np.arange(reps, dtype=np.uint64))
    mg1 = parse(presets.load_raw("mg1_flagship")).model.packed
    two = parse(presets.load_raw("atomic_two_type")).model.packed
    three = parse(presets.load_raw("mg1_three_type")).model.packed
    z, pool = ht.pack(ht.Pareto(1.5, 1.0))
    counts = np.full(reps, 50, dtype=np.int64)
    yield "trees, MG1 single type", lambda be: kernels.trees(mg1, 0, keys, 10**7, backend=be)
    yield "trees, atomic two types", lambda be: kernels.trees(two, 0, keys, 10**7, backend=be)
    yield "trees, three types, reduced", lambda be: kernels.trees(three, 0, keys, 10**7, reduced=True, backend=be)
    yield "walks, MG1 V(0,1)", lambda be: kernels.walks(mg1, keys, 10**7, 0.0, 1.0, backend=be)
    yield "compound sums, 50 summands", lambda be: (kernels.compound_sums(counts, z, pool, keys, backend=be),) * 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"{'case':32s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s}  match")
    for name, run in cases(args.reps):
        t_nb, out_nb = best_of(lambda: run("numba"), args.repeat)
        t_np, out_np = best_of(lambda: run("numpy"), args.repeat)
        a, b = out_nb[1], out_np[1]
        match = np.array_equal(a, b) if a.dtype.kind == "i" else np.allclose(a, b, rtol=1e-12, atol=0)
        print(f"{name:32s} {t_nb:9.3f} {t_np:9.3f} {t_np / t_nb:8.1f}x  {match}")


if __name__ == "__main__":
    main()
