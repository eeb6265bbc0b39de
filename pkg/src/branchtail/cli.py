"""Command line: ``branchtail {analyze,simulate,validate,reduce}``.

Exit codes: 0 ok, 2 configuration, 3 criticality, 4 I/O, 5 validation band.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import asymptotics as A
from . import config as cfgmod
from . import models as md
from . import presets
from . import tailstats as T
from .errors import (ConfigError, DegenerateSubtree, DimensionMismatch, InfiniteMean,
                     Supercritical, UnsupportedAnalytic)
from .simulate import SimConfig, run_replications

EXIT_OK, EXIT_CONFIG, EXIT_CRITICAL, EXIT_IO, EXIT_BAND = 0, 2, 3, 4, 5

# prediction draws must not reuse the simulation stream
PREDICTION_SALT = 0x7F4A7C159E3779B9
REDUCE_SALT = 0x2545F4914F6CDD1D


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _fmt(x):
    return np.array2string(np.asarray(x, dtype=float), precision=6, floatmode="fixed",
                           suppress_small=False, separator=", ")


def _load(args):
    if args.config and args.preset:
        raise CliError(EXIT_CONFIG, "give --config or --preset, not both")
    if args.preset:
        try:
            raw = presets.load_raw(args.preset)
        except KeyError as exc:
            raise CliError(EXIT_CONFIG, str(exc.args[0])) from None
        return cfgmod.parse(raw, seed=args.seed, workers=args.workers)
    if not args.config:
        raise CliError(EXIT_CONFIG, "no configuration given (use --config PATH or --preset NAME)")
    return cfgmod.load(args.config, seed=args.seed, workers=args.workers)


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- analyze ----------------------------------------------------------------

def analyze_report(model):
    lines = []
    M, qbar = model.M, model.qbar
    ms = A.solve_means(M, qbar)
    rho = A.spectral_radius(M)
    lines.append(f"K = {model.K}")
    lines.append(f"rho = {rho:.6f}")
    lines.append(f"qbar = {_fmt(qbar)}")
    lines.append("M =")
    for row in M:
        lines.append(f"  {_fmt(row)}")
    lines.append(f"rbar = {_fmt(ms.rbar)}")
    if model.K == 1:
        nbar = M[0, 0]
        lines.append(f"nbar = {nbar:.6f}")
        lines.append(f"prefactor 1/(1-nbar) = {1.0 / (1.0 - nbar):.6f}")
    try:
        ts, alpha, _ = A.tail_multipliers(model)
    except UnsupportedAnalytic as exc:
        lines.append(f"tail constants: not available ({exc})")
    else:
        lines.append(f"alpha = {alpha:.6g} (reference tail x^-alpha)")
        lines.append(f"c = {_fmt(ts.c)}")
        lines.append(f"d = {_fmt(ts.d)}")
        zero = [i + 1 for i, c in enumerate(ts.c) if c == 0]
        if zero:
            lines.append(f"note: types {zero} have no tail at this index, c_i = 0")
    if model.K >= 2:
        lines.append("reduction chain (eliminating the last type each step):")
        Mk, qk = M, qbar
        while Mk.shape[0] > 1:
            try:
                red = A.reduce_means(Mk, qk)
            except DegenerateSubtree as exc:
                lines.append(f"  stopped: {exc}")
                break
            Mk, qk = red.M, red.qbar
            lines.append(f"  K={Mk.shape[0]}: M~ = {_fmt(Mk.ravel() if Mk.shape[0] == 1 else Mk.tolist())}, "
                         f"q~ = {_fmt(qk)}")
        if Mk.shape[0] == 1:
            r1 = qk[0] / (1.0 - Mk[0, 0])
            lines.append(f"  chain rbar_1 = {r1:.10f} (direct {ms.rbar[0]:.10f})")
    return "\n".join(lines) + "\n"


def cmd_analyze(args):
    rc = _load(args)
    _emit(analyze_report(rc.model), args.out)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------

def _write_samples(path, values, meta):
    path = Path(path)
    with path.open("w") as fh:
        fh.write("".join(f"{v:.17g}\n" for v in values))
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args):
    rc = _load(args)
    if not args.out:
        raise CliError(EXIT_CONFIG, "simulate needs --out PATH")
    batch = run_replications(rc.kind, rc.model, rc.sim, i=rc.type, k0=rc.k0, k1=rc.k1)
    values = batch.values
    if values.ndim > 1:
        raise CliError(EXIT_CONFIG, "kind 'reduced_pair' produces rows; use the reduce subcommand")
    meta = {
        "seed": rc.sim.seed,
        "replications": rc.sim.replications,
        "cap": rc.sim.cap,
        "kind": rc.kind,
        "type": rc.type + 1,
        "model_hash": rc.model_hash,
        "truncation_count": batch.truncation_count,
    }
    _write_samples(args.out, values, meta)
    if not args.quiet:
        print(f"wrote {values.size} samples to {args.out} "
              f"({batch.truncation_count} truncated at cap {rc.sim.cap})", file=sys.stderr)
    return EXIT_OK


# -- validate ---------------------------------------------------------------

def _predictor(rc):
    v = rc.validate
    model = rc.model
    seed = rc.sim.seed ^ PREDICTION_SALT
    if model.K == 1:
        return A.single_tail_predictor(model, rbar=v.rbar_override, nsamples=v.prediction_samples, seed=seed)
    if v.rbar_override is not None:
        raise ConfigError("rbar_override applies to single-type models only")
    ts, alpha, _ = A.tail_multipliers(model)
    d = ts.d[v.type]
    return lambda x: d * x ** -alpha


def cmd_validate(args):
    rc = _load(args)
    batch = run_replications("R", rc.model, rc.sim, i=rc.validate.type)
    report = T.ratio_diagnostic(batch.values, _predictor(rc), rc.validate.grid)
    _emit(report.to_csv(), args.out)
    lo, hi = rc.validate.band
    bad = [r for r in report.rows if not lo <= r.ratio <= hi]
    if not args.quiet:
        for r in report.rows:
            flag = "ok" if lo <= r.ratio <= hi else "OUT OF BAND"
            print(f"x={r.x:.6g} ratio={r.ratio:.4f} [{lo}, {hi}] {flag}", file=sys.stderr)
        if batch.truncation_count:
            print(f"warning: {batch.truncation_count} replications truncated", file=sys.stderr)
    return EXIT_BAND if bad else EXIT_OK


# -- reduce -----------------------------------------------------------------

def reduce_config(rc, samples=None, seed=None):
    """Config document for the model with its last type eliminated."""
    model = rc.model
    if model.K < 2:
        raise CliError(EXIT_CONFIG, "nothing to reduce: the model has a single type")
    red = A.reduce_means(model.M, model.qbar)
    samples = rc.reduce_samples if samples is None else samples
    seed = rc.sim.seed if seed is None else seed
    parent = rc.config_hash
    classes = []
    for i in range(model.K - 1):
        sc = SimConfig(seed=((seed ^ REDUCE_SALT) + i) % 2**64, replications=samples, cap=rc.sim.cap,
                       workers=rc.sim.workers, backend=rc.sim.backend)
        rows = run_replications("reduced_pair", model, sc, i=i).values
        classes.append({
            "kind": "empirical",
            "rows": rows.tolist(),
            "means": {"q": float(red.qbar[i]), "n": [float(x) for x in red.M[i]]},
            "provenance": {"parent_hash": parent, "eliminated_type": model.K, "samples": samples,
                           "seed": sc.seed},
        })
    out = {"model": {"classes": classes},
           "provenance": {"parent_hash": parent, "eliminated_type": model.K}}
    if "name" in rc.raw:
        out["name"] = f"{rc.raw['name']}_reduced"
    sim = dict(rc.raw.get("sim", {}))
    if sim.get("type", 1) > model.K - 1:
        sim.pop("type")
    if sim:
        out["sim"] = sim
    if "reduce" in rc.raw:
        out["reduce"] = rc.raw["reduce"]
    return out


def cmd_reduce(args):
    rc = _load(args)
    if not args.out:
        raise CliError(EXIT_CONFIG, "reduce needs --out PATH")
    doc = reduce_config(rc)
    Path(args.out).write_text(json.dumps(doc) + "\n")
    if not args.quiet:
        print(f"wrote {rc.model.K - 1}-type config to {args.out}", file=sys.stderr)
    return EXIT_OK


# -- entry point ------------------------------------------------------------

COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "validate": cmd_validate, "reduce": cmd_reduce}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--preset", metavar="NAME", help=f"bundled configuration ({', '.join(presets.names())})")
    common.add_argument("--out", metavar="PATH", help="output file (stdout for reports when omitted)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--workers", type=int, help="override the configured worker count")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    p = argparse.ArgumentParser(prog="branchtail", description="Tails of branching fixed points")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="means, spectral radius, tail constants, reduction chain")
    sub.add_parser("simulate", parents=[common], help="write samples, one per line, plus a metadata sidecar")
    sub.add_parser("validate", parents=[common], help="compare simulated tails with the prediction")
    sub.add_parser("reduce", parents=[common], help="eliminate the last type, write the reduced config")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except (ConfigError, DimensionMismatch, UnsupportedAnalytic, InfiniteMean) as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except (Supercritical, DegenerateSubtree) as exc:
        code, msg = EXIT_CRITICAL, f"criticality: {exc}"
    except OSError as exc:
        code, msg = EXIT_IO, f"I/O error: {exc}"
    print(f"branchtail: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
