"""Run configurations: JSON documents checked against a schema before use.

Type indices in configuration files count from 1.
"""
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from . import models as md
from .errors import ConfigError
from .simulate import KINDS, SimConfig, DEFAULT_CAP

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}


def _dist(kind, props, required=()):
    return {
        "type": "object",
        "properties": {"kind": {"const": kind}, **props},
        "required": ["kind", *required],
        "additionalProperties": False,
    }


_pareto_props = {"alpha": _pos, "xm": _pos, "b": _prob}

DIST = {"oneOf": [
    _dist("pareto", _pareto_props, ["alpha"]),
    _dist("pareto_int", _pareto_props, ["alpha"]),
    _dist("exponential", {"rate": _pos}, ["rate"]),
    _dist("poisson", {"mean": _nonneg}, ["mean"]),
    _dist("bernoulli", {"p": _prob}, ["p"]),
    _dist("constant", {"value": _nonneg}, ["value"]),
    _dist("empirical", {"values": {"type": "array", "items": _nonneg, "minItems": 1}}, ["values"]),
]}

_vec = {"type": "array", "items": _nonneg, "minItems": 1}

JOINT = {"oneOf": [
    _dist("independent", {"Q": DIST, "N": {"type": "array", "items": DIST, "minItems": 1}}, ["Q", "N"]),
    _dist("mg1", {"Q": DIST, "rates": _vec}, ["Q", "rates"]),
    _dist("linked", {"Q": DIST, "slopes": _vec, "noise": {"type": "array", "items": DIST}}, ["Q", "slopes"]),
    _dist("atomic_mrv", {
        "radial": {"type": "object", "properties": _pareto_props, "required": ["alpha"],
                   "additionalProperties": False},
        "atoms": {"type": "array", "minItems": 1, "items": {
            "type": "object",
            "properties": {"weight": _nonneg, "theta": _vec},
            "required": ["weight", "theta"], "additionalProperties": False}},
    }, ["radial", "atoms"]),
    _dist("empirical", {
        "rows": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _nonneg, "minItems": 2}},
        "means": {"type": "object", "properties": {"q": _nonneg, "n": _vec},
                  "required": ["q", "n"], "additionalProperties": False},
        "provenance": {"type": "object"},
    }, ["rows"]),
]}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "model": {
            "type": "object",
            "properties": {"classes": {"type": "array", "items": JOINT, "minItems": 1}},
            "required": ["classes"],
            "additionalProperties": False,
        },
        "sim": {
            "type": "object",
            "properties": {
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "replications": {"type": "integer", "minimum": 1},
                "cap": {"type": "integer", "minimum": 1},
                "workers": {"type": "integer", "minimum": 1},
                "kind": {"enum": list(KINDS)},
                "type": {"type": "integer", "minimum": 1},
                "k0": _nonneg,
                "k1": _nonneg,
                "backend": {"enum": ["numba", "numpy"]},
            },
            "additionalProperties": False,
        },
        "validate": {
            "type": "object",
            "properties": {
                "grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                         "minItems": 1},
                "band": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                "type": {"type": "integer", "minimum": 1},
                "rbar_override": _nonneg,
                "prediction_samples": {"type": "integer", "minimum": 1000},
            },
            "additionalProperties": False,
        },
        "reduce": {
            "type": "object",
            "properties": {"samples": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "provenance": {"type": "object"},
    },
    "required": ["model"],
    "additionalProperties": False,
}

_validator = jsonschema.Draft202012Validator(SCHEMA)


@dataclass
class ValidateSettings:
    grid: tuple = (0.99, 0.999)
    band: tuple = (0.8, 1.2)
    type: int = 0
    rbar_override: float = None
    prediction_samples: int = 10**6


@dataclass
class RunConfig:
    raw: dict
    model: md.MulticlassModel
    sim: SimConfig
    kind: str = "R"
    type: int = 0
    k0: float = 0.0
    k1: float = 1.0
    validate: ValidateSettings = field(default_factory=ValidateSettings)
    reduce_samples: int = 10**5

    @property
    def model_hash(self):
        return canonical_hash(self.raw["model"])

    @property
    def config_hash(self):
        return canonical_hash(self.raw)


def canonical_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def check_schema(raw):
    errors = sorted(_validator.iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}")


def _type_index(value, K, what):
    if value > K:
        raise ConfigError(f"{what} type {value} exceeds K = {K}")
    return value - 1


def parse(raw, seed=None, workers=None):
    """Validate a config document and build the run settings.

    Criticality is checked here, so a supercritical model never gets past
    loading (Supercritical propagates).
    """
    check_schema(raw)
    try:
        model = md.model_from_dict(raw["model"], check=True)
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model section: {exc}") from None
    s = raw.get("sim", {})
    sim = SimConfig(
        seed=int(s.get("seed", 0) if seed is None else seed),
        replications=int(s.get("replications", 10**5)),
        cap=int(s.get("cap", DEFAULT_CAP)),
        workers=int(s.get("workers", 1) if workers is None else workers),
        backend=s.get("backend"),
    )
    v = raw.get("validate", {})
    vs = ValidateSettings(
        grid=tuple(v.get("grid", (0.99, 0.999))),
        band=tuple(v.get("band", (0.8, 1.2))),
        type=_type_index(v.get("type", 1), model.K, "validate"),
        rbar_override=v.get("rbar_override"),
        prediction_samples=int(v.get("prediction_samples", 10**6)),
    )
    if vs.band[0] > vs.band[1]:
        raise ConfigError("validate band must be [low, high]")
    return RunConfig(
        raw=raw, model=model, sim=sim,
        kind=s.get("kind", "R"),
        type=_type_index(s.get("type", 1), model.K, "sim"),
        k0=float(s.get("k0", 0.0)), k1=float(s.get("k1", 1.0)),
        validate=vs,
        reduce_samples=int(raw.get("reduce", {}).get("samples", 10**5)),
    )


def load(path, seed=None, workers=None):
    """Read and parse a config file.  OSError and JSON errors propagate."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse(raw, seed=seed, workers=workers)
