"""Configuration files for the scenarios the library was validated on.

``tools/make_presets.py`` regenerates them.
"""
import json
from importlib import resources


def names():
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".json"))


def path(name):
    p = resources.files(__name__) / f"{name}.json"
    if not p.is_file():
        raise KeyError(f"no preset named {name!r}; available: {', '.join(names())}")
    return p


def load_raw(name):
    return json.loads(path(name).read_text())
