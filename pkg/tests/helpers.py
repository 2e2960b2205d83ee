"""Shared fixtures: the shipped example spec/config and small builders."""

import copy
import json
from functools import lru_cache
from pathlib import Path

from liquidscore.specfile import parse_spec
from liquidscore.synthetic import generate

DOCS = Path(__file__).resolve().parent.parent / "docs"
CHAR170_KNOTS = [0, 5, 25, 35, 300, 1000]
CHAR170_WEIGHTS = [0.306, 0.157, -0.067, -0.259, -0.888]


def load_doc(name):
    with open(DOCS / name) as fh:
        return json.load(fh)


def example_spec_doc():
    return load_doc("example_spec.json")


def example_config():
    return load_doc("example_config.json")


@lru_cache(maxsize=None)
def _example_data(seed, n):
    cfg = example_config()
    cfg["seed"], cfg["n_records"] = seed, n
    cols, _ = generate(cfg)
    return cols


def example_data(seed=3, n=10_000):
    return {k: v.copy() for k, v in _example_data(seed, n).items()}


def example_spec(**changes):
    """Parse the example spec after applying top-level or dotted-key overrides."""
    doc = copy.deepcopy(example_spec_doc())
    for key, value in changes.items():
        target = doc
        *path, last = key.split("__")
        for part in path:
            target = target.setdefault(part, {})
        target[last] = value
    return parse_spec(doc)


def with_liquid_order(doc, order):
    doc = copy.deepcopy(doc)
    for c in doc["characteristics"]:
        if "liquid" in c:
            c["liquid"]["order"] = order
    return doc
