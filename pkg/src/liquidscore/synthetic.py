"""Seeded synthetic scorecard data with a known additive log-odds.

Each characteristic draws its value from a distribution, or with some
probability a sentinel code with its own true weight.  The true score is
the sum of the characteristic curves; labels are Good (1) with probability
``logistic(intercept + score)``, the intercept being solved so the expected
Good rate equals ``class_balance``.
"""

from __future__ import annotations

import copy

import jsonschema
import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from . import splines
from .tables import write_csv

_NUM = {"type": "number"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["seed", "n_records", "characteristics"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "n_records": {"type": "integer", "minimum": 1},
        "class_balance": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "label_column": {"type": "string"},
        "sample_column": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name", "values"],
            "properties": {
                "name": {"type": "string"},
                "values": {"type": "array", "items": _NUM, "minItems": 1},
            },
        },
        "characteristics": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "distribution", "curve"],
                "properties": {
                    "name": {"type": "string"},
                    "distribution": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["kind"],
                        "properties": {
                            "kind": {"enum": ["uniform", "loguniform", "normal", "choice"]},
                            "low": _NUM,
                            "high": _NUM,
                            "mean": _NUM,
                            "sd": {"type": "number", "minimum": 0},
                            "values": {"type": "array", "items": _NUM, "minItems": 1},
                            "probs": {"type": "array", "items": _NUM},
                        },
                    },
                    "special": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["value", "prob"],
                            "properties": {
                                "value": _NUM,
                                "prob": {"type": "number", "minimum": 0, "maximum": 1},
                                "weight": _NUM,
                            },
                        },
                    },
                    "curve": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["kind", "knots"],
                        "properties": {
                            "kind": {"enum": ["step", "spline"]},
                            "knots": {"type": "array", "items": _NUM, "minItems": 2},
                            "weights": {"type": "array", "items": _NUM},
                            "coeffs": {"type": "array", "items": _NUM},
                            "order": {"enum": [1, 2, 3, 4]},
                        },
                    },
                },
            },
        },
    },
}


def validate_config(config: dict) -> dict:
    jsonschema.validate(config, CONFIG_SCHEMA)
    cfg = copy.deepcopy(config)
    cfg.setdefault("class_balance", 0.5)
    cfg.setdefault("label_column", "good")
    cfg.setdefault("sample_column", {"name": "sn", "values": list(range(1, 11))})
    for ch in cfg["characteristics"]:
        cur = ch["curve"]
        k = splines.validate_knots(cur["knots"])
        if cur["kind"] == "step":
            if len(cur.get("weights", [])) != k.size - 1:
                raise ValueError(f"{ch['name']}: step curve needs {k.size - 1} weights")
        else:
            order = cur.setdefault("order", 4)
            if len(cur.get("coeffs", [])) != splines.n_basis(k.size, order):
                raise ValueError(f"{ch['name']}: spline curve needs {splines.n_basis(k.size, order)} coeffs")
        total = sum(s["prob"] for s in ch.get("special", []))
        if total > 1:
            raise ValueError(f"{ch['name']}: special-value probabilities exceed 1")
    return cfg


def _draw(rng, dist, n):
    kind = dist["kind"]
    if kind == "uniform":
        return rng.uniform(dist["low"], dist["high"], n)
    if kind == "loguniform":
        # uniform in log(x + 1), so a zero lower bound is allowed
        lo, hi = np.log1p(dist["low"]), np.log1p(dist["high"])
        return np.expm1(rng.uniform(lo, hi, n))
    if kind == "normal":
        return rng.normal(dist["mean"], dist["sd"], n)
    values = np.asarray(dist["values"], dtype=float)
    probs = dist.get("probs")
    if probs is not None:
        probs = np.asarray(probs, dtype=float) / np.sum(probs)
    return rng.choice(values, size=n, p=probs)


def true_curve(curve: dict, x) -> np.ndarray:
    """Evaluate a config curve at `x`, clamping to its knot range."""
    k = np.asarray(curve["knots"], dtype=float)
    xc = np.clip(np.asarray(x, dtype=float), k[0], k[-1])
    if curve["kind"] == "step":
        w = np.asarray(curve["weights"], dtype=float)
        idx = np.clip(np.searchsorted(k, xc, side="right") - 1, 0, w.size - 1)
        return w[idx]
    return splines.spline_values(xc, curve["coeffs"], k, curve.get("order", 4))


def generate(config: dict):
    """Return ``(columns, info)``; `info` records the solved intercept and true scores."""
    cfg = validate_config(config)
    rng = np.random.default_rng(cfg["seed"])
    n = cfg["n_records"]
    columns: dict[str, np.ndarray] = {}
    score = np.zeros(n)
    for ch in cfg["characteristics"]:
        x = _draw(rng, ch["distribution"], n)
        contrib = true_curve(ch["curve"], x)
        specials = ch.get("special", [])
        if specials:
            u = rng.random(n)
            edge = 0.0
            for s in specials:
                hit = (u >= edge) & (u < edge + s["prob"])
                x[hit] = s["value"]
                contrib[hit] = s.get("weight", 0.0)
                edge += s["prob"]
        columns[ch["name"]] = x
        score += contrib

    target = cfg["class_balance"]
    lo, hi = -50.0 - np.abs(score).max(), 50.0 + np.abs(score).max()
    intercept = brentq(lambda a: expit(a + score).mean() - target, lo, hi, xtol=1e-12)
    good = (rng.random(n) < expit(intercept + score)).astype(float)
    sc = cfg["sample_column"]
    sample = rng.choice(np.asarray(sc["values"], dtype=float), size=n)
    columns[cfg["label_column"]] = good
    columns[sc["name"]] = sample
    return columns, {"intercept": float(intercept), "score": score}


def write_dataset(config: dict, path) -> dict:
    columns, info = generate(config)
    write_csv(path, columns)
    return info
