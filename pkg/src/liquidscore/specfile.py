"""JSON scorecard specification files.

The schema is strict (unknown keys are rejected) and is shipped as
``docs/spec_schema.json``.  Coefficient references in constraints take one
of these forms::

    12                                  coefficient number (1-based)
    {"coeff": 12}                       same
    {"char": "c170", "attr": "0-<5"}    attribute of a characteristic
    {"char": "c170", "basis": 1}        basis position (1-based)
"""

from __future__ import annotations

import json

import jsonschema

from .scorecard import (
    Attribute,
    CharacteristicSpec,
    ConstraintDecl,
    FitOptions,
    LiquidPart,
    MonotoneRun,
    Ref,
    ScorecardSpec,
)


class SpecError(ValueError):
    pass


_NUM = {"type": "number"}
_DIRECTION = {"enum": ["<", ">"]}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "liquid scorecard specification",
    "type": "object",
    "additionalProperties": False,
    "required": ["characteristics"],
    "$defs": {
        "ref": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["coeff"],
                    "properties": {"coeff": {"type": "integer", "minimum": 1}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["char", "attr"],
                    "properties": {"char": {"type": "string"}, "attr": {"type": "string"}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["char", "basis"],
                    "properties": {"char": {"type": "string"}, "basis": {"type": "integer", "minimum": 1}},
                },
            ]
        },
        "attribute": {
            "type": "object",
            "additionalProperties": False,
            "required": ["label"],
            "properties": {
                "label": {"type": "string"},
                "value": _NUM,
                "values": {"type": "array", "items": _NUM, "minItems": 1},
                "low": {"type": ["number", "null"]},
                "high": {"type": ["number", "null"]},
            },
        },
        "characteristic": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"type": "string", "minLength": 1},
                "column": {"type": "string"},
                "attributes": {"type": "array", "items": {"$ref": "#/$defs/attribute"}},
                "liquid": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["knots"],
                    "properties": {
                        "knots": {"type": "array", "items": _NUM, "minItems": 2},
                        "order": {"enum": [1, 2, 3, 4]},
                        "log_axis": {"type": "boolean"},
                        "roughness_weight": {"type": "number", "minimum": 0},
                    },
                },
            },
        },
    },
    "properties": {
        "layout": {"enum": ["sectioned", "grouped"]},
        "characteristics": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/characteristic"}},
        "constraints": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "inweights": {
                    "type": "array",
                    "items": {
                        "oneOf": [
                            {"$ref": "#/$defs/ref"},
                            {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["ref"],
                                "properties": {"ref": {"$ref": "#/$defs/ref"}, "value": _NUM},
                            },
                        ]
                    },
                },
                "crosses": {
                    "type": "array",
                    "items": {"type": "array", "items": {"$ref": "#/$defs/ref"}, "minItems": 2, "maxItems": 2},
                },
                "centering_groups": {
                    "oneOf": [
                        {"enum": ["auto-per-characteristic", "none"]},
                        {"type": "array", "items": {"type": "array", "items": {"$ref": "#/$defs/ref"}}},
                    ]
                },
                "patterns": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["left", "right", "direction"],
                        "properties": {
                            "left": {"$ref": "#/$defs/ref"},
                            "right": {"$ref": "#/$defs/ref"},
                            "direction": _DIRECTION,
                        },
                    },
                },
                "monotone": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["char", "direction"],
                        "properties": {
                            "char": {"type": "string"},
                            "direction": _DIRECTION,
                            "start": {"type": "integer", "minimum": 1},
                            "stop": {"type": "integer", "minimum": 1},
                        },
                    },
                },
            },
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "lambda": {"type": "number", "minimum": 0},
                "roughness_weight": {"type": "number", "minimum": 0},
                "label_column": {"type": "string"},
                "max_iter": {"type": "integer", "minimum": 1},
                "split": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["column", "validation_values"],
                    "properties": {
                        "column": {"type": "string"},
                        "validation_values": {"type": "array", "items": _NUM},
                    },
                },
            },
        },
        "start_point": {"type": "array", "items": _NUM},
    },
}


def _ref(obj) -> Ref:
    if isinstance(obj, int):
        return Ref(coeff=obj)
    return Ref(**obj)


def _attribute(obj) -> Attribute:
    values = obj.get("values", [])
    if "value" in obj:
        values = [obj["value"], *values]
    return Attribute(label=obj["label"], values=tuple(values), low=obj.get("low"), high=obj.get("high"))


def parse_spec(doc: dict) -> ScorecardSpec:
    """Validate `doc` against the schema and build a :class:`ScorecardSpec`."""
    try:
        jsonschema.validate(doc, SPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecError(f"schema error at {where}: {exc.message}") from None
    try:
        chars = []
        for c in doc["characteristics"]:
            liquid = None
            if "liquid" in c:
                lq = c["liquid"]
                liquid = LiquidPart(
                    knots=tuple(lq["knots"]),
                    order=lq.get("order", 4),
                    log_axis=lq.get("log_axis", False),
                    roughness_weight=lq.get("roughness_weight"),
                )
            chars.append(
                CharacteristicSpec(
                    name=c["name"],
                    column=c.get("column", c["name"]),
                    attributes=tuple(_attribute(a) for a in c.get("attributes", [])),
                    liquid=liquid,
                )
            )
        con = doc.get("constraints", {})
        inweights = []
        for item in con.get("inweights", []):
            if isinstance(item, dict) and "ref" in item:
                inweights.append((_ref(item["ref"]), float(item.get("value", 0.0))))
            else:
                inweights.append((_ref(item), 0.0))
        centering = con.get("centering_groups", "auto-per-characteristic")
        if centering == "auto-per-characteristic":
            centering = "auto"
        elif centering != "none":
            centering = tuple(tuple(_ref(r) for r in g) for g in centering)
        decl = ConstraintDecl(
            inweights=tuple(inweights),
            crosses=tuple((_ref(a), _ref(b)) for a, b in con.get("crosses", [])),
            centering=centering,
            patterns=tuple((_ref(p["left"]), _ref(p["right"]), p["direction"]) for p in con.get("patterns", [])),
            monotone=tuple(MonotoneRun(**m) for m in con.get("monotone", [])),
        )
        f = doc.get("fit", {})
        split = f.get("split")
        options = FitOptions(
            delta=f.get("delta", 1.0),
            lam=f.get("lambda", 0.0),
            roughness_weight=f.get("roughness_weight", 0.0),
            label_column=f.get("label_column", "good"),
            split_column=None if split is None else split["column"],
            validation_values=() if split is None else tuple(split["validation_values"]),
            max_iter=f.get("max_iter"),
        )
        start = doc.get("start_point")
        return ScorecardSpec(
            characteristics=tuple(chars),
            constraints=decl,
            fit=options,
            layout=doc.get("layout", "sectioned"),
            start_point=None if start is None else tuple(start),
        )
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc)) from exc


def load_spec(path) -> ScorecardSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON: {exc}") from None
    return parse_spec(doc)
