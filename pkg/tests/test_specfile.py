import copy
import json

import jsonschema
import pytest

from helpers import DOCS, example_spec_doc
from liquidscore.scorecard import MonotoneRun, Ref
from liquidscore.specfile import SPEC_SCHEMA, SpecError, load_spec, parse_spec


def test_shipped_schema_is_current():
    with open(DOCS / "spec_schema.json") as fh:
        assert json.load(fh) == SPEC_SCHEMA


def test_example_validates():
    jsonschema.validate(example_spec_doc(), SPEC_SCHEMA)
    spec = load_spec(DOCS / "example_spec.json")
    assert [c.name for c in spec.characteristics] == ["d1", "d2", "d3", "c170"]
    assert spec.fit.split_column == "sn" and spec.fit.validation_values == (1, 4, 8)


class TestParse:
    def test_reference_forms(self):
        doc = example_spec_doc()
        doc["constraints"]["inweights"] = [3, {"coeff": 4}, {"ref": {"char": "c170", "basis": 2}, "value": 0.5}]
        cons = parse_spec(doc).constraints
        assert cons.inweights == (
            (Ref(coeff=3), 0.0),
            (Ref(coeff=4), 0.0),
            (Ref(char="c170", basis=2), 0.5),
        )

    def test_single_value_attribute(self):
        spec = parse_spec(example_spec_doc())
        assert spec.characteristic("d1").attributes[2].values == (2.0,)

    def test_centering_modes(self):
        doc = example_spec_doc()
        assert parse_spec(doc).constraints.centering == "auto"
        doc["constraints"]["centering_groups"] = "none"
        assert parse_spec(doc).constraints.centering == "none"
        doc["constraints"]["centering_groups"] = [[1, 2], [{"char": "d3", "attr": "lo"}]]
        groups = parse_spec(doc).constraints.centering
        assert groups == ((Ref(coeff=1), Ref(coeff=2)), (Ref(char="d3", attr="lo"),))

    def test_monotone(self):
        assert parse_spec(example_spec_doc()).constraints.monotone == (MonotoneRun("c170", ">"),)

    def test_defaults(self):
        spec = parse_spec({"characteristics": [{"name": "a", "attributes": [{"label": "x", "low": 0}]}]})
        assert spec.layout == "sectioned"
        assert spec.fit.split_column is None
        assert spec.characteristics[0].column == "a"


class TestRejects:
    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: d.update(extra=1),
            lambda d: d["fit"].update(lamda=0.1),
            lambda d: d["characteristics"][3]["liquid"].update(order=5),
            lambda d: d["constraints"]["patterns"][0].update(direction=">="),
            lambda d: d["constraints"].update(crosses=[[1]]),
            lambda d: d["fit"].update(delta=0),
            lambda d: d.pop("characteristics"),
        ],
        ids=["top-level", "fit-typo", "order", "direction", "cross-arity", "delta", "missing"],
    )
    def test_schema(self, mutate):
        doc = copy.deepcopy(example_spec_doc())
        mutate(doc)
        with pytest.raises(SpecError, match="schema error"):
            parse_spec(doc)

    def test_semantic(self):
        doc = example_spec_doc()
        doc["characteristics"][3]["liquid"]["knots"] = [0, 5, 5, 10]
        with pytest.raises(SpecError, match="increasing"):
            parse_spec(doc)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text("{not json")
        with pytest.raises(SpecError, match="invalid JSON"):
            load_spec(path)
