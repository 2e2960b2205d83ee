import jsonschema
import numpy as np
import pytest

from helpers import example_config
from liquidscore.synthetic import generate, true_curve, write_dataset

STEP_WEIGHTS = [0.8, 0.2, -0.3, -1.0]


def step_config(n, seed=21, balance=0.6):
    return {
        "seed": seed,
        "n_records": n,
        "class_balance": balance,
        "characteristics": [
            {
                "name": "a",
                "distribution": {"kind": "choice", "values": [0, 1, 2, 3]},
                "curve": {"kind": "step", "knots": [0, 1, 2, 3, 4], "weights": STEP_WEIGHTS},
            }
        ],
    }


class TestGenerate:
    def test_columns(self):
        cols, info = generate(example_config())
        assert set(cols) == {"c170", "d1", "d2", "d3", "good", "sn"}
        assert all(v.size == 10_000 for v in cols.values())
        assert set(np.unique(cols["good"])) == {0.0, 1.0}
        assert set(np.unique(cols["sn"])) <= set(range(1, 11))
        assert info["score"].shape == (10_000,)

    def test_special_codes(self):
        cols, _ = generate(example_config())
        share = np.isin(cols["c170"], [-9999999, -9999998]).mean()
        assert 0.08 < share < 0.12

    def test_expected_balance_is_exact(self):
        from scipy.special import expit

        cols, info = generate(step_config(5000, balance=0.3))
        assert expit(info["intercept"] + info["score"]).mean() == pytest.approx(0.3, abs=1e-10)

    def test_empirical_log_odds(self):
        # one characteristic, so logit P(Good | attribute) = intercept + weight
        cols, info = generate(step_config(100_000))
        for v, w in enumerate(STEP_WEIGHTS):
            rate = cols["good"][cols["a"] == v].mean()
            assert np.log(rate / (1 - rate)) - info["intercept"] == pytest.approx(w, abs=0.1)

    def test_class_balance(self):
        cols, _ = generate(step_config(10_000, balance=0.5))
        assert 0.45 <= cols["good"].mean() <= 0.55

    def test_seed_changes_data(self):
        a, _ = generate(step_config(100, seed=1))
        b, _ = generate(step_config(100, seed=2))
        assert not np.array_equal(a["good"], b["good"]) or not np.array_equal(a["sn"], b["sn"])

    def test_reproducible_file(self, tmp_path):
        write_dataset(step_config(500, seed=7), tmp_path / "a.csv")
        write_dataset(step_config(500, seed=7), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestConfigValidation:
    def test_unknown_key(self):
        cfg = step_config(10)
        cfg["colour"] = "red"
        with pytest.raises(jsonschema.ValidationError):
            generate(cfg)

    def test_weight_count(self):
        cfg = step_config(10)
        cfg["characteristics"][0]["curve"]["weights"] = [1.0]
        with pytest.raises(ValueError, match="weights"):
            generate(cfg)

    def test_spline_coefficient_count(self):
        cfg = example_config()
        cfg["characteristics"][0]["curve"]["coeffs"] = [0.0]
        with pytest.raises(ValueError, match="coeffs"):
            generate(cfg)

    def test_special_probabilities(self):
        cfg = example_config()
        cfg["characteristics"][0]["special"][0]["prob"] = 0.99
        with pytest.raises(ValueError, match="exceed"):
            generate(cfg)


def test_true_curve_clamps():
    curve = {"kind": "step", "knots": [0, 1, 2], "weights": [1.0, 2.0]}
    np.testing.assert_array_equal(true_curve(curve, [-5, 0.5, 1, 2, 9]), [1, 1, 2, 2, 2])
