"""Tests for log-domain helpers, random streams, checks and settings."""
import json
import math

import numpy as np
import pytest

from bihm.config.settings import Config
from bihm.errors import ArgumentError, ShapeError
from bihm.utils import checks
from bihm.utils.logmath import (bernoulli_log_prob, clamped_residual, clamped_sigmoid, log_mean_exp,
                                 log_mean_exp_with_error)
from bihm.utils.streams import make_stream, substreams


class TestLogMath:
    """Stable log-domain arithmetic."""

    def test_clamping(self):
        means = clamped_sigmoid(np.array([-100.0, 0.0, 100.0]))
        np.testing.assert_allclose(means, [1e-7, 0.5, 1.0 - 1e-7])
        assert np.isfinite(bernoulli_log_prob(means, np.array([1.0, 1.0, 0.0])))

    def test_residual_zero_where_clamped(self):
        residual = clamped_residual(np.array([-40.0, 0.0, 40.0]), np.array([1.0, 1.0, 0.0]))
        np.testing.assert_allclose(residual, [0.0, 0.5, 0.0])

    def test_log_mean_exp_large_values(self):
        np.testing.assert_allclose(log_mean_exp(np.array([1000.0, 1000.0])), 1000.0)

    def test_standard_error(self):
        values = np.log(np.array([1.0, 2.0, 3.0, 4.0]))
        log_mean, rel_error = log_mean_exp_with_error(values)
        np.testing.assert_allclose(log_mean, math.log(2.5))
        np.testing.assert_allclose(rel_error, np.std([1, 2, 3, 4], ddof=1) / 2.0 / 2.5)

    def test_single_sample_has_no_error(self):
        _, rel_error = log_mean_exp_with_error(np.array([-3.0]))
        assert rel_error == 0.0

    def test_all_negative_infinity(self):
        log_mean, rel_error = log_mean_exp_with_error(np.full(3, -np.inf))
        assert log_mean == -np.inf
        assert rel_error == 0.0


class TestStreams:
    """Seeded generators and their substreams."""

    def test_same_seed_same_draws(self):
        np.testing.assert_array_equal(make_stream(9).random(5), make_stream(9).random(5))

    def test_substreams_deterministic(self):
        first = [s.random(3) for s in substreams(make_stream(9), 3)]
        second = [s.random(3) for s in substreams(make_stream(9), 3)]
        np.testing.assert_array_equal(first, second)

    def test_substreams_differ(self):
        parent = make_stream(9)
        draws = [s.random() for s in substreams(parent, 4)] + [parent.random()]
        assert len(set(draws)) == 5


class TestChecks:
    """Argument parsing and validation."""

    def test_layer_list(self):
        assert checks.layer_list("300,200,100") == [300, 200, 100]
        assert checks.layer_list("4, 2,") == [4, 2]

    @pytest.mark.parametrize("text", ["", "3,0", "a,b", "-1"])
    def test_layer_list_rejects(self, text):
        with pytest.raises(ArgumentError):
            checks.layer_list(text)

    def test_count_list(self):
        assert checks.count_list("10,100,1000", "K") == [10, 100, 1000]
        assert checks.count_list(25, "K") == [25]
        with pytest.raises(ArgumentError):
            checks.count_list("0", "K")

    def test_positive(self):
        assert checks.positive(3, "k") == 3
        with pytest.raises(ArgumentError):
            checks.positive(0, "k")
        with pytest.raises(ArgumentError):
            checks.positive(2.5, "k")

    def test_last_dim(self):
        assert checks.last_dim([[0, 1, 0]], 3, "x").dtype == np.float64
        with pytest.raises(ShapeError):
            checks.last_dim(np.zeros((2, 4)), 3, "x")


class TestConfig:
    """The JSON settings file."""

    def test_missing_file_uses_defaults(self, tmp_path):
        config = Config(tmp_path / "absent.json")
        assert config.mode == "prod"
        assert config.seed == 0
        assert config.enum_max_bits == 24
        assert (config.z_outer, config.z_inner) == (10000, 1)

    def test_bad_json_uses_defaults(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert Config(path).eval_k == 1000

    def test_values_from_file(self, tmp_path):
        path = tmp_path / "bihm.json"
        path.write_text(json.dumps({"seed": 11, "proposals_per_step": 5, "log_dir": "elsewhere"}))
        config = Config(path)
        assert config.seed == 11
        assert config.proposals_per_step == 5
        assert config.log_dir.name == "elsewhere"

    def test_read_only(self, tmp_path):
        path = tmp_path / "bihm.json"
        path.write_text(json.dumps({"seed": 11}))
        config = Config(path)
        with pytest.raises(AttributeError):
            config.seed = 42
        assert json.loads(path.read_text()) == {"seed": 11}

    def test_reading_never_creates_file(self, tmp_path):
        config = Config(tmp_path / "bihm.json")
        assert config.mode == "prod"
        assert not (tmp_path / "bihm.json").exists()
