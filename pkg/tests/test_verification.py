"""Tests for the oracle-backed check suites."""
import numpy as np
import pytest

from bihm import oracle
from bihm.model import random_model
from bihm.utils.streams import make_stream
from bihm.verification import (SUITES, check_bounds, check_grad, finite_difference_gradient, random_sizes,
                               relative_error, run_checks, total_variation)


class TestHelpers:
    """Building blocks of the checks."""

    def test_random_sizes(self):
        rng = make_stream(81)
        for _ in range(100):
            sizes = random_sizes(rng)
            assert 2 <= len(sizes) <= 3
            assert all(1 <= s <= cap for s, cap in zip(sizes, (6, 4, 3)))

    def test_total_variation(self):
        assert total_variation(np.array([5.0, 5.0]), np.array([0.5, 0.5])) == 0.0
        assert total_variation(np.array([10.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)

    def test_finite_difference_leaves_model(self, tiny_model):
        before = [a.copy() for _, a in tiny_model.parameters()]
        finite_difference_gradient(lambda m: float(m.prior.biases.sum()), tiny_model)
        for (_, after), original in zip(tiny_model.parameters(), before):
            np.testing.assert_array_equal(after, original)

    def test_relative_error_zero_for_exact(self):
        model = random_model([2, 2], make_stream(82))
        gradient = oracle.exact_grad_log_ptilde(model, np.array([1.0, 0.0]))
        assert relative_error(gradient, gradient.arrays()) == 0.0


class TestSuites:
    """The suites pass on their own seeds."""

    def test_bounds(self):
        results = check_bounds(num_models=10)
        assert len(results) == 5
        assert all(r.passed for r in results), [r.detail for r in results if not r.passed]

    def test_grad(self):
        results = check_grad(num_models=2, k=100000)
        assert all(r.passed for r in results), [r.detail for r in results if not r.passed]

    def test_registry(self):
        assert set(SUITES) == {"bound", "z", "grad", "gibbs"}

    @pytest.mark.slow
    def test_all(self):
        results = run_checks(["all"])
        assert all(r.passed for r in results), [(r.name, r.detail) for r in results if not r.passed]
