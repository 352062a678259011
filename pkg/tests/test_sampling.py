"""Tests for importance-resampling Gibbs updates, chains and inpainting."""
import numpy as np
import pytest
from scipy.stats import chisquare

from bihm import oracle
from bihm.errors import ArgumentError
from bihm.model import BeliefLayer, BihmModel, random_model, sample_q
from bihm.sampling import (GibbsConfig, GibbsState, expected_visible, gibbs_sample, gibbs_update_hidden,
                           gibbs_update_visible, inpaint, inpaint_state)
from bihm.utils.logmath import resample_index
from bihm.utils.streams import make_stream, substreams
from bihm.verification import total_variation


def _codes(bits):
    return (bits @ (2**np.arange(bits.shape[-1] - 1, -1, -1))).astype(int)


def _uniform_state(model, chains, rng):
    x = (rng.random((chains, model.visible_dim)) < 0.5).astype(float)
    return GibbsState(x, sample_q(model, x, rng))


class TestGibbsConfig:
    """Validated counts."""

    def test_rejects_zero(self):
        with pytest.raises(ArgumentError):
            GibbsConfig(proposals_per_step=0)
        with pytest.raises(ArgumentError):
            GibbsConfig(num_sweeps=0)


class TestHiddenUpdate:
    """Resampling one latent layer given its neighbours."""

    def test_zero_model_uniform(self, zero_model, rng):
        model = zero_model([2, 3])
        state = _uniform_state(model, 20000, rng)
        h = gibbs_update_hidden(model, state, 1, GibbsConfig(), rng)
        counts = np.bincount(_codes(h), minlength=8)
        assert chisquare(counts).pvalue > 0.001

    def test_matches_exact_conditional(self):
        model = random_model([3, 2, 2], make_stream(51))
        rng = make_stream(52)
        chains = 20000
        x, h2 = np.array([1.0, 0.0, 1.0]), np.array([0.0, 1.0])
        state = GibbsState(np.tile(x, (chains, 1)), [np.zeros((chains, 2)), np.tile(h2, (chains, 1))])
        h1 = gibbs_update_hidden(model, state, 1, GibbsConfig(proposals_per_step=100), rng)
        clamped = [x.astype(int), np.array([-1, -1]), h2.astype(int)]
        exact = oracle.exact_conditional_pstar(model, clamped)
        counts = np.bincount(_codes(h1), minlength=4)
        assert total_variation(counts, exact.probs) <= 0.03

    def test_top_layer(self):
        model = random_model([3, 2, 2], make_stream(53))
        rng = make_stream(54)
        chains = 20000
        x, h1 = np.array([0.0, 1.0, 1.0]), np.array([1.0, 1.0])
        state = GibbsState(np.tile(x, (chains, 1)), [np.tile(h1, (chains, 1)), np.zeros((chains, 2))])
        h2 = gibbs_update_hidden(model, state, 2, GibbsConfig(proposals_per_step=100), rng)
        exact = oracle.exact_conditional_pstar(model, [x.astype(int), h1.astype(int), np.array([-1, -1])])
        assert total_variation(np.bincount(_codes(h2), minlength=4), exact.probs) <= 0.03

    def test_layer_out_of_range(self, tiny_model, rng):
        state = _uniform_state(tiny_model, 2, rng)
        with pytest.raises(ArgumentError):
            gibbs_update_hidden(tiny_model, state, 0, GibbsConfig(), rng)
        with pytest.raises(ArgumentError):
            gibbs_update_hidden(tiny_model, state, 3, GibbsConfig(), rng)


class TestVisibleUpdate:
    """Resampling x given h_1."""

    def test_zero_model_uniform(self, zero_model, rng):
        model = zero_model([2, 1])
        state = _uniform_state(model, 5000, rng)
        x = gibbs_update_visible(model, state, GibbsConfig(), rng)
        assert chisquare(np.bincount(_codes(x), minlength=4)).pvalue > 0.001

    def test_single_proposal_is_kept(self, rng):
        model = BihmModel.zeros([3, 2])
        model.p_layers[0] = BeliefLayer(np.zeros((3, 2)), np.full(3, 20.0))
        state = _uniform_state(model, 50, rng)
        x = gibbs_update_visible(model, state, GibbsConfig(proposals_per_step=1), rng)
        np.testing.assert_array_equal(x, 1.0)

    def test_mask_keeps_observed(self, tiny_model, rng):
        state = _uniform_state(tiny_model, 500, rng)
        observed = np.array([1.0, 0.0, 0.0, 1.0])
        mask = np.array([1.0, 1.0, 0.0, 0.0])
        x = gibbs_update_visible(tiny_model, state, GibbsConfig(), rng, observed, mask)
        np.testing.assert_array_equal(x[:, :2], np.tile(observed[:2], (500, 1)))


class TestResampling:
    """Weight handling of the resampling step."""

    def test_single_candidate(self, rng):
        assert resample_index(np.array([-50.0]), rng) == 0

    def test_constant_factor_invariance(self):
        log_w = make_stream(55).normal(size=(6, 1000))
        first = resample_index(log_w, make_stream(56))
        second = resample_index(log_w + 123.0, make_stream(56))
        np.testing.assert_array_equal(first, second)

    def test_frequencies(self, rng):
        log_w = np.log(np.array([0.1, 0.6, 0.3]))[:, None] * np.ones((3, 100000))
        counts = np.bincount(resample_index(log_w, rng), minlength=3)
        np.testing.assert_allclose(counts / 100000, [0.1, 0.6, 0.3], atol=0.01)


class TestGibbsSample:
    """Full sweeps and stationarity."""

    def test_zero_model_uniform(self, zero_model, rng):
        model = zero_model([2, 2])
        state = gibbs_sample(model, None, GibbsConfig(num_sweeps=3), rng, num_chains=5000)
        assert chisquare(np.bincount(_codes(state.x), minlength=4)).pvalue > 0.001
        assert chisquare(np.bincount(_codes(state.latents[0]), minlength=4)).pvalue > 0.001

    def test_does_not_modify_init(self, tiny_model, rng):
        init = _uniform_state(tiny_model, 10, rng)
        before = init.copy()
        gibbs_sample(tiny_model, init, GibbsConfig(num_sweeps=2), rng)
        np.testing.assert_array_equal(init.x, before.x)
        for after, original in zip(init.latents, before.latents):
            np.testing.assert_array_equal(after, original)

    def test_stationary_distribution(self):
        model = random_model([3, 2], make_stream(57))
        exact = np.exp(oracle.exact_log_pstar(model, oracle.all_configs(3)))
        counts = np.zeros(8)
        for stream in substreams(make_stream(58), 4):
            state = gibbs_sample(model, None, GibbsConfig(num_sweeps=10), stream, num_chains=5000)
            counts += np.bincount(_codes(state.x), minlength=8)
        assert total_variation(counts, exact) <= 0.05


class TestInpaint:
    """Clamped chains over the unobserved bits."""

    def test_fully_observed(self, tiny_model, rng):
        x = np.array([1.0, 0.0, 1.0, 1.0])
        np.testing.assert_array_equal(inpaint(tiny_model, x, np.ones(4), GibbsConfig(num_sweeps=2), rng), x)

    def test_observed_bits_unchanged(self, tiny_model, rng):
        corrupt = (rng.random((300, 4)) < 0.5).astype(float)
        mask = np.array([0.0, 1.0, 1.0, 0.0])
        completed = inpaint(tiny_model, corrupt, mask, GibbsConfig(num_sweeps=3), rng)
        np.testing.assert_array_equal(completed[:, mask == 1], corrupt[:, mask == 1])

    def test_zero_model_uniform(self, zero_model, rng):
        model = zero_model([4, 2])
        corrupt = np.tile(np.array([1.0, 1.0, 0.0, 0.0]), (5000, 1))
        completed = inpaint(model, corrupt, np.array([1.0, 1.0, 0.0, 0.0]), GibbsConfig(num_sweeps=2), rng)
        assert chisquare(np.bincount(_codes(completed[:, 2:]), minlength=4)).pvalue > 0.001

    def test_matches_exact_conditional(self):
        model = random_model([3, 2], make_stream(59))
        mask = np.array([1.0, 0.0, 0.0])
        corrupt = np.tile(np.array([1.0, 0.0, 0.0]), (5000, 1))
        config = GibbsConfig(num_sweeps=10)
        completed = np.concatenate(
            [inpaint(model, corrupt, mask, config, stream) for stream in substreams(make_stream(60), 4)])
        table = oracle.exact_conditional_pstar(model, [np.array([1, -1, -1]), np.array([-1, -1])])
        marginal = table.marginal(0)
        exact = np.array([marginal[(a, b)] for a in (0, 1) for b in (0, 1)])
        counts = np.bincount(_codes(completed[:, 1:]), minlength=4)
        assert total_variation(counts, exact) <= 0.05

    def test_expected_visible(self, tiny_model, rng):
        observed = np.array([1.0, 0.0, 1.0, 0.0])
        mask = np.array([1.0, 1.0, 0.0, 0.0])
        state = inpaint_state(tiny_model, observed, mask, GibbsConfig(num_sweeps=1), rng)
        means = expected_visible(tiny_model, state, observed, mask)
        np.testing.assert_array_equal(means[:2], observed[:2])
        assert np.all((means >= 0.0) & (means <= 1.0))
