"""Approximate Gibbs sampling from p* and inpainting.

Each conditional of p* is sampled by importance resampling: draw
``proposals_per_step`` candidates, weight them against the conditional and
keep one with probability proportional to its weight.

Hidden layer l uses the mixture proposal 1/2 p(h_l | h_{l+1}) + 1/2 q(h_l | h_{l-1})
(the prior replaces p(h_l | h_{l+1}) at the top) and the weight

    sqrt(p(h_l | h_{l+1}) p(h_{l-1} | h_l) q(h_l | h_{l-1}) q(h_{l+1} | h_l))
    / (p(h_l | h_{l+1}) + q(h_l | h_{l-1}))

where the q(h_{l+1} | h_l) factor is absent at the top layer.

The visible layer draws candidates from p(x | h_1). Because
p*(x, h) = sqrt(p(x, h) q(h | x) p~*(x)) / Z^2, the conditional p*(x | h) is
proportional to sqrt(p(x | h_1) q(h_1 | x) p~*(x)); dividing by the proposal
gives the weight sqrt(p~*(x) q(h_1 | x) / p(x | h_1)). p~*(x) is estimated
with ``ptilde_k`` samples, so the visible update is approximate. With a
mask, observed bits are copied into every candidate and only the free bits
count towards the proposal density.

A state may hold many independent chains stacked on a leading axis; every
update acts on all chains at once.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from bihm.config import constants
from bihm.errors import ArgumentError
from bihm.estimators import est_log_ptilde
from bihm.model import BihmModel, LatentConfig, layer_log_prob, sample_p, sample_q
from bihm.utils import checks
from bihm.utils.logmath import bernoulli_log_prob, clamped_sigmoid, resample_index, sigmoid


@dataclass
class GibbsState:
    """Chain state (x, h_1, ..., h_L)."""
    x: np.ndarray
    latents: LatentConfig

    def copy(self) -> "GibbsState":
        return GibbsState(np.array(self.x, dtype=np.float64), [np.array(h, dtype=np.float64) for h in self.latents])


@dataclass(frozen=True)
class GibbsConfig:
    """Sweep and resampling counts."""
    num_sweeps: int = 10
    proposals_per_step: int = constants.DEFAULT_PROPOSALS
    ptilde_k: int = constants.DEFAULT_PTILDE_K

    def __post_init__(self) -> None:
        checks.positive(self.num_sweeps, "num_sweeps")
        checks.positive(self.proposals_per_step, "proposals_per_step")
        checks.positive(self.ptilde_k, "ptilde_k")


def _pick(candidates: np.ndarray, index: np.ndarray) -> np.ndarray:
    index = np.asarray(index)
    return np.take_along_axis(candidates, index[None, ..., None], axis=0)[0]


def gibbs_update_hidden(model: BihmModel, state: GibbsState, layer: int, config: GibbsConfig,
                        rng: np.random.Generator) -> np.ndarray:
    """Resamples h_l (``layer`` counts from 1) given its neighbours.

    Raises:
        ArgumentError: ``layer`` is not between 1 and L.
    """
    if not 1 <= layer <= model.depth:
        raise ArgumentError(f"layer must be between 1 and {model.depth}, got {layer}")
    i = layer - 1
    below = state.x if i == 0 else state.latents[i - 1]
    below = checks.last_dim(below, model.layer_sizes[i], "layer below")
    top = layer == model.depth
    above = None if top else state.latents[layer]
    dim = model.layer_sizes[layer]
    chains = below.shape[:-1]

    if top:
        p_logits = np.broadcast_to(model.prior.biases, chains + (dim,))
    else:
        p_logits = model.p_layers[layer].logits(above)
    q_logits = model.q_layers[i].logits(below)

    k = config.proposals_per_step
    from_p = rng.random((k,) + chains + (1,)) < 0.5
    probs = np.where(from_p, sigmoid(p_logits), sigmoid(q_logits))
    candidates = (rng.random(probs.shape) < probs).astype(np.float64)

    log_p_side = bernoulli_log_prob(clamped_sigmoid(p_logits), candidates)
    log_q_side = bernoulli_log_prob(clamped_sigmoid(q_logits), candidates)
    log_target = log_p_side + log_q_side + layer_log_prob(model.p_layers[i], candidates, below)
    if not top:
        log_target = log_target + layer_log_prob(model.q_layers[layer], candidates, above)
    log_w = 0.5 * log_target - np.logaddexp(log_p_side, log_q_side)
    return _pick(candidates, resample_index(log_w, rng))


def gibbs_update_visible(model: BihmModel, state: GibbsState, config: GibbsConfig, rng: np.random.Generator,
                         observed: Optional[np.ndarray] = None, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Resamples x given h_1, keeping ``observed`` bits where ``mask`` is 1."""
    h1 = state.latents[0]
    logits = model.p_layers[0].logits(h1)
    k = config.proposals_per_step
    candidates = (rng.random((k,) + logits.shape) < sigmoid(logits)).astype(np.float64)
    free = np.ones(model.visible_dim)
    if mask is not None:
        keep = np.asarray(mask).astype(bool)
        candidates = np.where(keep, observed, candidates)
        free = (~keep).astype(np.float64)

    means = clamped_sigmoid(logits)
    per_bit = candidates * np.log(means) + (1.0 - candidates) * np.log1p(-means)
    log_likelihood = per_bit.sum(axis=-1)
    log_proposal = (per_bit * free).sum(axis=-1)

    flat = candidates.reshape(-1, model.visible_dim)
    log_ptilde = np.reshape(est_log_ptilde(model, flat, config.ptilde_k, rng).value, candidates.shape[:-1])
    log_q1 = layer_log_prob(model.q_layers[0], candidates, h1)
    log_w = 0.5 * (log_ptilde + log_q1 + log_likelihood) - log_proposal
    return _pick(candidates, resample_index(log_w, rng))


def gibbs_sweep(model: BihmModel, state: GibbsState, config: GibbsConfig, rng: np.random.Generator,
                observed: Optional[np.ndarray] = None, mask: Optional[np.ndarray] = None) -> None:
    """One sweep in place: odd layers first, then the visible layer and the even layers."""
    for layer in range(1, model.depth + 1, 2):
        state.latents[layer - 1] = gibbs_update_hidden(model, state, layer, config, rng)
    state.x = gibbs_update_visible(model, state, config, rng, observed, mask)
    for layer in range(2, model.depth + 1, 2):
        state.latents[layer - 1] = gibbs_update_hidden(model, state, layer, config, rng)


def gibbs_sample(model: BihmModel, init: Optional[GibbsState], config: GibbsConfig, rng: np.random.Generator,
                 num_chains: Optional[int] = None) -> GibbsState:
    """Runs ``num_sweeps`` sweeps from ``init``, or from a draw of p when ``init`` is None.

    ``num_chains`` sets how many independent chains to start from p; it is
    ignored when ``init`` is given.
    """
    if init is None:
        state = GibbsState(*sample_p(model, rng, num_chains))
    else:
        state = init.copy()
    for _ in range(config.num_sweeps):
        gibbs_sweep(model, state, config, rng)
    return state


def inpaint_state(model: BihmModel, x_corrupt: np.ndarray, mask: np.ndarray, config: GibbsConfig,
                  rng: np.random.Generator) -> GibbsState:
    """Runs the inpainting chain and returns its final state.

    The latents start from q(h | x_corrupt); every visible update keeps the
    bits where ``mask`` is 1.
    """
    x_corrupt = checks.last_dim(x_corrupt, model.visible_dim, "x_corrupt")
    mask = checks.binary(checks.last_dim(mask, model.visible_dim, "mask"), "mask")
    state = GibbsState(x_corrupt.copy(), sample_q(model, x_corrupt, rng))
    for _ in range(config.num_sweeps):
        gibbs_sweep(model, state, config, rng, x_corrupt, mask)
    return state


def inpaint(model: BihmModel, x_corrupt: np.ndarray, mask: np.ndarray, config: GibbsConfig,
            rng: np.random.Generator) -> np.ndarray:
    """Completes the bits of ``x_corrupt`` where ``mask`` is 0."""
    return inpaint_state(model, x_corrupt, mask, config, rng).x


def expected_visible(model: BihmModel, state: GibbsState, observed: Optional[np.ndarray] = None,
                     mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Pixel means sigmoid(W h_1 + b) of p(x | h_1), for display."""
    means = sigmoid(model.p_layers[0].logits(state.latents[0]))
    if mask is not None:
        means = np.where(np.asarray(mask).astype(bool), observed, means)
    return means
