"""Parameterization of the top-down model p and the bottom-up model q.

A model with latent layers h_1 ... h_L has a factorized Bernoulli prior on
h_L, L top-down sigmoid belief layers (``p_layers[i]`` maps h_{i+1} to h_i,
with h_0 being the visible vector x) and L bottom-up layers (``q_layers[i]``
maps h_i to h_{i+1}). Indices in code are zero-based.

Every function accepts single vectors or arrays with leading batch axes;
results broadcast over those axes. Probabilities are natural logs.
"""
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from bihm.errors import ArgumentError, ShapeError
from bihm.utils import checks
from bihm.utils.logmath import bernoulli_log_prob, clamped_residual, clamped_sigmoid, sigmoid

# One binary array per latent layer, h_1 first. Arrays may share leading batch axes.
LatentConfig = list[np.ndarray]


@dataclass
class BeliefLayer:
    """A conditional Bernoulli layer: P(t_i = 1 | v) = sigmoid(W v + b)_i."""
    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self) -> None:
        self.weights = checks.finite(self.weights, "weights")
        self.biases = checks.finite(self.biases, "biases")
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ShapeError("weights must be a matrix and biases a vector")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ShapeError(f"weights {self.weights.shape} do not match biases {self.biases.shape}")
        if min(self.weights.shape) < 1:
            raise ShapeError("layers need at least one input and one output unit")

    @property
    def out_dim(self) -> int:
        """Number of target units."""
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        """Number of input units."""
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, out_dim: int, in_dim: int) -> "BeliefLayer":
        """A layer with all parameters zero."""
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim))

    def logits(self, inputs: np.ndarray) -> np.ndarray:
        """W v + b for every input row."""
        inputs = checks.last_dim(inputs, self.in_dim, "input")
        return inputs @ self.weights.T + self.biases

    def copy(self) -> "BeliefLayer":
        return BeliefLayer(self.weights.copy(), self.biases.copy())


@dataclass
class FactorizedPrior:
    """Independent Bernoulli units with logits ``biases``."""
    biases: np.ndarray

    def __post_init__(self) -> None:
        self.biases = checks.finite(self.biases, "prior biases")
        if self.biases.ndim != 1 or self.biases.shape[0] < 1:
            raise ShapeError("prior biases must be a non-empty vector")

    @property
    def top_dim(self) -> int:
        return self.biases.shape[0]

    def copy(self) -> "FactorizedPrior":
        return FactorizedPrior(self.biases.copy())


@dataclass
class LayerGradient:
    """Partial derivatives of one layer's log-probability term."""
    d_weights: np.ndarray
    d_biases: np.ndarray


@dataclass
class ModelGradient:
    """Gradient for every parameter of a model, laid out like the model."""
    prior: np.ndarray
    p_layers: list[LayerGradient]
    q_layers: list[LayerGradient]

    def arrays(self) -> list[np.ndarray]:
        """Gradient arrays in the canonical parameter order (see ``BihmModel.parameters``)."""
        out = [self.prior]
        for grad in reversed(self.p_layers):
            out.extend((grad.d_weights, grad.d_biases))
        for grad in self.q_layers:
            out.extend((grad.d_weights, grad.d_biases))
        return out

    def flat(self) -> np.ndarray:
        """All components concatenated into one vector."""
        return np.concatenate([a.ravel() for a in self.arrays()])

    def cosine(self, other: "ModelGradient") -> float:
        """Cosine similarity between two gradients of the same model."""
        a, b = self.flat(), other.flat()
        return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


@dataclass
class BihmModel:
    """All parameters of a bidirectional Helmholtz machine."""
    layer_sizes: list[int]
    prior: FactorizedPrior
    p_layers: list[BeliefLayer]
    q_layers: list[BeliefLayer]

    def __post_init__(self) -> None:
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ArgumentError(f"invalid layer sizes {self.layer_sizes}")
        depth = len(self.layer_sizes) - 1
        if len(self.p_layers) != depth or len(self.q_layers) != depth:
            raise ShapeError(f"expected {depth} p-layers and q-layers")
        if self.prior.top_dim != self.layer_sizes[-1]:
            raise ShapeError(f"prior has {self.prior.top_dim} units, top layer has {self.layer_sizes[-1]}")
        for i in range(depth):
            below, above = self.layer_sizes[i], self.layer_sizes[i + 1]
            if (self.p_layers[i].out_dim, self.p_layers[i].in_dim) != (below, above):
                raise ShapeError(f"p-layer {i + 1} must map {above} -> {below}")
            if (self.q_layers[i].out_dim, self.q_layers[i].in_dim) != (above, below):
                raise ShapeError(f"q-layer {i + 1} must map {below} -> {above}")

    @property
    def depth(self) -> int:
        """Number of latent layers L."""
        return len(self.layer_sizes) - 1

    @property
    def visible_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def latent_bits(self) -> int:
        return sum(self.layer_sizes[1:])

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int]) -> "BihmModel":
        """The all-zero model, for which p and q are uniform and identical."""
        sizes = list(layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ArgumentError(f"invalid layer sizes {sizes}")
        return cls(
            sizes,
            FactorizedPrior(np.zeros(sizes[-1])),
            [BeliefLayer.zeros(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)],
            [BeliefLayer.zeros(sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1)],
        )

    def copy(self) -> "BihmModel":
        return BihmModel(list(self.layer_sizes), self.prior.copy(), [l.copy() for l in self.p_layers],
                         [l.copy() for l in self.q_layers])

    def parameters(self) -> Iterator[tuple[str, np.ndarray]]:
        """Yields ``(name, array)`` in the canonical order.

        Prior biases; then p-layers from L down to 1, weights before biases;
        then q-layers from 1 up to L, weights before biases. Checkpoints and
        optimizer state use this order. The arrays are live views.
        """
        yield "prior.biases", self.prior.biases
        for i in reversed(range(self.depth)):
            yield f"p{i + 1}.weights", self.p_layers[i].weights
            yield f"p{i + 1}.biases", self.p_layers[i].biases
        for i in range(self.depth):
            yield f"q{i + 1}.weights", self.q_layers[i].weights
            yield f"q{i + 1}.biases", self.q_layers[i].biases

    def num_parameters(self) -> int:
        return sum(a.size for _, a in self.parameters())


def random_model(layer_sizes: Sequence[int], rng: np.random.Generator, scale: float = 1.0) -> BihmModel:
    """A model with every parameter drawn from N(0, scale**2)."""
    model = BihmModel.zeros(layer_sizes)
    for _, array in model.parameters():
        array[...] = rng.normal(0.0, scale, size=array.shape)
    return model


# Layers and prior


def layer_log_prob(layer: BeliefLayer, inputs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """log P(targets | inputs) under one belief layer, in nats."""
    targets = checks.last_dim(targets, layer.out_dim, "target")
    return bernoulli_log_prob(clamped_sigmoid(layer.logits(inputs)), targets)


def layer_sample(layer: BeliefLayer, inputs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draws every target bit independently from Bernoulli(sigmoid(W v + b))."""
    probs = sigmoid(layer.logits(inputs))
    return (rng.random(probs.shape) < probs).astype(np.float64)


def prior_log_prob(prior: FactorizedPrior, h: np.ndarray) -> np.ndarray:
    """log p(h_L) under the factorized prior."""
    h = checks.last_dim(h, prior.top_dim, "top layer")
    return bernoulli_log_prob(clamped_sigmoid(prior.biases), h)


def prior_sample(prior: FactorizedPrior, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Draws ``size`` top-layer vectors (or a single one when ``size`` is None)."""
    shape = (prior.top_dim,) if size is None else (size, prior.top_dim)
    return (rng.random(shape) < sigmoid(prior.biases)).astype(np.float64)


def layer_grad(layer: BeliefLayer, inputs: np.ndarray, targets: np.ndarray,
               weights: Optional[np.ndarray] = None) -> LayerGradient:
    """Exact gradient of ``layer_log_prob`` with respect to the layer's parameters.

    For a single ``(input, target)`` pair this is ``d_biases = t - mu`` and
    ``d_weights = outer(t - mu, v)``, zero for units whose mean is clamped.
    With leading batch axes the per-pair gradients are summed, each scaled
    by ``weights`` when given.
    """
    inputs = checks.last_dim(inputs, layer.in_dim, "input")
    targets = checks.last_dim(targets, layer.out_dim, "target")
    delta = clamped_residual(layer.logits(inputs), targets)
    inputs = np.broadcast_to(inputs, delta.shape[:-1] + (layer.in_dim,))
    if delta.ndim == 1:
        scale = 1.0 if weights is None else float(weights)
        return LayerGradient(scale * np.outer(delta, inputs), scale * delta)
    delta = delta.reshape(-1, layer.out_dim)
    inputs = inputs.reshape(-1, layer.in_dim)
    if weights is not None:
        delta = delta * np.reshape(weights, (-1, 1))
    return LayerGradient(delta.T @ inputs, delta.sum(axis=0))


def prior_grad(prior: FactorizedPrior, h: np.ndarray, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradient of ``prior_log_prob`` with respect to the prior biases, summed over batch axes."""
    h = checks.last_dim(h, prior.top_dim, "top layer")
    delta = clamped_residual(np.broadcast_to(prior.biases, h.shape), h).reshape(-1, prior.top_dim)
    if weights is not None:
        delta = delta * np.reshape(weights, (-1, 1))
    return delta.sum(axis=0)


# Whole model


def _check_latents(model: BihmModel, h: LatentConfig) -> None:
    if len(h) != model.depth:
        raise ShapeError(f"expected {model.depth} latent layers, got {len(h)}")


def log_joint_p(model: BihmModel, x: np.ndarray, h: LatentConfig) -> np.ndarray:
    """log p(x, h) = log p(h_L) + sum over l of log p(h_{l-1} | h_l)."""
    _check_latents(model, h)
    below = [x] + list(h[:-1])
    total = prior_log_prob(model.prior, h[-1])
    for i in reversed(range(model.depth)):
        total = total + layer_log_prob(model.p_layers[i], h[i], below[i])
    return total


def log_q_given_x(model: BihmModel, x: np.ndarray, h: LatentConfig) -> np.ndarray:
    """log q(h | x) = sum over l of log q(h_l | h_{l-1})."""
    _check_latents(model, h)
    below = [x] + list(h[:-1])
    total = 0.0
    for i in range(model.depth):
        total = total + layer_log_prob(model.q_layers[i], below[i], h[i])
    return total


def sample_q(model: BihmModel, x: np.ndarray, rng: np.random.Generator) -> LatentConfig:
    """Ancestral sample of h ~ q(h | x), bottom-up, one draw per row of ``x``."""
    below = checks.last_dim(x, model.visible_dim, "x")
    latents = []
    for layer in model.q_layers:
        below = layer_sample(layer, below, rng)
        latents.append(below)
    return latents


def sample_p(model: BihmModel, rng: np.random.Generator, size: Optional[int] = None) -> tuple[np.ndarray, LatentConfig]:
    """Ancestral sample of (x, h) ~ p, prior first then top-down.

    Returns ``size`` independent draws stacked on axis 0, or one unbatched
    draw when ``size`` is None.
    """
    above = prior_sample(model.prior, rng, size)
    latents = [above]
    for layer in reversed(model.p_layers):
        above = layer_sample(layer, above, rng)
        latents.insert(0, above)
    x = latents.pop(0)
    return x, latents


def joint_gradient(model: BihmModel, x: np.ndarray, h: LatentConfig,
                   weights: Optional[np.ndarray] = None) -> ModelGradient:
    """Gradient of log p(x, h) + log q(h | x), summed over batch axes with optional weights.

    Each layer term depends only on its own (input, target) pair, so the
    gradient is assembled layer by layer with ``layer_grad``; no signal is
    propagated between layers.
    """
    _check_latents(model, h)
    x = np.broadcast_to(checks.last_dim(x, model.visible_dim, "x"), h[0].shape[:-1] + (model.visible_dim,))
    below = [x] + list(h[:-1])
    return ModelGradient(
        prior=prior_grad(model.prior, h[-1], weights),
        p_layers=[layer_grad(model.p_layers[i], h[i], below[i], weights) for i in range(model.depth)],
        q_layers=[layer_grad(model.q_layers[i], below[i], h[i], weights) for i in range(model.depth)],
    )
