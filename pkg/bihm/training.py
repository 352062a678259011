"""Importance-sampled training of p and q jointly.

Each datapoint draws K samples from q(h | x), weights them by the
self-normalized BiHM importance weights and follows
``sum_k w_k d/dtheta log p(x, h_k) q(h_k | x)``. Updates are Adam ascent
steps followed by an L1 shrink of the weight matrices.
"""
from dataclasses import dataclass, field
import logging
import math
import time
from typing import Callable, Optional, Sequence

import numpy as np

from bihm.config import constants
from bihm.errors import ArgumentError, TrainingDivergedError
from bihm.estimators import DatasetEvaluation, ZEstimateConfig, draw_weighted_samples, est_log_z2, evaluate_dataset
from bihm.model import BeliefLayer, BihmModel, FactorizedPrior, ModelGradient, joint_gradient
from bihm.utils import checks
from bihm.utils.streams import make_stream


@dataclass
class TrainConfig:
    """Hyper-parameters of one training run."""
    k_train: int = constants.DEFAULT_K_TRAIN
    learning_rate: float = constants.DEFAULT_LEARNING_RATE
    batch_size: int = constants.DEFAULT_BATCH_SIZE
    l1_lambda: float = constants.DEFAULT_L1_LAMBDA
    adam_beta1: float = constants.ADAM_BETA1
    adam_beta2: float = constants.ADAM_BETA2
    adam_eps: float = constants.ADAM_EPS
    epochs: int = 100
    seed: int = 0
    finetune_k: Optional[int] = None
    finetune_learning_rate: Optional[float] = None
    finetune_epochs: int = 0
    patience: Optional[int] = None
    z_every: int = 1
    z_outer: int = 10000
    z_inner: int = 1

    def __post_init__(self) -> None:
        checks.positive(self.k_train, "k_train")
        checks.positive(self.batch_size, "batch_size")
        checks.positive(self.epochs, "epochs")
        checks.positive(self.z_outer, "z_outer")
        checks.positive(self.z_inner, "z_inner")
        if self.learning_rate < 0 or self.l1_lambda < 0:
            raise ArgumentError("learning_rate and l1_lambda must be non-negative")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ArgumentError(f"{name} must lie in (0, 1)")
        if self.adam_eps <= 0:
            raise ArgumentError("adam_eps must be positive")
        if self.finetune_epochs < 0 or self.z_every < 0:
            raise ArgumentError("finetune_epochs and z_every must be non-negative")
        if self.finetune_k is not None:
            checks.positive(self.finetune_k, "finetune_k")
        if self.patience is not None:
            checks.positive(self.patience, "patience")

    def phases(self) -> list[tuple[int, float, int]]:
        """``(k, learning_rate, epochs)`` for the main phase and the optional fine-tune phase."""
        out = [(self.k_train, self.learning_rate, self.epochs)]
        if self.finetune_epochs:
            lr = self.learning_rate if self.finetune_learning_rate is None else self.finetune_learning_rate
            out.append((self.finetune_k or self.k_train, lr, self.finetune_epochs))
        return out


@dataclass
class AdamState:
    """First and second moment estimates, one array per parameter in canonical order."""
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0

    @classmethod
    def zeros_like(cls, model: BihmModel) -> "AdamState":
        arrays = [a for _, a in model.parameters()]
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays])


@dataclass
class EpochMetrics:
    """One row of the metrics file.

    ``logp``, ``logpstar`` and ``ess_pct`` describe the validation set when
    one is given and the training set otherwise. ``logpstar`` is missing in
    epochs without a log Z^2 estimate.
    """
    epoch: int
    updates: int
    train_logptilde: float
    valid_logptilde: float
    two_log_z: float
    ess_pct: float
    seconds: float
    logp: float = math.nan
    logpstar: float = math.nan


@dataclass
class TrainResult:
    """The trained model and its per-epoch history."""
    model: BihmModel
    history: list[EpochMetrics] = field(default_factory=list)
    adam: Optional[AdamState] = None


Callback = Callable[[EpochMetrics, BihmModel], None]


def init_model(layer_sizes: Sequence[int], seed: int) -> BihmModel:
    """Glorot-uniform weights and every bias set to -1.

    Raises:
        ArgumentError: Fewer than two layers or a layer with no units.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ArgumentError(f"invalid layer sizes {list(layer_sizes)}")
    rng = make_stream(seed)

    def glorot(fan_out: int, fan_in: int) -> BeliefLayer:
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        return BeliefLayer(rng.uniform(-bound, bound, size=(fan_out, fan_in)), np.full(fan_out, constants.INIT_BIAS))

    depth = len(sizes) - 1
    p_layers = [glorot(sizes[i], sizes[i + 1]) for i in range(depth)]
    q_layers = [glorot(sizes[i + 1], sizes[i]) for i in range(depth)]
    return BihmModel(sizes, FactorizedPrior(np.full(sizes[-1], constants.INIT_BIAS)), p_layers, q_layers)


def minibatch_gradient(model: BihmModel, batch: np.ndarray, k: int, rng: np.random.Generator) -> ModelGradient:
    """Batch-averaged importance-sampled gradient of log p~*(x), ascent direction.

    Args:
        model: The model.
        batch: Binary matrix (N, D), N >= 1.
        k: Samples per datapoint.
        rng: Random stream.
    """
    batch = checks.last_dim(batch, model.visible_dim, "batch")
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise ArgumentError("batch must be a non-empty matrix")
    weighted = draw_weighted_samples(model, batch, k, rng)
    weights = np.exp(weighted.log_w_normalized) / batch.shape[0]
    return joint_gradient(model, batch, weighted.samples, weights)


def adam_update(model: BihmModel, state: AdamState, gradient: ModelGradient,
                config: TrainConfig) -> tuple[BihmModel, AdamState]:
    """One bias-corrected Adam ascent step, then L1 shrinkage of the weights.

    The shrink ``-learning_rate * l1_lambda * sign(w)`` touches weight
    matrices only; biases are not regularized. Returns new objects and
    leaves the inputs untouched.
    """
    new_model = model.copy()
    step = state.step_count + 1
    first, second = [], []
    lr = config.learning_rate
    b1, b2 = config.adam_beta1, config.adam_beta2
    for (name, param), grad, m, v in zip(new_model.parameters(), gradient.arrays(), state.first_moment,
                                         state.second_moment):
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad**2
        m_hat = m / (1.0 - b1**step)
        v_hat = v / (1.0 - b2**step)
        param += lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        if name.endswith(".weights"):
            param -= lr * config.l1_lambda * np.sign(param)
        first.append(m)
        second.append(v)
    return new_model, AdamState(first, second, step)


def _check_finite(model: BihmModel, updates: int) -> None:
    for name, param in model.parameters():
        if not np.all(np.isfinite(param)):
            raise TrainingDivergedError(name, updates)


def _monitor(model: BihmModel, data: Optional[np.ndarray], k: int,
             rng: np.random.Generator) -> Optional[DatasetEvaluation]:
    if data is None or len(data) == 0:
        return None
    return evaluate_dataset(model, data, k, "ptilde", rng)


def train(model: BihmModel, dataset: np.ndarray, config: TrainConfig, valid: Optional[np.ndarray] = None,
          callbacks: Sequence[Callback] = ()) -> TrainResult:
    """Runs the epoch loop over shuffled minibatches.

    After every epoch the train and validation log p~* are estimated with
    the current phase's K and log Z^2 is estimated every ``z_every`` epochs.
    The same samples give log p and log p* of the monitored set. Each
    callback receives the metrics row and the model. With ``patience`` set,
    training stops once the validation estimate has not improved for that
    many epochs.

    Raises:
        ShapeError: The dataset width does not match the model.
        TrainingDivergedError: A parameter became NaN or infinite.
    """
    dataset = checks.last_dim(dataset, model.visible_dim, "dataset")
    if valid is not None:
        valid = checks.last_dim(valid, model.visible_dim, "validation set")
    rng = make_stream(config.seed)
    state = AdamState.zeros_like(model)
    result = TrainResult(model)
    started = time.perf_counter()
    epoch = 0
    best, stale = -math.inf, 0
    for phase, (k, lr, epochs) in enumerate(config.phases()):
        phase_config = TrainConfig(**{**config.__dict__, "learning_rate": lr, "k_train": k})
        logging.info("Phase %d: K=%d, learning rate %g, %d epochs", phase + 1, k, lr, epochs)
        for _ in range(epochs):
            epoch += 1
            order = rng.permutation(dataset.shape[0])
            for start in range(0, dataset.shape[0], config.batch_size):
                batch = dataset[order[start:start + config.batch_size]]
                gradient = minibatch_gradient(model, batch, k, rng)
                model, state = adam_update(model, state, gradient, phase_config)
                _check_finite(model, state.step_count)

            train_eval = _monitor(model, dataset, k, rng)
            valid_eval = _monitor(model, valid, k, rng)
            train_ll = train_eval.mean if train_eval else math.nan
            valid_ll = valid_eval.mean if valid_eval else math.nan
            two_log_z = math.nan
            if config.z_every and epoch % config.z_every == 0:
                two_log_z = est_log_z2(model, ZEstimateConfig(config.z_outer, config.z_inner), rng).value
            watched = valid_eval or train_eval
            if watched is None:
                ess_pct, logp, logpstar = math.nan, math.nan, math.nan
            else:
                ess_pct, logp, logpstar = watched.ess_pct, watched.log_p_mean, watched.mean - two_log_z
            metrics = EpochMetrics(epoch, state.step_count, train_ll, valid_ll, two_log_z, ess_pct,
                                   time.perf_counter() - started, logp, logpstar)
            result.history.append(metrics)
            logging.info("Epoch %d: train %.4f valid %.4f 2logZ %.4f logp %.4f logp* %.4f ess %.1f%%", epoch, train_ll,
                         valid_ll, two_log_z, logp, logpstar, ess_pct)
            for callback in callbacks:
                callback(metrics, model)

            if config.patience is not None and valid is not None:
                if valid_ll > best:
                    best, stale = valid_ll, 0
                else:
                    stale += 1
                if stale >= config.patience:
                    logging.info("No validation improvement for %d epochs; stopping phase %d.", stale, phase + 1)
                    stale = 0
                    break
    result.model = model
    result.adam = state
    return result

