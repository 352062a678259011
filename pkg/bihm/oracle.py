"""Exact quantities of small models by exhaustive enumeration.

Configurations are enumerated in lexicographic order over bit vectors
(first bit most significant). Every entry point refuses to run when the
number of enumerated bits exceeds its ``EnumLimit``.

Identities used:
    p~*(x)    = (sum_h sqrt(p(x, h) q(h | x)))^2
    Z^2       = sum_x p~*(x)
    p*(x)     = p~*(x) / Z^2
    p*(x, h)  = sqrt(p(x, h) q(h | x) p~*(x)) / Z^2
    D_B(p, q) = -log Z

The ``linear_*`` functions recompute the same quantities with scalar
Python arithmetic in the probability domain. They share no code with the
log-domain path and serve as its cross-check.
"""
from dataclasses import dataclass, field
import itertools
import math
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from bihm.config import constants
from bihm.errors import ArgumentError, EnumerationLimitError, ShapeError
from bihm.model import BihmModel, LatentConfig, ModelGradient, joint_gradient, log_joint_p, log_q_given_x
from bihm.utils import checks


@dataclass(frozen=True)
class EnumLimit:
    """Caps on enumerated bits."""
    max_total_bits: int = constants.DEFAULT_MAX_TOTAL_BITS
    max_free_bits: int = constants.DEFAULT_MAX_FREE_BITS

    def __post_init__(self) -> None:
        checks.positive(self.max_total_bits, "max_total_bits")
        checks.positive(self.max_free_bits, "max_free_bits")

    def require(self, bits: int, what: str = "total") -> None:
        """Raises EnumerationLimitError when ``bits`` exceeds the cap for ``what``."""
        allowed = self.max_free_bits if what == "free" else self.max_total_bits
        if bits > allowed:
            raise EnumerationLimitError(bits, allowed, what)


DEFAULT_LIMIT = EnumLimit()


def all_configs(num_bits: int) -> np.ndarray:
    """Every binary vector of length ``num_bits`` as rows, in lexicographic order."""
    if num_bits == 0:
        return np.zeros((1, 0))
    codes = np.arange(2**num_bits)
    shifts = np.arange(num_bits - 1, -1, -1)
    return ((codes[:, None] >> shifts) & 1).astype(np.float64)


def latent_grid(model: BihmModel) -> LatentConfig:
    """All joint latent configurations, stacked on axis 0 and split per layer."""
    grid = all_configs(model.latent_bits)
    return np.split(grid, np.cumsum(model.layer_sizes[1:-1]), axis=1)


def _log_tables(model: BihmModel, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log p(x, h) and log q(h | x) for every row of ``xs`` against every latent configuration."""
    grid = latent_grid(model)
    log_p = log_joint_p(model, xs[:, None, :], [h[None, :, :] for h in grid])
    log_q = log_q_given_x(model, xs[:, None, :], [h[None, :, :] for h in grid])
    return log_p, log_q


def _as_rows(model: BihmModel, x: np.ndarray) -> np.ndarray:
    x = checks.last_dim(x, model.visible_dim, "x")
    return x.reshape(-1, model.visible_dim)


def _squeeze(values: np.ndarray, x: np.ndarray):
    return float(values[0]) if np.ndim(x) == 1 else values


def exact_log_ptilde(model: BihmModel, x: np.ndarray, limit: EnumLimit = DEFAULT_LIMIT):
    """Exact log p~*(x); ``x`` may be a single vector or a batch of rows."""
    limit.require(model.latent_bits, "latent")
    log_p, log_q = _log_tables(model, _as_rows(model, x))
    return _squeeze(2.0 * logsumexp(0.5 * (log_p + log_q), axis=1), np.asarray(x))


def exact_log_p(model: BihmModel, x: np.ndarray, limit: EnumLimit = DEFAULT_LIMIT):
    """Exact log p(x) of the top-down model."""
    limit.require(model.latent_bits, "latent")
    log_p, _ = _log_tables(model, _as_rows(model, x))
    return _squeeze(logsumexp(log_p, axis=1), np.asarray(x))


def _all_log_ptilde(model: BihmModel, limit: EnumLimit) -> np.ndarray:
    limit.require(model.visible_dim + model.latent_bits)
    xs = all_configs(model.visible_dim)
    chunk = max(1, 2**16 // 2**model.latent_bits)
    return np.concatenate([exact_log_ptilde(model, xs[i:i + chunk], limit) for i in range(0, len(xs), chunk)])


def exact_log_z2(model: BihmModel, limit: EnumLimit = DEFAULT_LIMIT) -> float:
    """Exact log Z^2 = log sum_x p~*(x); never positive."""
    return float(logsumexp(_all_log_ptilde(model, limit)))


def exact_bhattacharyya(model: BihmModel, limit: EnumLimit = DEFAULT_LIMIT) -> float:
    """Exact Bhattacharyya distance -log Z between the two joint models."""
    return -0.5 * exact_log_z2(model, limit)


def exact_log_pstar(model: BihmModel, x: np.ndarray, limit: EnumLimit = DEFAULT_LIMIT):
    """Exact log p*(x) = log p~*(x) - log Z^2."""
    log_z2 = exact_log_z2(model, limit)
    ptilde = exact_log_ptilde(model, x, limit)
    return ptilde - log_z2


def exact_grad_log_ptilde(model: BihmModel, x: np.ndarray, limit: EnumLimit = DEFAULT_LIMIT) -> ModelGradient:
    """Exact gradient of log p~*(x).

    Equals sum_h gamma_h d/dtheta log p(x, h) q(h | x) with gamma_h
    proportional to sqrt(p(x, h) q(h | x)).
    """
    limit.require(model.latent_bits, "latent")
    x = checks.last_dim(x, model.visible_dim, "x")
    if x.ndim != 1:
        raise ShapeError("exact_grad_log_ptilde takes a single visible vector")
    grid = latent_grid(model)
    half = 0.5 * (log_joint_p(model, x, grid) + log_q_given_x(model, x, grid))
    gamma = np.exp(half - logsumexp(half))
    return joint_gradient(model, x, grid, gamma)


@dataclass
class ConditionalTable:
    """An exact conditional of p* over the free bits of a partial assignment.

    ``free_bits`` lists ``(layer, index)`` pairs, layer 0 being x. Row ``j``
    of ``configs`` assigns the free bits in that order and has probability
    ``probs[j]``.
    """
    free_bits: list[tuple[int, int]]
    configs: np.ndarray
    probs: np.ndarray

    def marginal(self, layer: int) -> dict[tuple[int, ...], float]:
        """Marginal distribution over the free bits of one layer."""
        columns = [j for j, (lay, _) in enumerate(self.free_bits) if lay == layer]
        out: dict[tuple[int, ...], float] = {}
        for row, prob in zip(self.configs[:, columns].astype(int), self.probs):
            key = tuple(int(v) for v in row)
            out[key] = out.get(key, 0.0) + float(prob)
        return out


def exact_conditional_pstar(model: BihmModel, clamped: Sequence[np.ndarray],
                            limit: EnumLimit = DEFAULT_LIMIT) -> ConditionalTable:
    """Exact p*(free bits | clamped bits).

    Args:
        model: The model.
        clamped: One integer array per layer (x first, then h_1 ... h_L) with
            entries 0 or 1 for clamped bits and -1 for free bits.
        limit: Enumeration caps; free bits are checked against
            ``max_free_bits`` and the visible + latent total against
            ``max_total_bits``.
    """
    if len(clamped) != model.depth + 1:
        raise ShapeError(f"expected {model.depth + 1} layer assignments, got {len(clamped)}")
    layers = []
    for lay, (values, size) in enumerate(zip(clamped, model.layer_sizes)):
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (size,):
            raise ShapeError(f"layer {lay} assignment has shape {values.shape}, expected ({size},)")
        if not np.all(np.isin(values, (-1, 0, 1))):
            raise ArgumentError("assignments must be -1 (free), 0 or 1")
        layers.append(values)
    free_bits = [(lay, j) for lay, values in enumerate(layers) for j in np.flatnonzero(values < 0)]
    limit.require(len(free_bits), "free")
    limit.require(model.visible_dim + model.latent_bits)

    configs = all_configs(len(free_bits))
    full = [np.broadcast_to(values.astype(np.float64), (len(configs), values.size)).copy() for values in layers]
    for column, (lay, j) in enumerate(free_bits):
        full[lay][:, j] = configs[:, column]
    x, h = full[0], full[1:]
    log_ptilde = exact_log_ptilde(model, x, limit)
    log_joint = 0.5 * (log_joint_p(model, x, h) + log_q_given_x(model, x, h) + log_ptilde)
    probs = np.exp(log_joint - logsumexp(log_joint))
    return ConditionalTable([(int(l), int(j)) for l, j in free_bits], configs, probs)


@dataclass
class OracleReport:
    """Exact quantities of one model."""
    log_ptilde_by_x: dict[tuple[int, ...], float]
    log_p_by_x: dict[tuple[int, ...], float]
    log_z2: float
    bhattacharyya: float
    exact_grad: dict[tuple[int, ...], ModelGradient] = field(default_factory=dict)

    def log_pstar(self, x: tuple[int, ...]) -> float:
        return self.log_ptilde_by_x[x] - self.log_z2

    def to_rows(self) -> list[list[str]]:
        """CSV rows: a header, one row per visible configuration, then the totals."""
        rows = [["x", "log_ptilde", "log_p", "log_pstar"]]
        for x, value in self.log_ptilde_by_x.items():
            rows.append(["".join(str(b) for b in x), f"{value:.12g}", f"{self.log_p_by_x[x]:.12g}",
                         f"{self.log_pstar(x):.12g}"])
        rows.append(["log_z2", f"{self.log_z2:.12g}", "", ""])
        rows.append(["bhattacharyya", f"{self.bhattacharyya:.12g}", "", ""])
        return rows


def build_report(model: BihmModel, grad_for: Sequence[Sequence[int]] = (),
                 limit: EnumLimit = DEFAULT_LIMIT) -> OracleReport:
    """Enumerates every visible configuration and collects the exact quantities."""
    limit.require(model.visible_dim + model.latent_bits)
    xs = all_configs(model.visible_dim)
    log_ptilde = _all_log_ptilde(model, limit)
    log_p = exact_log_p(model, xs, limit)
    keys = [tuple(int(b) for b in row) for row in xs]
    log_z2 = float(logsumexp(log_ptilde))
    report = OracleReport(dict(zip(keys, map(float, log_ptilde))), dict(zip(keys, map(float, log_p))), log_z2,
                          -0.5 * log_z2)
    for x in grad_for:
        report.exact_grad[tuple(int(b) for b in x)] = exact_grad_log_ptilde(model, np.asarray(x, float), limit)
    return report


# Independent probability-domain enumeration


def _bernoulli(prob_one: float, bit: float) -> float:
    return prob_one if bit else 1.0 - prob_one


def _layer_prob(weights: np.ndarray, biases: np.ndarray, inputs: Sequence[float], targets: Sequence[float]) -> float:
    eps = constants.CLAMP_EPS
    prob = 1.0
    for i, target in enumerate(targets):
        activation = float(biases[i]) + sum(float(weights[i][j]) * inputs[j] for j in range(len(inputs)))
        mean = min(max(1.0 / (1.0 + math.exp(-activation)), eps), 1.0 - eps)
        prob *= _bernoulli(mean, target)
    return prob


def _linear_terms(model: BihmModel, x: Sequence[float]) -> list[tuple[float, float]]:
    """(p(x, h), q(h | x)) for every latent configuration."""
    terms = []
    for bits in itertools.product((0.0, 1.0), repeat=model.latent_bits):
        layers, start = [list(x)], 0
        for size in model.layer_sizes[1:]:
            layers.append(list(bits[start:start + size]))
            start += size
        eps = constants.CLAMP_EPS
        p = 1.0
        for i, bit in enumerate(layers[-1]):
            mean = min(max(1.0 / (1.0 + math.exp(-float(model.prior.biases[i]))), eps), 1.0 - eps)
            p *= _bernoulli(mean, bit)
        q = 1.0
        for lay in range(model.depth):
            p *= _layer_prob(model.p_layers[lay].weights, model.p_layers[lay].biases, layers[lay + 1], layers[lay])
            q *= _layer_prob(model.q_layers[lay].weights, model.q_layers[lay].biases, layers[lay], layers[lay + 1])
        terms.append((p, q))
    return terms


def linear_ptilde(model: BihmModel, x: Sequence[float], limit: EnumLimit = DEFAULT_LIMIT) -> float:
    """p~*(x) in the probability domain."""
    limit.require(model.latent_bits, "latent")
    return sum(math.sqrt(p * q) for p, q in _linear_terms(model, x))**2


def linear_p(model: BihmModel, x: Sequence[float], limit: EnumLimit = DEFAULT_LIMIT) -> float:
    """p(x) in the probability domain."""
    limit.require(model.latent_bits, "latent")
    return sum(p for p, _ in _linear_terms(model, x))


def linear_z2(model: BihmModel, limit: EnumLimit = DEFAULT_LIMIT) -> float:
    """Z^2 in the probability domain."""
    limit.require(model.visible_dim + model.latent_bits)
    return sum(linear_ptilde(model, x, limit) for x in itertools.product((0.0, 1.0), repeat=model.visible_dim))

