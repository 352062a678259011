"""Importance-sampling estimators for a bidirectional Helmholtz machine.

All estimators use q(h | x) as the proposal. For the BiHM weight family the
log weight of a sample is ``0.5 * (log p(x, h) - log q(h | x))``. Sample
axes are always axis 0; a batched ``x`` of shape (N, D) yields per-datapoint
estimates of shape (N,).

Standard errors come from the delta method applied to the linear-domain
sample mean (see ``bihm.utils.logmath.log_mean_exp_with_error``).
"""
from dataclasses import dataclass
import logging
import math
from typing import Sequence, Union
import warnings

import numpy as np
from scipy.special import logsumexp

from bihm.errors import ArgumentError, DegenerateWeightsWarning
from bihm.model import BihmModel, LatentConfig, log_joint_p, log_q_given_x, sample_p, sample_q
from bihm.utils import checks
from bihm.utils.logmath import log_mean_exp_with_error, normalize_log

Scalar = Union[float, np.ndarray]


@dataclass(frozen=True)
class EstimateWithError:
    """A Monte-Carlo estimate with its standard error.

    ``value`` and ``std_error`` are arrays when the estimate was made for a
    batch of datapoints.
    """
    value: Scalar
    std_error: Scalar
    num_samples: int

    def __str__(self) -> str:
        return f"{float(np.mean(self.value)):.4f} +- {float(np.mean(self.std_error)):.4f} (K={self.num_samples})"


@dataclass(frozen=True)
class ZEstimateConfig:
    """Sample counts for the Z^2 estimator."""
    k_outer: int
    k_inner: int = 1

    def __post_init__(self) -> None:
        checks.positive(self.k_outer, "k_outer")
        checks.positive(self.k_inner, "k_inner")


@dataclass
class WeightedSampleSet:
    """K proposal samples for ``x`` with their importance weights."""
    samples: LatentConfig
    log_p: np.ndarray
    log_q: np.ndarray
    log_w: np.ndarray
    log_w_normalized: np.ndarray

    @property
    def num_samples(self) -> int:
        return self.log_w.shape[0]


def importance_weights(model: BihmModel, x: np.ndarray, samples: LatentConfig) -> WeightedSampleSet:
    """Computes BiHM importance weights for samples stacked on axis 0.

    Args:
        model: The model.
        x: One visible vector, or a batch (N, D) paired with samples of shape (K, N, d).
        samples: Latent configurations with the sample axis first.

    Raises:
        ArgumentError: No samples were given.
    """
    if len(samples) == 0 or samples[0].ndim < 2 or samples[0].shape[0] == 0:
        raise ArgumentError("importance weights need at least one sample")
    log_p = log_joint_p(model, x, samples)
    log_q = log_q_given_x(model, x, samples)
    log_w = 0.5 * (log_p - log_q)
    return WeightedSampleSet(samples, log_p, log_q, log_w, normalize_log(log_w, axis=0))


def draw_weighted_samples(model: BihmModel, x: np.ndarray, k: int, rng: np.random.Generator) -> WeightedSampleSet:
    """Draws K samples from q(h | x) for each row of ``x`` and weights them."""
    k = checks.positive(k, "K")
    x = checks.last_dim(x, model.visible_dim, "x")
    repeated = np.broadcast_to(x, (k,) + x.shape)
    return importance_weights(model, x, sample_q(model, repeated, rng))


def _estimate(log_mean: np.ndarray, std_error: np.ndarray, count: int) -> EstimateWithError:
    if np.ndim(log_mean) == 0:
        return EstimateWithError(float(log_mean), float(std_error), count)
    return EstimateWithError(log_mean, std_error, count)


def log_ptilde_from_samples(weighted: WeightedSampleSet) -> EstimateWithError:
    """2 * log(mean(w)) on an existing sample set."""
    log_mean, rel_error = log_mean_exp_with_error(weighted.log_w, axis=0)
    return _estimate(2.0 * log_mean, 2.0 * rel_error, weighted.num_samples)


def log_p_from_samples(weighted: WeightedSampleSet) -> EstimateWithError:
    """log(mean(p / q)) on an existing sample set."""
    log_mean, rel_error = log_mean_exp_with_error(weighted.log_p - weighted.log_q, axis=0)
    return _estimate(log_mean, rel_error, weighted.num_samples)


def est_log_ptilde(model: BihmModel, x: np.ndarray, k: int, rng: np.random.Generator) -> EstimateWithError:
    """Estimates log p~*(x) with K samples from q(h | x)."""
    return log_ptilde_from_samples(draw_weighted_samples(model, x, k, rng))


def est_log_p(model: BihmModel, x: np.ndarray, k: int, rng: np.random.Generator) -> EstimateWithError:
    """Estimates log p(x) of the top-down model with K samples from q(h | x)."""
    return log_p_from_samples(draw_weighted_samples(model, x, k, rng))


def est_log_z2(model: BihmModel, config: ZEstimateConfig, rng: np.random.Generator) -> EstimateWithError:
    """Estimates log Z^2.

    Draws K_outer pairs (x, h) ~ p and for each K_inner samples h' ~ q(. | x).
    The mean of ``sqrt(p(x, h') q(h | x) / (p(x, h) q(h' | x)))`` over all
    terms is unbiased for Z^2; its log underestimates 2 log Z on average.
    The standard error treats each outer draw (averaged over its inner
    draws) as one independent sample.
    """
    x, h = sample_p(model, rng, config.k_outer)
    outer = 0.5 * (log_q_given_x(model, x, h) - log_joint_p(model, x, h))
    h_inner = sample_q(model, np.broadcast_to(x, (config.k_inner,) + x.shape), rng)
    inner = 0.5 * (log_joint_p(model, x, h_inner) - log_q_given_x(model, x, h_inner))
    per_outer = outer + logsumexp(inner, axis=0) - np.log(config.k_inner)
    log_mean, rel_error = log_mean_exp_with_error(per_outer, axis=0)
    return EstimateWithError(float(log_mean), float(rel_error), config.k_outer * config.k_inner)


def est_log_pstar(model: BihmModel, x: np.ndarray, k: int, log_z2: Union[float, EstimateWithError],
                  rng: np.random.Generator) -> EstimateWithError:
    """Estimates log p*(x) = log p~*(x) - log Z^2.

    ``log_z2`` may be an exact value or an earlier estimate; standard errors
    add in quadrature.
    """
    if isinstance(log_z2, EstimateWithError):
        z_value, z_error = log_z2.value, log_z2.std_error
    else:
        z_value, z_error = float(log_z2), 0.0
    ptilde = est_log_ptilde(model, x, k, rng)
    return _estimate(np.asarray(ptilde.value) - z_value, np.sqrt(np.square(ptilde.std_error) + z_error**2),
                     ptilde.num_samples)


def ess(log_w: np.ndarray) -> float:
    """Effective sample size (sum w)^2 / sum w^2 of one set of log weights.

    Evaluated in the log domain, so it is unchanged by adding a constant to
    every log weight. If every weight is zero a DegenerateWeightsWarning is
    issued and 1 is returned.

    Raises:
        ArgumentError: ``log_w`` is empty.
    """
    log_w = np.asarray(log_w, dtype=np.float64).ravel()
    if log_w.size == 0:
        raise ArgumentError("ess needs at least one weight")
    if not np.any(np.isfinite(log_w)):
        warnings.warn("all importance weights are zero", DegenerateWeightsWarning, stacklevel=2)
        return 1.0
    value = float(np.exp(2.0 * logsumexp(log_w) - logsumexp(2.0 * log_w)))
    return min(max(value, 1.0), float(log_w.size))


def ess_percent(log_w: np.ndarray) -> float:
    """ESS as a percentage of the number of weights."""
    return 100.0 * ess(log_w) / np.asarray(log_w).size


@dataclass(frozen=True)
class DatasetEvaluation:
    """Dataset-level averages of per-datapoint estimates.

    ``log_p_mean`` and ``p_ess_pct`` come from the same samples and describe
    the top-down model alone: its log-likelihood and how well q(h | x) serves
    as a proposal for p(h | x).
    """
    mean: float
    std_error: float
    ess_pct: float
    num_rows: int
    num_samples: int
    log_p_mean: float = math.nan
    log_p_std_error: float = math.nan
    p_ess_pct: float = math.nan


ESTIMATORS = ("ptilde", "p", "pstar")


def evaluate_dataset(model: BihmModel, data: np.ndarray, k: int, estimator: str, rng: np.random.Generator,
                     log_z2: Union[float, EstimateWithError, None] = None, batch_rows: int = 100) -> DatasetEvaluation:
    """Averages a log-likelihood estimate over the rows of ``data``.

    Args:
        model: The model.
        data: Binary matrix (N, D).
        k: Samples per datapoint.
        estimator: One of ``ptilde``, ``p`` or ``pstar``.
        rng: Random stream.
        log_z2: Required for ``pstar``.
        batch_rows: Rows evaluated together.

    Returns:
        Mean estimate, its standard error (per-row errors combined in
        quadrature) and the mean ESS percentage of the proposal, plus the
        log p(x) estimate and p-weight ESS from the same samples.
    """
    if estimator not in ESTIMATORS:
        raise ArgumentError(f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}")
    if estimator == "pstar" and log_z2 is None:
        raise ArgumentError("the pstar estimator needs a log Z^2 value")
    data = checks.last_dim(data, model.visible_dim, "data")
    if data.ndim != 2 or data.shape[0] == 0:
        raise ArgumentError("data must be a non-empty matrix")
    values, errors, ess_values = [], [], []
    p_values, p_errors, p_ess_values = [], [], []
    for start in range(0, data.shape[0], batch_rows):
        weighted = draw_weighted_samples(model, data[start:start + batch_rows], k, rng)
        p_est = log_p_from_samples(weighted)
        est = p_est if estimator == "p" else log_ptilde_from_samples(weighted)
        values.append(np.atleast_1d(est.value))
        errors.append(np.atleast_1d(est.std_error))
        ess_values.extend(ess_percent(weighted.log_w[:, j]) for j in range(weighted.log_w.shape[1]))
        p_values.append(np.atleast_1d(p_est.value))
        p_errors.append(np.atleast_1d(p_est.std_error))
        log_ratio = weighted.log_p - weighted.log_q
        p_ess_values.extend(ess_percent(log_ratio[:, j]) for j in range(log_ratio.shape[1]))
        logging.debug("Evaluated rows %d-%d", start, start + weighted.log_w.shape[1])
    values = np.concatenate(values)
    errors = np.concatenate(errors)
    mean = float(np.mean(values))
    std_error = float(np.sqrt(np.sum(errors**2)) / values.size)
    if estimator == "pstar":
        if isinstance(log_z2, EstimateWithError):
            mean -= log_z2.value
            std_error = float(np.hypot(std_error, log_z2.std_error))
        else:
            mean -= float(log_z2)
    p_values = np.concatenate(p_values)
    p_std_error = float(np.sqrt(np.sum(np.concatenate(p_errors)**2)) / p_values.size)
    return DatasetEvaluation(mean, std_error, float(np.mean(ess_values)), int(values.size), int(k),
                             float(np.mean(p_values)), p_std_error, float(np.mean(p_ess_values)))


def sweep_sample_counts(model: BihmModel, data: np.ndarray, ks: Sequence[int], estimator: str, rng: np.random.Generator,
                        log_z2: Union[float, EstimateWithError, None] = None) -> list[DatasetEvaluation]:
    """Runs ``evaluate_dataset`` once per sample count in ``ks``, in the given order."""
    return [evaluate_dataset(model, data, checks.positive(k, "K"), estimator, rng, log_z2) for k in ks]


def sweep_log_z2(model: BihmModel, outer_counts: Sequence[int], inner_counts: Sequence[int],
                 rng: np.random.Generator) -> list[tuple[ZEstimateConfig, EstimateWithError]]:
    """Estimates log Z^2 for every (K_inner, K_outer) pair, K_outer varying fastest."""
    results = []
    for k_inner in inner_counts:
        for k_outer in outer_counts:
            config = ZEstimateConfig(k_outer, k_inner)
            estimate = est_log_z2(model, config, rng)
            logging.debug("log Z^2 with K_outer=%d K_inner=%d: %s", k_outer, k_inner, estimate)
            results.append((config, estimate))
    return results
