"""Log-domain probability arithmetic.

All probabilities in bihm are carried as natural logarithms. The helpers
here wrap scipy's stable primitives and add the pieces the estimators
need: clamped sigmoid means, Bernoulli log-likelihoods, log-mean-exp with
a delta-method standard error, and multinomial resampling from log weights.
"""
import numpy as np
from scipy.special import expit, logsumexp

from bihm.config.constants import CLAMP_EPS


def sigmoid(logits: np.ndarray) -> np.ndarray:
    """Unclamped logistic function."""
    return expit(logits)


def clamped_sigmoid(logits: np.ndarray) -> np.ndarray:
    """Logistic function clipped to [CLAMP_EPS, 1 - CLAMP_EPS]."""
    return np.clip(expit(logits), CLAMP_EPS, 1.0 - CLAMP_EPS)


def clamped_residual(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """``targets - sigmoid(logits)``, the logit derivative of ``bernoulli_log_prob``.

    Zero wherever the sigmoid lies outside [CLAMP_EPS, 1 - CLAMP_EPS], since
    the clamped log-likelihood is flat there.
    """
    means = expit(logits)
    inside = (means >= CLAMP_EPS) & (means <= 1.0 - CLAMP_EPS)
    return np.where(inside, targets - means, 0.0)


def bernoulli_log_prob(means: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Sums ``t log mu + (1 - t) log(1 - mu)`` over the last axis.

    ``means`` must already be clamped away from 0 and 1.
    """
    return np.sum(targets * np.log(means) + (1.0 - targets) * np.log1p(-means), axis=-1)


def normalize_log(log_w: np.ndarray, axis: int = 0) -> np.ndarray:
    """Self-normalizes log weights along ``axis`` so their exponentials sum to one."""
    return log_w - logsumexp(log_w, axis=axis, keepdims=True)


def log_mean_exp(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """log(mean(exp(values))) along ``axis``."""
    values = np.asarray(values, dtype=np.float64)
    return logsumexp(values, axis=axis) - np.log(values.shape[axis])


def log_mean_exp_with_error(values: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Log of a linear-domain sample mean and its delta-method standard error.

    The mean of ``exp(values)`` is computed after shifting by the maximum, so
    neither statistic overflows. The standard error of the log mean is the
    linear-domain standard error divided by the mean.

    Args:
        values: Log-domain samples.
        axis: The sample axis.

    Returns:
        ``(log_mean, log_mean_std_error)``, reduced along ``axis``.
    """
    values = np.asarray(values, dtype=np.float64)
    count = values.shape[axis]
    shift = np.max(values, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    scaled = np.exp(values - shift)
    mean = np.mean(scaled, axis=axis)
    if count > 1:
        std_error = np.std(scaled, axis=axis, ddof=1) / np.sqrt(count)
    else:
        std_error = np.zeros_like(mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mean = np.log(mean) + np.squeeze(shift, axis=axis)
        rel_error = np.where(mean > 0, std_error / np.where(mean > 0, mean, 1.0), 0.0)
    return log_mean, rel_error


def resample_index(log_w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draws one index along axis 0 with probability proportional to ``exp(log_w)``.

    Any trailing axes are independent resampling problems; the result has
    the trailing shape and integer dtype.
    """
    log_w = np.asarray(log_w, dtype=np.float64)
    probs = np.exp(normalize_log(log_w, axis=0))
    cdf = np.cumsum(probs, axis=0)
    uniforms = rng.random(log_w.shape[1:]) if log_w.ndim > 1 else rng.random()
    index = np.sum(cdf < uniforms * cdf[-1], axis=0)
    return np.minimum(index, log_w.shape[0] - 1)
