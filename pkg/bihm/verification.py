"""Oracle-backed check suites.

Each suite draws seeded random models small enough to enumerate, compares
estimators, gradients and samplers against the exact values, and returns
one ``CheckResult`` per property. The command line runs them through
``bihm oracle --checks``.
"""
from dataclasses import dataclass
import logging
from typing import Callable

import numpy as np

from bihm import estimators, oracle, sampling, training
from bihm.model import BihmModel, ModelGradient, random_model
from bihm.utils.streams import make_stream, substreams


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one property check."""
    name: str
    passed: bool
    detail: str


def random_sizes(rng: np.random.Generator, max_sizes: tuple[int, ...] = (6, 4, 3)) -> list[int]:
    """Layer sizes with 1 to ``len(max_sizes) - 1`` latent layers, each within its cap."""
    depth = int(rng.integers(1, len(max_sizes)))
    return [int(rng.integers(1, cap + 1)) for cap in max_sizes[:depth + 1]]


def finite_difference_gradient(func: Callable[[BihmModel], float], model: BihmModel,
                               step: float = 1e-5) -> list[np.ndarray]:
    """Central differences of ``func`` for every parameter, in canonical order."""
    shifted = model.copy()
    out = []
    for _, param in shifted.parameters():
        grad = np.zeros_like(param)
        for index in np.ndindex(param.shape):
            saved = param[index]
            param[index] = saved + step
            upper = func(shifted)
            param[index] = saved - step
            lower = func(shifted)
            param[index] = saved
            grad[index] = (upper - lower) / (2.0 * step)
        out.append(grad)
    return out


def relative_error(gradient: ModelGradient, reference: list[np.ndarray]) -> float:
    """||g - ref|| / ||ref|| over all parameters."""
    g = gradient.flat()
    ref = np.concatenate([a.ravel() for a in reference])
    return float(np.linalg.norm(g - ref) / np.linalg.norm(ref))


def total_variation(counts: np.ndarray, probs: np.ndarray) -> float:
    """Total variation between empirical counts and a distribution over the same cells."""
    return 0.5 * float(np.sum(np.abs(counts / counts.sum() - probs)))


def check_bounds(num_models: int = 100, seed: int = 0, **_) -> list[CheckResult]:
    """Z <= 1, p~* <= p*, p~* <= p, the Bhattacharyya decomposition and the two-codepath agreement."""
    rng = make_stream(seed)
    worst = {"z": -np.inf, "pstar": -np.inf, "p": -np.inf, "decomposition": 0.0, "codepaths": 0.0}
    for n in range(num_models):
        model = random_model(random_sizes(rng), rng, scale=1.5)
        report = oracle.build_report(model)
        bhatt = oracle.exact_bhattacharyya(model)
        worst["z"] = max(worst["z"], report.log_z2)
        for x, log_ptilde in report.log_ptilde_by_x.items():
            log_pstar = report.log_pstar(x)
            worst["pstar"] = max(worst["pstar"], log_ptilde - log_pstar)
            worst["p"] = max(worst["p"], log_ptilde - report.log_p_by_x[x])
            worst["decomposition"] = max(worst["decomposition"], abs(log_pstar - (log_ptilde + 2.0 * bhatt)))
        if n < 10:
            z2 = oracle.linear_z2(model)
            worst["codepaths"] = max(worst["codepaths"], abs(np.exp(report.log_z2) - z2))
    return [
        CheckResult("Z <= 1", worst["z"] <= 1e-12, f"max log Z^2 = {worst['z']:.3e}"),
        CheckResult("p~* <= p*", worst["pstar"] <= 1e-12, f"max log p~* - log p* = {worst['pstar']:.3e}"),
        CheckResult("p~* <= p", worst["p"] <= 1e-12, f"max log p~* - log p = {worst['p']:.3e}"),
        CheckResult("log p* = log p~* + 2 D_B", worst["decomposition"] <= 1e-10,
                    f"max deviation {worst['decomposition']:.3e}"),
        CheckResult("log and linear enumeration agree", worst["codepaths"] <= 1e-10,
                    f"max |Z^2 difference| {worst['codepaths']:.3e}"),
    ]


def check_z(num_models: int = 20, seed: int = 0, k: int = 100000, **_) -> list[CheckResult]:
    """Estimators of log p~*, log p and log Z^2 against the oracle, within 3 standard errors."""
    rng = make_stream(seed)
    hits = {"log p~*": 0, "log p": 0, "log Z^2": 0, "Z^2 linear": 0}
    for _ in range(num_models):
        model = random_model([4, 3, 2], rng)
        x = (rng.random(4) < 0.5).astype(float)
        ptilde = estimators.est_log_ptilde(model, x, k, rng)
        hits["log p~*"] += abs(ptilde.value - oracle.exact_log_ptilde(model, x)) <= 3 * ptilde.std_error
        p_est = estimators.est_log_p(model, x, k, rng)
        hits["log p"] += abs(p_est.value - oracle.exact_log_p(model, x)) <= 3 * p_est.std_error
        z_est = estimators.est_log_z2(model, estimators.ZEstimateConfig(k, 1), rng)
        exact = oracle.exact_log_z2(model)
        hits["log Z^2"] += abs(z_est.value - exact) <= 3 * z_est.std_error
        linear_mean = np.exp(z_est.value)
        hits["Z^2 linear"] += abs(linear_mean - np.exp(exact)) <= 4 * linear_mean * z_est.std_error
    out = []
    for name, count in hits.items():
        need = num_models if name == "Z^2 linear" else int(np.ceil(0.95 * num_models))
        out.append(CheckResult(f"{name} converges", count >= need, f"{count}/{num_models} within tolerance"))
    return out


def check_grad(num_models: int = 20, seed: int = 0, k: int = 100000, **_) -> list[CheckResult]:
    """Exact gradient against finite differences; sampled gradient against the exact one."""
    rng = make_stream(seed)
    worst_fd, worst_cos = 0.0, 1.0
    for _ in range(num_models):
        model = random_model([3, 2, 2], rng)
        x = (rng.random(3) < 0.5).astype(float)
        exact = oracle.exact_grad_log_ptilde(model, x)
        numeric = finite_difference_gradient(lambda m, x=x: oracle.exact_log_ptilde(m, x), model)
        worst_fd = max(worst_fd, relative_error(exact, numeric))
        sampled = training.minibatch_gradient(model, x[None, :], k, rng)
        worst_cos = min(worst_cos, sampled.cosine(exact))
    return [
        CheckResult("exact gradient matches finite differences", worst_fd <= 1e-6, f"max rel. error {worst_fd:.3e}"),
        CheckResult("sampled gradient matches exact gradient", worst_cos >= 0.99, f"min cosine {worst_cos:.4f}"),
    ]


def check_gibbs(seed: int = 0, chains: int = 100000, sweeps: int = 10, block: int = 5000, **_) -> list[CheckResult]:
    """Chain marginal of x against exact p*(x); observed bits untouched by inpainting."""
    rng = make_stream(seed)
    model = random_model([3, 2], rng)
    config = sampling.GibbsConfig(num_sweeps=sweeps)
    xs = oracle.all_configs(3)
    exact = np.exp(oracle.exact_log_pstar(model, xs))
    counts = np.zeros(len(xs))
    weights = 2 ** np.arange(2, -1, -1)
    for stream in substreams(rng, -(-chains // block)):
        state = sampling.gibbs_sample(model, None, config, stream, num_chains=block)
        counts += np.bincount((state.x @ weights).astype(int), minlength=len(xs))
    tv = total_variation(counts, exact)
    logging.info("Gibbs total variation %.4f over %d chains", tv, int(counts.sum()))

    mask = np.array([1.0, 0.0, 1.0])
    corrupt = np.tile(np.array([1.0, 0.0, 0.0]), (1000, 1))
    completed = sampling.inpaint(model, corrupt, mask, config, rng)
    untouched = bool(np.all(completed[:, mask == 1] == corrupt[:, mask == 1]))
    return [
        CheckResult("Gibbs chain reaches p*(x)", tv <= 0.05, f"total variation {tv:.4f}"),
        CheckResult("inpainting keeps observed bits", untouched, "all observed bits unchanged" if untouched else
                    "observed bits changed"),
    ]


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "bound": check_bounds,
    "z": check_z,
    "grad": check_grad,
    "gibbs": check_gibbs,
}


def run_checks(names: list[str], seed: int = 0, k: int = 100000) -> list[CheckResult]:
    """Runs the named suites (``all`` runs every suite) and concatenates their results."""
    if "all" in names:
        names = list(SUITES)
    results = []
    for name in names:
        logging.info("Running %s checks...", name)
        results.extend(SUITES[name](seed=seed, k=k))
    return results
