"""Microcanonical sampling: match the statistics of an observed texture.

A candidate starts as Gaussian white noise with the observation's mean and
standard deviation and is moved by L-BFGS on ``|C x - C x_obs|^2``.  The
gradient is propagated by hand through the covariance products, the
rectifiers and the wavelet transform.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig
from .imagecore import check_image, histogram_match, sample_gaussian_image
from .lbfgs import lbfgs_minimize
from .statistics import StatisticsOperator, StatisticsVector, build_index_set
from .wavelets import build_filter_bank

__all__ = [
    "DivergenceError",
    "Objective",
    "SynthesisRun",
    "synthesize",
    "initial_image",
    "write_history_jsonl",
]


class DivergenceError(FloatingPointError):
    """Raised when the loss or its gradient stops being finite."""


def _config_for(observation, config):
    n = observation.shape[-1]
    if config.n != n:
        config = config.replace(n=n)
    if config.color != (observation.ndim == 3):
        kind = "color" if config.color else "gray"
        raise ValueError(f"variant {config.variant} needs a {kind} observation")
    return config


class Objective:
    """Loss ``sum_k w_k (C x - C x_obs)_k^2`` and its gradient for one observation.

    Centering means are taken from the observation once and kept fixed.
    """

    def __init__(self, observation, config, bank=None, index_set=None):
        observation = check_image(observation)
        config = _config_for(observation, config)
        self.config = config
        self.observation = observation
        self.bank = bank or build_filter_bank(config.n, config.j_max, config.l_count,
                                              config.family, workers=config.jobs)
        self.index_set = index_set or build_index_set(config)
        dtype = np.float32 if config.precision == "single" else np.float64
        self.operator = StatisticsOperator(self.bank, self.index_set, config.boundary, dtype=dtype)
        self.obs_means = self.operator.observation_means(observation)
        self.target, _ = self.operator.forward(observation, self.obs_means)
        sizes = self.operator.sizes
        self.weights = np.repeat(np.asarray(config.weights), sizes)
        self.n_evals = 0

    @property
    def target_stats(self):
        return StatisticsVector(self.target, self.operator.sizes, self.index_set,
                                self.config.boundary, self.config.statistics_hash())

    def statistics(self, x):
        values, _ = self.operator.forward(x, self.obs_means)
        return values

    def residual(self, x):
        return self.statistics(x) - self.target

    def loss(self, x):
        r = self.residual(x)
        return float(np.sum(self.weights * r * r))

    def loss_and_gradient(self, x, scale=1.0):
        """Return ``(scale * loss, scale * grad)`` at ``x``."""
        self.n_evals += 1
        values, cache = self.operator.forward(x, self.obs_means)
        r = values - self.target
        wr = self.weights * r
        loss = float(np.dot(wr, r))
        if not np.isfinite(loss):
            raise DivergenceError("loss is not finite")
        grad = self.operator.backward(cache, 2.0 * scale * wr)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError("gradient is not finite")
        return scale * loss, grad

    __call__ = loss_and_gradient

    def relative_distance(self, x):
        """``|C x - C x_obs| / |C x_obs|``."""
        return float(np.linalg.norm(self.residual(x)) / np.linalg.norm(self.target))


@dataclass
class SynthesisRun:
    """State and log of one synthesis.

    ``current`` is the optimized image before histogram matching and
    ``output`` the returned image.  ``loss_history`` holds one dict per
    accepted L-BFGS step with keys ``restart, iter, loss, grad_norm, wall_ms``.
    """

    config: ModelConfig
    initial: np.ndarray
    current: np.ndarray
    output: np.ndarray
    target_stats: StatisticsVector
    obs_means: np.ndarray
    initial_loss: float
    final_loss: float
    restart_index: int = 0
    restart_losses: list = field(default_factory=list)
    restart_distances: list = field(default_factory=list)
    loss_history: list = field(default_factory=list)
    n_evals: int = 0
    wall_seconds: float = 0.0


def initial_image(observation, seed):
    """White noise with the observation's per-channel mean and standard deviation."""
    observation = np.asarray(observation, dtype=np.float64)
    n = observation.shape[-1]
    if observation.ndim == 3:
        return sample_gaussian_image(n, observation.mean(axis=(1, 2)),
                                     observation.std(axis=(1, 2)), seed, channels=3)
    return sample_gaussian_image(n, observation.mean(), observation.std(), seed)


def synthesize(observation, config=None, *, init=None, objective=None, log=None):
    """Generate a texture whose statistics match those of ``observation``.

    Parameters
    ----------
    observation : ndarray
        Gray ``(n, n)`` or color ``(3, n, n)`` image.
    config : ModelConfig, optional
        Model and sampler settings; ``n`` is taken from the observation.
    init : ndarray, optional
        Starting image; white noise drawn from ``config.seed`` by default.
    objective : Objective, optional
        Reuse a prebuilt objective for the same observation and config.
    log : callable, optional
        Receives each loss-history record as it is produced.

    Returns
    -------
    image : ndarray
    run : SynthesisRun
    """
    observation = check_image(observation)
    config = _config_for(observation, config or ModelConfig())
    obj = objective or Objective(observation, config)
    t_start = time.perf_counter()
    x = initial_image(observation, config.seed) if init is None else check_image(init).copy()
    if x.shape != observation.shape:
        raise ValueError("init and observation shapes differ")
    initial = x.copy()
    initial_loss = obj.loss(x)
    run = SynthesisRun(config, initial, x, x, obj.target_stats, obj.obs_means,
                       initial_loss, initial_loss)

    for r in range(config.restarts):
        run.restart_index = r
        step = 1.0
        for _attempt in range(8):
            try:
                res = lbfgs_minimize(obj, x, config.iterations_per_restart, config.lbfgs_memory,
                                     grad_tol=config.grad_tol, initial_step=step)
                break
            except FloatingPointError:
                # resume from the last finite iterate with a shorter first step
                step *= 0.5
        else:
            raise DivergenceError("objective diverged repeatedly")
        for it, loss, gnorm, wall in res.history:
            if it == 0 and r > 0:
                continue  # same point as the previous restart's last record
            rec = {"restart": r, "iter": it, "loss": loss, "grad_norm": gnorm, "wall_ms": wall}
            run.loss_history.append(rec)
            if log is not None:
                log(rec)
        x = res.x
        if config.histogram_match_between_restarts and r < config.restarts - 1:
            x = histogram_match(x, observation)
        run.restart_losses.append(float(res.f))
        run.restart_distances.append(float(np.sqrt(res.f) / np.linalg.norm(obj.target)))

    run.current = x
    run.final_loss = obj.loss(x)
    run.output = histogram_match(x, observation) if config.histogram_match else x
    run.n_evals = obj.n_evals
    run.wall_seconds = time.perf_counter() - t_start
    return run.output, run


def write_history_jsonl(path, run):
    """Write the loss history, one JSON object per line."""
    with open(path, "w") as fh:
        for rec in run.loss_history:
            fh.write(json.dumps(rec) + "\n")
