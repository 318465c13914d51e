"""Monte Carlo checks of the signal model and fading-ensemble averages.

Randomness is keyed by trial index: trial ``t`` of a run seeded with ``s``
draws from ``SeedSequence(s, spawn_key=(t,))``.  Trials are processed in
fixed-size blocks whose boundaries do not depend on the number of workers,
so results are bit-identical for any ``workers`` value.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import baseline_peak, mse_policy, power_policy
from .core import ChannelVector, DomainError, SolverError, SystemInstance, TxRxDesign, received_output

__all__ = [
    "FadingModel",
    "Policy",
    "EnsembleSpec",
    "AggregateStats",
    "sample_channels",
    "empirical_mse",
    "ensemble_average",
    "trial_values",
]

BLOCK_TRIALS = 256
SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class FadingModel:
    """I.i.d. Rayleigh magnitudes with ``E[h^2] = mean_power_gain``."""

    mean_power_gain: float = 1.0
    kind: str = "rayleigh"

    def __post_init__(self):
        if self.kind != "rayleigh":
            raise DomainError(f"unsupported fading model {self.kind!r}")
        mu = float(self.mean_power_gain)
        if not np.isfinite(mu) or mu <= 0.0:
            raise DomainError(f"mean channel-power gain must be finite and positive, got {mu}")
        object.__setattr__(self, "mean_power_gain", mu)


class Policy(str, enum.Enum):
    SUM_POWER_MSE = "sum_power_mse"
    SUM_POWER_PW = "sum_power_pw"
    PEAK_MSE = "peak_mse"


@dataclass(frozen=True)
class EnsembleSpec:
    sensors: int
    trials: int
    policy: Policy
    sum_power_limit_per_sensor: float | None = None
    mse_limit_per_sensor: float | None = None
    peak_limit: float | None = None
    noise_variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.sensors < 1 or self.trials < 1:
            raise DomainError("sensors and trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not self.noise_variance > 0.0:
            raise DomainError("noise variance must be positive")
        needed = {
            Policy.SUM_POWER_MSE: "sum_power_limit_per_sensor",
            Policy.SUM_POWER_PW: "mse_limit_per_sensor",
            Policy.PEAK_MSE: "peak_limit",
        }[self.policy]
        value = getattr(self, needed)
        if value is None or not np.isfinite(value) or value <= 0.0:
            raise DomainError(f"policy {self.policy.value} needs a positive {needed}")


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    std_error: float
    trials: int


def _stats(values: np.ndarray) -> AggregateStats:
    n = values.size
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return AggregateStats(float(np.mean(values)), se, n)


def _rayleigh(rng: np.random.Generator, mu: float, shape) -> np.ndarray:
    u = rng.standard_normal((2, *shape))
    return np.sqrt(mu / 2.0) * np.hypot(u[0], u[1])


def sample_channels(model: FadingModel, K: int, seed) -> ChannelVector:
    """Draw ``K`` Rayleigh magnitudes; ``seed`` is an int or a ``SeedSequence``."""
    if K < 1:
        raise DomainError("K must be at least 1")
    rng = np.random.default_rng(seed)
    return ChannelVector(_rayleigh(rng, model.mean_power_gain, (K,)))


def empirical_mse(instance: SystemInstance, design: TxRxDesign, samples: int, seed=0) -> AggregateStats:
    """Sample mean of ``(y - sum_k x_k)^2`` with standard-Gaussian ``x_k``."""
    if samples < 1:
        raise DomainError("samples must be at least 1")
    K = instance.num_sensors
    sigma = instance.sigma
    rng = np.random.default_rng(seed)
    sq = np.empty(samples)
    for start in range(0, samples, SAMPLE_CHUNK):
        n = min(SAMPLE_CHUNK, samples - start)
        x = rng.standard_normal((n, K))
        noise = sigma * rng.standard_normal(n)
        err = received_output(instance, design, x, noise) - x.sum(axis=1)
        sq[start:start + n] = err * err
    return _stats(sq)


def _draw_block(spec: EnsembleSpec, model: FadingModel, start: int, stop: int) -> np.ndarray:
    h = np.empty((stop - start, spec.sensors))
    for i, t in enumerate(range(start, stop)):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(t,)))
        h[i] = _rayleigh(rng, model.mean_power_gain, (spec.sensors,))
    if np.any(h <= 0.0):
        raise SolverError("drew a zero channel magnitude")
    return h


def _run_block(spec: EnsembleSpec, model: FadingModel, start: int, stop: int) -> np.ndarray:
    """Per-trial objective values (not yet normalized by K) for trials ``[start, stop)``."""
    h = _draw_block(spec, model, start, stop)
    K, nv = spec.sensors, spec.noise_variance
    if spec.policy is Policy.SUM_POWER_MSE:
        P = K * spec.sum_power_limit_per_sensor
        _, b, value = mse_policy.min_mse_batch(h, nv, P)
        if np.any(np.sum(b * b, axis=-1) > P * (1.0 + 1e-9)):
            raise SolverError("sum-power budget violated in a trial")
    elif spec.policy is Policy.SUM_POWER_PW:
        eps = K * spec.mse_limit_per_sensor
        if eps >= K:
            return np.zeros(stop - start)
        g, b, value, _, _ = power_policy.min_power_batch(h, nv, eps)
        r = g[:, None] * h * b - 1.0
        achieved = np.sum(r * r, axis=-1) + nv * g * g
        if np.any(achieved > eps + 1e-8):
            raise SolverError("MSE limit violated in a trial")
    else:
        _, b, value = baseline_peak.peak_mse_batch(h, nv, spec.peak_limit)
        if np.any(b * b > spec.peak_limit * (1.0 + 1e-12)):
            raise SolverError("per-sensor power cap violated in a trial")
    return value


def _blocks(trials: int):
    return [(s, min(s + BLOCK_TRIALS, trials)) for s in range(0, trials, BLOCK_TRIALS)]


def trial_values(spec: EnsembleSpec, model: FadingModel, workers: int = 1) -> np.ndarray:
    """Per-trial objective values divided by ``K``, in trial order."""
    blocks = _blocks(spec.trials)
    if workers <= 1 or len(blocks) == 1:
        parts = [_run_block(spec, model, a, b) for a, b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, [spec] * len(blocks), [model] * len(blocks),
                                  *zip(*blocks)))
    return np.concatenate(parts) / spec.sensors


def ensemble_average(spec: EnsembleSpec, model: FadingModel, workers: int = 1) -> AggregateStats:
    """Normalized ensemble mean (``E[MSE]/K`` or ``E[PW]/K``) and its standard error."""
    return _stats(trial_values(spec, model, workers))
