"""Minimum computation MSE under a sum-power budget.

Substituting ``bhat_k = g * b_k`` turns the budget ``sum b_k^2 <= P`` (which is
always active) into a ridge penalty, and the resulting separable convex
problem has the per-sensor minimizer ``bhat_k = h_k / (sigma^2/P + h_k^2)``.
Mapping back gives the optimal ``g`` and ``b_k`` in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, SystemInstance, TxRxDesign

__all__ = [
    "MseSolveReport",
    "solve_min_mse",
    "reformulated_solution",
    "power_allocation_profile",
    "min_mse_batch",
]


@dataclass(frozen=True, eq=False)
class MseSolveReport:
    design: TxRxDesign
    mse_star: float
    power_used: float
    intermediate: np.ndarray  # bhat_k = g * b_k


def _check_budget(P) -> float:
    P = float(P)
    if not np.isfinite(P) or P <= 0.0:
        raise DomainError(f"sum-power limit must be finite and positive, got {P}")
    return P


def _stationary_point(h, noise_over_power):
    # h / (sigma^2/P + h^2) == P h / (sigma^2 + P h^2) without overflowing for huge P
    return h / (noise_over_power + h * h)


def reformulated_solution(instance: SystemInstance, P: float) -> np.ndarray:
    """Minimizer ``bhat`` of ``sum_k (h_k bhat_k - 1)^2 + (sigma^2/P) sum_k bhat_k^2``."""
    P = _check_budget(P)
    return _stationary_point(instance.h, instance.noise_variance / P)


def min_mse_batch(h, noise_variance, P):
    """Vectorized closed form over leading batch dimensions.

    ``h`` has shape ``(..., K)``; ``noise_variance`` and ``P`` broadcast over the
    batch shape.  Returns ``(g, b, mse_star)`` with shapes ``(...)``,
    ``(..., K)``, ``(...)``.
    """
    h = np.asarray(h, dtype=float)
    ratio = np.asarray(noise_variance, dtype=float) / np.asarray(P, dtype=float)
    r = ratio[..., None]
    bhat = _stationary_point(h, r)
    g = np.sqrt(np.sum(bhat * bhat, axis=-1) / P)
    b = bhat / g[..., None]
    mse_star = np.sum(r / (r + h * h), axis=-1)
    return g, b, mse_star


def solve_min_mse(instance: SystemInstance, sum_power_limit: float) -> MseSolveReport:
    """Optimal ``(g, b)`` minimizing the computation MSE subject to ``sum b_k^2 <= P``."""
    P = _check_budget(sum_power_limit)
    bhat = reformulated_solution(instance, P)
    g, b, mse_star = min_mse_batch(instance.h, instance.noise_variance, P)
    design = TxRxDesign(float(g), b)
    return MseSolveReport(
        design=design,
        mse_star=float(mse_star),
        power_used=float(np.dot(b, b)),
        intermediate=bhat,
    )


def power_allocation_profile(instance: SystemInstance, P: float) -> np.ndarray:
    """Per-sensor transmit powers ``|b_k*|^2`` of the MSE-optimal design."""
    b = solve_min_mse(instance, P).design.tx_gains
    return b * b
