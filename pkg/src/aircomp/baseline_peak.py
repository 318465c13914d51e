"""MSE-optimal design under per-sensor (peak) power caps.

Used only as a comparison baseline for the sum-power policy.  For a fixed
receiver scaling ``g`` the objective separates per sensor and the best
transmitter scaling is channel inversion clipped at the cap,
``b_k = min(1/(g h_k), sqrt(P0))``.  What is left is a one-dimensional
function of ``g``, searched on a log grid and refined by golden section.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._search import golden_section, grid_bracket
from .core import DomainError, MsePowerPoint, SolverError, SystemInstance, TxRxDesign

__all__ = ["PeakConstraint", "PeakSolveResult", "solve_min_mse_peak", "peak_mse_batch"]

GRID_POINTS = 1024
GRID_SPAN = (1e-5, 1e3)
REFINE_RTOL = 1e-10


@dataclass(frozen=True)
class PeakConstraint:
    per_sensor_limit: float

    def __post_init__(self):
        p = float(self.per_sensor_limit)
        if not np.isfinite(p) or p <= 0.0:
            raise DomainError(f"per-sensor power limit must be finite and positive, got {p}")
        object.__setattr__(self, "per_sensor_limit", p)


@dataclass(frozen=True, eq=False)
class PeakSolveResult:
    point: MsePowerPoint
    design: TxRxDesign


def _tx_gains(h, g, amp):
    # g: (N,), h: (N, K)
    with np.errstate(divide="ignore"):
        inv = 1.0 / (g[:, None] * h)
    return np.minimum(inv, amp)


def _objective(h, noise_variance, amp, g):
    # g: (N,); max(0, 1 - g h sqrt(P0))^2 is the residual of the clipped inversion
    short = np.maximum(0.0, 1.0 - g[:, None] * h * amp)
    return np.sum(short * short, axis=-1) + noise_variance * g * g


def _objective_on_grid(h, noise_variance, amp, base, h_min):
    """Objective at ``g_j = base_j / h_min`` for every row, in O(G + K) per row.

    Sensor k is short of full inversion exactly when ``g < 1/(h_k sqrt(P0))``,
    i.e. for grid indices below ``searchsorted(base, h_min / (h_k sqrt(P0)))``.
    Its contribution ``1 - 2 g a h_k + g^2 a^2 h_k^2`` is accumulated with
    suffix sums over those switch-off indices.
    """
    n, K = h.shape
    G = base.size
    cut = np.searchsorted(base, h_min[:, None] / (h * amp), side="right")
    flat = (np.arange(n)[:, None] * (G + 1) + cut).ravel()

    def active_sum(weights):
        acc = np.bincount(flat, weights=weights.ravel(), minlength=n * (G + 1)).reshape(n, G + 1)
        # sensor with cut index c is active at grid indices j < c
        return np.cumsum(acc[:, ::-1], axis=1)[:, ::-1][:, 1:]

    count = active_sum(np.ones_like(h))
    s1 = active_sum(h)
    s2 = active_sum(h * h)
    g = base[None, :] / h_min[:, None]
    ga = g * amp
    return count - 2.0 * ga * s1 + ga * ga * s2 + noise_variance[:, None] * g * g, g


def peak_mse_batch(h, noise_variance, peak_limit):
    """Vectorized baseline over rows of ``h`` (shape (N, K)).

    Returns ``(g, b, mse)``.
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    n = h.shape[0]
    nv = np.broadcast_to(np.asarray(noise_variance, dtype=float), (n,))
    amp = np.sqrt(float(peak_limit))

    base = np.logspace(np.log10(GRID_SPAN[0]), np.log10(GRID_SPAN[1]), GRID_POINTS)
    values, grid = _objective_on_grid(h, nv, amp, base, np.min(h, axis=-1))
    idx, lo, hi = grid_bracket(values, grid)
    if np.any(idx < 0):
        raise SolverError("peak-power objective is not finite anywhere on the grid")

    g = golden_section(lambda gg: _objective(h, nv, amp, gg), lo, hi, rtol=REFINE_RTOL)
    b = _tx_gains(h, g, amp)
    resid = g[:, None] * h * b - 1.0
    mse = np.sum(resid * resid, axis=-1) + nv * g * g
    return g, b, mse


def solve_min_mse_peak(instance: SystemInstance, peak: PeakConstraint | float) -> PeakSolveResult:
    if not isinstance(peak, PeakConstraint):
        peak = PeakConstraint(peak)
    g, b, mse = peak_mse_batch(instance.h[None, :], instance.noise_variance, peak.per_sensor_limit)
    design = TxRxDesign(float(g[0]), b[0])
    point = MsePowerPoint(float(mse[0]), float(np.dot(b[0], b[0])))
    return PeakSolveResult(point, design)
