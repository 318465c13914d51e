"""Independent numerical solvers used to validate the closed-form policies.

Nothing here calls into :mod:`aircomp.mse_policy` or
:mod:`aircomp.power_policy`.  ``pg_min_mse`` attacks the original non-convex
problem in ``(g, b)`` directly with projected gradient steps; ``nested_min_power``
sweeps the receiver scaling and, for each value, solves the convex
fixed-``g`` subproblem through its KKT multiplier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._search import geometric_bisect, golden_section, grid_bracket
from .core import DomainError, MsePowerPoint, SolverError, SystemInstance, TxRxDesign, mse, sum_power

__all__ = ["OracleSettings", "OracleResult", "pg_min_mse", "nested_min_power"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleSettings:
    restarts: int = 4
    max_steps: int = 100_000
    step_tolerance: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_steps < 1:
            raise DomainError("restarts and max_steps must be positive")
        if not self.step_tolerance > 0.0:
            raise DomainError("step_tolerance must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class OracleResult:
    point: MsePowerPoint
    design: TxRxDesign
    objective: float
    converged: bool
    steps: int = 0
    skipped: int = 0  # infeasible receiver scalings on the outer grid


# -- minimum MSE under a sum-power budget -------------------------------------

def _mse_and_grad(h, nv, x):
    g, b = x[0], x[1:]
    r = g * h * b - 1.0
    f = np.dot(r, r) + nv * g * g
    grad = np.empty_like(x)
    grad[0] = 2.0 * np.dot(r, h * b) + 2.0 * nv * g
    grad[1:] = 2.0 * r * g * h
    return f, grad


def _project(x, radius):
    y = x.copy()
    norm = np.linalg.norm(y[1:])
    if norm > radius:
        y[1:] *= radius / norm
    return y


def _spg(h, nv, radius, x0, settings, memory=10):
    """Spectral projected gradient with nonmonotone backtracking.

    The first trial step is 1.0; later ones use the Barzilai-Borwein length.
    Returns ``(x, f, steps, converged)``.
    """
    x = _project(x0, radius)
    f, grad = _mse_and_grad(h, nv, x)
    history = [f]
    alpha = 1.0
    quiet = 0
    for step in range(1, settings.max_steps + 1):
        d = _project(x - alpha * grad, radius) - x
        if np.max(np.abs(d)) <= 1e-15 * (1.0 + np.max(np.abs(x))):
            return x, f, step, True
        fmax = max(history[-memory:])
        slope = np.dot(grad, d)
        lam = 1.0
        for _ in range(60):
            x_new = x + lam * d
            f_new, grad_new = _mse_and_grad(h, nv, x_new)
            if f_new <= fmax + 1e-4 * lam * slope:
                break
            lam *= 0.5
        else:
            return x, f, step, False
        s = x_new - x
        y = grad_new - grad
        sy = np.dot(s, y)
        # negative curvature along s: fall back to a unit step
        alpha = min(max(np.dot(s, s) / sy, 1e-12), 1e12) if sy > 0.0 else 1.0
        change = abs(f - f_new) / max(abs(f_new), 1e-300)
        quiet = quiet + 1 if change < settings.step_tolerance else 0
        x, f, grad = x_new, f_new, grad_new
        history.append(f)
        if quiet >= 5:
            return x, f, step, True
    return x, f, settings.max_steps, False


def pg_min_mse(instance: SystemInstance, P: float, settings: OracleSettings | None = None) -> OracleResult:
    """Best of several projected-gradient runs on the raw ``(g, b)`` problem."""
    settings = settings or OracleSettings()
    P = float(P)
    if not np.isfinite(P) or P <= 0.0:
        raise DomainError(f"sum-power limit must be finite and positive, got {P}")
    h, nv = instance.h, instance.noise_variance
    K = h.size
    radius = np.sqrt(P)

    best = None
    streams = np.random.SeedSequence(settings.seed).spawn(settings.restarts)
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        z = rng.standard_normal(K)
        x0 = np.empty(K + 1)
        x0[0] = rng.uniform(0.0, 2.0 / h.min())
        x0[1:] = radius * z / np.linalg.norm(z)
        x, f, steps, converged = _spg(h, nv, radius, x0, settings)
        if not converged:
            log.warning("pg_min_mse restart %d stopped after %d steps without converging", i, steps)
        if x[0] < 0.0:
            x = -x  # (g, b) -> (-g, -b) leaves the objective unchanged
        design = TxRxDesign(x[0], np.maximum(x[1:], 0.0))
        obj = mse(instance, design)
        if best is None or obj < best.objective:
            best = OracleResult(
                MsePowerPoint(obj, sum_power(design)), design, obj, converged, steps
            )
    return best


# -- minimum sum power under an MSE limit --------------------------------------

GRID_POINTS = 512
GRID_SPAN = (1e-4, 1e4)
REFINE_RTOL = 1e-10


def _multiplier(h, nv, eps, g):
    """KKT multiplier giving MSE == eps at receiver scaling ``g`` (rows of h)."""
    # MSE(lam) = sum_k (1/(1 + lam g^2 h_k^2))^2 + nv g^2 falls from K + nv g^2 to nv g^2
    target = eps - nv * g * g
    g2h2 = (g * g)[:, None] * h * h

    def too_small(lam):
        u = 1.0 / (1.0 + lam[:, None] * g2h2)
        return np.sum(u * u, axis=-1) > target

    lo = np.full(g.shape, 1.0)
    hi = np.full(g.shape, 1.0)
    for _ in range(2100):
        grow = too_small(hi)
        shrink = ~too_small(lo)
        if not (np.any(grow) or np.any(shrink)):
            break
        hi = np.where(grow, 2.0 * hi, hi)
        lo = np.where(shrink, 0.5 * lo, lo)
    else:
        raise SolverError("could not bracket the KKT multiplier")
    lo, hi = geometric_bisect(too_small, lo, hi)
    return 0.5 * (lo + hi)


def _design_for(h, nv, eps, g):
    lam = _multiplier(h, nv, eps, g)
    gh = g[:, None] * h
    return lam[:, None] * gh / (1.0 + lam[:, None] * gh * gh)


def _power_for(h, nv, eps, g):
    b = _design_for(h, nv, eps, g)
    return np.sum(b * b, axis=-1)


def nested_min_power(instance: SystemInstance, eps: float, settings: OracleSettings | None = None) -> OracleResult:
    """Outer search over ``g`` around an exact fixed-``g`` KKT solve."""
    eps = float(eps)
    if not np.isfinite(eps) or eps <= 0.0:
        raise DomainError(f"MSE limit must be finite and positive, got {eps}")
    h, nv = instance.h, instance.noise_variance
    K = h.size
    if eps >= K:
        design = TxRxDesign.zero(K)
        return OracleResult(MsePowerPoint(mse(instance, design), 0.0), design, 0.0, True)

    grid = np.logspace(np.log10(GRID_SPAN[0]), np.log10(GRID_SPAN[1]), GRID_POINTS) / h.max()
    feasible = nv * grid * grid < eps
    skipped = int(np.count_nonzero(~feasible))
    if not np.any(feasible):
        raise SolverError("no receiver scaling on the grid admits MSE <= eps")
    hh = np.broadcast_to(h, (int(feasible.sum()), K))
    values = np.full(GRID_POINTS, np.inf)
    values[feasible] = _power_for(hh, nv, eps, grid[feasible])
    idx, lo, hi = grid_bracket(values[None, :], grid[None, :])
    # keep the refinement bracket inside the feasible range
    g_cap = np.sqrt(eps / nv)
    hi = np.minimum(hi, g_cap * (1.0 - 1e-12))

    g = golden_section(lambda gg: _power_for(h[None, :], nv, eps, gg), lo, hi, rtol=REFINE_RTOL)
    b = _design_for(h[None, :], nv, eps, g)[0]
    design = TxRxDesign(float(g[0]), b)
    pw = sum_power(design)
    return OracleResult(MsePowerPoint(mse(instance, design), pw), design, pw, True, skipped=skipped)
