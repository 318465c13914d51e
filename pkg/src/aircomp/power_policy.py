"""Minimum sum power under a computation-MSE limit.

For a fixed receiver scaling the problem is convex and its KKT conditions give
``b_k = lam g h_k / (1 + lam g^2 h_k^2)``.  Writing
``tau_k = 1 / (1 + lam g^2 h_k^2)`` eliminates ``g`` through the active MSE
constraint and leaves a problem in ``tau`` whose stationary point is
``tau_k = c_k / (c_k + M)`` with ``c_k = 1/h_k^2`` and a scalar ``M > 0``
that solves

    M * (eps - sum_k tau_k^2) = sum_k c_k (1 - tau_k)^2.

``M`` is found by bracketed bisection on ``(M_min, inf)`` where ``M_min`` is the
point at which ``sum_k tau_k^2 = eps``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mse_policy
from .core import DomainError, SolverError, SystemInstance, TxRxDesign

__all__ = [
    "FixedPointDiagnostics",
    "PowerSolveReport",
    "fixed_point_residual",
    "solve_m",
    "solve_min_power",
    "duality_check",
    "min_power_batch",
]

RTOL = 1e-12
MAX_BISECTIONS = 200
MAX_EXPANSIONS = 2048


@dataclass(frozen=True, eq=False)
class FixedPointDiagnostics:
    m_value: float
    taus: np.ndarray
    kkt_multiplier: float
    residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class PowerSolveReport:
    design: TxRxDesign
    pw_star: float
    diagnostics: FixedPointDiagnostics
    trivial: bool = False


def _taus(c, m):
    return c / (c + m[..., None])


def _rowdot(a, b):
    return np.einsum("...k,...k->...", a, b)


def _tau_energy(c, m):
    t = _taus(c, m)
    return _rowdot(t, t)


def _residual(c, eps, m):
    t = _taus(c, m)
    u = 1.0 - t  # M / (c + M)
    return m * (eps - _rowdot(t, t)) - _rowdot(c * u, u)


def fixed_point_residual(channel_costs, mse_limit: float, m: float) -> float:
    """``F(M) = M (eps - sum tau_k^2) - sum c_k (1 - tau_k)^2``; zero at the optimum."""
    c = np.asarray(channel_costs, dtype=float)
    return float(_residual(c, float(mse_limit), np.asarray(float(m))))


def _bisect(pred, lo, hi, rtol, iters):
    """Masked bisection keeping ``pred(lo)`` true and ``pred(hi)`` false.

    Each row stops as soon as its own bracket is narrow enough, so a row's
    result does not depend on what else is in the batch.
    """
    lo, hi = lo.copy(), hi.copy()
    for _ in range(MAX_BISECTIONS):
        active = (hi - lo) > rtol * hi
        if not active.any():
            return lo, hi
        iters += active
        mid = 0.5 * (lo + hi)
        go_up = pred(mid)
        up, down = active & go_up, active & ~go_up
        lo[up] = mid[up]
        hi[down] = mid[down]
    raise SolverError(f"bisection did not reach rtol={rtol} within {MAX_BISECTIONS} iterations")


def _solve_m_batch(c, eps, rtol=RTOL):
    """Vectorized fixed-point solve.  ``c``: (N, K), ``eps``: (N,) with 0 < eps < K."""
    c = np.asarray(c, dtype=float)
    eps = np.asarray(eps, dtype=float)
    K = c.shape[-1]
    iters = np.zeros(eps.shape, dtype=int)

    # Stage 1: M_min with sum_k tau_k^2 = eps.  sum tau^2 is bounded by K times the
    # squared tau of the extreme c, which gives a bracket directly.
    spread = np.sqrt(K / eps) - 1.0
    lo = np.min(c, axis=-1) * spread
    hi = np.max(c, axis=-1) * spread
    for _ in range(MAX_EXPANSIONS):
        low_side = _tau_energy(c, hi) >= eps
        if not np.any(low_side):
            break
        hi = np.where(low_side, 2.0 * hi, hi)
    else:
        raise SolverError("could not bracket the feasibility boundary")
    lo, hi = _bisect(lambda m: _tau_energy(c, m) >= eps, lo, hi, rtol, iters)

    # Stage 2: below M_min the denominator is nonpositive, so F < 0 at the stage-1 lower end.
    lo2 = lo
    if np.any(_residual(c, eps, lo2) >= 0.0):
        raise SolverError("fixed-point residual is not negative at the feasibility boundary")
    hi2 = hi.copy()
    for _ in range(MAX_EXPANSIONS):
        below = _residual(c, eps, hi2) <= 0.0
        if not np.any(below):
            break
        hi2 = np.where(below, 2.0 * hi2, hi2)
    else:
        raise SolverError("fixed-point residual never turned positive while expanding")
    lo2, hi2 = _bisect(lambda m: _residual(c, eps, m) < 0.0, lo2, hi2, rtol, iters)
    return 0.5 * (lo2 + hi2), iters


def _solve_m_scalar(c, eps, rtol=RTOL):
    """Single-instance version of :func:`_solve_m_batch` without the masking overhead."""
    spread = np.sqrt(c.size / eps) - 1.0
    lo, hi = float(c.min() * spread), float(c.max() * spread)
    iters = 0

    def bisect(pred, lo, hi):
        nonlocal iters
        for _ in range(MAX_BISECTIONS):
            if hi - lo <= rtol * hi:
                return lo, hi
            iters += 1
            mid = 0.5 * (lo + hi)
            if pred(mid):
                lo = mid
            else:
                hi = mid
        raise SolverError(f"bisection did not reach rtol={rtol} within {MAX_BISECTIONS} iterations")

    energy = lambda m: float(_tau_energy(c, np.float64(m)))
    residual = lambda m: float(_residual(c, eps, np.float64(m)))

    for _ in range(MAX_EXPANSIONS):
        if energy(hi) < eps:
            break
        hi *= 2.0
    else:
        raise SolverError("could not bracket the feasibility boundary")
    lo, hi = bisect(lambda m: energy(m) >= eps, lo, hi)

    if residual(lo) >= 0.0:
        raise SolverError("fixed-point residual is not negative at the feasibility boundary")
    for _ in range(MAX_EXPANSIONS):
        if residual(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise SolverError("fixed-point residual never turned positive while expanding")
    lo, hi = bisect(lambda m: residual(m) < 0.0, lo, hi)
    return 0.5 * (lo + hi), iters


def _check_eps(eps) -> float:
    eps = float(eps)
    if not np.isfinite(eps) or eps <= 0.0:
        raise DomainError(f"MSE limit must be finite and positive, got {eps}")
    return eps


def solve_m(channel_costs, mse_limit: float, rtol: float = RTOL) -> float:
    """Unique positive root ``M`` of the fixed-point equation.

    ``channel_costs`` are ``c_k = 1/h_k^2``.  Requires ``0 < mse_limit < K``.
    """
    c = np.asarray(channel_costs, dtype=float)
    eps = _check_eps(mse_limit)
    if c.ndim != 1 or c.size < 1 or np.any(c <= 0.0) or not np.all(np.isfinite(c)):
        raise DomainError("channel costs must be a nonempty vector of finite positive reals")
    if eps >= c.size:
        raise DomainError(f"MSE limit {eps} must be below the number of sensors {c.size}")
    return _solve_m_scalar(c, eps, rtol)[0]


def min_power_batch(h, noise_variance, eps):
    """Vectorized optimal design for rows of ``h`` (shape (N, K)) with ``0 < eps < K``.

    Returns ``(g, b, pw_star, m, iterations)``.
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    eps = np.broadcast_to(np.asarray(eps, dtype=float), h.shape[:1])
    nv = np.broadcast_to(np.asarray(noise_variance, dtype=float), h.shape[:1])
    c = 1.0 / (h * h)
    m, iters = _solve_m_batch(c, eps)
    tau = _taus(c, m)
    slack = eps - np.sum(tau * tau, axis=-1)
    if np.any(slack <= 0.0):
        raise SolverError("fixed point lies outside the feasible region")
    g = np.sqrt(slack / nv)
    # b_k = lam g h_k tau_k with lam g^2 = M
    b = (m / g)[:, None] * h * tau
    pw = nv * m * m * np.sum(h * h * tau * tau, axis=-1) / slack
    return g, b, pw, m, iters


def solve_min_power(instance: SystemInstance, mse_limit: float) -> PowerSolveReport:
    """Optimal ``(g, b)`` minimizing ``sum b_k^2`` subject to MSE <= ``mse_limit``.

    For ``mse_limit >= K`` the zero design (with ``g = 0``) is optimal and is
    returned with ``trivial=True``.
    """
    eps = _check_eps(mse_limit)
    K = instance.num_sensors
    if eps >= K:
        diag = FixedPointDiagnostics(0.0, np.ones(K), 0.0, 0.0, 0)
        return PowerSolveReport(TxRxDesign.zero(K), 0.0, diag, trivial=True)

    h, nv = instance.h, instance.noise_variance
    c = 1.0 / (h * h)
    m, iters = _solve_m_scalar(c, eps)
    tau = c / (c + m)
    slack = eps - np.dot(tau, tau)
    if slack <= 0.0:
        raise SolverError("fixed point lies outside the feasible region")
    g = np.sqrt(slack / nv)
    b = (m / g) * h * tau
    pw = nv * m * m * np.dot(h * tau, h * tau) / slack
    diag = FixedPointDiagnostics(
        m_value=m,
        taus=tau,
        kkt_multiplier=m / (g * g),
        residual=abs(fixed_point_residual(c, eps, m)),
        iterations=iters,
    )
    return PowerSolveReport(TxRxDesign(g, b), float(pw), diag)


def duality_check(instance: SystemInstance, mse_limit: float) -> float:
    """Feed the minimum sum power back into the MSE-minimizing policy.

    Both problems trace the same MSE/power frontier, so the returned MSE
    should reproduce ``mse_limit``.
    """
    eps = _check_eps(mse_limit)
    if eps >= instance.num_sensors:
        raise DomainError("round trip is only defined for MSE limits below K")
    pw = solve_min_power(instance, eps).pw_star
    return mse_policy.solve_min_mse(instance, pw).mse_star
