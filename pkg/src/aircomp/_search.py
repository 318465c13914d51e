"""Vectorized one-dimensional searches used by the numerical reference solvers.

Every routine works row-wise on a batch and freezes rows that have converged,
so a row's answer is independent of the other rows in the batch.
"""

from __future__ import annotations

import math

import numpy as np

from .core import SolverError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, rtol=1e-10, max_iter=500):
    """Minimize a unimodal row-wise function on ``[lo, hi]``.

    ``f`` maps an array of abscissae of shape ``(N,)`` to values of shape ``(N,)``.
    Returns the final bracket midpoints.
    """
    a = np.array(lo, dtype=float, ndmin=1)
    b = np.array(hi, dtype=float, ndmin=1)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1 = f(x1)
    f2 = f(x2)
    for _ in range(max_iter):
        active = (b - a) > rtol * np.abs(b)
        if not np.any(active):
            return 0.5 * (a + b)
        left = f1 <= f2  # minimum lies in [a, x2]
        shrink_left = active & left
        shrink_right = active & ~left
        new_a = np.where(shrink_right, x1, a)
        new_b = np.where(shrink_left, x2, b)
        new_x1 = np.where(shrink_left, new_b - INV_PHI * (new_b - new_a), np.where(shrink_right, x2, x1))
        new_x2 = np.where(shrink_right, new_a + INV_PHI * (new_b - new_a), np.where(shrink_left, x1, x2))
        # one fresh evaluation per active row
        probe = np.where(shrink_left, new_x1, new_x2)
        fp = f(probe)
        f1, f2 = (
            np.where(shrink_left, fp, np.where(shrink_right, f2, f1)),
            np.where(shrink_right, fp, np.where(shrink_left, f1, f2)),
        )
        a, b, x1, x2 = new_a, new_b, new_x1, new_x2
    raise SolverError(f"golden-section search did not reach rtol={rtol} in {max_iter} iterations")


def geometric_bisect(pred, lo, hi, rtol=4e-16, max_iter=400):
    """Bisect in log-space on positive brackets with ``pred(lo)`` true, ``pred(hi)`` false."""
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    for _ in range(max_iter):
        active = (hi - lo) > rtol * hi
        if not np.any(active):
            return lo, hi
        mid = np.sqrt(lo) * np.sqrt(hi)
        # the log midpoint can round outside a bracket only a few ulps wide
        mid = np.where((mid <= lo) | (mid >= hi), 0.5 * (lo + hi), mid)
        up = pred(mid)
        lo = np.where(active & up, mid, lo)
        hi = np.where(active & ~up, mid, hi)
    raise SolverError(f"bisection did not reach rtol={rtol} in {max_iter} iterations")


def grid_bracket(values, grid):
    """Row-wise argmin of ``values`` on ``grid`` and its neighbouring grid points.

    Non-finite entries of ``values`` are ignored.  Rows with no finite value get
    index -1.
    """
    vals = np.where(np.isfinite(values), values, np.inf)
    idx = np.argmin(vals, axis=-1)
    rows = np.arange(vals.shape[0])
    ok = np.isfinite(vals[rows, idx])
    n = grid.shape[-1]
    lo = grid[rows, np.maximum(idx - 1, 0)]
    hi = grid[rows, np.minimum(idx + 1, n - 1)]
    return np.where(ok, idx, -1), lo, hi
