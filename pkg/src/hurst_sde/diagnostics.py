"""Pathwise regularity diagnostics for simulated trajectories.

The estimators rest on two pathwise hypotheses about the observed process:
increments shrink like the grid step to the power H (up to epsilon), and
second differences match g(X) times the driver's second differences up to a
remainder of order step^{2(H - epsilon)}.  Neither involves a computable
constant, so the checks here are slope checks: maxima are measured across a
ladder of grid sizes on a common trajectory and regressed on the log step.
"""

from __future__ import annotations

import numpy as np

from .estimators import _eval_diffusion
from .fbm import SamplePath

__all__ = [
    "max_abs_increment",
    "second_difference_residual",
    "loglog_slope",
]


def max_abs_increment(path: SamplePath) -> float:
    """max_k |X_{t_k} - X_{t_{k-1}}| over the grid."""
    return float(np.max(np.abs(np.diff(path.values))))


def second_difference_residual(path: SamplePath, driver: SamplePath, g) -> float:
    """max_k |D2X_k - g(X_{k-1}) * D2B_k| on the common grid of path and driver."""
    if path.n != driver.n:
        raise ValueError("path and driver must share one grid")
    d2x = path.second_differences()
    d2b = driver.second_differences()
    x_prev = path.values[1:-1]
    gv = _eval_diffusion(g, x_prev)
    return float(np.max(np.abs(d2x - gv * d2b)))


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need two same-length samples of at least two points")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("log-log regression needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
