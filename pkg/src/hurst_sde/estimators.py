"""Hurst index estimators built on quadratic variations of second differences.

Two estimators are provided, both consuming discrete observations of an
fBm-driven SDE on [0, T]:

* ``estimate_h1`` needs the diffusion coefficient g: it inverts the scale
  map phi(x) = (T/n)^{2x} (4 - 2^{2x}) at the mean squared g-normalized
  second difference.
* ``estimate_h2`` works with unknown g on a nested grid: each coarse squared
  second difference is normalized by the energy of fine-grid second
  differences in a window around it, which cancels g pathwise.

Both come with asymptotic confidence intervals driven by the central limit
theorem for the normalized quadratic variation (variance ``sigma_sq``), and
``concentration_bound`` gives the non-asymptotic exponential tail bound for
that statistic.  Thin scikit-learn style wrappers (fit + fitted attributes,
``get_params`` support) sit at the bottom of the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm
from sklearn.base import BaseEstimator

from .exceptions import DegenerateData, DiffusionDegeneracy
from .fbm import SamplePath, sigma_sq
from .models import DIFFUSION_GUARD, NestedObservations
from .validation import check_hurst, check_level, check_path_values, check_positive

__all__ = [
    "EstimationResult",
    "phi",
    "phi_inv",
    "estimate_h1",
    "estimate_h2",
    "v_stat",
    "window_energy",
    "asymptotic_ci",
    "concentration_bound",
    "KnownDiffusionHurstEstimator",
    "NestedWindowHurstEstimator",
]

# Inversion bracket [DELTA, 1 - DELTA]; statistics mapping outside phi's range
# on that bracket are clamped to the nearer endpoint and flagged.
DELTA = 1e-6
BISECT_MAX_ITER = 100


@dataclass(frozen=True)
class EstimationResult:
    """Point estimate of the Hurst index with its confidence interval.

    ``raw_statistic`` is the pre-inversion (h1) or pre-log (h2) statistic;
    ``clamped`` is True whenever that statistic fell outside the invertible
    or log-positive range and the estimate was pinned to an endpoint.
    """

    estimator: str
    h_hat: float
    ci_low: float
    ci_high: float
    level: float
    raw_statistic: float
    clamped: bool
    n: int
    T: float
    k_n: int | None = None

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "h_hat": self.h_hat,
            "ci": [self.ci_low, self.ci_high],
            "level": self.level,
            "raw_statistic": self.raw_statistic,
            "clamped": self.clamped,
            "n": self.n,
            "k_n": self.k_n,
            "T": self.T,
        }


def phi(n, T, x) -> float:
    """Scale map (T/n)^{2x} * (4 - 2^{2x}); strictly decreasing in x for n > T."""
    n = int(n)
    T = check_positive(T, "T")
    if not n > T:
        raise ValueError(f"phi requires n > T for monotonicity, got n={n}, T={T}")
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0, 1), got {x!r}")
    return (T / n) ** (2.0 * x) * (4.0 - 2.0 ** (2.0 * x))


def phi_inv(n, T, y) -> tuple[float, bool]:
    """Invert ``phi(n, T, .)`` at ``y`` by bisection on [DELTA, 1 - DELTA].

    Returns ``(x, clamped)``.  If y falls outside the range of phi on the
    bracket, the nearer endpoint is returned with ``clamped=True``.  The
    bisection runs until the bracket reaches floating-point resolution
    (well below 1e-12 in x, and within BISECT_MAX_ITER iterations), which the
    exact-identity contracts of the estimators rely on.
    """
    y = float(y)
    if y <= 0.0:
        raise ValueError(f"y must be positive, got {y!r}")
    lo, hi = DELTA, 1.0 - DELTA
    if y >= phi(n, T, lo):  # phi decreasing: large y means x at the lower end
        return lo, True
    if y <= phi(n, T, hi):
        return hi, True
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:  # bracket is one ulp wide
            break
        if phi(n, T, mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


def _eval_diffusion(g, x: np.ndarray) -> np.ndarray:
    """Evaluate g on an array, accepting vectorized, scalar-returning, or scalar-only g."""
    try:
        gv = np.asarray(g(x), dtype=float)
    except Exception:
        gv = np.asarray([g(v) for v in x], dtype=float)
    if gv.shape != x.shape:
        gv = np.broadcast_to(gv, x.shape)
    return gv


def _check_diffusion_guard(gv: np.ndarray, x: np.ndarray) -> None:
    bad = np.abs(gv) < DIFFUSION_GUARD * (1.0 + np.abs(x))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DiffusionDegeneracy(
            f"|g(X)| = {abs(gv[i]):.3e} at observation {i} is below the guard"
        )


def estimate_h1(path: SamplePath, g=None, level: float = 0.95) -> EstimationResult:
    """Estimate H from a path when the diffusion coefficient g is known.

    The raw statistic is (1/n) * sum_{i=2..n} (D2X_i / g(X_{i-1}))^2 with
    D2X the second differences; the estimate is ``phi_inv`` of it.  ``g``
    defaults to the constant 1 (pure-driver observations).

    Raises DiffusionDegeneracy when |g| drops below the guard at any used
    observation, ValueError for fewer than three steps or n <= e*T.
    """
    n = path.n
    T = path.T
    if n < 3:
        raise ValueError(f"need at least three grid steps, got n={n}")
    level = check_level(level)
    if g is None:
        g = _unit_diffusion
    x_prev = path.values[1:-1]  # X_{t_{i-1}} for i = 2..n
    gv = _eval_diffusion(g, x_prev)
    _check_diffusion_guard(gv, x_prev)
    d2 = path.second_differences()
    raw = float(np.sum((d2 / gv) ** 2) / n)
    if raw <= 0.0:
        h_hat, clamped = 1.0 - DELTA, True  # zero statistic: flattest admissible H
    else:
        h_hat, clamped = phi_inv(n, T, raw)
    ci_low, ci_high = asymptotic_ci(h_hat, n, T, level)
    return EstimationResult("h1", h_hat, ci_low, ci_high, level, raw, clamped, n, T)


def window_energy(obs: NestedObservations, k: int) -> float:
    """Energy of fine-grid second differences in the window around coarse time t_k.

    Sums (D2X at fine index i)^2 for i = k*k_n - k_n + 2 .. k*k_n + k_n,
    i.e. exactly 2*k_n - 1 terms; valid for 1 <= k <= n - 1.
    """
    k = int(k)
    if not 1 <= k <= obs.n - 1:
        raise ValueError(f"k must lie in [1, {obs.n - 1}], got {k}")
    center = k * obs.k_n
    seg = obs.values[center - obs.k_n : center + obs.k_n + 1]
    d2 = seg[2:] - 2.0 * seg[1:-1] + seg[:-2]
    return float(np.dot(d2, d2))


def _window_energies(obs: NestedObservations) -> np.ndarray:
    """window_energy for all k = 1..n-1 in one cumulative-sum pass."""
    v = obs.values
    kn = obs.k_n
    d2 = v[2:] - 2.0 * v[1:-1] + v[:-2]  # entry j holds D2X at fine index j + 2
    sq = d2 * d2
    cs = np.concatenate([[0.0], np.cumsum(sq)])
    centers = np.arange(1, obs.n) * kn
    return cs[centers + kn - 1] - cs[centers - kn]


def estimate_h2(obs: NestedObservations, level: float = 0.95) -> EstimationResult:
    """Estimate H from nested observations without knowing the diffusion.

    raw = (2/n) * sum_{k=2..n} (coarse D2X at t_k)^2 / W_{k-1}, where W_{k-1}
    is the fine-grid window energy around t_{k-1}; the estimate is
    1/2 + ln(raw) / (2 ln k_n), clamped into [DELTA, 1 - DELTA] with a flag.
    Exactly scale-equivariant: rescaling the data leaves the estimate alone.
    """
    n, kn, T = obs.n, obs.k_n, obs.T
    if n < 2:
        raise ValueError(f"need at least two coarse steps, got n={n}")
    if kn < 2:
        raise ValueError(f"k_n must be at least 2 for the log rate, got {kn}")
    level = check_level(level)
    W = _window_energies(obs)  # index k-1 for k = 1..n-1
    if np.any(W <= 0.0):
        k_bad = int(np.argmax(W <= 0.0)) + 1
        raise DegenerateData(f"window energy vanished around coarse index {k_bad}")
    coarse = obs.coarse_values()
    d2c = coarse[2:] - 2.0 * coarse[1:-1] + coarse[:-2]  # k = 2..n
    raw = float(2.0 / n * np.sum(d2c * d2c / W[: n - 1]))
    if raw <= 0.0:
        raise DegenerateData("ratio statistic vanished; the data are degenerate")
    h_hat = 0.5 + math.log(raw) / (2.0 * math.log(kn))
    clamped = False
    if h_hat < DELTA:
        h_hat, clamped = DELTA, True
    elif h_hat > 1.0 - DELTA:
        h_hat, clamped = 1.0 - DELTA, True
    ci_low, ci_high = _ci_from_log_rate(h_hat, n, math.log(kn), level)
    return EstimationResult(
        "h2", h_hat, ci_low, ci_high, level, raw, clamped, n, T, k_n=kn
    )


def v_stat(path: SamplePath, H) -> float:
    """Normalized quadratic variation of second differences at a given H.

    n^{2H-1} / (T^{2H} (4 - 2^{2H})) * sum_{k=2..n} (D2X_k)^2.  For fBm data
    this tends to 1 almost surely and satisfies a CLT with variance
    ``sigma_sq(H)``.  The normalization is finite for every H in (0, 1);
    the H = 1/2 case is excluded from the supporting limit theory but the
    value is still computed.
    """
    h = check_hurst(H)
    n = path.n
    if n < 3:
        raise ValueError(f"need at least three grid steps, got n={n}")
    d2 = path.second_differences()
    two_h = 2.0 * h
    norm_c = n ** (two_h - 1.0) / (path.T**two_h * (4.0 - 2.0**two_h))
    return float(norm_c * np.dot(d2, d2))


def _ci_from_log_rate(h_hat: float, n: int, log_factor: float, level: float) -> tuple[float, float]:
    """Interval h_hat +/- z * sigma(h_hat) / (2 sqrt(n) log_factor), cut to [0, 1]."""
    z = norm.ppf(0.5 * (1.0 + level))
    half = z * math.sqrt(sigma_sq(h_hat, 1e-10)) / (2.0 * math.sqrt(n) * log_factor)
    return max(h_hat - half, 0.0), min(h_hat + half, 1.0)


def asymptotic_ci(h_hat, n, T, level) -> tuple[float, float]:
    """Two-sided confidence interval from the 2*sqrt(n)*ln(n/T) convergence rate.

    The variance constant is evaluated at the estimate (plug-in), so the
    interval is computable without the true H.  Requires n > e*T so the
    logarithmic factor exceeds 1.
    """
    h_hat = check_hurst(h_hat)
    n = int(n)
    T = check_positive(T, "T")
    if n <= T * math.e:
        raise ValueError(f"rate degeneracy: need n > e*T, got n={n}, T={T}")
    level = check_level(level)
    return _ci_from_log_rate(h_hat, n, math.log(n / T), level)


def concentration_bound(z, n) -> float:
    """Exponential tail bound for the centered, scaled second-difference energy.

    Bounds P(|(n-1)^{-1/2} * sum_{k=2..n} (Y_k^2 - 1)| > z) for standardized
    second differences Y_k of fBm, uniformly over H in (0, 1):
    2 * exp(-z^2 / ((32/3) * (z / sqrt(n-1) + 1))).
    """
    z = check_positive(z, "z")
    n = int(n)
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return 2.0 * math.exp(-z * z / ((32.0 / 3.0) * (z / math.sqrt(n - 1.0) + 1.0)))


def _unit_diffusion(x):
    return np.ones_like(np.asarray(x, dtype=float))


class KnownDiffusionHurstEstimator(BaseEstimator):
    """Hurst index estimator for paths with a known diffusion coefficient.

    Parameters
    ----------
    g : callable or None
        Diffusion coefficient; None means constant 1.
    T : float
        Time horizon of the observation grid.
    level : float
        Confidence level of the fitted interval.

    After ``fit(X)`` with X the n+1 observed values, exposes ``h_hat_``,
    ``conf_int_``, ``raw_statistic_``, ``clamped_`` and the full ``result_``.
    """

    def __init__(self, g=None, T: float = 1.0, level: float = 0.95):
        self.g = g
        self.T = T
        self.level = level

    def fit(self, X, y=None):
        values = check_path_values(X)
        path = SamplePath(self.T, values)
        result = estimate_h1(path, self.g, self.level)
        self.result_ = result
        self.h_hat_ = result.h_hat
        self.conf_int_ = (result.ci_low, result.ci_high)
        self.raw_statistic_ = result.raw_statistic
        self.clamped_ = result.clamped
        self.n_ = result.n
        return self


class NestedWindowHurstEstimator(BaseEstimator):
    """Hurst index estimator for nested-grid observations with unknown diffusion.

    ``fit(X)`` expects the n*k_n + 1 fine-grid values; n is inferred from the
    data length and the configured refinement factor ``k_n``.
    """

    def __init__(self, k_n: int, T: float = 1.0, level: float = 0.95):
        self.k_n = k_n
        self.T = T
        self.level = level

    def fit(self, X, y=None):
        values = check_path_values(X)
        if (values.size - 1) % self.k_n != 0:
            raise ValueError(
                f"data length {values.size} is not n*k_n + 1 for k_n={self.k_n}"
            )
        n = (values.size - 1) // self.k_n
        obs = NestedObservations(n=n, k_n=self.k_n, T=self.T, values=values)
        result = estimate_h2(obs, self.level)
        self.result_ = result
        self.h_hat_ = result.h_hat
        self.conf_int_ = (result.ci_low, result.ci_high)
        self.raw_statistic_ = result.raw_statistic
        self.clamped_ = result.clamped
        self.n_ = result.n
        return self
