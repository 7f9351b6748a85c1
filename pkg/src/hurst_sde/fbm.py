"""Exact sampling of fractional Brownian motion and its second-difference constants.

Fractional Brownian motion (fBm) with Hurst index ``H`` is the centered
Gaussian process with covariance ``(s^{2H} + t^{2H} - |t-s|^{2H}) / 2``.
This module samples it exactly on uniform grids, by circulant embedding of
the stationary increment sequence (O(n log n)) with a dense Cholesky
factorization as a cross-check generator and fallback, and evaluates the
constants attached to its second-order increments:

* ``rho``         lag correlation of standardized second differences,
* ``sigma_sq``    variance in the CLT for the normalized quadratic variation,
* ``abs_rho_sum`` total absolute correlation mass (closed form).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz

from .exceptions import HurstSDEError
from .rng import make_generator
from .validation import check_hurst, check_positive, check_positive_int

__all__ = [
    "SamplePath",
    "fbm_covariance",
    "rho",
    "sigma_sq",
    "abs_rho_sum",
    "generate_fbm",
    "generate_fbm_cholesky",
]

# Embedding eigenvalues more negative than -NEG_EIG_RTOL * max(eig) abort the
# FFT route; anything closer to zero is rounding noise and is clamped.
NEG_EIG_RTOL = 1e-10
# Dense-factorization generator keeps O(n^2) memory; refuse beyond this.
CHOLESKY_MAX_N = 4096
# Adaptive series cap for sigma_sq; rho^2 decays like j^(4H-8), so this is
# only approached for H very close to 1.
SIGMA_SQ_MAX_TERMS = 1_000_000


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A scalar process observed on the uniform grid t_k = k*T/n, k = 0..n.

    ``values[0]`` holds the value at time zero.  Instances own a read-only
    copy of their data and are safe to share across threads.
    """

    T: float
    values: np.ndarray

    def __post_init__(self):
        T = check_positive(self.T, "T")
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("values must be a 1-D sequence with at least two points")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must all be finite")
        v.flags.writeable = False
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        """Number of grid steps (values has n + 1 entries)."""
        return self.values.size - 1

    @property
    def step(self) -> float:
        return self.T / self.n

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)

    def increments(self) -> np.ndarray:
        """First differences X_{t_k} - X_{t_{k-1}}, k = 1..n."""
        return np.diff(self.values)

    def second_differences(self) -> np.ndarray:
        """Second differences X_{t_k} - 2 X_{t_{k-1}} + X_{t_{k-2}}, k = 2..n."""
        v = self.values
        return v[2:] - 2.0 * v[1:-1] + v[:-2]


def fbm_covariance(H, s, t):
    """Covariance of fBm at times ``s`` and ``t``: (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.

    Accepts scalars or arrays (broadcast); times must be nonnegative.
    """
    h = check_hurst(H)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0.0) or np.any(t < 0.0):
        raise ValueError("times must be nonnegative")
    two_h = 2.0 * h
    out = 0.5 * (s**two_h + t**two_h - np.abs(t - s) ** two_h)
    return float(out) if out.ndim == 0 else out


def rho(H, j):
    """Correlation of standardized second differences of fBm at integer lag ``j``.

    For the unit-step second-difference sequence D_k = B_k - 2B_{k-1} + B_{k-2},
    rho(H, j) = Cov(D_k, D_{k+j}) / Var(D_k).  Symmetric in j by construction
    (evaluated at |j|), equal to 1 at j = 0, and O(j^{2H-4}) as |j| grows.
    """
    h = check_hurst(H)
    two_h = 2.0 * h
    jj = np.abs(np.asarray(j, dtype=float))
    # Pair symmetric terms first: keeps rho(H, 0) == 1.0 exact in floats.
    outer = np.abs(jj - 2.0) ** two_h + (jj + 2.0) ** two_h
    inner = np.abs(jj - 1.0) ** two_h + (jj + 1.0) ** two_h
    num = outer - 4.0 * inner + 6.0 * jj**two_h
    out = -num / (2.0 * (4.0 - 2.0**two_h))
    return float(out) if out.ndim == 0 else out


def sigma_sq(H, tol: float = 1e-10) -> float:
    """Variance constant 2 * (1 + 2 * sum_{j>=1} rho(H, j)^2) of the QV central limit.

    The series is truncated adaptively: since rho(H, j)^2 = O(j^{4H-8}), the
    remaining tail is bounded by rho(H, j)^2 * (1 + j / (7 - 4H)); summation
    stops once that bound has stayed below ``tol`` for two consecutive lags
    (hard cap SIGMA_SQ_MAX_TERMS).  Always >= 2.
    """
    h = check_hurst(H)
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    tail_factor = 1.0 / (7.0 - 4.0 * h)
    total = 0.0
    below = 0
    block = 64
    j = 0
    while j < SIGMA_SQ_MAX_TERMS:
        lags = np.arange(j + 1, min(j + block, SIGMA_SQ_MAX_TERMS) + 1)
        r2 = np.asarray(rho(h, lags)) ** 2
        tails = r2 * (1.0 + lags * tail_factor)
        for r2_j, tail_j in zip(r2, tails):
            j += 1
            total += r2_j
            below = below + 1 if tail_j < tol else 0
            if below >= 2 and j >= 8:
                return 2.0 * (1.0 + 2.0 * total)
    return 2.0 * (1.0 + 2.0 * total)


def abs_rho_sum(H) -> float:
    """Total absolute correlation mass sum_{j in Z} |rho(H, j)|, in closed form.

    Equals 2 for H >= 1/2 (all nonzero lags contribute negative correlation)
    and increases to 8/3 as H tends to 0.
    """
    h = check_hurst(H)
    if h >= 0.5:
        return 2.0
    t2 = 2.0 ** (2.0 * h)
    t3 = 3.0 ** (2.0 * h)
    return 1.0 + (10.0 - 7.0 * t2 + 2.0 * t3) / (4.0 - t2)


def _fgn_unit_autocov(H: float, max_lag: int) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags 0..max_lag."""
    k = np.arange(max_lag + 1, dtype=float)
    two_h = 2.0 * H
    return 0.5 * ((k + 1.0) ** two_h - 2.0 * k**two_h + np.abs(k - 1.0) ** two_h)


class _EmbeddingNotPSD(Exception):
    def __init__(self, min_eig: float):
        self.min_eig = min_eig
        super().__init__(f"circulant embedding eigenvalue {min_eig:.6e} below tolerance")


@lru_cache(maxsize=64)
def _embedding_coefficients(H: float, n: int) -> np.ndarray:
    """sqrt(eig / 2n) of the circulant embedding of the unit-step fGn covariance."""
    gamma = _fgn_unit_autocov(H, n)
    row = np.concatenate([gamma, gamma[-2:0:-1]])  # length 2n, even symmetric
    eig = np.fft.fft(row).real
    max_eig = float(eig.max())
    min_eig = float(eig.min())
    if min_eig < -NEG_EIG_RTOL * max_eig:
        raise _EmbeddingNotPSD(min_eig)
    np.clip(eig, 0.0, None, out=eig)
    coeff = np.sqrt(eig / (2.0 * n))
    coeff.flags.writeable = False
    return coeff


def generate_fbm(H, n, T, seed) -> SamplePath:
    """Sample one exact fBm path on the grid t_k = k*T/n, k = 0..n.

    Parameters
    ----------
    H : float
        Hurst index in (0, 1).
    n : int
        Number of grid steps, at least 2.
    T : float
        Time horizon, positive.
    seed : int
        Nonnegative integer; the same (H, n, T, seed) always reproduces the
        path bit for bit.

    Returns
    -------
    SamplePath
        values[0] == 0; increments form a stationary Gaussian sequence with
        the exact fGn covariance (no approximation beyond rounding).

    Notes
    -----
    Uses circulant embedding of the increment covariance.  The embedding is
    nonnegative definite for fBm in exact arithmetic; should rounding push an
    eigenvalue below ``-NEG_EIG_RTOL * max(eig)``, the dense Cholesky
    generator takes over with a warning.
    """
    h = check_hurst(H)
    n = check_positive_int(n, "n", minimum=2)
    T = check_positive(T, "T")
    try:
        coeff = _embedding_coefficients(h, n)
    except _EmbeddingNotPSD as exc:
        warnings.warn(
            f"circulant embedding for H={h}, n={n} failed the eigenvalue check "
            f"(min eigenvalue {exc.min_eig:.3e}); falling back to the Cholesky generator",
            RuntimeWarning,
            stacklevel=2,
        )
        return generate_fbm_cholesky(h, n, T, seed)
    rng = make_generator(seed)
    z = rng.standard_normal((2, 2 * n))
    spectral = coeff * (z[0] + 1j * z[1])
    unit_fgn = np.fft.fft(spectral)[:n].real
    increments = (T / n) ** h * unit_fgn
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(increments, out=values[1:])
    return SamplePath(T, values)


@lru_cache(maxsize=4)
def _increment_cholesky(H: float, n: int) -> np.ndarray:
    gamma = _fgn_unit_autocov(H, n - 1)
    cov = toeplitz(gamma)
    for jitter in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            L = np.linalg.cholesky(cov + jitter * np.eye(n) if jitter else cov)
        except np.linalg.LinAlgError:
            continue
        L.flags.writeable = False
        return L
    raise HurstSDEError(
        f"increment covariance for H={H}, n={n} is not positive definite even after jitter"
    )


def generate_fbm_cholesky(H, n, T, seed) -> SamplePath:
    """Sample one exact fBm path via dense factorization of the increment covariance.

    Same distributional contract as ``generate_fbm`` (no bitwise agreement
    between the two methods); O(n^2) memory, so n is capped at
    ``CHOLESKY_MAX_N``.  Mainly a cross-check oracle for the FFT generator.
    """
    h = check_hurst(H)
    n = check_positive_int(n, "n", minimum=2)
    T = check_positive(T, "T")
    if n > CHOLESKY_MAX_N:
        raise ValueError(f"n={n} exceeds the Cholesky generator cap {CHOLESKY_MAX_N}")
    L = _increment_cholesky(h, n)
    z = make_generator(seed).standard_normal(n)
    increments = (T / n) ** h * (L @ z)
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(increments, out=values[1:])
    return SamplePath(T, values)
