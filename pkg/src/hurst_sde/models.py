"""Simulation of scalar SDEs driven by fractional Brownian motion.

Models have the form ``dX = f(X) dt + g(X) dB^H`` with an initial value xi.
Generic Lipschitz-drift / smooth-diffusion models are integrated by an
explicit Euler scheme with the pathwise reading of the noise term (valid for
H > 1/2, where the Young integral applies).  The logistic-growth model
``dX = (lambda*X - X^2) dt + sigma*X dB^H`` has a closed-form solution and is
solved exactly (up to a trapezoid quadrature of its normalizing integral),
which also makes it the standard accuracy oracle for the Euler path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import DiffusionDegeneracy, SimulationBlowUp
from .fbm import SamplePath, generate_fbm
from .validation import check_hurst, check_positive, check_positive_int

__all__ = [
    "ModelSpec",
    "NestedObservations",
    "DIFFUSION_GUARD",
    "simulate_euler",
    "verhulst_exact",
    "solve",
    "sample_path",
    "sample_nested",
    "required_k_n",
    "default_k_n",
    "model_from_dict",
]

# Estimators divide by g(X); abort once |g(x)| < DIFFUSION_GUARD * (1 + |x|).
DIFFUSION_GUARD = 1e-8
# Refuse nested grids larger than this many points unless overridden.
DEFAULT_MAX_POINTS = 50_000_000


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Coefficients of a scalar SDE dX = drift(X) dt + diffusion(X) dB^H.

    ``kind`` tags models with special handling: "verhulst" is solved in closed
    form, "fbm" (zero drift, unit diffusion) reduces to the driver itself.
    User-supplied callables must be re-entrant; the library never mutates them.
    """

    drift: Callable
    diffusion: Callable
    xi: float
    kind: str = "generic"
    params: dict = field(default_factory=dict)

    @classmethod
    def generic(cls, drift: Callable, diffusion: Callable, xi: float) -> "ModelSpec":
        return cls(drift, diffusion, float(xi))

    @classmethod
    def verhulst(cls, lam: float, sigma: float, xi: float) -> "ModelSpec":
        """Logistic growth: drift lam*x - x^2, diffusion sigma*x, start xi > 0."""
        lam = float(lam)
        sigma = check_positive(sigma, "sigma")
        xi = check_positive(xi, "xi")
        return cls(
            drift=lambda x: lam * x - x * x,
            diffusion=lambda x: sigma * x,
            xi=xi,
            kind="verhulst",
            params={"lambda": lam, "sigma": sigma, "xi": xi},
        )

    @classmethod
    def driver_only(cls, xi: float = 0.0) -> "ModelSpec":
        """Zero drift, unit diffusion: the solution is xi + B^H itself."""
        return cls(
            drift=lambda x: 0.0,
            diffusion=lambda x: 1.0,
            xi=float(xi),
            kind="fbm",
            params={"xi": float(xi)},
        )

    def describe(self) -> dict:
        """JSON-ready summary; generic callables are not serialized."""
        if self.kind == "generic":
            return {"kind": "generic", "xi": self.xi}
        return {"kind": self.kind, **self.params}


def model_from_dict(spec: dict) -> ModelSpec:
    """Rebuild a builtin model from its ``describe()`` dictionary."""
    kind = spec.get("kind")
    if kind == "verhulst":
        return ModelSpec.verhulst(spec["lambda"], spec["sigma"], spec["xi"])
    if kind == "fbm":
        return ModelSpec.driver_only(spec.get("xi", 0.0))
    raise ValueError(f"cannot rebuild model of kind {kind!r} from a dictionary")


@dataclass(frozen=True, eq=False)
class NestedObservations:
    """Observations of X on the fine grid s_i = i*T/m, i = 0..m, with m = n*k_n.

    The coarse grid t_k = k*T/n sits inside the fine one at indices k*k_n,
    so coarse statistics are slices of the same trajectory, never a
    re-simulation.
    """

    n: int
    k_n: int
    T: float
    values: np.ndarray

    def __post_init__(self):
        n = check_positive_int(self.n, "n")
        k_n = check_positive_int(self.k_n, "k_n")
        T = check_positive(self.T, "T")
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size != n * k_n + 1:
            raise ValueError(
                f"values must have n*k_n + 1 = {n * k_n + 1} entries, got {v.size}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("observation values must all be finite")
        v.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k_n", k_n)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "values", v)

    @property
    def m_n(self) -> int:
        return self.n * self.k_n

    @property
    def fine_step(self) -> float:
        return self.T / self.m_n

    def coarse_values(self) -> np.ndarray:
        return self.values[:: self.k_n]

    def fine_path(self) -> SamplePath:
        return SamplePath(self.T, self.values)

    def meets_growth_condition(self) -> bool:
        """Whether k_n >= ceil(n ln n), the refinement the estimator theory assumes."""
        return self.k_n >= required_k_n(self.n)


def required_k_n(n: int) -> int:
    """Minimal admissible refinement factor ceil(n * ln n)."""
    n = check_positive_int(n, "n")
    return max(1, math.ceil(n * math.log(n)))


def default_k_n(n: int, schedule: str = "quadratic", theta: float = 1.5) -> int:
    """Refinement schedules: "quadratic" gives n^2, "log" gives n*ceil(ln(n)^theta)."""
    n = check_positive_int(n, "n", minimum=2)
    if schedule == "quadratic":
        return n * n
    if schedule == "log":
        return n * math.ceil(math.log(n) ** theta)
    raise ValueError(f"unknown k_n schedule {schedule!r}")


def simulate_euler(model: ModelSpec, driver: SamplePath) -> SamplePath:
    """Explicit Euler path of the model along an fBm driver, on the driver grid.

    X_{k+1} = X_k + f(X_k) * (T/n) + g(X_k) * (B_{k+1} - B_k), X_0 = xi.

    Raises SimulationBlowUp at the first non-finite value and
    DiffusionDegeneracy as soon as |g(X_k)| < DIFFUSION_GUARD * (1 + |X_k|);
    the latter check also covers the final grid point.
    """
    B = driver.values
    n = driver.n
    h = driver.step
    x = np.empty(n + 1)
    x[0] = float(model.xi)
    f = model.drift
    g = model.diffusion
    for k in range(n):
        xk = x[k]
        gk = g(xk)
        if abs(gk) < DIFFUSION_GUARD * (1.0 + abs(xk)):
            raise DiffusionDegeneracy(
                f"|g(X)| = {abs(gk):.3e} at grid index {k} is below the guard"
            )
        xn = xk + f(xk) * h + gk * (B[k + 1] - B[k])
        if not math.isfinite(xn):
            raise SimulationBlowUp(k + 1)
        x[k + 1] = xn
    g_last = g(x[n])
    if abs(g_last) < DIFFUSION_GUARD * (1.0 + abs(x[n])):
        raise DiffusionDegeneracy(
            f"|g(X)| = {abs(g_last):.3e} at grid index {n} is below the guard"
        )
    return SamplePath(driver.T, x)


def verhulst_exact(lam: float, sigma: float, xi: float, driver: SamplePath) -> SamplePath:
    """Closed-form logistic-growth path along an fBm driver.

    X_t = xi * exp(lam*t + sigma*B_t) / (1 + xi * Q_t) with
    Q_t = integral_0^t exp(lam*s + sigma*B_s) ds approximated by the
    composite trapezoid rule on the driver grid.  All outputs are positive.
    """
    lam = float(lam)
    sigma = check_positive(sigma, "sigma")
    xi = check_positive(xi, "xi")
    t = driver.times()
    w = np.exp(lam * t + sigma * driver.values)
    if not np.all(np.isfinite(w)):
        bad = int(np.argmax(~np.isfinite(w)))
        raise SimulationBlowUp(bad, f"exponential overflow at grid index {bad}")
    q = cumulative_trapezoid(w, dx=driver.step, initial=0.0)
    x = xi * w / (1.0 + xi * q)
    return SamplePath(driver.T, x)


def solve(model: ModelSpec, driver: SamplePath) -> SamplePath:
    """Trajectory of the model along the given driver, on the driver grid.

    Dispatches on the model kind: closed form for "verhulst", the driver
    itself (shifted by xi) for "fbm", explicit Euler otherwise.
    """
    if model.kind == "verhulst":
        p = model.params
        return verhulst_exact(p["lambda"], p["sigma"], p["xi"], driver)
    if model.kind == "fbm":
        if model.xi == 0.0:
            return driver
        return SamplePath(driver.T, model.xi + driver.values)
    return simulate_euler(model, driver)


def sample_path(model, H, n, T, seed, *, oversample: int = 1, return_driver: bool = False):
    """One model trajectory observed on the n-point grid.

    With ``oversample > 1`` the driver and the solution live on a grid finer
    by that factor and only every ``oversample``-th point is returned (the
    restriction of an fBm path to a subgrid is still exact fBm).  By default
    the simulation grid and the observation grid coincide.
    """
    h = check_hurst(H)
    n = check_positive_int(n, "n", minimum=2)
    over = check_positive_int(oversample, "oversample")
    driver = generate_fbm(h, n * over, T, seed)
    x = solve(model, driver)
    if over > 1:
        x = SamplePath(x.T, x.values[::over])
        driver = SamplePath(driver.T, driver.values[::over])
    return (x, driver) if return_driver else x


def sample_nested(
    model,
    H,
    n,
    k_n,
    T,
    seed,
    *,
    enforce_growth: bool = True,
    oversample: int = 1,
    max_points: int = DEFAULT_MAX_POINTS,
    return_driver: bool = False,
):
    """One model trajectory on the nested grid (n coarse points, k_n-fold refinement).

    Generates the fBm driver directly on the m = n*k_n grid and solves the
    model there, so the coarse observations are exact slices of the fine
    ones.  ``enforce_growth=False`` overrides the k_n >= ceil(n ln n)
    requirement, e.g. for diagnostics on deliberately coarse refinements.
    """
    h = check_hurst(H)
    n = check_positive_int(n, "n", minimum=2)
    k_n = check_positive_int(k_n, "k_n")
    if enforce_growth and k_n < required_k_n(n):
        raise ValueError(
            f"k_n={k_n} is below the growth requirement ceil(n ln n)={required_k_n(n)}; "
            "pass enforce_growth=False to override"
        )
    m = n * k_n
    over = check_positive_int(oversample, "oversample")
    if m * over + 1 > max_points:
        raise ValueError(
            f"nested grid would hold {m * over + 1} points, above the cap {max_points}"
        )
    driver = generate_fbm(h, m * over, T, seed)
    x = solve(model, driver)
    if over > 1:
        x = SamplePath(x.T, x.values[::over])
        driver = SamplePath(driver.T, driver.values[::over])
    obs = NestedObservations(n=n, k_n=k_n, T=x.T, values=x.values)
    return (obs, driver) if return_driver else obs
