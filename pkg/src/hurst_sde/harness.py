"""Monte Carlo experiment runner: bias, RMSE, coverage, and normality reports.

An experiment repeatedly generates a driver, solves the configured model,
runs the configured estimator(s), and aggregates the results.  Replication
``r`` draws from the stream derived from ``(master_seed, r)``, so results do
not depend on execution order or on the degree of parallelism (capped by the
``HURST_SDE_THREADS`` environment variable; default serial).  Replications
that fail with a simulation- or data-level error are recorded with status
"failed" and excluded from aggregates; losing more than 20% of them aborts
the experiment.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.stats import kstest, kurtosis, skew

from . import __version__
from .estimators import estimate_h1, estimate_h2
from .exceptions import HurstSDEError, TooManyFailures
from .fbm import SamplePath, sigma_sq
from .models import ModelSpec, model_from_dict, required_k_n, sample_nested, sample_path
from .rng import spawn_seed
from .validation import check_hurst, check_level, check_positive, check_positive_int, check_seed

__all__ = [
    "ExperimentConfig",
    "ReplicationRecord",
    "ExperimentReport",
    "run_experiment",
    "read_replications_csv",
    "REPLICATIONS_HEADER",
]

REPLICATIONS_HEADER = ["r", "seed", "h_hat", "ci_low", "ci_high", "clamped", "status"]
MAX_FAILURE_FRACTION = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one Monte Carlo study; validated on construction."""

    model: ModelSpec
    hurst: float
    estimator: str = "h1"  # "h1" | "h2" | "both"
    n: int = 1024
    k_n: int | None = None
    T: float = 1.0
    replications: int = 100
    seed: int = 0
    level: float = 0.95
    out_dir: str | None = None
    kn_override: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hurst", check_hurst(self.hurst, estimation=True))
        if self.estimator not in ("h1", "h2", "both"):
            raise ValueError(f"estimator must be h1, h2 or both, got {self.estimator!r}")
        object.__setattr__(self, "n", check_positive_int(self.n, "n", minimum=2))
        object.__setattr__(self, "T", check_positive(self.T, "T"))
        object.__setattr__(
            self, "replications", check_positive_int(self.replications, "replications")
        )
        object.__setattr__(self, "seed", check_seed(self.seed))
        object.__setattr__(self, "level", check_level(self.level))
        if self.estimator in ("h2", "both"):
            if self.k_n is None:
                raise ValueError("k_n is required for the h2 estimator")
            k_n = check_positive_int(self.k_n, "k_n", minimum=2)
            object.__setattr__(self, "k_n", k_n)
            if not self.kn_override and k_n < required_k_n(self.n):
                raise ValueError(
                    f"k_n={k_n} is below ceil(n ln n)={required_k_n(self.n)}; "
                    "set kn_override to run anyway (the override is recorded)"
                )

    def estimators(self) -> list[str]:
        return ["h1", "h2"] if self.estimator == "both" else [self.estimator]

    def to_dict(self) -> dict:
        return {
            "model": self.model.describe(),
            "H": self.hurst,
            "estimator": self.estimator,
            "n": self.n,
            "k_n": self.k_n,
            "T": self.T,
            "replications": self.replications,
            "seed": self.seed,
            "level": self.level,
            "out_dir": self.out_dir,
            "kn_override": self.kn_override,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            model=model_from_dict(d["model"]),
            hurst=d["H"],
            estimator=d.get("estimator", "h1"),
            n=d["n"],
            k_n=d.get("k_n"),
            T=d.get("T", 1.0),
            replications=d.get("replications", 100),
            seed=d.get("seed", 0),
            level=d.get("level", 0.95),
            out_dir=d.get("out_dir"),
            kn_override=d.get("kn_override", False),
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ReplicationRecord:
    r: int
    seed: int
    h_hat: float
    ci_low: float
    ci_high: float
    clamped: bool
    status: str  # "ok" | "failed"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class ExperimentReport:
    """Per-replication records plus deterministic aggregates, one set per estimator."""

    config: ExperimentConfig
    records: dict
    aggregates: dict
    version: str = __version__

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config.to_dict(),
            "aggregates": self.aggregates,
        }

    def write(self, out_dir) -> None:
        """Write report.json plus replications.csv (suffixed per estimator when both run)."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")
        names = self.csv_names()
        for est, recs in self.records.items():
            _write_replications_csv(recs, out / names[est])

    def csv_names(self) -> dict:
        ests = list(self.records)
        if len(ests) == 1:
            return {ests[0]: "replications.csv"}
        return {est: f"replications_{est}.csv" for est in ests}


def standardization_rate(estimator: str, H: float, n: int, T: float, k_n=None) -> float:
    """CLT rate multiplying (h_hat - H): 2 sqrt(n) ln(n/T), or 2 sqrt(n) ln(k_n) for h2."""
    if estimator == "h2":
        return 2.0 * math.sqrt(n) * math.log(k_n)
    return 2.0 * math.sqrt(n) * math.log(n / T)


def curvature_corrected_rate(estimator: str, H: float, n: int, T: float, k_n=None) -> float:
    """Finite-sample rate including the curvature of the inverted scale map.

    The h1 estimate solves phi(h) = statistic, so its error scales with the
    full log-derivative of phi at H, namely 2 ln(n/T) + 2^{2H+1} ln 2 / (4 -
    2^{2H}); the second term is asymptotically negligible (which recovers the
    nominal rate) but matters at practical n.  The h2 map is log-linear, so
    its rate carries no correction.
    """
    if estimator == "h2":
        return 2.0 * math.sqrt(n) * math.log(k_n)
    curvature = 2.0 ** (2.0 * H + 1.0) * math.log(2.0) / (4.0 - 2.0 ** (2.0 * H))
    return math.sqrt(n) * (2.0 * math.log(n / T) + curvature)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all replications, aggregate deterministically, and write report files.

    Returns the in-memory report; files go to ``config.out_dir`` when set.
    """
    ests = config.estimators()
    workers = _worker_count()
    reps = range(1, config.replications + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _run_one(config, ests, r), reps))
    else:
        rows = [_run_one(config, ests, r) for r in reps]
    records = {est: [row[est] for row in rows] for est in ests}

    aggregates = {}
    for est in ests:
        n_failed = sum(not rec.ok for rec in records[est])
        if n_failed > MAX_FAILURE_FRACTION * config.replications:
            raise TooManyFailures(
                f"{n_failed}/{config.replications} replications failed for {est}"
            )
        aggregates[est] = compute_aggregates(records[est], config, est)

    report = ExperimentReport(config=config, records=records, aggregates=aggregates)
    if config.out_dir is not None:
        report.write(config.out_dir)
    return report


def compute_aggregates(records, config: ExperimentConfig, estimator: str) -> dict:
    """Deterministic reduction of per-replication records; reusable for audits."""
    H = config.hurst
    ok = [rec for rec in sorted(records, key=lambda rec: rec.r) if rec.ok]
    n_failed = len(records) - len(ok)
    h = np.array([rec.h_hat for rec in ok])
    hits = sum(rec.ci_low <= H <= rec.ci_high for rec in ok)
    rate = standardization_rate(estimator, H, config.n, config.T, config.k_n)
    fin_rate = curvature_corrected_rate(estimator, H, config.n, config.T, config.k_n)
    sd = math.sqrt(sigma_sq(H, 1e-10))
    std_err = rate * (h - H) / sd
    agg = {
        "estimator": estimator,
        "replications": len(records),
        "n_ok": len(ok),
        "n_failed": n_failed,
        "clamped": sum(rec.clamped for rec in ok),
        "mean_h_hat": float(np.mean(h)),
        "bias": float(np.mean(h) - H),
        "rmse": float(np.sqrt(np.mean((h - H) ** 2))),
        "coverage": hits / len(ok) if ok else float("nan"),
        "standardized": {
            "mean": float(np.mean(std_err)),
            "variance": float(np.var(std_err, ddof=1)) if len(ok) > 1 else float("nan"),
            "skewness": float(skew(std_err)) if len(ok) > 2 else float("nan"),
            "kurtosis": float(kurtosis(std_err)) if len(ok) > 3 else float("nan"),
            "ks_normal": float(kstest(std_err, "norm").statistic) if ok else float("nan"),
        },
        "studentized_variance": (
            float(np.var(fin_rate * (h - H) / sd, ddof=1)) if len(ok) > 1 else float("nan")
        ),
    }
    return agg


def _run_one(config: ExperimentConfig, ests, r: int) -> dict:
    seed = spawn_seed(config.seed, r)
    failed = {
        est: ReplicationRecord(r, seed, float("nan"), float("nan"), float("nan"), False, "failed")
        for est in ests
    }
    try:
        if "h2" in ests:
            obs = sample_nested(
                config.model, config.hurst, config.n, config.k_n, config.T, seed,
                enforce_growth=False,  # validated once in the config
            )
            coarse = SamplePath(config.T, obs.coarse_values()) if "h1" in ests else None
        else:
            obs = None
            coarse = sample_path(config.model, config.hurst, config.n, config.T, seed)
    except HurstSDEError:
        return failed

    out = {}
    for est in ests:
        try:
            if est == "h1":
                res = estimate_h1(coarse, config.model.diffusion, config.level)
            else:
                res = estimate_h2(obs, config.level)
            out[est] = ReplicationRecord(
                r, seed, res.h_hat, res.ci_low, res.ci_high, res.clamped, "ok"
            )
        except HurstSDEError:
            out[est] = failed[est]
    return out


def _worker_count() -> int:
    env = os.environ.get("HURST_SDE_THREADS")
    if env is None:
        return 1
    return max(1, int(env))


def _write_replications_csv(records, dest) -> None:
    with open(dest, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPLICATIONS_HEADER)
        for rec in records:
            writer.writerow(
                [
                    rec.r,
                    rec.seed,
                    format(rec.h_hat, ".17g"),
                    format(rec.ci_low, ".17g"),
                    format(rec.ci_high, ".17g"),
                    "true" if rec.clamped else "false",
                    rec.status,
                ]
            )


def read_replications_csv(src) -> list[ReplicationRecord]:
    """Read back a replications CSV; inverse of the writer up to float parsing."""
    out = []
    with open(src) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != REPLICATIONS_HEADER:
            raise ValueError(f"unexpected replications header {header!r}")
        for row in reader:
            out.append(
                ReplicationRecord(
                    r=int(row[0]),
                    seed=int(row[1]),
                    h_hat=float(row[2]),
                    ci_low=float(row[3]),
                    ci_high=float(row[4]),
                    clamped=row[5] == "true",
                    status=row[6],
                )
            )
    return out
