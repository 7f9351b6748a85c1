"""Flat-file formats: path CSV, nested-observation CSV with JSON sidecar, reports.

Floats are written with 17 significant digits (lossless float64 round trip)
and LF line endings.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .estimators import EstimationResult
from .fbm import SamplePath
from .models import NestedObservations

__all__ = [
    "write_path_csv",
    "read_path_csv",
    "write_nested",
    "read_nested",
    "write_estimation_report",
]

PATH_HEADER = "t,value"
NESTED_HEADER = "i,t,value"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_path_csv(path: SamplePath, dest) -> None:
    """Write a path as `t,value` rows, one per grid point."""
    t = path.times()
    with open(dest, "w", newline="\n") as fh:
        fh.write(PATH_HEADER + "\n")
        for ti, vi in zip(t, path.values):
            fh.write(f"{_fmt(ti)},{_fmt(vi)}\n")


def read_path_csv(src) -> SamplePath:
    data, header = _read_csv(src, 2)
    if header != PATH_HEADER:
        raise ValueError(f"expected header {PATH_HEADER!r}, got {header!r}")
    t, values = data[:, 0], data[:, 1]
    T = float(t[-1])
    _check_uniform_grid(t, T)
    return SamplePath(T, values)


def write_nested(
    obs: NestedObservations,
    csv_dest,
    sidecar_dest=None,
    *,
    seed: int | None = None,
    model: dict | None = None,
) -> None:
    """Write nested observations as `i,t,value` rows plus a JSON sidecar.

    The sidecar carries the grid layout ({"n", "k_n", "T"}) together with the
    generating seed and model description, so estimators can run on stored
    data; it defaults to the CSV path with a .json suffix.
    """
    if sidecar_dest is None:
        sidecar_dest = Path(csv_dest).with_suffix(".json")
    t = np.linspace(0.0, obs.T, obs.m_n + 1)
    with open(csv_dest, "w", newline="\n") as fh:
        fh.write(NESTED_HEADER + "\n")
        for i, (ti, vi) in enumerate(zip(t, obs.values)):
            fh.write(f"{i},{_fmt(ti)},{_fmt(vi)}\n")
    sidecar = {"n": obs.n, "k_n": obs.k_n, "T": obs.T, "seed": seed, "model": model}
    with open(sidecar_dest, "w", newline="\n") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_nested(csv_src, sidecar_src=None) -> tuple[NestedObservations, dict]:
    """Read nested observations; returns (observations, sidecar metadata)."""
    if sidecar_src is None:
        sidecar_src = Path(csv_src).with_suffix(".json")
    with open(sidecar_src) as fh:
        meta = json.load(fh)
    data, header = _read_csv(csv_src, 3)
    if header != NESTED_HEADER:
        raise ValueError(f"expected header {NESTED_HEADER!r}, got {header!r}")
    obs = NestedObservations(
        n=int(meta["n"]), k_n=int(meta["k_n"]), T=float(meta["T"]), values=data[:, 2]
    )
    return obs, meta


def write_estimation_report(result: EstimationResult, dest) -> None:
    with open(dest, "w", newline="\n") as fh:
        json.dump(result.to_dict(), fh, indent=2)
        fh.write("\n")


def _read_csv(src, ncols: int) -> tuple[np.ndarray, str]:
    with open(src) as fh:
        header = fh.readline().strip()
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ValueError(f"malformed CSV {src}: {exc}") from exc
    if data.shape[1] != ncols:
        raise ValueError(f"expected {ncols} columns in {src}, got {data.shape[1]}")
    return data, header


def _check_uniform_grid(t: np.ndarray, T: float) -> None:
    n = t.size - 1
    expected = np.linspace(0.0, T, n + 1)
    if not np.allclose(t, expected, rtol=0.0, atol=1e-9 * max(T, 1.0)):
        raise ValueError("time column is not a uniform grid over [0, T]")
