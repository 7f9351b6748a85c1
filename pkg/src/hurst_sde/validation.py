"""Input validation helpers shared by the public API."""

from __future__ import annotations

import math

import numpy as np

# H ranges: paths can be generated for any H in (0, 1); the estimation
# theory (long-memory CLT) additionally needs 1/2 < H < 1.
GENERATION_RANGE = (0.0, 1.0)
ESTIMATION_RANGE = (0.5, 1.0)


def check_hurst(value, *, estimation: bool = False) -> float:
    """Validate a Hurst index and return it as a float."""
    h = float(value)
    if not math.isfinite(h) or not 0.0 < h < 1.0:
        raise ValueError(f"Hurst index must lie in (0, 1), got {value!r}")
    if estimation and not h > 0.5:
        raise ValueError(
            f"this operation requires a Hurst index in (1/2, 1), got {value!r}"
        )
    return h


def check_positive(value, name: str = "value") -> float:
    x = float(value)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return x


def check_positive_int(value, name: str = "value", minimum: int = 1) -> int:
    k = int(value)
    if k != value or k < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return k


def check_level(value) -> float:
    """Confidence level; 0 is allowed and yields a zero-width interval."""
    lv = float(value)
    if not 0.0 <= lv < 1.0:
        raise ValueError(f"confidence level must lie in [0, 1), got {value!r}")
    return lv


def check_seed(value) -> int:
    s = int(value)
    if s != value or s < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {value!r}")
    return s


def check_path_values(values) -> np.ndarray:
    """Coerce to a 1-D float64 array of at least two finite entries."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("expected a 1-D sequence with at least two grid points")
    if not np.all(np.isfinite(v)):
        raise ValueError("path values must all be finite")
    return v
