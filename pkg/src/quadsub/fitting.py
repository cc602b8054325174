"""Log-log power-law fits."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress


@dataclass
class SlopeFitReport:
    t_grid: np.ndarray
    values: np.ndarray
    slope: float
    r_squared: float
    intercept: float = 0.0

    def to_json(self):
        return {"slope": float(self.slope), "r_squared": float(self.r_squared),
                "intercept": float(self.intercept)}


def log_grid(tmin, tmax, points):
    if not 0 < tmin < tmax:
        raise ValueError(f"need 0 < tmin < tmax, got {tmin}, {tmax}")
    if points < 2:
        raise ValueError("need at least two grid points")
    return np.geomspace(tmin, tmax, points)


def fit_power_law(t_grid, values):
    """Least-squares slope of log(values) against log(t_grid)."""
    t = np.asarray(t_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.size < 2:
        raise ValueError("t_grid and values must be equal-length arrays with >= 2 points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if np.any(v <= 0):
        raise ValueError("power-law fit needs strictly positive values")
    res = linregress(np.log(t), np.log(v))
    return SlopeFitReport(t, v, float(res.slope), float(res.rvalue ** 2), float(res.intercept))


def steepest_window_fit(t_grid, values, ratio=1.2):
    """Fit over the sub-window of width ``ratio`` (in t) with the most negative slope.

    Blow-up curves measured on a truncated basis saturate at small t and
    flatten at large t; the steepest short window isolates the intermediate
    power-law regime between the two.
    """
    t = np.asarray(t_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if ratio <= 1.0:
        raise ValueError("ratio must exceed 1")
    best = None
    for i in range(t.size):
        j = int(np.searchsorted(t, t[i] * ratio * (1 + 1e-12), side="right"))
        if j - i < 3:
            continue
        rep = fit_power_law(t[i:j], v[i:j])
        if best is None or rep.slope < best.slope:
            best = rep
    if best is None:
        raise ValueError("grid too coarse: no window of the requested ratio holds 3 points")
    return best
