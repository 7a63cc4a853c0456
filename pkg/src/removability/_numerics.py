"""Small numerical kernels: Gauss-Legendre panels, vectorised bisection and
log-log regression helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "PowerLawFit",
    "bisect_increasing",
    "fit_loglog",
    "gauss_legendre_panels",
    "local_slopes",
]


@lru_cache(maxsize=None)
def _gl_nodes(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_legendre_panels(f, lo, hi, order=20):
    """Integrate ``f`` over each panel ``[lo[i], hi[i]]``.

    ``f`` must accept an array of shape ``(panels, order)``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x, w = _gl_nodes(order)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[..., None] + half[..., None] * x
    return half * np.sum(f(pts) * w, axis=-1)


def bisect_increasing(fn, target, lo, hi, rtol=1e-13, maxiter=400):
    """Solve ``fn(x) = target`` elementwise for a nondecreasing ``fn``.

    ``lo``/``hi`` must bracket the root (``fn(lo) <= target <= fn(hi)``).
    Iterates until the bracket is narrower than ``rtol * |hi|`` (or an
    absolute floor of ``rtol``) everywhere.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(maxiter):
        width = hi - lo
        if np.all(width <= rtol * np.maximum(np.abs(hi), rtol)):
            break
        mid = lo + 0.5 * width
        below = fn(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return lo + 0.5 * (hi - lo)


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line ``log Q = slope * log r + intercept``."""

    slope: float
    intercept: float
    residual_rms: float

    def predict(self, log_x):
        return self.slope * np.asarray(log_x) + self.intercept

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
        }


def fit_loglog(log_x, log_y):
    """Ordinary least squares on already-logged data."""
    log_x = np.asarray(log_x, dtype=float)
    log_y = np.asarray(log_y, dtype=float)
    if log_x.size < 2:
        raise ValueError("need at least two points for a fit")
    slope, intercept = np.polyfit(log_x, log_y, 1)
    resid = log_y - (slope * log_x + intercept)
    # triple-log nonlinearities give logs near 1e158; an inf residual is the honest answer
    with np.errstate(over="ignore"):
        rms = float(math.sqrt(np.mean(resid**2)))
    return PowerLawFit(float(slope), float(intercept), rms)


def local_slopes(log_x, log_y, window=3):
    """Slopes of least-squares fits over sliding windows of ``window`` points."""
    log_x = np.asarray(log_x, dtype=float)
    log_y = np.asarray(log_y, dtype=float)
    if log_x.size < window:
        return np.array([fit_loglog(log_x, log_y).slope])
    return np.array(
        [
            fit_loglog(log_x[i : i + window], log_y[i : i + window]).slope
            for i in range(log_x.size - window + 1)
        ]
    )
