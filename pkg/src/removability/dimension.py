"""Fractal (Minkowski) dimension estimators and finite k-dimension tests."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._numerics import PowerLawFit, fit_loglog, local_slopes
from .errors import ParameterError, PrecisionError, ScaleError
from .geometry import DEFAULT_SEED, covering_cells, sausage_measure

__all__ = [
    "DimensionEstimate",
    "KDimensionResult",
    "PowerLawFit",
    "ScaleSweep",
    "box_count",
    "fractal_dimension",
    "k_dimension_limsup",
    "sausage_dimension",
    "sausage_sweep",
    "sweep_scales",
]

MAX_GRID_CELLS = 10**8
WINDOW = 3
CSV_COLUMNS = ("r", "value", "log_r", "log_value", "local_slope")


@dataclass(frozen=True)
class ScaleSweep:
    """Quantity ``Q(r_i)`` over decreasing scales with its log-log fit.

    ``fit`` regresses ``log Q`` on ``log r``.
    """

    scales: tuple
    values: tuple
    fit: PowerLawFit

    @classmethod
    def from_values(cls, scales, values):
        scales = tuple(float(r) for r in scales)
        values = tuple(float(v) for v in values)
        if any(b >= a for a, b in zip(scales, scales[1:])):
            raise ParameterError("scales must be strictly decreasing")
        if any(not (v > 0 and math.isfinite(v)) for v in values):
            raise ParameterError("sweep values must be finite and positive")
        fit = fit_loglog(np.log(scales), np.log(values))
        return cls(scales, values, fit)

    @property
    def log_scales(self):
        return np.log(self.scales)

    @property
    def log_values(self):
        return np.log(self.values)

    def local_slopes(self, window=WINDOW):
        return local_slopes(self.log_scales, self.log_values, window)

    def to_csv(self):
        """CSV text with columns ``r, value, log_r, log_value, local_slope``.

        ``local_slope`` is the windowed slope centred on the row (empty at the
        ends).
        """
        slopes = self.local_slopes()
        half = WINDOW // 2
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i, (r, v) in enumerate(zip(self.scales, self.values)):
            j = i - half
            slope = repr(float(slopes[j])) if 0 <= j < len(slopes) and len(self.scales) >= WINDOW else ""
            writer.writerow([repr(r), repr(v), repr(math.log(r)), repr(math.log(v)), slope])
        return buf.getvalue()


def sweep_scales(S, i_min, i_max):
    """``3^{-i}`` for fractal sets, ``2^{-i}`` otherwise, for ``i_min..i_max``."""
    if i_max - i_min + 1 < 4:
        raise ParameterError("at least 4 scales are needed for a dimension estimate")
    base = 3.0 if S.fractal else 2.0
    scales = base ** -np.arange(i_min, i_max + 1, dtype=float)
    floor = S.min_scale()
    if scales[-1] < floor:
        raise ScaleError(
            f"scale {scales[-1]:.3g} is below 10 x geometric tolerance ({floor:.3g})"
        )
    return scales


def box_count(S, r):
    """Number of grid cells of diameter ``r`` meeting ``dS``.

    Cells have side ``r / sqrt(n)``; a cell counts when its centre lies
    within half a diagonal of ``dS``.  This over-counts the minimal cover
    ``N_r`` by a scale-independent factor only.  The grid is refined
    hierarchically, so the cell budget applies to cells actually examined.
    """
    if r < S.min_scale():
        raise ScaleError(f"r={r:g} is below 10 x geometric tolerance of {S}")
    n = S.ambient_n
    side = r / math.sqrt(n)
    lo, hi = S.bounding_box
    cells = covering_cells(S.boundary_distance, lo, hi, side, max_cells=MAX_GRID_CELLS)
    return max(cells.count, 1)


class DimensionEstimate(NamedTuple):
    lower: float
    upper: float
    fit: PowerLawFit
    sweep: ScaleSweep

    @property
    def dimension(self):
        """Global regression slope of ``log N`` against ``log 1/r``."""
        return -self.fit.slope


def fractal_dimension(S, i_min, i_max):
    """Box-counting dimension of ``dS`` over ``r = 3^{-i}`` (fractal sets) or
    ``2^{-i}``.

    Lower and upper estimates are the min and max of the slopes fitted over
    windows of three consecutive scales.
    """
    scales = sweep_scales(S, i_min, i_max)
    counts = [box_count(S, r) for r in scales]
    sweep = ScaleSweep.from_values(scales, counts)
    slopes = -sweep.local_slopes()
    return DimensionEstimate(float(np.min(slopes)), float(np.max(slopes)), sweep.fit, sweep)


def sausage_sweep(S, i_min, i_max, samples=20_000, seed=DEFAULT_SEED, region="outer"):
    scales = sweep_scales(S, i_min, i_max)
    estimates = [sausage_measure(S, r, samples, seed, region) for r in scales]
    for e in estimates:
        if not e.value > 0 or e.relative_half_width > 0.2:
            raise PrecisionError(
                f"sausage measure at r={e.r:.3g} has relative CI "
                f"{e.relative_half_width:.2f} > 0.2; increase samples"
            )
    return ScaleSweep.from_values(scales, [e.value for e in estimates])


def sausage_dimension(S, i_min, i_max, samples=20_000, seed=DEFAULT_SEED, region="outer"):
    """``n - liminf log mes(S_r \\ S) / log r`` from a sausage sweep.

    The liminf is taken as the smallest windowed slope, which gives the
    larger (more conservative) dimension.
    """
    sweep = sausage_sweep(S, i_min, i_max, samples, seed, region)
    return float(S.ambient_n - np.min(sweep.local_slopes()))


class KDimensionResult(NamedTuple):
    finite: bool
    sup_ratio: float
    slope: float
    sweep: ScaleSweep


def k_dimension_limsup(
    S, k, i_min, i_max, samples=20_000, seed=DEFAULT_SEED, region="boundary", tol=0.05
):
    """Test ``limsup mes(omega_r) / r^{n-k} < inf``.

    ``region="boundary"`` uses ``omega = dS``; ``"outer"`` uses ``S_r \\ S``.
    The ratio is declared bounded when its log-log trend slope is
    ``>= -tol`` (no growth as ``r -> 0``).
    """
    n = S.ambient_n
    if not 0 <= k <= n:
        raise ParameterError(f"k must lie in [0, n], got {k}")
    sweep = sausage_sweep(S, i_min, i_max, samples, seed, region)
    r = np.asarray(sweep.scales)
    ratios = np.asarray(sweep.values) / r ** (n - k)
    fit = fit_loglog(np.log(r), np.log(ratios))
    return KDimensionResult(bool(fit.slope >= -tol), float(np.max(ratios)), fit.slope, sweep)
