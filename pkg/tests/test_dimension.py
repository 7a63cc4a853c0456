import csv
import io
import math

import numpy as np
import pytest

from removability.dimension import (
    CSV_COLUMNS,
    ScaleSweep,
    box_count,
    fractal_dimension,
    k_dimension_limsup,
    sausage_dimension,
    sausage_sweep,
    sweep_scales,
)
from removability.errors import ParameterError, ScaleError
from removability.geometry import LOG3_2, LOG3_4, CantorDust, ClosedBall, KDisk, KochSnowflake, Point


# -- sweeps ---------------------------------------------------------------


def test_sweep_recovers_exact_power_law():
    r = 2.0 ** -np.arange(2, 9)
    sweep = ScaleSweep.from_values(r, 5.0 * r**1.7)
    assert sweep.fit.slope == pytest.approx(1.7, abs=1e-12)
    np.testing.assert_allclose(sweep.local_slopes(), 1.7, atol=1e-12)


def test_sweep_rejects_bad_input():
    with pytest.raises(ParameterError):
        ScaleSweep.from_values([0.1, 0.2, 0.05], [1, 2, 3])
    with pytest.raises(ParameterError):
        ScaleSweep.from_values([0.4, 0.2, 0.1], [1, 0, 3])


def test_sweep_csv_layout():
    r = 2.0 ** -np.arange(2, 7)
    text = ScaleSweep.from_values(r, r**2).to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + r.size
    # centred window of three: no slope on the first and last rows
    assert rows[1][4] == "" and rows[-1][4] == ""
    assert float(rows[2][4]) == pytest.approx(2.0)
    assert float(rows[3][2]) == pytest.approx(math.log(r[2]))


def test_sweep_scales_bases_and_floor():
    np.testing.assert_allclose(sweep_scales(Point(2), 1, 4), 2.0 ** -np.arange(1, 5))
    np.testing.assert_allclose(sweep_scales(CantorDust(7, 2), 1, 4), 3.0 ** -np.arange(1, 5))
    with pytest.raises(ParameterError):
        sweep_scales(Point(2), 1, 3)
    with pytest.raises(ScaleError):
        sweep_scales(KochSnowflake(3), 2, 6)


# -- box counting ---------------------------------------------------------


def test_box_count_of_point_is_bounded():
    counts = [box_count(Point(2), r) for r in (0.5, 0.1, 0.01)]
    assert max(counts) <= 4


def test_box_count_of_segment_scales_like_inverse_r():
    a, b = box_count(KDisk(1, 2), 2.0**-6), box_count(KDisk(1, 2), 2.0**-8)
    assert b / a == pytest.approx(4.0, rel=0.05)


def test_box_count_refuses_sub_tolerance_scales():
    with pytest.raises(ScaleError):
        box_count(KochSnowflake(3), 1e-3)


@pytest.mark.parametrize(
    "S, i_min, i_max, exact",
    [
        (KochSnowflake(7), 2, 6, LOG3_4),
        (CantorDust(7, 2), 2, 6, 2 * LOG3_2),
        (ClosedBall(1.0, 2), 2, 6, 1.0),
        (KDisk(1, 2), 4, 9, 1.0),
    ],
    ids=["koch", "cantor2", "circle", "segment"],
)
def test_fractal_dimension_oracles(S, i_min, i_max, exact):
    est = fractal_dimension(S, i_min, i_max)
    assert est.dimension == pytest.approx(exact, abs=0.05)
    assert est.lower <= est.upper
    assert len(est.sweep.scales) == i_max - i_min + 1


@pytest.mark.slow
def test_fractal_dimension_sphere_and_3d_dust():
    assert fractal_dimension(ClosedBall(1.0, 3), 2, 6).dimension == pytest.approx(2.0, abs=0.05)
    assert fractal_dimension(CantorDust(7, 3), 2, 6).dimension == pytest.approx(3 * LOG3_2, abs=0.05)


# -- sausage based --------------------------------------------------------


def test_sausage_dimension_of_point_and_circle():
    assert sausage_dimension(Point(2), 2, 7) == pytest.approx(0.0, abs=0.05)
    assert sausage_dimension(ClosedBall(1.0, 2), 2, 7) == pytest.approx(1.0, abs=0.05)


def test_sausage_dimension_koch():
    assert sausage_dimension(KochSnowflake(7), 2, 6) == pytest.approx(LOG3_4, abs=0.05)


def test_sausage_sweep_deterministic():
    a = sausage_sweep(CantorDust(6, 2), 1, 5, seed=4)
    b = sausage_sweep(CantorDust(6, 2), 1, 5, seed=4)
    assert a == b


@pytest.mark.parametrize(
    "S, k", [(KochSnowflake(7), LOG3_4), (ClosedBall(1.0, 2), 1.0), (CantorDust(7, 2), 2 * LOG3_2)], ids=str
)
def test_k_dimension_finite_at_true_k_only(S, k):
    i_min, i_max = (2, 6) if S.fractal else (3, 8)
    at_k = k_dimension_limsup(S, k, i_min, i_max)
    assert at_k.finite
    assert math.isfinite(at_k.sup_ratio)
    below = k_dimension_limsup(S, k - 0.3, i_min, i_max)
    assert not below.finite
    assert below.slope < -0.2


def test_k_dimension_argument_check():
    with pytest.raises(ParameterError):
        k_dimension_limsup(Point(2), 3.0, 2, 6)
