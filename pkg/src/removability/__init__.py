"""Removable singular sets for higher order nonlinear differential inequalities.

Numerical checks of sufficient removability conditions for inequalities of
the form ``sum_{|a|=m} d^a a_a(x, u) >= f(x) g(|u|)`` off a compact set ``S``:
the nonlinearity and its conjugate calculus, fractal dimensions of ``dS``,
the theorem and corollary criteria, and the covering lemma behind them.
"""

from .criteria import CriterionVerdict, ProblemSpec, check, cross_validate
from .dimension import box_count, fractal_dimension, k_dimension_limsup, sausage_dimension
from .errors import RemovabilityError
from .geometry import (
    CantorDust,
    ClosedBall,
    KDisk,
    KochSnowflake,
    Point,
    Weight,
    sausage_measure,
)
from .nonlinearity import (
    big_G,
    big_G_inverse,
    gamma,
    iterated_log,
    ko_integral,
    legendre_conjugate,
    log_power,
    mu,
    power_law,
)

__all__ = [
    "CantorDust",
    "ClosedBall",
    "CriterionVerdict",
    "KDisk",
    "KochSnowflake",
    "Point",
    "ProblemSpec",
    "RemovabilityError",
    "Weight",
    "big_G",
    "big_G_inverse",
    "box_count",
    "check",
    "cross_validate",
    "fractal_dimension",
    "gamma",
    "iterated_log",
    "k_dimension_limsup",
    "ko_integral",
    "legendre_conjugate",
    "log_power",
    "mu",
    "power_law",
    "sausage_dimension",
    "sausage_measure",
]
__version__ = "0.1.0"
