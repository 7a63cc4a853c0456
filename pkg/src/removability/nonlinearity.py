"""Convex calculus on the nonlinearity ``g``.

Three analytic families are supported:

* ``power``    -- ``g(t) = t**lam`` with ``lam > 1``;
* ``logpower`` -- ``g(t) = t * log(e + t)**nu`` with ``nu > 0``;
* ``iterlog``  -- ``g(t) = t * prod_{i<=l} F_i(t)**m * F_{l+1}(t)**nu`` where
  ``F_j(t)`` is the ``(j+1)``-fold logarithm of ``t_j + t`` and the anchors are
  ``t_0 = e``, ``t_{j+1} = exp(t_j)``.  Every factor equals 1 at ``t = 0``.

Anchors grow as a tower (``t_3`` already overflows a double), so the nested
logarithms are evaluated through the recursion
``log(t_j + x) = t_{j-1} + log1p(x * exp(-t_{j-1}))`` which never forms
``t_j`` explicitly.

Improper integrals ``int g^{-1/m}(z) z^{1/m-1} dz`` are computed in the
variable ``s = log z``, where the integrand is ``exp(-log(g(e^s) / e^s) / m)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from ._numerics import bisect_increasing, fit_loglog, gauss_legendre_panels
from .errors import DomainError, NumericError, PreconditionError, RangeError

logger = logging.getLogger(__name__)

__all__ = [
    "ConvergenceReport",
    "Nonlinearity",
    "big_G",
    "big_G_inverse",
    "eval_g",
    "fenchel_young_gap",
    "gamma",
    "iterated_log",
    "inverse_derivative",
    "ko_integral",
    "legendre_conjugate",
    "log_big_G",
    "log_big_G_inverse",
    "log_power",
    "mu",
    "power_law",
]

MAX_ITERATED_DEPTH = 3
IDENTITY_THRESHOLD = 1e6
IDENTITY_PREIMAGE = 1e250
KO_BLOCKS = 61
KO_MARGIN = 0.05

_LN2 = math.log(2.0)
_DBL_MAX = np.finfo(float).max


def _build_tower():
    # index i + 1 holds t_i; t_{-1} = 1 so that log t_0 = 1
    tower = [1.0]
    for _ in range(MAX_ITERATED_DEPTH + 3):
        prev = tower[-1]
        tower.append(math.exp(prev) if prev < 709.0 else math.inf)
    return tuple(tower)


_TOWER = _build_tower()


def anchor(i):
    """Anchor constant ``t_i`` (``t_{-1} = 1``, ``t_0 = e``); may be ``inf``."""
    return _TOWER[i + 1]


@dataclass(frozen=True)
class Nonlinearity:
    """Descriptor of ``g`` from one of the built-in families.

    Use :func:`power_law`, :func:`log_power` or :func:`iterated_log` rather
    than calling the constructor directly.
    """

    family: str
    lam: float | None = None
    nu: float | None = None
    depth: int | None = None
    log_exponent: int | None = None
    _factors: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.family == "power":
            if self.lam is None or not self.lam > 1:
                raise DomainError(f"power law needs lam > 1, got {self.lam}")
            factors = ()
        elif self.family == "logpower":
            if self.nu is None or not self.nu > 0:
                raise DomainError(f"log-power needs nu > 0, got {self.nu}")
            factors = ((0, float(self.nu)),)
        elif self.family == "iterlog":
            if self.nu is None or not self.nu > 0:
                raise DomainError(f"iterated log needs nu > 0, got {self.nu}")
            if self.depth is None or not 0 <= self.depth <= MAX_ITERATED_DEPTH:
                raise DomainError(
                    f"iterated log depth must lie in [0, {MAX_ITERATED_DEPTH}]"
                )
            if self.log_exponent is None or self.log_exponent < 1:
                raise DomainError("iterated log exponent m must be >= 1")
            factors = tuple(
                (i, float(self.log_exponent)) for i in range(self.depth + 1)
            ) + ((self.depth + 1, float(self.nu)),)
        else:
            raise DomainError(f"unknown family {self.family!r}")
        object.__setattr__(self, "_factors", factors)

    # -- evaluation ---------------------------------------------------------

    @property
    def derivative_at_zero(self):
        """``g'(0)``: 0 for power laws, 1 for the logarithmic families."""
        return 0.0 if self.family == "power" else 1.0

    def value(self, t):
        t = _nonneg(t)
        if self.family == "power":
            return t**self.lam
        log_f, _, _, _ = self._log_factors(t)
        return t * np.exp(log_f)

    def derivative(self, t):
        t = _nonneg(t)
        if self.family == "power":
            return self.lam * t ** (self.lam - 1.0)
        log_p, a1, _, scale = self._log_factors(t)
        return np.exp(log_p) * (1.0 + (t / scale) * a1)

    def second_derivative(self, t):
        t = _nonneg(t)
        if self.family == "power":
            with np.errstate(divide="ignore"):
                return self.lam * (self.lam - 1.0) * t ** (self.lam - 2.0)
        log_p, a1, a2, scale = self._log_factors(t)
        p = np.exp(log_p)
        # g'' = 2 P' + t P'',  P' = P A,  P'' = P (A^2 + B)
        return p * (2.0 * a1 + (t / scale) * (a1 * a1 + a2)) / scale

    def log_value_at_log(self, s):
        """``log g(e^s)``, finite for every real ``s``."""
        s = np.asarray(s, dtype=float)
        return s + self.log_quotient_at_log(s)

    def log_quotient_at_log(self, s):
        """``log(g(e^s) / e^s)`` without cancellation at huge ``s``."""
        s = np.asarray(s, dtype=float)
        if self.family == "power":
            return (self.lam - 1.0) * s
        total = np.zeros_like(s)
        for j, a in self._factors:
            x = np.logaddexp(0.0, s - anchor(j - 1))
            x = _descend(j, x)
            total = total + a * np.log1p(x)
        return total

    def _log_factors(self, t):
        """Return ``log P``, ``c A``, ``c^2 B`` and ``c = max(t, 1)``.

        ``A = P'/P`` and ``B = sum a (F''/F - (F'/F)^2)``; the scaling keeps
        ``A^2`` clear of underflow at huge ``t``.
        """
        scale = np.maximum(t, 1.0)
        log_p = np.zeros_like(t)
        a1 = np.zeros_like(t)
        a2 = np.zeros_like(t)
        for j, a in self._factors:
            with np.errstate(over="ignore", invalid="ignore"):
                x = np.log1p(t * math.exp(-anchor(j - 1)))
            levels = [anchor(j) + t, anchor(j - 1) + x]
            for q in range(2, j + 2):
                x = np.log1p(x * math.exp(-anchor(j - q)))
                levels.append(anchor(j - q) + x)
            big_f = levels[-1]
            # F' = prod_{q<=j} 1/V_q ; F'' = -F' sum_q D_q / V_q
            d_q = scale.copy()
            curv = np.zeros_like(t)
            for v in levels[:-1]:
                with np.errstate(divide="ignore", invalid="ignore"):
                    curv = curv + np.where(np.isinf(v), 0.0, d_q / v)
                    d_q = np.where(np.isinf(v), 0.0, d_q / v)
            fp = d_q
            fpp = -fp * curv
            ratio = fp / big_f
            log_p = log_p + a * np.log(big_f)
            a1 = a1 + a * ratio
            a2 = a2 + a * (fpp / big_f - ratio * ratio)
        return log_p, a1, a2, scale

    def to_dict(self):
        if self.family == "power":
            return {"family": "power", "lam": self.lam}
        if self.family == "logpower":
            return {"family": "logpower", "nu": self.nu}
        return {
            "family": "iterlog",
            "l": self.depth,
            "nu": self.nu,
            "m": self.log_exponent,
        }

    def __str__(self):
        if self.family == "power":
            return f"t^{self.lam:g}"
        if self.family == "logpower":
            return f"t*log^{self.nu:g}(e+t)"
        return f"iterated-log(l={self.depth}, nu={self.nu:g}, m={self.log_exponent})"


def _descend(j, x):
    """Apply the remaining ``j`` levels of the anchored log recursion."""
    for q in range(2, j + 2):
        x = np.log1p(x * math.exp(-anchor(j - q)))
    return x


def _nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("g is defined on [0, inf) only")
    return t


def power_law(lam):
    return Nonlinearity("power", lam=float(lam))


def log_power(nu):
    return Nonlinearity("logpower", nu=float(nu))


def iterated_log(l, nu, m):
    return Nonlinearity("iterlog", nu=float(nu), depth=int(l), log_exponent=int(m))


def _scalar_or_array(x, like):
    if np.ndim(like) == 0:
        return float(x)
    return x


def eval_g(g, t):
    """Evaluate ``g(t)`` for ``t >= 0``."""
    return _scalar_or_array(g.value(t), t)


# -- Legendre conjugate ---------------------------------------------------


def inverse_derivative(g, xi):
    """``(g')^{-1}(xi)`` by bisection; 0 where ``xi <= g'(0)``."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    mask = xi > g.derivative_at_zero
    if not np.any(mask):
        return _scalar_or_array(out, xi)
    target = xi[mask]
    # slopes beyond g'(DBL_MAX) have no representable preimage
    with np.errstate(over="ignore"):
        reachable = target <= g.derivative(_DBL_MAX)
    hi = np.ones_like(target)
    for _ in range(1100):
        short = reachable & (g.derivative(hi) < target)
        if not np.any(short):
            break
        with np.errstate(over="ignore"):
            hi = np.where(short, np.minimum(hi * 2.0, _DBL_MAX), hi)
    sol = np.full_like(target, math.inf)
    if np.any(reachable):
        sol[reachable] = bisect_increasing(
            g.derivative, target[reachable], 0.0, hi[reachable], rtol=1e-15
        )
    out[mask] = sol
    return _scalar_or_array(out, xi)


def legendre_conjugate(g, xi, method="auto"):
    """Convex conjugate ``g*(xi) = int_{g'(0)}^{xi} (g')^{-1}(z) dz``.

    ``method="auto"`` uses a pair of Gauss-Legendre rules after substituting
    ``z = g'(tau)`` (so the integrand is ``tau * g''(tau)``); where the two
    rules disagree, panels in ``log tau`` are tried next and adaptive
    quadrature of the original integrand last.  ``method="quad"`` forces
    the adaptive route.  Above ``1e6``, or once ``s = (g')^{-1}(xi)``
    exceeds ``1e250``, the duality identity ``xi * s - g(s)`` replaces
    quadrature.  Slopes with no representable preimage give ``inf``.
    """
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0) or np.any(np.isnan(xi_arr)):
        raise DomainError("the conjugate is evaluated for xi >= 0")
    flat = np.atleast_1d(xi_arr).ravel()
    out = np.zeros_like(flat)
    active = flat > g.derivative_at_zero
    if np.any(active):
        x = flat[active]
        s = np.atleast_1d(inverse_derivative(g, x))
        vals = np.full_like(x, math.inf)
        finite = np.isfinite(s)
        huge = finite & ((x > IDENTITY_THRESHOLD) | (s > IDENTITY_PREIMAGE))
        # xi s - g(s) = s (xi - g(s)/s), kept in this form against overflow
        sh = s[huge]
        quotient = np.exp(g.log_quotient_at_log(np.log(sh)))
        with np.errstate(over="ignore"):
            vals[huge] = sh * (x[huge] - quotient)
        rest = finite & ~huge
        if np.any(rest):
            if method == "quad":
                vals[rest] = [_conjugate_quad(g, v) for v in x[rest]]
            else:
                vals[rest] = _conjugate_gl(g, x[rest], s[rest])
        out[active] = np.maximum(vals, 0.0)
    out = out.reshape(np.shape(xi_arr))
    return _scalar_or_array(out, xi)


def _conjugate_gl(g, xi, s):
    def rule(order):
        # tau = s u^4 on u in [0, 1]
        def integrand(u):
            tau = s[:, None] * u**4
            # overflow becomes inf and is routed to the log panels below
            with np.errstate(over="ignore", invalid="ignore"):
                return tau * g.second_derivative(tau) * 4.0 * s[:, None] * u**3

        zeros = np.zeros_like(s)
        ones = np.ones_like(s)
        return gauss_legendre_panels(integrand, zeros, ones, order=order)

    coarse = rule(48)
    fine = rule(96)
    with np.errstate(invalid="ignore"):
        bad = np.abs(fine - coarse) > 1e-11 * np.abs(fine) + 1e-300
    bad |= ~np.isfinite(fine)
    if np.any(bad):
        idx = np.flatnonzero(bad)
        fine[idx] = _conjugate_log_panels(g, xi[idx], s[idx])
    return fine


LOG_PANEL_RTOL = 1e-11


def _conjugate_log_panels(g, xi, s, chunk=1024):
    """``int_0^s tau g''(tau) dtau`` in ``v = log tau`` on equal GL panels.

    Resolves the scales of the iterated-log anchors that the polynomial
    substitution misses when ``s`` is huge.
    """

    def integrand(v):
        tau = np.exp(v)
        return tau * (tau * g.second_derivative(tau))

    out = np.empty_like(s)
    for start in range(0, s.size, chunk):
        sl = slice(start, start + chunk)
        hi = np.log(s[sl])
        lo = np.minimum(hi, 0.0) - 20.0
        vals = []
        for panels in (12, 24):
            edges = np.linspace(lo, hi, panels + 1, axis=-1)
            parts = gauss_legendre_panels(integrand, edges[:, :-1], edges[:, 1:], order=20)
            vals.append(parts.sum(axis=-1))
        out[sl] = vals[1]
        bad = ~(np.abs(vals[1] - vals[0]) <= LOG_PANEL_RTOL * np.abs(vals[1]))
        for i in np.flatnonzero(bad):
            logger.debug("conjugate: adaptive quadrature at xi=%g", xi[sl][i])
            out[start + i] = _conjugate_quad(g, float(xi[sl][i]))
    return out


def _conjugate_quad(g, xi):
    lo = g.derivative_at_zero

    def inv(z):
        return float(inverse_derivative(g, z))

    val, err, info = integrate.quad(
        inv, lo, xi, epsabs=0.0, epsrel=1e-12, limit=200, full_output=True
    )[:3]
    if not np.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
        raise NumericError(
            "adaptive quadrature for the conjugate did not converge",
            {"xi": xi, "value": val, "abserr": err, "neval": info.get("neval")},
        )
    return val


def fenchel_young_gap(g, a, b):
    """``g(a) + g*(b) - a*b``; nonnegative up to rounding."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("Fenchel-Young is stated for a, b >= 0")
    gap = g.value(a) + np.asarray(legendre_conjugate(g, b)) - a * b
    return _scalar_or_array(gap, a if np.ndim(a) else b)


def gamma(g, xi):
    """``g*(xi) / xi`` for ``xi > 0``."""
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr <= 0):
        raise DomainError("gamma needs xi > 0")
    return _scalar_or_array(np.asarray(legendre_conjugate(g, xi_arr)) / xi_arr, xi)


def mu(g, xi, verify=True):
    """``inf_{t >= xi} g(t)/t``, equal to ``g(xi)/xi`` for convex ``g``.

    With ``verify`` a log-spaced scan over ``[xi, 1e6 xi]`` confirms that no
    smaller quotient exists.
    """
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr <= 0):
        raise DomainError("mu needs xi > 0")
    val = g.value(xi_arr) / xi_arr
    if verify:
        for x, v in zip(np.atleast_1d(xi_arr), np.atleast_1d(val)):
            grid = np.geomspace(x, 1e6 * x, 10_000)
            scan = np.min(g.value(grid) / grid)
            if scan < v * (1.0 - 1e-12):
                raise NumericError(
                    "g(t)/t is not nondecreasing", {"xi": float(x), "scan_min": scan}
                )
    return _scalar_or_array(val, xi)


# -- improper integrals ---------------------------------------------------


@dataclass(frozen=True)
class ConvergenceReport:
    """Classification of an improper integral from dyadic block analysis."""

    verdict: str
    value: float | None
    truncation_error: float | None
    tail_exponent: float
    blocks_used: int
    geometric: bool = False
    warning: str | None = None
    variable: str = "log"

    @property
    def finite(self):
        return self.verdict == "Finite"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "value": self.value,
            "truncation_error": self.truncation_error,
            "tail_exponent": self.tail_exponent,
            "blocks_used": self.blocks_used,
            "geometric": self.geometric,
            "warning": self.warning,
            "variable": self.variable,
        }


def classify_blocks(blocks, offset=0, margin=KO_MARGIN):
    """Classify ``sum_j blocks[j]`` as Finite or Divergent.

    Constant block ratios below 1 mean geometric decay.  Otherwise a decay
    ``blocks[j] ~ j^{-p}`` is fitted against ``log(j + 1/2)`` and the sum is
    Finite when ``p > 1 + margin``.  Anything in the band around ``p = 1``
    is reported Divergent with a warning.

    Returns ``(verdict, p, geometric, warning, used)``.
    """
    blocks = np.asarray(blocks, dtype=float)
    if np.any(blocks < 0):
        raise NumericError("negative block integral", {"blocks": blocks.tolist()})
    pos = blocks > 1e-300
    if not np.all(pos):
        first_zero = int(np.argmin(pos))
        if np.all(~pos[first_zero:]):
            # decays below the representable range
            return "Finite", math.inf, True, None, first_zero
        pos_idx = np.flatnonzero(pos)
        blocks = blocks[pos_idx]
        js = pos_idx + offset
    else:
        js = np.arange(blocks.size) + offset
    used = int(blocks.size)
    tail = slice(min(8, max(used - 4, 0)), None)
    lb = np.log(blocks[tail])
    jt = js[tail].astype(float)
    if lb.size < 3:
        return "Divergent", math.nan, False, "too few blocks to classify", used
    dl = np.diff(lb)
    if np.ptp(dl) < 1e-6 and np.mean(dl) < -1e-6:
        rate = -float(np.mean(dl))
        return "Finite", rate / _LN2, True, None, used
    fit = fit_loglog(np.log(jt + 0.5), lb)
    p = -fit.slope
    if p > 1.0 + margin:
        return "Finite", p, False, None, used
    if p < 1.0 - margin:
        return "Divergent", p, False, None, used
    return (
        "Divergent",
        p,
        False,
        f"decay exponent {p:.4f} within the inconclusive band around 1",
        used,
    )


def _integrand_at_log(g, m, s):
    with np.errstate(over="ignore"):
        return np.exp(-g.log_quotient_at_log(s) / m)


def _reduced_iterlog_integrand(g, m):
    # asymptotic integrand in w = log^{l+1}(t_{l+1} + z): dw / (w log(w)^{nu/m})
    p = g.nu / m

    def h(w):
        return 1.0 / (w * np.log(w) ** p)

    return h


@lru_cache(maxsize=None)
def ko_integral(g, m):
    """Classify ``int_1^inf g^{-1/m}(z) z^{1/m-1} dz``.

    Block ``j`` is the integral over ``[2^j, 2^{j+1}]``, ``j = 0..60``.  For
    the iterated-log family with log exponent equal to ``m`` the dyadic
    blocks are taken in the variable ``w = log^{l+1}(t_{l+1} + z)``, where
    the integrand reduces to ``1 / (w log(w)^{nu/m})``; the convergence
    question is decided there.  Any other log exponent ``a`` is settled in
    ``s = log z`` by the leading factor ``s^{-a/m}``.
    """
    if m < 1 or int(m) != m:
        raise DomainError("m must be a positive integer")
    js = np.arange(KO_BLOCKS)
    if g.family == "iterlog" and g.log_exponent == m:
        h = _reduced_iterlog_integrand(g, m)
        lo = np.maximum(2.0 ** (js + 2), math.e)
        blocks = gauss_legendre_panels(h, lo, 2.0 ** (js + 3), order=30)
        verdict, p, geometric, warning, used = classify_blocks(blocks, offset=2)
        variable = "tower"
    elif g.family == "iterlog":
        # nested log corrections outlast any finite block window, so the
        # integer comparison of exponents decides
        blocks = gauss_legendre_panels(
            lambda s: _integrand_at_log(g, m, s), js * _LN2, (js + 1) * _LN2, order=30
        )
        verdict = "Finite" if g.log_exponent > m else "Divergent"
        p, geometric, warning, used = g.log_exponent / m, False, None, int(blocks.size)
        variable = "log"
    else:
        blocks = gauss_legendre_panels(
            lambda s: _integrand_at_log(g, m, s), js * _LN2, (js + 1) * _LN2, order=30
        )
        verdict, p, geometric, warning, used = classify_blocks(blocks)
        variable = "log"
    if warning:
        logger.warning("KO integral for %s, m=%d: %s", g, m, warning)
    value = err = None
    if verdict == "Finite":
        table = _g_table(g, m)
        value = float(table.G(0.0))
        err = table.truncation_error
    return ConvergenceReport(
        verdict=verdict,
        value=value,
        truncation_error=err,
        tail_exponent=float(p),
        blocks_used=used,
        geometric=geometric,
        warning=warning,
        variable=variable,
    )


class _GTable:
    """Panel decomposition of ``G(e^s) = int_s^inf h(u) du``.

    Panels have width ``ln 2`` up to ``s = 64 ln 2`` and double in length
    beyond; anchors of the iterated-log family get extra breakpoints.  The
    integral beyond the last panel is extrapolated from the ratio of the two
    last panel integrals and kept as ``tail`` (also a truncation estimate).
    """

    def __init__(self, g, m):
        self.g = g
        self.m = m
        s_lo = -745.0
        if g.family == "power":
            s_lo = max(s_lo, -690.0 * m / (g.lam - 1.0))
        mid = 64 * _LN2
        n_uniform = int(math.ceil((mid - s_lo) / _LN2))
        edges = list(mid - _LN2 * np.arange(n_uniform, -1, -1))
        edges[0] = s_lo
        hi = mid
        while hi < 1e300:
            hi *= 2.0
            edges.append(hi)
        for j, _ in g._factors:
            a = anchor(j - 1)
            if mid < a < 1e300:
                q = 2.0 ** np.arange(0, int(math.log2(a)) + 1)
                edges.extend(a - q)
                edges.extend(a + q)
                edges.append(a)
        edges = np.unique(np.asarray(edges, dtype=float))
        edges = edges[(edges >= s_lo) & (edges <= hi)]
        self.edges = edges
        self.s_lo = float(edges[0])
        self.s_hi = float(edges[-1])
        self.h = lambda s: _integrand_at_log(g, m, s)
        panels = gauss_legendre_panels(self.h, edges[:-1], edges[1:], order=20)
        if not np.all(np.isfinite(panels)):
            raise NumericError("overflow in block evaluation of G", {"g": str(g)})
        last, prev = panels[-1], panels[-2]
        if last <= 1e-300:
            tail = 0.0
        elif prev > 0 and last < prev:
            rho = last / prev
            tail = float(last * rho / (1.0 - rho))
        else:
            tail = 0.0
        self.tail = tail
        self.truncation_error = tail if tail > 0 or last <= 1e-300 else math.inf
        if any(math.isinf(anchor(j - 1)) for j, _ in g._factors):
            # a factor never leaves 1 within double range: value is a lower bound
            self.truncation_error = math.inf
        self.panels = panels
        # suffix[i] = integral from edges[i] to the end, plus tail
        suffix = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]]) + tail
        self.suffix = suffix

    def G(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s_lo) or np.any(s > self.s_hi):
            raise RangeError("argument outside the tabulated range", self.t_range)
        idx = np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, self.edges.size - 2)
        right = self.edges[idx + 1]
        partial = gauss_legendre_panels(self.h, s, right, order=20)
        return partial + self.suffix[idx + 1]

    @property
    def t_range(self):
        return (math.exp(self.s_lo), math.exp(self.s_hi) if self.s_hi < 709 else math.inf)

    @property
    def y_range(self):
        return (float(self.G(self.s_hi)), float(self.G(self.s_lo)))


@lru_cache(maxsize=None)
def _g_table(g, m):
    return _GTable(g, m)


def _require_finite(g, m):
    report = ko_integral(g, m)
    if not report.finite:
        raise PreconditionError(
            f"Keller-Osserman integral diverges for {g}, m={m}; G is undefined"
        )
    return _g_table(g, m)


def log_big_G(g, m, s):
    """``G(e^s)`` for log-argument ``s`` (avoids forming huge or tiny ``t``)."""
    table = _require_finite(g, m)
    return _scalar_or_array(table.G(s), s)


def big_G(g, m, t):
    """``G(t) = int_t^inf g^{-1/m}(z) z^{1/m-1} dz`` for ``t > 0``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("G is evaluated for t > 0")
    table = _require_finite(g, m)
    return _scalar_or_array(table.G(np.log(t_arr)), t)


def log_big_G_inverse(g, m, y):
    """``log G^{-1}(y)``, found by bisection on the strictly decreasing ``G``.

    Values of ``y`` above the tabulated range (``t`` below ``e^-745``) use the
    small-``t`` form of ``G``: exact for power laws, and
    ``G(t) = G(t_0) + g'(0)^{-1/m} log(t_0/t)`` up to ``O(t_0)`` otherwise.
    """
    table = _require_finite(g, m)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    lo_y, hi_y = table.y_range
    if np.any(y_arr <= lo_y) or np.any(np.isnan(y_arr)):
        raise RangeError(f"y={y} outside the range of G", (lo_y, math.inf))
    s = np.empty_like(y_arr)
    big = y_arr >= hi_y
    if g.family == "power":
        c = (g.lam - 1.0) / m
        s[big] = -np.log(y_arr[big] * c) / c
    else:
        s[big] = table.s_lo - (y_arr[big] - hi_y) * g.derivative_at_zero ** (1.0 / m)
    if np.any(~big):
        s[~big] = bisect_increasing(
            lambda u: -table.G(u), -y_arr[~big], table.s_lo, table.s_hi,
            rtol=1e-15, maxiter=2000,
        )
    return _scalar_or_array(s if np.ndim(y) else s[0], y)


def big_G_inverse(g, m, y):
    """``G^{-1}(y)``; may under/overflow for extreme ``y`` -- prefer the log form."""
    s = np.asarray(log_big_G_inverse(g, m, y))
    with np.errstate(over="ignore"):
        return _scalar_or_array(np.exp(s), y)
