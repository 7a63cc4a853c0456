"""Sufficient conditions for removability of a singular set.

Each ``check_*`` function evaluates the conditions of one theorem for a
:class:`ProblemSpec` and returns a :class:`CriterionVerdict`.  Theorems
``T2.1``-``T2.4`` are evaluated numerically: limits as ``r -> 0`` are
certified from log-log fits over ``r = 2^-i``.  The power-law corollaries
``C2.1``/``C2.2`` reduce to exact exponent arithmetic on the critical quantity

    D = lam (n - k - m) - (n - k) - sigma.

The conditions are sufficient only: a failed condition yields
``NotConcluded``, never a claim that the set is not removable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._numerics import fit_loglog, local_slopes
from .dimension import fractal_dimension, k_dimension_limsup, sausage_dimension
from .errors import (
    ParameterError,
    PreconditionError,
    RangeError,
    RemovabilityError,
)
from .geometry import (
    DEFAULT_SEED,
    CantorDust,
    ClosedBall,
    KDisk,
    Point,
    Weight,
    ess_inf_f,
    gamma_weight_integral,
)
from .nonlinearity import ko_integral, log_big_G_inverse, mu, power_law

__all__ = [
    "CLOSED_FORM",
    "NUMERIC",
    "THEOREMS",
    "Condition",
    "CriterionVerdict",
    "ProblemSpec",
    "check",
    "check_C2_1",
    "check_C2_2",
    "check_T2_1",
    "check_T2_2",
    "check_T2_3",
    "check_T2_4",
    "critical_quantity",
    "cross_validate",
    "default_grid",
    "off_critical_distance",
]

THEOREMS = ("T2.1", "T2.2", "T2.3", "T2.4", "C2.1", "C2.2")
SATISFIED, VIOLATED, INCONCLUSIVE = "Satisfied", "Violated", "Inconclusive"
REMOVABLE, NOT_CONCLUDED = "Removable", "NotConcluded"
CLOSED_FORM, NUMERIC = "ClosedForm", "Numeric"

SLOPE_TOL = 0.05
RESIDUAL_GATE = 0.1
MIN_SCALES = 4
# dyadic or triadic scale window for Monte Carlo geometry checks
GEOMETRY_SCALES = (2, 8)


@dataclass(frozen=True)
class ProblemSpec:
    """Inputs of a removability check.

    ``k`` is an optional user-supplied dimension; built-in sets carry their
    exact dimension, which takes precedence except for ``T2.4`` where the
    user value is the hypothesis being tested.
    """

    g: object
    m: int
    w: Weight
    theorem: str
    C_samples: tuple = (0.1, 1.0, 10.0)
    delta_search: tuple = (0.5, 0.1, 0.01)
    k: float | None = None
    i_min: int = 3
    i_max: int = 10
    samples: int = 20_000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ParameterError(f"theorem must be one of {THEOREMS}, got {self.theorem!r}")
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"m must be an integer >= 1, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if not self.C_samples or any(not c > 0 for c in self.C_samples):
            raise ParameterError("C_samples must be positive")
        if not self.delta_search or any(not d > 0 for d in self.delta_search):
            raise ParameterError("delta_search must be positive")
        object.__setattr__(self, "C_samples", tuple(float(c) for c in self.C_samples))
        object.__setattr__(self, "delta_search", tuple(float(d) for d in self.delta_search))
        if self.i_max - self.i_min + 1 < MIN_SCALES:
            raise ParameterError(f"need at least {MIN_SCALES} scales")
        n = self.w.set.ambient_n
        if self.k is not None and not 0 <= self.k <= n:
            raise ParameterError(f"k must lie in [0, {n}], got {self.k}")
        if self.theorem.startswith("C") and self.g.family != "power":
            raise PreconditionError("the power-law corollaries need a power-law g")

    @property
    def S(self):
        return self.w.set

    @property
    def n(self):
        return self.w.set.ambient_n

    @property
    def sigma(self):
        return self.w.sigma

    def to_dict(self):
        return {
            "g": self.g.to_dict(),
            "m": self.m,
            "sigma": self.sigma,
            "set": self.S.to_dict(),
            "theorem": self.theorem,
            "C_samples": list(self.C_samples),
            "delta_search": list(self.delta_search),
            "k": self.k,
            "i_min": self.i_min,
            "i_max": self.i_max,
            "samples": self.samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Condition:
    label: str
    status: str
    slope: float | None = None
    residual: float | None = None
    witness_delta: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "label": self.label,
            "status": self.status,
            "slope": _jsonable(self.slope),
            "residual": _jsonable(self.residual),
            "diagnostics": _jsonable(self.diagnostics),
        }
        if self.witness_delta is not None:
            out["witness_delta"] = self.witness_delta
        return out


@dataclass(frozen=True)
class CriterionVerdict:
    """Conditions of one theorem; ``overall`` is derived, never set."""

    spec: ProblemSpec
    path: str
    conditions: tuple
    k: float
    k_source: str
    notes: dict = field(default_factory=dict)

    @property
    def overall(self):
        ok = bool(self.conditions) and all(c.status == SATISFIED for c in self.conditions)
        return REMOVABLE if ok else NOT_CONCLUDED

    @property
    def removable(self):
        return self.overall == REMOVABLE

    def condition(self, label):
        for c in self.conditions:
            if c.label == label:
                return c
        raise KeyError(label)

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "path": self.path,
            "k": _jsonable(self.k),
            "k_source": self.k_source,
            "conditions": [c.to_dict() for c in self.conditions],
            "notes": _jsonable(self.notes),
            "overall": self.overall,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# -- exponent algebra -----------------------------------------------------


def critical_quantity(lam, n, k, m, sigma):
    """``D = lam (n - k - m) - (n - k) - sigma``."""
    return lam * (n - k - m) - (n - k) - sigma


def off_critical_distance(lam, n, k, m, sigma):
    """Distance of a power-law spec from the critical hypersurface ``D = 0``.

    Uses ``min(|D|, |D| / (lam - 1))``: ``D`` sets the liminf exponent and
    ``D / (lam - 1)`` the limsup exponent, and both must clear the slope
    tolerance.
    """
    d = abs(critical_quantity(lam, n, k, m, sigma))
    return min(d, d / (lam - 1.0))


# -- k resolution ---------------------------------------------------------


def _resolve_k(spec):
    S = spec.S
    if spec.theorem == "T2.4" and spec.k is not None:
        return float(spec.k), "user"
    if S.known_k is not None:
        return float(S.known_k), "known"
    if spec.k is not None:
        return float(spec.k), "user"
    if spec.theorem.startswith("C"):
        raise PreconditionError("the closed-form path needs a known or supplied k")
    lo, hi = _clip_window(S, *GEOMETRY_SCALES)
    if spec.theorem == "T2.3":
        return sausage_dimension(S, lo, hi, spec.samples, spec.seed), "estimated"
    return fractal_dimension(S, lo, hi).upper, "estimated"


def _clip_window(S, i_min, i_max):
    """Clip ``[i_min, i_max]`` so the finest scale stays above ``10 x tol``."""
    base = 3.0 if S.fractal else 2.0
    floor = S.min_scale()
    if floor > 0:
        i_max = min(i_max, int(math.floor(math.log(1.0 / floor, base) + 1e-9)))
    if i_max - i_min + 1 < MIN_SCALES:
        raise PreconditionError(f"{S} is too coarse for a {MIN_SCALES}-scale sweep")
    return i_min, i_max


def _radii(spec):
    """Dyadic radii ``2^-i`` over the spec window, clipped by the set tolerance."""
    floor = spec.S.min_scale()
    i_max = spec.i_max
    if floor > 0:
        i_max = min(i_max, int(math.floor(math.log2(1.0 / floor))))
    if i_max - spec.i_min + 1 < MIN_SCALES:
        raise PreconditionError(f"{spec.S} is too coarse for a {MIN_SCALES}-scale sweep")
    return 2.0 ** -np.arange(spec.i_min, i_max + 1, dtype=float)


# -- limit certification --------------------------------------------------


def _classify_trend(log_r, log_q, kind):
    """Classify the behaviour of ``Q(r)`` as ``r -> 0`` from its log-log data.

    ``kind`` is ``"to_zero"`` (``Q -> 0``), ``"bounded"`` (``limsup < inf``)
    or ``"positive"`` (``liminf > 0``).  Returns ``(status, fit, slopes)``.
    """
    fit = fit_loglog(log_r, log_q)
    slopes = local_slopes(log_r, log_q, 3)
    lo_s, hi_s = float(np.min(slopes)), float(np.max(slopes))
    if kind == "to_zero":
        if lo_s >= SLOPE_TOL or (fit.slope >= SLOPE_TOL and fit.residual_rms < RESIDUAL_GATE):
            status = SATISFIED
        elif hi_s <= -SLOPE_TOL:
            status = VIOLATED
        else:
            status = INCONCLUSIVE
    elif kind == "bounded":
        if fit.slope >= -SLOPE_TOL and lo_s >= -SLOPE_TOL:
            status = SATISFIED
        elif fit.slope < -SLOPE_TOL:
            status = VIOLATED
        else:
            status = INCONCLUSIVE
    elif kind == "positive":
        if fit.slope <= SLOPE_TOL and hi_s <= SLOPE_TOL:
            status = SATISFIED
        elif fit.slope > SLOPE_TOL:
            status = VIOLATED
        else:
            status = INCONCLUSIVE
    else:
        raise ParameterError(f"unknown trend kind {kind!r}")
    return status, fit, slopes


def _log_ginv_term(spec, radii, C):
    """``log G^{-1}(C r ess_inf f^{1/m})`` at each radius, or ``None`` when the
    argument vanishes (``sigma > 0``)."""
    einf = np.array([ess_inf_f(spec.w, r) for r in radii])
    if np.any(einf <= 0):
        return None
    y = C * radii * einf ** (1.0 / spec.m)
    return np.asarray(log_big_G_inverse(spec.g, spec.m, y))


def _zero_weight_condition(label, spec):
    return Condition(
        label,
        INCONCLUSIVE,
        diagnostics={
            "reason": "ess inf of f over S_r minus S is 0 for sigma > 0; "
            "G^{-1} is evaluated at 0 and certification is not attempted",
            "sigma": spec.sigma,
        },
    )


def _ko_condition(spec):
    report = ko_integral(spec.g, spec.m)
    status = SATISFIED if report.finite else VIOLATED
    return Condition("keller_osserman", status, diagnostics=report.to_dict())


def _weight_condition(spec):
    try:
        report = gamma_weight_integral(spec.g, spec.w, spec.samples, spec.seed)
    except RemovabilityError as exc:
        return Condition("weight_integral", INCONCLUSIVE, diagnostics={"error": str(exc)})
    status = SATISFIED if report.finite else VIOLATED
    if report.warning:
        status = INCONCLUSIVE
    return Condition(
        "weight_integral", status, slope=report.tail_exponent, diagnostics=report.to_dict()
    )


def _decay_condition(spec, k, radii):
    """``r^{n-k-m-delta} G^{-1}(C r ess_inf f^{1/m}) -> 0`` for all C, some delta."""
    label = "decay_limit"
    log_r = np.log(radii)
    base = {}
    for C in spec.C_samples:
        try:
            term = _log_ginv_term(spec, radii, C)
        except RangeError as exc:
            return Condition(label, INCONCLUSIVE, diagnostics={"error": str(exc), "C": C})
        if term is None:
            return _zero_weight_condition(label, spec)
        base[C] = term
    per_delta = {}
    for delta in sorted(spec.delta_search, reverse=True):
        results = {}
        for C, term in base.items():
            log_q = (spec.n - k - spec.m - delta) * log_r + term
            status, fit, _ = _classify_trend(log_r, log_q, "to_zero")
            results[C] = (status, fit)
        per_delta[delta] = results
        if all(s == SATISFIED for s, _ in results.values()):
            worst = min(results.values(), key=lambda sf: sf[1].slope)[1]
            return Condition(
                label,
                SATISFIED,
                slope=worst.slope,
                residual=worst.residual_rms,
                witness_delta=delta,
                diagnostics=_per_c(results),
            )
    smallest = per_delta[min(per_delta)]
    status = VIOLATED if any(s == VIOLATED for s, _ in smallest.values()) else INCONCLUSIVE
    worst = min(smallest.values(), key=lambda sf: sf[1].slope)[1]
    return Condition(
        label, status, slope=worst.slope, residual=worst.residual_rms,
        diagnostics=_per_c(smallest),
    )


def _per_c(results):
    return {
        f"C={C:g}": {"status": s, "slope": f.slope, "residual": f.residual_rms}
        for C, (s, f) in results.items()
    }


def _limsup_condition(spec, k, radii):
    """``limsup r^{n-k-m} G^{-1}(C r ess_inf f^{1/m}) < inf`` for all C."""
    label = "limsup_bounded"
    log_r = np.log(radii)
    results = {}
    for C in spec.C_samples:
        try:
            term = _log_ginv_term(spec, radii, C)
        except RangeError as exc:
            return Condition(label, INCONCLUSIVE, diagnostics={"error": str(exc), "C": C})
        if term is None:
            return _zero_weight_condition(label, spec)
        log_q = (spec.n - k - spec.m) * log_r + term
        status, fit, _ = _classify_trend(log_r, log_q, "bounded")
        results[C] = (status, fit)
    return _fold(label, results, key=min)


def _liminf_condition(spec, k, radii):
    """``liminf r^m mu(C r^{m-n+k}) ess_inf f > 0`` for all C."""
    label = "liminf_positive"
    log_r = np.log(radii)
    einf = np.array([ess_inf_f(spec.w, r) for r in radii])
    if np.any(einf <= 0):
        return Condition(
            label,
            VIOLATED,
            diagnostics={"reason": "ess inf of f vanishes near S for sigma > 0"},
        )
    results = {}
    for C in spec.C_samples:
        xi = C * radii ** (spec.m - spec.n + k)
        log_p = spec.m * log_r + np.log(mu(spec.g, xi, verify=False)) + np.log(einf)
        status, fit, _ = _classify_trend(log_r, log_p, "positive")
        results[C] = (status, fit)
    return _fold(label, results, key=max)


def _fold(label, results, key):
    statuses = [s for s, _ in results.values()]
    if all(s == SATISFIED for s in statuses):
        status = SATISFIED
    elif VIOLATED in statuses:
        status = VIOLATED
    else:
        status = INCONCLUSIVE
    worst = key(results.values(), key=lambda sf: sf[1].slope)[1]
    return Condition(
        label, status, slope=worst.slope, residual=worst.residual_rms,
        diagnostics=_per_c(results),
    )


def _k_dimension_condition(spec, k, label, region):
    S = spec.S
    try:
        lo, hi = _clip_window(S, *GEOMETRY_SCALES)
        res = k_dimension_limsup(S, k, lo, hi, spec.samples, spec.seed, region=region)
    except RemovabilityError as exc:
        return Condition(label, INCONCLUSIVE, diagnostics={"error": str(exc)})
    return Condition(
        label,
        SATISFIED if res.finite else VIOLATED,
        slope=res.slope,
        residual=res.sweep.fit.residual_rms,
        diagnostics={"k": k, "region": region, "sup_ratio": res.sup_ratio},
    )


# -- theorem checks -------------------------------------------------------


def _numeric(spec, expected, body):
    if spec.theorem != expected:
        spec = _with_theorem(spec, expected)
    k, source = _resolve_k(spec)
    try:
        radii = _radii(spec)
    except PreconditionError as exc:
        cond = Condition("scale_window", INCONCLUSIVE, diagnostics={"error": str(exc)})
        return CriterionVerdict(spec, NUMERIC, (cond,), k, source)
    conditions = [_ko_condition(spec), _weight_condition(spec)]
    if conditions[0].status == SATISFIED:
        conditions.extend(body(spec, k, radii))
    else:
        # G is undefined without a finite Keller-Osserman integral
        conditions.append(
            Condition("G_inverse", INCONCLUSIVE, diagnostics={"reason": "G undefined"})
        )
    conditions.sort(key=lambda c: c.label)
    return CriterionVerdict(spec, NUMERIC, tuple(conditions), k, source)


def _with_theorem(spec, theorem):
    fields = {f: getattr(spec, f) for f in spec.__dataclass_fields__}
    fields["theorem"] = theorem
    return ProblemSpec(**fields)


def check_T2_1(spec):
    """Keller-Osserman integral, weight integral and the decay limit with
    ``k`` the upper box dimension of ``dS``."""
    return _numeric(spec, "T2.1", lambda s, k, r: [_decay_condition(s, k, r)])


def check_T2_2(spec):
    """Finite ``k``-dimension of ``dS`` plus the limsup and liminf conditions."""

    def body(s, k, r):
        return [
            _k_dimension_condition(s, k, "finite_k_dimension", "boundary"),
            _limsup_condition(s, k, r),
            _liminf_condition(s, k, r),
        ]

    return _numeric(spec, "T2.2", body)


def check_T2_3(spec):
    """As :func:`check_T2_1` with ``k`` defined through ``mes(S_r \\ S)``.

    The sausage-dimension estimate is recorded next to the ``k`` actually
    used (exact constants win over estimates).
    """
    verdict = _numeric(spec, "T2.3", lambda s, k, r: [_decay_condition(s, k, r)])
    if verdict.k_source != "estimated":
        try:
            lo, hi = _clip_window(spec.S, *GEOMETRY_SCALES)
            note = {"sausage_dimension": sausage_dimension(spec.S, lo, hi, spec.samples, spec.seed)}
        except RemovabilityError as exc:
            note = {"sausage_dimension_error": str(exc)}
        verdict = CriterionVerdict(
            verdict.spec, NUMERIC, verdict.conditions, verdict.k, verdict.k_source, note
        )
    return verdict


def check_T2_4(spec):
    """Finite ``mes(S_r \\ S) / r^{n-k}`` plus the limsup and liminf conditions."""

    def body(s, k, r):
        return [
            _k_dimension_condition(s, k, "sausage_ratio_bounded", "outer"),
            _limsup_condition(s, k, r),
            _liminf_condition(s, k, r),
        ]

    return _numeric(spec, "T2.4", body)


def _closed_form_setup(spec, expected):
    if spec.g.family != "power":
        raise PreconditionError("closed-form path needs a power-law g")
    if spec.theorem != expected:
        spec = _with_theorem(spec, expected)
    k, source = _resolve_k(spec)
    lam, n, m, sigma = spec.g.lam, spec.n, spec.m, spec.sigma
    D = critical_quantity(lam, n, k, m, sigma)
    return spec, k, source, lam, n, m, sigma, D


def _integrability_condition(lam, n, k, sigma):
    """``int dist^{-sigma/(lam-1)} < inf`` near ``S``."""
    exponent = sigma / (lam - 1.0)
    ok = sigma <= 0 or exponent < n - k
    return Condition(
        "weight_integral",
        SATISFIED if ok else VIOLATED,
        slope=(n - k) - exponent,
        diagnostics={"sigma/(lam-1)": exponent, "n-k": n - k},
    )


def _exponent_condition(label, D, sigma, strict):
    diag = {"D": D, "inequality": "> 0" if strict else ">= 0"}
    if sigma > 0:
        diag["reason"] = "ess sup of f^{-1/(lam-1)} is infinite for sigma > 0"
        return Condition(label, VIOLATED, slope=D, diagnostics=diag)
    ok = D > 0 if strict else D >= 0
    return Condition(label, SATISFIED if ok else VIOLATED, slope=D, diagnostics=diag)


def check_C2_1(spec):
    """Power-law corollary with the strict inequality ``D > 0``."""
    spec, k, source, lam, n, m, sigma, D = _closed_form_setup(spec, "C2.1")
    conditions = (
        _exponent_condition("decay_limit", D, sigma, strict=True),
        _integrability_condition(lam, n, k, sigma),
    )
    return CriterionVerdict(spec, CLOSED_FORM, tuple(sorted(conditions, key=lambda c: c.label)), k, source)


def check_C2_2(spec):
    """Power-law corollary with ``D >= 0`` and finite ``k``-dimension."""
    spec, k, source, lam, n, m, sigma, D = _closed_form_setup(spec, "C2.2")
    finite = spec.S.finite_k_dimension and source == "known"
    conditions = (
        _integrability_condition(lam, n, k, sigma),
        Condition(
            "finite_k_dimension",
            SATISFIED if finite else INCONCLUSIVE,
            diagnostics={"k": k, "k_source": source},
        ),
        _exponent_condition("limsup_bounded", D, sigma, strict=False),
        _exponent_condition("liminf_positive", D, sigma, strict=False),
    )
    return CriterionVerdict(spec, CLOSED_FORM, tuple(sorted(conditions, key=lambda c: c.label)), k, source)


CHECKS = {
    "T2.1": check_T2_1,
    "T2.2": check_T2_2,
    "T2.3": check_T2_3,
    "T2.4": check_T2_4,
    "C2.1": check_C2_1,
    "C2.2": check_C2_2,
}


def check(spec):
    """Dispatch on ``spec.theorem``."""
    return CHECKS[spec.theorem](spec)


# -- cross validation -----------------------------------------------------

_NUMERIC_TWIN = {"C2.1": "T2.1", "C2.2": "T2.2"}


def default_grid(min_distance=0.1, cantor_depth=7):
    """Off-critical power-law specs over the built-in sets in ``n = 2, 3``."""
    sets = []
    for n in (2, 3):
        sets += [Point(n), KDisk(1, n), ClosedBall(1.0, n), CantorDust(cantor_depth, n)]
    grid = []
    for theorem in ("C2.1", "C2.2"):
        for S in sets:
            for lam in (1.5, 2.0, 3.0, 4.0):
                for m in (1, 2):
                    for sigma in (-3.0, -2.0, -1.0, 0.0):
                        if off_critical_distance(lam, S.ambient_n, S.known_k, m, sigma) < min_distance:
                            continue
                        grid.append(ProblemSpec(power_law(lam), m, Weight(sigma, S), theorem))
    return grid


def cross_validate(spec_grid):
    """Compare closed-form and numeric verdicts on power-law specs.

    Each spec names a corollary; its numeric twin is the theorem it follows
    from.  Returns a report with the agreement rate and every disagreement.
    """
    rows = []
    disagreements = []
    for spec in spec_grid:
        if spec.theorem not in _NUMERIC_TWIN:
            raise ParameterError("cross validation takes C2.1/C2.2 specs")
        closed = check(spec)
        numeric = check(_with_theorem(spec, _NUMERIC_TWIN[spec.theorem]))
        agree = closed.overall == numeric.overall
        row = {
            "spec": spec.to_dict(),
            "closed_form": closed.overall,
            "numeric": numeric.overall,
            "agree": agree,
        }
        rows.append(row)
        if not agree:
            disagreements.append(
                dict(row, closed_conditions=[c.to_dict() for c in closed.conditions],
                     numeric_conditions=[c.to_dict() for c in numeric.conditions])
            )
    total = len(rows)
    agreed = sum(r["agree"] for r in rows)
    return {
        "points": total,
        "agreed": agreed,
        "agreement": agreed / total if total else math.nan,
        "disagreements": disagreements,
        "rows": rows,
    }
