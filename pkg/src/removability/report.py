"""Markdown report reproducing the worked example inequalities.

Every row pairs the exact exponent verdict with the verdict of the numeric
scale-sweep path on the same parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .criteria import ProblemSpec, check, critical_quantity
from .geometry import (
    DEFAULT_SEED,
    LOG3_2,
    LOG3_4,
    CantorDust,
    ClosedBall,
    KDisk,
    KochSnowflake,
    Point,
    Weight,
)
from .nonlinearity import log_power, power_law

__all__ = [
    "brezis_veron_threshold",
    "examples_report",
    "fmt",
    "inequality_cantor",
    "inequality_disk",
    "inequality_ball",
    "inequality_koch",
]

CONST_DIGITS = 12


def fmt(x):
    """Constants at 12 significant digits."""
    return f"{x:.{CONST_DIGITS}g}"


def inequality_koch():
    c = fmt(LOG3_4)
    return f"λ(2 − {c} − m) − 2 + {c} − σ > 0"


def inequality_cantor():
    c = fmt(LOG3_2)
    return f"λ(n − n·{c} − m) − n + n·{c} − σ ≥ 0"


def inequality_cantor_critical():
    return f"n − n·{fmt(LOG3_2)} − m ≥ 0"


def inequality_disk():
    return "λ(n − k − m) − n + k − σ ≥ 0"


def inequality_ball():
    return "λ(1 − m) − 1 − σ ≥ 0"


def brezis_veron_threshold(n):
    """``n / (n - 2)``: the ``k = 0, m = 2, sigma = 0`` case of the disk inequality."""
    return n / (n - 2.0)


@dataclass
class _Ctx:
    seed: int
    samples: int

    def verdict(self, g, m, sigma, S, theorem):
        spec = ProblemSpec(g, m, Weight(sigma, S), theorem, samples=self.samples, seed=self.seed)
        return check(spec).overall


def _word(ok):
    return "Removable" if ok else "NotConcluded"


def _table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return lines


def _power_rows(ctx, S, cases, strict):
    n, k = S.ambient_n, S.known_k
    closed_thm, numeric_thm = ("C2.1", "T2.1") if strict else ("C2.2", "T2.2")
    rows = []
    for lam, m, sigma in cases:
        D = critical_quantity(lam, n, k, m, sigma)
        rows.append([
            f"{lam:g}", m, f"{sigma:g}", fmt(D),
            ctx.verdict(power_law(lam), m, sigma, S, closed_thm),
            ctx.verdict(power_law(lam), m, sigma, S, numeric_thm),
        ])
    return _table(["λ", "m", "σ", "D", f"closed form ({closed_thm})", f"numeric ({numeric_thm})"], rows)


def _logpower_rows(ctx, S, cases, rule, theorem):
    rows = []
    for nu, m, sigma in cases:
        rows.append([
            f"{nu:g}", m, f"{sigma:g}", _word(rule(nu, m, sigma)),
            ctx.verdict(log_power(nu), m, sigma, S, theorem),
        ])
    return _table(["ν", "m", "σ", "closed form", f"numeric ({theorem})"], rows)


def examples_report(seed=DEFAULT_SEED, samples=20_000):
    """Markdown text of the example report."""
    ctx = _Ctx(int(seed), int(samples))
    out = ["# Removability thresholds for the worked examples", ""]
    out += [
        "Constants (12 significant digits; full precision in brackets):",
        "",
        f"- log₃4 = {fmt(LOG3_4)} [{LOG3_4!r}]",
        f"- log₃2 = {fmt(LOG3_2)} [{LOG3_2!r}]",
        "",
        "Weight f = dist^σ(x, S). D = λ(n − k − m) − (n − k) − σ.",
        "",
    ]

    koch = KochSnowflake(7)
    out += ["## von Koch snowflake, n = 2, k = log₃4", ""]
    out += [f"Power law g = t^λ, λ > 1: removable if `{inequality_koch()}`", ""]
    out += _power_rows(ctx, koch, [(1.5, 1, -4.0), (3.0, 1, -4.0), (1.5, 1, -1.0), (3.0, 1, -1.0)], True)
    out += ["", "g = t log^ν(e + t): removable if `ν > m` and `σ < −m`", ""]
    out += _logpower_rows(
        ctx, koch, [(2.0, 1, -2.0), (1.0, 1, -2.0), (2.0, 1, -1.0), (3.0, 2, -3.0)],
        lambda nu, m, s: nu > m and s < -m, "T2.1",
    )

    out += ["", "## Cantor dust, k = n·log₃2", ""]
    out += [f"Power law, λ > 1: removable if `{inequality_cantor()}`", ""]
    for n in (2, 3):
        out += [f"n = {n}:", ""]
        out += _power_rows(ctx, CantorDust(7, n), [(1.5, 1, -3.0), (3.0, 1, 0.0), (2.0, 2, -3.0), (4.0, 1, -1.0)], False)
        out += [""]
    out += [f"Critical case σ = −m with g = t log^ν(e + t), ν > m: removable if `{inequality_cantor_critical()}`", ""]
    rows = []
    for n in (2, 3):
        S = CantorDust(7, n)
        for m in (1, 2):
            lhs = n - n * LOG3_2 - m
            rows.append([n, m, fmt(lhs), _word(lhs >= 0), ctx.verdict(log_power(m + 1.0), m, -float(m), S, "T2.2")])
    out += _table(["n", "m", "n − n·log₃2 − m", "closed form", "numeric (T2.2)"], rows)

    out += ["", "## Flat k-disk", ""]
    out += [f"Power law, λ > 1: removable if `{inequality_disk()}`", ""]
    out += ["With k = 0 and σ = 0 this reads `λ(n − m) − n ≥ 0`.", ""]
    out += ["Brezis–Véron thresholds (k = 0, m = 2, σ = 0): `λ ≥ n/(n − 2)`", ""]
    rows = []
    for n in range(3, 7):
        thr = brezis_veron_threshold(n)
        S = Point(n)
        for lam in (thr - 0.1, thr + 0.1):
            rows.append([
                n, fmt(thr), fmt(lam),
                ctx.verdict(power_law(lam), 2, 0.0, S, "C2.2"),
                ctx.verdict(power_law(lam), 2, 0.0, S, "T2.2"),
            ])
    out += _table(["n", "threshold n/(n − 2)", "λ", "closed form (C2.2)", "numeric (T2.2)"], rows)
    out += ["", "Critical case σ = −m with g = t log^ν(e + t), ν > m: removable if `n − k − m ≥ 0`", ""]
    rows = []
    for n, k, m in [(2, 1, 1), (3, 1, 1), (3, 1, 2), (3, 2, 1), (3, 2, 2)]:
        rows.append([n, k, m, n - k - m, _word(n - k - m >= 0),
                     ctx.verdict(log_power(m + 1.0), m, -float(m), KDisk(k, n), "T2.2")])
    out += _table(["n", "k", "m", "n − k − m", "closed form", "numeric (T2.2)"], rows)

    out += ["", "## Closed unit ball, k = n − 1", ""]
    out += [f"Power law, λ > 1: removable if `{inequality_ball()}`", ""]
    for n in (2, 3):
        out += [f"n = {n}:", ""]
        out += _power_rows(ctx, ClosedBall(1.0, n), [(2.0, 1, -2.0), (2.0, 1, -0.5), (3.0, 2, -4.0), (3.0, 2, -2.0)], False)
        out += [""]
    out += ["Critical case σ = −m with g = t log^ν(e + t): removable if `m = 1` and `ν > 1`", ""]
    rows = []
    for n in (2, 3):
        for nu, m in [(2.0, 1), (1.0, 1), (3.0, 2)]:
            rows.append([n, f"{nu:g}", m, _word(m == 1 and nu > 1),
                         ctx.verdict(log_power(nu), m, -float(m), ClosedBall(1.0, n), "T2.2")])
    out += _table(["n", "ν", "m", "closed form", "numeric (T2.2)"], rows)
    out.append("")
    return "\n".join(out)
