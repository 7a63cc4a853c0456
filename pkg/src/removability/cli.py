"""Command line front end.

    removability check --config spec.json [--seed N] [--samples N] [--out DIR]
    removability dimension --config sweep.json [...]
    removability cover --config cover.json [...]
    removability examples [--out DIR]

``check`` exits 0 when the set is certified removable, 1 when the
conditions are not all satisfied and 2 on configuration or numeric errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .covering import greedy_cover, multiplicity, cutoff_psi, sample_omega, verify_cm_bound
from .criteria import THEOREMS, ProblemSpec, check
from .dimension import fractal_dimension, sausage_sweep
from .errors import RemovabilityError
from .geometry import DEFAULT_SEED, Weight, set_from_dict
from .nonlinearity import iterated_log, log_power, power_law
from .report import examples_report

log = logging.getLogger("removability")

EXIT_REMOVABLE, EXIT_NOT_CONCLUDED, EXIT_ERROR = 0, 1, 2
SCHEMA_VERSION = 1


# -- config schema --------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PowerConfig(_Strict):
    family: Literal["power"]
    lam: float = Field(gt=1)


class LogPowerConfig(_Strict):
    family: Literal["logpower"]
    nu: float = Field(gt=0)


class IterLogConfig(_Strict):
    family: Literal["iterlog"]
    l: int = Field(ge=0)  # noqa: E741
    nu: float = Field(gt=0)
    m: int = Field(ge=1)


GConfig = Annotated[Union[PowerConfig, LogPowerConfig, IterLogConfig], Field(discriminator="family")]


class PointConfig(_Strict):
    kind: Literal["point"]
    n: int = Field(2, ge=1, le=8)


class KDiskConfig(_Strict):
    kind: Literal["kdisk"]
    k: int = Field(ge=1)
    n: int = Field(2, ge=2, le=8)


class BallConfig(_Strict):
    kind: Literal["ball"]
    n: int = Field(2, ge=1, le=8)
    radius: float = Field(1.0, gt=0)


class CantorConfig(_Strict):
    kind: Literal["cantor"]
    n: int = Field(2, ge=1, le=3)
    depth: int = Field(7, ge=1, le=16)


class KochConfig(_Strict):
    kind: Literal["koch"]
    n: Literal[2] = 2
    depth: int = Field(7, ge=0, le=9)


SetConfig = Annotated[
    Union[PointConfig, KDiskConfig, BallConfig, CantorConfig, KochConfig],
    Field(discriminator="kind"),
]


class _Versioned(_Strict):
    schema_version: Literal[1] = Field(alias="schema")
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    samples: int = Field(20_000, ge=1000, le=10_000_000)


class CheckConfig(_Versioned):
    theorem: Literal[THEOREMS]
    g: GConfig
    m: int = Field(ge=1)
    sigma: float
    set: SetConfig
    k: float | None = None
    C_samples: list[float] = Field(default_factory=lambda: [0.1, 1.0, 10.0], min_length=1)
    delta_search: list[float] = Field(default_factory=lambda: [0.5, 0.1, 0.01], min_length=1)
    i_min: int = Field(3, ge=0)
    i_max: int = Field(10, ge=3, le=30)


class DimensionConfig(_Versioned):
    set: SetConfig
    method: Literal["box", "sausage"] = "box"
    i_min: int = Field(2, ge=0)
    i_max: int = Field(6, ge=3, le=30)


class CoverConfig(_Versioned):
    sample: Literal["point", "segment", "square", "sphere"]
    n: int = Field(2, ge=1, le=4)
    count: int = Field(1000, ge=1, le=200_000)
    r: float = Field(gt=0)
    m: int = Field(1, ge=0, le=4)
    radii: list[float] = Field(default_factory=lambda: [2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6], min_length=1)
    probes: int = Field(4000, ge=1, le=100_000)


def build_g(cfg):
    if cfg.family == "power":
        return power_law(cfg.lam)
    if cfg.family == "logpower":
        return log_power(cfg.nu)
    return iterated_log(cfg.l, cfg.nu, cfg.m)


def build_set(cfg):
    return set_from_dict(cfg.model_dump())


def build_spec(cfg):
    """:class:`ProblemSpec` from a validated :class:`CheckConfig`."""
    return ProblemSpec(
        g=build_g(cfg.g),
        m=cfg.m,
        w=Weight(cfg.sigma, build_set(cfg.set)),
        theorem=cfg.theorem,
        C_samples=tuple(cfg.C_samples),
        delta_search=tuple(cfg.delta_search),
        k=cfg.k,
        i_min=cfg.i_min,
        i_max=cfg.i_max,
        samples=cfg.samples,
        seed=cfg.seed,
    )


def load_config(model, path, overrides):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return model.model_validate(data)


# -- output ---------------------------------------------------------------


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# -- commands -------------------------------------------------------------


def cmd_check(cfg, out):
    verdict = check(build_spec(cfg))
    write_atomic(out / "verdict.json", dumps(verdict.to_dict()))
    for c in verdict.conditions:
        log.info("%-24s %s", c.label, c.status)
    print(verdict.overall)
    return EXIT_REMOVABLE if verdict.removable else EXIT_NOT_CONCLUDED


def cmd_dimension(cfg, out):
    S = build_set(cfg.set)
    if cfg.method == "box":
        est = fractal_dimension(S, cfg.i_min, cfg.i_max)
        sweep = est.sweep
        summary = {
            "dimension": est.dimension,
            "lower": est.lower,
            "upper": est.upper,
        }
    else:
        sweep = sausage_sweep(S, cfg.i_min, cfg.i_max, cfg.samples, cfg.seed)
        slopes = sweep.local_slopes()
        summary = {
            "dimension": S.ambient_n - float(np.min(slopes)),
            "lower": S.ambient_n - float(np.max(slopes)),
            "upper": S.ambient_n - float(np.min(slopes)),
            "global": S.ambient_n - sweep.fit.slope,
        }
    summary.update(
        set=S.to_dict(),
        method=cfg.method,
        known_k=S.known_k,
        i_min=cfg.i_min,
        i_max=cfg.i_max,
        fit=sweep.fit.to_dict(),
    )
    write_atomic(out / "sweep.csv", sweep.to_csv())
    write_atomic(out / "summary.json", dumps(summary))
    print(f"{summary['dimension']:.6f}")
    return 0


def cmd_cover(cfg, out):
    omega = sample_omega(cfg.sample, cfg.n, cfg.count, cfg.seed)
    cover = greedy_cover(omega, cfg.r)
    rng = np.random.default_rng(cfg.seed + 1)
    lo = omega.min(axis=0) - 2 * cfg.r
    hi = omega.max(axis=0) + 2 * cfg.r
    probes = lo + (hi - lo) * rng.random((cfg.probes, cfg.n))
    mult = multiplicity(cover, probes)
    psi_probe = cutoff_psi(cover, probes)
    far = np.min(np.linalg.norm(probes[:, None, :] - cover.centers[None, :, :], axis=2), axis=1) >= cfg.r
    centers = cover.centers
    pair = (
        float(np.min(np.linalg.norm(centers[:, None] - centers[None], axis=2)[np.triu_indices(len(cover), 1)]))
        if len(cover) > 1 else None
    )
    nearest = np.min(np.linalg.norm(omega[:, None, :] - centers[None, :, :], axis=2), axis=1)
    bound = verify_cm_bound(omega, cfg.m, cfg.radii, probes=cfg.probes, seed=cfg.seed)
    result = {
        "cover": cover.to_dict(),
        "sample": cfg.sample,
        "centers": len(cover),
        "max_multiplicity": int(mult.max()),
        "multiplicity_bound": 5**cfg.n,
        "min_center_distance": pair,
        "coverage_radius": float(nearest.max()),
        "psi_min_on_omega": float(np.min(cutoff_psi(cover, omega))),
        "psi_max_outside": float(np.max(psi_probe[far])) if np.any(far) else 0.0,
        "cm_bound": bound.to_dict(),
    }
    write_atomic(out / "cover.json", dumps(result))
    write_atomic(out / "probes.csv", bound.to_csv())
    print(f"centers={len(cover)} max_multiplicity={result['max_multiplicity']} K_ratio={bound.ratio:.4f}")
    return 0


def cmd_examples(args, out):
    text = examples_report(seed=args.seed if args.seed is not None else DEFAULT_SEED,
                           samples=args.samples or 20_000)
    write_atomic(out / "report.md", text)
    print(out / "report.md")
    return 0


COMMANDS = {
    "check": (CheckConfig, cmd_check),
    "dimension": (DimensionConfig, cmd_dimension),
    "cover": (CoverConfig, cmd_cover),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="removability",
        description="Removability criteria for singular sets of nonlinear differential inequalities.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log condition details")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("check", "evaluate a theorem's conditions; writes verdict.json"),
        ("dimension", "estimate a fractal dimension; writes sweep.csv and summary.json"),
        ("cover", "greedy cover and cutoff bounds; writes cover.json and probes.csv"),
        ("examples", "regenerate the example report; writes report.md"),
    ]:
        p = sub.add_parser(name, help=help_text)
        if name != "examples":
            p.add_argument("--config", required=True, type=Path, help="JSON config path")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--samples", type=int, help="Monte Carlo samples (overrides the config)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "examples":
            return cmd_examples(args, args.out)
        model, run = COMMANDS[args.command]
        overrides = {"seed": args.seed, "samples": args.samples}
        cfg = load_config(model, args.config, overrides)
        return run(cfg, args.out)
    except (OSError, ValueError, ValidationError, RemovabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
