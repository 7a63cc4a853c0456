"""Bounded-multiplicity ball covers and the smooth cutoff built on them.

For a finite sample ``omega`` and a radius ``r``, :func:`greedy_cover` picks
centres in ``omega`` pairwise at least ``r/2`` apart such that every sample
lies within ``r/2`` of a centre.  The balls ``B_{r/4}`` around the centres
are disjoint, so at most ``5^n`` balls ``B_r`` overlap at any point.
:func:`cutoff_psi` glues bumps on the cover into a function equal to 1 on
``omega`` and 0 off ``omega_r`` whose ``m``-th derivatives scale like
``r^-m``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError

__all__ = [
    "CmBound",
    "Cover",
    "OMEGA_SAMPLES",
    "cutoff_psi",
    "eta",
    "greedy_cover",
    "multiplicity",
    "phi",
    "sample_omega",
    "verify_cm_bound",
]

MAX_ORDER = 4
STEP_FRACTION = 1.0 / 64.0


@dataclass(frozen=True)
class Cover:
    """Centres ``x_i`` of balls of radius ``r`` in ``R^n``."""

    centers: np.ndarray
    r: float

    @property
    def n(self):
        return int(self.centers.shape[1])

    def __len__(self):
        return int(self.centers.shape[0])

    def to_dict(self):
        return {"n": self.n, "r": self.r, "centers": self.centers.tolist()}

    @classmethod
    def from_dict(cls, d):
        centers = np.asarray(d["centers"], dtype=float).reshape(-1, int(d["n"]))
        return cls(centers, float(d["r"]))


def greedy_cover(omega, r):
    """Greedy cover of the sample ``omega`` (shape ``(N, n)``) by ``B_{r/2}``.

    Samples are visited by increasing norm (ties broken lexicographically);
    a sample not strictly inside ``B_{r/2}`` of an earlier centre becomes a
    centre.
    """
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    if omega.size == 0:
        raise ParameterError("omega must contain at least one point")
    if not r > 0:
        raise ParameterError("r must be positive")
    n = omega.shape[1]
    order = np.lexsort(tuple(omega[:, ::-1].T) + (np.linalg.norm(omega, axis=1),))
    half = 0.5 * r
    # hash grid with cell side r/2: a covering centre sits in a neighbouring cell
    buckets = {}
    neighbours = list(itertools.product((-1, 0, 1), repeat=n))
    centers = []
    for idx in order:
        x = omega[idx]
        cell = tuple(np.floor(x / half).astype(np.int64))
        covered = False
        for off in neighbours:
            for c in buckets.get(tuple(a + b for a, b in zip(cell, off)), ()):
                if math.dist(x, c) < half:
                    covered = True
                    break
            if covered:
                break
        if not covered:
            centers.append(x)
            buckets.setdefault(cell, []).append(x)
    return Cover(np.array(centers), float(r))


def multiplicity(cover, x):
    """Number of open balls ``B_r(x_i)`` containing each point of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    tree = cKDTree(cover.centers)
    # shrink slightly so the count is over the open ball
    r = cover.r * (1.0 - 1e-12)
    return np.asarray(tree.query_ball_point(x, r, return_length=True))


def _rho(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / t[pos])
    return out


def eta(t):
    """Smooth step: 0 on ``(-inf, 0]``, 1 on ``[1, inf)``, ``C^inf``."""
    a = _rho(t)
    b = _rho(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def phi(y):
    """Radial bump ``eta(2 (1 - |y|))``: 1 on ``|y| <= 1/2``, 0 on ``|y| >= 1``."""
    return eta(2.0 * (1.0 - np.asarray(y, dtype=float)))


def cutoff_psi(cover, x):
    """``psi(x) = eta(sum_i phi(|x - x_i| / r))``, with values in ``[0, 1]``."""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_2d(x).reshape(-1, cover.n)
    nbrs = cKDTree(cover.centers).query_ball_point(flat, cover.r)
    lengths = np.fromiter((len(b) for b in nbrs), dtype=np.int64, count=len(nbrs))
    rows = np.repeat(np.arange(flat.shape[0]), lengths)
    cols = np.fromiter(itertools.chain.from_iterable(nbrs), dtype=np.int64, count=rows.size)
    d = np.linalg.norm(cover.centers[cols] - flat[rows], axis=1)
    total = np.bincount(rows, weights=phi(d / cover.r), minlength=flat.shape[0])
    psi = eta(total)
    return float(psi[0]) if x.ndim == 1 else psi.reshape(x.shape[:-1])


def _multi_indices(n, m):
    for order in range(m + 1):
        for alpha in itertools.product(range(order + 1), repeat=n):
            if sum(alpha) == order:
                yield alpha


def _stencil(alpha, h):
    """Offsets and weights of the tensor central difference for ``d^alpha``."""
    axes = []
    for p in alpha:
        ks = np.arange(p + 1)
        w = np.array([(-1) ** i * math.comb(p, i) for i in ks], dtype=float) / h**p
        axes.append(list(zip((p / 2.0 - ks) * h, w)))
    offsets, weights = [], []
    for combo in itertools.product(*axes):
        offsets.append([o for o, _ in combo])
        weights.append(math.prod(w for _, w in combo))
    return np.array(offsets), np.array(weights)


@dataclass(frozen=True)
class CmBound:
    """Scaled derivative sups ``K(r) = max_alpha sup |d^alpha psi| r^|alpha|``."""

    m: int
    radii: tuple
    K: tuple
    sups: tuple  # per radius: {alpha: sup |d^alpha psi|}

    @property
    def ratio(self):
        return max(self.K) / min(self.K)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "alpha", "order", "sup_abs_derivative", "scaled"])
        for r, table in zip(self.radii, self.sups):
            for alpha, sup in table.items():
                order = sum(alpha)
                writer.writerow(
                    [repr(r), "-".join(map(str, alpha)), order, repr(sup), repr(sup * r**order)]
                )
        return buf.getvalue()

    def to_dict(self):
        return {"m": self.m, "radii": list(self.radii), "K": list(self.K), "ratio": self.ratio}


def _probe_points(cover, probes, seed):
    """Centres plus points at scaled random offsets ``r * u`` with ``|u| < 1.1``."""
    rng = np.random.default_rng(seed)
    n = cover.n
    u = rng.normal(size=(probes, n))
    u *= (1.1 * rng.random(probes) ** (1.0 / n) / np.linalg.norm(u, axis=1))[:, None]
    base = cover.centers[rng.integers(len(cover), size=probes)]
    return np.vstack([cover.centers, base + cover.r * u])


def verify_cm_bound(omega, m, radii, probes=4000, seed=0):
    """Estimate ``K(r)`` for the cutoff of ``greedy_cover(omega, r)``.

    Derivatives up to order ``m`` come from tensor central differences with
    step ``r/64`` at probe points placed relative to the cover, so that the
    probe pattern is the same at every scale.
    """
    if m > MAX_ORDER:
        raise ParameterError(f"derivative order above {MAX_ORDER} is not supported")
    if m < 0:
        raise ParameterError("m must be nonnegative")
    radii = tuple(float(r) for r in radii)
    Ks, sups = [], []
    for r in radii:
        cover = greedy_cover(omega, r)
        x = _probe_points(cover, probes, seed)
        h = r * STEP_FRACTION
        table = {}
        for alpha in _multi_indices(cover.n, m):
            offsets, weights = _stencil(alpha, h)
            vals = cutoff_psi(cover, x[:, None, :] + offsets[None, :, :])
            table[alpha] = float(np.max(np.abs(vals @ weights)))
        Ks.append(max(sup * r ** sum(alpha) for alpha, sup in table.items()))
        sups.append(table)
    return CmBound(int(m), radii, tuple(Ks), tuple(sups))


def _sample_point(n, count, rng):
    return np.zeros((1, n))


def _sample_segment(n, count, rng):
    x = np.zeros((count, n))
    x[:, 0] = np.linspace(0.0, 1.0, count)
    return x


def _sample_square(n, count, rng):
    return rng.random((count, n))


def _sample_sphere(n, count, rng):
    u = rng.normal(size=(count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


OMEGA_SAMPLES = {
    "point": _sample_point,
    "segment": _sample_segment,
    "square": _sample_square,
    "sphere": _sample_sphere,
}


def sample_omega(name, n, count=10_000, seed=0):
    """Named sample sets: a point, the unit segment on the first axis, the unit
    cube and the unit sphere."""
    if name not in OMEGA_SAMPLES:
        raise ParameterError(f"unknown sample {name!r}; choose from {sorted(OMEGA_SAMPLES)}")
    return OMEGA_SAMPLES[name](n, count, np.random.default_rng(seed))
