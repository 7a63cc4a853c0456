"""Singular sets, the weight ``f = dist(x, S)^sigma`` and sausage measures.

Every set exposes two vectorised distance oracles taking points of shape
``(..., n)``: :meth:`SingularSet.distance` (0 on ``S``) and
:meth:`SingularSet.boundary_distance` (distance to ``dS``).  Fractal sets are
built at a finite depth; ``geom_tolerance`` bounds the Hausdorff distance
between the depth-``d`` approximant and the limit set.

The domain ``Omega`` is the bounding box of ``S`` inflated by 1 on every side.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import shapely
from scipy.spatial import cKDTree

from .errors import DomainError, ParameterError, ScaleError
from .nonlinearity import ConvergenceReport, gamma

__all__ = [
    "CantorDust",
    "ClosedBall",
    "DEFAULT_SEED",
    "KDisk",
    "KochSnowflake",
    "Point",
    "SausageEstimate",
    "SingularSet",
    "Weight",
    "annulus_measures",
    "covering_cells",
    "distance",
    "ess_inf_f",
    "ess_inf_f_mc",
    "gamma_weight_integral",
    "sausage_measure",
    "set_from_dict",
]

DEFAULT_SEED = 0xC0FFEE
OMEGA_MARGIN = 1.0
MAX_SAUSAGE_CELLS = 4_000_000

LOG3_4 = math.log(4.0) / math.log(3.0)
LOG3_2 = math.log(2.0) / math.log(3.0)


class SingularSet:
    """Common interface of the built-in singular sets."""

    kind = "abstract"
    has_interior = False
    fractal = False

    ambient_n: int
    known_k: float | None
    geom_tolerance: float

    @property
    def bounding_box(self):
        raise NotImplementedError

    @property
    def omega_box(self):
        lo, hi = self.bounding_box
        return lo - OMEGA_MARGIN, hi + OMEGA_MARGIN

    @property
    def omega_diameter(self):
        lo, hi = self.omega_box
        return float(np.linalg.norm(hi - lo))

    @property
    def finite_k_dimension(self):
        """Whether ``dS`` is known to have finite ``known_k``-dimension."""
        return self.known_k is not None

    def distance(self, x):
        raise NotImplementedError

    def boundary_distance(self, x):
        return self.distance(x)

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.ambient_n:
            raise DomainError(
                f"points must have {self.ambient_n} coordinates, got shape {x.shape}"
            )
        return x

    def min_scale(self):
        """Smallest admissible sweep scale, ``10 * geom_tolerance``."""
        return 10.0 * self.geom_tolerance


@dataclass(frozen=True)
class Point(SingularSet):
    ambient_n: int = 2
    kind = "point"

    def __post_init__(self):
        _check_n(self.ambient_n)

    @property
    def known_k(self):
        return 0.0

    @property
    def geom_tolerance(self):
        return 0.0

    @property
    def bounding_box(self):
        z = np.zeros(self.ambient_n)
        return z, z.copy()

    def distance(self, x):
        return np.linalg.norm(self._points(x), axis=-1)

    def to_dict(self):
        return {"kind": self.kind, "n": self.ambient_n}


@dataclass(frozen=True)
class KDisk(SingularSet):
    """``{|x'| <= 1, x_{k+1} = ... = x_n = 0}`` with ``x' = (x_1..x_k)``."""

    k: int = 1
    ambient_n: int = 2
    kind = "kdisk"

    def __post_init__(self):
        _check_n(self.ambient_n)
        if not 0 <= self.k < self.ambient_n:
            raise DomainError(f"need 0 <= k < n, got k={self.k}, n={self.ambient_n}")

    @property
    def known_k(self):
        return float(self.k)

    @property
    def geom_tolerance(self):
        return 0.0

    @property
    def bounding_box(self):
        lo = np.zeros(self.ambient_n)
        hi = np.zeros(self.ambient_n)
        lo[: self.k] = -1.0
        hi[: self.k] = 1.0
        return lo, hi

    def distance(self, x):
        x = self._points(x)
        radial = np.maximum(np.linalg.norm(x[..., : self.k], axis=-1) - 1.0, 0.0)
        normal = np.linalg.norm(x[..., self.k :], axis=-1)
        return np.hypot(radial, normal)

    def to_dict(self):
        return {"kind": self.kind, "k": self.k, "n": self.ambient_n}


@dataclass(frozen=True)
class ClosedBall(SingularSet):
    radius: float = 1.0
    ambient_n: int = 2
    kind = "ball"
    has_interior = True

    def __post_init__(self):
        _check_n(self.ambient_n)
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")

    @property
    def known_k(self):
        return float(self.ambient_n - 1)

    @property
    def geom_tolerance(self):
        return 0.0

    @property
    def bounding_box(self):
        r = np.full(self.ambient_n, float(self.radius))
        return -r, r

    def distance(self, x):
        return np.maximum(np.linalg.norm(self._points(x), axis=-1) - self.radius, 0.0)

    def boundary_distance(self, x):
        return np.abs(np.linalg.norm(self._points(x), axis=-1) - self.radius)

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius, "n": self.ambient_n}


@dataclass(frozen=True)
class CantorDust(SingularSet):
    """``C x ... x C`` (``n`` factors) approximated by its ``2^{n d}`` depth-``d`` cubes."""

    depth: int = 7
    ambient_n: int = 2
    kind = "cantor"
    fractal = True

    def __post_init__(self):
        _check_n(self.ambient_n)
        if self.depth < 1:
            raise DomainError("Cantor depth must be >= 1")
        if self.depth > 16:
            raise DomainError("Cantor depth above 16 is not supported")

    @property
    def known_k(self):
        return self.ambient_n * LOG3_2

    @property
    def geom_tolerance(self):
        # farthest point of a depth cube from the limit set is its centre,
        # at distance sqrt(n)/6 of the side
        return math.sqrt(self.ambient_n) * 3.0**-self.depth / 6.0

    @property
    def bounding_box(self):
        return np.zeros(self.ambient_n), np.ones(self.ambient_n)

    @cached_property
    def _left_ends(self):
        ends = np.zeros(1)
        for i in range(1, self.depth + 1):
            ends = np.concatenate([ends, ends + 2.0 * 3.0**-i])
        return np.sort(ends)

    def _interval_distance(self, x):
        ends = self._left_ends
        width = 3.0**-self.depth
        idx = np.clip(np.searchsorted(ends, x, side="right") - 1, 0, ends.size - 1)
        best = np.full(x.shape, np.inf)
        for j in (idx, np.minimum(idx + 1, ends.size - 1)):
            lo = ends[j]
            d = np.maximum(np.maximum(lo - x, x - lo - width), 0.0)
            best = np.minimum(best, d)
        return best

    def distance(self, x):
        x = self._points(x)
        sq = np.zeros(x.shape[:-1])
        for i in range(self.ambient_n):
            sq = sq + self._interval_distance(x[..., i]) ** 2
        return np.sqrt(sq)

    def to_dict(self):
        return {"kind": self.kind, "depth": self.depth, "n": self.ambient_n}


@dataclass(frozen=True)
class KochSnowflake(SingularSet):
    """Filled von Koch snowflake grown from the unit equilateral triangle."""

    depth: int = 7
    kind = "koch"
    has_interior = True
    fractal = True

    def __post_init__(self):
        if not 0 <= self.depth <= 9:
            raise DomainError("Koch depth must lie in [0, 9]")

    @property
    def ambient_n(self):
        return 2

    @property
    def known_k(self):
        return LOG3_4

    @property
    def geom_tolerance(self):
        # the limit curve over a segment never rises above the first bump
        return math.sqrt(3.0) / 6.0 * 3.0**-self.depth

    @cached_property
    def vertices(self):
        v = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
        c, s = math.cos(-math.pi / 3.0), math.sin(-math.pi / 3.0)
        rot = np.array([[c, -s], [s, c]])
        for _ in range(self.depth):
            p = v
            q = np.roll(v, -1, axis=0)
            third = (q - p) / 3.0
            a = p + third
            b = p + 2.0 * third
            peak = a + third @ rot.T
            v = np.stack([p, a, peak, b], axis=1).reshape(-1, 2)
        return v

    @property
    def bounding_box(self):
        v = self.vertices
        return v.min(axis=0), v.max(axis=0)

    @cached_property
    def _polygon(self):
        poly = shapely.Polygon(self.vertices)
        shapely.prepare(poly)
        return poly

    @cached_property
    def _segment_tree(self):
        v = self.vertices
        segs = shapely.linestrings(np.stack([v, np.roll(v, -1, axis=0)], axis=1))
        return shapely.STRtree(segs)

    @cached_property
    def _vertex_tree(self):
        return cKDTree(self.vertices)

    def boundary_distance(self, x):
        x = self._points(x)
        flat = x.reshape(-1, 2)
        if flat.shape[0] == 0:
            return np.zeros(x.shape[:-1])
        v = self.vertices
        nv = v.shape[0]
        k = min(8, nv)
        dist_k, idx_k = self._vertex_tree.query(flat, k=k)
        best = np.full(flat.shape[0], np.inf)
        for col in range(k):
            i = idx_k[:, col]
            for a, b in ((i, (i + 1) % nv), ((i - 1) % nv, i)):
                best = np.minimum(best, _segment_distance(flat, v[a], v[b]))
        # the nearest segment has an endpoint within sqrt(d^2 + L^2/4); if the
        # k-th vertex is farther than that, every candidate was examined
        seg_len = float(np.linalg.norm(v[1] - v[0]))
        reach = np.sqrt(best**2 + 0.25 * seg_len**2)
        unsure = dist_k[:, -1] <= reach
        if np.any(unsure) and k < nv:
            pts = shapely.points(flat[unsure])
            _, d = self._segment_tree.query_nearest(pts, return_distance=True, all_matches=False)
            best[unsure] = d
        return best.reshape(x.shape[:-1])

    def inside(self, x):
        x = self._points(x)
        flat = x.reshape(-1, 2)
        return shapely.contains_xy(self._polygon, flat[:, 0], flat[:, 1]).reshape(
            x.shape[:-1]
        )

    def distance(self, x):
        d = self.boundary_distance(x)
        return np.where(self.inside(x), 0.0, d)

    def to_dict(self):
        return {"kind": self.kind, "depth": self.depth, "n": 2}


def _segment_distance(x, a, b):
    ab = b - a
    t = np.clip(np.sum((x - a) * ab, axis=-1) / np.sum(ab * ab, axis=-1), 0.0, 1.0)
    return np.linalg.norm(x - (a + t[:, None] * ab), axis=-1)


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"ambient dimension must be a positive integer, got {n}")


def set_from_dict(d):
    """Build a set from ``{"kind": ..., ...}`` as produced by ``to_dict``."""
    kind = d["kind"]
    n = int(d.get("n", 2))
    if kind == "point":
        return Point(n)
    if kind == "kdisk":
        return KDisk(int(d["k"]), n)
    if kind == "ball":
        return ClosedBall(float(d.get("radius", 1.0)), n)
    if kind == "cantor":
        return CantorDust(int(d.get("depth", 7)), n)
    if kind == "koch":
        if n != 2:
            raise DomainError("the Koch snowflake lives in the plane")
        return KochSnowflake(int(d.get("depth", 7)))
    raise DomainError(f"unknown set kind {kind!r}")


def distance(S, x):
    """Distance from ``x`` to ``S`` (0 on ``S``)."""
    out = S.distance(x)
    return float(out) if np.ndim(out) == 0 else out


# -- grid cells near a set ------------------------------------------------


@dataclass(frozen=True)
class CellSet:
    origin: np.ndarray
    side: float
    index: np.ndarray

    @property
    def count(self):
        return int(self.index.shape[0])

    @property
    def volume(self):
        return self.count * self.side ** self.origin.size

    def centers(self):
        return self.origin + (self.index + 0.5) * self.side


def covering_cells(dist_fn, lo, hi, side, reach=0.0, max_cells=None):
    """Grid cells of side ``side`` whose centre lies within
    ``reach + half-diagonal`` of the set described by ``dist_fn``.

    The grid is aligned so that ``lo`` is a cell centre.  Cells are found by
    octree refinement, so only the neighbourhood of the set is visited.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    pad = math.ceil(reach / side) + 1
    origin = lo - side * (pad + 0.5)
    extent = float(np.max(hi + reach + side - origin))
    levels = max(0, math.ceil(math.log2(extent / side)))
    offsets = np.array(np.meshgrid(*[[0, 1]] * n, indexing="ij")).reshape(n, -1).T
    index = np.zeros((1, n), dtype=np.int64)
    sqrt_n = math.sqrt(n)
    for level in range(levels + 1):
        cur = side * 2.0 ** (levels - level)
        centers = origin + (index + 0.5) * cur
        half_diag = 0.5 * cur * sqrt_n
        d = dist_fn(centers)
        if level == levels:
            keep = d < reach + half_diag
        else:
            keep = d <= reach + half_diag * (1.0 + 1e-9)
        index = index[keep]
        if level < levels:
            index = (2 * index[:, None, :] + offsets[None, :, :]).reshape(-1, n)
            if max_cells is not None and index.shape[0] > max_cells:
                raise ScaleError(
                    f"more than {max_cells} grid cells needed at side {side:g}"
                )
    return CellSet(origin, side, index)


# -- sausage measure ------------------------------------------------------


@dataclass(frozen=True)
class SausageEstimate:
    """Monte Carlo estimate of a sausage measure with 95% half-width."""

    r: float
    value: float
    half_width: float
    samples: int
    region: str

    @property
    def relative_half_width(self):
        return self.half_width / self.value if self.value > 0 else math.inf


def _seed_for(seed, *keys):
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        if isinstance(k, float):
            words.append(struct.unpack("<Q", struct.pack("<d", k))[0])
        elif isinstance(k, str):
            words.append(int.from_bytes(k.encode()[:8].ljust(8, b"\0"), "little"))
        else:
            words.append(int(k))
    return np.random.SeedSequence(words)


# the largest entries (3-D sets at r = 2^-10) hold a few tens of MB
@lru_cache(maxsize=128)
def _candidate_cells(S, r):
    """Grid cells around ``dS`` at reach ``r`` and their side (seed independent)."""
    lo, hi = S.bounding_box
    # coarser cells trade hit rate for memory on dense sets such as 3-D dust
    for side in r * np.array([0.5, 1.0, 2.0, 4.0]):
        try:
            cells = covering_cells(
                S.boundary_distance, lo, hi, side, reach=r, max_cells=MAX_SAUSAGE_CELLS
            )
            break
        except ScaleError:
            if side == 4.0 * r:
                raise
    index = cells.index.astype(np.int32)
    index.setflags(write=False)
    return CellSet(cells.origin, cells.side, index), float(side)


@lru_cache(maxsize=4096)
def _sample_distances(S, r, samples, seed, region):
    """Uniform samples of the candidate cells around ``dS`` at reach ``r``.

    Returns ``(distances, inside_mask, volume)``; ``distances`` are to ``S``
    for ``region="outer"`` and to ``dS`` for ``region="boundary"``.
    """
    cells, side = _candidate_cells(S, r)
    if cells.count == 0:
        return np.zeros(0), np.zeros(0, dtype=bool), 0.0
    rng = np.random.default_rng(_seed_for(seed, float(r), region))
    pick = rng.integers(cells.count, size=samples)
    x = cells.origin + (cells.index[pick] + rng.random((samples, cells.index.shape[1]))) * side
    if region == "boundary":
        d = S.boundary_distance(x)
        interior = np.zeros(samples, dtype=bool)
    else:
        d = S.distance(x)
        interior = (d == 0.0) if S.has_interior else np.zeros(samples, dtype=bool)
    d.setflags(write=False)
    interior.setflags(write=False)
    return d, interior, cells.volume


def _check_sampling(S, r, samples):
    if samples < 1000:
        raise ParameterError("Monte Carlo sausage measures need at least 1000 samples")
    if not r > 0:
        raise DomainError("r must be positive")
    if r > S.omega_diameter:
        raise ParameterError(f"r={r} exceeds the diameter of Omega")


def sausage_measure(S, r, samples=20_000, seed=DEFAULT_SEED, region="outer"):
    """Monte Carlo estimate of ``mes(S_r \\ S)`` (``region="outer"``) or of
    ``mes((dS)_r)`` (``region="boundary"``).

    Samples are drawn uniformly from grid cells near ``dS``; the estimate is
    the cell volume times the hit fraction, deterministic for a given seed.
    """
    _check_sampling(S, r, samples)
    if region not in ("outer", "boundary"):
        raise ParameterError(f"unknown region {region!r}")
    d, interior, volume = _sample_distances(S, float(r), int(samples), int(seed), region)
    if d.size == 0:
        return SausageEstimate(float(r), 0.0, 0.0, int(samples), region)
    hit = (d < r) & ~interior
    p = float(np.mean(hit))
    value = volume * p
    half = 1.96 * volume * math.sqrt(max(p * (1.0 - p), 0.0) / d.size)
    return SausageEstimate(float(r), value, half, int(samples), region)


def annulus_measures(S, radii, samples=20_000, seed=DEFAULT_SEED):
    """``mes({r_{i+1} <= dist < r_i} \\ S)`` for consecutive ``radii``
    (decreasing), each from the sample drawn for the outer radius."""
    radii = [float(r) for r in radii]
    out = []
    for r_out, r_in in zip(radii[:-1], radii[1:]):
        _check_sampling(S, r_out, samples)
        d, interior, volume = _sample_distances(S, r_out, int(samples), int(seed), "outer")
        if d.size == 0:
            out.append(0.0)
            continue
        hit = (d < r_out) & (d >= r_in) & ~interior
        out.append(volume * float(np.mean(hit)))
    return np.array(out)


# -- weight ---------------------------------------------------------------


@dataclass(frozen=True)
class Weight:
    """``f(x) = dist(x, S)^sigma`` (``f = 1`` for ``sigma = 0``)."""

    sigma: float
    set: SingularSet

    def value(self, x):
        d = self.set.distance(x)
        if self.sigma == 0:
            return np.ones_like(d)
        with np.errstate(divide="ignore"):
            return d**self.sigma


def ess_inf_f(w, r):
    """Essential infimum of ``dist^sigma`` over ``S_r \\ S`` (closed form)."""
    if not r > 0:
        raise DomainError("r must be positive")
    if w.sigma < 0:
        return float(r) ** w.sigma
    if w.sigma == 0:
        return 1.0
    return 0.0


def ess_inf_f_mc(w, r, samples=20_000, seed=DEFAULT_SEED):
    """Sampled minimum of ``f`` over ``S_r \\ S`` (validation of the closed form)."""
    _check_sampling(w.set, r, samples)
    d, interior, _ = _sample_distances(w.set, float(r), int(samples), int(seed), "outer")
    d = d[(d < r) & ~interior & (d > 0)]
    if d.size == 0:
        return math.nan
    if w.sigma == 0:
        return 1.0
    return float(np.min(d**w.sigma))


def gamma_weight_integral(g, w, samples=20_000, seed=DEFAULT_SEED, i_max=10):
    """Classify ``int_{Omega \\ S} gamma(1/f) dx`` by annuli ``r_i = 2^{-i}``.

    Block ``i`` bounds the integral over ``{2^{-i-1} <= dist < 2^{-i}}`` by
    ``gamma(sup 1/f) * mes``.  The region ``dist >= 1`` has bounded integrand
    on the bounded ``Omega`` and never affects convergence.
    """
    S = w.set
    floor = S.min_scale()
    if floor > 0:
        i_max = min(i_max, int(math.floor(math.log2(1.0 / floor))))
    if i_max < 4:
        raise ScaleError("set too coarse for an annular decomposition")
    radii = 2.0 ** -np.arange(0, i_max + 2, dtype=float)
    mes = annulus_measures(S, radii, samples=samples, seed=seed)
    if w.sigma < 0:
        sup_inv = radii[:-1] ** (-w.sigma)
    elif w.sigma > 0:
        sup_inv = radii[1:] ** (-w.sigma)
    else:
        sup_inv = np.ones(radii.size - 1)
    gam = np.asarray(gamma(g, sup_inv))
    blocks = gam * mes
    return _classify_annular(blocks)


def _classify_annular(blocks, margin=0.05):
    blocks = np.asarray(blocks, dtype=float)
    total = float(np.sum(blocks))
    nz = np.flatnonzero(blocks > 0)
    if nz.size == 0 or nz[-1] < blocks.size - 3:
        # integrand vanishes near S
        return ConvergenceReport("Finite", total, 0.0, math.inf, int(blocks.size), geometric=True, variable="annulus")
    idx = np.arange(blocks.size)
    use = (idx >= 2) & (blocks > 0)
    if np.count_nonzero(use) < 3:
        use = blocks > 0
    slope = np.polyfit(idx[use], np.log(blocks[use]), 1)[0]
    rate = -slope / math.log(2.0)
    warning = None
    if rate > margin:
        verdict = "Finite"
        rho = 2.0**-rate
        err = float(blocks[-1] * rho / (1.0 - rho))
    else:
        verdict = "Divergent"
        err = None
        if rate >= -margin:
            warning = f"annular decay rate {rate:.4f} within the inconclusive band"
    return ConvergenceReport(
        verdict,
        total + (err or 0.0) if verdict == "Finite" else None,
        err,
        float(rate),
        int(blocks.size),
        geometric=True,
        warning=warning,
        variable="annulus",
    )
