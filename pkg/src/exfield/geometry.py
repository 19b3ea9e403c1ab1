"""Lattice index sets D_n = (c_n C) ∩ Z^d and the block construction built on them.

Bodies are closed, axis-aligned boxes, balls and ellipsoids. Lattice sets are
carried as ``(n, d)`` int64 arrays in lexicographic order (first coordinate
most significant).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np


class GeometryError(ValueError):
    pass


class PartitionTooFine(GeometryError):
    """Raised when some block side length t_ell rounds down to zero."""

    def __init__(self, axis: int, c: float, k: int):
        self.axis = axis
        super().__init__(
            f"partition too fine on axis {axis + 1}: floor({c:g} / {k}^(1/d)) = 0"
        )


class UnsupportedBody(GeometryError):
    pass


# ---------------------------------------------------------------- bodies


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(a) for a in self.lower))
        object.__setattr__(self, "upper", tuple(float(b) for b in self.upper))
        if len(self.lower) != len(self.upper) or not self.lower:
            raise GeometryError("box corners must have equal, positive length")
        if any(a >= b for a, b in zip(self.lower, self.upper)):
            raise GeometryError("box needs lower < upper in every coordinate")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def bounds(self):
        return np.array(self.lower), np.array(self.upper)

    def scaled(self, c) -> "Box":
        c = np.asarray(c, float)
        return Box(tuple(np.array(self.lower) * c), tuple(np.array(self.upper) * c))

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, float))
        lo, hi = self.bounds()
        return np.all((p >= lo) & (p <= hi), axis=1)

    def meets_halfopen(self, lo, hi) -> np.ndarray:
        """Rows i where [lo_i, hi_i) meets the body."""
        a, b = self.bounds()
        return np.all((lo <= b) & (hi > a), axis=1)

    def contains_closed(self, lo, hi) -> np.ndarray:
        a, b = self.bounds()
        return np.all((lo >= a) & (hi <= b), axis=1)

    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def to_dict(self) -> dict:
        return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned ellipsoid sum(((x - center) / semi_axes)**2) <= 1."""

    center: tuple[float, ...]
    semi_axes: tuple[float, ...]
    kind: str = field(default="ellipsoid", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(a) for a in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(a) for a in self.semi_axes))
        if len(self.center) != len(self.semi_axes) or not self.center:
            raise GeometryError("center and semi-axes must have equal, positive length")
        if any(a <= 0 for a in self.semi_axes):
            raise GeometryError("semi-axes must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def bounds(self):
        c, r = np.array(self.center), np.array(self.semi_axes)
        return c - r, c + r

    def scaled(self, c) -> "Ellipsoid":
        c = np.asarray(c, float)
        return Ellipsoid(tuple(np.array(self.center) * c), tuple(np.array(self.semi_axes) * c))

    def _norm2(self, p) -> np.ndarray:
        return np.sum(((p - np.array(self.center)) / np.array(self.semi_axes)) ** 2, axis=1)

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, float))
        return self._norm2(p) <= 1.0

    def meets_halfopen(self, lo, hi) -> np.ndarray:
        # nearest point of the closed box; the body is strictly convex, so on
        # exact contact that point is the only candidate and must lie in [lo, hi)
        ctr = np.array(self.center)
        near = np.clip(ctr, lo, hi)
        n2 = self._norm2(near)
        inside_halfopen = np.all(near < hi, axis=1)
        return (n2 < 1.0) | ((n2 == 1.0) & inside_halfopen)

    def contains_closed(self, lo, hi) -> np.ndarray:
        ctr = np.array(self.center)
        # farthest corner in the normalised metric
        far = np.where(np.abs(lo - ctr) > np.abs(hi - ctr), lo, hi)
        return self._norm2(far) <= 1.0

    def volume(self) -> float:
        d = self.dim
        return unit_ball_volume(d) * float(np.prod(self.semi_axes))

    def to_dict(self) -> dict:
        return {"kind": "ellipsoid", "center": list(self.center), "semi_axes": list(self.semi_axes)}


class Ball(Ellipsoid):
    def __init__(self, center, radius: float):
        if radius <= 0:
            raise GeometryError("radius must be positive")
        super().__init__(tuple(center), (float(radius),) * len(tuple(center)))
        object.__setattr__(self, "kind", "ball")

    @property
    def radius(self) -> float:
        return self.semi_axes[0]

    def scaled(self, c):
        c = np.asarray(c, float)
        if np.all(c == c[0]):
            return Ball(tuple(np.array(self.center) * c), self.radius * float(c[0]))
        return Ellipsoid.scaled(self, c)

    def __repr__(self):
        return f"Ball(center={self.center}, radius={self.radius})"

    def to_dict(self) -> dict:
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}


ConvexBody = Box | Ellipsoid


def body_from_dict(spec: dict) -> ConvexBody:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    allowed = {"box": {"lower", "upper"}, "ball": {"center", "radius"},
               "ellipsoid": {"center", "semi_axes"}}
    if kind not in allowed:
        raise GeometryError(f"unknown body kind {kind!r}")
    extra = set(spec) - allowed[kind]
    missing = allowed[kind] - set(spec)
    if extra or missing:
        raise GeometryError(f"{kind}: unexpected keys {sorted(extra)} / missing {sorted(missing)}")
    if kind == "box":
        return Box(spec["lower"], spec["upper"])
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    return Ellipsoid(spec["center"], spec["semi_axes"])


def unit_ball_volume(j: int) -> float:
    return math.pi ** (j / 2) / math.gamma(j / 2 + 1)


# ---------------------------------------------------------- p-convex sets


@dataclass(frozen=True)
class PConvexSet:
    """Finite union of convex bodies."""

    bodies: tuple

    def __post_init__(self):
        bodies = tuple(self.bodies)
        if not bodies:
            raise GeometryError("a p-convex set needs at least one body")
        if len({b.dim for b in bodies}) != 1:
            raise GeometryError("bodies of mixed dimension")
        object.__setattr__(self, "bodies", bodies)

    @classmethod
    def from_dict(cls, spec: dict) -> "PConvexSet":
        if set(spec) != {"bodies"}:
            raise GeometryError(f"generator keys must be exactly ['bodies'], got {sorted(spec)}")
        return cls(tuple(body_from_dict(b) for b in spec["bodies"]))

    def to_dict(self) -> dict:
        return {"bodies": [b.to_dict() for b in self.bodies]}

    @property
    def dim(self) -> int:
        return self.bodies[0].dim

    @property
    def p(self) -> int:
        return len(self.bodies)

    def scaled(self, c) -> "PConvexSet":
        return PConvexSet(tuple(b.scaled(c) for b in self.bodies))

    def bounds(self):
        los, his = zip(*(b.bounds() for b in self.bodies))
        return np.min(los, axis=0), np.max(his, axis=0)

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, float))
        out = np.zeros(len(p), bool)
        for b in self.bodies:
            out |= b.contains(p)
        return out

    def meets_halfopen(self, lo, hi) -> np.ndarray:
        out = np.zeros(len(lo), bool)
        for b in self.bodies:
            out |= b.meets_halfopen(lo, hi)
        return out

    def contains_halfopen(self, lo, hi, depth: int = 12) -> np.ndarray:
        """Rows i with [lo_i, hi_i) inside the union.

        A half-open box lies in a closed set iff its closure does. Exact when
        one body covers the whole closed box; otherwise the box is bisected
        along its longest side up to ``depth`` times, and cells still
        undecided at that depth are accepted when their corners and centre
        are all in the union.
        """
        lo = np.atleast_2d(np.asarray(lo, float))
        hi = np.atleast_2d(np.asarray(hi, float))
        single = np.zeros(len(lo), bool)
        for b in self.bodies:
            single |= b.contains_closed(lo, hi)
        if self.p == 1:
            return single
        out = single.copy()
        for i in np.flatnonzero(~single):
            out[i] = self._covered(lo[i], hi[i], depth)
        return out

    def _covered(self, lo, hi, depth) -> bool:
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        probe = np.vstack([corners, (lo + hi) / 2])
        if not np.all(self.contains(probe)):
            return False
        if any(b.contains_closed(lo[None], hi[None])[0] for b in self.bodies):
            return True
        if depth == 0:
            return True
        ax = int(np.argmax(hi - lo))
        mid = (lo[ax] + hi[ax]) / 2
        hi1, lo2 = hi.copy(), lo.copy()
        hi1[ax] = mid
        lo2[ax] = mid
        return self._covered(lo, hi1, depth - 1) and self._covered(lo2, hi, depth - 1)

    def volume(self, resolution: float = 2.0**-10) -> tuple[float, float]:
        """Lebesgue volume and an upper bound on its absolute error.

        Exact for one body, for boxes only, and for bodies with pairwise
        disjoint bounding boxes; otherwise midpoint quadrature with cells of
        side ``resolution`` times the bounding-box extent, and the error
        bound is the total volume of cells that straddle the boundary.
        """
        if self.p == 1:
            return self.bodies[0].volume(), 0.0
        if all(isinstance(b, Box) and b.kind == "box" for b in self.bodies):
            return _box_union_volume(self.bodies), 0.0
        boxes = [b.bounds() for b in self.bodies]
        if all(_boxes_disjoint(boxes[i], boxes[j])
               for i in range(self.p) for j in range(i + 1, self.p)):
            return float(sum(b.volume() for b in self.bodies)), 0.0
        return self._quadrature(resolution)

    def _quadrature(self, resolution):
        lo, hi = self.bounds()
        n = max(1, int(round(1 / resolution)))
        h = (hi - lo) / n
        cell = float(np.prod(h))
        inside = boundary = 0
        axes = [lo[ell] + (np.arange(n) + 0.5) * h[ell] for ell in range(1, self.dim)]
        rest = np.array(list(itertools.product(*axes))) if axes else np.zeros((1, 0))
        half = h / 2
        for x0 in lo[0] + (np.arange(n) + 0.5) * h[0]:
            mids = np.column_stack([np.full(len(rest), x0), rest])
            m = self.contains(mids)
            full = np.zeros(len(mids), bool)
            for b in self.bodies:
                full |= b.contains_closed(mids - half, mids + half)
            touch = self.meets_halfopen(mids - half, mids + half)
            inside += int(m.sum())
            boundary += int((touch & ~full).sum())
        return inside * cell, boundary * cell


def _boxes_disjoint(a, b) -> bool:
    return bool(np.any((a[1] <= b[0]) | (b[1] <= a[0])))


def _box_union_volume(boxes) -> float:
    d = boxes[0].dim
    cuts = [np.unique(np.concatenate([[b.lower[ell], b.upper[ell]] for b in boxes])) for ell in range(d)]
    mids = np.array(list(itertools.product(*[(c[:-1] + c[1:]) / 2 for c in cuts])))
    widths = np.array(list(itertools.product(*[np.diff(c) for c in cuts])))
    inside = np.zeros(len(mids), bool)
    for b in boxes:
        inside |= b.contains(mids)
    return float(np.sum(np.prod(widths[inside], axis=1)))


# ----------------------------------------------------------- lattice sets


def lex_sort(pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.int64)
    if len(pts) == 0:
        return pts
    return np.unique(pts, axis=0)


def encode(pts, lower, shape) -> np.ndarray:
    """Row-major integer key of points inside the box ``lower + [0, shape)``."""
    rel = np.asarray(pts, np.int64) - np.asarray(lower, np.int64)
    return np.ravel_multi_index(tuple(rel.T), tuple(shape))


class LatticeIndex:
    """Membership/position lookup for a finite lattice set."""

    def __init__(self, pts):
        self.points = np.asarray(pts, np.int64)
        d = self.points.shape[1]
        if len(self.points) == 0:
            self.lower = np.zeros(d, np.int64)
            self.shape = np.ones(d, np.int64)
        else:
            self.lower = self.points.min(axis=0)
            self.shape = self.points.max(axis=0) - self.lower + 1
        self._keys = encode(self.points, self.lower, self.shape) if len(self.points) else np.zeros(0, np.int64)
        self._order = np.argsort(self._keys, kind="stable")
        self._sorted = self._keys[self._order]

    def __len__(self):
        return len(self.points)

    def positions(self, pts) -> np.ndarray:
        """Row index of each query point, -1 where absent."""
        q = np.atleast_2d(np.asarray(pts, np.int64))
        out = np.full(len(q), -1, np.int64)
        if len(q) == 0 or len(self.points) == 0:
            return out
        rel = q - self.lower
        ok = np.all((rel >= 0) & (rel < self.shape), axis=1)
        if not ok.any():
            return out
        keys = np.ravel_multi_index(tuple(rel[ok].T), tuple(self.shape))
        j = np.searchsorted(self._sorted, keys)
        j = np.minimum(j, len(self._sorted) - 1)
        hit = self._sorted[j] == keys
        pos = np.where(hit, self._order[j], -1)
        out[np.flatnonzero(ok)] = pos
        return out

    def contains(self, pts) -> np.ndarray:
        return self.positions(pts) >= 0


@dataclass(frozen=True)
class LatticeBox:
    """Inclusive integer box {u : lower <= u <= upper}; empty if any lower > upper."""

    lower: tuple[int, ...]
    upper: tuple[int, ...]

    @property
    def is_empty(self) -> bool:
        return any(a > b for a, b in zip(self.lower, self.upper))

    @property
    def size(self) -> int:
        if self.is_empty:
            return 0
        return int(np.prod([b - a + 1 for a, b in zip(self.lower, self.upper)]))

    def points(self) -> np.ndarray:
        if self.is_empty:
            return np.zeros((0, len(self.lower)), np.int64)
        axes = [np.arange(a, b + 1) for a, b in zip(self.lower, self.upper)]
        return np.array(list(itertools.product(*axes)), np.int64).reshape(-1, len(self.lower))

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(pts)
        return np.all((p >= self.lower) & (p <= self.upper), axis=1)

    def issubset(self, other: "LatticeBox") -> bool:
        if self.is_empty:
            return True
        return all(a >= c and b <= e for a, b, c, e in
                   zip(self.lower, self.upper, other.lower, other.upper))


def _grid(lo_int, hi_int) -> np.ndarray:
    axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo_int, hi_int)]
    if any(len(a) == 0 for a in axes):
        return np.zeros((0, len(axes)), np.int64)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


class LatticeRegion:
    """D_n = (c_n C) ∩ Z^d for a generator C and scaling vector c_n."""

    def __init__(self, generator: PConvexSet, scale: Sequence[float]):
        scale = tuple(float(s) for s in scale)
        if len(scale) != generator.dim:
            raise GeometryError("scale length differs from dimension")
        if any(s <= 0 for s in scale):
            raise GeometryError("scaling entries must be positive")
        self.generator = generator
        self.scale = scale
        self.scaled_set = generator.scaled(scale)
        self.empty_warning = False

    @property
    def dim(self) -> int:
        return self.generator.dim

    def contains(self, pts) -> np.ndarray:
        return self.scaled_set.contains(pts)

    @cached_property
    def c_bound(self) -> float:
        """Smallest c with C_n inside c_n [-c, c]^d."""
        lo, hi = self.generator.bounds()
        return float(np.max(np.maximum(np.abs(lo), np.abs(hi))))

    @property
    def bounding_box(self) -> LatticeBox:
        """K_n = Z^d ∩ c_n [-c, c]^d."""
        c = self.c_bound
        s = np.array(self.scale)
        return LatticeBox(tuple(np.ceil(-c * s).astype(int)), tuple(np.floor(c * s).astype(int)))

    @cached_property
    def points(self) -> np.ndarray:
        chunks = []
        for b in self.scaled_set.bodies:
            lo, hi = b.bounds()
            g = _grid(np.ceil(lo).astype(np.int64), np.floor(hi).astype(np.int64))
            chunks.append(g[b.contains(g)])
        pts = np.concatenate(chunks) if chunks else np.zeros((0, self.dim), np.int64)
        pts = lex_sort(pts) if len(pts) else pts.reshape(0, self.dim)
        if len(pts) == 0:
            self.empty_warning = True
            warnings.warn("lattice region contains no integer points", RuntimeWarning)
        return pts

    @property
    def size(self) -> int:
        return len(self.points)

    @cached_property
    def index(self) -> LatticeIndex:
        return LatticeIndex(self.points)


def lattice_points(region: LatticeRegion) -> np.ndarray:
    """Integer points of c_n C in lexicographic order."""
    return region.points


# --------------------------------------------------------------- partition


def block_side(c: Sequence[float], k: int) -> tuple[int, ...]:
    """t_ell = floor(c_ell / k^(1/d)); exact when k is a perfect d-th power."""
    d = len(c)
    root = round(k ** (1.0 / d))
    if root**d == k:
        t = [int(math.floor(float(ci) / root)) for ci in c]
    else:
        t = [int(math.floor(float(ci) / k ** (1.0 / d))) for ci in c]
    for ell, te in enumerate(t):
        if te < 1:
            raise PartitionTooFine(ell, c[ell], k)
    return tuple(t)


@dataclass(frozen=True)
class DependenceSpec:
    m: int
    gamma: tuple[int, ...]
    alpha: float = 0.0

    def __post_init__(self):
        if self.m < 0 or self.alpha < 0 or any(g < 1 for g in self.gamma):
            raise GeometryError("invalid dependence spec")


class BlockPartition:
    """Blocks J_z = t(z + [0,1)^d) ∩ Z^d over a lattice region, with P ⊆ Q⁻ ⊆ Q."""

    def __init__(self, region: LatticeRegion, k: int, t, P, Q, Qminus):
        self.region = region
        self.k = int(k)
        self.t = tuple(int(x) for x in t)
        self.P = P
        self.Q = Q
        self.Qminus = Qminus

    @property
    def dim(self) -> int:
        return len(self.t)

    @property
    def p(self) -> int:
        return len(self.P)

    @property
    def q(self) -> int:
        return len(self.Q)

    @property
    def block_size(self) -> int:
        return int(np.prod(self.t))

    def block(self, z) -> LatticeBox:
        z = np.asarray(z, np.int64)
        t = np.array(self.t)
        return LatticeBox(tuple(z * t), tuple((z + 1) * t - 1))

    def block_of(self, pts) -> np.ndarray:
        return np.floor_divide(np.asarray(pts, np.int64), np.array(self.t, np.int64))

    def _union(self, zs) -> np.ndarray:
        if len(zs) == 0:
            return np.zeros((0, self.dim), np.int64)
        off = self.block((0,) * self.dim).points()
        t = np.array(self.t, np.int64)
        pts = (zs[:, None, :] * t + off[None, :, :]).reshape(-1, self.dim)
        return lex_sort(pts)

    @cached_property
    def d_minus(self) -> np.ndarray:
        return self._union(self.P)

    @cached_property
    def d_plus(self) -> np.ndarray:
        return self._union(self.Q)

    @cached_property
    def d_tilde(self) -> np.ndarray:
        return self._union(self.Qminus)

    def corners_rescaled(self, zs) -> np.ndarray:
        """Cluster points z t / c_n."""
        return np.asarray(zs, float) * np.array(self.t, float) / np.array(self.region.scale)


def build_partition(region: LatticeRegion, k: int) -> BlockPartition:
    if k < 1:
        raise GeometryError("k must be a positive integer")
    t = block_side(region.scale, k)
    tt = np.array(t, float)
    lo, hi = region.scaled_set.bounds()
    zlo = np.floor(lo / tt).astype(np.int64) - 1
    zhi = np.floor(hi / tt).astype(np.int64) + 1
    zs = _grid(zlo, zhi)
    blo = zs * tt
    bhi = blo + tt
    S = region.scaled_set
    inQ = S.meets_halfopen(blo, bhi)
    inP = np.zeros(len(zs), bool)
    inP[inQ] = S.contains_halfopen(blo[inQ], bhi[inQ])
    inQm = S.contains(blo)
    return BlockPartition(region, k, t, zs[inP], zs[inQ], zs[inQm])


def default_k(scale: Sequence[float], gamma: int = 0) -> int:
    """k = floor(min_ell c_ell^(d/2)), lowered until t >= 4 * gamma."""
    d = len(scale)
    k = max(1, int(math.floor(min(scale) ** (d / 2))))
    while k > 1:
        try:
            t = block_side(scale, k)
        except PartitionTooFine:
            k -= 1
            continue
        if min(t) >= 4 * gamma:
            break
        k -= 1
    return k


def separated_core(z, partition: BlockPartition, dep: DependenceSpec,
                   two_sided: bool = False) -> LatticeBox:
    """H_z (upper faces pulled in by gamma), or H̃_z with both faces pulled in."""
    z = np.asarray(z, np.int64)
    t = np.array(partition.t, np.int64)
    g = np.array(dep.gamma, np.int64)
    lower = z * t + (g if two_sided else 0)
    upper = (z + 1) * t - 1 - g
    return LatticeBox(tuple(int(a) for a in lower), tuple(int(b) for b in upper))


# ------------------------------------------------------------------ order


class LexOrder:
    """Lexicographic order on Z^d, coordinate 1 most significant."""

    name = "lexicographic"

    @staticmethod
    def precedes(u, v) -> bool:
        diff = np.asarray(v) - np.asarray(u)
        nz = np.flatnonzero(diff)
        return bool(len(nz)) and diff[nz[0]] > 0

    @staticmethod
    def is_positive(offsets) -> np.ndarray:
        """Rows u with 0 ≺ u."""
        o = np.atleast_2d(offsets)
        nz = o != 0
        first = np.argmax(nz, axis=1)
        lead = o[np.arange(len(o)), first]
        return nz.any(axis=1) & (lead > 0)


LEX = LexOrder()


@lru_cache(maxsize=64)
def _successor_offsets(half: tuple[int, ...]) -> np.ndarray:
    box = _grid([-h for h in half], list(half))
    off = box[LEX.is_positive(box)]
    off.setflags(write=False)
    return off


def successor_offsets(half_widths: Sequence[int]) -> np.ndarray:
    """{u in [-h, h] ∩ Z^d : 0 ≺ u}, lexicographically ordered."""
    return _successor_offsets(tuple(int(h) for h in half_widths))


def order_neighborhood(v, m: int | None = None, t: Sequence[int] | None = None,
                       order: LexOrder = LEX) -> np.ndarray:
    """A_v^(m) (pass ``m``) or A_v^{n,k} (pass block sides ``t``)."""
    if (m is None) == (t is None):
        raise ValueError("give exactly one of m or t")
    v = np.asarray(v, np.int64)
    half = (int(m),) * len(v) if m is not None else tuple(t)
    return v + successor_offsets(half)


# -------------------------------------------------------- Minkowski / volumes


def minkowski_sum(D, B) -> np.ndarray:
    D = np.asarray(D, np.int64)
    B = np.asarray(B, np.int64)
    if len(B) == 0:
        raise GeometryError("Minkowski sum with an empty set")
    if len(D) == 0:
        return D.reshape(0, B.shape[1])
    lo = D.min(axis=0) + B.min(axis=0)
    shape = D.max(axis=0) + B.max(axis=0) - lo + 1
    keys = np.unique(np.concatenate([encode(D + b, lo, shape) for b in B]))
    return np.column_stack(np.unravel_index(keys, tuple(shape))) + lo


def minkowski_sum_count(D, B) -> int:
    """|D ⊕ B| by exact enumeration."""
    return len(minkowski_sum(D, B))


def intrinsic_volumes(body) -> np.ndarray:
    """V_0, ..., V_d of a box or a ball."""
    if body.kind == "box":
        sides = np.subtract(body.upper, body.lower)
        d = len(sides)
        return np.array([float(sum(np.prod(c) for c in itertools.combinations(sides, j)))
                         if j else 1.0 for j in range(d + 1)])
    if body.kind == "ball" or (body.kind == "ellipsoid" and len(set(body.semi_axes)) == 1):
        d, r = body.dim, body.semi_axes[0]
        return np.array([math.comb(d, j) * unit_ball_volume(d) / unit_ball_volume(d - j) * r**j
                         for j in range(d + 1)])
    raise UnsupportedBody("intrinsic volumes are only available for boxes and balls")


@dataclass
class AssumptionRow:
    n: int
    scale: tuple
    vj_sums: list  # None where a body kind is unsupported
    c_bound: float
    volume_ratio: float


@dataclass
class AssumptionReport:
    rows: list
    violations: list
    unchecked: bool

    @property
    def passed(self) -> bool:
        return not self.violations


def _grows(seq, threshold=0.10) -> bool:
    half = seq[len(seq) // 2:]
    if len(half) < 2 or any(s is None for s in half):
        return False
    inc = all(b > a for a, b in zip(half, half[1:]))
    return inc and half[-1] > half[0] * (1 + threshold)


def assumption_report(generator: PConvexSet, scales, sets: Iterable[PConvexSet] | None = None,
                      labels=None) -> AssumptionReport:
    """Check bounded scaled intrinsic volumes, the c-bound and |C_n| ~ prod c_n.

    ``sets`` are the C_n; by default C_n = c_n * generator.
    """
    scales = [tuple(float(x) for x in s) for s in scales]
    sets = list(sets) if sets is not None else [generator.scaled(s) for s in scales]
    labels = list(labels) if labels is not None else list(range(1, len(scales) + 1))
    d = generator.dim
    rows, unchecked = [], False
    for n, s, Cn in zip(labels, scales, sets):
        inv = np.array(s)
        vj = []
        for j in range(1, d):
            total = 0.0
            for b in Cn.bodies:
                try:
                    total += intrinsic_volumes(b.scaled(1 / inv))[j]
                except UnsupportedBody:
                    total = None
                    unchecked = True
                    break
            vj.append(total)
        lo, hi = Cn.bounds()
        cb = float(np.max(np.maximum(np.abs(lo), np.abs(hi)) / inv))
        vol, _ = Cn.volume()
        rows.append(AssumptionRow(n, s, vj, cb, float(np.prod(inv)) / vol))
    violations = []
    for j in range(1, d):
        if _grows([r.vj_sums[j - 1] for r in rows]):
            violations.append(f"V_{j} sum grows")
    if _grows([r.c_bound for r in rows]):
        violations.append("c bound grows")
    ratios = [r.volume_ratio for r in rows]
    if _grows(ratios) or _grows([1 / x for x in ratios]):
        violations.append("volume ratio drifts")
    return AssumptionReport(rows, violations, unchecked)
