"""Cluster point measures built from threshold exceedances of a field sample.

Three kinds are produced:

* ``grid``: one cluster per block J_z (z in Q⁻) with an exceedance, placed
  at the rescaled block corner z t / c_n;
* ``distance``: connected components of the rescaled exceedances under
  chains of steps no longer than sqrt(d) / k^(1/d), each placed at the member
  minimising the summed squared distance to the other members;
* ``exceedance``: every exceedance in D_n is its own cluster.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import BlockPartition, LatticeIndex, LatticeRegion, PConvexSet


class ClusterError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterMeasure:
    kind: str
    points: np.ndarray  # (X, d) cluster points in C-coordinates
    anchors: np.ndarray  # (X, d) lattice anchors on the original scale
    sizes: np.ndarray  # (X,)
    members: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.sizes)

    def restrict(self, mask) -> "ClusterMeasure":
        mask = np.asarray(mask, bool)
        members = tuple(m for m, keep in zip(self.members, mask) if keep) if self.members else ()
        return ClusterMeasure(self.kind, self.points[mask], self.anchors[mask],
                              self.sizes[mask], members, dict(self.meta))


@dataclass(frozen=True)
class RegionQuery:
    """Union of half-open boxes (a, b] in C-coordinates, or all of a set C."""

    boxes: tuple = ()
    whole: PConvexSet | None = None

    def __post_init__(self):
        norm = []
        for lo, hi in self.boxes:
            lo, hi = tuple(map(float, lo)), tuple(map(float, hi))
            if len(lo) != len(hi) or any(a > b for a, b in zip(lo, hi)):
                raise ClusterError(f"invalid query box {lo}, {hi}")
            norm.append((lo, hi))
        object.__setattr__(self, "boxes", tuple(norm))

    @classmethod
    def all_of(cls, C: PConvexSet) -> "RegionQuery":
        return cls((), C)

    def is_disjoint(self) -> bool:
        for (a, b), (c, d) in itertools.combinations(self.boxes, 2):
            if all(max(x, z) < min(y, w) for x, y, z, w in zip(a, b, c, d)):
                return False
        return True

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, float))
        if self.whole is not None:
            return self.whole.contains(p) if len(p) else np.zeros(0, bool)
        out = np.zeros(len(p), bool)
        for lo, hi in self.boxes:
            out |= np.all((p > np.array(lo)) & (p <= np.array(hi)), axis=1)
        return out


def count(measure: ClusterMeasure, query: RegionQuery) -> int:
    """Number of cluster points inside the query region."""
    if measure.total == 0:
        return 0
    return int(np.count_nonzero(query.contains(measure.points)))


def _rescale(pts, scale) -> np.ndarray:
    return np.asarray(pts, float) / np.asarray(scale, float)


def exceedance_points(sample, x: float, region, rescale) -> np.ndarray:
    """{v / c_n : v in region, xi_v > x}."""
    region = np.atleast_2d(np.asarray(region, np.int64))
    vals = sample.lookup(region)
    return _rescale(region[vals > x], rescale)


def _exceedances(sample, x, region):
    region = np.atleast_2d(np.asarray(region, np.int64))
    try:
        vals = sample.lookup(region)
    except KeyError as e:
        raise ClusterError(f"sample does not cover the cluster support: {e}") from None
    return region[vals > x]


def grid_from_exceedances(exc, x, partition: BlockPartition, rescale) -> ClusterMeasure:
    d = partition.dim
    meta = {"k": partition.k, "t": partition.t, "x": x}
    if len(exc) == 0:
        return ClusterMeasure("grid", np.zeros((0, d)), np.zeros((0, d), np.int64),
                              np.zeros(0, np.int64), (), meta)
    zs = partition.block_of(exc)
    uz, inv, sizes = np.unique(zs, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    members = tuple(exc[inv == i] for i in range(len(uz)))
    t = np.array(partition.t, np.int64)
    pts = uz * t / np.asarray(rescale, float)
    return ClusterMeasure("grid", pts, uz * t, sizes.astype(np.int64), members, meta)


def grid_clusters(sample, x: float, partition: BlockPartition, rescale=None) -> ClusterMeasure:
    """N_n: blocks J_z, z in Q⁻, whose maximum exceeds x; size Y_z."""
    rescale = partition.region.scale if rescale is None else rescale
    return grid_from_exceedances(_exceedances(sample, x, partition.d_tilde), x, partition, rescale)


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, u):
        root = u
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[u] != root:
            self.parent[u], u = root, self.parent[u]
        return root

    def union(self, u, v):
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return
        if self.rank[ru] < self.rank[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        if self.rank[ru] == self.rank[rv]:
            self.rank[ru] += 1


TIE_RTOL = 1e-12


def link_threshold(d: int, k: int) -> float:
    return math.sqrt(d) / k ** (1.0 / d)


def components(points, threshold: float) -> list[np.ndarray]:
    """Index groups of points chained by steps of length <= threshold.

    Neighbour candidates come from a bucket grid with side slightly above
    ``threshold``, so only the 3^d surrounding buckets are scanned per point.
    Steps equal to the threshold up to a relative 1e-12 count as links: on
    rescaled lattices exact ties are common and squaring rounds them either
    way. Groups are ordered by their smallest index.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    n = len(pts)
    if n == 0:
        return []
    d = pts.shape[1]
    thr2 = threshold * threshold * (1 + TIE_RTOL)
    keys = np.floor(pts / (threshold * (1 + 1e-9))).astype(np.int64)
    buckets: dict[tuple, list[int]] = {}
    for i, key in enumerate(map(tuple, keys.tolist())):
        buckets.setdefault(key, []).append(i)
    uf = UnionFind(n)
    shifts = list(itertools.product((-1, 0, 1), repeat=d))
    for key, idx in buckets.items():
        cand = [j for s in shifts for j in buckets.get(tuple(a + b for a, b in zip(key, s)), ())]
        cand = np.array(cand)
        for i in idx:
            diff = pts[cand] - pts[i]
            close = cand[np.einsum("ij,ij->i", diff, diff) <= thr2]
            for j in close:
                if j > i:
                    uf.union(i, int(j))
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    return sorted((np.array(g) for g in groups.values()), key=lambda g: g[0])


def representative(points) -> int:
    """Index of the member minimising summed squared distances; lexicographic tie-break."""
    pts = np.atleast_2d(np.asarray(points, float))
    if len(pts) == 1:
        return 0
    diff = pts[:, None, :] - pts[None, :, :]
    ss = np.einsum("ijk,ijk->i", diff, diff)
    best = np.flatnonzero(np.isclose(ss, ss.min(), rtol=1e-12, atol=0.0))
    if len(best) == 1:
        return int(best[0])
    cand = pts[best]
    order = np.lexsort(cand.T[::-1])
    return int(best[order[0]])


def distance_from_exceedances(exc, x, partition: BlockPartition, rescale) -> ClusterMeasure:
    d = partition.dim
    thr = link_threshold(d, partition.k)
    meta = {"k": partition.k, "t": partition.t, "x": x, "threshold": thr}
    if len(exc) == 0:
        return ClusterMeasure("distance", np.zeros((0, d)), np.zeros((0, d), np.int64),
                              np.zeros(0, np.int64), (), meta)
    phi = _rescale(exc, rescale)
    groups = components(phi, thr)
    reps = [g[representative(phi[g])] for g in groups]
    return ClusterMeasure(
        "distance", phi[reps], exc[reps], np.array([len(g) for g in groups], np.int64),
        tuple(exc[g] for g in groups), meta)


def distance_clusters(sample, x: float, partition: BlockPartition, rescale=None) -> ClusterMeasure:
    """Ñ_n: chain-linked clusters of exceedances over the same support as the grid kind."""
    rescale = partition.region.scale if rescale is None else rescale
    return distance_from_exceedances(_exceedances(sample, x, partition.d_tilde), x, partition, rescale)


def exceedance_from_points(exc, x, rescale) -> ClusterMeasure:
    exc = np.atleast_2d(np.asarray(exc, np.int64))
    return ClusterMeasure("exceedance", _rescale(exc, rescale), exc,
                          np.ones(len(exc), np.int64), tuple(exc[i:i + 1] for i in range(len(exc))),
                          {"x": x})


def exceedance_clusters(sample, x: float, region: LatticeRegion) -> ClusterMeasure:
    """N̄_n: every exceedance in D_n, placed at v / c_n."""
    return exceedance_from_points(_exceedances(sample, x, region.points), x, region.scale)


# ------------------------------------------------------------ original scale


class SubsetFamily:
    """Disjoint subsets B^g of D_n, each generated by a p-convex set scaled by c_n."""

    def __init__(self, generators, fractions=None, names=None):
        self.generators = list(generators)
        if not self.generators:
            raise ClusterError("empty subset family")
        self.fractions = list(fractions) if fractions is not None else [None] * len(self.generators)
        self.names = list(names) if names is not None else [f"B{g + 1}" for g in range(len(self.generators))]

    def realize(self, region: LatticeRegion) -> list[np.ndarray]:
        """Lattice sets B_n^g = (c_n C_g) ∩ D_n; error if any two overlap."""
        sets = []
        for gen in self.generators:
            sub = LatticeRegion(gen, region.scale).points
            sets.append(sub[region.index.contains(sub)] if len(sub) else sub)
        seen = LatticeIndex(np.concatenate(sets)) if sets else None
        if seen is not None and len(np.unique(seen.points, axis=0)) != len(seen.points):
            raise ClusterError("subset family members overlap")
        return sets

    def fractions_realized(self, region: LatticeRegion) -> list[float]:
        return [len(s) / region.size for s in self.realize(region)]


def original_scale_counts(measure: ClusterMeasure, family_sets, region: LatticeRegion) -> np.ndarray:
    """Per family set, clusters whose original-scale anchor lies in B_n^g ∩ D_n."""
    out = np.zeros(len(family_sets), np.int64)
    if measure.total == 0:
        return out
    in_d = region.index.contains(measure.anchors)
    for g, B in enumerate(family_sets):
        idx = B if isinstance(B, LatticeIndex) else LatticeIndex(B)
        if len(idx):
            out[g] = int(np.count_nonzero(in_d & idx.contains(measure.anchors)))
    return out


def uniform_cluster(measure: ClusterMeasure, rng: np.random.Generator) -> int:
    """Index of a cluster drawn uniformly from the measure."""
    if measure.total == 0:
        raise ClusterError("no clusters to draw from")
    return int(rng.integers(measure.total))
