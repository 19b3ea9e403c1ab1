"""Monte Carlo harness: replication runner, estimators and Poisson goodness of fit."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import clustering as cl
from .config import ExperimentConfig
from .fields import (FieldSample, IIDModel, MovingMaximum, exact_exceed_hazard,
                     exact_max_cdf, theoretical_theta, threshold)
from .geometry import (LEX, BlockPartition, LatticeIndex, LatticeRegion,
                       build_partition, default_k, successor_offsets)


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    n: int = 0

    def within(self, target: float, tol: float) -> bool:
        return abs(self.value - target) <= tol


# ------------------------------------------------------------ lazy fields


class LazyField:
    """A whole-lattice realisation, evaluated on demand from (model, seed, replication)."""

    def __init__(self, model, seed: int, replication: int):
        self.model = model
        self.seed = seed
        self.replication = replication

    def lookup(self, pts) -> np.ndarray:
        return self.model.values(np.atleast_2d(np.asarray(pts, np.int64)), self.seed, self.replication)


def neighborhood_maxima(field, centers, offsets) -> np.ndarray:
    """max over centers[i] + offsets for each i; -inf for an empty offset set."""
    centers = np.atleast_2d(np.asarray(centers, np.int64))
    if len(offsets) == 0 or len(centers) == 0:
        return np.full(len(centers), -np.inf)
    pts = (centers[:, None, :] + offsets[None, :, :]).reshape(-1, centers.shape[1])
    return field.lookup(pts).reshape(len(centers), len(offsets)).max(axis=1)


def _eligible(sample, sites, offsets):
    """Sites whose whole neighbourhood is available in the sample."""
    if not isinstance(sample, FieldSample) or len(offsets) == 0:
        return sites
    lo = sites + offsets.min(axis=0)
    hi = sites + offsets.max(axis=0)
    dom_lo, dom_hi = sample.domain.min(axis=0), sample.domain.max(axis=0)
    inside = np.all((lo >= dom_lo) & (hi <= dom_hi), axis=1)
    sites = sites[inside]
    if len(sites) == 0:
        return sites
    pts = (sites[:, None, :] + offsets[None, :, :]).reshape(-1, sites.shape[1])
    keep = sample.index.contains(pts).reshape(len(sites), len(offsets)).all(axis=1)
    return sites[keep]


def _sites(sample, sites):
    return sample.domain if sites is None else np.atleast_2d(np.asarray(sites, np.int64))


def ratio_estimate(num, den) -> Estimate:
    """Pooled ratio sum(num) / sum(den) with a replication-level delta-method SE."""
    num = np.asarray(num, float)
    den = np.asarray(den, float)
    total = den.sum()
    if total == 0:
        raise EstimationError("no exceedances: the ratio is undefined")
    r = num.sum() / total
    R = len(den)
    if R < 2:
        return Estimate(float(r), float("nan"), int(total))
    resid = num - r * den
    se = math.sqrt(np.sum(resid**2) * R / (R - 1)) / total
    return Estimate(float(r), float(se), int(total))


def _exceeding_sites(sample, x, sites, offsets):
    s = _eligible(sample, _sites(sample, sites), offsets)
    if len(s) == 0:
        return s
    return s[sample.lookup(s) > x]


def estimate_theta_runs(samples, x: float, m: int, order=LEX, sites=None) -> Estimate:
    """Runs estimator: exceedances with no further exceedance among their
    successors in v + [-m, m]^d, pooled over sites and samples."""
    off = successor_offsets((m,) * samples[0].domain.shape[1]
                            if isinstance(samples[0], FieldSample) else (m,) * np.shape(sites)[1])
    num, den = [], []
    for s in samples:
        exc = _exceeding_sites(s, x, sites, off)
        num.append(int(np.count_nonzero(neighborhood_maxima(s, exc, off) <= x)))
        den.append(len(exc))
    return ratio_estimate(num, den)


def estimate_local_index(samples, x: float, partition: BlockPartition, order=LEX, sites=None) -> Estimate:
    """Same ratio with the block-sized successor set A_v^{n,k}."""
    off = successor_offsets(partition.t)
    num, den = [], []
    for s in samples:
        exc = _exceeding_sites(s, x, sites, off)
        num.append(int(np.count_nonzero(neighborhood_maxima(s, exc, off) <= x)))
        den.append(len(exc))
    return ratio_estimate(num, den)


def _split_offsets(t, m):
    half = tuple(max(a, m) for a in t)
    big = successor_offsets(half)
    in_block = np.all(np.abs(big) <= np.array(t), axis=1)
    in_m = np.all(np.abs(big) <= m, axis=1)
    return big, in_block, in_m


@dataclass(frozen=True)
class AntiClustering:
    estimate: float
    se: float
    events: int
    no_events: bool


def anti_clustering_diagnostic(samples, x: float, m: int, partition: BlockPartition,
                               size: int | None = None, sites=None) -> AntiClustering:
    """|D_n| P(M(A^(m)) <= x < xi_0, M(A^{n,k} minus A^(m)) > x), pooled by stationarity."""
    if m < 0:
        raise ValueError("m must be non-negative")
    big, in_block, in_m = _split_offsets(partition.t, m)
    counts, eligible = [], []
    for s in samples:
        cand = _eligible(s, _sites(s, sites), big)
        eligible.append(len(cand))
        exc = cand[s.lookup(cand) > x] if len(cand) else cand
        counts.append(_anti_events(s, exc, x, big, in_block, in_m))
    counts = np.array(counts, float)
    n_sites = float(np.sum(eligible))
    size = size if size is not None else (n_sites / len(samples) if samples else 0)
    if counts.sum() == 0 or n_sites == 0:
        return AntiClustering(0.0, 0.0, 0, True)
    per_site = counts / np.maximum(eligible, 1)
    est = size * counts.sum() / n_sites
    se = size * per_site.std(ddof=1) / math.sqrt(len(per_site)) if len(per_site) > 1 else float("nan")
    return AntiClustering(float(est), float(se), int(counts.sum()), False)


def _anti_events(field, exc, x, big, in_block, in_m) -> int:
    if len(exc) == 0:
        return 0
    pts = (exc[:, None, :] + big[None, :, :]).reshape(-1, exc.shape[1])
    vals = field.lookup(pts).reshape(len(exc), len(big))
    near_ok = np.all(vals[:, in_m] <= x, axis=1) if in_m.any() else np.ones(len(exc), bool)
    far = in_block & ~in_m
    far_hit = np.any(vals[:, far] > x, axis=1) if far.any() else np.zeros(len(exc), bool)
    return int(np.count_nonzero(near_ok & far_hit))


# ----------------------------------------------------------- GOF / tests


@dataclass(frozen=True)
class GofReport:
    n: int
    mean: float
    mean_se: float
    var_mean: float
    var_mean_se: float
    tv: float
    chi2: float
    dof: int
    p_value: float
    intensity: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def poisson_gof(counts, intensity: float) -> GofReport:
    """Compare integer counts with Poisson(intensity)."""
    if not intensity > 0:
        raise ValueError("intensity must be positive")
    c = np.asarray(counts, np.int64)
    if c.size == 0:
        raise ValueError("no counts")
    R = len(c)
    mean = float(c.mean())
    var = float(c.var(ddof=1)) if R > 1 else 0.0
    var_mean = var / mean if mean > 0 else 0.0
    # truncate the reference pmf once its remaining mass is below 1e-9
    jmax = max(int(c.max()), int(stats.poisson.isf(1e-9, intensity)) + 1)
    js = np.arange(jmax + 1)
    ref = stats.poisson.pmf(js, intensity)
    emp = np.bincount(c, minlength=jmax + 1)[: jmax + 1] / R
    tv = 0.5 * (np.abs(emp - ref).sum() + stats.poisson.sf(jmax, intensity))
    chi2, dof, p = _pooled_chi2(c, intensity, R)
    se_mean = math.sqrt(var / R) if R > 1 else float("nan")
    # delta method for var/mean under a Poisson reference: Var(s^2/xbar) ~ (2 + 1/lambda) / R
    lam = max(mean, 1e-12)
    se_vm = math.sqrt((2.0 + 1.0 / lam) / R)
    return GofReport(R, mean, se_mean, var_mean, se_vm, float(min(max(tv, 0.0), 1.0)),
                     chi2, dof, p, float(intensity))


def _pooled_chi2(c, lam, R):
    """Chi-square over bins 0..J-1 plus a pooled upper tail, each with expected count >= 5."""
    edges = []  # bins as [start, end) in count space, last is [start, inf)
    start, acc, j = 0, 0.0, 0
    while True:
        acc += stats.poisson.pmf(j, lam) * R
        tail = stats.poisson.sf(j, lam) * R
        if acc >= 5 and tail >= 5:
            edges.append((start, j + 1))
            start, acc = j + 1, 0.0
        elif tail < 5:
            edges.append((start, None))
            break
        j += 1
    if len(edges) < 2:
        return float("nan"), 0, float("nan")
    obs, exp = [], []
    for lo, hi in edges:
        if hi is None:
            obs.append(np.count_nonzero(c >= lo))
            exp.append(stats.poisson.sf(lo - 1, lam) * R)
        else:
            obs.append(np.count_nonzero((c >= lo) & (c < hi)))
            exp.append((stats.poisson.cdf(hi - 1, lam) - stats.poisson.cdf(lo - 1, lam)) * R)
    obs, exp = np.array(obs, float), np.array(exp, float)
    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    return chi2, dof, float(stats.chi2.sf(chi2, dof))


@dataclass(frozen=True)
class Independence:
    corr: np.ndarray
    max_abs: float
    not_applicable: tuple


def independence_check(matrix) -> Independence:
    """Pairwise Pearson correlations of the columns of an R x G count matrix."""
    M = np.asarray(matrix, float)
    if M.ndim != 2 or M.shape[1] < 2:
        raise ValueError("need at least two columns")
    sd = M.std(axis=0)
    flat = tuple(int(g) for g in np.flatnonzero(sd == 0))
    G = M.shape[1]
    corr = np.full((G, G), np.nan)
    for i in range(G):
        for j in range(G):
            if sd[i] > 0 and sd[j] > 0:
                corr[i, j] = float(np.corrcoef(M[:, i], M[:, j])[0, 1]) if i != j else 1.0
    off = corr[~np.eye(G, dtype=bool)]
    off = off[np.isfinite(off)]
    return Independence(corr, float(np.max(np.abs(off))) if off.size else float("nan"), flat)


# ------------------------------------------------------------ the table


LIST_COLUMNS = ("grid_sizes", "distance_sizes")


class ReplicationTable:
    """One row per replication; list-valued cells hold cluster sizes."""

    def __init__(self, columns, rows, meta=None):
        self.columns = list(columns)
        self.rows = rows
        self.meta = dict(meta or {})

    def __len__(self):
        return len(self.rows)

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def lists(self, name) -> list[np.ndarray]:
        return [np.asarray(r[name], np.int64) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, meta=None) -> "ReplicationTable":
        rd = csv.reader(io.StringIO(text))
        cols = next(rd)
        rows = []
        for line in rd:
            row = {}
            for c, v in zip(cols, line):
                if c in LIST_COLUMNS:
                    row[c] = [int(s) for s in v.split(";")] if v else []
                elif c in ("replication", "scale_index") or c.startswith(("count.", "L.", "runs.", "local.",
                                                                          "anti.", "n_exc", "selected")):
                    row[c] = int(v)
                else:
                    row[c] = float(v)
            rows.append(row)
        return cls(cols, rows, meta)


def _fmt(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(str(int(a)) for a in v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


# ------------------------------------------------------- experiment setup


@dataclass
class ScaleSetup:
    """Everything about one scale that does not change across replications."""

    index: int
    label: object
    region: LatticeRegion
    partition: BlockPartition
    x: float
    support: np.ndarray
    in_d: np.ndarray
    in_tilde: np.ndarray
    queries: dict
    family_names: list
    family_sets: list
    family_fractions: list
    offsets: np.ndarray
    in_block: np.ndarray
    runs_masks: dict
    anti_masks: dict
    order_k: int
    block_max_cdf: float = float("nan")
    corner_counts: dict = field(default_factory=dict)


def resolve_k(cfg: ExperimentConfig, i: int) -> int:
    """The configured k for scale i, applying the default rule for "auto"."""
    k = cfg.k_for(i)
    if k != "auto":
        return int(k)
    if cfg.dependence is not None:
        gamma = max(cfg.dependence.gamma)
    elif cfg.model is not None:
        gamma = max(cfg.model.dependence(cfg.dim).gamma)
    else:
        gamma = 1
    return default_k(cfg.scales[i], gamma)


def setup_scale(cfg: ExperimentConfig, i: int) -> ScaleSetup:
    if cfg.model is None:
        raise EstimationError("config has no model; experiments need one")
    scale = cfg.scales[i]
    region = LatticeRegion(cfg.generator, scale)
    if region.size == 0:
        raise EstimationError(f"scale {scale}: empty lattice region")
    partition = build_partition(region, resolve_k(cfg, i))
    thr = threshold(cfg.model.marginal, region.size, cfg.tau)
    support = np.unique(np.concatenate([region.points, partition.d_tilde]), axis=0)
    idx = LatticeIndex(support)
    in_d = np.zeros(len(support), bool)
    in_d[idx.positions(region.points)] = True
    in_tilde = np.zeros(len(support), bool)
    if len(partition.d_tilde):
        in_tilde[idx.positions(partition.d_tilde)] = True
    queries = {"C": cl.RegionQuery.all_of(cfg.generator)}
    for name, boxes in cfg.queries.items():
        queries[name] = cl.RegionQuery(boxes)
    fam = cl.SubsetFamily([m.generator for m in cfg.family], [m.fraction for m in cfg.family],
                          [m.name for m in cfg.family]) if cfg.family else None
    fam_sets = fam.realize(region) if fam else []
    ms = set(cfg.estimators.runs_m) | set(cfg.estimators.anti_clustering_m)
    m_max = max(ms) if ms else 0
    need_block = cfg.estimators.local_index or bool(cfg.estimators.anti_clustering_m)
    t = partition.t if need_block else (0,) * cfg.dim
    half = tuple(max(a, m_max) for a in t)
    off = successor_offsets(half)
    in_block = np.all(np.abs(off) <= np.array(t), axis=1)
    runs_masks = {m: np.all(np.abs(off) <= m, axis=1) for m in cfg.estimators.runs_m}
    anti_masks = {m: (np.all(np.abs(off) <= m, axis=1), in_block & ~np.all(np.abs(off) <= m, axis=1))
                  for m in cfg.estimators.anti_clustering_m}
    corners = partition.corners_rescaled(partition.Qminus)
    corner_counts = {n: int(np.count_nonzero(q.contains(corners))) for n, q in queries.items()}
    block = partition.block((0,) * cfg.dim).points()
    return ScaleSetup(i, cfg.labels[i] if cfg.labels else i, region, partition, thr.level, support,
                      in_d, in_tilde, queries, [m.name for m in cfg.family],
                      [LatticeIndex(s) for s in fam_sets],
                      [len(s) / region.size for s in fam_sets], off, in_block, runs_masks,
                      anti_masks, max(cfg.estimators.order_k),
                      exact_max_cdf(cfg.model, block, thr.level), corner_counts)


def _columns(cfg: ExperimentConfig, st: ScaleSetup) -> list:
    cols = ["scale_index", "replication", "max"]
    cols += [f"order_{j}" for j in range(1, st.order_k + 1)]
    cols += ["n_exc", "n_exc_tilde"]
    for kind in ("grid", "distance", "exceedance"):
        cols += [f"count.{kind}.{q}" for q in st.queries]
    for kind in ("grid", "distance", "exceedance"):
        cols += [f"L.{kind}.{g}" for g in st.family_names]
    cols += [f"runs.m{m}" for m in cfg.estimators.runs_m]
    if cfg.estimators.local_index:
        cols += ["local.ok"]
    cols += [f"anti.m{m}" for m in cfg.estimators.anti_clustering_m]
    cols += ["selected_size", "grid_sizes", "distance_sizes"]
    return cols


def replicate(cfg: ExperimentConfig, st: ScaleSetup, rep: int) -> dict:
    """All per-replication statistics for one scale."""
    model, seed = cfg.model, cfg.seed
    scale = st.region.scale
    vals = model.values(st.support, seed, rep)
    row = {"scale_index": st.index, "replication": rep}
    vd = vals[st.in_d]
    K = min(st.order_k, len(vd))
    top = -np.sort(-np.partition(vd, len(vd) - K)[len(vd) - K:]) if K else np.zeros(0)
    row["max"] = float(top[0])
    for j in range(1, st.order_k + 1):
        row[f"order_{j}"] = float(top[j - 1]) if j <= K else float("-inf")
    hit = vals > st.x
    exc_d = st.support[hit & st.in_d]
    exc_t = st.support[hit & st.in_tilde]
    row["n_exc"] = len(exc_d)
    row["n_exc_tilde"] = len(exc_t)

    grid = cl.grid_from_exceedances(exc_t, st.x, st.partition, scale)
    dist = cl.distance_from_exceedances(exc_t, st.x, st.partition, scale)
    exce = cl.exceedance_from_points(exc_d, st.x, scale)
    for kind, meas in (("grid", grid), ("distance", dist), ("exceedance", exce)):
        for q, query in st.queries.items():
            row[f"count.{kind}.{q}"] = cl.count(meas, query)
        if st.family_sets:
            Ls = cl.original_scale_counts(meas, st.family_sets, st.region)
            for g, name in enumerate(st.family_names):
                row[f"L.{kind}.{name}"] = int(Ls[g])

    field_ = LazyField(model, seed, rep)
    if len(exc_d) and (st.runs_masks or st.anti_masks or cfg.estimators.local_index):
        pts = (exc_d[:, None, :] + st.offsets[None, :, :]).reshape(-1, exc_d.shape[1])
        nb = field_.lookup(pts).reshape(len(exc_d), len(st.offsets)) > st.x
    else:
        nb = np.zeros((len(exc_d), len(st.offsets)), bool)
    for m, mask in st.runs_masks.items():
        row[f"runs.m{m}"] = int(np.count_nonzero(~nb[:, mask].any(axis=1)))
    if cfg.estimators.local_index:
        row["local.ok"] = int(np.count_nonzero(~nb[:, st.in_block].any(axis=1)))
    for m, (near, far) in st.anti_masks.items():
        row[f"anti.m{m}"] = int(np.count_nonzero(~nb[:, near].any(axis=1) & nb[:, far].any(axis=1)))

    in_c = st.queries["C"].contains(dist.points) if dist.total else np.zeros(0, bool)
    dist_c = dist.restrict(in_c)
    if dist_c.total:
        pick = cl.uniform_cluster(dist_c, np.random.default_rng([seed, rep, 1]))
        row["selected_size"] = int(dist_c.sizes[pick])
    else:
        row["selected_size"] = 0
    row["grid_sizes"] = grid.sizes.tolist()
    row["distance_sizes"] = dist_c.sizes.tolist()
    return row


def _threads(threads):
    if threads:
        return max(1, int(threads))
    env = os.environ.get("EXFIELD_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def run_experiment(cfg: ExperimentConfig, threads: int | None = None, scale_index: int | None = None):
    """Run every replication for each scale; returns one ReplicationTable per scale."""
    indices = range(len(cfg.scales)) if scale_index is None else [scale_index]
    tables = []
    n_threads = _threads(threads)
    for i in indices:
        st = setup_scale(cfg, i)
        reps = range(cfg.replications)
        if n_threads == 1:
            rows = [replicate(cfg, st, r) for r in reps]
        else:
            with ThreadPoolExecutor(n_threads) as ex:
                rows = list(ex.map(lambda r: replicate(cfg, st, r), reps, chunksize=16))
        tables.append(ReplicationTable(_columns(cfg, st), rows, {"setup": st}))
    return tables


# ------------------------------------------------------------- estimators


def estimate_max_cdf(table, x: float) -> Estimate:
    maxima = table.column("max") if isinstance(table, ReplicationTable) else np.asarray(table, float)
    R = len(maxima)
    p = float(np.mean(maxima <= x))
    return Estimate(p, math.sqrt(p * (1 - p) / R), R)


def order_statistic_cdf(table: ReplicationTable, k: int, x: float) -> Estimate:
    """P(xi_(k) <= x) as the fraction of replications with N̄_n(C) <= k - 1."""
    n = table.column("count.exceedance.C")
    p = float(np.mean(n <= k - 1))
    return Estimate(p, math.sqrt(p * (1 - p) / len(n)), len(n))


def order_statistic_direct(table: ReplicationTable, k: int, x: float) -> Estimate:
    col = f"order_{k}"
    if col in table.columns:
        vals = table.column(col)
        p = float(np.mean(vals <= x))
    else:
        p = 1.0
    return Estimate(p, math.sqrt(p * (1 - p) / len(table)), len(table))


def theta_runs_from_table(table: ReplicationTable, m: int) -> Estimate:
    return ratio_estimate(table.column(f"runs.m{m}"), table.column("n_exc"))


def local_index_from_table(table: ReplicationTable) -> Estimate:
    return ratio_estimate(table.column("local.ok"), table.column("n_exc"))


def mean_cluster_size(table: ReplicationTable, kind: str, ell: int | None = None) -> Estimate:
    """Grid: pooled mean of Y_z over counted blocks. Distance: mean size of the
    uniformly drawn cluster per replication with Ñ_n(C) > 0 (or = ell)."""
    if kind == "grid":
        if ell is not None:
            keep = table.column("count.grid.C") == ell
            sizes = [s for s, k in zip(table.lists("grid_sizes"), keep) if k]
        else:
            sizes = table.lists("grid_sizes")
        flat = np.concatenate(sizes) if sizes else np.zeros(0)
        if flat.size == 0:
            raise EstimationError("no qualifying clusters")
        per_rep_sum = np.array([s.sum() for s in sizes], float)
        per_rep_n = np.array([len(s) for s in sizes], float)
        return ratio_estimate(per_rep_sum, per_rep_n)
    if kind == "distance":
        n = table.column("count.distance.C")
        sel = table.column("selected_size")
        keep = n > 0 if ell is None else n == ell
        if not keep.any():
            raise EstimationError("no qualifying replications")
        v = sel[keep].astype(float)
        se = v.std(ddof=1) / math.sqrt(len(v)) if len(v) > 1 else float("nan")
        return Estimate(float(v.mean()), float(se), int(len(v)))
    raise ValueError(f"unknown cluster kind {kind!r}")


def mean_cluster_size_all(table: ReplicationTable, kind: str = "distance") -> Estimate:
    """Average over every counted cluster, not only the drawn one."""
    sizes = table.lists(f"{kind}_sizes")
    return ratio_estimate([s.sum() for s in sizes], [len(s) for s in sizes])


@dataclass(frozen=True)
class Representation:
    lhs: Estimate
    rhs: Estimate
    rhs_exact: float | None

    @property
    def difference(self) -> float:
        return self.lhs.value - self.rhs.value


def representation_check(table: ReplicationTable, x: float, hazard_exact: float | None = None
                         ) -> Representation:
    """P(M(D_n) <= x) against exp(-|D_n| P(M(A_0^{n,k}) <= x < xi_0))."""
    lhs = estimate_max_cdf(table, x)
    h = table.column("local.ok").astype(float)
    hbar = float(h.mean())
    se_h = float(h.std(ddof=1) / math.sqrt(len(h))) if len(h) > 1 else float("nan")
    rhs = Estimate(math.exp(-hbar), math.exp(-hbar) * se_h, len(h))
    exact = math.exp(-hazard_exact) if hazard_exact is not None else None
    return Representation(lhs, rhs, exact)


# ---------------------------------------------------------------- summary


def summarize(cfg: ExperimentConfig, table: ReplicationTable) -> dict:
    """Flat dictionary of estimates, standard errors, exact references and GOF reports."""
    st: ScaleSetup = table.meta["setup"]
    model = cfg.model
    x = st.x
    theta = theoretical_theta(model)
    out = {
        "scale": list(st.region.scale), "label": st.label, "D_n": st.region.size,
        "k": st.partition.k, "t": list(st.partition.t), "p": st.partition.p, "q": st.partition.q,
        "qminus": len(st.partition.Qminus), "x_n": x, "tau": cfg.tau, "theta": theta,
        "replications": len(table),
    }
    mc = estimate_max_cdf(table, x)
    out["max_cdf"], out["max_cdf_se"] = mc.value, mc.se
    out["max_cdf_exact"] = exact_max_cdf(model, st.region.points, x)
    out["max_cdf_limit"] = math.exp(-theta * cfg.tau)
    for m in cfg.estimators.runs_m:
        try:
            e = theta_runs_from_table(table, m)
            out[f"theta_runs_m{m}"], out[f"theta_runs_m{m}_se"] = e.value, e.se
        except EstimationError:
            out[f"theta_runs_m{m}"] = None
    if cfg.estimators.local_index:
        try:
            e = local_index_from_table(table)
            out["theta_local"], out["theta_local_se"] = e.value, e.se
        except EstimationError:
            out["theta_local"] = None
        hz = st.region.size * exact_exceed_hazard(model, successor_offsets(st.partition.t), x)
        rep = representation_check(table, x, hz)
        out["representation_lhs"], out["representation_lhs_se"] = rep.lhs.value, rep.lhs.se
        out["representation_rhs"], out["representation_rhs_se"] = rep.rhs.value, rep.rhs.se
        out["representation_rhs_exact"] = rep.rhs_exact
        out["representation_diff"] = abs(rep.difference)
    for m in cfg.estimators.anti_clustering_m:
        col = table.column(f"anti.m{m}").astype(float)
        out[f"anti_m{m}"] = float(col.mean())
        out[f"anti_m{m}_se"] = float(col.std(ddof=1) / math.sqrt(len(col))) if len(col) > 1 else None
    for kind in ("grid", "distance", "exceedance"):
        lam_total = cfg.tau * (1.0 if kind == "exceedance" else theta)
        for q, query in st.queries.items():
            vol = 1.0 if q == "C" else _query_volume(query)
            g = poisson_gof(table.column(f"count.{kind}.{q}"), lam_total * vol)
            for key, val in g.to_dict().items():
                out[f"{kind}.{q}.{key}"] = val
            if kind == "grid":
                out[f"grid.{q}.mean_exact"] = st.corner_counts[q] * (1.0 - st.block_max_cdf)
    out["mismatch_grid_distance"] = float(np.mean(table.column("count.grid.C") != table.column("count.distance.C")))
    for kind in ("grid", "distance"):
        try:
            e = mean_cluster_size(table, kind)
            out[f"mean_size_{kind}"], out[f"mean_size_{kind}_se"] = e.value, e.se
        except EstimationError:
            out[f"mean_size_{kind}"] = None
    for ell in (1, 2):
        try:
            e = mean_cluster_size(table, "distance", ell)
            out[f"mean_size_distance_eq{ell}"], out[f"mean_size_distance_eq{ell}_se"] = e.value, e.se
        except EstimationError:
            out[f"mean_size_distance_eq{ell}"] = None
    try:
        out["mean_size_distance_all"] = mean_cluster_size_all(table).value
    except EstimationError:
        out["mean_size_distance_all"] = None
    for k in cfg.estimators.order_k:
        e = order_statistic_cdf(table, k, x)
        out[f"order_cdf_k{k}"], out[f"order_cdf_k{k}_se"] = e.value, e.se
        out[f"order_cdf_k{k}_direct"] = order_statistic_direct(table, k, x).value
        out[f"order_cdf_k{k}_limit"] = math.exp(-cfg.tau) * sum(cfg.tau**j / math.factorial(j) for j in range(k))
    if st.family_names:
        for kind in ("grid", "distance", "exceedance"):
            lam = cfg.tau * (1.0 if kind == "exceedance" else theta)
            cols = [table.column(f"L.{kind}.{g}") for g in st.family_names]
            for name, col, frac in zip(st.family_names, cols, st.family_fractions):
                g = poisson_gof(col, lam * frac)
                out[f"L.{kind}.{name}.mean"] = g.mean
                out[f"L.{kind}.{name}.mean_se"] = g.mean_se
                out[f"L.{kind}.{name}.var_mean"] = g.var_mean
                out[f"L.{kind}.{name}.fraction"] = frac
            if len(cols) >= 2:
                ind = independence_check(np.column_stack(cols))
                out[f"L.{kind}.max_abs_corr"] = ind.max_abs
    return out


def _query_volume(query: cl.RegionQuery) -> float:
    from .geometry import Box, PConvexSet
    if not query.boxes:
        return 0.0
    return PConvexSet(tuple(Box(lo, hi) for lo, hi in query.boxes)).volume()[0]


@dataclass(frozen=True)
class CheckResult:
    name: str
    statistic: str
    value: float | None
    lower: float
    upper: float
    passed: bool


def evaluate_checks(cfg: ExperimentConfig, summaries: list, profile: str = "desk") -> list:
    results = []
    for c in cfg.checks:
        s = summaries[c.scale_index]
        v = s.get(c.statistic)
        lo, hi = c.bounds(profile)
        ok = v is not None and np.isfinite(v) and lo <= v <= hi
        results.append(CheckResult(c.name, c.statistic, v, lo, hi, bool(ok)))
    return results
