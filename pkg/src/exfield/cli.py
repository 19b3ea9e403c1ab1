"""Command-line front end.

Exit codes: 0 on success, 1 when a configured acceptance check fails,
2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis as an
from . import clustering as cl
from .config import ConfigError, ExperimentConfig, load_config
from .fields import FieldSample, ModelError, threshold
from .geometry import (GeometryError, LatticeRegion, assumption_report, build_partition)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ output


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return f"{float(v):.12g}"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.12g}") if math.isfinite(v) else None
    return v


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


# ------------------------------------------------------------- subcommands


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _scale_index(cfg, i):
    n = len(cfg.scales)
    if not -n <= i < n:
        raise UsageError(f"--scale-index {i} out of range for {n} scales")
    return i % n


def cmd_geometry_report(args) -> int:
    cfg = _load(args)
    report = assumption_report(cfg.generator, cfg.scales, labels=cfg.labels)
    d = cfg.dim
    header = (["n", "D_n", "C_n", "p", "q", "qminus", "k"] + [f"t_{i + 1}" for i in range(d)]
              + [f"v{j}_sum" for j in range(1, d)] + ["c_bound"])
    rows = []
    for i, (scale, row) in enumerate(zip(cfg.scales, report.rows)):
        region = LatticeRegion(cfg.generator, scale)
        part = build_partition(region, an.resolve_k(cfg, i))
        vol = cfg.generator.scaled(scale).volume()[0]
        rows.append([row.n, region.size, vol, part.p, part.q, len(part.Qminus), part.k,
                     *part.t, *row.vj_sums, row.c_bound])
    out = Path(args.out)
    write_atomic(out / "geometry_report.csv", _csv(header, rows))
    status = "pass" if report.passed else "violations: " + "; ".join(report.violations)
    print(f"geometry-report: {len(rows)} scales, assumptions {status}"
          + (" (some bodies unchecked)" if report.unchecked else ""))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    i = _scale_index(cfg, args.scale_index)
    st = an.setup_scale(cfg, i)
    vals = cfg.model.values(st.support, cfg.seed, args.replication)
    d = cfg.dim
    header = [f"v_{j + 1}" for j in range(d)] + ["value"]
    rows = [[*map(int, p), v] for p, v in zip(st.support, vals)]
    out = Path(args.out)
    write_atomic(out / "field.csv", _csv(header, rows))
    print(f"simulate: {len(rows)} sites, replication {args.replication}, threshold {st.x:.12g}")
    return EXIT_OK


def read_field_csv(path) -> FieldSample:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise UsageError(f"field file not found: {path}") from None
    rd = csv.reader(io.StringIO(text))
    header = next(rd, None)
    if not header or header[-1] != "value" or not all(h.startswith("v_") for h in header[:-1]):
        raise UsageError(f"{path}: expected header v_1..v_d,value")
    rows = [r for r in rd if r]
    pts = np.array([[int(x) for x in r[:-1]] for r in rows], np.int64).reshape(-1, len(header) - 1)
    vals = np.array([float(r[-1]) for r in rows])
    return FieldSample(pts, vals)


def cmd_cluster(args) -> int:
    cfg = _load(args)
    i = _scale_index(cfg, args.scale_index)
    sample = read_field_csv(args.field)
    region = LatticeRegion(cfg.generator, cfg.scales[i])
    part = build_partition(region, an.resolve_k(cfg, i))
    if args.threshold is not None:
        x = args.threshold
    elif cfg.model is not None:
        x = threshold(cfg.model.marginal, region.size, cfg.tau).level
    else:
        raise UsageError("need a model in the config or --threshold")
    try:
        measures = [cl.grid_clusters(sample, x, part), cl.distance_clusters(sample, x, part),
                    cl.exceedance_clusters(sample, x, region)]
    except cl.ClusterError as e:
        raise UsageError(str(e)) from None
    d = cfg.dim
    header = ["cluster_id", "kind"] + [f"rep_{j + 1}" for j in range(d)] + ["size"]
    rows, summary = [], {"threshold": x, "k": part.k, "t": list(part.t)}
    for m in measures:
        for cid, (pt, size) in enumerate(zip(m.points, m.sizes)):
            rows.append([cid, m.kind, *pt, size])
        hist = np.bincount(m.sizes) if m.total else np.zeros(1, np.int64)
        summary[m.kind] = {"X": m.total,
                           "sizes_histogram": {str(s): int(c) for s, c in enumerate(hist) if c}}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r[0], r[1], *(fmt(v) for v in r[2:])])
    out = Path(args.out)
    write_atomic(out / "clusters.csv", buf.getvalue())
    write_atomic(out / "clusters.json", dumps_json(summary))
    print("cluster: " + ", ".join(f"{m.kind} X={m.total}" for m in measures))
    return EXIT_OK


def _write_checks(cfg, summaries, profile):
    results = an.evaluate_checks(cfg, summaries, profile)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.statistic}={fmt(r.value)} "
              f"in [{fmt(r.lower)}, {fmt(r.upper)}]")
    return results


def cmd_experiment(args) -> int:
    cfg = _load(args)
    tables = an.run_experiment(cfg, threads=args.threads)
    summaries = [an.summarize(cfg, t) for t in tables]
    out = Path(args.out)
    cols = tables[0].columns
    body = "".join(t.to_csv().split("\n", 1)[1] for t in tables)
    write_atomic(out / "replications.csv", ",".join(cols) + "\n" + body)
    results = _write_checks(cfg, summaries, args.tolerance_profile)
    passed = all(r.passed for r in results)
    doc = {"config": cfg.to_dict(), "tolerance_profile": args.tolerance_profile, "scales": summaries,
           "checks": [dataclasses.asdict(r) for r in results], "passed": passed}
    write_atomic(out / "summary.json", dumps_json(doc))
    failed = sum(not r.passed for r in results)
    print(f"experiment: {len(cfg.scales)} scale(s) x {cfg.replications} replications, "
          f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if passed else EXIT_FAILED


def cmd_report(args) -> int:
    """Recompute the summary and checks from a saved replication table."""
    cfg = _load(args)
    src = Path(args.out) / "replications.csv"
    try:
        text = src.read_text()
    except FileNotFoundError:
        raise UsageError(f"no replication table at {src}; run 'experiment' first") from None
    full = an.ReplicationTable.from_csv(text)
    summaries = []
    for i in range(len(cfg.scales)):
        st = an.setup_scale(cfg, i)
        rows = [r for r in full.rows if r["scale_index"] == i]
        if len(rows) != cfg.replications:
            raise UsageError(f"{src}: scale {i} has {len(rows)} rows, config says {cfg.replications}")
        summaries.append(an.summarize(cfg, an.ReplicationTable(full.columns, rows, {"setup": st})))
    results = _write_checks(cfg, summaries, args.tolerance_profile)
    passed = all(r.passed for r in results)
    doc = {"tolerance_profile": args.tolerance_profile, "scales": summaries,
           "checks": [dataclasses.asdict(r) for r in results], "passed": passed}
    write_atomic(Path(args.out) / f"report_{args.tolerance_profile}.json", dumps_json(doc))
    print(f"report: {sum(r.passed for r in results)}/{len(results)} checks passed "
          f"({args.tolerance_profile} profile)")
    return EXIT_OK if passed else EXIT_FAILED


# ------------------------------------------------------------------ parser


def _threads_default():
    env = os.environ.get("EXFIELD_THREADS")
    return int(env) if env else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exfield", description="Extremal clusters of lattice random fields.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p):
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=_threads_default(),
                       help="worker threads (default: EXFIELD_THREADS or CPU count)")
        p.add_argument("--tolerance-profile", choices=("desk", "strict"), default="desk")
        return p

    common(sub.add_parser("geometry-report", help="index-set diagnostics per scale"))
    p = common(sub.add_parser("simulate", help="dump one realised field as CSV"))
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--scale-index", type=int, default=-1)
    p = common(sub.add_parser("cluster", help="cluster a field CSV"))
    p.add_argument("--field", required=True, help="CSV written by 'simulate'")
    p.add_argument("--scale-index", type=int, default=-1)
    p.add_argument("--threshold", type=float, default=None, help="override the threshold level")
    common(sub.add_parser("experiment", help="run the Monte Carlo experiment"))
    common(sub.add_parser("report", help="re-evaluate checks from a saved replication table"))
    return parser


COMMANDS = {
    "geometry-report": cmd_geometry_report,
    "simulate": cmd_simulate,
    "cluster": cmd_cluster,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if args.seed is not None and args.seed < 0:
        parser.print_usage(sys.stderr)
        print("exfield: error: --seed must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError, GeometryError, ModelError, an.EstimationError) as e:
        print(f"exfield: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
