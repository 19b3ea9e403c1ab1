"""Experiment configuration: a versioned JSON document.

Unknown keys are rejected with a ``ConfigError`` naming the key path, and
``ExperimentConfig.from_dict(cfg.to_dict()) == cfg`` for every valid config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .fields import ModelError, model_from_dict
from .geometry import DependenceSpec, GeometryError, PConvexSet

SCHEMA_VERSION = 1

TOP_KEYS = {
    "schema_version", "model", "generator", "scales", "labels", "k", "tau",
    "dependence", "replications", "seed", "queries", "family", "estimators", "checks",
}
ESTIMATOR_KEYS = {"runs_m", "order_k", "anti_clustering_m", "local_index"}
CHECK_KEYS = {"name", "statistic", "target", "tol", "strict_tol", "lower", "upper", "scale_index"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Estimators:
    runs_m: tuple = (0, 1, 2)
    order_k: tuple = (1, 2)
    anti_clustering_m: tuple = ()
    local_index: bool = True

    def to_dict(self) -> dict:
        return {"runs_m": list(self.runs_m), "order_k": list(self.order_k),
                "anti_clustering_m": list(self.anti_clustering_m),
                "local_index": self.local_index}


@dataclass(frozen=True)
class Check:
    name: str
    statistic: str
    target: float | None = None
    tol: float | None = None
    strict_tol: float | None = None
    lower: float | None = None
    upper: float | None = None
    scale_index: int = -1

    def bounds(self, profile: str = "desk") -> tuple[float, float]:
        if self.target is not None:
            tol = self.strict_tol if profile == "strict" and self.strict_tol is not None else self.tol
            return self.target - tol, self.target + tol
        lo = -float("inf") if self.lower is None else self.lower
        hi = float("inf") if self.upper is None else self.upper
        return lo, hi

    def to_dict(self) -> dict:
        out = {"name": self.name, "statistic": self.statistic}
        for key in ("target", "tol", "strict_tol", "lower", "upper"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.scale_index != -1:
            out["scale_index"] = self.scale_index
        return out


@dataclass(frozen=True)
class FamilyMember:
    name: str
    generator: PConvexSet
    fraction: float | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, **self.generator.to_dict()}
        if self.fraction is not None:
            out["fraction"] = self.fraction
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    model: object  # None for geometry-only configs
    generator: PConvexSet
    scales: tuple
    k: object = "auto"  # int, tuple of ints (one per scale) or "auto"
    tau: float = 1.0
    replications: int = 1
    seed: int = 0
    labels: tuple | None = None
    dependence: DependenceSpec | None = None
    queries: dict = field(default_factory=dict)  # name -> tuple of (lower, upper) boxes
    family: tuple = ()
    estimators: Estimators = Estimators()
    checks: tuple = ()

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    @property
    def dim(self) -> int:
        return self.generator.dim

    def k_for(self, i: int) -> int | str:
        if isinstance(self.k, tuple):
            return self.k[i]
        return self.k

    # ---------------------------------------------------------- (de)serialise

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(raw) - TOP_KEYS
        if extra:
            raise ConfigError(f"unknown key {sorted(extra)[0]!r}")
        version = raw.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version: unsupported version {version!r}")
        for key in ("generator", "scales"):
            if key not in raw:
                raise ConfigError(f"missing required key {key!r}")
        model = None
        if raw.get("model") is not None:
            try:
                model = model_from_dict(raw["model"])
            except (ModelError, TypeError, ValueError, KeyError) as e:
                raise ConfigError(f"model: {e}") from None
        try:
            generator = PConvexSet.from_dict(raw["generator"])
        except (GeometryError, TypeError, ValueError) as e:
            raise ConfigError(f"generator: {e}") from None
        d = generator.dim
        scales = raw["scales"]
        if not isinstance(scales, list) or not scales:
            raise ConfigError("scales: need a non-empty list of scaling vectors")
        scales = tuple(tuple(float(x) for x in s) for s in scales)
        if any(len(s) != d or min(s) <= 0 for s in scales):
            raise ConfigError(f"scales: each entry must have {d} positive values")
        labels = raw.get("labels")
        if labels is not None:
            if len(labels) != len(scales):
                raise ConfigError("labels: one label per scale required")
            labels = tuple(labels)
        k = raw.get("k", "auto")
        if isinstance(k, list):
            if len(k) != len(scales) or not all(isinstance(x, int) and x >= 1 for x in k):
                raise ConfigError("k: list must hold one positive integer per scale")
            k = tuple(k)
        elif not (k == "auto" or (isinstance(k, int) and k >= 1)):
            raise ConfigError("k: positive integer, list of integers, or 'auto'")
        tau = float(raw.get("tau", 1.0))
        if tau <= 0:
            raise ConfigError("tau: must be positive")
        reps = raw.get("replications", 1)
        if not isinstance(reps, int) or reps < 1:
            raise ConfigError("replications: must be an integer >= 1")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed: must be a non-negative integer")
        dep = raw.get("dependence")
        if dep is not None:
            if set(dep) - {"m", "gamma", "alpha"}:
                raise ConfigError(f"dependence: unknown key {sorted(set(dep) - {'m', 'gamma', 'alpha'})[0]!r}")
            try:
                dep = DependenceSpec(int(dep["m"]), tuple(int(g) for g in dep["gamma"]),
                                     float(dep.get("alpha", 0.0)))
            except (KeyError, GeometryError) as e:
                raise ConfigError(f"dependence: {e}") from None
        queries = {}
        for name, boxes in (raw.get("queries") or {}).items():
            if name == "C":
                raise ConfigError("queries: 'C' is reserved for the whole generator")
            try:
                queries[name] = tuple((tuple(map(float, lo)), tuple(map(float, hi))) for lo, hi in boxes)
            except (TypeError, ValueError):
                raise ConfigError(f"queries.{name}: expected a list of [lower, upper] pairs") from None
            if any(len(lo) != d or len(hi) != d for lo, hi in queries[name]):
                raise ConfigError(f"queries.{name}: corners must have dimension {d}")
        family = []
        for i, member in enumerate(raw.get("family") or []):
            member = dict(member)
            extra = set(member) - {"name", "bodies", "fraction"}
            if extra:
                raise ConfigError(f"family[{i}]: unknown key {sorted(extra)[0]!r}")
            try:
                gen = PConvexSet.from_dict({"bodies": member["bodies"]})
            except (KeyError, GeometryError) as e:
                raise ConfigError(f"family[{i}]: {e}") from None
            frac = member.get("fraction")
            family.append(FamilyMember(member.get("name", f"B{i + 1}"), gen,
                                       None if frac is None else float(frac)))
        est_raw = raw.get("estimators") or {}
        extra = set(est_raw) - ESTIMATOR_KEYS
        if extra:
            raise ConfigError(f"estimators: unknown key {sorted(extra)[0]!r}")
        est = Estimators(
            tuple(int(m) for m in est_raw.get("runs_m", Estimators.runs_m)),
            tuple(int(m) for m in est_raw.get("order_k", Estimators.order_k)),
            tuple(int(m) for m in est_raw.get("anti_clustering_m", Estimators.anti_clustering_m)),
            bool(est_raw.get("local_index", Estimators.local_index)),
        )
        if any(m < 0 for m in est.runs_m + est.anti_clustering_m) or any(k < 1 for k in est.order_k):
            raise ConfigError("estimators: m must be >= 0 and order k >= 1")
        checks = []
        for i, c in enumerate(raw.get("checks") or []):
            extra = set(c) - CHECK_KEYS
            if extra:
                raise ConfigError(f"checks[{i}]: unknown key {sorted(extra)[0]!r}")
            if "statistic" not in c:
                raise ConfigError(f"checks[{i}]: missing 'statistic'")
            if ("target" in c) != ("tol" in c):
                raise ConfigError(f"checks[{i}]: 'target' and 'tol' go together")
            checks.append(Check(c.get("name", c["statistic"]), c["statistic"],
                                *(c.get(key) for key in ("target", "tol", "strict_tol", "lower", "upper")),
                                int(c.get("scale_index", -1))))
        return cls(model, generator, scales, k, tau, reps, seed, labels, dep, queries,
                   tuple(family), est, tuple(checks))

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "generator": self.generator.to_dict(),
            "scales": [list(s) for s in self.scales],
            "k": list(self.k) if isinstance(self.k, tuple) else self.k,
            "tau": self.tau,
            "replications": self.replications,
            "seed": self.seed,
            "queries": {n: [[list(lo), list(hi)] for lo, hi in b] for n, b in self.queries.items()},
            "family": [m.to_dict() for m in self.family],
            "estimators": self.estimators.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
        }
        if self.model is not None:
            out["model"] = self.model.to_dict()
        if self.labels is not None:
            out["labels"] = list(self.labels)
        if self.dependence is not None:
            out["dependence"] = {"m": self.dependence.m, "gamma": list(self.dependence.gamma),
                                 "alpha": self.dependence.alpha}
        return out


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return ExperimentConfig.from_dict(raw)
