"""Stationary fields on Z^d: i.i.d. and moving-maximum models.

Values are evaluated from coordinate-keyed uniforms, so a field is defined
on all of Z^d for a given (seed, replication) and any finite window of it can
be materialised independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .geometry import DependenceSpec, LatticeIndex, minkowski_sum, minkowski_sum_count


class ModelError(ValueError):
    pass


# ------------------------------------------------------------ marginals


@dataclass(frozen=True)
class Marginal:
    """Continuous marginal with closed-form cdf and quantile.

    kind is one of ``uniform`` (on (0, 1)), ``exponential`` (``rate``),
    ``frechet`` (shape 1) or ``pareto`` (tail index ``alpha``, support x >= 1).
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "exponential", "frechet", "pareto"):
            raise ModelError(f"unknown marginal {self.kind!r}")
        if not self.param > 0:
            raise ModelError("marginal parameter must be positive")

    @classmethod
    def from_dict(cls, spec: dict) -> "Marginal":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        key = {"exponential": "rate", "pareto": "alpha"}.get(kind)
        if key is None:
            if spec:
                raise ModelError(f"marginal {kind!r} takes no parameters, got {sorted(spec)}")
            return cls(kind)
        if set(spec) - {key}:
            raise ModelError(f"marginal {kind!r}: unexpected keys {sorted(set(spec) - {key})}")
        return cls(kind, float(spec.get(key, 1.0)))

    def to_dict(self) -> dict:
        key = {"exponential": "rate", "pareto": "alpha"}.get(self.kind)
        return {"kind": self.kind, key: self.param} if key else {"kind": self.kind}

    @property
    def support(self) -> tuple[float, float]:
        return {"uniform": (0.0, 1.0), "exponential": (0.0, math.inf),
                "frechet": (0.0, math.inf), "pareto": (1.0, math.inf)}[self.kind]

    def logcdf(self, x):
        x = np.asarray(x, float)
        lo, hi = self.support
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "uniform":
                out = np.log(np.clip(x, 0.0, 1.0))
            elif self.kind == "exponential":
                out = np.log(-np.expm1(-self.param * np.maximum(x, 0.0)))
            elif self.kind == "frechet":
                out = np.where(x > 0, -1.0 / np.where(x > 0, x, 1.0), -np.inf)
            else:
                out = np.log1p(-np.maximum(x, 1.0) ** -self.param)
        out = np.where(x <= lo, -np.inf, out)
        return np.where(x >= hi, 0.0, out)

    def cdf(self, x):
        return np.exp(self.logcdf(x))

    def sf(self, x):
        x = np.asarray(x, float)
        lo, hi = self.support
        if self.kind == "uniform":
            out = 1.0 - np.clip(x, 0.0, 1.0)
        elif self.kind == "exponential":
            out = np.exp(-self.param * np.maximum(x, 0.0))
        elif self.kind == "frechet":
            with np.errstate(divide="ignore"):
                out = -np.expm1(self.logcdf(x))
        else:
            out = np.maximum(x, 1.0) ** -self.param
        return np.where(x <= lo, 1.0, np.where(x >= hi, 0.0, out))

    def isf(self, q):
        """Inverse survival function: x with sf(x) = q."""
        q = np.asarray(q, float)
        if self.kind == "uniform":
            return 1.0 - q
        if self.kind == "exponential":
            return -np.log(q) / self.param
        if self.kind == "frechet":
            return -1.0 / np.log1p(-q)
        return q ** (-1.0 / self.param)

    def quantile(self, p):
        p = np.asarray(p, float)
        return self.quantile_from_log(np.log(p))

    def quantile_from_log(self, logp):
        """quantile(exp(logp)), stable for p close to 1."""
        logp = np.asarray(logp, float)
        if self.kind == "uniform":
            return np.exp(logp)
        if self.kind == "frechet":
            return -1.0 / logp
        tail = -np.expm1(logp)
        if self.kind == "exponential":
            return -np.log(tail) / self.param
        return tail ** (-1.0 / self.param)


@dataclass(frozen=True)
class Threshold:
    tau: float
    level: float
    size: int


def threshold(marginal: Marginal, size: int, tau: float) -> Threshold:
    """Level x with size * (1 - F(x)) = tau."""
    if not 0 < tau < size:
        raise ModelError(f"need 0 < tau < size, got tau={tau}, size={size}")
    return Threshold(float(tau), float(marginal.isf(tau / size)), int(size))


# ---------------------------------------------------------------- models


class IIDModel:
    kind = "iid"

    def __init__(self, marginal: Marginal):
        self.marginal = marginal

    def values(self, coords, seed: int, replication: int) -> np.ndarray:
        u = rng.uniforms(seed, replication, coords)
        return self.marginal.quantile_from_log(np.log(u))

    def dependence(self, dim: int) -> DependenceSpec:
        return DependenceSpec(0, (1,) * dim, 0.0)

    def to_dict(self) -> dict:
        return {"kind": "iid", "marginal": self.marginal.to_dict()}


class MovingMaximum:
    """xi_v = max_{z in v + B} Y_z with Y i.i.d. of law F^{1/|B|}."""

    kind = "moving_maximum"

    def __init__(self, pattern, marginal: Marginal):
        B = np.atleast_2d(np.asarray(pattern, np.int64))
        if B.size == 0:
            raise ModelError("moving-maximum pattern must be non-empty")
        if len(np.unique(B, axis=0)) != len(B):
            raise ModelError("moving-maximum pattern has duplicate points")
        self.pattern = B
        self.marginal = marginal

    @property
    def size(self) -> int:
        return len(self.pattern)

    @property
    def diameter(self) -> int:
        return int(np.max(self.pattern.max(axis=0) - self.pattern.min(axis=0)))

    def noise(self, coords, seed: int, replication: int) -> np.ndarray:
        # cdf(Y) = u^|B|
        u = rng.uniforms(seed, replication, coords)
        return self.marginal.quantile_from_log(self.size * np.log(u))

    def noise_logcdf(self, x):
        return self.marginal.logcdf(x) / self.size

    def values(self, coords, seed: int, replication: int) -> np.ndarray:
        c = np.atleast_2d(np.asarray(coords, np.int64))
        out = np.full(len(c), -np.inf)
        for b in self.pattern:
            np.maximum(out, self.noise(c + b, seed, replication), out=out)
        return out

    def dependence(self, dim: int) -> DependenceSpec:
        m = self.diameter
        return DependenceSpec(m, (max(m, 1),) * dim, 0.0)

    def to_dict(self) -> dict:
        return {"kind": "moving_maximum", "marginal": self.marginal.to_dict(),
                "pattern": self.pattern.tolist()}


FieldModel = IIDModel | MovingMaximum


def model_from_dict(spec: dict):
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "iid":
        if set(spec) != {"marginal"}:
            raise ModelError(f"iid model keys must be ['marginal'], got {sorted(spec)}")
        return IIDModel(Marginal.from_dict(spec["marginal"]))
    if kind == "moving_maximum":
        if set(spec) != {"marginal", "pattern"}:
            raise ModelError(f"moving_maximum keys must be ['marginal', 'pattern'], got {sorted(spec)}")
        return MovingMaximum(spec["pattern"], Marginal.from_dict(spec["marginal"]))
    raise ModelError(f"unknown model kind {kind!r}")


# --------------------------------------------------------------- samples


class FieldSample:
    """Realised values on a finite lattice domain."""

    def __init__(self, domain, values, model=None, seed=None, replication=None):
        self.domain = np.asarray(domain, np.int64)
        self.values = np.asarray(values, float)
        if self.domain.ndim != 2 or len(self.domain) != len(self.values):
            raise ModelError("domain and values must align")
        self.model = model
        self.seed = seed
        self.replication = replication
        self._index = None

    @property
    def index(self) -> LatticeIndex:
        if self._index is None:
            self._index = LatticeIndex(self.domain)
        return self._index

    def lookup(self, pts) -> np.ndarray:
        """Values at ``pts``; KeyError naming points outside the domain."""
        pos = self.index.positions(pts)
        if np.any(pos < 0):
            missing = np.atleast_2d(pts)[pos < 0]
            shown = ", ".join(str(tuple(p)) for p in missing[:5].tolist())
            raise KeyError(f"{len(missing)} point(s) not in sample domain, e.g. {shown}")
        return self.values[pos]


def simulate(model, support, seed: int, replication: int = 0) -> FieldSample:
    support = np.atleast_2d(np.asarray(support, np.int64))
    if support.size == 0:
        raise ModelError("empty simulation support")
    return FieldSample(support, model.values(support, seed, replication), model, seed, replication)


def exact_max_cdf(model, region, x: float) -> float:
    """P(max over region <= x), exact for finite regions."""
    region = np.atleast_2d(np.asarray(region, np.int64))
    if isinstance(model, IIDModel):
        n, logf = len(region), float(model.marginal.logcdf(x))
    elif isinstance(model, MovingMaximum):
        n, logf = minkowski_sum_count(region, model.pattern), float(model.noise_logcdf(x))
    else:
        raise ModelError(f"no exact maximum law for {type(model).__name__}")
    return 0.0 if logf == -np.inf else math.exp(n * logf)


def exact_exceed_hazard(model, offsets, x: float) -> float:
    """P(max over offsets <= x < xi_0) for a finite offset set not containing 0."""
    A = np.atleast_2d(np.asarray(offsets, np.int64))
    A0 = np.vstack([A, np.zeros((1, A.shape[1]), np.int64)])
    if isinstance(model, IIDModel):
        lf = float(model.marginal.logcdf(x))
        return math.exp(len(A) * lf) * float(model.marginal.sf(x))
    if isinstance(model, MovingMaximum):
        ly = float(model.noise_logcdf(x))
        if ly == -np.inf:
            return 0.0
        a = len(minkowski_sum(A, model.pattern)) if len(A) else 0
        b = len(minkowski_sum(A0, model.pattern))
        return math.exp(a * ly) - math.exp(b * ly)
    raise ModelError(f"no exact hazard for {type(model).__name__}")


def theoretical_theta(model) -> float:
    if isinstance(model, IIDModel):
        return 1.0
    if isinstance(model, MovingMaximum):
        return 1.0 / model.size
    raise ModelError(f"no extremal index known for {type(model).__name__}")
