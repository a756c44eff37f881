"""Monte Carlo experiments over replicate fields.

Replicate k of an experiment always draws from ``SeedStream(seed, k)``, so
results do not depend on the number of workers or on scheduling order.
Aggregates are computed from the replicate array in index order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ensembles import (
    Ensemble,
    FieldSample,
    PlaneChart,
    Sphere,
    Torus2,
    coarsen,
    geometry_from_dict,
)
from .laws import CoefficientLaw, SeedStream, parse_law
from .nodal import extract_segments, nodal_length, restricted_lengths, richardson
from .specfun import unit_ball_volume

__all__ = [
    "Measurement",
    "ExperimentSpec",
    "MCSummary",
    "ReplicateError",
    "CompareResult",
    "mc_expectation",
    "run_replicates",
    "summarize",
    "ks_statistic",
    "permutation_ks",
    "distribution_compare",
    "variance_scan",
    "locality_check",
    "fingerprint",
]

log = logging.getLogger(__name__)

_MEASUREMENTS = ("global_length", "restricted_length", "small_ball")


class ReplicateError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"replicate {index} failed: {cause!r}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class Measurement:
    """What to record per replicate.

    restricted_length: nodal length inside B(center, radius); ``center=None``
    draws a uniform random center per replicate and ``radius=None`` means
    1/(2 frequency). With a PlaneChart geometry only a
    local patch around the ball is synthesized (the chart is re-centred on
    the ball, its origin ignored; random centers are then uniform on the
    unit square).
    small_ball: indicator of |f(point)| <= tau.
    """

    kind: str = "global_length"
    center: Optional[tuple] = None
    radius: Optional[float] = None
    tau: Optional[float] = None
    point: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in _MEASUREMENTS:
            raise ValueError(f"unknown measurement {self.kind!r}")
        if self.kind == "small_ball" and (self.tau is None or self.point is None):
            raise ValueError("small_ball needs tau and point")

    def to_dict(self):
        d = {"kind": self.kind}
        for k in ("center", "radius", "tau", "point"):
            v = getattr(self, k)
            if v is not None:
                d[k] = list(v) if isinstance(v, tuple) else v
        return d


@dataclass(frozen=True)
class ExperimentSpec:
    ensemble: Ensemble
    law: CoefficientLaw
    geometry: object
    m: int
    seed: int = 0
    measurement: Measurement = Measurement()
    richardson: bool = False
    first_index: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least 2 replicates")
        if self.richardson and self.measurement.kind != "global_length":
            raise ValueError("Richardson extrapolation applies to global lengths only")

    def to_dict(self) -> dict:
        return {
            "ensemble": self.ensemble.to_dict(),
            "law": self.law.label,
            "geometry": self.geometry.to_dict(),
            "m": self.m,
            "seed": self.seed,
            "measurement": self.measurement.to_dict(),
            "richardson": self.richardson,
            "first_index": self.first_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        ens = dict(d["ensemble"])
        meas = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.get("measurement", {}).items()}
        return cls(
            Ensemble(**ens),
            parse_law(d["law"]),
            geometry_from_dict(d["geometry"]),
            int(d["m"]),
            int(d.get("seed", 0)),
            Measurement(**meas),
            bool(d.get("richardson", False)),
            int(d.get("first_index", 0)),
        )


def fingerprint(obj) -> str:
    """Short SHA-256 of the canonical JSON form of ``obj``."""
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class MCSummary:
    m: int
    mean: float
    variance: float
    std_error: float
    ci95: tuple
    fingerprint: str
    values: np.ndarray = field(repr=False, default=None)
    raw: Optional["MCSummary"] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_values: bool = False) -> dict:
        d = {
            "m": self.m,
            "mean": self.mean,
            "variance": self.variance,
            "std_error": self.std_error,
            "ci95": list(self.ci95),
            "fingerprint": self.fingerprint,
        }
        if self.raw is not None:
            d["raw"] = self.raw.to_dict()
        if self.extra:
            d["extra"] = self.extra
        if include_values and self.values is not None:
            d["values"] = self.values.tolist()
        return d


def summarize(values, fp: str = "") -> MCSummary:
    v = np.asarray(values, dtype=float)
    m = len(v)
    if m < 2:
        raise ValueError("need at least two values")
    mean = math.fsum(v) / m
    var = math.fsum((v - mean) ** 2) / (m - 1)
    se = math.sqrt(var / m)
    return MCSummary(m, mean, var, se, (mean - 1.96 * se, mean + 1.96 * se), fp, v)


# -- replicates -----------------------------------------------------------------


def _random_center(geom, stream: SeedStream):
    u = stream.child(2).generator().random(2)
    if isinstance(geom, Sphere):
        return (math.acos(1.0 - 2.0 * u[0]), 2.0 * math.pi * u[1])
    return (float(u[0]), float(u[1]))


def _replicate(spec: ExperimentSpec, k: int) -> tuple:
    """Measurement(s) of replicate k: (value,) or (fine, coarse) with Richardson."""
    stream = SeedStream(spec.seed, k)
    ens, meas = spec.ensemble, spec.measurement
    if meas.kind == "small_ball":
        real = ens.realize(spec.law, stream)
        val = real.evaluate(np.asarray(meas.point, dtype=float).reshape(1, -1))[0]
        return (float(abs(val) <= meas.tau),)
    if meas.kind == "global_length":
        fine = nodal_length(ens.sample(spec.law, spec.geometry, stream)).length
        if not spec.richardson:
            return (fine,)
        with warnings.catch_warnings():
            # the half-resolution pass is expected to be coarse
            warnings.simplefilter("ignore", UserWarning)
            coarse = nodal_length(ens.sample(spec.law, coarsen(spec.geometry), stream)).length
        return (fine, coarse)
    radius = meas.radius if meas.radius is not None else 0.5 / ens.frequency
    center = meas.center
    geom = spec.geometry
    if center is None:
        center = _random_center(geom, stream)
    if isinstance(geom, PlaneChart):
        geom = PlaneChart.centered(geom.N, geom.L, center)
    sample = ens.sample(spec.law, geom, stream)
    segs = extract_segments(sample)
    return (float(restricted_lengths(segs, [center], radius)[0]),)


def _replicate_batch(args):
    spec, indices = args
    out = []
    for k in indices:
        try:
            out.append(_replicate(spec, k))
        except Exception as exc:  # tag and re-raise in the parent
            raise ReplicateError(k, exc) from exc
    return out


def run_replicates(spec: ExperimentSpec, workers: int = 1) -> np.ndarray:
    """Array of shape (m, q) with q = 2 under Richardson, else 1; row k is replicate first_index + k."""
    indices = list(range(spec.first_index, spec.first_index + spec.m))
    if workers <= 1:
        rows = _replicate_batch((spec, indices))
    else:
        chunk = max(1, math.ceil(len(indices) / (4 * workers)))
        batches = [(spec, indices[i : i + chunk]) for i in range(0, len(indices), chunk)]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_replicate_batch, batches):
                rows.extend(part)
    return np.asarray(rows, dtype=float)


def mc_expectation(spec: ExperimentSpec, workers: int = 1) -> MCSummary:
    """Mean of the measurement over m replicates.

    Under Richardson the headline numbers are extrapolated from the N and
    N/2 grids and ``raw`` holds the fine-grid statistics.
    """
    fp = fingerprint(spec)
    data = run_replicates(spec, workers)
    if spec.richardson:
        extrap = richardson(data[:, 0], data[:, 1])
        out = summarize(extrap, fp)
        out.raw = summarize(data[:, 0], fp)
        out.extra["coarse_mean"] = summarize(data[:, 1], fp).mean
    else:
        out = summarize(data[:, 0], fp)
    if spec.measurement.kind != "small_ball":
        v = out.values
        pos = v[v > 0]
        # uniform-integrability diagnostic E[V log V]
        out.extra["mean_v_log_v"] = float(math.fsum(pos * np.log(pos)) / len(v)) if len(v) else 0.0
    return out


# -- distribution comparison -------------------------------------------------------


def ks_statistic(x, y) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup |F_x - F_y| (ties handled)."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / len(x)
    fy = np.searchsorted(y, grid, side="right") / len(y)
    return float(np.max(np.abs(fx - fy)))


def permutation_ks(x, y, permutations: int = 1000, seed: int = 0) -> tuple[float, float]:
    """KS distance and permutation p-value (1 + #{D* >= D}) / (1 + permutations)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, ny = len(x), len(y)
    pooled = np.concatenate([x, y])
    order = np.argsort(pooled, kind="stable")
    sorted_vals = pooled[order]
    # positions that end a block of tied values
    ends = np.nonzero(np.diff(sorted_vals) != 0)[0]
    ends = np.append(ends, len(sorted_vals) - 1)
    labels = np.zeros(nx + ny, dtype=bool)
    labels[:nx] = True

    def stat(lab_sorted):
        cx = np.cumsum(lab_sorted, axis=-1)[..., ends]
        pos = ends + 1
        cy = pos - cx
        return np.max(np.abs(cx / nx - cy / ny), axis=-1)

    observed = float(stat(labels[order]))
    rng = SeedStream(seed, 0xC0FFEE).generator()
    exceed = 0
    batch = 200
    done = 0
    while done < permutations:
        b = min(batch, permutations - done)
        perm_labels = np.stack([rng.permutation(labels) for _ in range(b)])
        d = stat(perm_labels)
        exceed += int(np.count_nonzero(d >= observed - 1e-12))
        done += b
    return observed, (1 + exceed) / (1 + permutations)


@dataclass
class CompareResult:
    ks: float
    p_value: float
    m_a: int
    m_b: int
    summary_a: MCSummary = field(repr=False, default=None)
    summary_b: MCSummary = field(repr=False, default=None)

    def to_dict(self):
        return {
            "ks": self.ks,
            "p_value": self.p_value,
            "m_a": self.m_a,
            "m_b": self.m_b,
            "mean_a": self.summary_a.mean if self.summary_a else None,
            "mean_b": self.summary_b.mean if self.summary_b else None,
        }


def distribution_compare(
    spec_a: ExperimentSpec, spec_b: ExperimentSpec, permutations: int = 1000, workers: int = 1, min_m: int = 500
) -> CompareResult:
    if spec_a.measurement != spec_b.measurement:
        raise ValueError("specs measure different functionals")
    if spec_a.geometry != spec_b.geometry:
        raise ValueError("specs use different geometries")
    if min(spec_a.m, spec_b.m) < min_m:
        raise ValueError(f"need m >= {min_m} replicates per side")
    if permutations < 1000:
        raise ValueError("need >= 1000 permutations")
    sa = mc_expectation(spec_a, workers)
    sb = mc_expectation(spec_b, workers)
    ks, p = permutation_ks(sa.values, sb.values, permutations, seed=spec_a.seed ^ spec_b.seed)
    return CompareResult(ks, p, spec_a.m, spec_b.m, sa, sb)


# -- variance scans -----------------------------------------------------------------


def variance_scan(
    family: Sequence[tuple], workers: int = 1, bootstrap: int = 200, normalizer=None
) -> dict:
    """Mean and variance of the measurement along a parameter ladder.

    ``family`` is a sequence of (parameter, ExperimentSpec). Returns rows
    with a bootstrap standard error of each variance and the least-squares
    slope of log(variance) against log(parameter). ``normalizer(param,
    spec)``, if given, adds a ``scaled_variance`` column.
    Exploratory output: nothing here is asserted.
    """
    if len(family) < 3:
        raise ValueError("variance scans need a ladder of >= 3 parameters")
    rows = []
    for param, spec in family:
        s = mc_expectation(spec, workers)
        rng = SeedStream(spec.seed, 0xB007).generator()
        idx = rng.integers(0, s.m, size=(bootstrap, s.m))
        boot = s.values[idx].var(axis=1, ddof=1)
        row = {
            "parameter": param,
            "m": s.m,
            "mean": s.mean,
            "std_error": s.std_error,
            "variance": s.variance,
            "variance_se": float(boot.std(ddof=1)),
            "fingerprint": s.fingerprint,
        }
        if normalizer is not None:
            row["scaled_variance"] = s.variance * normalizer(param, spec)
        rows.append(row)
    params = np.array([r["parameter"] for r in rows], dtype=float)
    var = np.array([r["variance"] for r in rows])
    slope = float("nan")
    if np.all(params > 0) and np.all(var > 0):
        slope = float(np.polyfit(np.log(params), np.log(var), 1)[0])
    means = np.array([r["mean"] for r in rows])
    return {"rows": rows, "loglog_slope": slope, "spread_of_means": float(means.std(ddof=1))}


# -- locality ------------------------------------------------------------------------


def locality_check(samples: Sequence[FieldSample], frequency: float | None = None, centers_per_side: int = 16) -> dict:
    """Compare global nodal length with its reconstruction from small balls.

    For each torus sample: V(f) against (2 lam)^n / omega_n * vol(M) *
    mean over a uniform grid of centers of V(f, B(x, 1/(2 lam))). Returns
    per-sample values and the mean relative discrepancy (0 when both
    sides vanish).
    """
    if centers_per_side**2 < 100:
        raise ValueError("need >= 100 ball centers")
    n = 2
    g = (np.arange(centers_per_side) + 0.5) / centers_per_side
    centers = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    rows = []
    for s in samples:
        if not isinstance(s.geometry, Torus2):
            raise ValueError("locality_check needs torus samples")
        lam = frequency if frequency is not None else s.frequency
        radius = 0.5 / lam
        segs = extract_segments(s)
        total = segs.total
        local = restricted_lengths(segs, centers, radius)
        scaled = local * lam ** (n - 1)  # nodal volume of the rescaled field in B(0, 1/2)
        recon = 2.0**n * lam / unit_ball_volume(n) * s.geometry.volume * float(np.mean(scaled))
        if total == 0.0 and recon == 0.0:
            rel = 0.0
        else:
            rel = abs(recon - total) / max(total, 1e-300)
        rows.append({"global": total, "reconstructed": recon, "relative": rel})
    rel = np.array([r["relative"] for r in rows])
    return {"samples": rows, "mean_relative_discrepancy": float(rel.mean())}
