"""Nodal-length measurement on grids.

Marching squares with linear interpolation along cell edges. Ambiguous
saddle cells are resolved by the sign at the cell centre, evaluated
exactly when the sample carries an evaluator and bilinearly otherwise.
A node value of exactly zero counts as positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ensembles import FieldSample, PlaneChart, Sphere, Torus1, Torus2
from .laws import CoefficientLaw, SeedStream
from .specfun import KernelSpec, kac_rice_density

__all__ = [
    "NodalEstimate",
    "Segments",
    "DoublingIndex",
    "extract_segments",
    "nodal_length",
    "restricted_nodal_length",
    "restricted_lengths",
    "doubling_index",
    "small_ball_probability",
    "richardson",
]

# Minimum grid points per 1/frequency demanded by nodal_length.
MIN_POINTS_PER_WAVELENGTH = 4.0


@dataclass
class NodalEstimate:
    length: float
    grid_step: float
    refinement: Optional[tuple] = None
    excluded_region_bound: float = 0.0

    def __float__(self):
        return float(self.length)


@dataclass
class Segments:
    """Contour segments in manifold coordinates ((x, y) or (theta, phi))."""

    geometry: object
    start: np.ndarray
    end: np.ndarray
    lengths: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.lengths)

    @property
    def total(self) -> float:
        return float(np.sum(self.lengths)) if len(self.lengths) else 0.0

    def to_rows(self):
        return np.column_stack([self.start, self.end, self.lengths])


def _check_resolution(sample: FieldSample):
    if sample.frequency is None or sample.frequency <= 0:
        return
    points = 1.0 / (sample.geometry.step * sample.frequency)
    if points < MIN_POINTS_PER_WAVELENGTH:
        raise ValueError(
            f"grid resolution {points:.2f} points per 1/frequency is below {MIN_POINTS_PER_WAVELENGTH:g}"
        )


def _extended(values: np.ndarray, periodic) -> np.ndarray:
    v = values
    if periodic[0]:
        v = np.concatenate([v, v[:1]], axis=0)
    if periodic[1]:
        v = np.concatenate([v, v[:, :1]], axis=1)
    return v


# Which pair of edges each segment joins: edges are 0 bottom (a-b),
# 1 right (b-c), 2 top (d-c), 3 left (a-d), for corners
# a=(i,j), b=(i+1,j), c=(i+1,j+1), d=(i,j+1).
_ISOLATE_BD = ((0, 1), (2, 3))
_ISOLATE_AC = ((0, 3), (1, 2))


def extract_segments(sample: FieldSample) -> Segments:
    geom = sample.geometry
    if isinstance(geom, Torus1):
        raise TypeError("contour extraction needs a 2-d grid")
    V = _extended(sample.values, geom.periodic)
    pos = V >= 0.0
    a, b, c, d = V[:-1, :-1], V[1:, :-1], V[1:, 1:], V[:-1, 1:]
    sa, sb, sc, sd = pos[:-1, :-1], pos[1:, :-1], pos[1:, 1:], pos[:-1, 1:]
    case = sa.astype(np.int8) | (sb.astype(np.int8) << 1) | (sc.astype(np.int8) << 2) | (sd.astype(np.int8) << 3)
    ii, jj = np.nonzero((case != 0) & (case != 15))
    if len(ii) == 0:
        empty = np.zeros((0, 2))
        return Segments(geom, empty, empty, np.zeros(0))
    A, B, C, D = a[ii, jj], b[ii, jj], c[ii, jj], d[ii, jj]
    SA, SB, SC, SD = sa[ii, jj], sb[ii, jj], sc[ii, jj], sd[ii, jj]
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = A / (A - B)
        t1 = B / (B - C)
        t2 = D / (D - C)
        t3 = A / (A - D)
    fi, fj = ii.astype(float), jj.astype(float)
    # crossing points in index space, shape (4, K, 2)
    pts = np.empty((4, len(ii), 2))
    pts[0, :, 0], pts[0, :, 1] = fi + t0, fj
    pts[1, :, 0], pts[1, :, 1] = fi + 1.0, fj + t1
    pts[2, :, 0], pts[2, :, 1] = fi + t2, fj + 1.0
    pts[3, :, 0], pts[3, :, 1] = fi, fj + t3
    crossed = np.stack([SA != SB, SB != SC, SD != SC, SA != SD])

    cc = case[ii, jj]
    saddle = (cc == 5) | (cc == 10)
    plain = ~saddle
    first = np.argmax(crossed, axis=0)
    last = 3 - np.argmax(crossed[::-1], axis=0)
    k_plain = np.nonzero(plain)[0]
    starts = [pts[first[k_plain], k_plain]]
    ends = [pts[last[k_plain], k_plain]]

    k_sad = np.nonzero(saddle)[0]
    if len(k_sad):
        centre_idx = np.stack([fi[k_sad] + 0.5, fj[k_sad] + 0.5], axis=1)
        if sample.evaluator is not None:
            cx, cy = geom.index_to_coords(centre_idx[:, 0], centre_idx[:, 1])
            centre = np.asarray(sample.evaluator(np.column_stack([cx, cy])), dtype=float)
        else:
            centre = 0.25 * (A[k_sad] + B[k_sad] + C[k_sad] + D[k_sad])
        joined_ac = (centre >= 0.0) == SA[k_sad]
        for flag, pairs in ((~joined_ac, _ISOLATE_AC), (joined_ac, _ISOLATE_BD)):
            ks = k_sad[flag]
            for e1, e2 in pairs:
                starts.append(pts[e1, ks])
                ends.append(pts[e2, ks])
    p = np.concatenate(starts)
    q = np.concatenate(ends)
    x1, y1 = geom.index_to_coords(p[:, 0], p[:, 1])
    x2, y2 = geom.index_to_coords(q[:, 0], q[:, 1])
    start = np.column_stack([x1, y1])
    end = np.column_stack([x2, y2])
    return Segments(geom, start, end, _segment_lengths(geom, start, end))


def _segment_lengths(geom, start, end) -> np.ndarray:
    delta = end - start
    if isinstance(geom, Sphere):
        mid_theta = 0.5 * (start[:, 0] + end[:, 0])
        return np.hypot(delta[:, 0], np.sin(mid_theta) * delta[:, 1])
    return np.hypot(delta[:, 0], delta[:, 1])


def _sphere_cap_bound(sample: FieldSample) -> float:
    geom = sample.geometry
    if not isinstance(geom, Sphere) or sample.frequency is None:
        return 0.0
    cap_area = 2.0 * math.pi * (1.0 - math.cos(math.pi / geom.n_theta))
    density = kac_rice_density(KernelSpec(2)) * sample.frequency
    return 2.0 * density * 2.0 * cap_area


def nodal_length(sample: FieldSample) -> NodalEstimate:
    """Total nodal length (for a 1-d torus sample, the number of zeros)."""
    _check_resolution(sample)
    geom = sample.geometry
    if isinstance(geom, Torus1):
        pos = sample.values >= 0.0
        changes = int(np.count_nonzero(pos != np.roll(pos, -1)))
        return NodalEstimate(float(changes), geom.step)
    segs = extract_segments(sample)
    return NodalEstimate(segs.total, geom.step, excluded_region_bound=_sphere_cap_bound(sample))


def richardson(fine: float, coarse: float, order: int = 2) -> float:
    """Extrapolate a quantity known on steps h and 2h with error ~ h**order."""
    f = 2.0**order
    return (f * fine - coarse) / (f - 1.0)


# -- restricted lengths ---------------------------------------------------------


def _sphere_xyz(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _inside_fraction(d: np.ndarray, v: np.ndarray, radius: float) -> np.ndarray:
    """Fraction of each segment d + t v, t in [0, 1], lying within |.| <= radius.

    ``d`` and ``v`` have shape (..., K, dim).
    """
    aa = np.sum(v * v, axis=-1)
    bb = 2.0 * np.sum(d * v, axis=-1)
    cc = np.sum(d * d, axis=-1) - radius * radius
    disc = bb * bb - 4.0 * aa * cc
    ok = (disc > 0) & (aa > 0)
    root = np.sqrt(np.where(ok, disc, 0.0))
    safe = np.where(aa > 0, aa, 1.0)
    lo = np.clip((-bb - root) / (2.0 * safe), 0.0, 1.0)
    hi = np.clip((-bb + root) / (2.0 * safe), 0.0, 1.0)
    return np.where(ok, hi - lo, 0.0)


def _check_ball(geom, center, radius):
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if isinstance(geom, PlaneChart) and not geom.contains_ball(center, radius):
        raise ValueError("ball leaves the plane chart")
    if isinstance(geom, Torus2) and radius >= 0.5:
        raise ValueError("ball of radius >= 1/2 wraps onto itself on the unit torus")
    if isinstance(geom, Sphere) and radius > math.pi:
        raise ValueError("geodesic radius exceeds pi")


def restricted_lengths(segs: Segments, centers, radius: float, chunk: int = 64) -> np.ndarray:
    """Nodal length inside the ball B(center, radius) for every center.

    Segments are clipped against the ball by their linear parameterization.
    On the torus, distances use the nearest periodic image; on the sphere,
    the geodesic ball is the chordal ball of radius 2 sin(radius/2) and
    clipped fractions are applied to the metric segment lengths.
    """
    geom = segs.geometry
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    for c in centers:
        _check_ball(geom, c, radius)
    out = np.zeros(len(centers))
    if len(segs) == 0 or radius == 0:
        return out
    if isinstance(geom, Sphere):
        p = _sphere_xyz(segs.start[:, 0], segs.start[:, 1])
        v = _sphere_xyz(segs.end[:, 0], segs.end[:, 1]) - p
        cxyz = _sphere_xyz(centers[:, 0], centers[:, 1])
        r_eff = 2.0 * math.sin(radius / 2.0)
    else:
        p, v = segs.start, segs.end - segs.start
        cxyz = centers
        r_eff = radius
    for s in range(0, len(centers), chunk):
        cs = cxyz[s : s + chunk]
        d = p[None, :, :] - cs[:, None, :]
        if isinstance(geom, Torus2):
            d = d - np.floor(d + 0.5)
        frac = _inside_fraction(d, v[None], r_eff)
        out[s : s + chunk] = frac @ segs.lengths
    return out


def restricted_nodal_length(sample: FieldSample, center, radius: float) -> NodalEstimate:
    """Nodal length of ``sample`` inside the (geodesic) ball B(center, radius).

    ``center`` is a point in manifold coordinates; use ``geometry.node(i, j)``
    for a grid node.
    """
    _check_resolution(sample)
    segs = extract_segments(sample)
    length = float(restricted_lengths(segs, [center], radius)[0])
    return NodalEstimate(length, sample.geometry.step)


# -- doubling index -------------------------------------------------------------


@dataclass
class DoublingIndex:
    value: float
    nodes_inner: int
    low_resolution: bool

    def __float__(self):
        return float(self.value)


def _node_distances(geom, center) -> np.ndarray:
    axes = geom.axes()
    X, Y = np.meshgrid(*axes, indexing="ij")
    if isinstance(geom, Sphere):
        c = _sphere_xyz(np.array(center[0]), np.array(center[1]))
        pts = _sphere_xyz(X, Y)
        return np.arccos(np.clip(pts @ c, -1.0, 1.0))
    dx, dy = X - center[0], Y - center[1]
    if isinstance(geom, Torus2):
        dx, dy = dx - np.round(dx), dy - np.round(dy)
    return np.hypot(dx, dy)


def doubling_index(sample: FieldSample, center, r: float) -> DoublingIndex:
    """log( max_{2B} |f| / max_B |f| ) over grid nodes of concentric balls.

    Grid maxima under-estimate the suprema; fewer than 100 nodes in B sets
    ``low_resolution``.
    """
    geom = sample.geometry
    _check_ball(geom, center, 2.0 * r)
    dist = _node_distances(geom, center)
    tol = 1e-12 * max(r, 1e-300)
    inner = dist <= r + tol
    outer = dist <= 2.0 * r + tol
    n_inner = int(inner.sum())
    if n_inner < 16:
        raise ValueError(f"only {n_inner} grid nodes inside B; need >= 16")
    absval = np.abs(sample.values)
    sup_b = float(absval[inner].max())
    if sup_b == 0.0:
        raise ValueError("field vanishes on grid")
    sup_2b = float(absval[outer].max())
    return DoublingIndex(math.log(sup_2b / sup_b), n_inner, n_inner < 100)


# -- small balls -----------------------------------------------------------------


def small_ball_probability(
    ensemble, law: CoefficientLaw, point, tau: float, m: int, seed: int = 0, first_index: int = 0
) -> tuple[float, float]:
    """Fraction of m independent replicates with |f(point)| <= tau, and its binomial SE.

    Replicate k uses stream (seed, first_index + k), the same coefficients
    the grid sampler would draw for that replicate.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if m < 1000:
        raise ValueError("small-ball estimates need m >= 1000")
    pt = np.asarray(point, dtype=float).reshape(1, -1)
    vals = np.empty(m)
    for k in range(m):
        real = ensemble.realize(law, SeedStream(seed, first_index + k))
        vals[k] = real.evaluate(pt)[0]
    hits = np.abs(vals) <= tau
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / m)
