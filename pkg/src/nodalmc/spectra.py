"""Frequency sets: lattice points on circles, annulus shells, spherical degrees."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import unit_ball_volume

__all__ = [
    "FrequencySet",
    "EmptyWindowError",
    "circle_points",
    "annulus_points",
    "sphere_degree",
    "mode_count_normalizer",
    "r2_divisor_formula",
    "half_lattice",
]

log = logging.getLogger(__name__)

# Relative slack on |k|^2 comparisons so that lattice points lying exactly
# on a window edge are classified as the exact arithmetic would.
_EDGE_RTOL = 1e-12


class EmptyWindowError(ValueError):
    """Raised when a frequency set with no modes is used to build a field."""


@dataclass(frozen=True, eq=False)
class FrequencySet:
    kind: str
    params: dict
    points: np.ndarray = field(repr=False)
    count: int = 0

    @property
    def empty(self) -> bool:
        return self.count == 0

    @property
    def dim(self) -> int:
        return 2 if self.kind == "sphere" else self.points.shape[1]

    @property
    def max_frequency(self) -> float:
        """Largest |k| (for the sphere, sqrt(l(l+1)) / (2 pi))."""
        if self.kind == "sphere":
            ell = self.params["ell"]
            return math.sqrt(ell * (ell + 1)) / (2 * math.pi)
        if self.empty:
            return 0.0
        return float(np.sqrt((self.points.astype(float) ** 2).sum(axis=1).max()))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            **self.params,
            "count": self.count,
            "points": self.points.tolist(),
        }


def circle_points(n: int) -> FrequencySet:
    """All mu in Z^2 with |mu|^2 = n, scanning |mu_1| <= sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = []
    r = math.isqrt(n)
    for a in range(-r, r + 1):
        b2 = n - a * a
        b = math.isqrt(b2)
        if b * b == b2:
            pts.append((a, b))
            if b:
                pts.append((a, -b))
    arr = np.array(sorted(pts), dtype=np.int64).reshape(-1, 2)
    return FrequencySet("arw", {"n": n}, arr, len(arr))


def r2_divisor_formula(n: int) -> int:
    """r_2(n) = 4 (d_1(n) - d_3(n)), with d_j counting divisors = j mod 4."""
    d1 = d3 = 0
    for d in range(1, n + 1):
        if n % d == 0:
            if d % 4 == 1:
                d1 += 1
            elif d % 4 == 3:
                d3 += 1
    return 4 * (d1 - d3)


def annulus_points(dim: int, T: float, rho: float) -> FrequencySet:
    """All k in Z^dim with T - rho < |k| <= T.

    An empty window is returned flagged (``.empty``) rather than raised;
    samplers refuse to build a field from it.
    """
    if dim not in (1, 2, 3):
        raise ValueError("annulus_points supports dim in {1, 2, 3}")
    if not 0 < rho <= T:
        raise ValueError("need 0 < rho <= T")
    r = int(math.floor(T))
    axis = np.arange(-r, r + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    k = np.stack([g.ravel() for g in grids], axis=1)
    sq = (k.astype(float) ** 2).sum(axis=1)
    hi = T * T * (1 + _EDGE_RTOL)
    inner = T - rho
    lo = inner * inner * (1 + _EDGE_RTOL)
    keep = (sq <= hi) & (sq > lo) & (sq > 0)
    pts = k[keep].astype(np.int64)
    fs = FrequencySet("torus_window", {"dim": dim, "T": T, "rho": rho}, pts, len(pts))
    if dim >= 2 and not fs.empty:
        area = unit_ball_volume(dim) * (T**dim - inner**dim)
        log.debug("annulus count %d vs volume heuristic %.1f", fs.count, area)
    return fs


def sphere_degree(ell: int) -> FrequencySet:
    if ell < 0:
        raise ValueError("ell must be >= 0")
    return FrequencySet("sphere", {"ell": ell}, np.zeros((0, 2), dtype=np.int64), 2 * ell + 1)


def mode_count_normalizer(fs: FrequencySet) -> float:
    """Exact number of modes; the field is divided by its square root.

    The asymptotic count c_M rho T^(n-1) is logged next to it for torus windows.
    """
    if fs.empty:
        raise EmptyWindowError(f"frequency set {fs.kind} {fs.params} has no modes")
    if fs.kind == "torus_window":
        d, T, rho = fs.params["dim"], fs.params["T"], fs.params["rho"]
        # c_M = (2 pi)^n / (omega_n vol M) in wavenumber units; in frequency units
        # on the unit torus the count is n omega_n rho T^(n-1)
        asym = d * unit_ball_volume(d) * rho * T ** (d - 1) if d >= 2 else 2.0 * rho
        log.debug("exact mode count %d vs asymptotic %.1f", fs.count, asym)
    return float(fs.count)


def half_lattice(points: np.ndarray) -> np.ndarray:
    """Boolean mask of lexicographically positive vectors (one per +-k pair)."""
    pts = np.asarray(points)
    mask = np.zeros(len(pts), dtype=bool)
    undecided = np.ones(len(pts), dtype=bool)
    for c in range(pts.shape[1]):
        col = pts[:, c]
        mask |= undecided & (col > 0)
        undecided &= col == 0
    return mask
