"""Random field synthesis on structured grids.

A *realization* holds the drawn coefficients of one replicate and can be
evaluated at arbitrary points (``evaluate``) or on a whole grid
(``on_grid``). Grid samples carry the realization's ``evaluate`` so the
nodal extractor can resolve ambiguous cells with exact values.

Frequencies follow the e(t) = exp(2 pi i t) convention: a lattice mode k
on the unit torus has frequency |k|, and the degree-l spherical harmonics
on the unit sphere have frequency sqrt(l(l+1)) / (2 pi).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .laws import CoefficientLaw, SeedStream, draw_hermitian_pair, draw_real
from .spectra import (
    EmptyWindowError,
    FrequencySet,
    annulus_points,
    circle_points,
    half_lattice,
    mode_count_normalizer,
    sphere_degree,
)
from .specfun import legendre_row

__all__ = [
    "Torus1",
    "Torus2",
    "Sphere",
    "PlaneChart",
    "FieldSample",
    "Ensemble",
    "TrigRealization",
    "SphereRealization",
    "PlaneWaveRealization",
    "ResolutionError",
    "sample_arw",
    "sample_bandlimited_torus",
    "sample_sphere",
    "sample_rwm_plane",
    "sample_function",
    "empirical_covariance",
    "lag_covariance",
    "coarsen",
]

TWO_PI = 2.0 * math.pi
# Imaginary residue tolerated after Hermitian synthesis.
REALITY_TOL = 1e-10


class ResolutionError(ValueError):
    """Grid too coarse for the field's frequency."""


# -- geometries ---------------------------------------------------------------


@dataclass(frozen=True)
class Torus1:
    N: int

    kind = "torus1"
    periodic = (True,)

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("grid side N must be >= 8")

    @property
    def shape(self):
        return (self.N,)

    @property
    def step(self) -> float:
        return 1.0 / self.N

    def axes(self):
        return (np.arange(self.N) / self.N,)

    def to_dict(self):
        return {"kind": self.kind, "N": self.N}


@dataclass(frozen=True)
class Torus2:
    """Unit square torus [0,1)^2 with N x N nodes at (i/N, j/N)."""

    N: int

    kind = "torus2"
    periodic = (True, True)
    volume = 1.0

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("grid side N must be >= 8")

    @property
    def shape(self):
        return (self.N, self.N)

    @property
    def step(self) -> float:
        return 1.0 / self.N

    def axes(self):
        a = np.arange(self.N) / self.N
        return a, a

    def node(self, i: int, j: int):
        return (i % self.N) / self.N, (j % self.N) / self.N

    def index_to_coords(self, u, v):
        return u / self.N, v / self.N

    def to_dict(self):
        return {"kind": self.kind, "N": self.N}


@dataclass(frozen=True)
class PlaneChart:
    """Square chart [x0, x0+L] x [y0, y0+L] with (N+1) x (N+1) nodes, step L/N."""

    N: int
    L: float = 1.0
    origin: tuple = (0.0, 0.0)

    kind = "plane_chart"
    periodic = (False, False)

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("grid side N must be >= 8")
        if not self.L > 0:
            raise ValueError("side length L must be positive")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def centered(cls, N: int, L: float, center=(0.0, 0.0)) -> "PlaneChart":
        return cls(N, L, (center[0] - L / 2.0, center[1] - L / 2.0))

    @property
    def shape(self):
        return (self.N + 1, self.N + 1)

    @property
    def step(self) -> float:
        return self.L / self.N

    @property
    def volume(self) -> float:
        return self.L * self.L

    def axes(self):
        h = self.step
        i = np.arange(self.N + 1)
        return self.origin[0] + i * h, self.origin[1] + i * h

    def node(self, i: int, j: int):
        return self.origin[0] + i * self.step, self.origin[1] + j * self.step

    def index_to_coords(self, u, v):
        return self.origin[0] + u * self.step, self.origin[1] + v * self.step

    def contains_ball(self, center, radius) -> bool:
        x0, y0 = self.origin
        cx, cy = center
        tol = 1e-12 * self.L
        return (
            cx - radius >= x0 - tol
            and cx + radius <= x0 + self.L + tol
            and cy - radius >= y0 - tol
            and cy + radius <= y0 + self.L + tol
        )

    def to_dict(self):
        return {"kind": self.kind, "N": self.N, "L": self.L, "origin": list(self.origin)}


@dataclass(frozen=True)
class Sphere:
    """Latitude-longitude grid on the unit sphere, staggered off the poles.

    theta_i = (i + 1/2) pi / n_theta, phi_j = 2 pi j / n_phi; values are
    indexed [i, j] and periodic in phi only.
    """

    n_theta: int
    n_phi: int

    kind = "sphere"
    periodic = (False, True)
    volume = 4.0 * math.pi

    def __post_init__(self):
        if self.n_theta < 8 or self.n_phi < 8:
            raise ValueError("sphere grid needs n_theta, n_phi >= 8")

    @property
    def shape(self):
        return (self.n_theta, self.n_phi)

    @property
    def step(self) -> float:
        """Largest arc step between neighbouring nodes (at the equator)."""
        return max(math.pi / self.n_theta, TWO_PI / self.n_phi)

    def axes(self):
        theta = (np.arange(self.n_theta) + 0.5) * math.pi / self.n_theta
        phi = np.arange(self.n_phi) * TWO_PI / self.n_phi
        return theta, phi

    def node(self, i: int, j: int):
        return (i + 0.5) * math.pi / self.n_theta, (j % self.n_phi) * TWO_PI / self.n_phi

    def index_to_coords(self, u, v):
        return (u + 0.5) * math.pi / self.n_theta, v * TWO_PI / self.n_phi

    def to_dict(self):
        return {"kind": self.kind, "n_theta": self.n_theta, "n_phi": self.n_phi}


def coarsen(geometry):
    """The same domain at half the resolution (for Richardson extrapolation)."""
    if isinstance(geometry, Torus2):
        return Torus2(geometry.N // 2)
    if isinstance(geometry, Torus1):
        return Torus1(geometry.N // 2)
    if isinstance(geometry, PlaneChart):
        return PlaneChart(geometry.N // 2, geometry.L, geometry.origin)
    if isinstance(geometry, Sphere):
        return Sphere(geometry.n_theta // 2, geometry.n_phi // 2)
    raise TypeError(f"cannot coarsen {geometry!r}")


def geometry_from_dict(d: dict):
    kind = d["kind"]
    if kind == "torus2":
        return Torus2(int(d["N"]))
    if kind == "torus1":
        return Torus1(int(d["N"]))
    if kind == "plane_chart":
        return PlaneChart(int(d["N"]), float(d["L"]), tuple(d.get("origin", (0.0, 0.0))))
    if kind == "sphere":
        return Sphere(int(d["n_theta"]), int(d["n_phi"]))
    raise ValueError(f"unknown geometry kind {kind!r}")


# -- samples ------------------------------------------------------------------


@dataclass(eq=False)
class FieldSample:
    geometry: object
    values: np.ndarray
    descriptor: dict = field(default_factory=dict)
    frequency: Optional[float] = None
    modes: Optional[int] = None
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.values.shape != self.geometry.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.geometry.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field sample contains non-finite values")

    def __neg__(self) -> "FieldSample":
        ev = self.evaluator
        return FieldSample(
            self.geometry,
            -self.values,
            dict(self.descriptor),
            self.frequency,
            self.modes,
            None if ev is None else (lambda pts: -ev(pts)),
        )


def sample_function(fn: Callable, geometry, frequency: float | None = None, descriptor=None) -> FieldSample:
    """Grid sample of a deterministic function ``fn(x, y)`` (or ``fn(theta, phi)``)."""
    axes = geometry.axes()
    if len(axes) == 1:
        values = np.asarray(fn(axes[0]), dtype=float)
        ev = lambda pts: np.asarray(fn(np.asarray(pts)[:, 0]), dtype=float)
    else:
        X, Y = np.meshgrid(*axes, indexing="ij")
        values = np.asarray(fn(X, Y), dtype=float) * np.ones(geometry.shape)
        ev = lambda pts: np.asarray(fn(np.asarray(pts)[:, 0], np.asarray(pts)[:, 1]), dtype=float) * np.ones(
            len(pts)
        )
    return FieldSample(geometry, values, descriptor or {"ensemble": "function"}, frequency, None, ev)


# -- realizations ---------------------------------------------------------------


class TrigRealization:
    """f(x) = (1/sqrt(M)) sum_k a_k e(<k, x>) with a_{-k} = conj(a_k), x in the unit torus.

    Stored as one complex amplitude per lexicographically positive k, so
    f = (2/sqrt(M)) Re sum_{k > 0} a_k e(<k, x>).
    """

    def __init__(self, fs: FrequencySet, amplitudes: np.ndarray):
        mask = half_lattice(fs.points)
        self.fs = fs
        self.k = fs.points[mask]
        if len(amplitudes) != len(self.k):
            raise ValueError(f"need {len(self.k)} amplitudes, got {len(amplitudes)}")
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.norm = 1.0 / math.sqrt(mode_count_normalizer(fs))
        self.dim = fs.points.shape[1]

    @classmethod
    def draw(cls, fs: FrequencySet, law: CoefficientLaw, stream: SeedStream) -> "TrigRealization":
        if fs.empty:
            raise EmptyWindowError(f"no lattice modes for {fs.kind} {fs.params}")
        count = int(half_lattice(fs.points).sum())
        return cls(fs, draw_hermitian_pair(law, stream.child(0), count))

    def evaluate(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        phase = np.exp(2j * math.pi * (pts @ self.k.T.astype(float)))
        return 2.0 * self.norm * (phase @ self.amplitudes).real

    def on_grid(self, geometry) -> np.ndarray:
        maxfreq = self.fs.max_frequency
        if isinstance(geometry, (Torus1, Torus2)):
            N = geometry.N
            if not N > 4 * maxfreq:
                raise ResolutionError(
                    f"grid N={N} violates the 2x Nyquist margin for frequency {maxfreq:.4g} (need N > {4 * maxfreq:.4g})"
                )
            spec = np.zeros(geometry.shape, dtype=complex)
            idx = tuple((self.k[:, c] % N) for c in range(self.dim))
            nidx = tuple((-self.k[:, c] % N) for c in range(self.dim))
            np.add.at(spec, idx, self.amplitudes)
            np.add.at(spec, nidx, np.conj(self.amplitudes))
            full = np.fft.ifftn(spec) * (N**self.dim) * self.norm
            resid = float(np.max(np.abs(full.imag))) if full.size else 0.0
            if resid > REALITY_TOL:
                raise AssertionError(f"Hermitian synthesis left imaginary residue {resid:.3g}")
            return np.ascontiguousarray(full.real)
        if isinstance(geometry, PlaneChart):
            if self.dim != 2:
                raise ValueError("plane charts need a 2-d field")
            xs, ys = geometry.axes()
            e1 = np.exp(2j * math.pi * np.outer(xs, self.k[:, 0]))
            e2 = np.exp(2j * math.pi * np.outer(ys, self.k[:, 1]))
            return 2.0 * self.norm * ((e1 * self.amplitudes) @ e2.T).real
        raise TypeError(f"torus fields cannot be sampled on {type(geometry).__name__}")


@lru_cache(maxsize=32)
def _legendre_table(ell: int, n_theta: int) -> np.ndarray:
    theta = (np.arange(n_theta) + 0.5) * math.pi / n_theta
    table = legendre_row(ell, np.cos(theta))
    table.setflags(write=False)
    return table


class SphereRealization:
    """Degree-l spherical harmonic combination with unit pointwise variance.

    ``real_basis``: f = a_0 P_0 + sqrt(2) sum_m P_m (a_m cos m phi + b_m sin m phi),
    with P_m the normalized Legendre factor of cos(theta). This equals
    (1/sqrt(2l+1)) [a_0 Y_0 + sum_m sqrt(2) (a_m Re Y_m + b_m Im Y_m)].

    ``complex_bernoulli``: the real part of (1/sqrt(2l+1)) sum_{m=-l}^{l} a_m Y_{l,m},
    i.e. a_0 P_0 + sum_{m>0} P_m cos(m phi) (a_m + (-1)^m a_{-m}).
    """

    def __init__(self, ell: int, cos_coef: np.ndarray, sin_coef: np.ndarray, basis: str):
        self.ell = ell
        self.cos_coef = np.asarray(cos_coef, dtype=float)
        self.sin_coef = np.asarray(sin_coef, dtype=float)
        self.basis = basis

    @classmethod
    def draw(cls, ell: int, law: CoefficientLaw, stream: SeedStream, basis: str = "real_basis"):
        coeffs = draw_real(law, stream.child(0), 2 * ell + 1)
        if basis == "real_basis":
            a, b = coeffs[: ell + 1], coeffs[ell + 1 :]
            cos_coef = a.copy()
            cos_coef[1:] *= math.sqrt(2.0)
            sin_coef = np.concatenate([[0.0], math.sqrt(2.0) * b])
        elif basis == "complex_bernoulli":
            # coeffs[ell + m] is a_m for m = -ell..ell
            m = np.arange(ell + 1)
            pos = coeffs[ell + m]
            neg = coeffs[ell - m]
            cos_coef = pos + np.where(m % 2 == 0, 1.0, -1.0) * neg
            cos_coef[0] = coeffs[ell]
            sin_coef = np.zeros(ell + 1)
        else:
            raise ValueError(f"unknown sphere basis {basis!r}")
        return cls(ell, cos_coef, sin_coef, basis)

    def evaluate(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        theta, phi = pts[:, 0], pts[:, 1]
        P = legendre_row(self.ell, np.cos(theta))
        m = np.arange(self.ell + 1)[:, None]
        trig = self.cos_coef[:, None] * np.cos(m * phi) + self.sin_coef[:, None] * np.sin(m * phi)
        return (P * trig).sum(axis=0)

    def on_grid(self, geometry) -> np.ndarray:
        if not isinstance(geometry, Sphere):
            raise TypeError("spherical harmonics need a Sphere grid")
        P = _legendre_table(self.ell, geometry.n_theta)
        _, phi = geometry.axes()
        m = np.arange(self.ell + 1)[:, None]
        trig = self.cos_coef[:, None] * np.cos(m * phi) + self.sin_coef[:, None] * np.sin(m * phi)
        return P.T @ trig


class PlaneWaveRealization:
    """F(x) = sqrt(2/J) sum_j a_j cos(2 pi <x, xi_j> + theta_j), xi_j uniform on the unit circle."""

    def __init__(self, amplitudes, directions, phases):
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.directions = np.asarray(directions, dtype=float)
        self.phases = np.asarray(phases, dtype=float)
        self.J = len(self.amplitudes)

    @classmethod
    def draw(cls, J: int, law: CoefficientLaw, stream: SeedStream) -> "PlaneWaveRealization":
        amps = draw_real(law, stream.child(0), J)
        rng = stream.child(1).generator()
        angle = rng.uniform(0.0, TWO_PI, J)
        phase = rng.uniform(0.0, TWO_PI, J)
        dirs = np.stack([np.cos(angle), np.sin(angle)], axis=1)
        return cls(amps, dirs, phase)

    @property
    def _weights(self):
        return math.sqrt(2.0 / self.J) * self.amplitudes * np.exp(1j * self.phases)

    def evaluate(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (np.exp(2j * math.pi * (pts @ self.directions.T)) @ self._weights).real

    def on_grid(self, geometry) -> np.ndarray:
        if isinstance(geometry, Sphere):
            raise TypeError("plane waves live on a plane chart")
        xs, ys = geometry.axes()
        e1 = np.exp(2j * math.pi * np.outer(xs, self.directions[:, 0]))
        e2 = np.exp(2j * math.pi * np.outer(ys, self.directions[:, 1]))
        return ((e1 * self._weights) @ e2.T).real


# -- ensembles ----------------------------------------------------------------

_ENSEMBLE_KINDS = ("arw", "torus_window", "sphere", "rwm")


@dataclass(frozen=True)
class Ensemble:
    """Which random field to draw.

    arw: n; torus_window: dim, T, rho; sphere: ell, basis; rwm: J.
    """

    kind: str
    n: Optional[int] = None
    dim: int = 2
    T: Optional[float] = None
    rho: Optional[float] = None
    ell: Optional[int] = None
    basis: str = "real_basis"
    J: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble {self.kind!r}; expected one of {_ENSEMBLE_KINDS}")
        need = {"arw": ("n",), "torus_window": ("T", "rho"), "sphere": ("ell",), "rwm": ("J",)}[self.kind]
        for name in need:
            if getattr(self, name) is None:
                raise ValueError(f"ensemble {self.kind} needs parameter {name}")

    @classmethod
    def arw(cls, n: int):
        return cls("arw", n=n)

    @classmethod
    def torus_window(cls, T: float, rho: float, dim: int = 2):
        return cls("torus_window", dim=dim, T=T, rho=rho)

    @classmethod
    def sphere(cls, ell: int, basis: str = "real_basis"):
        return cls("sphere", ell=ell, basis=basis)

    @classmethod
    def rwm(cls, J: int):
        return cls("rwm", J=J)

    def to_dict(self) -> dict:
        keys = {
            "arw": ("n",),
            "torus_window": ("dim", "T", "rho"),
            "sphere": ("ell", "basis"),
            "rwm": ("J",),
        }[self.kind]
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}

    def frequency_set(self) -> FrequencySet:
        if self.kind == "arw":
            return _circle_cached(self.n)
        if self.kind == "torus_window":
            return _annulus_cached(self.dim, float(self.T), float(self.rho))
        if self.kind == "sphere":
            return sphere_degree(self.ell)
        raise ValueError("rwm has no discrete frequency set")

    @property
    def frequency(self) -> float:
        """Frequency scale: the nodal density is proportional to it."""
        if self.kind == "arw":
            return math.sqrt(self.n)
        if self.kind == "torus_window":
            return float(self.T)
        if self.kind == "sphere":
            return math.sqrt(self.ell * (self.ell + 1)) / TWO_PI
        return 1.0

    @property
    def modes(self) -> int:
        if self.kind == "rwm":
            return self.J
        return self.frequency_set().count

    def realize(self, law: CoefficientLaw, stream: SeedStream, coefficients=None):
        if self.kind in ("arw", "torus_window"):
            fs = self.frequency_set()
            if fs.empty:
                if self.kind == "arw":
                    raise EmptyWindowError(f"n={self.n} is not a sum of two squares")
                raise EmptyWindowError(f"window ({self.T - self.rho}, {self.T}] holds no lattice points")
            if coefficients is not None:
                return TrigRealization(fs, coefficients)
            return TrigRealization.draw(fs, law, stream)
        if self.kind == "sphere":
            if self.ell < 1:
                raise ValueError("sphere ensemble needs ell >= 1")
            return SphereRealization.draw(self.ell, law, stream, self.basis)
        if self.J < 1:
            raise ValueError("rwm needs J >= 1")
        return PlaneWaveRealization.draw(self.J, law, stream)

    def sample(self, law: CoefficientLaw, geometry, stream: SeedStream, coefficients=None) -> FieldSample:
        real = self.realize(law, stream, coefficients)
        if self.kind == "sphere":
            _check_sphere_resolution(self.ell, geometry)
        values = real.on_grid(geometry)
        descriptor = {
            "ensemble": self.to_dict(),
            "law": law.label,
            "master_seed": stream.master_seed,
            "stream_index": stream.stream_index,
        }
        return FieldSample(geometry, values, descriptor, self.frequency, self.modes, real.evaluate)


@lru_cache(maxsize=64)
def _circle_cached(n: int) -> FrequencySet:
    return circle_points(n)


@lru_cache(maxsize=64)
def _annulus_cached(dim: int, T: float, rho: float) -> FrequencySet:
    return annulus_points(dim, T, rho)


def _check_sphere_resolution(ell: int, geometry):
    if not isinstance(geometry, Sphere):
        raise TypeError("spherical harmonics need a Sphere grid")
    # wavelength 2 pi / l against the coarsest arc step
    per_wavelength = (TWO_PI / ell) / geometry.step
    if per_wavelength < 2:
        raise ResolutionError(f"{per_wavelength:.2f} points per wavelength for l={ell}; need >= 2")
    if geometry.n_theta < 8 * ell or per_wavelength < 4:
        warnings.warn(
            f"sphere grid {geometry.n_theta}x{geometry.n_phi} is coarse for l={ell} "
            f"({per_wavelength:.1f} points per wavelength; n_theta >= 8l recommended)",
            stacklevel=3,
        )


# -- convenience samplers ----------------------------------------------------------


def sample_arw(n: int, law: CoefficientLaw, geometry, stream: SeedStream, coefficients=None) -> FieldSample:
    """Arithmetic random wave g_n on the unit torus.

    ``coefficients`` overrides the random draw (one complex amplitude per
    lexicographically positive lattice point); used by tests.
    """
    fs = _circle_cached(n)
    if fs.count == 0:
        raise EmptyWindowError(f"n={n} is not a sum of two squares")
    return Ensemble.arw(n).sample(law, geometry, stream, coefficients)


def sample_bandlimited_torus(dim: int, T: float, rho: float, law, geometry, stream) -> FieldSample:
    return Ensemble.torus_window(T, rho, dim).sample(law, geometry, stream)


def sample_sphere(ell: int, law, geometry, stream, basis: str = "real_basis") -> FieldSample:
    return Ensemble.sphere(ell, basis).sample(law, geometry, stream)


def sample_rwm_plane(J: int, geometry, stream, law: CoefficientLaw = CoefficientLaw()) -> FieldSample:
    return Ensemble.rwm(J).sample(law, geometry, stream)


# -- covariance ---------------------------------------------------------------


def empirical_covariance(samples: Sequence[FieldSample], pairs) -> tuple[np.ndarray, np.ndarray]:
    """Mean of f(p) f(q) over samples for each node pair, with standard errors.

    ``pairs`` is a sequence of ((i1, j1), (i2, j2)) grid indices.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    idx = np.asarray(pairs, dtype=int)
    stack = np.stack([s.values for s in samples])
    a = stack[(slice(None),) + tuple(idx[:, 0].T)]
    b = stack[(slice(None),) + tuple(idx[:, 1].T)]
    prod = a * b
    m = prod.shape[0]
    return prod.mean(axis=0), prod.std(axis=0, ddof=1) / math.sqrt(m)


def lag_covariance(samples: Sequence[FieldSample], lag) -> tuple[float, float]:
    """Covariance at a grid-index lag, averaged over every node pair with that lag.

    Periodic axes wrap; on non-periodic axes only in-grid pairs count. The
    standard error treats each sample's spatial average as one observation.
    """
    lag = tuple(int(d) for d in lag)
    per = []
    for s in samples:
        v = s.values
        a, b = v, v
        for axis, (d, periodic) in enumerate(zip(lag, s.geometry.periodic)):
            if d == 0:
                continue
            if periodic:
                b = np.roll(b, -d, axis=axis)
            else:
                sl_a = [slice(None)] * v.ndim
                sl_b = [slice(None)] * v.ndim
                if d > 0:
                    sl_a[axis], sl_b[axis] = slice(0, -d), slice(d, None)
                else:
                    sl_a[axis], sl_b[axis] = slice(-d, None), slice(0, d)
                a, b = a[tuple(sl_a)], b[tuple(sl_b)]
        per.append(float(np.mean(a * b)))
    per = np.asarray(per)
    return float(per.mean()), float(per.std(ddof=1) / math.sqrt(len(per)))
