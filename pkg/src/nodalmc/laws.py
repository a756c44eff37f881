"""Coefficient laws for the i.i.d. amplitudes and counter-based seed streams.

Every law is centred with unit variance by construction. Seeds for
replicates are derived statelessly from ``(master_seed, stream_index)``
with a SplitMix64-style avalanche, so replicate ``k`` draws the same
numbers no matter how replicates are scheduled across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["CoefficientLaw", "SeedStream", "draw_real", "draw_hermitian_pair", "mix64", "parse_law"]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix_finalize(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def mix64(master_seed: int, stream_index: int) -> int:
    """Stateless 64-bit mixing of a (seed, index) pair.

    Two SplitMix64 finalizer rounds: the master seed is avalanched first,
    then combined with the golden-ratio-weighted index and avalanched
    again. For a fixed master seed the map index -> seed is a bijection
    on 64-bit integers, so distinct indices never collide.
    """
    base = _splitmix_finalize((master_seed + _GOLDEN) & MASK64)
    return _splitmix_finalize((base + (stream_index + 1) * _GOLDEN) & MASK64)


@dataclass(frozen=True)
class SeedStream:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & MASK64)
        object.__setattr__(self, "stream_index", int(self.stream_index) & MASK64)

    @property
    def seed(self) -> int:
        return mix64(self.master_seed, self.stream_index)

    def child(self, index: int) -> "SeedStream":
        """Independent sub-stream, e.g. coefficients vs. random directions of one replicate."""
        return SeedStream(self.seed, index)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))


_KINDS = ("gaussian", "rademacher", "uniform", "two_point")


@dataclass(frozen=True)
class CoefficientLaw:
    """A centred unit-variance law.

    ``two_point`` takes the value sqrt((1-p)/p) with probability p and
    -sqrt(p/(1-p)) otherwise; ``uniform`` is uniform on [-sqrt 3, sqrt 3].
    """

    kind: str = "gaussian"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown coefficient law {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "two_point":
            if self.p is None or not 0.0 < self.p < 1.0:
                raise ValueError("two_point law needs p in (0, 1)")
        elif self.p is not None:
            raise ValueError(f"law {self.kind!r} takes no parameter")

    @property
    def label(self) -> str:
        if self.kind == "two_point":
            return f"two-point:{self.p:g}"
        return self.kind

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "rademacher":
            return np.where(rng.random(size) < 0.5, -1.0, 1.0)
        if self.kind == "uniform":
            return math.sqrt(3.0) * (2.0 * rng.random(size) - 1.0)
        p = self.p
        hi, lo = math.sqrt((1 - p) / p), -math.sqrt(p / (1 - p))
        return np.where(rng.random(size) < p, hi, lo)


def parse_law(text: str) -> CoefficientLaw:
    """Parse ``gaussian``, ``rademacher``, ``uniform`` or ``two-point:p``."""
    text = text.strip().lower()
    if text.startswith(("two-point", "two_point")):
        _, _, p = text.partition(":")
        if not p:
            raise ValueError("two-point law needs a probability, e.g. two-point:0.3")
        return CoefficientLaw("two_point", float(p))
    return CoefficientLaw(text)


def draw_real(law: CoefficientLaw, stream: SeedStream, count: int) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be >= 0")
    return law.sample(stream.generator(), count)


def draw_hermitian_pair(law: CoefficientLaw, stream: SeedStream, count: int) -> np.ndarray:
    """Complex amplitudes (xi + i*eta)/sqrt(2) with xi, eta i.i.d. from ``law``.

    One value per antipodal frequency pair; the partner gets the conjugate.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    parts = law.sample(stream.generator(), (2, count))
    return (parts[0] + 1j * parts[1]) / math.sqrt(2.0)
