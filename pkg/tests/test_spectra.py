import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodalmc.spectra import (
    EmptyWindowError,
    annulus_points,
    circle_points,
    half_lattice,
    mode_count_normalizer,
    r2_divisor_formula,
    sphere_degree,
)


def test_circle_counts_match_divisor_formula():
    for n in range(1, 501):
        assert circle_points(n).count == r2_divisor_formula(n), n


def test_circle_small_cases():
    assert circle_points(1).count == 4
    assert circle_points(5).count == 8
    assert circle_points(25).count == 12
    assert circle_points(65).count == 16
    fs = circle_points(3)
    assert fs.empty and fs.points.shape == (0, 2)


@given(st.integers(1, 5000))
def test_circle_points_on_circle_and_symmetric(n):
    pts = circle_points(n).points
    assert np.all((pts**2).sum(axis=1) == n)
    as_set = {tuple(p) for p in pts}
    assert all((-a, -b) in as_set and (b, a) in as_set for a, b in as_set)
    assert len(as_set) == len(pts)


def test_annulus_membership_brute_force():
    for dim, T, rho in [(2, 10.0, 3.0), (2, 7.5, 0.6), (3, 5.0, 2.0), (1, 9.0, 4.0)]:
        fs = annulus_points(dim, T, rho)
        r = int(T) + 1
        brute = set()
        for k in np.ndindex(*([2 * r + 1] * dim)):
            v = np.array(k) - r
            s = math.sqrt(float(v @ v))
            if T - rho < s <= T and s > 0:
                brute.add(tuple(int(c) for c in v))
        assert {tuple(p) for p in fs.points} == brute


def test_annulus_edges_tolerant_and_half_open():
    # |k| = 5 exactly at the outer edge is kept, at the inner edge dropped
    fs = annulus_points(2, 5.0, 1.0)
    norms = np.sqrt((fs.points**2).sum(axis=1))
    assert np.isclose(norms.max(), 5.0)
    assert (fs.points**2).sum(axis=1).min() > 16


def test_annulus_empty_window_is_flagged():
    fs = annulus_points(2, 1.9, 0.2)
    assert fs.empty
    with pytest.raises(EmptyWindowError):
        mode_count_normalizer(fs)


def test_annulus_count_near_area():
    T = 60.0
    rho = T / math.log(T)
    fs = annulus_points(2, T, rho)
    area = math.pi * (T**2 - (T - rho) ** 2)
    assert fs.count == pytest.approx(area, rel=0.02)


def test_sphere_degree():
    assert sphere_degree(20).count == 41
    assert sphere_degree(0).count == 1
    assert sphere_degree(3).max_frequency == pytest.approx(math.sqrt(12) / (2 * math.pi))


def test_mode_count_normalizer_is_exact_count():
    assert mode_count_normalizer(circle_points(25)) == 12.0
    fs = annulus_points(2, 30.0, 30.0 / math.log(30.0))
    assert mode_count_normalizer(fs) == fs.count


def test_half_lattice_picks_one_of_each_pair():
    pts = annulus_points(3, 4.0, 2.0).points
    mask = half_lattice(pts)
    pos = {tuple(p) for p in pts[mask]}
    neg = {tuple(-p) for p in pts[~mask]}
    assert pos == neg and 2 * len(pos) == len(pts)


@pytest.mark.parametrize("args", [(4, 3.0, 1.0), (2, 3.0, 0.0), (2, 3.0, 4.0)])
def test_annulus_rejects(args):
    with pytest.raises(ValueError):
        annulus_points(*args)
