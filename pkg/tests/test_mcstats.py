import math

import numpy as np
import pytest
from scipy import stats

from nodalmc.ensembles import Ensemble, PlaneChart, Sphere, Torus2, sample_function
from nodalmc.laws import CoefficientLaw, SeedStream, parse_law
from nodalmc.mcstats import (
    ExperimentSpec,
    Measurement,
    ReplicateError,
    distribution_compare,
    fingerprint,
    ks_statistic,
    locality_check,
    mc_expectation,
    permutation_ks,
    run_replicates,
    summarize,
    variance_scan,
)
from nodalmc.nodal import nodal_length, restricted_nodal_length
from nodalmc.specfun import KernelSpec, kac_rice_density

G = CoefficientLaw()


def arw_spec(m=12, seed=3, **kw):
    return ExperimentSpec(Ensemble.arw(5), G, Torus2(32), m, seed, **kw)


# -- replicates and determinism ----------------------------------------------------


def test_workers_do_not_change_results():
    spec = arw_spec(m=16, richardson=True)
    assert np.array_equal(run_replicates(spec, workers=1), run_replicates(spec, workers=3))


def test_replicate_k_uses_stream_k():
    spec = arw_spec(m=10)
    full = run_replicates(spec)
    tail = run_replicates(ExperimentSpec(spec.ensemble, G, spec.geometry, 5, spec.seed, first_index=5))
    assert np.array_equal(full[5:], tail)
    direct = nodal_length(spec.ensemble.sample(G, spec.geometry, SeedStream(3, 7))).length
    assert full[7, 0] == direct


def test_richardson_summary_fields():
    s = mc_expectation(arw_spec(m=8, richardson=True))
    assert s.raw is not None and s.raw.m == 8
    assert s.mean == pytest.approx((4 * s.raw.mean - s.extra["coarse_mean"]) / 3)
    d = s.to_dict()
    assert d["raw"]["mean"] == s.raw.mean and "values" not in d
    assert len(s.to_dict(include_values=True)["values"]) == 8


def test_replicate_failure_is_tagged():
    spec = ExperimentSpec(Ensemble.arw(3), G, Torus2(16), 4)
    with pytest.raises(ReplicateError) as err:
        run_replicates(spec)
    assert err.value.index == 0


def test_restricted_measurement_fixed_center():
    meas = Measurement("restricted_length", center=(0.3, 0.6), radius=0.2)
    spec = ExperimentSpec(Ensemble.arw(13), G, Torus2(64), 4, 1, meas)
    vals = run_replicates(spec)[:, 0]
    for k in range(4):
        s = spec.ensemble.sample(G, spec.geometry, SeedStream(1, k))
        assert vals[k] == restricted_nodal_length(s, (0.3, 0.6), 0.2).length


def test_restricted_measurement_patch_matches_centered_chart():
    ens = Ensemble.torus_window(20.0, 20.0 / math.log(20.0))
    r = 1 / 40
    meas = Measurement("restricted_length", radius=r)
    spec = ExperimentSpec(ens, G, PlaneChart(32, 2.2 * r), 3, 5, meas)
    vals = run_replicates(spec)[:, 0]
    for k in range(3):
        stream = SeedStream(5, k)
        u = stream.child(2).generator().random(2)
        center = (float(u[0]), float(u[1]))
        s = ens.sample(G, PlaneChart.centered(32, 2.2 * r, center), stream)
        assert vals[k] == pytest.approx(restricted_nodal_length(s, center, r).length, abs=1e-15)


def test_small_ball_measurement():
    meas = Measurement("small_ball", tau=0.1, point=(0.2, 0.4))
    s = mc_expectation(ExperimentSpec(Ensemble.arw(25), G, Torus2(32), 50, 0, meas))
    assert set(np.unique(s.values)) <= {0.0, 1.0}


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(Ensemble.arw(5), G, Torus2(32), 1)
    with pytest.raises(ValueError):
        ExperimentSpec(Ensemble.arw(5), G, Torus2(32), 4, measurement=Measurement("restricted_length"), richardson=True)
    with pytest.raises(ValueError):
        Measurement("small_ball")
    with pytest.raises(ValueError):
        Measurement("area")


# -- fingerprints and serialization --------------------------------------------------


def test_spec_round_trip_and_fingerprint():
    specs = [
        arw_spec(richardson=True),
        ExperimentSpec(Ensemble.sphere(5, "complex_bernoulli"), parse_law("two-point:0.3"), Sphere(64, 128), 4, 9),
        ExperimentSpec(
            Ensemble.torus_window(10.0, 3.0), G, PlaneChart(16, 0.2), 4, 2, Measurement("restricted_length", radius=0.05)
        ),
        ExperimentSpec(Ensemble.rwm(32), G, PlaneChart(32, 2.0), 4, first_index=7),
    ]
    for spec in specs:
        again = ExperimentSpec.from_dict(spec.to_dict())
        assert again == spec
        assert fingerprint(again) == fingerprint(spec)
    assert len({fingerprint(s) for s in specs}) == len(specs)
    assert fingerprint(arw_spec(seed=3)) != fingerprint(arw_spec(seed=4))


def test_fingerprint_is_key_order_independent():
    assert fingerprint({"a": 1, "b": [1, 2]}) == fingerprint({"b": [1, 2], "a": 1})
    assert len(fingerprint({"a": 1})) == 16


# -- summaries ---------------------------------------------------------------------------


def test_summarize_matches_numpy():
    x = np.random.default_rng(0).normal(3, 2, 500)
    s = summarize(x)
    assert s.mean == pytest.approx(x.mean(), rel=1e-14)
    assert s.variance == pytest.approx(x.var(ddof=1), rel=1e-12)
    assert s.std_error == pytest.approx(x.std(ddof=1) / math.sqrt(500), rel=1e-12)
    assert s.ci95[0] < s.mean < s.ci95[1]
    assert s.ci95[1] - s.mean == pytest.approx(1.96 * s.std_error, rel=1e-3)


# -- two-sample tests ------------------------------------------------------------------


def test_ks_statistic_matches_scipy_with_ties():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.integers(0, 6, rng.integers(5, 60)).astype(float)
        y = rng.integers(0, 7, rng.integers(5, 60)).astype(float)
        assert ks_statistic(x, y) == pytest.approx(stats.ks_2samp(x, y).statistic, abs=1e-14)
    x, y = rng.normal(size=300), rng.normal(0.3, 1, size=200)
    assert ks_statistic(x, y) == pytest.approx(stats.ks_2samp(x, y).statistic, abs=1e-14)


def test_permutation_p_values():
    rng = np.random.default_rng(2)
    x = rng.normal(size=200)
    ks, p = permutation_ks(x, x.copy(), permutations=1000)
    assert ks == 0.0 and p == 1.0
    ks, p = permutation_ks(x, rng.normal(2.0, 1.0, 200), permutations=1000)
    assert p == pytest.approx(1 / 1001)
    # null calibration: p-values are roughly uniform
    ps = [permutation_ks(rng.normal(size=80), rng.normal(size=80), 1000, seed=s)[1] for s in range(60)]
    assert 0.3 < np.mean(ps) < 0.7


def test_permutation_deterministic_given_seed():
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=120), rng.normal(size=100)
    assert permutation_ks(x, y, 1000, seed=7) == permutation_ks(x, y, 1000, seed=7)


def test_distribution_compare_validation():
    a = arw_spec(m=500)
    with pytest.raises(ValueError, match="geometries"):
        distribution_compare(a, ExperimentSpec(Ensemble.arw(5), G, Torus2(64), 500))
    with pytest.raises(ValueError, match="m >="):
        distribution_compare(arw_spec(m=20), arw_spec(m=20, seed=4))
    with pytest.raises(ValueError, match="permutations"):
        distribution_compare(a, arw_spec(m=500, seed=4), permutations=100)
    meas = Measurement("restricted_length", center=(0.5, 0.5), radius=0.1)
    with pytest.raises(ValueError, match="functionals"):
        distribution_compare(a, ExperimentSpec(Ensemble.arw(5), G, Torus2(32), 500, measurement=meas))


def test_distribution_compare_same_law_is_consistent():
    a = arw_spec(m=500, seed=10)
    b = arw_spec(m=500, seed=11)
    res = distribution_compare(a, b, permutations=1000)
    assert res.ks < 0.1 and res.p_value > 0.01
    assert res.to_dict()["m_a"] == 500


# -- scans and locality -------------------------------------------------------------------


def test_variance_scan_shapes():
    family = [(n, ExperimentSpec(Ensemble.arw(n), G, Torus2(64), 20, 1)) for n in (5, 13, 25)]
    out = variance_scan(family, bootstrap=50, normalizer=lambda n, spec: spec.ensemble.modes**2 / n)
    assert [r["parameter"] for r in out["rows"]] == [5, 13, 25]
    assert all(r["variance_se"] > 0 and "scaled_variance" in r for r in out["rows"])
    assert math.isfinite(out["loglog_slope"])
    with pytest.raises(ValueError):
        variance_scan(family[:2])


def test_locality_on_parallel_lines():
    s = sample_function(lambda x, y: np.sin(2 * np.pi * x), Torus2(128))
    out = locality_check([s], frequency=4.0, centers_per_side=32)
    row = out["samples"][0]
    assert row["global"] == pytest.approx(2.0)
    # exact average of the chord lengths 2 sqrt(r^2 - d^2) over the center lattice
    lam, r = 4.0, 0.125
    cx = (np.arange(32) + 0.5) / 32
    d = np.abs(np.stack([cx - 0.0, cx - 0.5, cx - 1.0]))
    chords = np.where(d < r, 2 * np.sqrt(np.clip(r * r - d * d, 0, None)), 0.0).sum(axis=0)
    want = 4 * lam / math.pi * np.mean(chords * lam)
    assert row["reconstructed"] == pytest.approx(want, rel=1e-12)
    assert out["mean_relative_discrepancy"] < 0.02


def test_locality_zero_free_field():
    s = sample_function(lambda x, y: 3 + np.cos(2 * np.pi * x), Torus2(32))
    assert locality_check([s], frequency=2.0)["mean_relative_discrepancy"] == 0.0
    with pytest.raises(ValueError):
        locality_check([s], frequency=2.0, centers_per_side=8)


def test_kac_rice_annulus_branch_against_monte_carlo():
    # window (32, 40]: Upsilon = 0.8
    T, rho = 40.0, 8.0
    spec = ExperimentSpec(Ensemble.torus_window(T, rho), G, Torus2(512), 40, seed=17, richardson=True)
    s = mc_expectation(spec)
    predicted = kac_rice_density(KernelSpec(2, 0.8)) * T
    assert abs(s.mean - predicted) < max(4 * s.std_error, 2e-3 * predicted)
    # a density carrying sqrt(2/pi) in place of 1/sqrt(pi) would be ~40% higher
    assert abs(s.mean - predicted * math.sqrt(2)) > 100 * s.std_error
