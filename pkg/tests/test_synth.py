import math

import mpmath
import numpy as np
import pytest

from exp2fscil import (OverlapQuery, ProtocolConfig, SynthSpec, generate_dataset, measure_separation,
                       monte_carlo_overlap, overlap_bound, std_normal_cdf, validate)
from exp2fscil.core import SessionDataset, Split
from exp2fscil.synth import MeanPlacement, simplex_means, sphere_means, worst_case_estimates


def pairwise(M):
    return [np.linalg.norm(M[i] - M[j]) for i in range(len(M)) for j in range(i + 1, len(M))]


class TestMeanPlacement:
    def test_simplex_three_classes(self, rng):
        M = simplex_means(3, 2, 2.0, rng)
        np.testing.assert_allclose(pairwise(M), 2.0, atol=1e-9)

    @pytest.mark.parametrize("n,dim", [(2, 1), (5, 4), (10, 32)])
    def test_simplex_exact(self, rng, n, dim):
        np.testing.assert_allclose(pairwise(simplex_means(n, dim, 1.5, rng)), 1.5, atol=1e-9)

    def test_simplex_needs_room(self, rng):
        with pytest.raises(ValueError):
            simplex_means(5, 2, 1.0, rng)

    @pytest.mark.parametrize("n,dim", [(40, 32), (12, 2), (100, 8)])
    def test_sphere_min_distance(self, rng, n, dim):
        M = sphere_means(n, dim, 3.0, rng)
        assert min(pairwise(M)) == pytest.approx(3.0, rel=0.01)
        radii = np.linalg.norm(M, axis=1)
        np.testing.assert_allclose(radii, radii[0], rtol=1e-12)

    def test_sphere_infeasible(self, rng):
        with pytest.raises(ValueError, match="packing infeasible"):
            sphere_means(5, 2, 1.0, rng, attempts_per_point=1, max_growth=1)

    def test_default_placement(self):
        small = SynthSpec(ProtocolConfig(5, 5, 0, 1, 1, 4), 1.0, 1.0)
        big = SynthSpec(ProtocolConfig(40, 20, 5, 4, 5, 32), 1.0, 1.0)
        assert small.placement() is MeanPlacement.SCALED_SIMPLEX
        assert big.placement() is MeanPlacement.SPHERE_REJECTION


class TestGenerate:
    def test_sigma_zero_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(ProtocolConfig(3, 3, 0, 1, 1, 2), 0.0, 1.0)

    def test_covariance_trace(self):
        spec = SynthSpec(ProtocolConfig(2, 2, 0, 1, 1, 16), sigma_intra=0.5, target_delta_inter=1.0,
                         test_per_class=10_000, base_train_per_class=5, seed=1)
        ds = generate_dataset(spec)
        te = ds.test[0]
        for c in range(2):
            cov = np.cov(te.features[te.labels == c], rowvar=False)
            assert np.trace(cov) / 16 == pytest.approx(0.25, rel=0.05)

    def test_layout(self):
        spec = SynthSpec(ProtocolConfig(10, 4, 3, 2, 3, 8), 0.5, 2.0, test_per_class=7,
                         base_train_per_class=11, seed=5)
        ds = generate_dataset(spec)
        assert validate(ds).ok
        assert len(ds.train[0]) == 4 * 11
        assert all(len(ds.train[t]) == 2 * 3 for t in range(1, 4))
        assert [len(s) for s in ds.test] == [28, 42, 56, 70]
        # class test pools are shared across sessions
        np.testing.assert_array_equal(ds.test[1].features[:28], ds.test[0].features)

    def test_offset(self):
        spec = SynthSpec(ProtocolConfig(3, 3, 0, 1, 1, 4), 0.1, 2.0, seed=2, offset=8.0)
        ds = generate_dataset(spec)
        centre = ds.class_means.mean(axis=0)
        np.testing.assert_allclose(centre, 8.0 / 2.0, atol=1e-12)
        np.testing.assert_allclose(pairwise(ds.class_means), 2.0, atol=1e-9)

    def test_reproducible(self):
        spec = SynthSpec(ProtocolConfig(10, 4, 3, 2, 3, 8), 0.5, 2.0, seed=99)
        a, b = generate_dataset(spec), generate_dataset(spec)
        for sa, sb in zip(a.train + a.test, b.train + b.test):
            assert sa.features.tobytes() == sb.features.tobytes()
            assert sa.labels.tobytes() == sb.labels.tobytes()
        c = generate_dataset(SynthSpec(ProtocolConfig(10, 4, 3, 2, 3, 8), 0.5, 2.0, seed=100))
        assert c.test[0].features.tobytes() != a.test[0].features.tobytes()

    def test_spec_dict_round_trip(self):
        spec = SynthSpec(ProtocolConfig(10, 4, 3, 2, 3, 8), 0.5, 2.0, seed=99, offset=1.5)
        again = SynthSpec.from_dict(spec.to_dict())
        assert again.to_dict() == spec.to_dict()


class TestMeasureSeparation:
    def _point_masses(self, centres):
        cfg = ProtocolConfig(len(centres), len(centres), 0, 1, 1, 2)
        X = np.repeat(np.array(centres, float), 3, axis=0)
        y = np.repeat(np.arange(len(centres)), 3)
        return SessionDataset(cfg, [Split(X, y)], [Split(np.empty((0, 2)), np.empty(0))])

    def test_point_masses(self):
        delta, sigma = measure_separation(self._point_masses([(0.0, 0.0), (1.0, 0.0)]))
        assert (delta, sigma) == (1.0, 0.0)

    def test_collinear(self):
        delta, _ = measure_separation(self._point_masses([(0.0, 1.0), (1.0, 1.0), (3.0, 1.0)]))
        assert delta == 1.0

    def test_singleton(self):
        cfg = ProtocolConfig(2, 2, 0, 1, 1, 2)
        ds = SessionDataset(cfg, [Split(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 2.0]]), np.array([0, 1, 1]))],
                            [Split(np.empty((0, 2)), np.empty(0))])
        with pytest.raises(ValueError, match="covariance undefined"):
            measure_separation(ds)

    def test_recovers_spec(self):
        dim = 8
        spec = SynthSpec(ProtocolConfig(4, 4, 0, 1, 1, dim), sigma_intra=0.3, target_delta_inter=2.0,
                         test_per_class=5000, base_train_per_class=5, seed=11)
        delta, sigma = measure_separation(generate_dataset(spec))
        assert delta == pytest.approx(2.0, rel=0.03)
        # root of the covariance trace is sigma_intra * sqrt(dim)
        assert sigma / math.sqrt(dim) == pytest.approx(0.3, rel=0.03)


class TestNormalCdf:
    def test_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_one(self):
        assert std_normal_cdf(1.0) == pytest.approx(0.8413447461, abs=1e-8)

    @pytest.mark.parametrize("x", [-8.0, -3.3, -1.0, -0.2, 0.0, 0.7, 1.0, 2.5, 6.0, 9.0])
    def test_against_mpmath(self, x):
        with mpmath.workdps(40):
            exact = float(mpmath.ncdf(x))
        assert abs(std_normal_cdf(x) - exact) <= 1e-10

    @pytest.mark.parametrize("x", np.linspace(-10, 10, 41))
    def test_symmetry(self, x):
        assert abs(std_normal_cdf(-x) + std_normal_cdf(x) - 1.0) <= 1e-10


class TestOverlapBound:
    def test_half_gap(self):
        assert overlap_bound(2.0, 0.7, 1.0) == 0.5

    def test_fig_a(self):
        assert overlap_bound(1.0, 0.5, 0.0) == pytest.approx(0.158655, abs=1e-6)

    def test_fig_b_tail(self):
        b = overlap_bound(5.0, 0.1, 0.0)
        assert 0.0 <= b < 1e-100

    def test_monotone(self):
        grid = np.linspace(0.1, 3.0, 12)
        for d in grid:
            for s in grid:
                eps = np.linspace(0, d, 10)
                vals = [overlap_bound(d, s, e) for e in eps]
                assert all(a <= b for a, b in zip(vals, vals[1:]))
        for e in (0.0, 0.2):
            vs = [overlap_bound(1.0, s, e) for s in grid]
            assert all(a <= b for a, b in zip(vs, vs[1:]))
            vd = [overlap_bound(d, 0.5, e) for d in grid + 1]
            assert all(a >= b for a, b in zip(vd, vd[1:]))

    def test_invalid(self):
        with pytest.raises(ValueError):
            overlap_bound(0.0, 1.0, 0.0)


class TestMonteCarlo:
    def test_worst_case_geometry(self):
        mu_c, mu_cp, hat_c, hat_cp = worst_case_estimates(1.0, 0.25, 3)
        assert np.linalg.norm(hat_c - mu_c) == pytest.approx(0.25)
        assert np.linalg.norm(hat_cp - mu_cp) == pytest.approx(0.25)
        midpoint = (hat_c + hat_cp) / 2
        assert np.linalg.norm(midpoint - mu_c) == pytest.approx(0.5 - 0.25)

    @pytest.mark.parametrize("eps,expected", [(0.0, 0.1587), (0.25, 0.3085)])
    def test_against_bound(self, eps, expected):
        p, se = monte_carlo_overlap(OverlapQuery(1.0, 0.5, eps, dim=2, trials=1_000_000, seed=3))
        assert abs(p - overlap_bound(1.0, 0.5, eps)) <= 3 * se
        assert p == pytest.approx(expected, abs=0.002)

    def test_vanishing_noise(self):
        p, se = monte_carlo_overlap(OverlapQuery(1.0, 1e-6, 0.0, dim=4, trials=10_000))
        assert p == 0.0 and se == 0.0

    def test_dimension_invariance(self):
        ref = overlap_bound(1.0, 0.5, 0.1)
        for dim in (1, 2, 16, 64):
            p, se = monte_carlo_overlap(OverlapQuery(1.0, 0.5, 0.1, dim=dim, trials=200_000, seed=dim))
            assert abs(p - ref) <= 3 * se

    def test_never_far_below_bound(self):
        for d, s, e in [(1, 0.5, 0.05), (2, 0.5, 0.5), (3, 1.0, 0.0), (0.5, 0.2, 0.1)]:
            p, se = monte_carlo_overlap(OverlapQuery(d, s, e, dim=3, trials=100_000, seed=1))
            assert p >= overlap_bound(d, s, e) - 3 * se

    def test_sharded_reproducible(self):
        q = OverlapQuery(1.0, 0.5, 0.0, dim=2, trials=50_001, seed=8)
        assert monte_carlo_overlap(q, shards=4) == monte_carlo_overlap(q, shards=4)
        assert monte_carlo_overlap(q, shards=1) == monte_carlo_overlap(q, shards=1)

    def test_zero_trials(self):
        with pytest.raises(ValueError):
            OverlapQuery(1.0, 0.5, 0.0, trials=0)
