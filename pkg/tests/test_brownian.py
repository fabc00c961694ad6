"""Tests for planar/hyperbolic Brownian motion, exit laws, and occupation."""

import math

import numpy as np
import pytest
from scipy import stats

from spherewalk.brownian import (
    BOUNDARY_CAP, HyperbolicPath, PlanarPath, StopRule, annulus_hitting_mc,
    annulus_hitting_probability, d_hyp, dump_path_csv, exit_point_sample,
    green_occupation, green_quadrature, halfplane_metric_ratio,
    hyperbolic_disc_euclidean, hyperbolic_density, lift_to_hyperbolic,
    poisson_density, simulate_planar, sup_displacement,
)
from spherewalk.errors import (
    BadRadii, HorizonExceeded, OutsideDisc, StepTooLarge,
)


class TestMetric:
    def test_d_hyp_radial(self):
        for r in (0.1, 0.5, 0.9):
            assert abs(d_hyp(0.0, r) - 2.0 * math.atanh(r)) < 1e-12

    def test_d_hyp_symmetric_and_invariant(self):
        z, w = 0.3 + 0.2j, -0.1 + 0.5j
        assert abs(d_hyp(z, w) - d_hyp(w, z)) < 1e-12
        # rotation invariance
        u = complex(np.exp(0.7j))
        assert abs(d_hyp(u * z, u * w) - d_hyp(z, w)) < 1e-12

    def test_d_hyp_outside(self):
        with pytest.raises(OutsideDisc):
            d_hyp(1.0, 0.0)

    def test_hyperbolic_disc_euclidean(self):
        c, r = hyperbolic_disc_euclidean(0.0, 1.0)
        assert abs(c) < 1e-15 and abs(r - math.tanh(0.5)) < 1e-12
        center, radius = hyperbolic_disc_euclidean(0.4 + 0.1j, 0.7)
        # extreme points of the Euclidean disc along the axis through it
        direction = center / abs(center)
        for s in (1.0, -1.0):
            p = center + s * radius * direction
            assert abs(d_hyp(p, 0.4 + 0.1j) - 0.7) < 1e-9

    def test_halfplane_ratio(self):
        assert abs(halfplane_metric_ratio(1j) - 2.0) < 1e-12
        for z in (0.5 + 0.25j, -2.0 + 3.0j, 0.1j):
            x, y = z.real, z.imag
            hyp_density = 1.0 / y
            sph_density = 1.0 / (1.0 + abs(z) ** 2)
            assert abs(halfplane_metric_ratio(z) - hyp_density / sph_density) < 1e-10

    def test_disc_density(self):
        assert hyperbolic_density(0.0) == 2.0
        assert abs(hyperbolic_density(0.9) - 2.0 / 0.19) < 1e-12


class TestSimulatePlanar:
    def test_step_guard(self):
        with pytest.raises(StepTooLarge):
            simulate_planar(0.0, 2e-3, StopRule("euclid_horizon", {"horizon": 1}), 0)
        with pytest.raises(OutsideDisc):
            simulate_planar(1.5, 1e-4, StopRule("euclid_horizon", {"horizon": 1}), 0)

    def test_zero_horizon_single_point(self):
        p = simulate_planar(0.1, 1e-4, StopRule("euclid_horizon", {"horizon": 0}), 0)
        assert len(p.points) == 1
        assert p.points[0] == 0.1

    def test_unknown_stop_kind(self):
        with pytest.raises(ValueError):
            simulate_planar(0.0, 1e-4, StopRule("never", {}), 0)

    def test_path_invariants(self):
        p = simulate_planar(0.0, 1e-4,
                            StopRule("exit_disc", {"euclid_radius": 0.5}), 3)
        assert p.times[0] == 0.0
        assert np.all(np.diff(p.times) > 0)
        assert np.all(np.abs(p.points[:-1]) < 1.0)
        assert abs(p.points[-1]) >= 0.5 - 1e-9

    def test_exit_angle_uniform(self):
        angles = []
        for s in range(400):
            p = simulate_planar(0.0, 1e-4,
                                StopRule("exit_disc", {"euclid_radius": 0.4}),
                                seed=1000 + s, record_stride=10 ** 9)
            angles.append(math.atan2(p.points[-1].imag, p.points[-1].real))
        u = (np.array(angles) + math.pi) / (2 * math.pi)
        assert stats.kstest(u, "uniform").pvalue > 0.01

    def test_mean_exit_time(self):
        rho = 0.5
        taus = [simulate_planar(0.0, 1e-4,
                                StopRule("exit_disc", {"euclid_radius": rho}),
                                seed=2000 + s, record_stride=10 ** 9).times[-1]
                for s in range(800)]
        mean, sem = np.mean(taus), np.std(taus, ddof=1) / math.sqrt(len(taus))
        assert abs(mean - rho ** 2 / 2.0) < 3.0 * sem + 1e-3

    def test_scaling_halves_step_count(self):
        stop = StopRule("euclid_horizon", {"horizon": 0.01})
        n1 = len(simulate_planar(0.0, 1e-4, stop, 1).times)
        n2 = len(simulate_planar(0.0, 2e-4, stop, 1).times)
        assert abs(n1 / n2 - 2.0) < 0.05

    def test_boundary_cap(self):
        p = simulate_planar(0.95, 1e-4,
                            StopRule("euclid_horizon", {"horizon": 50.0}), 7,
                            record_stride=1000)
        assert p.cap_hit
        assert abs(abs(p.points[-1]) - BOUNDARY_CAP) < 1e-9


class TestTimeChange:
    def test_rate_at_origin(self):
        p = simulate_planar(0.0, 1e-6, StopRule("euclid_horizon", {"horizon": 1e-4}), 5)
        h = lift_to_hyperbolic(p)
        rate = h.clock.hyper_times[-1] / p.times[-1]
        assert abs(rate - 4.0) < 0.04

    def test_rate_near_09(self):
        p = simulate_planar(0.9, 1e-6, StopRule("euclid_horizon", {"horizon": 1e-6}), 5)
        h = lift_to_hyperbolic(p)
        rate = h.clock.hyper_times[-1] / p.times[-1]
        assert abs(rate - (2.0 / 0.19) ** 2) / (2.0 / 0.19) ** 2 < 0.02

    def test_strictly_increasing(self):
        p = simulate_planar(0.2, 1e-4, StopRule("euclid_horizon", {"horizon": 0.05}), 9)
        h = lift_to_hyperbolic(p)
        assert np.all(np.diff(h.clock.hyper_times) > 0)
        assert h.clock.hyper_times[0] == 0.0

    def test_trace_unchanged(self):
        p = simulate_planar(0.2, 1e-4, StopRule("euclid_horizon", {"horizon": 0.05}), 9)
        h = lift_to_hyperbolic(p)
        assert h.trace is p

    def test_brownian_scaling_of_hyper_increments(self):
        # sample the trace at equal hyperbolic increments; mean squared
        # hyperbolic displacement per increment should be ~ 2 * dtau
        dtau = 0.02
        sq = []
        for s in range(30):
            p = simulate_planar(0.0, 1e-4,
                                StopRule("hyper_horizon", {"horizon": 15.0}),
                                seed=300 + s, max_dtau=dtau / 4)
            h = lift_to_hyperbolic(p)
            grid = np.arange(0.0, h.horizon, dtau)
            zs = np.array([h.point_at_hyper(t) for t in grid])
            for a, b in zip(zs[:-1], zs[1:]):
                sq.append(d_hyp(a, b) ** 2)
        assert abs(np.mean(sq) / (2.0 * dtau) - 1.0) < 0.1


class TestExitSampling:
    def test_outside_disc(self):
        with pytest.raises(OutsideDisc):
            exit_point_sample(0.9, 0.0, 1.0, 0)

    def test_uniform_from_center(self):
        pts = exit_point_sample(0.3, 0.3, 1.2, seed=4, size=2000)
        rel = (pts - 0.3) / (1.0 - 0.3 * pts)  # transport back to 0
        u = (np.angle(rel) + math.pi) / (2 * math.pi)
        assert stats.kstest(u, "uniform").pvalue > 0.01
        # all points on the hyperbolic circle
        for p in pts[:50]:
            assert abs(d_hyp(p, 0.3) - 1.2) < 1e-9

    def test_concentration_near_start(self):
        center, radius = 0.0, 2.0
        b = math.tanh(radius / 2.0)  # boundary point closest to x below
        meds = []
        for x in (0.0, 0.5 * b, 0.9 * b, 0.99 * b):
            pts = exit_point_sample(x, center, radius, seed=8, size=500)
            meds.append(np.median(np.abs(pts - b)))
        assert meds[0] > meds[1] > meds[2] > meds[3]
        assert meds[3] < 0.1

    def test_matches_simulated_exits(self):
        center, hyper_radius = 0.2, 1.0
        ec, er = hyperbolic_disc_euclidean(center, hyper_radius)
        sim = []
        for s in range(500):
            p = simulate_planar(center, 1e-4,
                                StopRule("exit_disc", {"center": center,
                                                       "hyper_radius": hyper_radius}),
                                seed=5000 + s, record_stride=10 ** 9)
            sim.append(np.angle(p.points[-1] - ec))
        direct = np.angle(exit_point_sample(center, center, hyper_radius,
                                            seed=6, size=500) - ec)
        assert stats.ks_2samp(np.array(sim), direct).pvalue > 0.01


class TestPoisson:
    def test_center_uniform(self):
        r = 0.7
        vals = [poisson_density(0.0, r * complex(np.exp(1j * a)), r)
                for a in np.linspace(0, 6, 7)]
        assert np.allclose(vals, 1.0 / (2 * math.pi * r))

    def test_integrates_to_one(self):
        r, x = 0.8, 0.3 + 0.2j
        thetas = (np.arange(10 ** 4) + 0.5) * 2 * math.pi / 10 ** 4
        zs = r * np.exp(1j * thetas)
        integral = sum(poisson_density(x, z, r) for z in zs) * (2 * math.pi * r / 10 ** 4)
        assert abs(integral - 1.0) < 1e-8

    def test_requires_interior_point(self):
        with pytest.raises(OutsideDisc):
            poisson_density(0.9, 0.8, 0.8)


class TestAnnulus:
    def test_exact_values(self):
        for k in (1, 2, 5, 10):
            assert abs(annulus_hitting_probability(0.5, math.exp(-k))
                       - math.log(2.0) / k) < 1e-12
        assert annulus_hitting_probability(0.3, 0.3) == 1.0

    def test_bad_radii(self):
        with pytest.raises(BadRadii):
            annulus_hitting_probability(0.1, 0.5)
        with pytest.raises(BadRadii):
            annulus_hitting_probability(1.5, 0.5)
        with pytest.raises(BadRadii):
            annulus_hitting_mc(0.1, 0.5, 10, 0)

    def test_monte_carlo_agrees(self):
        exact = annulus_hitting_probability(0.5, math.exp(-2))
        p, se = annulus_hitting_mc(0.5, math.exp(-2), 4000, seed=42)
        assert abs(p - exact) < 3.5 * se


class TestGreenOccupation:
    def test_small_disc_small_values(self):
        mc, quad = green_occupation(0.4, 0.02, 500, seed=1)
        assert quad < 5e-3
        assert mc < 5e-2

    def test_pole_on_boundary_flagged(self):
        r = d_hyp(0.0, 0.2)
        with pytest.raises(ValueError):
            green_occupation(0.2, r, 10, seed=0)

    def test_quadrature_total_mass(self):
        # Euclid-clock analogue: integral of the Green function over the
        # whole disc is E[exit time] = 1/2; check on a big centered disc
        # without the hyperbolic weight by comparing small-disc values
        val = green_quadrature(0.5, 0.05)
        assert val > 0.0

    def test_mc_matches_quadrature(self):
        mc, quad = green_occupation(0.35, 0.4, 4000, seed=11)
        assert abs(mc - quad) / quad < 0.15


class TestSupDisplacement:
    def _path(self):
        p = simulate_planar(0.0, 1e-4, StopRule("hyper_horizon", {"horizon": 4.0}),
                            seed=77, max_dtau=0.01)
        return lift_to_hyperbolic(p)

    def test_zero_at_zero(self):
        assert sup_displacement(self._path(), 0.0) == 0.0

    def test_monotone(self):
        h = self._path()
        vals = [sup_displacement(h, t) for t in np.linspace(0, 4.0, 9)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_horizon_guard(self):
        with pytest.raises(HorizonExceeded):
            sup_displacement(self._path(), 100.0)


class TestStrongMarkov:
    def test_restart_at_stopping_time(self):
        # exit D(0, 0.5) from 0 directly, or via the exit of D(0, 0.2)
        # with a fresh seed: total exit times agree in distribution
        direct, spliced = [], []
        for s in range(400):
            p = simulate_planar(0.0, 1e-4,
                                StopRule("exit_disc", {"euclid_radius": 0.5}),
                                seed=9000 + s, record_stride=10 ** 9)
            direct.append(p.times[-1])
            leg1 = simulate_planar(0.0, 1e-4,
                                   StopRule("exit_disc", {"euclid_radius": 0.2}),
                                   seed=20000 + s, record_stride=10 ** 9)
            leg2 = simulate_planar(complex(leg1.points[-1]), 1e-4,
                                   StopRule("exit_disc", {"euclid_radius": 0.5}),
                                   seed=30000 + s, record_stride=10 ** 9)
            spliced.append(leg1.times[-1] + leg2.times[-1])
        m1, m2 = np.mean(direct), np.mean(spliced)
        pooled = math.sqrt(np.var(direct, ddof=1) / 400 + np.var(spliced, ddof=1) / 400)
        assert abs(m1 - m2) < 3.0 * pooled + 1e-3
        assert stats.ks_2samp(np.array(direct), np.array(spliced)).pvalue > 0.01


class TestDump:
    def test_csv_columns(self, tmp_path):
        p = simulate_planar(0.1, 1e-4, StopRule("euclid_horizon", {"horizon": 0.01}), 3,
                            record_stride=10)
        h = lift_to_hyperbolic(p)
        out = tmp_path / "path.csv"
        dump_path_csv(h, out)
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "euclid_time,hyper_time,re,im"
        assert len(lines) == len(p.times) + 1
        first = lines[1].split(",")
        assert float(first[0]) == 0.0 and float(first[2]) == 0.1
