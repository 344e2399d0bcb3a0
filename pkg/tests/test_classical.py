import math

import numpy as np
import pytest

from latticedrift import ModelParams
from latticedrift.classical import (
    ClassicalState,
    energy,
    flow,
    island_exists,
    strobe_map,
    trajectory,
)

TWO_PI = 2.0 * math.pi


class TestFlow:
    def test_small_oscillation_at_cyclotron_period(self):
        # orbit about (x', p') = (0, 0) closes in 2*pi/omega_c = 10
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0)
        ts, xs, ps = trajectory(ClassicalState(0.0, 0.01), p, 0.0, 40.0, 0.01)
        sgn = np.sign(ps)
        idx = np.nonzero((sgn[:-1] > 0) & (sgn[1:] <= 0))[0]
        zeros = [
            ts[i] - ps[i] * (ts[i + 1] - ts[i]) / (ps[i + 1] - ps[i]) for i in idx
        ]
        period = float(np.mean(np.diff(zeros)))
        assert period == pytest.approx(10.0, rel=0.01)

    def test_saddle_point_is_stationary(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0)
        s = flow(ClassicalState(math.pi, math.pi), p, 0.0, 50.0, 0.05)
        assert s.x == pytest.approx(math.pi, abs=1e-12)
        assert s.p == pytest.approx(math.pi, abs=1e-12)

    def test_integrable_limit_zero_jy(self):
        p = ModelParams(Jx=1, Jy=0.0, alpha=0.1, F=0.0)
        s0 = ClassicalState(0.3, 0.9)
        s = flow(s0, p, 0.0, 50.0, 0.05)
        assert s.p == pytest.approx(0.9, abs=1e-13)
        assert s.x == pytest.approx(0.3 + 50.0 * TWO_PI * 0.1 * math.sin(0.9), abs=1e-9)

    def test_energy_conservation_long_run(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0)
        s0 = ClassicalState(1.0, 0.7)
        e0 = energy(s0, p)
        s1 = flow(s0, p, 0.0, 1000.0, 0.02)
        assert abs(energy(s1, p) - e0) < 1e-8

    def test_time_step_validated(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0)
        with pytest.raises(ValueError):
            flow(ClassicalState(0.0, 0.1), p, 0.0, 1.0, dt=0.5)

    def test_symplectic_area_preservation(self):
        # area of a small parallelogram of initial conditions, 1000 steps
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0)
        h = 1e-7
        corners = [
            ClassicalState(0.8, 0.3),
            ClassicalState(0.8 + h, 0.3),
            ClassicalState(0.8 + h, 0.3 + h),
            ClassicalState(0.8, 0.3 + h),
        ]
        t1, dt = 100.0, 0.1
        out = [flow(s, p, 0.0, t1, dt, order=2) for s in corners]
        xs = np.array([s.x for s in out])
        ps = np.array([s.p for s in out])
        area = 0.5 * abs(
            np.dot(xs, np.roll(ps, -1)) - np.dot(ps, np.roll(xs, -1))
        )
        assert area == pytest.approx(h * h, rel=1e-6)

    def test_time_reversibility(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.2)
        s0 = ClassicalState(0.4, -0.2)
        fwd = flow(s0, p, 0.0, 23.0, 0.05)
        # reverse momentum, flip drive sign: kick-drift is reversible
        back = flow(ClassicalState(fwd.x, -fwd.p), ModelParams(Jx=1, Jy=1, alpha=0.1, F=-0.2), -23.0, 0.0, 0.05)
        assert back.x == pytest.approx(s0.x, abs=1e-10)
        assert back.p == pytest.approx(-s0.p, abs=1e-10)


class TestStrobeMap:
    def test_single_seed_single_period(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.3)
        pts = strobe_map([ClassicalState(0.5, 0.5)], p, 1)
        assert pts.shape == (1, 2, 2)

    def test_requires_period_at_zero_field(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0)
        with pytest.raises(ValueError):
            strobe_map([ClassicalState(0.0, 0.1)], p, 3)
        pts = strobe_map([ClassicalState(0.0, 0.1)], p, 3, strobe_period=10.0)
        assert pts.shape == (1, 4, 2)

    def test_resonant_seed_stays_bounded_in_comoving_frame(self):
        # small F: the island near the origin traps its seeds
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.1)
        pts = strobe_map([ClassicalState(0.3, 0.2)], p, 500)
        x = np.unwrap(pts[0, :, 0])
        assert np.max(np.abs(x - x[0])) < math.pi

    def test_points_reduced_to_torus(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.4)
        pts = strobe_map(4, p, 10)
        assert np.all(pts >= 0.0) and np.all(pts < TWO_PI)


class TestIsland:
    def test_trapped_fraction_decreases_and_vanishes(self):
        p0 = ModelParams(Jx=1, Jy=1, alpha=0.1)
        fracs = []
        for F in (0.1, 0.3, 0.5, 0.7):
            rep = island_exists(
                ModelParams(Jx=1, Jy=1, alpha=0.1, F=F), seed_grid=12, n_periods=150
            )
            fracs.append(rep.trapped_fraction)
        assert all(a >= b for a, b in zip(fracs, fracs[1:]))
        assert fracs[0] > 0.0
        assert fracs[-1] == 0.0  # F = 0.7 > F_cr = 0.628

    def test_zero_field_landau_orbits_trapped(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0)
        rep = island_exists(p, seed_grid=8, n_periods=50)
        assert rep.exists and rep.trapped_fraction > 0.0

    def test_no_island_without_x_hopping(self):
        p = ModelParams(Jx=0.0, Jy=1, alpha=0.1, F=0.2)
        rep = island_exists(p, seed_grid=8, n_periods=10)
        assert not rep.exists and rep.trapped_fraction == 0.0

    def test_trapped_seed_translates_at_drift_velocity(self):
        # unscaled drift x'/(2 pi alpha) advances v* per unit time
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.1)
        n_per = 200
        T_B = TWO_PI / p.F
        ts, xs, ps = trajectory(ClassicalState(0.3, 0.2), p, 0.0, n_per * T_B, 0.05, sample_stride=10**9)
        v = (xs[-1] - xs[0]) / (TWO_PI * p.alpha) / (n_per * T_B)
        v_star = p.F / (TWO_PI * p.alpha)
        assert v == pytest.approx(v_star, rel=0.01)
