import math

import numpy as np
import pytest

from latticedrift import ModelParams
from latticedrift.ensemble import (
    AveragedDensity,
    EnsembleSpec,
    InsufficientPointsError,
    ballistic_width,
    bootstrap_mean_greater,
    compare_1d_2d,
    fit_diffusive,
    fit_exponential_tail,
    local_exponent,
    run_ensemble,
)

TWO_PI = 2.0 * math.pi


def small_spec(**kw):
    base = dict(
        params=ModelParams(Jx=1, Jy=1, alpha=0.1, F=3.0, seed=11),
        dim=1,
        sigma_x=8.0,
        t_end=30.0,
        n_phase=4,
        n_disorder=1,
        sample_dt=2.0,
    )
    base.update(kw)
    return EnsembleSpec(**base)


class TestRunEnsemble:
    def test_single_realization_equals_single_run(self):
        from latticedrift import PropagationConfig, evolve_1d, incoherent_packet

        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=3.0, seed=5)
        spec = small_spec(params=p, n_phase=1, n_disorder=1)
        res = run_ensemble(spec)
        b = incoherent_packet(p, 8.0, realization=0)
        n_steps = max(1, math.ceil(30.0 / (0.1 / 3.0 / 3)))
        cfg = PropagationConfig(
            t_end=30.0, dt_max=0.1,
            observer_stride=max(1, round(2.0 / (30.0 / math.ceil(30.0 / (0.1 / 3))))),
        )
        _, series = evolve_1d(b, p, 0.0, None, cfg=cfg)
        # same sample times, same moments
        np.testing.assert_allclose(res.times, series.times, atol=1e-12)
        np.testing.assert_allclose(res.sigma, series.sigma, atol=1e-10)

    def test_deterministic_across_reruns(self):
        spec = small_spec(n_phase=3)
        a = run_ensemble(spec)
        b = run_ensemble(spec)
        np.testing.assert_array_equal(a.sigma, b.sigma)
        np.testing.assert_array_equal(a.density.P, b.density.P)

    def test_density_normalized_per_time(self):
        res = run_ensemble(small_spec())
        assert res.density.check_normalization(1e-8) < 1e-8

    def test_ballistic_law_strong_field(self):
        # free incoherent expansion: sigma(t) = sqrt(sigma0^2 + t^2/2)
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=3.0, seed=2)
        spec = EnsembleSpec(params=p, dim=1, sigma_x=20.0, t_end=60.0,
                            n_phase=12, n_disorder=1, sample_dt=5.0)
        res = run_ensemble(spec)
        expect = ballistic_width(p, 20.0, res.times)
        assert np.max(np.abs(res.sigma - expect) / expect) < 0.02

    def test_mean_position_stays_near_zero_weak_field(self):
        # asymmetric spreading without net transport
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.3, seed=8)
        spec = EnsembleSpec(params=p, dim=1, sigma_x=10.0, t_end=120.0,
                            n_phase=12, n_disorder=1, sample_dt=10.0)
        res = run_ensemble(spec)
        # statistical scale of <l> fluctuations across realizations
        mean_spread = res.sigma[-1] / math.sqrt(res.sigma2_per_realization.shape[0])
        assert abs(res.series.mean_x[-1]) < 3.0 * mean_spread

    def test_symmetric_at_zero_field(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.0, eps=0.0, seed=3)
        spec = EnsembleSpec(params=p, dim=1, sigma_x=6.0, t_end=40.0,
                            n_phase=24, n_disorder=1, sample_dt=5.0)
        res = run_ensemble(spec)
        sites = res.density.sites()
        kern = np.ones(7) / 7.0
        row = np.convolve(res.density.P[-1], kern, mode="same")
        # fold around l = 0 and compare within statistical error
        pos = row[sites > 0][: min((sites > 0).sum(), (sites < 0).sum())]
        neg = row[sites < 0][::-1][: pos.size]
        scale = row.max()
        assert np.max(np.abs(pos - neg)) < 0.3 * scale

    def test_2d_ensemble_runs_and_projects(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=0.3, eps=0.0, seed=4)
        spec = EnsembleSpec(params=p, dim=2, sigma_x=5.0, sigma_y=2.0,
                            t_end=10.0, n_phase=2, n_disorder=1,
                            sample_dt=2.0, keep_final_2d=True)
        res = run_ensemble(spec)
        res.density.check_normalization(1e-8)
        assert res.final_density_2d is not None
        off_l, off_m, dens = res.final_density_2d
        assert dens.sum() == pytest.approx(1.0, abs=1e-8)

    def test_realization_counts_validated(self):
        with pytest.raises(ValueError):
            small_spec(n_phase=0)


class TestLocalExponent:
    def test_ballistic_tends_to_two(self):
        t = np.linspace(1, 400, 200)
        nu = local_exponent((t, np.sqrt(400 + t**2 / 2)))
        assert nu.nu[-1] > 1.9
        assert nu.nu[-1] <= 2.0 + 1e-9

    def test_diffusive_is_one(self):
        t = np.linspace(1, 200, 100)
        nu = local_exponent((t, np.sqrt(4.0 * t)))
        np.testing.assert_allclose(nu.nu, 1.0, atol=1e-9)

    def test_saturated_is_zero(self):
        t = np.linspace(1, 200, 100)
        nu = local_exponent((t, np.full_like(t, 7.0)))
        np.testing.assert_allclose(nu.nu, 0.0, atol=1e-9)

    def test_too_few_points_rejected(self):
        with pytest.raises(InsufficientPointsError):
            local_exponent((np.array([0.0, 1.0]), np.array([1.0, 2.0])))


def synthetic_density(rows, times, offset):
    P = np.stack([r / r.sum() for r in rows])
    return AveragedDensity(times=np.asarray(times, float), offset=offset,
                           P=P, n_realizations=1)


class TestTailFits:
    def test_exponential_recovers_length(self):
        sites = np.arange(-400, 401).astype(float)
        d = synthetic_density([np.exp(-np.abs(sites) / 7.0)], [10.0], -400)
        fit = fit_exponential_tail(d, 10.0)
        assert fit.ok
        assert fit.L == pytest.approx(7.0, rel=0.01)

    def test_diffusive_recovers_coefficient(self):
        sites = np.arange(-400, 401).astype(float)
        t = 50.0
        d = synthetic_density([np.exp(-(sites**2) / (4.0 * t))], [t], -400)
        fit = fit_diffusive(d, t)
        assert fit.ok
        assert fit.D == pytest.approx(4.0, rel=0.02)

    def test_wrong_model_flagged(self):
        # the profile bends in the wrong model's coordinates
        sites = np.arange(-400, 401).astype(float)
        t = 50.0
        gauss = synthetic_density([np.exp(-(sites**2) / (4.0 * t))], [t], -400)
        fit = fit_exponential_tail(gauss, t)
        assert not fit.ok
        assert abs(fit.curvature - 1.0) > 0.35
        expo = synthetic_density([np.exp(-np.abs(sites) / 7.0)], [t], -400)
        fit2 = fit_diffusive(expo, t)
        assert not fit2.ok
        assert abs(fit2.curvature - 1.0) > 0.35

    def test_ballistic_profile_fits_poorly(self):
        # flat-topped profile with steep fronts: neither model fits well
        sites = np.arange(-300, 301).astype(float)
        row = 1.0 / (1.0 + np.exp((np.abs(sites) - 150.0) / 2.0)) + 1e-12
        d = synthetic_density([row], [100.0], -300)
        fit = fit_exponential_tail(d, 100.0)
        assert not fit.ok

    def test_insufficient_tail_rejected(self):
        sites = np.arange(-30, 31).astype(float)
        d = synthetic_density([np.exp(-np.abs(sites) / 40.0)], [5.0], -30)
        with pytest.raises(InsufficientPointsError):
            fit_exponential_tail(d, 5.0)


class TestCompare:
    def test_matched_widths_agree_without_disorder(self):
        p = ModelParams(Jx=1, Jy=1, alpha=0.1, F=3.0, eps=0.0, seed=6)
        spec = EnsembleSpec(params=p, dim=2, sigma_x=8.0, sigma_y=3.0,
                            t_end=25.0, n_phase=6, n_disorder=1, sample_dt=5.0)
        res1, res2 = compare_1d_2d(spec)
        s1 = res1.sigma[-1]
        s2 = res2.sigma[-1]
        se = np.std(res1.sigma2_per_realization[:, -1]) / math.sqrt(6) / (2 * s1)
        se2 = np.std(res2.sigma2_per_realization[:, -1]) / math.sqrt(6) / (2 * s2)
        assert abs(s1 - s2) < 3.0 * math.hypot(se, se2) + 0.05 * s1


class TestBootstrap:
    def test_separated_samples_give_high_probability(self):
        x = np.array([10.0, 11.0, 10.5, 9.8, 10.7, 10.2])
        y = x - 3.0
        assert bootstrap_mean_greater(x, y) > 0.999

    def test_identical_samples_near_half(self):
        x = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
        prob = bootstrap_mean_greater(x, x, n_boot=8000, seed=3)
        assert 0.35 < prob < 0.65

    def test_deterministic(self):
        x = np.array([1.0, 2.0, 3.0])
        y = np.array([1.5, 2.5, 2.0])
        assert bootstrap_mean_greater(x, y) == bootstrap_mean_greater(x, y)
