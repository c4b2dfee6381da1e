"""Ensemble aggregation, interval estimates, and gated diagnostics.

The deterministic scalar configurations double as exact oracles: with the
noise amplitude at zero every path is identical, so ensemble statistics
collapse to single-path quantities that are known in closed form.
"""

import dataclasses
import math

import numpy as np
import pytest

from noiselab.ensemble import (
    EcdfCurve,
    PreconditionFailed,
    blowup_probability,
    continuity_probe,
    extinction_ecdf,
    run_ensemble,
    stride_time_grid,
    supermartingale_diagnostic,
    tail_bound_check,
    wilson_interval,
)
from noiselab.integrate import RngStream, SimConfig, run_path
from noiselab.models import GridSpec, make_model
from noiselab.noise import make_noise, scalar_noise, split_channels

NO_NOISE = scalar_noise(0.0, 2.0)


def sink_model(x0=2.0):
    return make_model("superlinear_sde",
                      {"quad_coeff": 0.0, "sink_coeff": 1.0, "x0": x0})


@pytest.fixture(scope="module")
def fd_ensemble():
    g = GridSpec(L=1.0, n_interior=32)
    model = make_model("fast_diffusion",
                       {"r": 0.5, "x0": {"mode": 1, "h_norm": 1.0}}, g)
    noise = split_channels(1.0, 0.0)
    cfg = SimConfig(dt=1e-4, T=1.0, scheme="tamed", eps_ext=1e-3,
                    record_stride=100)
    stats = run_ensemble(model, noise, cfg, n_paths=30, master_seed=0)
    return model, noise, cfg, stats


class TestWilson:
    def test_zero_successes(self):
        lo, hi = wilson_interval(0, 100)
        assert lo <= 1e-15
        assert abs(hi - 0.0369935) < 1e-6

    def test_half_successes(self):
        lo, hi = wilson_interval(50, 100)
        assert abs(lo - 0.4038315) < 1e-6
        assert abs(hi - 0.5961685) < 1e-6

    def test_symmetry(self):
        for k in (0, 3, 41):
            lo_k, hi_k = wilson_interval(k, 100)
            lo_c, hi_c = wilson_interval(100 - k, 100)
            assert abs(lo_k - (1.0 - hi_c)) < 1e-12
            assert abs(hi_k - (1.0 - lo_c)) < 1e-12

    def test_interval_contains_point_estimate(self):
        for k in (0, 1, 57, 100):
            lo, hi = wilson_interval(k, 100)
            assert lo <= k / 100.0 <= hi
            assert 0.0 <= lo <= hi <= 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            wilson_interval(1, 0)
        with pytest.raises(ValueError):
            wilson_interval(5, 4)
        with pytest.raises(ValueError):
            wilson_interval(-1, 4)


class TestAggregation:
    def test_single_path_ensemble_matches_run_path(self):
        m = make_model("superlinear_sde",
                       {"quad_coeff": 0.2, "sink_coeff": 0.3, "x0": 1.0})
        nz = scalar_noise(0.5, 2.0)
        cfg = SimConfig(dt=1e-3, T=1.0, scheme="tamed", record_stride=100)
        stats = run_ensemble(m, nz, cfg, n_paths=1, master_seed=3,
                             moment_exponents=[1.0])
        rec = run_path(m, nz, cfg, RngStream(3, 0))
        assert rec.status == "completed"
        assert np.array_equal(stats.time_grid, rec.times)
        assert np.array_equal(stats.time_grid, stride_time_grid(cfg))
        mean, se = stats.norm_moment_curves[1.0]
        assert np.array_equal(mean, rec.h_norms)
        assert np.all(np.isnan(se))  # one path, no spread estimate
        assert np.all(stats.survivor_counts == 1)

    def test_deterministic_blowup_ensemble(self):
        m = make_model("superlinear_sde", {"quad_coeff": 1.0, "x0": 1.0})
        cfg = SimConfig(dt=1e-4, T=1.5, scheme="euler_maruyama",
                        record_stride=100)
        stats = run_ensemble(m, NO_NOISE, cfg, n_paths=3, master_seed=0,
                             moment_exponents=[1.0])
        assert stats.blowup_count == 3
        assert stats.extinction_count == 0
        p, (lo, hi) = blowup_probability(stats)
        assert p == 1.0
        assert hi == 1.0
        assert 0.43 < lo < 0.45  # Wilson lower bound for 3 of 3
        event = 1.0012
        grid = stats.time_grid
        mean, _ = stats.norm_moment_curves[1.0]
        censored = grid >= event
        assert censored.any()
        assert np.all(np.isnan(mean[censored]))
        assert np.all(~np.isnan(mean[~censored]))
        assert np.array_equal(stats.survivor_counts,
                              np.where(censored, 0, 3))

    def test_extinct_paths_contribute_zeros(self):
        cfg = SimConfig(dt=1e-4, T=4.0, scheme="euler_maruyama",
                        record_stride=2000)
        stats = run_ensemble(sink_model(), NO_NOISE, cfg, n_paths=4,
                             master_seed=0, moment_exponents=[1.0, 2.0])
        assert stats.extinction_count == 4
        tau = stats.extinction_times[0]
        assert np.all(stats.extinction_times == tau)
        assert abs(tau - 2.0 * math.sqrt(2.0)) < 0.01
        mean, _ = stats.norm_moment_curves[1.0]
        late = stats.time_grid > tau
        assert late.any()
        assert np.all(mean[late] == 0.0)
        # extinction is not censoring: the dead paths stay in the average
        assert np.all(stats.survivor_counts == 4)

    def test_moment_exponents_deduplicated_and_sorted(self):
        cfg = SimConfig(dt=1e-3, T=0.1, scheme="tamed", record_stride=10)
        m = make_model("superlinear_sde", {"quad_coeff": 0.0, "x0": 1.0})
        stats = run_ensemble(m, scalar_noise(0.3, 2.0), cfg, n_paths=2,
                             master_seed=1, moment_exponents=[2.0, 0.5, 2.0])
        assert sorted(stats.norm_moment_curves) == [0.5, 2.0]

    def test_sup_quantiles_on_identical_paths(self):
        cfg = SimConfig(dt=1e-3, T=0.5, scheme="euler_maruyama",
                        record_stride=100)
        stats = run_ensemble(sink_model(x0=2.0), NO_NOISE, cfg, n_paths=3,
                             master_seed=0)
        # monotone decay: the running sup is the initial value
        for q, v in stats.sup_norm_quantiles.items():
            assert v == 2.0, q

    def test_n_paths_validation(self):
        cfg = SimConfig(dt=1e-3, T=0.1)
        m = sink_model()
        with pytest.raises(ValueError):
            run_ensemble(m, NO_NOISE, cfg, n_paths=0, master_seed=0)

    def test_repeat_and_parallel_runs_identical(self):
        m = make_model("superlinear_sde",
                       {"quad_coeff": 0.5, "sink_coeff": 0.5, "x0": 1.0,
                        "m": 2.0})
        nz = scalar_noise(1.0, 2.0)
        cfg = SimConfig(dt=1e-4, T=1.0, scheme="tamed", record_stride=100)
        runs = [run_ensemble(m, nz, cfg, n_paths=6, master_seed=11,
                             n_jobs=j) for j in (1, 1, 2)]
        base = runs[0]
        for other in runs[1:]:
            assert np.array_equal(base.extinction_times,
                                  other.extinction_times)
            assert np.array_equal(base.survivor_counts,
                                  other.survivor_counts)
            assert base.sup_norm_quantiles == other.sup_norm_quantiles
            for e, (mean, se) in base.norm_moment_curves.items():
                om, ose = other.norm_moment_curves[e]
                assert np.array_equal(mean, om, equal_nan=True)
                assert np.array_equal(se, ose, equal_nan=True)


class TestEcdf:
    def test_step_at_deterministic_extinction_time(self):
        cfg = SimConfig(dt=1e-4, T=4.0, scheme="euler_maruyama",
                        record_stride=2000)
        stats = run_ensemble(sink_model(), NO_NOISE, cfg, n_paths=4,
                             master_seed=0)
        ecdf = extinction_ecdf(stats)
        tau = stats.extinction_times[0]
        assert ecdf(tau * (1.0 - 1e-12)) == 0.0
        assert ecdf(tau) == 1.0
        assert ecdf(4.0) == 1.0
        assert np.array_equal(ecdf(np.array([0.0, tau])), [0.0, 1.0])

    def test_fractions_are_uniform_steps(self):
        curve = EcdfCurve(times=np.array([0.5, 1.0, 2.0]), n_paths=6)
        assert np.allclose(curve.fractions, [1 / 6, 2 / 6, 3 / 6])
        assert curve(1.5) == 2 / 6
        assert curve(0.0) == 0.0


class TestSupermartingaleDiagnostic:
    def test_holds_on_deterministic_decay(self):
        cfg = SimConfig(dt=1e-4, T=4.0, scheme="euler_maruyama",
                        record_stride=2000)
        stats = run_ensemble(sink_model(), NO_NOISE, cfg, n_paths=3,
                             master_seed=0, moment_exponents=[0.5, 1.0])
        rep = supermartingale_diagnostic(stats, 0.5)
        assert rep.holds
        assert rep.violation_count == 0
        # worst observed excess over all pairs; ties at zero are fine
        assert rep.worst_excess <= 0.0
        assert rep.pair_count > 0

    def test_fails_on_deterministic_growth(self):
        m = make_model("superlinear_sde", {"quad_coeff": 1.0, "x0": 1.0})
        cfg = SimConfig(dt=1e-3, T=0.5, scheme="euler_maruyama",
                        record_stride=50)
        stats = run_ensemble(m, NO_NOISE, cfg, n_paths=3, master_seed=0,
                             moment_exponents=[1.0])
        rep = supermartingale_diagnostic(stats, 1.0)
        assert not rep.holds
        assert rep.violation_count > 0
        assert rep.worst_excess > 0
        assert len(rep.violating_pairs) <= 32

    def test_unknown_exponent_rejected(self):
        cfg = SimConfig(dt=1e-3, T=0.1)
        stats = run_ensemble(sink_model(), NO_NOISE, cfg, n_paths=1,
                             master_seed=0, moment_exponents=[1.0])
        with pytest.raises(ValueError):
            supermartingale_diagnostic(stats, 3.0)


class TestTailBound:
    def test_fast_diffusion_bound_respected(self, fd_ensemble):
        model, noise, cfg, stats = fd_ensemble
        assert stats.extinction_count == 30
        assert stats.blowup_count == 0
        rep = tail_bound_check(stats, model, noise, x0=1.0)
        assert rep.violations.size == 0
        assert rep.times.size > 0
        assert np.all(rep.theoretical_bound < 1.0)
        assert np.array_equal(rep.theoretical_bound,
                              rep.coefficient / rep.times)
        assert rep.alpha == 1.5
        assert all(c.holds for c in rep.preconditions)

    def test_supermartingale_holds_alongside(self, fd_ensemble):
        _, _, _, stats = fd_ensemble
        rep = supermartingale_diagnostic(stats, 0.5)
        assert rep.holds

    def test_refuses_quadratic_drift_profile(self):
        # alpha = 2 sits outside the extinction window, whatever the noise
        m = make_model("superlinear_sde",
                       {"quad_coeff": 1.0, "sink_coeff": 1.0, "x0": 2.0,
                        "m": 2.0})
        nz = scalar_noise(1.0, 3.0)
        cfg = SimConfig(dt=1e-3, T=0.01, scheme="tamed")
        stats = run_ensemble(m, nz, cfg, n_paths=2, master_seed=0)
        with pytest.raises(PreconditionFailed) as err:
            tail_bound_check(stats, m, nz, x0=2.0)
        assert err.value.report.condition_id == "extinction_coercivity"
        assert not err.value.report.holds

    def test_refuses_when_noise_too_weak_for_balance(self):
        g = GridSpec(L=1.0, n_interior=16)
        m = make_model("p_laplace_hot", {"p": 1.5, "x0": 1.0}, g)
        cfg = SimConfig(dt=1e-3, T=0.02, scheme="tamed", record_stride=10)
        weak = split_channels(0.1, 1.0)
        stats = run_ensemble(m, weak, cfg, n_paths=2, master_seed=0)
        with pytest.raises(PreconditionFailed) as err:
            tail_bound_check(stats, m, weak, x0=1.0)
        assert err.value.report.condition_id == "extinction_balance"

    def test_passes_when_noise_strong_enough(self):
        # same model, stronger noise: every gate opens and the report
        # carries the estimated coercivity constant
        g = GridSpec(L=1.0, n_interior=16)
        m = make_model("p_laplace_hot", {"p": 1.5, "x0": 1.0}, g)
        strong = split_channels(2.0, 1.0)
        cfg = SimConfig(dt=1e-3, T=0.02, scheme="tamed", record_stride=10)
        stats = run_ensemble(m, strong, cfg, n_paths=2, master_seed=0)
        rep = tail_bound_check(stats, m, strong, x0=1.0)
        ids = [c.condition_id for c in rep.preconditions]
        assert ids == ["extinction_coercivity", "coercivity",
                       "extinction_balance", "growth_balance"]
        assert rep.coefficient > 0.0

    def test_refuses_ensembles_with_blowups(self, fd_ensemble):
        model, noise, _, stats = fd_ensemble
        poisoned = dataclasses.replace(stats, blowup_count=1)
        with pytest.raises(PreconditionFailed) as err:
            tail_bound_check(poisoned, model, noise, x0=1.0)
        assert err.value.report.witness == {"blowup_count": 1}

    def test_exception_message_names_condition(self):
        m = make_model("superlinear_sde", {"quad_coeff": 1.0, "x0": 1.0})
        nz = scalar_noise(1.0, 2.0)
        cfg = SimConfig(dt=1e-3, T=0.01)
        stats = run_ensemble(m, nz, cfg, n_paths=1, master_seed=0)
        with pytest.raises(PreconditionFailed, match="extinction_coercivity"):
            tail_bound_check(stats, m, nz, x0=1.0)


class TestContinuityProbe:
    def test_zero_delta_is_exactly_coupled(self):
        m = make_model("superlinear_sde",
                       {"quad_coeff": 0.2, "sink_coeff": 0.3, "x0": 1.0})
        nz = scalar_noise(0.5, 2.0)
        cfg = SimConfig(dt=1e-3, T=0.2, scheme="tamed", record_stride=20)
        rep = continuity_probe(m, nz, 1.0, [0.0, 0.05], cfg, n_pairs=3)
        assert rep.exceedance.shape == (2,)
        assert rep.exceedance[0] == 0.0
        assert rep.n_pairs == 3
        assert np.array_equal(rep.deltas, [0.0, 0.05])

    def test_small_perturbations_stay_close(self):
        m = make_model("superlinear_sde",
                       {"quad_coeff": 0.1, "sink_coeff": 0.2, "x0": 1.0})
        nz = scalar_noise(0.3, 2.0)
        cfg = SimConfig(dt=1e-3, T=0.5, scheme="tamed", record_stride=50)
        rep = continuity_probe(m, nz, 1.0, [0.1, 0.001], cfg, n_pairs=8,
                               eps_tol=0.5)
        assert rep.exceedance[1] <= rep.exceedance[0]
        assert rep.exceedance[1] == 0.0

    def test_validation(self):
        m = sink_model()
        nz = NO_NOISE
        cfg = SimConfig(dt=1e-3, T=0.1)
        with pytest.raises(ValueError):
            continuity_probe(m, nz, 1.0, [], cfg, n_pairs=2)
        with pytest.raises(ValueError):
            continuity_probe(m, nz, 1.0, [-0.1], cfg, n_pairs=2)
        with pytest.raises(ValueError):
            continuity_probe(m, nz, 1.0, [0.1], cfg, n_pairs=0)
