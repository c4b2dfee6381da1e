"""Unit tests for the model family: norms, drifts, profiles, embeddings.

Numeric oracles are worked by hand on one-interior-point grids (h = 1/2)
where every stencil collapses to a single expression.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noiselab import (CoercivityProfile, GridSpec, State, drift,
                      embedding_constant, first_laplacian_eigenvalue, h_norm,
                      initial_state, initial_values, make_model, v_norm)
from noiselab.models import (_centered_diff, _drift_values, _forward_diff,
                             _h_norm_values, _inverse_laplacian_metric,
                             _second_diff, _v_norm_values,
                             fourth_difference_matrix,
                             second_difference_matrix)

TINY_GRID = GridSpec(L=1.0, n_interior=1)  # h = 1/2, one interior node


def _state(model, values):
    return State(values=np.asarray(values, dtype=float), t=0.0)


class TestGrid:
    def test_spacing_and_nodes(self):
        g = GridSpec(L=1.0, n_interior=3)
        assert g.h == 0.25
        assert np.allclose(g.nodes(), [0.25, 0.5, 0.75])

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(L=0.0, n_interior=4)
        with pytest.raises(ValueError):
            GridSpec(L=1.0, n_interior=0)


class TestProfiles:
    def test_quadratic_drift_strong_noise(self):
        m = make_model("superlinear_sde", {"quad_coeff": 1.5, "c0": 2.0})
        p = m.profile
        # c1 = quad (2 + c0^2)/2 when c0^2 > 2
        assert p.g_coeff == pytest.approx(4.5, rel=1e-15)
        assert (p.alpha, p.delta, p.g_exponent) == (2.0, 2.0, 1.5)
        assert p.additive_const is None

    def test_quadratic_drift_weak_noise_fallback(self):
        m = make_model("superlinear_sde", {"quad_coeff": 2.0, "c0": 1.0})
        assert m.profile.g_coeff == pytest.approx(5.0, rel=1e-15)

    def test_sink_only(self):
        m = make_model("superlinear_sde",
                       {"quad_coeff": 0.0, "sink_coeff": 1.5})
        p = m.profile
        assert (p.alpha, p.delta) == (1.5, 3.0)
        assert p.g_coeff == 0.0 and p.additive_const == 0.0

    def test_drift_free(self):
        m = make_model("superlinear_sde",
                       {"quad_coeff": 0.0, "sink_coeff": 0.0})
        p = m.profile
        assert (p.alpha, p.delta, p.g_coeff, p.g_exponent,
                p.additive_const) == (2.0, 1.0, 1.0, 1.0, 0.0)

    def test_p_laplace_exponent(self):
        m = make_model("p_laplace_hot", {"p": 1.5}, TINY_GRID)
        p = m.profile
        assert p.alpha == 1.5 and p.delta == 0.5
        assert p.g_coeff is None
        assert p.g_exponent == pytest.approx(2.0, rel=1e-15)

    def test_fast_diffusion_profile(self):
        m = make_model("fast_diffusion", {"r": 0.5}, TINY_GRID)
        p = m.profile
        assert (p.alpha, p.delta, p.g_coeff, p.additive_const) == \
            (1.5, 2.0, 0.0, 0.0)

    def test_surface_growth_profile(self):
        m = make_model("surface_growth", {}, TINY_GRID)
        p = m.profile
        assert (p.alpha, p.delta, p.g_exponent) == (2.0, 0.5, 3.0)
        assert p.g_coeff is None and p.additive_const is None

    def test_heat_profile(self):
        m = make_model("heat_validation", {}, TINY_GRID)
        p = m.profile
        assert (p.alpha, p.delta, p.g_coeff, p.g_exponent,
                p.additive_const) == (2.0, 2.0, 0.0, 1.0, 0.0)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            CoercivityProfile(alpha=2.5, delta=1.0, g_coeff=0.0,
                              g_exponent=1.0, additive_const=0.0)
        with pytest.raises(ValueError):
            CoercivityProfile(alpha=2.0, delta=0.0, g_coeff=0.0,
                              g_exponent=1.0, additive_const=0.0)


class TestModelValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_model("pde_of_unknown_provenance")

    def test_unknown_parameter(self):
        with pytest.raises(ValueError):
            make_model("superlinear_sde", {"sigma": 1.0})
        with pytest.raises(ValueError):
            make_model("fast_diffusion", {"r": 0.5, "p": 1.5}, TINY_GRID)

    def test_scalar_rejects_grid(self):
        with pytest.raises(ValueError):
            make_model("superlinear_sde", {}, TINY_GRID)

    def test_field_requires_grid(self):
        with pytest.raises(ValueError):
            make_model("heat_validation", {})

    def test_exponent_ranges(self):
        with pytest.raises(ValueError):
            make_model("p_laplace_hot", {"p": 2.0}, TINY_GRID)
        with pytest.raises(ValueError):
            make_model("fast_diffusion", {"r": 1.0}, TINY_GRID)
        with pytest.raises(ValueError):
            make_model("superlinear_sde", {"m": 0.5})


class TestInitialConditions:
    def test_scalar_initial(self):
        m = make_model("superlinear_sde", {"x0": -2.5})
        s = initial_state(m)
        assert s.t == 0.0 and s.values[0] == -2.5

    def test_field_descriptor_norm(self):
        g = GridSpec(L=1.0, n_interior=16)
        m = make_model("heat_validation", {"x0": {"mode": 2,
                                                  "h_norm": 0.7}}, g)
        assert h_norm(m, initial_state(m)) == pytest.approx(0.7, rel=1e-12)

    def test_field_float_means_first_mode(self):
        g = GridSpec(L=1.0, n_interior=16)
        m = make_model("heat_validation", {"x0": 1.3}, g)
        vals = initial_values(m)
        assert _h_norm_values(m, vals) == pytest.approx(1.3, rel=1e-12)
        assert np.all(vals > 0)  # first sine mode does not change sign

    def test_field_raw_array(self):
        g = GridSpec(L=1.0, n_interior=4)
        want = [0.1, -0.2, 0.3, 0.0]
        m = make_model("heat_validation", {"x0": want}, g)
        assert np.array_equal(initial_values(m), want)
        with pytest.raises(ValueError):
            initial_values(make_model("heat_validation", {"x0": [1.0, 2.0]},
                                      g))

    def test_bad_descriptor(self):
        g = GridSpec(L=1.0, n_interior=4)
        m = make_model("heat_validation", {"x0": {"mode": 0}}, g)
        with pytest.raises(ValueError):
            initial_values(m)


class TestNorms:
    def test_scalar_norms_are_absolute_value(self):
        m = make_model("superlinear_sde", {})
        s = _state(m, [-3.0])
        assert h_norm(m, s) == 3.0 and v_norm(m, s) == 3.0

    def test_heat_l2(self):
        m = make_model("heat_validation", {}, TINY_GRID)
        assert h_norm(m, _state(m, [2.0])) == pytest.approx(
            math.sqrt(2.0), rel=1e-15)

    def test_heat_gradient_energy(self):
        # d = (2, -2), v = sqrt(0.5 * 8) = 2
        m = make_model("heat_validation", {}, TINY_GRID)
        assert v_norm(m, _state(m, [1.0])) == pytest.approx(2.0, rel=1e-15)

    def test_surface_growth_curvature_norm(self):
        # second difference of the spike is -8, norm sqrt(0.5 * 64)
        m = make_model("surface_growth", {}, TINY_GRID)
        assert h_norm(m, _state(m, [1.0])) == pytest.approx(
            math.sqrt(32.0), rel=1e-15)

    def test_surface_growth_fourth_norm(self):
        # fourth difference of the spike is 6/h^4 = 96
        m = make_model("surface_growth", {}, TINY_GRID)
        assert v_norm(m, _state(m, [1.0])) == pytest.approx(
            math.sqrt(0.5) * 96.0, rel=1e-15)

    def test_fast_diffusion_dual_norm(self):
        # metric = h^2 T^{-1} = 0.125 on one node; u=4: sqrt(0.5*16*0.125)=1
        m = make_model("fast_diffusion", {"r": 0.5}, TINY_GRID)
        assert h_norm(m, _state(m, [4.0])) == pytest.approx(1.0, rel=1e-14)

    def test_fast_diffusion_v_norm(self):
        # (0.5 * 4^{3/2})^{2/3} = 4^{2/3}
        m = make_model("fast_diffusion", {"r": 0.5}, TINY_GRID)
        assert v_norm(m, _state(m, [4.0])) == pytest.approx(
            4.0 ** (2.0 / 3.0), rel=1e-14)

    def test_p_laplace_v_norm(self):
        # (0.5 (2^{1.5} + 2^{1.5}))^{1/1.5} = 2
        m = make_model("p_laplace_hot", {"p": 1.5}, TINY_GRID)
        assert v_norm(m, _state(m, [1.0])) == pytest.approx(2.0, rel=1e-14)

    def test_inverse_metric_matches_direct_inverse(self):
        g = GridSpec(L=2.0, n_interior=5)
        tri = (np.diag(np.full(5, 2.0)) + np.diag(np.full(4, -1.0), 1)
               + np.diag(np.full(4, -1.0), -1))
        want = g.h * g.h * np.linalg.inv(tri)
        assert np.allclose(_inverse_laplacian_metric(g), want, rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(lam=st.floats(-8.0, 8.0),
           kind=st.sampled_from(["p_laplace_hot", "fast_diffusion",
                                 "surface_growth", "heat_validation"]))
    def test_norm_homogeneity(self, lam, kind):
        g = GridSpec(L=1.0, n_interior=9)
        params = {"p": 1.5} if kind == "p_laplace_hot" else (
            {"r": 0.5} if kind == "fast_diffusion" else {})
        m = make_model(kind, params, g)
        rng = np.random.default_rng(11)
        u = rng.standard_normal(9)
        base_h = _h_norm_values(m, u)
        base_v = _v_norm_values(m, u)
        assert _h_norm_values(m, lam * u) == pytest.approx(
            abs(lam) * base_h, rel=1e-10, abs=1e-12)
        assert _v_norm_values(m, lam * u) == pytest.approx(
            abs(lam) * base_v, rel=1e-10, abs=1e-12)


class TestDrift:
    def test_scalar_drift_both_signs(self):
        m = make_model("superlinear_sde",
                       {"quad_coeff": 2.0, "sink_coeff": 3.0})
        assert drift(m, 0.0, _state(m, [4.0]))[0] == pytest.approx(
            26.0, rel=1e-15)
        assert drift(m, 0.0, _state(m, [-4.0]))[0] == pytest.approx(
            38.0, rel=1e-15)

    def test_heat_drift_spike(self):
        m = make_model("heat_validation", {}, TINY_GRID)
        assert drift(m, 0.0, _state(m, [1.0]))[0] == pytest.approx(
            -8.0, rel=1e-15)

    def test_fast_diffusion_drift_spike(self):
        m = make_model("fast_diffusion", {"r": 0.5}, TINY_GRID)
        assert drift(m, 0.0, _state(m, [4.0]))[0] == pytest.approx(
            -16.0, rel=1e-15)

    def test_p_laplace_drift_spike(self):
        m = make_model("p_laplace_hot", {"p": 1.5}, TINY_GRID)
        got = drift(m, 0.0, _state(m, [1.0]))[0]
        assert got == pytest.approx(1.0 - 4.0 * math.sqrt(2.0), rel=1e-6)

    def test_surface_growth_matches_matrix_route(self):
        g = GridSpec(L=1.0, n_interior=12)
        m = make_model("surface_growth", {}, g)
        rng = np.random.default_rng(3)
        u = 0.3 * rng.standard_normal(12)
        grad_sq = _centered_diff(u, g.h) ** 2
        want = m.stiff_linear_part @ u + _second_diff(grad_sq, g.h)
        assert np.allclose(_drift_values(m, u), want, rtol=1e-11, atol=1e-11)

    def test_heat_drift_matches_matrix(self):
        g = GridSpec(L=1.0, n_interior=10)
        m = make_model("heat_validation", {}, g)
        rng = np.random.default_rng(4)
        u = rng.standard_normal(10)
        assert np.allclose(_drift_values(m, u), m.stiff_linear_part @ u,
                           rtol=1e-12, atol=1e-12)

    def test_heat_drift_second_order_convergence(self):
        # discrete Laplacian of sin(pi x) converges at rate h^2
        errs = []
        for n in (16, 32):
            g = GridSpec(L=1.0, n_interior=n)
            m = make_model("heat_validation", {}, g)
            x = g.nodes()
            u = np.sin(math.pi * x)
            exact = -math.pi ** 2 * u
            errs.append(np.max(np.abs(_drift_values(m, u) - exact)))
        ratio = errs[0] / errs[1]
        assert 3.0 < ratio < 5.0


def _brute_min_rayleigh(v_of, h_of, n, starts=12):
    from scipy.optimize import minimize
    rng = np.random.default_rng(1)
    best = math.inf
    for _ in range(starts):
        u0 = rng.standard_normal(n)
        u0 /= h_of(u0)
        res = minimize(lambda u: v_of(u) / h_of(u), u0, method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-10,
                                "fatol": 1e-12})
        best = min(best, res.fun)
    return best


class TestEmbeddingConstant:
    def test_scalar_is_one(self):
        assert embedding_constant(make_model("superlinear_sde", {})) == 1.0

    def test_heat_closed_form(self):
        g = GridSpec(L=1.0, n_interior=16)
        m = make_model("heat_validation", {}, g)
        tri = (np.diag(np.full(16, 2.0)) + np.diag(np.full(15, -1.0), 1)
               + np.diag(np.full(15, -1.0), -1))
        lam_min = np.linalg.eigvalsh(tri)[0] / (g.h * g.h)
        assert embedding_constant(m) == pytest.approx(math.sqrt(lam_min),
                                                      rel=1e-12)
        assert first_laplacian_eigenvalue(g) == pytest.approx(lam_min,
                                                              rel=1e-12)

    def test_heat_approaches_continuum(self):
        g = GridSpec(L=1.0, n_interior=256)
        m = make_model("heat_validation", {}, g)
        assert embedding_constant(m) == pytest.approx(math.pi, rel=1e-4)

    def test_surface_growth_generalized_eig(self):
        g = GridSpec(L=1.0, n_interior=10)
        m = make_model("surface_growth", {}, g)
        b2 = second_difference_matrix(g)
        b4 = fourth_difference_matrix(g)
        lam = np.linalg.eigvals(np.linalg.solve(b2.T @ b2, b4.T @ b4))
        want = math.sqrt(np.min(np.real(lam)))
        assert embedding_constant(m) == pytest.approx(want, rel=1e-8)

    def test_embedding_is_a_lower_bound(self):
        g = GridSpec(L=1.0, n_interior=12)
        rng = np.random.default_rng(7)
        for kind, params in (("p_laplace_hot", {"p": 1.5}),
                             ("fast_diffusion", {"r": 0.5}),
                             ("surface_growth", {}),
                             ("heat_validation", {})):
            m = make_model(kind, params, g)
            c = embedding_constant(m)
            assert c > 0
            for _ in range(100):
                u = rng.standard_normal(12)
                hn = _h_norm_values(m, u)
                if hn == 0.0:
                    continue
                assert _v_norm_values(m, u) >= c * hn * (1.0 - 1e-9)

    def test_p_laplace_matches_general_minimizer(self):
        g = GridSpec(L=1.0, n_interior=6)
        m = make_model("p_laplace_hot", {"p": 1.5}, g)
        h = g.h

        def v_of(u):
            d = _forward_diff(u, h)
            return (h * float(np.sum(np.abs(d) ** 1.5))) ** (1.0 / 1.5)

        def h_of(u):
            return math.sqrt(h * float(np.dot(u, u)))

        want = _brute_min_rayleigh(v_of, h_of, 6)
        assert embedding_constant(m) == pytest.approx(want, rel=1e-3)

    def test_fast_diffusion_matches_general_minimizer(self):
        g = GridSpec(L=1.0, n_interior=6)
        m = make_model("fast_diffusion", {"r": 0.5}, g)
        h = g.h
        metric = m.h_metric

        def v_of(u):
            return (h * float(np.sum(np.abs(u) ** 1.5))) ** (1.0 / 1.5)

        def h_of(u):
            return math.sqrt(h * max(float(u @ metric @ u), 0.0))

        want = _brute_min_rayleigh(v_of, h_of, 6)
        assert embedding_constant(m) == pytest.approx(want, rel=1e-3)

    def test_deterministic_across_calls(self):
        g = GridSpec(L=1.0, n_interior=8)
        m = make_model("p_laplace_hot", {"p": 1.3}, g)
        assert embedding_constant(m) == embedding_constant(m)
