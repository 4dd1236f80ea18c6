import math

import numpy as np
import pytest

from heatctl.domain import SubdomainWindow, build_circle_domain, build_interval_domain, synthesize, window_gram
from heatctl.errors import ConvergenceError, DomainError, WindowError
from heatctl.fullctl import (
    FullControlSpec,
    compute_b,
    compute_f,
    control_solution_series,
    delta_window,
    fit_growth_constant,
    run_full_control,
    series_factor,
    stationary_subdomain_feasibility,
)
from heatctl.kernel import semigroup_apply
from heatctl.lcg import random_band_limited
from heatctl.oracle import mode_ode_exact, scalar_series

NULL_F1 = 1.5414940825367982  # q / (1 - q), q = e^{-1/2}


class TestSeriesFactor:
    @pytest.mark.parametrize("q", [0.0, 0.3, 0.5, 0.8, 0.905, 0.99])
    def test_integers_closed_form(self, q):
        S, _ = series_factor(np.array([q]))
        assert S[0] == pytest.approx(q / (1 - q), rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("q", [0.0, 0.3, 0.5, 0.8])
    def test_matches_scalar_oracle(self, q):
        for v in ("integers", "dyadic"):
            assert series_factor(np.array([q]), v)[0][0] == pytest.approx(scalar_series(q, v), rel=1e-13, abs=1e-300)

    def test_variant_gap_at_half(self):
        a = series_factor(np.array([0.5]))[0][0]
        b = series_factor(np.array([0.5]), "dyadic")[0][0]
        assert a == pytest.approx(1.0, abs=1e-15)
        assert b == pytest.approx(0.31642150902189314, abs=1e-15)

    def test_cap_enforced(self):
        with pytest.raises(ConvergenceError):
            series_factor(np.array([0.999999]), max_index=3)

    def test_rejects_q_one(self):
        with pytest.raises(DomainError):
            series_factor(np.array([1.0]))

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            series_factor(np.array([0.5]), "odd")


class TestBackwardState:
    def test_tau_zero(self, interval):
        z = random_band_limited(interval, 6, 1)
        assert np.array_equal(compute_b(interval, z, 0.0).coeffs(), z.coeffs())

    def test_first_mode(self, interval):
        b = compute_b(interval, interval.mode(1), 0.25, J=30)
        assert b.coeffs()[0] == pytest.approx(1.2840254166877414, abs=1e-12)

    def test_two_modes(self, interval):
        b = compute_b(interval, synthesize(interval, [1, 1]), 0.1)
        assert b.coeffs()[:2] == pytest.approx(np.exp([0.1, 0.4]), abs=1e-12)
        assert b.info["terms"] <= 200

    def test_nonconvergence(self, interval):
        # high mode with |lambda| tau far beyond what J terms can sum
        with pytest.raises(ConvergenceError):
            compute_b(interval, interval.mode(40), 0.5, J=30)


class TestControl:
    def test_free_flow_needs_no_control(self, interval):
        u = random_band_limited(interval, 8, 3)
        z = semigroup_apply(interval, 0.2, u)
        for v in ("integers", "dyadic"):
            assert np.max(np.abs(compute_f(interval, z, u, 0.2, v).coeffs())) < 1e-12

    def test_single_mode_null_control(self, interval):
        f = compute_f(interval, interval.zeros(), interval.mode(1), 0.5)
        assert f.coeffs()[0] == pytest.approx(NULL_F1, abs=1e-12)
        assert abs(mode_ode_exact(-1.0, 1.0, f.coeffs()[0], 0.5)) < 1e-15

    def test_dyadic_misses(self, interval):
        f = compute_f(interval, interval.zeros(), interval.mode(1), 0.5, "dyadic")
        assert abs(mode_ode_exact(-1.0, 1.0, f.coeffs()[0], 0.5)) > 0.1

    def test_growth_window_rejected(self, interval):
        with pytest.raises(WindowError):
            compute_f(interval, interval.zeros(), interval.mode(1), 0.5, growth=1.0)

    def test_circle_mean_identity(self, circle):
        u = random_band_limited(circle, 9, 4) + circle.field(np.full(circle.n_grid, 0.4))
        z = random_band_limited(circle, 5, 5)
        f = compute_f(circle, z, u, 0.1)
        assert f.mean() * 0.1 == pytest.approx(u.mean() - z.mean(), abs=1e-12)
        assert f.info["augmentation"] == pytest.approx(f.mean(), abs=1e-12)

    def test_circle_terminal(self, circle):
        u = random_band_limited(circle, 9, 4)
        z = random_band_limited(circle, 5, 5)
        f = compute_f(circle, z, u, 0.1)
        end = mode_ode_exact(circle.eigenvalues, u.coeffs(), f.coeffs(), 0.1)
        assert np.max(np.abs(end - z.coeffs())) < 1e-10


class TestSolutionSeries:
    def test_at_horizon(self, interval):
        z = random_band_limited(interval, 5, 1)
        u = control_solution_series(interval, z, interval.zeros(), 1.0, 1.0)
        assert np.array_equal(u.coeffs(), z.coeffs())

    def test_midpoint_single_mode(self, interval):
        f = compute_f(interval, interval.zeros(), interval.mode(1), 0.5)
        u = control_solution_series(interval, interval.zeros(), f, 0.75, 1.0)
        q = math.exp(-0.25)
        exact = q - f.coeffs()[0] * (q - 1) / -1.0
        assert u.coeffs()[0] == pytest.approx(exact, abs=1e-10)

    def test_window_violation(self, interval):
        with pytest.raises(WindowError):
            control_solution_series(interval, interval.mode(1), interval.zeros(), 0.0, 1.0, growth=1.0)
        with pytest.raises(WindowError):
            control_solution_series(interval, interval.mode(1), interval.zeros(), 1.5, 1.0)


class TestGrowth:
    def test_first_mode(self, interval):
        C, A = fit_growth_constant(interval, interval.mode(1))
        assert A == pytest.approx(1.0, abs=1e-12)
        assert C == pytest.approx(interval.mode(1).sup())

    def test_scale_invariant(self, interval):
        z = semigroup_apply(interval, 1.0, random_band_limited(interval, 20, 2))
        assert fit_growth_constant(interval, z * 7.0)[1] == pytest.approx(fit_growth_constant(interval, z)[1], rel=1e-13)

    def test_zero_field(self, interval):
        assert fit_growth_constant(interval, interval.zeros()) == (0.0, 0.0)


class TestDeltaWindow:
    def test_large_A(self):
        assert delta_window(10.0, 1.0).delta == 0.05

    def test_small_A(self):
        d = delta_window(0.1, 1.0)
        assert d.delta == pytest.approx(0.15536240349696362, abs=1e-15)
        assert d.delta == d.reachable

    def test_zero_A(self):
        assert delta_window(0.0, 2.0).delta == pytest.approx(2 / (1 + 2 * math.e), abs=1e-15)

    @pytest.mark.parametrize("A,T", [(-1.0, 1.0), (1.0, 0.0)])
    def test_errors(self, A, T):
        with pytest.raises(DomainError):
            delta_window(A, T)


class TestRunFullControl:
    def test_free_flow_target(self, interval32):
        d = interval32
        u0 = d.mode(1)
        z = semigroup_apply(d, 1.0, u0)
        r = run_full_control(FullControlSpec(d, u0, z, 1.0, switch_time=0.9, cn_steps=256))
        assert r.spectral_residual < 1e-10
        assert np.max(np.abs(r.f.coeffs())) < 1e-10

    def test_default_switch_time(self, interval32):
        d = interval32
        u0 = d.mode(1)
        z = semigroup_apply(d, 0.5, d.mode(2))
        r = run_full_control(FullControlSpec(d, u0, z, 1.0, cn_steps=256))
        assert r.switch_time == pytest.approx(1.0 - 0.9 * r.delta)
        assert r.spectral_residual < 1e-8

    def test_window_violation(self, interval32):
        d = interval32
        spec = FullControlSpec(d, d.mode(1), d.mode(3) * 0.1, 1.0, switch_time=0.5, cn_steps=256)
        with pytest.raises(WindowError):
            run_full_control(spec)

    def test_summary_keys(self, interval32):
        d = interval32
        r = run_full_control(FullControlSpec(d, d.mode(1), d.mode(1) * 0.3, 1.0, switch_time=0.95,
                                             cn_steps=256))
        s = r.summary()
        for key in ("terminal_residual", "cn_residual", "variant", "terms_b", "index_f", "augmentation"):
            assert key in s
        assert r.terms["b"] <= 200 and r.terms["f"] <= 200


class TestFeasibility:
    @staticmethod
    def _design(d, w, m):
        lam = d.eigenvalues
        kappa = (1 - np.exp(lam)) / -lam
        return kappa[:, None] * window_gram(d, w)[:, :m], np.exp(lam) * d.mode(1).coeffs()

    def test_normal_equations_well_conditioned(self, interval32):
        d, w = interval32, SubdomainWindow(0.3, 0.8)
        rep = stationary_subdomain_feasibility(d, w, d.mode(1), 1.0, 4)
        A, free = self._design(d, w, 4)
        c = np.linalg.solve(A.T @ A, A.T @ free)
        assert rep.rank == 4
        assert rep.residual == pytest.approx(np.linalg.norm(free - A @ c), rel=1e-8)

    def test_extended_precision_lower_bound(self, interval32):
        mpmath = pytest.importorskip("mpmath")
        d, w = interval32, SubdomainWindow(0.3, 0.8)
        rep = stationary_subdomain_feasibility(d, w, d.mode(1), 1.0, 12)
        A, free = self._design(d, w, 12)
        mpmath.mp.dps = 50
        Am, b = mpmath.matrix(A.tolist()), mpmath.matrix(free.tolist())
        c = mpmath.lu_solve(Am.T * Am, Am.T * b)
        exact = float(mpmath.norm(b - Am * c))
        # minimum over all 12 directions is positive and below the resolvable one
        assert 0 < exact <= rep.residual

    def test_baseline_is_free_decay(self, interval32):
        d = interval32
        rep = stationary_subdomain_feasibility(d, SubdomainWindow(0.3, 0.8), d.mode(1), 1.0, 4)
        assert rep.baseline == pytest.approx(math.exp(-1), rel=1e-12)
        assert rep.residual < rep.baseline

    def test_m_too_large(self, interval32):
        with pytest.raises(DomainError):
            stationary_subdomain_feasibility(interval32, SubdomainWindow(0.3, 0.8), interval32.mode(1), 1.0, 33)
