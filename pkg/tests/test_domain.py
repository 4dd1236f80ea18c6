import math

import numpy as np
import pytest

from heatctl.domain import (
    SubdomainWindow,
    build_circle_domain,
    build_interval_domain,
    build_sturm_liouville_domain,
    gram_matrix,
    grid_laplacian,
    inner_product,
    inner_product_on,
    laplacian_power,
    project,
    synthesize,
    tridiagonal_eigh,
    window_gram,
)
from heatctl.errors import DomainError, EigensolverError
from heatctl.lcg import random_band_limited


def galerkin_first_eigenvalue(a, L, K=24, nq=400):
    """Lowest Rayleigh quotient of -(a u')' over sine-series trial functions.

    Gauss-Legendre quadrature on the continuum problem; shares nothing with
    the finite-difference discretization.
    """
    xq, wq = np.polynomial.legendre.leggauss(nq)
    x = 0.5 * L * (xq + 1.0)
    w = 0.5 * L * wq
    k = np.arange(1, K + 1)[:, None]
    phi = np.sin(k * np.pi * x / L)
    dphi = (k * np.pi / L) * np.cos(k * np.pi * x / L)
    stiff = (dphi * a(x) * w) @ dphi.T
    mass = (phi * w) @ phi.T
    from scipy.linalg import eigh

    return -float(eigh(stiff, mass, eigvals_only=True)[0])


class TestInterval:
    def test_first_mode_closed_form(self):
        d = build_interval_domain(math.pi, 4, 64)
        assert d.eigenvalues[0] == pytest.approx(-1.0, abs=1e-15)
        assert d.modes_at([math.pi / 2])[0, 0] == pytest.approx(math.sqrt(2 / math.pi), abs=1e-14)

    def test_gram_identity(self):
        d = build_interval_domain(math.pi, 16, 64)
        assert np.max(np.abs(gram_matrix(d) - np.eye(16))) < 1e-10

    def test_third_eigenvalue_length_two(self):
        d = build_interval_domain(2.0, 4, 16)
        assert d.eigenvalues[2] == pytest.approx(-22.2066099025, rel=1e-10)

    def test_spectrum_sign_and_order(self, interval):
        lam = interval.eigenvalues
        assert np.all(lam < 0)
        assert np.all(np.diff(lam) < 0)

    def test_weights_sum(self, interval):
        # the two boundary half-cells carry zero values and are dropped
        assert np.sum(interval.weights) == pytest.approx(math.pi - interval.spacing, rel=1e-14)

    @pytest.mark.parametrize("L,N,M", [(0.0, 4, 16), (-1.0, 4, 16), (1.0, 8, 31), (1.0, 0, 16)])
    def test_rejects_bad_sizes(self, L, N, M):
        with pytest.raises(DomainError):
            build_interval_domain(L, N, M)


class TestCircle:
    def test_constant_mode(self):
        d = build_circle_domain(2 * math.pi, 9, 64)
        assert d.eigenvalues[0] == 0.0
        assert np.allclose(np.abs(d.modes[0]), 1 / math.sqrt(2 * math.pi), atol=1e-15)
        assert np.count_nonzero(d.eigenvalues == 0.0) == 1

    def test_k2_pair(self):
        d = build_circle_domain(2 * math.pi, 9, 64)
        hits = np.flatnonzero(np.isclose(d.eigenvalues, -4.0, atol=1e-12))
        assert hits.size == 2
        # one cosine-like and one sine-like mode
        vals = d.modes[hits][:, 0]
        assert min(abs(vals)) < 1e-12 < max(abs(vals))

    def test_weights_exact(self):
        d = build_circle_domain(2 * math.pi, 9, 64)
        assert np.sum(d.weights) == pytest.approx(2 * math.pi, abs=1e-13)
        assert np.all(d.weights == d.weights[0])

    def test_gram_machine_precision(self, circle):
        assert np.max(np.abs(gram_matrix(circle) - np.eye(circle.n_modes))) < 1e-13


class TestSturmLiouville:
    def test_unit_coefficient_matches_dirichlet(self):
        d = build_sturm_liouville_domain(np.ones(402), math.pi, 400, 8)
        err = abs(d.eigenvalues[0] + 1.0)
        # second-order FD: lambda_h = -(2/h) sin(h/2))^2 ~ -1 + h^2/12
        h = math.pi / 401
        assert err < 6e-5
        assert err == pytest.approx(h * h / 12, rel=1e-2)

    def test_gram_identity(self, sturm):
        assert np.max(np.abs(gram_matrix(sturm) - np.eye(sturm.n_modes))) < 1e-12

    def test_rayleigh_bracket(self, sturm):
        lam = sturm.eigenvalues[0]
        assert -2.0 < lam < -1.0
        ref = galerkin_first_eigenvalue(lambda x: 1.0 + x / math.pi, math.pi)
        assert lam == pytest.approx(ref, rel=1e-4)

    def test_coefficient_forms_agree(self):
        L, M = math.pi, 64
        f = lambda x: 2.0 + np.sin(x)
        nodes = np.linspace(0, L, M + 2)
        a = build_sturm_liouville_domain(f, L, M, 8)
        b = build_sturm_liouville_domain(f(nodes), L, M, 8)
        assert np.allclose(a.eigenvalues, b.eigenvalues, rtol=1e-3)

    def test_rejects_nonelliptic(self):
        with pytest.raises(DomainError):
            build_sturm_liouville_domain(lambda x: np.cos(x), math.pi, 64, 8)

    def test_tridiagonal_eigh_against_dense(self):
        rng = np.random.default_rng(3)
        diag, off = rng.normal(size=30), rng.normal(size=29)
        w, v = tridiagonal_eigh(diag, off)
        A = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        assert np.allclose(np.sort(w), np.linalg.eigvalsh(A), atol=1e-12)
        assert np.allclose(A @ v, v * w, atol=1e-11)

    def test_tridiagonal_iteration_cap(self):
        rng = np.random.default_rng(4)
        with pytest.raises(EigensolverError):
            tridiagonal_eigh(rng.normal(size=40), rng.normal(size=39), max_iter=0)


class TestProjection:
    def test_mode_projects_to_unit_vector(self, interval):
        c = project(interval.mode(2))
        e = np.zeros(interval.n_modes)
        e[1] = 1.0
        assert np.max(np.abs(c - e)) < 1e-10

    def test_zero_field(self, interval):
        assert np.all(project(interval.zeros()) == 0.0)

    def test_roundtrip(self, interval):
        f = random_band_limited(interval, 40, 11)
        back = synthesize(interval, project(interval.field(f.values)))
        assert np.max(np.abs(back.values - f.values)) < 1e-9

    def test_length_mismatch(self, interval):
        with pytest.raises(DomainError):
            synthesize(interval, np.ones(interval.n_modes + 1))
        with pytest.raises(DomainError):
            interval.field(np.ones(interval.n_grid - 1))


class TestLaplacianPower:
    def test_identity(self, interval):
        f = random_band_limited(interval, 8, 1)
        assert np.array_equal(laplacian_power(f, 0).coeffs(), f.coeffs())

    def test_first_mode_fifth_power(self, interval):
        g = laplacian_power(interval.mode(1), 5)
        assert np.max(np.abs(g.values + interval.mode(1).values)) < 1e-13

    def test_spectral_vs_grid(self):
        d = build_interval_domain(math.pi, 16, 512)
        f = random_band_limited(d, 4, 5)
        a = laplacian_power(f, 2, "spectral").values
        b = laplacian_power(f, 2, "grid").values
        assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-4

    def test_grid_warns_on_amplification(self, caplog):
        d = build_interval_domain(math.pi, 8, 256)
        laplacian_power(d.mode(1), 6, "grid")
        assert "roundoff amplification" in caplog.text

    def test_circle_stencil_periodic(self, circle):
        f = circle.mode(3)
        lap = grid_laplacian(circle, f.values)
        lam = circle.eigenvalues[2]
        h = circle.spacing
        k = math.sqrt(-lam)
        discrete = -(2 * math.sin(k * h / 2) / h) ** 2
        assert np.max(np.abs(lap - discrete * f.values)) < 1e-10

    def test_bad_power(self, interval):
        with pytest.raises(DomainError):
            laplacian_power(interval.mode(1), -1)
        with pytest.raises(DomainError):
            laplacian_power(interval.mode(1), 1, "fft")


class TestInnerProducts:
    def test_unit_norm(self, interval):
        assert inner_product(interval.mode(1), interval.mode(1)) == pytest.approx(1.0, abs=1e-10)

    def test_full_window(self, interval):
        f, g = random_band_limited(interval, 6, 2), random_band_limited(interval, 6, 3)
        full = SubdomainWindow(0.0, math.pi)
        assert inner_product_on(f, g, full) == pytest.approx(inner_product(f, g), abs=1e-13)

    def test_half_window_closed_form(self, interval):
        v = inner_product_on(interval.mode(1), interval.mode(2), SubdomainWindow(0.0, math.pi / 2))
        # 4 / (3 pi), by antiderivative; checked with adaptive quadrature
        assert v == pytest.approx(0.42441318157838759, abs=1e-5)

    def test_clipped_cells_have_no_staircase_bias(self):
        # window edge in the middle of a cell: clipping keeps O(h^2) error
        errs = []
        for M in (64, 128, 256):
            d = build_interval_domain(math.pi, 4, M)
            v = inner_product_on(d.mode(1), d.mode(2), SubdomainWindow(0.0, math.pi / 2 + 0.3 * d.spacing))
            exact = _half_integral(math.pi / 2 + 0.3 * d.spacing)
            errs.append(abs(v - exact))
        assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3

    def test_empty_window(self, interval):
        with pytest.raises(DomainError):
            SubdomainWindow(1.0, 1.0)
        with pytest.raises(DomainError):
            SubdomainWindow.from_mask([False] * interval.n_grid)

    def test_window_outside_domain(self, interval):
        with pytest.raises(DomainError):
            SubdomainWindow(2.0, 4.0).weights(interval)

    def test_mask_window(self, interval):
        mask = (interval.x > 1.0) & (interval.x < 2.0)
        w = SubdomainWindow.from_mask(mask)
        assert np.array_equal(w.weights(interval), np.where(mask, interval.weights, 0.0))

    def test_circle_window_wraps(self, circle):
        w = SubdomainWindow(0.0, 2 * math.pi)
        assert np.allclose(w.weights(circle), circle.weights)

    def test_window_gram_symmetric_psd(self, interval, omega):
        g = window_gram(interval, omega, 12)
        assert np.array_equal(g, g.T) or np.max(np.abs(g - g.T)) < 1e-15
        assert np.min(np.linalg.eigvalsh(g)) > -1e-14


def _half_integral(b):
    # int_0^b (2/pi) sin x sin 2x dx = (2/pi) (2/3) sin^3 b
    return (2 / math.pi) * (2.0 / 3.0) * math.sin(b) ** 3
