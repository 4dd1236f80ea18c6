import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatctl.backinv import invert_spectral
from heatctl.domain import SubdomainWindow, build_interval_domain, inner_product, synthesize
from heatctl.fullctl import series_factor
from heatctl.kernel import alpha_matrix, semigroup_apply
from heatctl.oracle import scalar_series

D = build_interval_domain(math.pi, 24, 128)

coeffs = st.lists(st.floats(-1, 1), min_size=1, max_size=8)
times = st.floats(0.0, 2.0)
fast = settings(max_examples=40, deadline=None)


@fast
@given(coeffs, times, times)
def test_semigroup(c, s, t):
    f = synthesize(D, c)
    a = semigroup_apply(D, s, semigroup_apply(D, t, f))
    b = semigroup_apply(D, s + t, f)
    assert np.max(np.abs(a.values - b.values)) < 1e-13


@fast
@given(coeffs, coeffs, st.floats(-3, 3), times)
def test_linearity(c1, c2, k, t):
    f, g = synthesize(D, c1), synthesize(D, c2)
    lhs = semigroup_apply(D, t, f * k + g)
    rhs = semigroup_apply(D, t, f) * k + semigroup_apply(D, t, g)
    assert np.max(np.abs(lhs.values - rhs.values)) < 1e-12


@fast
@given(coeffs, times)
def test_contraction(c, t):
    f = synthesize(D, c)
    assert semigroup_apply(D, t, f).norm() <= f.norm() + 1e-14


@fast
@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(0.05, 2.0), st.integers(1, 10))
def test_alpha_symmetric_psd(a, b, T, m):
    lo, hi = sorted((a, b))
    if hi - lo < 0.05:
        hi = lo + 0.05
    A = alpha_matrix(D, SubdomainWindow(lo, hi), T, m)
    assert np.array_equal(A, A.T)
    assert np.min(np.linalg.eigvalsh(A)) > -1e-12 * max(1.0, np.max(np.abs(A)))


@fast
@given(st.floats(0.0, 0.95))
def test_series_factor_integers_closed_form(q):
    S, _ = series_factor(np.array([q]))
    assert S[0] == pytest.approx(q / (1 - q), rel=1e-12, abs=1e-300)


@fast
@given(st.floats(0.0, 0.9))
def test_dyadic_below_integers(q):
    a = series_factor(np.array([q]))[0][0]
    b = series_factor(np.array([q]), "dyadic")[0][0]
    assert b <= a + 1e-15
    assert b == pytest.approx(scalar_series(q, "dyadic"), rel=1e-13, abs=1e-300)


@fast
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=4), st.floats(0.65, 1.0))
def test_backward_forward_roundtrip(c, t):
    v = synthesize(D, c)
    u = semigroup_apply(D, 1.0 - t, v)
    back = invert_spectral(D, u, t, 1.0, 40)
    assert (back - v).norm() < 1e-9 * max(1.0, v.norm())


@fast
@given(coeffs, coeffs)
def test_inner_product_symmetric(c1, c2):
    f, g = synthesize(D, c1), synthesize(D, c2)
    assert inner_product(f, g) == pytest.approx(inner_product(g, f), abs=1e-14)
