"""
Heat kernel, semigroup, the observation kernel K and its operator L.

Everything here is the truncated eigen-expansion

    G(x, t, y) = sum_j exp(lambda_j t) eta_j(x) eta_j(y)

over the N modes fixed when the domain was built. Routines that integrate
over (0, T] in time also have a composite-Simpson route, kept as an
independent cross-check of the closed-form time integrals.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from .domain import (
    Field,
    SpectralDomain,
    SubdomainWindow,
    synthesize,
    window_gram,
)
from .errors import DomainError

DEFAULT_TIME_STEPS = 256
TAYLOR_SWITCH = 1e-8


def _positive_time(t: float):
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")


def truncation_tail(domain: SpectralDomain, t: float) -> float:
    """Crude bound exp(lambda_N t) * N on the discarded part of the kernel."""
    _positive_time(t)
    return math.exp(domain.eigenvalues[-1] * t) * domain.n_modes


def kernel_eval(domain: SpectralDomain, t: float, x, y, with_tail: bool = False):
    """G(x, t, y), elementwise over broadcast x and y."""
    _positive_time(t)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    ex = domain.modes_at(x.ravel())
    ey = domain.modes_at(y.ravel())
    g = np.exp(domain.eigenvalues * t) @ (ex * ey)
    g = g.reshape(shape)
    if shape == ():
        g = float(g)
    if with_tail:
        return g, truncation_tail(domain, t)
    return g


def kernel_matrix(domain: SpectralDomain, t: float, xs=None, ys=None) -> np.ndarray:
    """Kernel slice G(xs[i], t, ys[j]); grid nodes by default."""
    _positive_time(t)
    ex = domain.modes if xs is None else domain.modes_at(xs)
    ey = domain.modes if ys is None else domain.modes_at(ys)
    return (ex.T * np.exp(domain.eigenvalues * t)) @ ey


def semigroup_apply(domain: SpectralDomain, t: float, f: Field) -> Field:
    """Free heat flow e^{t P} f, coefficient-wise."""
    if t < 0:
        raise DomainError("negative time: use heatctl.backinv for backward flow")
    if f.domain is not domain:
        raise DomainError("field belongs to another domain")
    return synthesize(domain, np.exp(domain.eigenvalues * t) * f.coeffs())


def kernel_mass(domain: SpectralDomain, t: float, x) -> float:
    """Quadrature of y -> G(x, t, y) over the domain."""
    g = kernel_matrix(domain, t, xs=np.atleast_1d(x))
    mass = g @ domain.weights
    return float(mass[0]) if np.ndim(x) == 0 else mass


def one_minus_exp_over(s, T: float) -> np.ndarray:
    """(1 - exp(s T)) / |s| for s <= 0, with the s -> 0 limit T.

    Uses expm1 and switches to the Taylor series T (1 + sT/2 + (sT)^2/6)
    when |s T| < 1e-8.
    """
    s = np.asarray(s, dtype=np.float64)
    if np.any(s > 0):
        raise DomainError("exponent sum must be nonpositive")
    z = s * T
    small = np.abs(z) < TAYLOR_SWITCH
    safe = np.where(small, -1.0, s)
    out = np.expm1(np.where(small, -1.0, z)) / safe
    taylor = T * (1.0 + z / 2.0 + z * z / 6.0)
    return np.where(small, taylor, out)


def alpha_matrix(domain: SpectralDomain, window: SubdomainWindow, T: float,
                 m: Optional[int] = None) -> np.ndarray:
    """alpha_ij = (1 - e^{(l_i + l_j) T}) / |l_i + l_j| * <eta_i, eta_j>_omega."""
    _positive_time(T)
    m = domain.n_modes if m is None else m
    if not 1 <= m <= domain.n_modes:
        raise DomainError(f"m={m} outside 1..{domain.n_modes}")
    lam = domain.eigenvalues[:m]
    gram = window_gram(domain, window, m)
    a = one_minus_exp_over(lam[:, None] + lam[None, :], T) * gram
    return 0.5 * (a + a.T)


def time_nodes(T: float, nt: int) -> np.ndarray:
    if nt < 2 or nt % 2:
        raise DomainError(f"Simpson rule needs an even step count, got {nt}")
    return np.linspace(0.0, T, nt + 1)


def time_integral(values: np.ndarray, T: float, axis: int = 0):
    """Composite Simpson over uniform nodes spanning [0, T]."""
    n = values.shape[axis] - 1
    return simpson(values, dx=T / n, axis=axis)


def k_kernel_eval(domain: SpectralDomain, window: SubdomainWindow, T: float, x, y):
    """K(x, T, y) = sum_ij alpha_ij eta_i(x) eta_j(y)."""
    a = alpha_matrix(domain, window, T)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    ex = domain.modes_at(x.ravel())
    ey = domain.modes_at(y.ravel())
    # symmetrized outer product makes K(x, y) == K(y, x) bit for bit
    pair = 0.5 * (ex[:, None, :] * ey[None, :, :] + ey[:, None, :] * ex[None, :, :])
    k = np.einsum("ij,ijp->p", a, pair).reshape(x.shape)
    return float(k) if x.shape == () else k


def k_kernel_quadrature(domain: SpectralDomain, window: SubdomainWindow, T: float, x, y,
                        nt: int = DEFAULT_TIME_STEPS) -> float:
    """K(x, T, y) by integrating G(x,s,z) G(z,s,y) over omega and (0, T]."""
    _positive_time(T)
    w = window.weights(domain)
    s = time_nodes(T, nt)
    gx = kernel_matrix_at_times(domain, s, float(x))
    gy = kernel_matrix_at_times(domain, s, float(y))
    inner = (gx * gy) @ w
    return float(time_integral(inner, T))


def kernel_matrix_at_times(domain: SpectralDomain, times: np.ndarray, x: float) -> np.ndarray:
    """G(x, s_k, z_m) for every time node s_k and grid node z_m, shape (K, M).

    Valid at s = 0 because the expansion is truncated.
    """
    ex = domain.modes_at([x])[:, 0]
    decay = np.exp(np.outer(times, domain.eigenvalues))
    return (decay * ex) @ domain.modes


def l_operator_apply(domain: SpectralDomain, window: SubdomainWindow, T: float,
                     phi: Field) -> Field:
    """(L phi) = int_D K(., T, y) phi(y) dy, as alpha @ coefficients."""
    a = alpha_matrix(domain, window, T)
    return synthesize(domain, a @ phi.coeffs())


def h_norm(domain: SpectralDomain, window: SubdomainWindow, T: float, phi: Field) -> float:
    """Observation norm ||phi||_H = sqrt(phi^T alpha phi)."""
    a = alpha_matrix(domain, window, T)
    c = phi.coeffs()
    return math.sqrt(max(float(c @ a @ c), 0.0))


def h_norm_quadrature(domain: SpectralDomain, window: SubdomainWindow, T: float, phi: Field,
                      nt: int = DEFAULT_TIME_STEPS) -> float:
    """||phi||_H by integrating |e^{sP} phi|^2 over omega x (0, T]."""
    _positive_time(T)
    w = window.weights(domain)
    s = time_nodes(T, nt)
    evolved = (np.exp(np.outer(s, domain.eigenvalues)) * phi.coeffs()) @ domain.modes
    density = (evolved**2) @ w
    return math.sqrt(max(float(time_integral(density, T)), 0.0))
