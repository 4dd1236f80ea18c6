"""
Null control from a subdomain omega on the span V_m of the first m modes.

The control is g(x, t) chi_omega(x) with g(x, t) = sum_j e^{lambda_j (T - t)} s_j eta_j(x),
a solution of the backward equation P g + g_t = 0. Killing u(T) on V_m
gives the positive definite system alpha s = beta, where

    alpha_ij = (1 - e^{(l_i + l_j) T}) / |l_i + l_j| <eta_i, eta_j>_omega,
    beta_i   = e^{l_i T} <eta_i, u0>.

The system is solved by Cholesky with one refinement step; no inverse is
formed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .domain import Field, SpectralDomain, SubdomainWindow, synthesize, window_gram
from .errors import CholeskyBreakdown, DomainError, RouteMismatch
from .kernel import DEFAULT_TIME_STEPS, alpha_matrix, semigroup_apply, time_integral, time_nodes
from .oracle import rk4_linear_system

log = logging.getLogger(__name__)

ROUTE_TOL = 1e-10
ENERGY_TIME_STEPS = 1024


def _check_m(domain: SpectralDomain, m: int):
    if not 1 <= m <= domain.n_modes:
        raise DomainError(f"m={m} outside 1..{domain.n_modes}")


def assemble_alpha(domain: SpectralDomain, window: SubdomainWindow, T: float, m: int) -> np.ndarray:
    _check_m(domain, m)
    return alpha_matrix(domain, window, T, m)


def assemble_beta(domain: SpectralDomain, u0: Field, T: float, m: int) -> np.ndarray:
    """beta_i = e^{l_i T} <eta_i, u0>, checked against <eta_i, e^{TP} u0>.

    The second route evolves the quadrature projection of the grid samples
    of u0, so the two agree only when the samples and the stored
    coefficients describe the same function.
    """
    _check_m(domain, m)
    if not T > 0:
        raise DomainError("T must be positive")
    lam = domain.eigenvalues[:m]
    direct = np.exp(lam * T) * u0.coeffs()[:m]
    sampled = Field(domain, u0.values)
    psi = semigroup_apply(domain, T, sampled)
    evolved = domain.modes[:m] @ (domain.weights * psi.values)
    gap = float(np.max(np.abs(direct - evolved))) if m else 0.0
    scale = max(1.0, float(np.max(np.abs(direct))))
    if gap > ROUTE_TOL * scale:
        raise RouteMismatch(f"beta routes differ by {gap:.3e}; grid too coarse for u0")
    return direct


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower factor of a symmetric positive definite matrix.

    Raises CholeskyBreakdown with the index and value of the first
    nonpositive pivot.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    low = np.zeros_like(a)
    for k in range(n):
        pivot = a[k, k] - np.dot(low[k, :k], low[k, :k])
        if not pivot > 0:
            raise CholeskyBreakdown(k, float(pivot))
        low[k, k] = math.sqrt(pivot)
        low[k + 1:, k] = (a[k + 1:, k] - low[k + 1:, :k] @ low[k, :k]) / low[k, k]
    return low


def cholesky_solve(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = low.shape[0]
    y = np.zeros(n)
    for i in range(n):
        y[i] = (rhs[i] - np.dot(low[i, :i], y[:i])) / low[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - np.dot(low[i + 1:, i], x[i + 1:])) / low[i, i]
    return x


@dataclass(frozen=True, eq=False)
class SubdomainControlSystem:
    domain: SpectralDomain
    window: SubdomainWindow
    horizon: float
    m: int
    alpha: np.ndarray
    beta: np.ndarray
    s: np.ndarray
    factor: np.ndarray
    condition: float
    energy: float
    residual: float
    discarded_mass: float

    def phi(self) -> Field:
        """phi = sum_j s_j eta_j, the terminal value of g."""
        return synthesize(self.domain, self.s)

    def summary(self) -> dict:
        return {
            "m": self.m,
            "window": ("mask" if self.window.mask is not None
                       else [float(self.window.start), float(self.window.end)]),
            "T": self.horizon,
            "condition": self.condition,
            "energy": self.energy,
            "solve_residual": self.residual,
            "discarded_mass": self.discarded_mass,
        }


def solve_control(domain: SpectralDomain, window: SubdomainWindow, T: float, m: int,
                  u0: Field) -> SubdomainControlSystem:
    """Assemble and solve alpha s = beta for the V_m null control.

    Modes of u0 above m are dropped; their share of ||u0||^2 is reported
    as ``discarded_mass``.
    """
    c = u0.coeffs()
    total = float(np.dot(c, c))
    discarded = float(np.dot(c[m:], c[m:])) / total if total > 0 else 0.0
    if discarded > 0:
        log.info("u0 has %.3e of its mass outside V_%d; projected", discarded, m)
    u0m = synthesize(domain, c[:m])
    alpha = assemble_alpha(domain, window, T, m)
    beta = assemble_beta(domain, u0m, T, m)
    low = cholesky(alpha)
    s = cholesky_solve(low, beta)
    s = s + cholesky_solve(low, beta - alpha @ s)
    pivots = np.diag(low) ** 2
    condition = float((pivots.max() / pivots.min()) ** 2)
    res = float(np.max(np.abs(alpha @ s - beta)))
    return SubdomainControlSystem(
        domain=domain, window=window, horizon=float(T), m=int(m), alpha=alpha, beta=beta,
        s=s, factor=low, condition=condition, energy=float(np.dot(beta, s)), residual=res,
        discarded_mass=discarded,
    )


def control_evaluate(system: SubdomainControlSystem, x, t: float, applied: bool = False):
    """g(x, t) = sum_j e^{l_j (T - t)} s_j eta_j(x); times chi_omega if ``applied``."""
    T = system.horizon
    if not 0.0 <= t <= T:
        raise DomainError(f"t={t} outside [0, {T}]")
    d = system.domain
    lam = d.eigenvalues[:system.m]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    g = (np.exp(lam * (T - t)) * system.s) @ d.modes_at(xs)[:system.m]
    if applied:
        g = g * system.window.contains(xs)
    return float(g[0]) if np.ndim(x) == 0 else g


@dataclass(frozen=True)
class GalerkinReport:
    closed_form: float
    integrated: float
    nt: int
    terminal_closed: np.ndarray
    terminal_integrated: np.ndarray


def galerkin_verify(system: SubdomainControlSystem, u0: Field, nt: int = 2000) -> GalerkinReport:
    """Terminal relative norm ||u(T)|| / ||u0|| of the controlled V_m dynamics.

    du_i/dt = l_i u_i - sum_j <eta_i, eta_j>_omega e^{l_j (T - t)} s_j.
    Closed form: u(T) = e^{lT} u0 - alpha s = beta - alpha s. The second
    route integrates the same system with RK4.
    """
    if nt < 16:
        raise DomainError(f"need at least 16 steps, got {nt}")
    d, m, T = system.domain, system.m, system.horizon
    lam = d.eigenvalues[:m]
    c0 = u0.coeffs()[:m]
    base = float(np.linalg.norm(c0))
    end_closed = np.exp(lam * T) * c0 - system.alpha @ system.s
    gram = window_gram(d, system.window, m)
    s = system.s

    def rhs(t, u):
        return lam * u - gram @ (np.exp(lam * (T - t)) * s)

    end_rk = rk4_linear_system(rhs, c0, T, nt)
    scale = base if base > 0 else 1.0
    return GalerkinReport(
        closed_form=float(np.linalg.norm(end_closed)) / scale,
        integrated=float(np.linalg.norm(end_rk)) / scale,
        nt=int(nt), terminal_closed=end_closed, terminal_integrated=end_rk,
    )


def control_energy(system: SubdomainControlSystem) -> float:
    """||g||_H^2 = sum_j beta_j s_j."""
    return float(np.dot(system.beta, system.s))


def control_energy_quadrature(system: SubdomainControlSystem, nt: int = ENERGY_TIME_STEPS) -> float:
    """Integral of g^2 over omega x [0, T] by grid and Simpson quadrature."""
    d, m, T = system.domain, system.m, system.horizon
    lam = d.eigenvalues[:m]
    w = system.window.weights(d)
    times = time_nodes(T, nt)
    g = (np.exp(np.outer(T - times, lam)) * system.s) @ d.modes[:m]
    return float(time_integral((g**2) @ w, T))


def quadratic_form_quadrature(domain: SpectralDomain, window: SubdomainWindow, T: float,
                              b: np.ndarray, nt: int = DEFAULT_TIME_STEPS) -> float:
    """int_0^T int_omega (sum_j b_j e^{l_j s} eta_j)^2, the integral form of b^T alpha b."""
    m = len(b)
    lam = domain.eigenvalues[:m]
    times = time_nodes(T, nt)
    v = (np.exp(np.outer(times, lam)) * b) @ domain.modes[:m]
    return float(time_integral((v**2) @ window.weights(domain), T))
