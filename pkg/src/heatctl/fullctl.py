"""
Essentially time-independent control on the full domain.

The control problem is

    P u - u_t = f(x) chi_[T0, T](t),   u(0) = u0,   u(T) = z,

solved by free flow on [0, T0] followed by a stationary source f on
[T0, T]. With tau = T - T0 and q_j = exp(lambda_j tau), the backward state
b = sum_j P^j z (-tau)^j / j! has coefficients z_j / q_j and the control is

    f_j = lambda_j S(q_j) (b_j - u_j(T0)).

Two choices of S are kept. ``"integers"`` is sum_{k>=1} q^k = q / (1 - q),
which is what iterating the fixed-point identity
f = G_tau * P(b - u) + G_tau * f produces and what the mode ODE confirms.
``"dyadic"`` is sum_{k>=1} q^(2^k), the series with heat-kernel times
2^k tau; it does not hit the target and is kept for comparison only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .domain import CIRCLE, Field, SpectralDomain, SubdomainWindow, synthesize, window_gram
from .errors import ConvergenceError, DomainError, WindowError
from .kernel import one_minus_exp_over, semigroup_apply
from .oracle import GridSpec, crank_nicolson, mode_ode_exact

log = logging.getLogger(__name__)

VARIANTS = ("integers", "dyadic")
SERIES_CUTOFF = 1e-14
MAX_TERMS = 200
MAX_INDEX = 200
REACHABLE_E_PLUS = 3.0


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise DomainError(f"unknown series variant {variant!r}; expected one of {VARIANTS}")


def series_factor(q, variant: str = "integers", eps: float = SERIES_CUTOFF,
                  max_index: int = MAX_INDEX):
    """Vectorized S(q) for 0 <= q < 1; returns (S, last index used).

    ``integers``: partial sums are doubled, S_{n+1} = S_n (1 + q^(2^n)),
    so after n steps S_n = q + q^2 + ... + q^(2^n). This is the repeated
    kernel-doubling of the fixed-point iteration; it reaches the geometric
    sum in O(log) steps even for q close to one.
    ``dyadic``: S = sum_k q^(2^k) term by term.

    Summation stops when every added term is <= eps times its partial sum;
    running past ``max_index`` raises ConvergenceError.
    """
    _check_variant(variant)
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0) or np.any(q >= 1):
        raise DomainError("series factor needs 0 <= q < 1")
    power = q.copy()  # q^(2^n)
    if variant == "integers":
        total = q.copy()
        n = 0
        while True:
            added = total * power
            if np.all(added <= eps * total):
                return total, n
            n += 1
            if n > max_index:
                raise ConvergenceError(f"integer series not converged after {max_index} doublings")
            total = total + added
            power = power * power
    total = np.zeros_like(q)
    k = 0
    while True:
        k += 1
        power = power * power
        if np.all(power <= eps * total) and k > 1:
            return total, k - 1
        if k > max_index:
            raise ConvergenceError(f"dyadic series not converged after {max_index} terms")
        total = total + power


def compute_b(domain: SpectralDomain, z: Field, tau: float, J: int = MAX_TERMS,
              eps: float = SERIES_CUTOFF) -> Field:
    """Backward state b = sum_{j<=J} P^j z (-tau)^j / j!.

    Terms are formed as coefficient powers lambda^j z_j. The sum stops once
    the L2 norm of a term is below eps times the norm of the partial sum;
    ``info`` reports the terms used and that last term's norm.
    """
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    lam = domain.eigenvalues
    term = np.array(z.coeffs())
    total = term.copy()
    if tau == 0:
        return synthesize(domain, total)
    for j in range(1, J + 1):
        term = term * (-lam * tau) / j
        total = total + term
        tn = np.linalg.norm(term)
        if tn <= eps * np.linalg.norm(total):
            out = synthesize(domain, total)
            return Field(domain, out.values, out.coefficients, {"terms": j, "tail": float(tn)})
    raise ConvergenceError(
        f"b-series still growing after {J} terms (|lambda_N| tau = {-lam[-1] * tau:.3g})")


def compute_f(domain: SpectralDomain, z: Field, u_switch: Field, tau: float,
              variant: str = "integers", eps: float = SERIES_CUTOFF, K: int = MAX_INDEX,
              J: int = MAX_TERMS, b: Optional[Field] = None,
              growth: Optional[float] = None) -> Field:
    """Stationary control f driving u_switch at T0 to z at T0 + tau.

    On the circle the zero mode is not reachable through the kernel series
    (lambda = 0); its coefficient is set from the mean balance
    mean(f) tau = mean(u_switch) - mean(z).
    """
    _check_variant(variant)
    if not tau > 0:
        raise DomainError("tau must be positive")
    if growth is not None and growth * tau >= 0.5:
        raise WindowError(f"growth constant {growth:.4g} times tau {tau:.4g} is not below 1/2")
    lam = domain.eigenvalues
    if b is None:
        b = compute_b(domain, z, tau, J, eps)
    diff = b.coeffs() - u_switch.coeffs()
    zero = lam == 0.0
    if np.any(zero) and domain.kind != CIRCLE:
        raise DomainError("zero eigenvalue on a Dirichlet domain")
    q = np.exp(lam * tau)
    if np.any(q[~zero] >= 1.0):
        raise DomainError("q >= 1 for a decaying mode; domain data corrupted")
    S, index = series_factor(np.where(zero, 0.0, q), variant, eps, K)
    coeffs = lam * S * diff
    augmentation = None
    if np.any(zero):
        c0 = (u_switch.coeffs()[zero] - z.coeffs()[zero]) / tau
        coeffs[zero] = c0
        augmentation = float(c0[0] / math.sqrt(domain.measure))
    out = synthesize(domain, coeffs)
    info = {"index": int(index), "variant": variant, "augmentation": augmentation}
    return Field(domain, out.values, out.coefficients, info)


def control_solution_series(domain: SpectralDomain, z: Field, f: Field, t: float, T: float,
                            J: int = MAX_TERMS, eps: float = SERIES_CUTOFF,
                            growth: Optional[float] = None) -> Field:
    """u(t) = z + sum_{j>=1} (P^j z - P^{j-1} f) (t - T)^j / j!.

    With a growth constant C, |t - T| must satisfy
    C |t - T| / (1 - C |t - T|) < 1.
    """
    d = t - T
    if d > 0:
        raise WindowError(f"t={t} lies after the horizon T={T}")
    if growth is not None:
        r = growth * abs(d)
        if r >= 0.5:
            raise WindowError(f"|t - T| = {abs(d):.4g} outside the window for C = {growth:.4g}")
    lam = domain.eigenvalues
    zt = np.array(z.coeffs())
    ft = np.array(f.coeffs()) * d
    total = zt.copy()
    if d == 0:
        return synthesize(domain, total)
    for j in range(1, J + 1):
        zt = zt * lam * d / j
        total = total + zt - ft
        tn = np.linalg.norm(zt) + np.linalg.norm(ft)
        ft = ft * lam * d / (j + 1)
        if tn <= eps * max(np.linalg.norm(total), np.finfo(float).tiny):
            out = synthesize(domain, total)
            return Field(domain, out.values, out.coefficients, {"terms": j, "tail": float(tn)})
    raise ConvergenceError(f"solution series not converged after {J} terms")


def fit_growth_constant(domain: SpectralDomain, z: Field, j_max: int = 20):
    """Fit |P^j z| <= C A^j j! with C = sup|z| and the smallest such A.

    A = max_{1<=j<=j_max} (sup|P^j z| / (C j!))^(1/j), sup over grid nodes.
    Returns (0, 0) for the zero field.
    """
    c = z.coeffs()
    C = float(np.max(np.abs(synthesize(domain, c).values)))
    if C == 0.0:
        return 0.0, 0.0
    lam = domain.eigenvalues
    A = 0.0
    power = np.array(c)
    log_fact = 0.0
    for j in range(1, j_max + 1):
        power = power * lam
        log_fact += math.log(j)
        sup = float(np.max(np.abs(power @ domain.modes)))
        if sup > 0:
            A = max(A, math.exp((math.log(sup) - math.log(C) - log_fact) / j))
    return C, A


class DeltaWindow(NamedTuple):
    delta: float
    reachable: float


def delta_window(A: float, T: float) -> DeltaWindow:
    """delta = min(1/(2A), T/(1+2e)); ``reachable`` is the T/(1+2e) branch."""
    if A < 0 or not T > 0:
        raise DomainError("need A >= 0 and T > 0")
    reachable = T / (1.0 + 2.0 * math.e)
    first = math.inf if A == 0 else 1.0 / (2.0 * A)
    return DeltaWindow(min(first, reachable), reachable)


@dataclass(frozen=True)
class FullControlSpec:
    domain: SpectralDomain
    u0: Field
    z: Field
    horizon: float
    switch_time: Optional[float] = None
    series_cutoff: float = SERIES_CUTOFF
    max_terms: int = MAX_TERMS
    max_index: int = MAX_INDEX
    variant: str = "integers"
    cn_steps: int = 4096
    trajectory_samples: int = 11
    growth_j_max: int = 20
    check_window: bool = True


@dataclass(frozen=True, eq=False)
class FullControlResult:
    f: Field
    b: Field
    u_switch: Field
    terminal: Field
    times: np.ndarray
    trajectory: np.ndarray
    spectral_residual: float
    cn_residual: float
    mode_discrepancy: np.ndarray
    augmentation: Optional[float]
    terms: dict
    variant: str
    switch_time: float
    tau: float
    delta: float
    growth: tuple
    f_growth: float
    f_growth_bound: float
    consistent: bool
    extras: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "variant": self.variant,
            "switch_time": self.switch_time,
            "tau": self.tau,
            "delta": self.delta,
            "growth_C": self.growth[0],
            "growth_A": self.growth[1],
            "terminal_residual": self.spectral_residual,
            "cn_residual": self.cn_residual,
            "max_mode_discrepancy": float(np.max(self.mode_discrepancy)),
            "augmentation": self.augmentation,
            "terms_b": self.terms["b"],
            "index_f": self.terms["f"],
            "f_growth_A": self.f_growth,
            "f_growth_bound": self.f_growth_bound,
            "consistent": self.consistent,
        }


CONSISTENCY_TOL = 1e-6
FEASIBILITY_RCOND = 1e-13
CN_TOL = 1e-3


def _relative_residual(u: Field, z: Field) -> float:
    return (u - z).norm() / max(z.norm(), 1.0)


def run_full_control(spec: FullControlSpec) -> FullControlResult:
    """Two-phase control: free flow on [0, T0], stationary f on [T0, T].

    The terminal state is checked by exact per-mode propagation and by an
    independent Crank-Nicolson run on the grid. A variant whose exact
    residual exceeds 1e-6 (or whose CN residual exceeds 1e-3) is flagged
    inconsistent rather than rejected.
    """
    d, T = spec.domain, float(spec.horizon)
    if not T > 0:
        raise DomainError("horizon must be positive")
    C, A = fit_growth_constant(d, spec.z, spec.growth_j_max)
    win = delta_window(A, T)
    T0 = T - 0.9 * win.delta if spec.switch_time is None else float(spec.switch_time)
    tau = T - T0
    if not 0 < T0 <= T:
        raise WindowError(f"switch time {T0} not in (0, {T}]")
    if spec.check_window and tau >= win.delta:
        raise WindowError(f"T - T0 = {tau:.4g} not below delta = {win.delta:.4g}")
    c_star = 1.0 / (2.0 * win.delta)

    u_switch = semigroup_apply(d, T0, spec.u0)
    lam = d.eigenvalues
    if tau > 0:
        b = compute_b(d, spec.z, tau, spec.max_terms, spec.series_cutoff)
        f = compute_f(d, spec.z, u_switch, tau, spec.variant, spec.series_cutoff,
                      spec.max_index, spec.max_terms, b=b)
    else:
        b = synthesize(d, spec.z.coeffs())
        f = d.zeros()

    end_coeffs = mode_ode_exact(lam, u_switch.coeffs(), f.coeffs(), tau)
    terminal = synthesize(d, end_coeffs)
    residual = _relative_residual(terminal, spec.z)
    discrepancy = np.abs(end_coeffs - spec.z.coeffs())

    fvals = np.array(f.values)
    zero = np.zeros_like(fvals)

    def source(t):
        return fvals if t >= T0 else zero

    _, states = crank_nicolson(GridSpec.of(d), spec.u0.values, source, T, spec.cn_steps,
                               breakpoints=[T0])
    cn = Field(d, states[-1])
    cn_residual = _relative_residual(cn, spec.z)

    times = np.unique(np.concatenate((np.linspace(0.0, T, spec.trajectory_samples), [T0])))
    rows = []
    for t in times:
        if t < T0:
            rows.append(semigroup_apply(d, t, spec.u0).values)
        else:
            rows.append(control_solution_series(d, spec.z, f, t, T, spec.max_terms,
                                                spec.series_cutoff).values)
    trajectory = np.array(rows)

    _, A_f = fit_growth_constant(d, f, spec.growth_j_max)
    f_bound = 1.1 * c_star / (1.0 - c_star * tau) if c_star * tau < 1 else math.inf

    consistent = residual <= CONSISTENCY_TOL and cn_residual <= CN_TOL
    if not consistent:
        log.warning("variant %s inconsistent: exact residual %.3e, CN residual %.3e",
                    spec.variant, residual, cn_residual)
    return FullControlResult(
        f=f, b=b, u_switch=u_switch, terminal=terminal, times=times, trajectory=trajectory,
        spectral_residual=float(residual), cn_residual=float(cn_residual),
        mode_discrepancy=discrepancy, augmentation=f.info.get("augmentation"),
        terms={"b": int(b.info.get("terms", 0)), "f": int(f.info.get("index", 0))},
        variant=spec.variant, switch_time=float(T0), tau=float(tau), delta=float(win.delta),
        growth=(float(C), float(A)), f_growth=float(A_f), f_growth_bound=float(f_bound),
        consistent=bool(consistent), extras={"cn_terminal": cn},
    )


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    m: int
    residual: float
    baseline: float
    coefficients: np.ndarray
    control: Field
    terminal: Field
    rank: int
    singular_values: np.ndarray

    @property
    def relative_residual(self) -> float:
        return self.residual / self.baseline if self.baseline > 0 else 0.0


def stationary_subdomain_feasibility(domain: SpectralDomain, window: SubdomainWindow, u0: Field,
                                     T: float, m: int, rcond: float = FEASIBILITY_RCOND) -> FeasibilityReport:
    """Best stationary control supported in omega for the null-control target.

    The control is f = chi_omega * sum_{k<=m} c_k eta_k, switched on over
    the whole of [0, T]. Its source projects onto all N modes through the
    window Gram matrix, and c minimizes ||u(T)||_2 under exact per-mode
    propagation. ``baseline`` is the free-flow norm ||e^{TP} u0||.

    Restricted to a short window the first m modes are close to linearly
    dependent, so the design matrix is solved by SVD with singular values
    below rcond * s_max dropped; ``rank`` reports how many were kept. The
    residual is the minimum over the numerically resolvable controls.
    """
    if not 1 <= m <= domain.n_modes:
        raise DomainError(f"m={m} outside 1..{domain.n_modes}")
    if not T > 0:
        raise DomainError("T must be positive")
    w_in = window.weights(domain)
    outside = float(np.sum((domain.weights - w_in) * u0.values**2))
    if outside <= 0.0:
        log.warning("u0 has no mass outside the window; the stationary problem is degenerate")
    lam = domain.eigenvalues
    c0 = u0.coeffs()
    free = np.exp(lam * T) * c0
    gain = one_minus_exp_over(lam, T)
    design = gain[:, None] * window_gram(domain, window)[:, :m]
    c, _, rank, sv = np.linalg.lstsq(design, free, rcond=rcond)
    end = free - design @ c
    profile = c @ domain.modes[:m]
    control = Field(domain, profile * (w_in / domain.weights))
    return FeasibilityReport(
        m=m, residual=float(np.linalg.norm(end)), baseline=float(np.linalg.norm(free)),
        coefficients=c, control=control, terminal=synthesize(domain, end),
        rank=int(rank), singular_values=sv,
    )
