"""
Invariant suite run by ``heatctl verify``.

Each check is a function of a ``Setup`` returning (ok, detail). Checks are
small fixed problems, so the suite runs in a few seconds; the random
fields come from the seeded LCG.
"""

from __future__ import annotations

import math
import traceback
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Tuple

import numpy as np

from . import backinv, fullctl, kernel, oracle, subctl
from .domain import (
    SubdomainWindow,
    build_circle_domain,
    build_interval_domain,
    build_sturm_liouville_domain,
    gram_matrix,
    inner_product,
    inner_product_on,
    laplacian_power,
    project,
    synthesize,
)
from .lcg import random_band_limited, random_coefficients


@dataclass
class Setup:
    seed: int = 0
    modes: int = 64
    grid: int = 512

    @cached_property
    def interval(self):
        return build_interval_domain(math.pi, self.modes, self.grid)

    @cached_property
    def circle(self):
        return build_circle_domain(2 * math.pi, self.modes + 1 - self.modes % 2, self.grid)

    @cached_property
    def sturm(self):
        return build_sturm_liouville_domain(lambda x: 1.0 + x / math.pi, math.pi, 256, 32)

    @cached_property
    def full_problem(self):
        d = self.interval
        u0 = synthesize(d, [1, 0, 0.5])
        z = kernel.semigroup_apply(d, 0.3, synthesize(d, [1, 1])) * 0.2
        return d, u0, z

    def full_run(self, variant):
        d, u0, z = self.full_problem
        spec = fullctl.FullControlSpec(d, u0, z, 1.0, switch_time=0.9, variant=variant)
        return fullctl.run_full_control(spec)

    @cached_property
    def full_integers(self):
        return self.full_run("integers")

    @cached_property
    def sub_system(self):
        d = self.interval
        u0 = random_band_limited(d, 8, self.seed)
        return subctl.solve_control(d, SubdomainWindow(0.5, 1.5), 1.0, 8, u0), u0


Check = Callable[[Setup], Tuple[bool, str]]
REGISTRY: List[Tuple[str, Check]] = []


def check(name: str):
    def wrap(fn):
        REGISTRY.append((name, fn))
        return fn
    return wrap


def _le(value, bound, label="err"):
    return bool(value <= bound), f"{label}={value:.3e} (bound {bound:.0e})"


# domain


@check("domain.interval_orthonormal")
def _(s):
    g = gram_matrix(s.interval)
    return _le(np.max(np.abs(g - np.eye(len(g)))), 1e-10)


@check("domain.circle_orthonormal")
def _(s):
    g = gram_matrix(s.circle)
    return _le(np.max(np.abs(g - np.eye(len(g)))), 1e-10)


@check("domain.sturm_orthonormal")
def _(s):
    g = gram_matrix(s.sturm)
    return _le(np.max(np.abs(g - np.eye(len(g)))), 1e-12)


@check("domain.interval_spectrum_negative_descending")
def _(s):
    lam = s.interval.eigenvalues
    return bool(np.all(lam < 0) and np.all(np.diff(lam) <= 0)), f"lambda_1={lam[0]:.6g}"


@check("domain.circle_single_zero_constant_mode")
def _(s):
    d = s.circle
    zero = np.flatnonzero(d.eigenvalues == 0.0)
    if zero.size != 1:
        return False, f"{zero.size} zero eigenvalues"
    err = np.max(np.abs(np.abs(d.modes[zero[0]]) - 1 / math.sqrt(d.length)))
    return _le(err, 1e-12)


@check("domain.circle_weights_sum")
def _(s):
    return _le(abs(np.sum(s.circle.weights) - 2 * math.pi), 1e-12)


@check("domain.roundtrip")
def _(s):
    f = random_band_limited(s.interval, 20, s.seed)
    back = synthesize(s.interval, project(s.interval.field(f.values)))
    return _le(np.max(np.abs(back.values - f.values)), 1e-9)


@check("domain.power_additivity")
def _(s):
    f = random_band_limited(s.interval, 10, s.seed + 1)
    a = laplacian_power(laplacian_power(f, 2), 3).coeffs()
    b = laplacian_power(f, 5).coeffs()
    return _le(np.max(np.abs(a - b)) / np.max(np.abs(b)), 1e-13)


@check("domain.power_spectral_vs_grid")
def _(s):
    d = build_interval_domain(math.pi, 16, 512)
    f = random_band_limited(d, 4, s.seed + 2)
    a = laplacian_power(f, 2, "spectral").values
    b = laplacian_power(f, 2, "grid").values
    return _le(np.linalg.norm(a - b) / np.linalg.norm(a), 1e-4)


@check("domain.window_full_equals_domain")
def _(s):
    d = s.interval
    f, g = random_band_limited(d, 6, s.seed), random_band_limited(d, 6, s.seed + 3)
    return _le(abs(inner_product_on(f, g, SubdomainWindow(0, math.pi)) - inner_product(f, g)), 1e-13)


@check("domain.window_inner_product_closed_form")
def _(s):
    d = s.interval
    v = inner_product_on(d.mode(1), d.mode(2), SubdomainWindow(0, math.pi / 2))
    return _le(abs(v - 4 / (3 * math.pi)), 1e-4)


@check("domain.sturm_unit_coefficient")
def _(s):
    d = build_sturm_liouville_domain(np.ones(258), math.pi, 256, 8)
    return _le(abs(d.eigenvalues[0] + 1.0), 6e-5)


@check("domain.sturm_rayleigh_bracket")
def _(s):
    lam = s.sturm.eigenvalues[0]
    return bool(-2.0 < lam < -1.0), f"lambda_1={lam:.6f}"


# kernel


@check("kernel.symmetry")
def _(s):
    x = np.linspace(0.1, 3.0, 7)
    g = kernel.kernel_eval(s.interval, 0.05, x[:, None], x[None, :])
    return _le(np.max(np.abs(g - g.T)), 0.0)


@check("kernel.reproducing")
def _(s):
    d = s.interval
    g = kernel.kernel_matrix(d, 0.1)
    comp = (g * d.weights) @ g
    return _le(np.max(np.abs(comp - kernel.kernel_matrix(d, 0.2))), 1e-10)


@check("kernel.circle_long_time")
def _(s):
    g = kernel.kernel_matrix(s.circle, 50.0, [0.3, 2.0], [1.0, 5.0])
    return _le(np.max(np.abs(g - 1 / (2 * math.pi))), 1e-12)


@check("kernel.circle_mass_one")
def _(s):
    m = kernel.kernel_mass(s.circle, 0.5, np.array([0.1, 3.0]))
    return _le(np.max(np.abs(m - 1.0)), 1e-12)


@check("kernel.interval_mass_below_one")
def _(s):
    m = kernel.kernel_mass(s.interval, 1.0, math.pi / 2)
    return bool(0.0 < m < 1.0), f"mass={m:.6f}"


@check("kernel.mass_monotone")
def _(s):
    ts = [0.5, 1, 2, 5, 10]
    m = [kernel.kernel_mass(s.interval, t, 1.0) for t in ts]
    return bool(np.all(np.diff(m) < 0) and m[-1] < math.exp(-9) * 2), f"mass(10)={m[-1]:.3e}"


@check("kernel.positivity_up_to_tail")
def _(s):
    g, tail = kernel.kernel_eval(s.interval, 0.01, s.interval.x[:, None], s.interval.x[None, ::8], True)
    # summation roundoff on the near-zero boundary values counts as tolerance
    bound = tail + 64 * np.finfo(float).eps * float(np.max(np.abs(g)))
    return _le(-min(float(np.min(g)), 0.0), bound, "negativity")


@check("kernel.semigroup_property")
def _(s):
    d = s.interval
    f = random_band_limited(d, 12, s.seed)
    a = kernel.semigroup_apply(d, 0.2, kernel.semigroup_apply(d, 0.3, f))
    b = kernel.semigroup_apply(d, 0.5, f)
    return _le(np.max(np.abs(a.values - b.values)), 1e-13)


@check("kernel.lqz_identity")
def _(s):
    d, w = s.interval, SubdomainWindow(1.0, 2.0)
    worst = 0.0
    for k in range(20):
        phi = random_band_limited(d, 16, s.seed + 100 + k)
        lhs = inner_product(kernel.l_operator_apply(d, w, 1.0, phi), phi)
        worst = max(worst, abs(lhs - kernel.h_norm(d, w, 1.0, phi) ** 2))
    return _le(worst, 1e-10)


@check("kernel.h_norm_routes")
def _(s):
    d, w = s.interval, SubdomainWindow(1.0, 2.0)
    phi = random_band_limited(d, 8, s.seed + 5)
    a = kernel.h_norm(d, w, 0.5, phi)
    b = kernel.h_norm_quadrature(d, w, 0.5, phi, nt=1024)
    return _le(abs(a - b), 1e-7)


@check("kernel.l_symmetric")
def _(s):
    d, w = s.interval, SubdomainWindow(1.0, 2.0)
    p, q = random_band_limited(d, 16, s.seed + 6), random_band_limited(d, 16, s.seed + 7)
    a = inner_product(kernel.l_operator_apply(d, w, 1.0, p), q)
    b = inner_product(p, kernel.l_operator_apply(d, w, 1.0, q))
    return _le(abs(a - b), 1e-12)


@check("kernel.k_eigen_vs_quadrature")
def _(s):
    d = build_interval_domain(math.pi, 16, 512)
    w = SubdomainWindow(1.0, 2.0)
    a = kernel.k_kernel_eval(d, w, 0.5, 0.7, 1.9)
    b = kernel.k_kernel_quadrature(d, w, 0.5, 0.7, 1.9, nt=1024)
    return _le(abs(a - b), 1e-6)


@check("kernel.k_full_window_time_doubling")
def _(s):
    d = build_interval_domain(math.pi, 16, 128)
    full = SubdomainWindow(0, math.pi)
    a = kernel.k_kernel_eval(d, full, 0.5, 0.7, 1.9)
    t = kernel.time_nodes(0.5, 4096)
    vals = [kernel.kernel_eval(d, 2 * ti, 0.7, 1.9) if ti > 0 else
            float(d.modes_at([0.7])[:, 0] @ d.modes_at([1.9])[:, 0]) for ti in t]
    b = float(kernel.time_integral(np.array(vals), 0.5))
    return _le(abs(a - b), 1e-8)


# fullctl


@check("fullctl.integer_series_closed_form")
def _(s):
    q = np.array([0.3, 0.5, 0.8])
    S, _ = fullctl.series_factor(q)
    return _le(np.max(np.abs(S - q / (1 - q))), 1e-12)


@check("fullctl.dyadic_series_value")
def _(s):
    S, _ = fullctl.series_factor(np.array([0.5]), "dyadic")
    return _le(abs(S[0] - oracle.scalar_series(0.5, "dyadic")), 1e-15)


@check("fullctl.b_per_mode")
def _(s):
    d = s.interval
    b = fullctl.compute_b(d, synthesize(d, [1, 1]), 0.1)
    return _le(np.max(np.abs(b.coeffs()[:2] - np.exp([0.1, 0.4]))), 1e-12)


@check("fullctl.free_flow_zero_control")
def _(s):
    d = s.interval
    u = random_band_limited(d, 6, s.seed)
    z = kernel.semigroup_apply(d, 0.2, u)
    worst = max(np.max(np.abs(fullctl.compute_f(d, z, u, 0.2, v).coeffs())) for v in fullctl.VARIANTS)
    return _le(worst, 1e-12)


@check("fullctl.single_mode_null_control")
def _(s):
    d = s.interval
    f = fullctl.compute_f(d, d.zeros(), d.mode(1), 0.5)
    q = math.exp(-0.5)
    return _le(abs(f.coeffs()[0] - q / (1 - q)), 1e-12)


@check("fullctl.per_mode_exactness")
def _(s):
    r = s.full_integers
    lam = s.interval.eigenvalues
    q = np.exp(lam * r.tau)
    exact = lam * (s.full_problem[2].coeffs() - q * r.u_switch.coeffs()) / (1 - q)
    keep = q < 1 - 1e-6
    return _le(np.max(np.abs(r.f.coeffs()[keep] - exact[keep])), 1e-10)


@check("fullctl.terminal_residual")
def _(s):
    return _le(s.full_integers.spectral_residual, 1e-8)


@check("fullctl.crank_nicolson_residual")
def _(s):
    return _le(s.full_integers.cn_residual, 1e-3)


@check("fullctl.dyadic_inconsistent")
def _(s):
    r = s.full_run("dyadic").spectral_residual
    return bool(r > 0.05), f"dyadic residual={r:.3e}"


@check("fullctl.circle_mean_identity")
def _(s):
    d = s.circle
    u = random_band_limited(d, 9, s.seed) + d.field(np.full(d.n_grid, 0.4))
    z = random_band_limited(d, 5, s.seed + 1)
    f = fullctl.compute_f(d, z, u, 0.1)
    return _le(abs(f.mean() * 0.1 - (u.mean() - z.mean())), 1e-12)


@check("fullctl.series_solution_at_switch")
def _(s):
    r = s.full_integers
    d, _, z = s.full_problem
    u = fullctl.control_solution_series(d, z, r.f, r.switch_time, 1.0)
    return _le((u - r.u_switch).norm(), 1e-8)


@check("fullctl.delta_window")
def _(s):
    a = fullctl.delta_window(10.0, 1.0).delta
    b = fullctl.delta_window(0.1, 1.0).delta
    return bool(a == 0.05 and abs(b - 1 / (1 + 2 * math.e)) <= 1e-15), f"{a}, {b:.10f}"


@check("fullctl.growth_single_mode")
def _(s):
    _, A = fullctl.fit_growth_constant(s.interval, s.interval.mode(1))
    return _le(abs(A - 1.0), 1e-12)


@check("fullctl.growth_scale_invariant")
def _(s):
    d = s.interval
    z = kernel.semigroup_apply(d, 1.0, random_band_limited(d, 32, s.seed))
    a = fullctl.fit_growth_constant(d, z)[1]
    b = fullctl.fit_growth_constant(d, z * -3.5)[1]
    return _le(abs(a - b) / a, 1e-12)


# subctl


@check("subctl.alpha_symmetric_positive")
def _(s):
    sy, _ = s.sub_system
    return bool(np.array_equal(sy.alpha, sy.alpha.T) and np.all(np.diag(sy.factor) > 0)), \
        f"cond={sy.condition:.3e}"


@check("subctl.solve_residual")
def _(s):
    sy, _ = s.sub_system
    return _le(sy.residual, 1e-10 * np.max(np.abs(sy.beta)))


@check("subctl.energy_identity")
def _(s):
    sy, _ = s.sub_system
    q = float(sy.s @ sy.alpha @ sy.s)
    return _le(abs(q - sy.energy) / abs(sy.energy), 1e-10)


@check("subctl.galerkin_rk4")
def _(s):
    sy, u0 = s.sub_system
    rep = subctl.galerkin_verify(sy, u0, 2000)
    return bool(rep.closed_form < 1e-12 and rep.integrated < 1e-6), \
        f"closed={rep.closed_form:.2e} rk4={rep.integrated:.2e}"


@check("subctl.quadratic_form_quadrature")
def _(s):
    sy, _ = s.sub_system
    b = random_coefficients(8, s.seed + 9)
    a = float(b @ sy.alpha @ b)
    q = subctl.quadratic_form_quadrature(sy.domain, sy.window, 1.0, b, nt=4096)
    return _le(abs(a - q), 1e-8)


@check("subctl.energy_quadrature")
def _(s):
    sy, _ = s.sub_system
    q = subctl.control_energy_quadrature(sy)
    return _le(abs(q - sy.energy) / sy.energy, 1e-6)


@check("subctl.backward_equation")
def _(s):
    sy, _ = s.sub_system
    x, t, dt = np.array([0.7, 1.1, 2.4]), 0.5, 1e-4
    dg = (subctl.control_evaluate(sy, x, t + dt) - subctl.control_evaluate(sy, x, t - dt)) / (2 * dt)
    pg = (sy.s * sy.domain.eigenvalues[:8] * np.exp(sy.domain.eigenvalues[:8] * 0.5)) \
        @ sy.domain.modes_at(x)[:8]
    return _le(np.max(np.abs(dg + pg)) / np.max(np.abs(pg)), 1e-6)


@check("subctl.single_mode_full_window")
def _(s):
    d = s.interval
    sy = subctl.solve_control(d, SubdomainWindow(0, math.pi), 1.0, 1, d.mode(1))
    expect = math.exp(-1) / ((1 - math.exp(-2)) / 2)
    return _le(abs(sy.s[0] - expect), 1e-12)


# backinv


@check("backinv.window")
def _(s):
    w = backinv.inversion_window(1.0)
    return _le(abs(w.lower - (1 - math.exp(-1))), 1e-16)


@check("backinv.spectral_roundtrip")
def _(s):
    d = s.interval
    v = random_band_limited(d, 5, s.seed)
    uT = kernel.semigroup_apply(d, 0.3, v)
    return _le((backinv.invert_spectral(d, uT, 0.7, 1.0, 40) - v).norm() / v.norm(), 1e-10)


@check("backinv.segmented_three")
def _(s):
    d = s.interval
    v = synthesize(d, [1, 1])
    uT = kernel.semigroup_apply(d, 0.7, v)
    r = backinv.invert_segmented(d, uT, 0.3, 1.0, 3)
    return _le((r.field - v).norm(), 1e-8)


@check("backinv.grid_diverges_outside")
def _(s):
    d = build_interval_domain(math.pi, 64, 256)
    uT = kernel.semigroup_apply(d, 1.0, synthesize(d, [1, 1]))
    g = backinv.invert_grid(d, uT, 0.3, 1.0, 25)
    return bool(g.diverges()), f"min={g.min_error:.2e} final={g.trace[-1]:.2e}"


@check("backinv.linearity")
def _(s):
    d = s.interval
    u, v = random_band_limited(d, 10, s.seed), random_band_limited(d, 10, s.seed + 1)
    a = backinv.invert_spectral(d, u * 2.0 + v, 0.8, 1.0)
    b = backinv.invert_spectral(d, u, 0.8, 1.0) * 2.0 + backinv.invert_spectral(d, v, 0.8, 1.0)
    return _le(np.max(np.abs(a.values - b.values)) / np.max(np.abs(a.values)), 1e-13)


# oracle


@check("oracle.mode_ode_null")
def _(s):
    return _le(abs(oracle.mode_ode_exact(-1.0, 1.0, 1.5414940, 0.5)), 1e-6)


@check("oracle.crank_nicolson_decay")
def _(s):
    d = s.interval
    _, st = oracle.crank_nicolson(oracle.GridSpec.of(d), d.mode(1).values, None, 1.0, 2048)
    return _le(np.max(np.abs(st[-1] - math.exp(-1) * d.mode(1).values)), 2e-4)


@check("oracle.rk4_two_by_two")
def _(s):
    from scipy.linalg import expm

    A = np.array([[-1.0, 0.5], [0.2, -2.0]])
    u = oracle.rk4_linear_system(lambda t, u: A @ u, [1.0, -1.0], 1.0, 400)
    return _le(np.max(np.abs(u - expm(A) @ [1.0, -1.0])), 1e-10)


def run_checks(setup: Setup | None = None):
    """Run every registered check; returns a list of (name, ok, detail)."""
    setup = setup or Setup()
    out = []
    for name, fn in REGISTRY:
        try:
            ok, detail = fn(setup)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
            detail += " | " + traceback.format_exc(limit=1).strip().splitlines()[-1]
        out.append((name, bool(ok), detail))
    return out
