"""
Verification engines that share no code path with the spectral formulas.

- ``mode_ode_exact``: Duhamel closed form for u' = lambda u - f
- ``crank_nicolson``: finite-difference time stepper on the raw grid
- ``rk4_linear_system``: classical fixed-step Runge-Kutta
- ``scalar_series``: plain term-by-term summation of the two control series

The Crank-Nicolson path builds its own sparse stencil from the grid
geometry; it never touches eigenvalues or eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, DomainError


def mode_ode_exact(lam, u_start, f_const, tau):
    """End value of u' = lam u - f_const after time tau.

    u_end = e^{lam tau} u_start - f_const (e^{lam tau} - 1) / lam, with
    the lam -> 0 limit u_start - f_const tau.
    """
    lam = np.asarray(lam, dtype=np.float64)
    z = lam * tau
    nonzero = z != 0.0
    gain = np.where(nonzero, np.expm1(z) / np.where(nonzero, lam, 1.0), tau)
    out = np.exp(z) * u_start - f_const * gain
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GridSpec:
    """Geometry the finite-difference oracle needs: nodes, spacing, ends."""

    x: np.ndarray
    spacing: float
    periodic: bool
    face_coefficient: Optional[np.ndarray] = None

    @classmethod
    def of(cls, domain) -> "GridSpec":
        return cls(np.asarray(domain.x), float(domain.spacing), bool(domain.periodic),
                   None if domain.face_coefficient is None else np.asarray(domain.face_coefficient))


def _stencil(grid: GridSpec) -> sp.csc_matrix:
    n = grid.x.size
    h2 = grid.spacing**2
    if grid.periodic:
        main = np.full(n, -2.0 / h2)
        off = np.full(n - 1, 1.0 / h2)
        A = sp.diags([off, main, off], [-1, 0, 1], format="lil")
        A[0, n - 1] = 1.0 / h2
        A[n - 1, 0] = 1.0 / h2
        return A.tocsc()
    a = np.ones(n + 1) if grid.face_coefficient is None else grid.face_coefficient
    main = -(a[:-1] + a[1:]) / h2
    off = a[1:-1] / h2
    return sp.diags([off, main, off], [-1, 0, 1], format="csc")


def _time_grid(T: float, nt: int, breakpoints: Sequence[float]) -> np.ndarray:
    cuts = sorted({0.0, float(T), *(float(b) for b in breakpoints if 0.0 < b < T)})
    spans = np.diff(cuts)
    counts = np.maximum(1, np.round(nt * spans / T).astype(int))
    counts[-1] += nt - counts.sum()
    if counts[-1] < 1:
        raise DomainError("too few time steps for the requested breakpoints")
    pieces = [np.linspace(a, b, k + 1)[:-1] for a, b, k in zip(cuts[:-1], cuts[1:], counts)]
    return np.concatenate(pieces + [np.array([T])])


def crank_nicolson(grid: GridSpec, u0, source: Optional[Callable[[float], np.ndarray]],
                   T: float, nt: int, breakpoints: Sequence[float] = ()):
    """Integrate P u - u_t = source(t) from u(0) = u0 up to time T.

    Second order in space and time. The source is sampled at half steps;
    each breakpoint (e.g. a control switching time) is made a time node so
    a piecewise-constant source keeps second order. Returns the node times
    and the states, shape (len(times), M).
    """
    if nt < 64:
        raise DomainError(f"need at least 64 time steps, got {nt}")
    u = np.array(u0, dtype=np.float64)
    A = _stencil(grid)
    eye = sp.identity(u.size, format="csc")
    times = _time_grid(T, nt, breakpoints)
    states = np.empty((times.size, u.size))
    states[0] = u
    solvers = {}
    for n in range(times.size - 1):
        dt = times[n + 1] - times[n]
        key = round(dt, 15)
        if key not in solvers:
            solvers[key] = (splu((eye - 0.5 * dt * A).tocsc()), (eye + 0.5 * dt * A).tocsr())
        lu, rhs_op = solvers[key]
        rhs = rhs_op @ u
        if source is not None:
            rhs -= dt * np.asarray(source(times[n] + 0.5 * dt))
        u = lu.solve(rhs)
        if not np.all(np.isfinite(u)):
            raise ArithmeticError("Crank-Nicolson produced non-finite values (grid corrupt?)")
        states[n + 1] = u
    return times, states


def rk4_linear_system(rhs: Callable[[float, np.ndarray], np.ndarray], u0, T: float,
                      nt: int) -> np.ndarray:
    """Classical fixed-step RK4 for u' = rhs(t, u); returns u(T)."""
    if nt < 16:
        raise DomainError(f"need at least 16 steps, got {nt}")
    u = np.array(u0, dtype=np.float64)
    dt = T / nt
    for n in range(nt):
        t = n * dt
        k1 = rhs(t, u)
        k2 = rhs(t + 0.5 * dt, u + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, u + 0.5 * dt * k2)
        k4 = rhs(t + dt, u + dt * k3)
        u = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def scalar_series(q: float, variant: str = "integers") -> float:
    """sum_{k>=1} q^k or sum_{k>=1} q^(2^k), summed until a term drops below
    1e-17 relative to the running total."""
    if not 0.0 <= q < 1.0:
        raise DomainError(f"series needs 0 <= q < 1, got {q}")
    total = 0.0
    k = 1
    while True:
        term = q**k if variant == "integers" else q ** (2**k)
        if term == 0.0 or term < 1e-17 * total:
            return total
        total += term
        k += 1
        if k > 10**7:
            raise ConvergenceError("scalar series did not converge")

