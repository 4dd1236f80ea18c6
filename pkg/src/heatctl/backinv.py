"""
Backward heat flow by Taylor series of the semigroup.

For a state u_T at time T, the earlier state is

    u(t) = sum_k (t - T)^k / k! P^k u_T.

Per mode this is the exponential series of (t - T) lambda_j, which is
entire, so the spectral backend converges for any t. The grid backend
applies the three-point stencil instead of the eigenvalues; there the
growth of the partial sums is limited by roundoff in the high grid
frequencies, and divergence appears once (T - t) times the stencil scale
is large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .domain import Field, SpectralDomain, grid_laplacian, synthesize
from .errors import DomainError, WindowError
from .fullctl import fit_growth_constant

WINDOW_FRACTION = 1.0 - math.exp(-1.0)


class Window(NamedTuple):
    lower: float
    upper: float

    def contains(self, t: float) -> bool:
        return self.lower < t <= self.upper


def inversion_window(T: float) -> Window:
    """((1 - 1/e) T, T]."""
    if not T > 0:
        raise DomainError("T must be positive")
    return Window(WINDOW_FRACTION * T, float(T))


def _check_times(t: float, T: float):
    if not T > 0 or not 0 < t <= T:
        raise DomainError(f"need 0 < t <= T, got t={t}, T={T}")


def invert_spectral(domain: SpectralDomain, u_T: Field, t: float, T: float, K: int = 40) -> Field:
    """Partial sum over k <= K per mode.

    ``info['mode_error']`` is |partial - exp((t - T) lambda_j)| per mode,
    the truncation error of each scalar series.
    """
    if K < 0:
        raise DomainError("K must be nonnegative")
    _check_times(t, T)
    z = (t - T) * domain.eigenvalues
    term = np.ones_like(z)
    factor = term.copy()
    for k in range(1, K + 1):
        term = term * z / k
        factor = factor + term
    out = synthesize(domain, factor * u_T.coeffs())
    with np.errstate(over="ignore"):
        err = np.abs(factor - np.exp(z))
    return Field(domain, out.values, out.coefficients,
                 {"K": int(K), "mode_error": err, "max_mode_error": float(err.max())})


def _exact_backward(domain: SpectralDomain, c: np.ndarray, d: float) -> np.ndarray:
    """exp(d lambda_j) c_j, with modes whose coefficient is exactly zero left at zero."""
    with np.errstate(over="ignore", invalid="ignore"):
        gain = np.exp(d * domain.eigenvalues)
        return np.where(c == 0.0, 0.0, gain * c)


def _relative_l2(domain: SpectralDomain, u: np.ndarray, ref: np.ndarray) -> float:
    w = domain.weights
    num = math.sqrt(float(np.sum(w * (u - ref) ** 2)))
    den = math.sqrt(float(np.sum(w * ref**2)))
    return num / den if den > 0 else num


@dataclass(frozen=True, eq=False)
class GridInversion:
    field: Field
    best_K: int
    trace: np.ndarray
    reference: Field
    grid: int

    @property
    def min_error(self) -> float:
        return float(self.trace[self.best_K])

    def nonincreasing_to_min(self) -> bool:
        head = self.trace[: self.best_K + 1]
        return bool(np.all(np.diff(head) <= 0))

    def diverges(self, factor: float = 10.0) -> bool:
        last = self.trace[-1]
        return bool(not np.isfinite(last) or last > factor * self.min_error)


def invert_grid(domain: SpectralDomain, u_T: Field, t: float, T: float, K: int = 25,
                reference: Optional[Field] = None) -> GridInversion:
    """Partial sums with the stencil Laplacian; error trace for k = 0..K.

    The reference defaults to exact backward propagation of the stored
    coefficients, exp((t - T) lambda_j) c_j. Non-finite partial sums are
    recorded as inf in the trace.
    """
    if K < 0:
        raise DomainError("K must be nonnegative")
    _check_times(t, T)
    if reference is None:
        reference = synthesize(domain, _exact_backward(domain, u_T.coeffs(), t - T))
    ref = np.asarray(reference.values)
    d = t - T
    term = np.array(u_T.values, dtype=np.float64)
    total = term.copy()
    trace = np.empty(K + 1)
    sums = [total.copy()]
    trace[0] = _relative_l2(domain, total, ref)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, K + 1):
            term = grid_laplacian(domain, term) * (d / k)
            total = total + term
            e = _relative_l2(domain, total, ref)
            trace[k] = e if np.isfinite(e) else np.inf
            sums.append(total.copy())
    best = int(np.argmin(trace))
    field = Field(domain, sums[best], info={"K": best, "error": float(trace[best])})
    return GridInversion(field=field, best_K=best, trace=trace, reference=reference,
                         grid=domain.n_grid)


@dataclass(frozen=True, eq=False)
class SegmentedInversion:
    field: Field
    times: np.ndarray
    ratio: float
    growth: list
    violations: list


def segment_times(t_target: float, T: float, segments: int) -> np.ndarray:
    """Geometric intermediate times T = t_0 > ... > t_S = t_target.

    Each step keeps t_{i+1} / t_i equal to (t_target / T)^(1/S), which
    must exceed 1 - 1/e.
    """
    _check_times(t_target, T)
    if segments < 1:
        raise DomainError("need at least one segment")
    ratio = (t_target / T) ** (1.0 / segments)
    if t_target < T and not ratio > WINDOW_FRACTION:
        raise WindowError(
            f"{segments} segments give ratio {ratio:.4f}, not above {WINDOW_FRACTION:.7f}")
    times = T * ratio ** np.arange(segments + 1)
    times[-1] = t_target
    return times


def invert_segmented(domain: SpectralDomain, u_T: Field, t_target: float, T: float,
                     segments: int, K: int = 40) -> SegmentedInversion:
    """Chain spectral inversions through intermediate times.

    At each stage the current state is checked against the reachability
    bound A <= e / t_i for a state at time t_i; stages that exceed it are
    reported in ``violations`` (checked, not enforced).
    """
    times = segment_times(t_target, T, segments)
    ratio = float(times[1] / times[0]) if segments else 1.0
    u = u_T
    growth, violations = [], []
    for i in range(segments):
        _, A = fit_growth_constant(domain, u)
        growth.append(float(A))
        if A > math.e / times[i]:
            violations.append(i)
        u = invert_spectral(domain, u, times[i + 1], times[i], K)
    return SegmentedInversion(field=u, times=times, ratio=ratio, growth=growth,
                              violations=violations)
