"""
Spectral representations of the 1-D Laplacian and Sturm-Liouville operators.

Three model domains are supported:

- ``interval``: (0, L) with Dirichlet ends, closed-form sine basis
- ``circle``: periodic [0, L), constant + cos/sin basis
- ``sturm_liouville``: d/dx(a(x) d/dx) on (0, L) with Dirichlet ends,
  eigenpairs of the 3-point finite-difference discretization

Eigenvalues are stored in descending order (closest to zero first), so
``eigenvalues[0]`` is the slowest-decaying mode. Eigenfunctions are stored
as samples on the quadrature grid and are orthonormal in the discrete
weighted inner product ``sum_m w_m f(x_m) g(x_m)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, EigensolverError

log = logging.getLogger(__name__)

INTERVAL = "interval"
CIRCLE = "circle"
STURM_LIOUVILLE = "sturm_liouville"
KINDS = (INTERVAL, CIRCLE, STURM_LIOUVILLE)

QL_MAX_ITER = 50


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralDomain:
    """Eigenpairs, grid and quadrature weights for one model domain.

    ``modes[j]`` holds the samples of the (j+1)-th eigenfunction on ``x``.
    For the circle, ``wavenumbers[j]`` and ``parity[j]`` (0 = cosine or
    constant, 1 = sine) identify each basis function; for the interval they
    are the sine indices. ``face_coefficient`` holds a(x) at the cell faces
    x_{m +- 1/2} for the Sturm-Liouville kind (length M + 1).
    """

    kind: str
    length: float
    eigenvalues: np.ndarray
    modes: np.ndarray
    x: np.ndarray
    weights: np.ndarray
    wavenumbers: Optional[np.ndarray] = None
    parity: Optional[np.ndarray] = None
    face_coefficient: Optional[np.ndarray] = None

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n_grid(self) -> int:
        return self.x.shape[0]

    @property
    def spacing(self) -> float:
        if self.kind == CIRCLE:
            return self.length / self.n_grid
        return self.length / (self.n_grid + 1)

    @property
    def periodic(self) -> bool:
        return self.kind == CIRCLE

    @property
    def measure(self) -> float:
        return float(self.length)

    def modes_at(self, points) -> np.ndarray:
        """Evaluate every eigenfunction at arbitrary points, shape (N, P).

        Closed forms are used for the interval and circle. Sturm-Liouville
        eigenvectors are interpolated linearly, with zero values at both ends.
        """
        p = np.atleast_1d(np.asarray(points, dtype=np.float64))
        L = self.length
        if self.kind == INTERVAL:
            k = self.wavenumbers[:, None]
            return math.sqrt(2.0 / L) * np.sin(k * np.pi * p[None, :] / L)
        if self.kind == CIRCLE:
            k = self.wavenumbers[:, None]
            arg = 2.0 * np.pi * k * p[None, :] / L
            out = np.where(self.parity[:, None] == 1, np.sin(arg), np.cos(arg))
            out = out * math.sqrt(2.0 / L)
            out[self.wavenumbers == 0] = 1.0 / math.sqrt(L)
            return out
        xs = np.concatenate(([0.0], self.x, [L]))
        out = np.empty((self.n_modes, p.size))
        for j in range(self.n_modes):
            ys = np.concatenate(([0.0], self.modes[j], [0.0]))
            out[j] = np.interp(p, xs, ys)
        return out

    def mode(self, j: int) -> "Field":
        """The j-th eigenfunction (1-based, matching the usual eta_j)."""
        if not 1 <= j <= self.n_modes:
            raise DomainError(f"mode index {j} outside 1..{self.n_modes}")
        c = np.zeros(self.n_modes)
        c[j - 1] = 1.0
        return Field(self, self.modes[j - 1], c)

    def field(self, values) -> "Field":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_grid,):
            raise DomainError(
                f"field has {values.shape} samples, grid has {self.n_grid}")
        return Field(self, values)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return self.field(func(self.x))

    def from_coefficients(self, coefficients) -> "Field":
        return synthesize(self, coefficients)

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n_grid), np.zeros(self.n_modes))

    def descriptor(self) -> dict:
        """JSON-ready description of the domain."""
        return {
            "kind": self.kind,
            "L": float(self.length),
            "N": int(self.n_modes),
            "M": int(self.n_grid),
            "eigenvalues": [float(v) for v in self.eigenvalues],
        }


@dataclass(frozen=True, eq=False)
class Field:
    """A real function on a domain, held as grid samples.

    ``coefficients`` is the optional eigen-coefficient vector (length N).
    ``info`` carries diagnostics from the operation that produced the field
    (series terms used, truncation tails, ...).
    """

    domain: SpectralDomain
    values: np.ndarray
    coefficients: Optional[np.ndarray] = None
    info: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.coefficients is not None:
            c = _frozen(self.coefficients)
            if c.shape != (self.domain.n_modes,):
                raise DomainError(
                    f"{c.shape[0]} coefficients for {self.domain.n_modes} modes")
            object.__setattr__(self, "coefficients", c)
        if self.values.shape != (self.domain.n_grid,):
            raise DomainError("grid value length mismatch")

    def coeffs(self) -> np.ndarray:
        """Eigen-coefficients, projecting from the grid when not stored."""
        if self.coefficients is not None:
            return self.coefficients
        return project(self)

    def norm(self) -> float:
        """Discrete L2 norm."""
        return math.sqrt(max(inner_product(self, self), 0.0))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def mean(self) -> float:
        return float(np.dot(self.domain.weights, self.values) / self.domain.measure)

    def _combine(self, other, op):
        if isinstance(other, Field):
            if other.domain is not self.domain:
                raise DomainError("fields live on different domains")
            c = None
            if self.coefficients is not None and other.coefficients is not None:
                c = op(self.coefficients, other.coefficients)
            return Field(self.domain, op(self.values, other.values), c)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        c = None if self.coefficients is None else self.coefficients * scalar
        return Field(self.domain, self.values * scalar, c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


@dataclass(frozen=True)
class SubdomainWindow:
    """The control region omega, an interval [start, end] or a node mask."""

    start: float = 0.0
    end: float = 0.0
    mask: Optional[tuple] = None

    def __post_init__(self):
        if self.mask is None and not self.end > self.start:
            raise DomainError(f"empty window ({self.start}, {self.end})")

    @classmethod
    def from_mask(cls, mask: Sequence[bool]) -> "SubdomainWindow":
        mask = tuple(bool(v) for v in mask)
        if not any(mask):
            raise DomainError("empty window mask")
        return cls(mask=mask)

    def weights(self, domain: SpectralDomain) -> np.ndarray:
        """Quadrature weights restricted to the window.

        Each node owns the cell [x_m - h/2, x_m + h/2]; its weight is the
        length of the cell's intersection with the window.
        """
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != (domain.n_grid,):
                raise DomainError("window mask length differs from grid")
            return np.where(mask, domain.weights, 0.0)
        L = domain.length
        if self.start < 0.0 or self.end > L:
            raise DomainError(f"window ({self.start}, {self.end}) not inside (0, {L})")
        h = domain.spacing
        lo = domain.x - 0.5 * h
        hi = domain.x + 0.5 * h
        shifts = (-L, 0.0, L) if domain.periodic else (0.0,)
        w = np.zeros(domain.n_grid)
        for s in shifts:
            w += np.clip(np.minimum(hi, self.end + s) - np.maximum(lo, self.start + s), 0.0, None)
        # uniform grids: clipped length equals h * fraction, so full cells get h
        w = np.minimum(w, domain.weights)
        if not np.any(w > 0):
            raise DomainError("window contains no quadrature cell")
        return w

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        if self.mask is not None:
            raise DomainError("point membership undefined for mask windows")
        return (p >= self.start) & (p <= self.end)

    def measure(self, domain: Optional[SpectralDomain] = None) -> float:
        if self.mask is not None or domain is not None:
            if domain is None:
                raise DomainError("mask windows need a domain to measure")
            return float(np.sum(self.weights(domain)))
        return float(self.end - self.start)


# ----------------------------------------------------------------------------
# construction


def _check_sizes(L: float, N: int, M: int):
    if not L > 0:
        raise DomainError(f"domain length must be positive, got {L}")
    if N < 1:
        raise DomainError(f"need at least one mode, got N={N}")
    if M < 4 * N:
        raise DomainError(f"grid M={M} too small for N={N} modes (need M >= 4N, aliasing)")


def build_interval_domain(L: float, N: int, M: int) -> SpectralDomain:
    """Dirichlet Laplacian on (0, L).

    lambda_j = -(j pi / L)^2 and eta_j = sqrt(2/L) sin(j pi x / L), sampled on
    the M interior nodes x_m = m L / (M + 1). Trapezoid weights reduce to h
    because the boundary samples vanish.
    """
    _check_sizes(L, N, M)
    h = L / (M + 1)
    x = h * np.arange(1, M + 1)
    j = np.arange(1, N + 1)
    lam = -((j * np.pi / L) ** 2)
    modes = math.sqrt(2.0 / L) * np.sin(np.outer(j, x) * np.pi / L)
    return SpectralDomain(
        kind=INTERVAL, length=float(L), eigenvalues=_frozen(lam), modes=_frozen(modes),
        x=_frozen(x), weights=_frozen(np.full(M, h)), wavenumbers=_frozen(j),
    )


def build_circle_domain(L: float, N: int, M: int) -> SpectralDomain:
    """Laplacian on the circle of circumference L.

    Basis order: constant, then cos/sin pairs for k = 1, 2, ...; the list is
    cut after N functions. Periodic uniform grid with equal weights L/M.
    """
    _check_sizes(L, N, M)
    x = L * np.arange(M) / M
    ks, par = [0], [0]
    k = 1
    while len(ks) < N:
        ks += [k, k]
        par += [0, 1]
        k += 1
    ks = np.array(ks[:N], dtype=np.float64)
    par = np.array(par[:N])
    lam = 0.0 - (2.0 * np.pi * ks / L) ** 2
    arg = 2.0 * np.pi * np.outer(ks, x) / L
    modes = math.sqrt(2.0 / L) * np.where(par[:, None] == 1, np.sin(arg), np.cos(arg))
    modes[0] = 1.0 / math.sqrt(L)
    return SpectralDomain(
        kind=CIRCLE, length=float(L), eigenvalues=_frozen(lam), modes=_frozen(modes),
        x=_frozen(x), weights=_frozen(np.full(M, L / M)), wavenumbers=_frozen(ks),
        parity=_frozen(par),
    )


def tridiagonal_eigh(diag, off, max_iter: int = QL_MAX_ITER):
    """Eigen-decomposition of a real symmetric tridiagonal matrix.

    Implicit QL with Wilkinson-type shifts (the tqli scheme). ``off[i]``
    couples rows i and i+1. Returns ``(values, vectors)`` where
    ``vectors[:, k]`` is the unit eigenvector for ``values[k]``; no ordering
    is imposed.

    Raises EigensolverError if any eigenvalue needs more than ``max_iter``
    sweeps.
    """
    d = np.array(diag, dtype=np.float64)
    n = d.size
    e = np.zeros(n)
    e[: n - 1] = np.asarray(off, dtype=np.float64)
    # rows of zt are the columns of the accumulated rotation matrix
    zt = np.eye(n)
    eps = np.finfo(np.float64).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                raise EigensolverError(f"no convergence for eigenvalue {l} in {max_iter} iterations")
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = zt[i].copy()
                zt[i] = c * zi - s * zt[i + 1]
                zt[i + 1] = s * zi + c * zt[i + 1]
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, zt.T


def _face_values(a, L: float, M: int) -> np.ndarray:
    h = L / (M + 1)
    if callable(a):
        faces = h * (np.arange(M + 1) + 0.5)
        return np.asarray(a(faces), dtype=np.float64) * np.ones(M + 1)
    a = np.asarray(a, dtype=np.float64)
    if a.shape == (M + 2,):
        return 0.5 * (a[:-1] + a[1:])
    if a.shape == (M + 1,):
        return a.copy()
    raise DomainError(
        f"coefficient needs M+2={M + 2} node samples (or M+1 face samples), got {a.shape}")


def build_sturm_liouville_domain(a: Union[Callable, Sequence[float]], L: float, M: int,
                                 N: Optional[int] = None) -> SpectralDomain:
    """Dirichlet operator d/dx(a d/dx) on (0, L), finite-difference eigenpairs.

    ``a`` is either a callable or samples on the M + 2 uniform nodes
    0, h, ..., L (h = L/(M+1)); face values are node averages. The
    symmetric tridiagonal matrix

        (A u)_m = [a_{m+1/2}(u_{m+1} - u_m) - a_{m-1/2}(u_m - u_{m-1})] / h^2

    is diagonalized by ``tridiagonal_eigh``; eigenvectors are scaled so that
    sum_m h v_m^2 = 1. ``N`` defaults to M // 4.
    """
    if N is None:
        N = max(1, M // 4)
    _check_sizes(L, N, M)
    af = _face_values(a, L, M)
    if not np.all(np.isfinite(af)) or np.min(af) <= 0.0:
        raise DomainError(f"coefficient not uniformly elliptic (min a = {np.min(af):.3g})")
    h = L / (M + 1)
    diag = -(af[:-1] + af[1:]) / h**2
    off = af[1:-1] / h**2
    vals, vecs = tridiagonal_eigh(diag, off)
    order = np.argsort(-vals, kind="stable")[:N]
    lam = vals[order]
    modes = vecs[:, order].T / math.sqrt(h)
    # sign convention: first significant sample positive
    for j in range(N):
        row = modes[j]
        k = int(np.argmax(np.abs(row) > 1e-8 * np.max(np.abs(row))))
        if row[k] < 0:
            modes[j] = -row
    if np.any(lam >= 0):
        raise DomainError("discrete operator has a nonnegative eigenvalue")
    return SpectralDomain(
        kind=STURM_LIOUVILLE, length=float(L), eigenvalues=_frozen(lam), modes=_frozen(modes),
        x=_frozen(h * np.arange(1, M + 1)), weights=_frozen(np.full(M, h)),
        face_coefficient=_frozen(af),
    )


# ----------------------------------------------------------------------------
# function representation and quadrature


def project(f: Field) -> np.ndarray:
    """Eigen-coefficients c_j = sum_m w_m f(x_m) eta_j(x_m)."""
    d = f.domain
    values = np.asarray(f.values)
    if values.shape != (d.n_grid,):
        raise DomainError("grid value length mismatch")
    return d.modes @ (d.weights * values)


def synthesize(domain: SpectralDomain, coefficients) -> Field:
    """Finite eigen-sum on the grid. Short coefficient vectors are zero-padded."""
    c = np.asarray(coefficients, dtype=np.float64)
    if c.ndim != 1 or c.size > domain.n_modes:
        raise DomainError(f"{c.size} coefficients for a {domain.n_modes}-mode domain")
    if c.size < domain.n_modes:
        c = np.concatenate((c, np.zeros(domain.n_modes - c.size)))
    return Field(domain, c @ domain.modes, c)


def inner_product(f: Field, g: Field) -> float:
    if f.domain is not g.domain:
        raise DomainError("fields live on different domains")
    return float(np.sum(f.domain.weights * f.values * g.values))


def inner_product_on(f: Field, g: Field, window: SubdomainWindow) -> float:
    if f.domain is not g.domain:
        raise DomainError("fields live on different domains")
    w = window.weights(f.domain)
    return float(np.sum(w * f.values * g.values))


def window_gram(domain: SpectralDomain, window: SubdomainWindow, m: Optional[int] = None) -> np.ndarray:
    """Matrix of <eta_i, eta_j>_{L2(window)} for i, j < m."""
    m = domain.n_modes if m is None else m
    E = domain.modes[:m]
    w = window.weights(domain)
    return (E * w) @ E.T


def gram_matrix(domain: SpectralDomain) -> np.ndarray:
    E = domain.modes
    return (E * domain.weights) @ E.T


# ----------------------------------------------------------------------------
# Laplacian powers


def grid_laplacian(domain: SpectralDomain, values: np.ndarray) -> np.ndarray:
    """One application of the 3-point stencil (a-weighted for Sturm-Liouville)."""
    u = np.asarray(values, dtype=np.float64)
    h = domain.spacing
    if domain.periodic:
        return (np.roll(u, 1) - 2.0 * u + np.roll(u, -1)) / h**2
    up = np.concatenate(([0.0], u, [0.0]))
    if domain.face_coefficient is None:
        return (up[:-2] - 2.0 * up[1:-1] + up[2:]) / h**2
    flux = domain.face_coefficient * np.diff(up)
    return np.diff(flux) / h**2


def stencil_amplification(domain: SpectralDomain, j: int) -> float:
    """Bound on the stencil's j-th power norm, (4 max(a) / h^2)^j."""
    amax = 1.0 if domain.face_coefficient is None else float(np.max(domain.face_coefficient))
    return (4.0 * amax / domain.spacing**2) ** j


def laplacian_power(f: Field, j: int, backend: str = "spectral") -> Field:
    """Apply the j-th power of the domain operator.

    The spectral backend scales coefficient k by lambda_k^j. The grid
    backend applies the stencil j times; when the stencil amplification
    times machine epsilon exceeds the field scale a warning is logged.
    """
    if j < 0 or int(j) != j:
        raise DomainError(f"power must be a nonnegative integer, got {j}")
    d = f.domain
    if backend == "spectral":
        c = f.coeffs()
        return synthesize(d, c * d.eigenvalues ** int(j))
    if backend == "grid":
        amp = stencil_amplification(d, j)
        if amp * np.finfo(float).eps > 1e-6:
            log.warning("grid Laplacian power %d: roundoff amplification %.2e", j, amp)
        u = np.array(f.values)
        for _ in range(int(j)):
            u = grid_laplacian(d, u)
        return Field(d, u, info={"amplification": amp})
    raise DomainError(f"unknown backend {backend!r}")
