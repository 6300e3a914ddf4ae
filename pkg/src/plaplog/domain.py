"""Parameters, the radial cell-centred grid on the ball, fields and quadrature.

The ball of radius ``R`` in ``R^N`` is cut into ``M`` spherical shells of
width ``h = R/M``. Unknowns live at the shell mid-radii, so no quadrature
point sits at the origin. Every integral is a sum over exact shell volumes:

* cell integrals use ``w_i = omega*((r_i+h/2)^N - (r_i-h/2)^N)/N``;
* the singular weight ``|x|^-s`` is folded into exact weighted shell volumes
  ``omega*((r_i+h/2)^(N-s) - (r_i-h/2)^(N-s))/(N-s)``;
* gradients live on faces, each face owning the exact volume of its dual
  shell. The inner face (``r = 0``) carries zero flux; the outer face uses the
  Dirichlet ghost value ``u(R) = 0`` over the half-cell ``h/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import ConfigurationError


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in ``R^N``."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def params_violations(p, q, N, s, R) -> list[str]:
    """List every violated admissibility clause; empty when admissible."""
    out = []
    if not p >= 2:
        out.append(f"p >= 2 violated (p = {p})")
    if not 0 <= s <= 2:
        out.append(f"0 <= s <= 2 violated (s = {s})")
    if int(N) != N or N < 1:
        out.append(f"N must be a positive integer (N = {N})")
    if not N > p:
        out.append(f"N > p violated (N = {N}, p = {p})")
    if not q > p:
        out.append(f"p < q violated (p = {p}, q = {q})")
    if N > p and not q < N * p / (N - p):
        out.append(f"q < Np/(N-p) = {N * p / (N - p):g} violated (q = {q})")
    if not R > 0:
        out.append(f"R > 0 violated (R = {R})")
    return out


@dataclass(frozen=True)
class Params:
    p: float
    q: float
    N: int
    s: float
    R: float = 1.0

    def __post_init__(self):
        bad = params_violations(self.p, self.q, self.N, self.s, self.R)
        if bad:
            raise ConfigurationError("inadmissible parameters: " + "; ".join(bad), bad)
        object.__setattr__(self, "N", int(self.N))

    @property
    def critical_exponent(self) -> float:
        """Sobolev exponent ``Np/(N-p)``."""
        return self.N * self.p / (self.N - self.p)

    @property
    def alpha_max(self) -> float:
        return self.critical_exponent - self.q

    @property
    def volume(self) -> float:
        return sphere_area(self.N) * self.R**self.N / self.N

    def as_dict(self):
        return {"p": self.p, "q": self.q, "N": self.N, "s": self.s, "R": self.R}


def _shells(omega, a, b, k):
    return omega * (b**k - a**k) / k


@dataclass(eq=False)
class RadialGrid:
    N: int
    R: float
    M: int
    h: float
    centers: np.ndarray
    sphere_area: float
    volumes: np.ndarray
    face_volumes: np.ndarray
    face_spacing: np.ndarray
    _weighted: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, N: int, R: float, M: int) -> "RadialGrid":
        """Construct without the ``M >= 4`` guard of :func:`make_grid`."""
        h = R / M
        centers = (np.arange(M) + 0.5) * h
        omega = sphere_area(N)
        edges = np.arange(M + 1) * h
        edges[-1] = R
        volumes = _shells(omega, edges[:-1], edges[1:], N)
        outer = np.append(centers[1:], R)
        face_volumes = _shells(omega, centers, outer, N)
        face_spacing = np.full(M, h)
        face_spacing[-1] = R - centers[-1]
        return cls(N, R, M, h, centers, omega, volumes, face_volumes, face_spacing)

    @property
    def faces(self) -> np.ndarray:
        """Face radii; the last one is the outer boundary."""
        return np.append(self.centers[1:] - 0.5 * self.h, self.R)

    @property
    def volume(self) -> float:
        return self.sphere_area * self.R**self.N / self.N

    def weighted_volumes(self, s: float) -> np.ndarray:
        """Exact shell integrals of ``|x|^-s``."""
        key = float(s)
        if key not in self._weighted:
            edges = np.arange(self.M + 1) * self.h
            edges[-1] = self.R
            k = self.N - key
            self._weighted[key] = _shells(self.sphere_area, edges[:-1], edges[1:], k)
        return self._weighted[key]


def make_grid(params: Params, M: int) -> RadialGrid:
    if int(M) != M or M < 4:
        raise ConfigurationError(f"grid needs at least 4 cells (got M = {M})")
    return RadialGrid.build(params.N, params.R, int(M))


@dataclass(eq=False)
class RadialField:
    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != (self.grid.M,):
            raise ConfigurationError(
                f"field has shape {self.values.shape}, grid has {self.grid.M} cells")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("field values must be finite")

    def scaled(self, c: float) -> "RadialField":
        return RadialField(c * self.values, self.grid)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_zero(self) -> bool:
        return not np.any(self.values)


def face_gradients(u: RadialField) -> np.ndarray:
    """One-sided differences on faces, with the zero ghost at ``r = R``."""
    ext = np.append(u.values, 0.0)
    return np.diff(ext) / u.grid.face_spacing


def weighted_l2_sq(u: RadialField, s: float) -> float:
    return float(np.dot(u.grid.weighted_volumes(s), u.values**2))


def grad_norm_p(u: RadialField, p: float) -> float:
    """Quadrature of the integral of ``|grad u|^p`` (the p-th power, not the norm)."""
    return float(np.dot(u.grid.face_volumes, np.abs(face_gradients(u)) ** p))


def grad_norm_p_gradient(u: RadialField, p: float) -> np.ndarray:
    """Derivative of :func:`grad_norm_p` with respect to the cell values."""
    g = u.grid
    d = face_gradients(u)
    flux = g.face_volumes * np.sign(d) * np.abs(d) ** (p - 1.0) / g.face_spacing
    out = p * flux.copy() * -1.0
    out[1:] += p * flux[:-1]
    return out


def lq_norm(u: RadialField, exponent: float) -> float:
    if exponent < 1:
        raise ConfigurationError(f"norm exponent must be >= 1 (got {exponent})")
    return float(np.dot(u.grid.volumes, np.abs(u.values) ** exponent)) ** (1.0 / exponent)


# -- named profiles ---------------------------------------------------------

def _bessel_zero(nu: float) -> float:
    if float(nu).is_integer() and nu >= 0:
        return float(special.jn_zeros(int(nu), 1)[0])
    lo = max(nu, 0.0) + 1e-9
    # first positive zero lies in (nu, nu + 2*pi) for nu >= -1/2
    xs = np.linspace(lo, lo + 2 * math.pi + 2, 400)
    vals = special.jv(nu, xs)
    k = int(np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0])
    return optimize.brentq(lambda x: special.jv(nu, x), xs[k], xs[k + 1], xtol=1e-15)


def eigen_profile(grid: RadialGrid) -> np.ndarray:
    """First radial Dirichlet Laplacian eigenfunction, unit value at the origin."""
    nu = grid.N / 2.0 - 1.0
    j = _bessel_zero(nu)
    x = j * grid.centers / grid.R
    return special.gamma(nu + 1) * (2.0 / x) ** nu * special.jv(nu, x)


def first_eigenvalue(N: int, R: float = 1.0) -> float:
    return (_bessel_zero(N / 2.0 - 1.0) / R) ** 2


def power_profile(grid: RadialGrid, beta: float = 1.0, a: float = 1.0) -> np.ndarray:
    """``(1 - (r/R)^a)^beta``."""
    return (1.0 - (grid.centers / grid.R) ** a) ** beta


def bump_profile(grid: RadialGrid, width: float = 0.5, beta: float = 2.0) -> np.ndarray:
    """Smooth bump of relative width ``width`` centred at the origin."""
    x = grid.centers / grid.R
    return (1.0 - x**2) ** beta / (1.0 + (x / width) ** 2)


def concentrated_profile(grid: RadialGrid, eps: float, power: float) -> np.ndarray:
    """Bubble ``(1 + (r/eps R)^2)^-power`` cut off linearly at the boundary."""
    x = grid.centers / grid.R
    return (1.0 + (x / eps) ** 2) ** (-power) * (1.0 - x)


def profile(grid: RadialGrid, name: str, amplitude: float = 1.0, **shape) -> RadialField:
    """Build a named initial profile: ``power``, ``bump`` or ``eigen``."""
    if name == "power":
        vals = power_profile(grid, shape.get("beta", 1.0), shape.get("a", 1.0))
    elif name == "bump":
        vals = bump_profile(grid, shape.get("width", 0.5), shape.get("beta", 2.0))
    elif name == "eigen":
        vals = eigen_profile(grid)
    else:
        raise ConfigurationError(f"unknown profile {name!r}")
    return RadialField(amplitude * vals, grid)
