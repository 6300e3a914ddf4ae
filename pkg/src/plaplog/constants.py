"""Embedding and Hardy-Sobolev constants, well radii and derived constants.

The optimal constants of the embeddings are not known in closed form. They
are estimated as maxima of quotients over a deterministic trial family, so
every estimate is an attained value and hence a lower bound on the discrete
optimum. Callers that need an upper bound use :meth:`WellConstants.conservative`,
which inflates every estimated constant by the safety factor.

Trial family (nested: the first ``n`` members never depend on ``n``):

* member 0 is the first Dirichlet eigenprofile of the Laplacian;
* members ``1, 4, 7, ...`` are ``(1 - r/R)^b``;
* members ``2, 5, 8, ...`` are ``(1 - (r/R)^2)^b``;
* members ``3, 6, 9, ...`` are bubbles concentrated at the origin.

Shape parameters follow a van der Corput sequence over log-scaled ranges.
Refinement runs Nelder-Mead over the two shape parameters of a seed and then
polishes the whole discrete vector with L-BFGS. Seeds chosen for refinement
are the best members of a fixed chain of prefixes, which keeps the estimate
nondecreasing when the family grows by doubling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .domain import (Params, RadialField, RadialGrid, eigen_profile, face_gradients,
                     grad_norm_p, lq_norm)
from .errors import ConfigurationError, DomainError

DEFAULT_SAFETY = 1.25
ALPHA_EPS = 1e-3


# -- trial family -------------------------------------------------------------

def _van_der_corput(k: int) -> float:
    x, denom = 0.0, 1.0
    while k:
        k, rem = divmod(k, 2)
        denom *= 2.0
        x += rem / denom
    return x


def _log_range(t, lo, hi):
    return math.exp(math.log(lo) + t * (math.log(hi) - math.log(lo)))


def _shape(kind, a, b, grid: RadialGrid):
    x = grid.centers / grid.R
    if kind == "power1":
        return (1.0 - x) ** b
    if kind == "power2":
        return (1.0 - x**a) ** b
    if kind == "bubble":
        return (1.0 + (x / a) ** 2) ** (-b) * (1.0 - x)
    raise ValueError(kind)


def _member_params(i: int, grid: RadialGrid, p: float):
    """Kind and shape parameters of family member ``i >= 1``."""
    kind = ("power1", "power2", "bubble")[(i - 1) % 3]
    t = _van_der_corput((i - 1) // 3 + 1)
    if kind == "bubble":
        eps_min = max(grid.h / grid.R, 1e-3)
        power = max((grid.N - p) / (2.0 * (p - 1.0)), 0.25)
        return kind, _log_range(t, eps_min, 1.0), power
    a = 2.0
    return kind, a, _log_range(t, 0.5, 8.0)


def trial_profile(i: int, grid: RadialGrid, p: float) -> np.ndarray:
    """Member ``i`` of the deterministic trial family."""
    if i == 0:
        return np.abs(eigen_profile(grid))
    kind, a, b = _member_params(i, grid, p)
    return _shape(kind, a, b, grid)


def refinement_prefixes(n: int) -> list[int]:
    """Prefix lengths whose best member is refined; nested under doubling."""
    out = set()
    k = 1
    while k <= n:
        out.add(k)
        k *= 2
    m = n
    while m >= 1:
        out.add(m)
        m //= 2
    return sorted(out)


# -- quotients ----------------------------------------------------------------

class _Quotient:
    """``(sum a_i |v_i|^tau)^c1 / (sum_f V_f |D_f v|^n)^c2`` in log form."""

    def __init__(self, grid, cell_weights, tau, c1, n, c2):
        self.grid = grid
        self.a = cell_weights
        self.tau, self.c1, self.n, self.c2 = tau, c1, n, c2

    def log_value(self, v):
        s = float(np.dot(self.a, np.abs(v) ** self.tau))
        g = float(np.dot(self.grid.face_volumes,
                         np.abs(face_gradients(RadialField(v, self.grid))) ** self.n))
        if s <= 0 or g <= 0:
            return -np.inf
        return self.c1 * math.log(s) - self.c2 * math.log(g)

    def neg_log_and_grad(self, v):
        grid = self.grid
        av = np.abs(v)
        s = float(np.dot(self.a, av**self.tau))
        ext = np.append(v, 0.0)
        d = np.diff(ext) / grid.face_spacing
        ad = np.abs(d)
        g = float(np.dot(grid.face_volumes, ad**self.n))
        if s <= 0 or g <= 0 or not np.isfinite(s) or not np.isfinite(g):
            return np.inf, np.zeros_like(v)
        ds = self.tau * self.a * av ** (self.tau - 2.0) * v if self.tau != 2 else 2 * self.a * v
        flux = grid.face_volumes * np.sign(d) * ad ** (self.n - 1.0) / grid.face_spacing
        dg = -self.n * flux
        dg[1:] += self.n * flux[:-1]
        val = self.c1 * math.log(s) - self.c2 * math.log(g)
        grad = self.c1 * ds / s - self.c2 * dg / g
        return -val, -grad


def _polish(quot: _Quotient, v0, maxiter=3000):
    v0 = np.asarray(v0, float)
    scale = np.max(np.abs(v0))
    v0 = v0 / scale if scale > 0 else v0
    res = optimize.minimize(quot.neg_log_and_grad, v0, jac=True, method="L-BFGS-B",
                            options={"maxiter": maxiter, "gtol": 1e-10, "ftol": 1e-13})
    v = res.x
    return quot.log_value(v), v


def _nelder_mead(quot: _Quotient, i: int, grid: RadialGrid, p: float):
    if i == 0:
        return quot.log_value(trial_profile(0, grid, p)), trial_profile(0, grid, p)
    kind, a, b = _member_params(i, grid, p)

    def neg(z):
        aa, bb = math.exp(z[0]), math.exp(z[1])
        if kind == "bubble":
            aa = min(max(aa, 1e-4), 10.0)
        v = _shape(kind, aa, min(bb, 50.0), grid)
        val = quot.log_value(v)
        return -val if np.isfinite(val) else 1e300

    res = optimize.minimize(neg, [math.log(a), math.log(b)], method="Nelder-Mead",
                            options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 400})
    aa, bb = math.exp(res.x[0]), math.exp(res.x[1])
    if kind == "bubble":
        aa = min(max(aa, 1e-4), 10.0)
    v = _shape(kind, aa, min(bb, 50.0), grid)
    return quot.log_value(v), v


@dataclass
class QuotientMax:
    log_value: float
    vector: np.ndarray
    seed_index: int

    @property
    def value(self):
        return math.exp(self.log_value)


def maximize_quotient(quot: _Quotient, grid: RadialGrid, p: float, family_size: int,
                      extra_seeds=(), polish=True, refine=True) -> QuotientMax:
    if family_size < 1:
        raise ConfigurationError(f"family_size must be >= 1 (got {family_size})")
    seeds = [trial_profile(i, grid, p) for i in range(family_size)]
    vals = [quot.log_value(v) for v in seeds]
    best = QuotientMax(vals[0], seeds[0], 0)
    for i, v in enumerate(vals):
        if v > best.log_value:
            best = QuotientMax(v, seeds[i], i)
    starts = sorted({int(np.argmax(vals[:k])) for k in refinement_prefixes(family_size)})
    if not refine:
        starts = []
    for i in starts:
        val, vec = _nelder_mead(quot, i, grid, p)
        if polish:
            pval, pvec = _polish(quot, vec)
            if pval > val:
                val, vec = pval, pvec
        if val > best.log_value:
            best = QuotientMax(val, vec, i)
    for j, v in enumerate(extra_seeds):
        val, vec = (_polish(quot, v) if polish else (quot.log_value(v), v))
        if val > best.log_value:
            best = QuotientMax(val, vec, -1 - j)
    return best


def _embedding_quotient(grid, p, target):
    return _Quotient(grid, grid.volumes, target, 1.0 / target, p, 1.0 / p)


def _embedding_max(grid, params, target, family_size, extra_seeds=()):
    if not (params.p - 1e-12 <= target <= params.critical_exponent + 1e-12):
        raise ConfigurationError(
            f"target exponent {target} outside [p, Np/(N-p)] = "
            f"[{params.p}, {params.critical_exponent:g}]")
    quot = _embedding_quotient(grid, params.p, target)
    best = maximize_quotient(quot, grid, params.p, family_size, extra_seeds)
    u = RadialField(best.vector, grid)
    # report the attained ratio computed directly, not the optimizer's value
    best.log_value = math.log(lq_norm(u, target) / grad_norm_p(u, params.p) ** (1 / params.p))
    return best


def estimate_embedding_constant(grid: RadialGrid, params: Params, target_exponent: float,
                                family_size: int = 16) -> float:
    """Attained maximum of ``||u||_target / ||grad u||_p`` over the trial family."""
    return _embedding_max(grid, params, target_exponent, family_size).value


# -- closed forms -------------------------------------------------------------

def _check_alpha(alpha, params):
    if not (0 < alpha <= params.alpha_max * (1 + 1e-12)):
        raise DomainError(
            f"alpha = {alpha} outside (0, Np/(N-p) - q] = (0, {params.alpha_max:g}]")


def r_alpha(alpha: float, B_alpha: float, params: Params) -> float:
    _check_alpha(alpha, params)
    if not B_alpha > 0:
        raise DomainError(f"embedding constant must be positive (got {B_alpha})")
    k = params.q + alpha
    return (alpha / B_alpha**k) ** (1.0 / (k - params.p))


def sigma_alpha(alpha: float, kappa_q: float, params: Params, volume: float) -> float:
    _check_alpha(alpha, params)
    if not kappa_q > 0 or not volume > 0:
        raise DomainError("kappa_q and volume must be positive")
    k = params.q + alpha
    e = 1.0 / (k - params.p)
    return (alpha / kappa_q**k) ** e * volume ** (alpha / (params.q * (k - params.p)))


def alpha_grid(params: Params, samples: int) -> np.ndarray:
    if samples < 1:
        raise ConfigurationError("need at least one alpha sample")
    if samples == 1:
        return np.array([params.alpha_max])
    return np.linspace(ALPHA_EPS, params.alpha_max, samples)


def hardy_exponent(params: Params) -> float:
    """Gradient exponent ``2N/(N+2-s)`` of the weighted-L2 Hardy-Sobolev instance."""
    return 2.0 * params.N / (params.N + 2.0 - params.s)


def c_tilde(C_hardy: float, params, volume: float) -> float:
    """Constant linking the weighted L2 norm to ``||grad u||_p^2``.

    ``params`` needs only ``p``, ``N`` and ``s``.
    """
    if not C_hardy > 0:
        raise DomainError("Hardy-Sobolev constant must be positive")
    n = 2.0 * params.N / (params.N + 2.0 - params.s)
    if math.isclose(n, params.p, rel_tol=1e-12):
        return C_hardy
    if n > params.p:
        raise DomainError(
            f"2N/(N+2-s) = {n:g} > p = {params.p}: weighted estimate not available",
            module="constants")
    return C_hardy * volume ** ((params.N + 2.0 - params.s) / params.N - 2.0 / params.p)


def hardy_sobolev_ratio(u: RadialField, params: Params, beta: float, n: float) -> float:
    N = params.N
    if not (1 < n < N) or not (0 <= beta <= n):
        raise DomainError(f"need 1 < n < N and 0 <= beta <= n (n = {n}, beta = {beta})")
    if u.is_zero():
        raise DomainError("Hardy-Sobolev ratio undefined for the zero field")
    gamma = n * (N - beta) / (N - n)
    num = float(np.dot(u.grid.weighted_volumes(beta), np.abs(u.values) ** gamma))
    den = grad_norm_p(u, n) ** ((N - beta) / (N - n))
    return num / den


def _hardy_quotient(grid, params):
    n = hardy_exponent(params)
    N, s = params.N, params.s
    return _Quotient(grid, grid.weighted_volumes(s), 2.0, 1.0, n, (N - s) / (N - n))


def estimate_hardy_constant(grid: RadialGrid, params: Params, family_size: int = 16) -> float:
    """Attained maximum of the weighted-L2 Hardy-Sobolev ratio."""
    return _hardy_max(grid, params, family_size).value


def _hardy_max(grid, params, family_size):
    quot = _hardy_quotient(grid, params)
    best = maximize_quotient(quot, grid, params.p, family_size)
    best.log_value = math.log(hardy_sobolev_ratio(RadialField(best.vector, grid), params,
                                                  params.s, hardy_exponent(params)))
    return best


# -- alpha sweep and r* -------------------------------------------------------

@dataclass
class AlphaSweep:
    alphas: np.ndarray
    B: np.ndarray
    r: np.ndarray


def alpha_sweep(params: Params, grid: RadialGrid, alpha_samples: int = 32,
                family_size: int = 16, extra_seeds=()) -> AlphaSweep:
    """Estimate ``B_alpha`` along the alpha grid.

    The first alpha gets the full family treatment; later ones evaluate the
    family seeds and polish the previous optimiser, which moves smoothly with
    the exponent.
    """
    alphas = alpha_grid(params, alpha_samples)
    B = np.empty_like(alphas)
    r = np.empty_like(alphas)
    prev = None
    for k, a in enumerate(alphas):
        target = params.q + a
        if prev is None:
            best = _embedding_max(grid, params, target, family_size, list(extra_seeds))
        else:
            quot = _embedding_quotient(grid, params.p, target)
            best = maximize_quotient(quot, grid, params.p, family_size,
                                     extra_seeds=[prev], polish=True, refine=False)
            u = RadialField(best.vector, grid)
            best.log_value = math.log(lq_norm(u, target)
                                      / grad_norm_p(u, params.p) ** (1 / params.p))
        B[k] = best.value
        r[k] = r_alpha(a, B[k], params)
        prev = best.vector
    return AlphaSweep(alphas, B, r)


def r_star(params: Params, grid: RadialGrid, alpha_samples: int = 32,
           family_size: int = 16):
    """Return ``(r_star, best_alpha)`` maximising ``r(alpha)`` over the alpha grid."""
    sw = alpha_sweep(params, grid, alpha_samples, family_size)
    k = int(np.argmax(sw.r))
    return float(sw.r[k]), float(sw.alphas[k])


# -- bundle -------------------------------------------------------------------

@dataclass
class WellConstants:
    params: Params
    alpha: float
    B_alpha: float
    kappa_q: float
    C_star: float
    C_hardy: float
    C_tilde: float
    r_alpha: float
    sigma_alpha: float
    r_star: float
    r_sup: float
    M_depth: float
    d_alpha: float
    C1: float
    C2: float
    alphas: np.ndarray = field(repr=False)
    B_values: np.ndarray = field(repr=False)
    r_values: np.ndarray = field(repr=False)
    sigma_values: np.ndarray = field(repr=False)
    volume: float = 0.0
    safety_factor: float = DEFAULT_SAFETY
    inflated: bool = False
    grid_cells: int = 0
    family_size: int = 0

    @classmethod
    def from_estimates(cls, params, alphas, B_values, kappa_q, C_star, C_hardy, volume,
                       safety_factor=DEFAULT_SAFETY, inflated=False, grid_cells=0,
                       family_size=0):
        alphas = np.asarray(alphas, float)
        B_values = np.asarray(B_values, float)
        r_values = np.array([r_alpha(a, b, params) for a, b in zip(alphas, B_values)])
        sig = np.array([sigma_alpha(a, kappa_q, params, volume) for a in alphas])
        k = int(np.argmax(r_values))
        p, q = params.p, params.q
        ct = c_tilde(C_hardy, params, volume)
        depth = (q - p) / (p * q)
        return cls(params=params, alpha=float(alphas[k]), B_alpha=float(B_values[k]),
                   kappa_q=kappa_q, C_star=C_star, C_hardy=C_hardy, C_tilde=ct,
                   r_alpha=float(r_values[k]), sigma_alpha=float(sig[k]),
                   r_star=float(r_values[k]), r_sup=float(np.max(sig)),
                   M_depth=depth * float(r_values[k]) ** p,
                   d_alpha=depth * float(r_values[k]) ** p,
                   C1=ct / 2.0, C2=p * q / (q - p) * ct / 2.0,
                   alphas=alphas, B_values=B_values, r_values=r_values, sigma_values=sig,
                   volume=volume, safety_factor=safety_factor, inflated=inflated,
                   grid_cells=grid_cells, family_size=family_size)

    def conservative(self) -> "WellConstants":
        """Copy with every estimated constant multiplied by the safety factor."""
        if self.inflated:
            return self
        sf = self.safety_factor
        return WellConstants.from_estimates(
            self.params, self.alphas, self.B_values * sf, self.kappa_q * sf,
            self.C_star * sf, self.C_hardy * sf, self.volume, sf, inflated=True,
            grid_cells=self.grid_cells, family_size=self.family_size)

    def at_alpha(self, alpha: float) -> tuple[float, float]:
        """``(r(alpha), d(alpha))`` at a sampled alpha."""
        k = int(np.argmin(np.abs(self.alphas - alpha)))
        r = float(self.r_values[k])
        p, q = self.params.p, self.params.q
        return r, (q - p) / (p * q) * r**p

    def table(self) -> list[dict]:
        est = "max of attained quotient over trial family + refinement"
        sf = 1.0 if self.inflated else self.safety_factor
        rows = [
            ("alpha", self.alpha, "argmax of r(alpha) over uniform alpha grid", None),
            ("B_alpha", self.B_alpha, est + " (L^{q+alpha})", sf),
            ("kappa_q", self.kappa_q, est + " (L^q)", sf),
            ("C_star", self.C_star, est + " (L^{Np/(N-p)})", sf),
            ("C_hardy", self.C_hardy, est + " (weighted L2, n = 2N/(N+2-s))", sf),
            ("C_tilde", self.C_tilde, "closed form from C_hardy and |Omega|", sf),
            ("r_alpha", self.r_alpha, "closed form (alpha/B^{q+alpha})^{1/(q+alpha-p)}", None),
            ("sigma_alpha", self.sigma_alpha, "closed form from kappa_q and |Omega|", None),
            ("r_star", self.r_star, "max of r(alpha) over alpha grid", None),
            ("r_sup", self.r_sup, "max of sigma(alpha) over alpha grid", None),
            ("M_depth", self.M_depth, "(q-p)/(pq) r_star^p", None),
            ("d_alpha", self.d_alpha, "(q-p)/(pq) r(alpha)^p at alpha", None),
            ("C1", self.C1, "C_tilde/2", None),
            ("C2", self.C2, "pq/(q-p) C_tilde/2", None),
        ]
        return [{"name": n, "value": v, "method": m, "safety_factor": f} for n, v, m, f in rows]

    def to_json(self) -> str:
        doc = {"params": self.params.as_dict(), "grid_cells": self.grid_cells,
               "family_size": self.family_size, "inflated": self.inflated,
               "constants": self.table(),
               "alpha_sweep": {"alpha": self.alphas.tolist(), "B": self.B_values.tolist(),
                               "r": self.r_values.tolist(),
                               "sigma": self.sigma_values.tolist()}}
        return json.dumps(doc, indent=2)

    def to_text(self) -> str:
        rows = self.table()
        w = max(len(r["name"]) for r in rows)
        lines = [f"{'name':<{w}}  {'value':>22}  {'safety':>6}  method"]
        for r in rows:
            sf = "-" if r["safety_factor"] is None else f"{r['safety_factor']:g}"
            lines.append(f"{r['name']:<{w}}  {r['value']:>22.15g}  {sf:>6}  {r['method']}")
        return "\n".join(lines) + "\n"


def well_constants(params: Params, grid: RadialGrid, alpha_samples: int = 32,
                   family_size: int = 16, safety_factor: float = DEFAULT_SAFETY
                   ) -> WellConstants:
    """Estimate every constant on ``grid`` and evaluate the closed forms."""
    kappa = _embedding_max(grid, params, params.q, family_size)
    cstar = _embedding_max(grid, params, params.critical_exponent, family_size)
    sw = alpha_sweep(params, grid, alpha_samples, family_size,
                     extra_seeds=[kappa.vector, cstar.vector])
    hardy = _hardy_max(grid, params, family_size)
    return WellConstants.from_estimates(
        params, sw.alphas, sw.B, kappa.value, cstar.value, hardy.value, grid.volume,
        safety_factor, grid_cells=grid.M, family_size=family_size)
