"""Projection onto the Nehari manifold, the mountain-pass level and well labels.

Along the ray ``lam -> lam*u`` the Nehari functional is

    g(lam) = lam^p A - lam^q (B + C ln lam),

with ``A = grad_p(u)``, ``B = log_term(u)``, ``C = lq_q(u)``. Dividing by
``lam^q`` gives ``A lam^(p-q) - B - C ln lam``, strictly decreasing from
``+inf`` to ``-inf``, so the positive root is unique and bisection on a
bracket in ``log lam`` finds it to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from . import constants
from .domain import Params, RadialField, RadialGrid, grad_norm_p_gradient, make_grid
from .errors import ConfigurationError, EstimationError, ProjectionError
from .functionals import EnergyReport, evaluate

LAMBDA_MIN = 1e-8
LAMBDA_MAX = 1e8
LABELS = ("inside_W", "inside_V", "on_nehari", "zero", "indeterminate")


@dataclass(frozen=True)
class WellVerdict:
    label: str
    J: float
    I: float
    d_ref: float

    def as_dict(self):
        return asdict(self)


def fiber_root(A: float, B: float, C: float, p: float, q: float) -> float:
    """Root of ``A lam^(p-q) - B - C ln lam`` on the search window."""

    def h(t):  # t = ln lam
        return A * math.exp((p - q) * t) - B - C * t

    grid = np.linspace(math.log(LAMBDA_MIN), math.log(LAMBDA_MAX), 65)
    vals = [h(t) for t in grid]
    k = next((i for i in range(len(grid) - 1) if vals[i] > 0 >= vals[i + 1]), None)
    if k is None:
        if vals[0] == 0:
            return LAMBDA_MIN
        raise ProjectionError(
            f"fibering map has no sign change for lambda in [{LAMBDA_MIN:g}, {LAMBDA_MAX:g}]")
    lo, hi = grid[k], grid[k + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return math.exp(lo if abs(h(lo)) <= abs(h(hi)) else hi)


def fiber_scale_from_report(rep: EnergyReport, params: Params) -> float:
    if not (rep.grad_p > 0 and rep.lq_q > 0):
        raise ProjectionError("cannot project the zero field onto the Nehari manifold")
    return fiber_root(rep.grad_p, rep.log_term, rep.lq_q, params.p, params.q)


def fiber_scale(u: RadialField, params: Params) -> float:
    """Scale ``lam*`` with ``I(lam* u) = 0``."""
    rep = evaluate(u, params)
    lam = fiber_scale_from_report(rep, params)
    proj = evaluate(u.scaled(lam), params)
    if abs(proj.I) > 1e-10 * max(1.0, proj.grad_p):
        raise ProjectionError(
            f"projection residual {abs(proj.I):.3e} exceeds tolerance at lambda = {lam:.6g}")
    return lam


def nehari_energy(rep: EnergyReport, lam: float, params: Params) -> float:
    """``J(lam u)`` for ``lam`` on the Nehari manifold, from the report of ``u``."""
    p, q = params.p, params.q
    return (q - p) / (p * q) * lam**p * rep.grad_p + lam**q * rep.lq_q / q**2


def energy_gradient(v: RadialField, params: Params) -> np.ndarray:
    """Derivative of ``J`` with respect to the cell values."""
    a = np.abs(v.values)
    src = np.zeros_like(a)
    nz = a > 0
    src[nz] = a[nz] ** (params.q - 2.0) * v.values[nz] * np.log(a[nz])
    return grad_norm_p_gradient(v, params.p) / params.p - v.grid.volumes * src


class _Projected:
    """``Phi(u) = J(lam*(u) u)`` and its gradient ``lam* J'(lam* u)``."""

    def __init__(self, grid: RadialGrid, params: Params):
        self.grid, self.params = grid, params

    def value(self, x):
        u = RadialField(x, self.grid)
        rep = evaluate(u, self.params)
        lam = fiber_scale_from_report(rep, self.params)
        return nehari_energy(rep, lam, self.params), lam

    def __call__(self, x):
        if not np.all(np.isfinite(x)) or not np.any(x):
            return np.inf, np.zeros_like(x)
        try:
            val, lam = self.value(x)
        except ProjectionError:
            return np.inf, np.zeros_like(x)
        g = lam * energy_gradient(RadialField(lam * x, self.grid), self.params)
        return val, g


def _descend(phi: _Projected, x0: np.ndarray, maxiter: int):
    x0 = x0 / np.max(np.abs(x0))
    res = optimize.minimize(phi, x0, jac=True, method="L-BFGS-B",
                            options={"maxiter": maxiter, "gtol": 1e-10, "ftol": 1e-13})
    x = res.x / np.max(np.abs(res.x))
    try:
        return phi.value(x)[0], x
    except ProjectionError:
        return math.inf, x


def estimate_d_with_profile(grid: RadialGrid, params: Params, family_size: int = 16,
                            maxiter: int = 2000):
    """Return ``(d_est, profile)``; the profile lies on the Nehari manifold."""
    if family_size < 1:
        raise ConfigurationError(f"family_size must be >= 1 (got {family_size})")
    phi = _Projected(grid, params)
    seeds = [constants.trial_profile(i, grid, params.p) for i in range(family_size)]
    vals = []
    for v in seeds:
        try:
            vals.append(phi.value(v)[0])
        except ProjectionError:
            vals.append(math.inf)
    if not np.any(np.isfinite(vals)):
        raise EstimationError("projection failed for every trial profile")
    best = int(np.argmin(vals))
    d, vec = vals[best], seeds[best]
    starts = {int(np.argmin(vals[:k])) for k in constants.refinement_prefixes(family_size)}
    for i in sorted(starts):
        if not math.isfinite(vals[i]):
            continue
        val, x = _descend(phi, seeds[i], maxiter)
        if val < d:
            d, vec = val, x
    lam = phi.value(vec)[1]
    return d, RadialField(lam * vec, grid)


def estimate_d(grid: RadialGrid, params: Params, family_size: int = 16) -> float:
    """Upper estimate of the mountain-pass level on ``grid``.

    Minimum of ``J`` over Nehari projections of the trial family, followed by
    quasi-Newton descent on the projected energy from the best members of a
    nested chain of prefixes, so the estimate never increases as the family
    grows.
    """
    return estimate_d_with_profile(grid, params, family_size)[0]


def resolution_drift(params: Params, M: int, family_size: int = 16, d_coarse=None) -> dict:
    """``d_est`` on ``M`` and ``2M`` cells and the relative change between them.

    The discrete level is not known to converge, so the drift is reported
    rather than asserted.
    """
    if d_coarse is None:
        d_coarse = estimate_d(make_grid(params, M), params, family_size)
    d_fine = estimate_d(make_grid(params, 2 * M), params, family_size)
    return {"cells": [M, 2 * M], "d_est": [d_coarse, d_fine],
            "relative_drift": abs(d_fine - d_coarse) / abs(d_coarse)}


def default_tol(rep: EnergyReport) -> float:
    return 1e-8 * (1.0 + rep.grad_p)


def classify_report(rep: EnergyReport, d_ref: float, tol: float | None = None,
                    zero: bool = False) -> WellVerdict:
    if not d_ref > 0:
        raise ConfigurationError(f"d_ref must be positive (got {d_ref})")
    if tol is None:
        tol = default_tol(rep)
    elif not tol > 0:
        raise ConfigurationError(f"tol must be positive (got {tol})")
    if zero:
        label = "inside_W"
    elif abs(rep.I) <= tol:
        label = "on_nehari"
    elif rep.J >= d_ref:
        label = "indeterminate"
    elif rep.I > 0:
        label = "inside_W"
    else:
        label = "inside_V"
    return WellVerdict(label, rep.J, rep.I, d_ref)


def classify(u: RadialField, params: Params, d_ref: float,
             tol: float | None = None) -> WellVerdict:
    """Place ``u`` in the well ``W``, the exterior ``V``, on the manifold, or neither.

    The zero field belongs to ``W``. A nonzero field with ``|I| <= tol`` is
    reported on the manifold whatever its energy; otherwise energies at or
    above ``d_ref`` are indeterminate.
    """
    return classify_report(evaluate(u, params), d_ref, tol, zero=u.is_zero())
