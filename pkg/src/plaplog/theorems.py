"""Closed-form theorem bounds, trajectory checks and lemma verifiers.

Bounds take their constants from a :class:`WellConstants`. The trajectory
checker always works with :meth:`WellConstants.conservative`, which inflates
every estimated constant. That direction enlarges the decay envelopes, shrinks
the well depth (so fewer runs qualify for the depth-based upper bound),
enlarges ``C_tilde`` (larger upper bounds) and enlarges ``C_star`` (smaller
lower bounds). Each estimator error therefore weakens a claim rather than
manufacturing a pass.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .constants import (WellConstants, estimate_hardy_constant, hardy_exponent,
                        hardy_sobolev_ratio, trial_profile)
from .domain import Params, RadialField, RadialGrid
from .errors import DomainError, HypothesisError, LemmaViolation
from .evolution import Trajectory

TOLERANCE = 0.1
THEOREMS = ("T2.3_decay", "T2.5", "T2.6", "T2.7", "T2.8")


@dataclass
class BoundReport:
    """Outcome of one theorem check.

    ``margin`` is signed so that a nonnegative value means the observation
    sits on the right side of the tolerance-adjusted bound. For the decay
    envelope it is the smallest gap relative to the envelope.
    """

    theorem_id: str
    hypotheses_met: bool
    detail: dict = field(default_factory=dict)
    bound_value: float | list | None = None
    observed: float | list | None = None
    margin: float | None = None
    passed: bool | None = None

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class LowerBoundParams:
    alpha: float
    theta_exp: float
    kappa_exp: float
    diam: float


def lower_bound_params(params: Params, alpha: float) -> LowerBoundParams:
    """Exponents of the lower blow-up bound at ``alpha``.

    Requires ``q + alpha < p(1 + 2/N)``, which keeps ``theta (q+alpha) < p``
    and makes the exponent ``kappa`` exceed one.
    """
    p, q, N = params.p, params.q, params.N
    k = q + alpha
    if not alpha > 0:
        raise HypothesisError(f"alpha must be positive (got {alpha})")
    if not k < p * (1.0 + 2.0 / N):
        raise HypothesisError(
            f"q + alpha = {k:g} must be below p(1 + 2/N) = {p * (1 + 2 / N):g}")
    theta = (0.5 - 1.0 / k) / (0.5 - (N - p) / (N * p))
    if not 0 < theta < 1:
        raise HypothesisError(f"theta = {theta:g} outside (0, 1)")
    kappa = ((1.0 - theta) * k / 2.0) / (1.0 - theta * k / p)
    return LowerBoundParams(alpha, theta, kappa, 2.0 * params.R)


# -- closed-form bounds -------------------------------------------------------

def decay_envelope(params: Params, wc: WellConstants, L0: float, J0: float, t,
                   alpha: float | None = None):
    """Upper envelope of ``L(t)`` for data in the well with ``0 <= J0 < d(alpha)``.

    Exponential for ``p = 2``, algebraic for ``p > 2``. ``alpha`` defaults to
    the maximiser of ``r(alpha)`` stored in ``wc``.
    """
    p, q = params.p, params.q
    a = wc.alpha if alpha is None else alpha
    r, d = wc.at_alpha(a) if alpha is not None else (wc.r_alpha, wc.d_alpha)
    if not 0 <= J0 < d:
        raise HypothesisError(f"decay needs 0 <= J(u0) < d(alpha) = {d:.6g} (J0 = {J0:.6g})")
    ct = wc.C_tilde
    t = np.asarray(t, float)
    if p == 2:
        bracket = 1.0 - (2.0 * q / (q - 2.0) * J0 / r**2) ** ((q + a - 2.0) / 2.0)
        return 2.0 * L0 * np.exp(-(2.0 / ct) * bracket * t) / 2.0
    bracket = 1.0 - (p * q / (q - p) * J0 / r**p) ** ((q + a - p) / p)
    base = (p / 2.0 - 1.0) * (2.0 / ct ** (p / 2.0)) * bracket * t + (2.0 * L0) ** (1.0 - p / 2.0)
    return base ** (2.0 / (2.0 - p)) / 2.0


def blowup_bound_T25(L0: float, J0: float, q: float) -> float:
    if not J0 < 0:
        raise HypothesisError(f"needs J(u0) < 0 (J0 = {J0:.6g})")
    if not q > 2:
        raise HypothesisError(f"needs q > 2 (q = {q})")
    return 2.0 * L0 / ((2.0 - q) * q * J0)


def blowup_bound_T26(L0: float, J0: float, M_depth: float, q: float) -> float:
    if not J0 < M_depth:
        raise HypothesisError(f"needs J(u0) < M = {M_depth:.6g} (J0 = {J0:.6g})")
    if not q > 2:
        raise HypothesisError(f"needs q > 2 (q = {q})")
    return 8.0 * (q - 1.0) * L0 / ((q - 2.0) ** 2 * q * (M_depth - J0))


def blowup_bound_T27(L0: float, J0: float, params: Params, wc: WellConstants):
    """Return ``(F0, bound)`` under ``0 < C2 J0 < L0 - C1``."""
    p, q = params.p, params.q
    c2j = wc.C2 * J0
    if not c2j > 0:
        raise HypothesisError(f"needs 0 < C2 J(u0) (C2 J0 = {c2j:.6g})")
    if not c2j < L0 - wc.C1:
        raise HypothesisError(
            f"needs C2 J(u0) < L(0) - C1 ({c2j:.6g} >= {L0 - wc.C1:.6g})")
    if not q > 2:
        raise HypothesisError(f"needs q > 2 (q = {q})")
    F0 = L0 - wc.C1 - c2j
    return F0, 4.0 * (q - 1.0) * p * wc.C_tilde * L0 / ((q - 2.0) ** 2 * (q - p) * F0)


def blowup_lower_bound_T28(L0: float, params: Params, wc: WellConstants,
                           lb: LowerBoundParams) -> float:
    p, s = params.p, params.s
    a, th, ka = lb.alpha, lb.theta_exp, lb.kappa_exp
    k = params.q + a
    # evaluated in logs: small alpha overflows the bracket power
    log_inner = (th * k * math.log(wc.C_star) - th * k / p * math.log(a)
                 + s * (1.0 - th) * k / 2.0 * math.log(lb.diam))
    log_den = (p / (p - th * k) * log_inner + ka * math.log(2.0) + math.log(ka - 1.0)
               - math.log(a))
    val = (1.0 - ka) * math.log(L0) - log_den
    return math.exp(val) if val < 700.0 else math.inf


def best_lower_bound(L0: float, params: Params, wc: WellConstants, samples: int = 64):
    """Largest T2.8 bound over admissible ``alpha``; ``None`` when none qualifies."""
    hi = min(params.alpha_max, params.p * (1.0 + 2.0 / params.N) - params.q)
    if not hi > 0:
        return None
    best = None
    for a in np.linspace(hi * 1e-3, hi * (1 - 1e-3), samples):
        try:
            lb = lower_bound_params(params, float(a))
        except HypothesisError:
            continue
        T = blowup_lower_bound_T28(L0, params, wc, lb)
        if math.isfinite(T) and (best is None or T > best[0]):
            best = (T, lb)
    return best


# -- trajectory checks --------------------------------------------------------

def _upper_report(tid, bound, traj, detail):
    if traj.verdict == "blowup":
        obs = traj.T_num
        margin = float(bound * (1 + TOLERANCE) - obs)
        return BoundReport(tid, True, detail, bound, obs, margin, margin >= 0)
    detail = dict(detail, verdict=traj.verdict)
    horizon = float(traj.times[-1])
    if traj.verdict == "global_to_horizon" and horizon > bound * (1 + TOLERANCE):
        return BoundReport(tid, True, detail, bound, None, bound * (1 + TOLERANCE) - horizon,
                           False)
    return BoundReport(tid, True, dict(detail, note="inconclusive: no blow-up before stop"),
                       bound, None, None, None)


def check_trajectory(traj: Trajectory, params: Params, wc: WellConstants) -> list[BoundReport]:
    """Evaluate every theorem whose hypotheses the initial data meets."""
    if len(traj) == 0 or traj.reports[0].L == 0:
        return []
    cons = wc.conservative()
    r0 = traj.reports[0]
    L0, J0, I0 = r0.L, r0.J, r0.I
    q, p = params.q, params.p
    out = []

    if I0 > 0 and 0 <= J0 < cons.d_alpha:
        env = decay_envelope(params, cons, L0, J0, traj.times)
        L = traj.series("L")
        gaps = (env * (1 + TOLERANCE) - L) / env
        detail = {"I0 > 0": True, "0 <= J0 < d(alpha)": True, "alpha": cons.alpha,
                  "d_alpha": cons.d_alpha, "C_tilde": cons.C_tilde}
        out.append(BoundReport("T2.3_decay", True, detail, env.tolist(), L.tolist(),
                               float(np.min(gaps)), bool(np.all(gaps >= 0))))

    if J0 < 0:
        T = blowup_bound_T25(L0, J0, q)
        out.append(_upper_report("T2.5", T, traj, {"J0 < 0": True}))

    if J0 < cons.M_depth and I0 < 0:
        T = blowup_bound_T26(L0, J0, cons.M_depth, q)
        out.append(_upper_report("T2.6", T, traj, {"J0 < M": True, "I0 < 0": True,
                                                   "M_depth": cons.M_depth}))

    if 0 < cons.C2 * J0 < L0 - cons.C1:
        F0, T = blowup_bound_T27(L0, J0, params, cons)
        rep = _upper_report("T2.7", T, traj, {"0 < C2 J0 < L0 - C1": True, "F0": F0,
                                              "C1": cons.C1, "C2": cons.C2})
        F = traj.series("L") - cons.C1 - cons.C2 * traj.series("J")
        rate = (q - p) / p * 2.0 / cons.C_tilde
        floor = F0 * np.exp(rate * traj.times) * (1 - TOLERANCE)
        fgap = F - floor
        rep.detail["F_monitor_min_gap"] = float(np.min(fgap))
        rep.detail["F_monitor_ok"] = bool(np.all(fgap >= 0))
        if rep.passed is not None:
            rep.passed = rep.passed and rep.detail["F_monitor_ok"]
        out.append(rep)

        best = best_lower_bound(L0, params, cons)
        if best is not None:
            Tl, lb = best
            detail = {"q + alpha < p(1 + 2/N)": True, "alpha": lb.alpha,
                      "theta": lb.theta_exp, "kappa": lb.kappa_exp, "C_star": cons.C_star}
            if traj.verdict == "blowup":
                m = float(traj.T_num - Tl)
                out.append(BoundReport("T2.8", True, detail, Tl, traj.T_num, m, m >= 0))
            else:
                out.append(BoundReport("T2.8", True, dict(detail, verdict=traj.verdict),
                                       Tl, None, None, None))
    return out


# -- lemma verifiers ----------------------------------------------------------

def log_inequality_sides(s, p, mu):
    """Both sides of the two logarithmic inequalities, evaluated literally.

    Returns ``(lhs, rhs)`` with ``s^p ln s`` against ``s^(p+mu)/(e mu)`` for
    ``s >= 1`` and ``|s^p ln s|`` against ``1/(e p)`` for ``0 < s < 1``.
    """
    s, p, mu = np.broadcast_arrays(*(np.asarray(x, float) for x in (s, p, mu)))
    big = s >= 1
    lhs = np.where(big, s**p * np.log(s), np.abs(s**p * np.log(s)))
    rhs = np.where(big, math.exp(-1) / mu * s ** (p + mu), 1.0 / (math.e * p))
    return lhs, rhs


def verify_log_inequalities(samples: int = 1_000_000, seed: int = 0) -> dict:
    """Check the two inequalities on random ``(s, p, mu)``.

    The comparison is done in the equivalent overflow-free form: for ``s >= 1``
    with ``x = mu ln s`` the ratio lhs/rhs is ``x e^(1-x)``; for ``s < 1`` with
    ``y = -p ln s`` it is ``y e^(1-y)``. Both are at most one.
    """
    if samples < 1:
        raise DomainError("need at least one sample", module="theorem-checkers")
    rng = np.random.default_rng(seed)
    ls = rng.uniform(-30.0, 30.0, samples)  # ln s
    p = rng.uniform(0.05, 10.0, samples)
    mu = rng.uniform(0.01, 10.0, samples)
    big = ls >= 0
    x = np.where(big, mu * ls, -p * ls)
    ratio = x * np.exp(1.0 - x)
    bad = ratio > 1.0 + 1e-12
    out = {"samples": samples, "seed": seed,
           "violations": int(np.count_nonzero(bad)),
           "max_ratio_large": float(np.max(ratio[big], initial=0.0)),
           "max_ratio_small": float(np.max(ratio[~big], initial=0.0))}
    out["max_slack"] = 1.0 - max(out["max_ratio_large"], out["max_ratio_small"])
    if out["violations"]:
        raise LemmaViolation(f"{out['violations']} logarithmic-inequality violations")
    return out


def concavity_blowup_oracle(theta: float, psi0: float, dpsi0: float):
    """Integrate ``psi'' psi = (1 + theta) psi'^2`` until ``psi`` explodes.

    Returns ``(t2, observed)`` where ``t2 = psi0/(theta dpsi0)`` and
    ``observed`` is when ``psi`` first exceeds ``psi0 eps^(-1/4)``.
    """
    if not (theta > 0 and psi0 > 0 and dpsi0 > 0):
        raise DomainError("need theta, psi0, dpsi0 > 0", module="theorem-checkers")
    t2 = psi0 / (theta * dpsi0)
    cap = psi0 * np.finfo(float).eps ** -0.25

    def rhs(t, y):
        return [y[1], (1.0 + theta) * y[1] ** 2 / y[0]]

    def hit(t, y):
        return y[0] - cap

    hit.terminal = True
    sol = solve_ivp(rhs, (0.0, 2.0 * t2), [psi0, dpsi0], method="RK45", events=hit,
                    rtol=1e-12, atol=1e-14 * psi0)
    if not sol.t_events[0].size:
        raise LemmaViolation("concavity ODE did not reach the blow-up cap before 2 t2")
    return t2, float(sol.t_events[0][0])


def verify_hardy_sobolev(params: Params, grid: RadialGrid, family_size: int = 16,
                         seed: int = 0) -> dict:
    """Weighted-L2 Hardy-Sobolev ratio: family bound and scale invariance.

    Random perturbations of family members never exceed the estimated constant
    by more than its safety factor and the ratio is invariant under scaling.
    """
    rng = np.random.default_rng(seed)
    n = hardy_exponent(params)
    C = estimate_hardy_constant(grid, params, family_size)
    ratios, drift = [], 0.0
    for i in range(family_size):
        v = trial_profile(i, grid, params.p)
        w = v * (1.0 + 0.1 * rng.standard_normal(v.size))
        for x in (v, w):
            u = RadialField(x, grid)
            r = hardy_sobolev_ratio(u, params, params.s, n)
            r2 = hardy_sobolev_ratio(u.scaled(2.0), params, params.s, n)
            ratios.append(r)
            drift = max(drift, abs(r2 - r) / r)
    return {"n": n, "C_estimate": C, "max_ratio": max(ratios),
            "bounded": bool(max(ratios) <= C * (1 + 1e-9)),
            "scale_drift": drift}
