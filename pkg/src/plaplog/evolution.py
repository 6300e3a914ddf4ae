"""Time stepping with adaptive steps, blow-up detection and identity monitors.

Each step freezes the face coefficients ``|D u|^(p-2)`` at the current state,
treats diffusion implicitly with weight ``theta`` and the source explicitly.
The step size follows the local Lipschitz scale of the source,

    dt_n = dt0 / (1 + ||u||_inf^(q-2) ln(e + ||u||_inf)).

Monitors are sampled every ``monitor_stride`` steps; the running dissipation
is the sum of ``|du|_s^2 / dt`` over steps, i.e. the midpoint rule for the
time integral of the weighted norm of ``u_t``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .domain import Params, RadialField
from .errors import ConfigurationError
from .functionals import EnergyReport, report_from_integrals

VERDICTS = ("global_to_horizon", "blowup", "step_floor_hit")
CSV_COLUMNS = ("t", "L", "J", "I", "grad_p", "lq_q", "log_term", "dt")
FIT_SAMPLES = 5


@dataclass(frozen=True)
class SolverConfig:
    dt0: float
    t_max: float
    blowup_threshold: float = 1e8
    dt_floor: float = 1e-13
    theta_impl: float = 1.0
    monitor_stride: int = 1

    def __post_init__(self):
        bad = []
        if not self.dt0 > self.dt_floor:
            bad.append(f"dt0 > dt_floor violated (dt0 = {self.dt0}, dt_floor = {self.dt_floor})")
        if not self.dt_floor > 0:
            bad.append(f"dt_floor > 0 violated (dt_floor = {self.dt_floor})")
        if not self.t_max > 0:
            bad.append(f"t_max > 0 violated (t_max = {self.t_max})")
        if not self.blowup_threshold > 1:
            bad.append(f"blowup_threshold > 1 violated ({self.blowup_threshold})")
        if not 0 <= self.theta_impl <= 1:
            bad.append(f"0 <= theta_impl <= 1 violated ({self.theta_impl})")
        if int(self.monitor_stride) != self.monitor_stride or self.monitor_stride < 1:
            bad.append(f"monitor_stride must be a positive integer ({self.monitor_stride})")
        if bad:
            raise ConfigurationError("invalid solver settings: " + "; ".join(bad), bad,
                                     module="evolution")

    def as_dict(self):
        return {"dt0": self.dt0, "t_max": self.t_max,
                "blowup_threshold": self.blowup_threshold, "dt_floor": self.dt_floor,
                "theta_impl": self.theta_impl, "monitor_stride": self.monitor_stride}


@dataclass
class Trajectory:
    params: Params
    config: SolverConfig
    times: np.ndarray
    reports: list
    dissipation_integral: np.ndarray
    dt: np.ndarray
    sup_norms: np.ndarray
    verdict: str
    T_num: float | None = None
    steps: int = 0
    final: RadialField | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])

    def rows(self):
        for t, r, dt in zip(self.times, self.reports, self.dt):
            yield (t, r.L, r.J, r.I, r.grad_p, r.lq_q, r.log_term, dt)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"verdict": self.verdict, "T_num": self.T_num, "steps": self.steps,
                "samples": len(self.times),
                "t_final": float(self.times[-1]) if len(self.times) else None,
                "max_sup_norm": float(np.max(self.sup_norms)) if len(self.times) else None}

    def to_dict(self) -> dict:
        return {"params": self.params.as_dict(), "solver": self.config.as_dict(),
                **self.summary(),
                "samples_data": {
                    "t": self.times.tolist(),
                    "dissipation_integral": self.dissipation_integral.tolist(),
                    "dt": self.dt.tolist(), "sup_norm": self.sup_norms.tolist(),
                    **{k: self.series(k).tolist()
                       for k in ("L", "J", "I", "grad_p", "lq_q", "log_term")}}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _arrays(u: RadialField, params: Params):
    g = u.grid
    return (g.volumes, g.weighted_volumes(params.s), g.face_volumes, g.face_spacing)


def step(u: RadialField, dt: float, params: Params, theta: float = 1.0,
         source: bool = True) -> RadialField:
    """One semi-implicit step of size ``dt``."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive (got {dt})", module="evolution")
    new, _ = kernels.step(u.values, float(dt), *_arrays(u, params), float(params.p),
                          float(params.q), float(theta), bool(source))
    return RadialField(new, u.grid)


def _report(v: np.ndarray, arrays, params: Params) -> EnergyReport:
    vol, wvol, fvol, fh = arrays
    g, lq, lg, wl = kernels.integrals(v, vol, wvol, fvol, fh, float(params.p), float(params.q))
    return report_from_integrals(g, lq, lg, wl, params)


def extrapolate_blowup(times, L, q: float, k: int = FIT_SAMPLES):
    """Zero of the line fitted to ``L^((2-q)/2)`` over the last ``k`` samples.

    Returns ``(T, slope, intercept)``; ``T`` is never earlier than the last
    sample time.
    """
    t = np.asarray(times[-k:], float)
    y = np.asarray(L[-k:], float) ** ((2.0 - q) / 2.0)
    if len(t) < 2:
        return float(t[-1]), 0.0, float(y[-1])
    slope, icpt = np.polyfit(t - t[-1], y, 1)
    icpt -= slope * t[-1]
    if not slope < 0:
        return float(t[-1]), float(slope), float(icpt)
    return max(float(t[-1]), -icpt / slope), float(slope), float(icpt)


def run(u0: RadialField, params: Params, cfg: SolverConfig) -> Trajectory:
    """Integrate from ``u0`` until the horizon, the blow-up threshold or the step floor."""
    arrays = _arrays(u0, params)
    p, q = float(params.p), float(params.q)
    u = np.array(u0.values, dtype=float)
    rep = _report(u, arrays, params)
    wl2_stop = cfg.blowup_threshold * 2.0 * rep.L if rep.L > 0 else math.inf
    times, reports, diss, dts, sups = [0.0], [rep], [0.0], [0.0], [float(np.max(np.abs(u)))]
    t, total, steps = 0.0, 0.0, 0
    status = kernels.STATUS_STEPS
    while status == kernels.STATUS_STEPS:
        u, t, k, inc, last_dt, status = kernels.advance(
            u, t, int(cfg.monitor_stride), cfg.dt0, cfg.t_max, cfg.dt_floor, wl2_stop,
            *arrays, p, q, float(cfg.theta_impl))
        total += inc
        steps += k
        if k == 0:
            break
        times.append(t)
        reports.append(_report(u, arrays, params))
        diss.append(total)
        dts.append(last_dt)
        sups.append(float(np.max(np.abs(u))))
    T_num = None
    if status == kernels.STATUS_THRESHOLD:
        verdict = "blowup"
        T_num = extrapolate_blowup(times, [r.L for r in reports], q)[0]
    elif status == kernels.STATUS_FLOOR:
        verdict = "step_floor_hit"
    else:
        verdict = "global_to_horizon"
    return Trajectory(params, cfg, np.array(times), reports, np.array(diss), np.array(dts),
                      np.array(sups), verdict, T_num, steps, RadialField(u, u0.grid))


def _check_index(traj: Trajectory, k: int, interior: bool = False):
    lo, hi = (1, len(traj) - 2) if interior else (0, len(traj) - 1)
    if not lo <= k <= hi:
        raise ConfigurationError(f"sample index {k} outside [{lo}, {hi}]", module="evolution")


def energy_identity_residual(traj: Trajectory, k: int) -> float:
    """``|D(t_k) + J(t_k) - J(0)| / (1 + |J(0)|)`` with ``D`` the running dissipation."""
    _check_index(traj, k)
    J0 = traj.reports[0].J
    return abs(traj.dissipation_integral[k] + traj.reports[k].J - J0) / (1.0 + abs(J0))


def dL_dt_residual(traj: Trajectory, k: int) -> float:
    """Centred-difference check of ``d(2L)/dt = -2I`` at an interior sample."""
    _check_index(traj, k, interior=True)
    r = traj.reports
    dt = traj.times[k + 1] - traj.times[k - 1]
    d2L = 2.0 * (r[k + 1].L - r[k - 1].L) / dt
    I = r[k].I
    return abs(d2L + 2.0 * I) / (1.0 + abs(I))


def max_residuals(traj: Trajectory) -> dict:
    n = len(traj)
    e = max((energy_identity_residual(traj, k) for k in range(n)), default=0.0)
    d = max((dL_dt_residual(traj, k) for k in range(1, n - 1)), default=0.0)
    return {"energy_identity": e, "dL_dt": d}
