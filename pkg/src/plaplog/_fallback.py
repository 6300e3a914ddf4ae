"""NumPy implementation of the hot kernels.

Mirrors ``_kernels.pyx`` call for call. Arrays are float64 and contiguous;
faces are indexed so that face ``f`` sits between cell ``f`` and ``f + 1``,
the last face being the Dirichlet boundary with a zero ghost value.
"""

import math

import numpy as np
from scipy.linalg import solve_banded

from .errors import NumericalFailure

BACKEND = "python"

STATUS_STEPS = 0
STATUS_HORIZON = 1
STATUS_THRESHOLD = 2
STATUS_FLOOR = 3


def _differences(u, fh):
    ext = np.empty(u.size + 1)
    ext[:-1] = u
    ext[-1] = 0.0
    return np.diff(ext) / fh


def _source(u, q):
    a = np.abs(u)
    out = np.zeros_like(u)
    nz = a > 0.0
    out[nz] = a[nz] ** (q - 2.0) * u[nz] * np.log(a[nz])
    return out


def integrals(u, vol, wvol, fvol, fh, p, q):
    """Return ``(grad_p, lq_q, log_term, wl2)`` for one snapshot."""
    d = _differences(u, fh)
    grad_p = float(np.dot(fvol, np.abs(d) ** p))
    a = np.abs(u)
    aq = a**q
    lq_q = float(np.dot(vol, aq))
    logs = np.zeros_like(a)
    nz = a > 0.0
    logs[nz] = aq[nz] * np.log(a[nz])
    log_term = float(np.dot(vol, logs))
    wl2 = float(np.dot(wvol, u * u))
    return grad_p, lq_q, log_term, wl2


def step(u, dt, vol, wvol, fvol, fh, p, q, theta, source):
    """One frozen-coefficient step; returns ``(u_new, dissipation_rate * dt)``."""
    if not np.all(np.isfinite(u)):
        raise NumericalFailure("non-finite state entering linear solve")
    m = u.size
    d = _differences(u, fh)
    c = fvol * np.abs(d) ** (p - 2.0) / (fh * fh)
    diag_k = c.copy()
    diag_k[1:] += c[:-1]
    off = -c[:-1]

    ku = diag_k * u
    ku[:-1] += off * u[1:]
    ku[1:] += off * u[:-1]

    rhs = wvol * u - (1.0 - theta) * dt * ku
    if source:
        rhs += dt * vol * _source(u, q)

    ab = np.zeros((3, m))
    ab[1] = wvol + theta * dt * diag_k
    ab[0, 1:] = theta * dt * off
    ab[2, :-1] = theta * dt * off
    if not np.all(np.isfinite(ab)) or not np.all(np.isfinite(rhs)):
        raise NumericalFailure("non-finite tridiagonal system")
    try:
        new = solve_banded((1, 1), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"tridiagonal solve broke down: {exc}") from exc
    if not np.all(np.isfinite(new)):
        raise NumericalFailure("tridiagonal solve produced non-finite values")
    du = new - u
    return new, float(np.dot(wvol, du * du)) / dt


def step_size(u, dt0, q):
    m = float(np.max(np.abs(u))) if u.size else 0.0
    return dt0 / (1.0 + m ** (q - 2.0) * math.log(math.e + m))


def advance(u, t, n_steps, dt0, t_max, dt_floor, wl2_stop,
            vol, wvol, fvol, fh, p, q, theta):
    """Advance up to ``n_steps`` steps with the source-scaled step law.

    Returns ``(u, t, steps_taken, dissipation, last_dt, status)``; status is
    one of the ``STATUS_*`` codes. Stops early on reaching ``t_max``, on the
    weighted L2 norm squared reaching ``wl2_stop`` or on the step floor.
    """
    u = np.array(u, dtype=float)
    diss = 0.0
    last_dt = 0.0
    for k in range(n_steps):
        if t >= t_max:
            return u, t, k, diss, last_dt, STATUS_HORIZON
        dt = step_size(u, dt0, q)
        if dt < dt_floor:
            return u, t, k, diss, last_dt, STATUS_FLOOR
        if t + dt >= t_max:
            dt = t_max - t
        u, inc = step(u, dt, vol, wvol, fvol, fh, p, q, theta, True)
        diss += inc
        t = t_max if dt == t_max - t else t + dt
        last_dt = dt
        if float(np.dot(wvol, u * u)) >= wl2_stop:
            return u, t, k + 1, diss, last_dt, STATUS_THRESHOLD
    status = STATUS_HORIZON if t >= t_max else STATUS_STEPS
    return u, t, n_steps, diss, last_dt, status
