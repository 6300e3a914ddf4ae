# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same contract as ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log, pow, isfinite, M_E

from .errors import NumericalFailure

cnp.import_array()

BACKEND = "cython"

cdef enum:
    C_STEPS = 0
    C_HORIZON = 1
    C_THRESHOLD = 2
    C_FLOOR = 3

STATUS_STEPS = C_STEPS
STATUS_HORIZON = C_HORIZON
STATUS_THRESHOLD = C_THRESHOLD
STATUS_FLOOR = C_FLOOR


cdef inline double _src(double v, double q) nogil:
    cdef double a = fabs(v)
    if a == 0.0:
        return 0.0
    return pow(a, q - 2.0) * v * log(a)


def integrals(double[::1] u, double[::1] vol, double[::1] wvol,
              double[::1] fvol, double[::1] fh, double p, double q):
    cdef Py_ssize_t i, m = u.shape[0]
    cdef double g = 0.0, lq = 0.0, lg = 0.0, wl = 0.0
    cdef double d, a, aq, nxt
    for i in range(m):
        nxt = u[i + 1] if i + 1 < m else 0.0
        d = (nxt - u[i]) / fh[i]
        g += fvol[i] * pow(fabs(d), p)
        a = fabs(u[i])
        aq = pow(a, q)
        lq += vol[i] * aq
        if a > 0.0:
            lg += vol[i] * aq * log(a)
        wl += wvol[i] * u[i] * u[i]
    return g, lq, lg, wl


cdef int _step(double[::1] u, double[::1] out, double dt,
               double[::1] vol, double[::1] wvol, double[::1] fvol,
               double[::1] fh, double p, double q, double theta, bint source,
               double[::1] c, double[::1] cp, double[::1] dp,
               double* diss) nogil:
    """Frozen-coefficient step into ``out``; returns 0 or -1 on breakdown."""
    cdef Py_ssize_t i, m = u.shape[0]
    cdef double d, nxt, diag, ku, rhs, piv, lo, up, acc = 0.0, du
    for i in range(m):
        nxt = u[i + 1] if i + 1 < m else 0.0
        d = (nxt - u[i]) / fh[i]
        c[i] = fvol[i] * pow(fabs(d), p - 2.0) / (fh[i] * fh[i])
    # Thomas elimination, sub/super diagonal of row i are -theta*dt*c[i-1], -theta*dt*c[i]
    for i in range(m):
        diag = c[i]
        ku = c[i] * u[i]
        if i + 1 < m:
            ku -= c[i] * u[i + 1]
        if i > 0:
            diag += c[i - 1]
            ku += c[i - 1] * (u[i] - u[i - 1])
        rhs = wvol[i] * u[i] - (1.0 - theta) * dt * ku
        if source:
            rhs += dt * vol[i] * _src(u[i], q)
        piv = wvol[i] + theta * dt * diag
        up = -theta * dt * c[i] if i + 1 < m else 0.0
        if i > 0:
            lo = -theta * dt * c[i - 1]
            piv -= lo * cp[i - 1]
            rhs -= lo * dp[i - 1]
        if not (piv > 0.0) or not isfinite(piv) or not isfinite(rhs):
            return -1
        cp[i] = up / piv
        dp[i] = rhs / piv
    out[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    for i in range(m):
        du = out[i] - u[i]
        acc += wvol[i] * du * du
    diss[0] = acc / dt
    return 0


def step(u_in, double dt, double[::1] vol, double[::1] wvol,
         double[::1] fvol, double[::1] fh, double p, double q,
         double theta, bint source):
    cdef double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t m = u.shape[0]
    cdef double diss = 0.0
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double[::1] c = np.empty(m)
    cdef double[::1] cp = np.empty(m)
    cdef double[::1] dp = np.empty(m)
    cdef int rc
    with nogil:
        rc = _step(u, o, dt, vol, wvol, fvol, fh, p, q, theta, source,
                   c, cp, dp, &diss)
    if rc != 0:
        raise NumericalFailure("tridiagonal solve broke down (non-SPD or non-finite input)")
    return out, diss


cdef inline double _step_size(double[::1] u, double dt0, double q) nogil:
    cdef Py_ssize_t i
    cdef double mx = 0.0
    for i in range(u.shape[0]):
        if fabs(u[i]) > mx:
            mx = fabs(u[i])
    return dt0 / (1.0 + pow(mx, q - 2.0) * log(M_E + mx))


def step_size(u_in, double dt0, double q):
    cdef double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    return _step_size(u, dt0, q)


def advance(u_in, double t, long n_steps, double dt0, double t_max,
            double dt_floor, double wl2_stop, double[::1] vol,
            double[::1] wvol, double[::1] fvol, double[::1] fh, double p,
            double q, double theta):
    a = np.array(u_in, dtype=np.float64)
    b = np.empty_like(a)
    cdef double[::1] u = a
    cdef double[::1] o = b
    cdef double[::1] tmp
    cdef Py_ssize_t m = u.shape[0], i
    cdef double[::1] c = np.empty(m)
    cdef double[::1] cp = np.empty(m)
    cdef double[::1] dp = np.empty(m)
    cdef double diss = 0.0, inc = 0.0, last_dt = 0.0, dt, wl
    cdef long k
    cdef int rc = 0, status = C_STEPS
    with nogil:
        k = 0
        while k < n_steps:
            if t >= t_max:
                status = C_HORIZON
                break
            dt = _step_size(u, dt0, q)
            if dt < dt_floor:
                status = C_FLOOR
                break
            if t + dt >= t_max:
                dt = t_max - t
            rc = _step(u, o, dt, vol, wvol, fvol, fh, p, q, theta, True,
                       c, cp, dp, &inc)
            if rc != 0:
                break
            tmp = u
            u = o
            o = tmp
            diss += inc
            if dt == t_max - t:
                t = t_max
            else:
                t = t + dt
            last_dt = dt
            k += 1
            wl = 0.0
            for i in range(m):
                wl += wvol[i] * u[i] * u[i]
            if wl >= wl2_stop:
                status = C_THRESHOLD
                break
        if rc == 0 and status == C_STEPS and t >= t_max:
            status = C_HORIZON
    if rc != 0:
        raise NumericalFailure("tridiagonal solve broke down (non-SPD or non-finite input)")
    return np.asarray(u).copy(), t, k, diss, last_dt, status
