"""Energy and Nehari functionals of a field snapshot.

All integrals come from one kernel pass over the same shell quadrature, so
the decomposition ``J = I/q + (q-p)/(pq) * grad_p + lq_q/q^2`` closes to
rounding error.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .domain import Params, RadialField


@dataclass(frozen=True)
class EnergyReport:
    J: float
    I: float
    L: float
    grad_p: float
    lq_q: float
    log_term: float

    def as_dict(self):
        return asdict(self)


def log_source_integral(u: RadialField, q: float) -> float:
    """Quadrature of ``|u|^q ln|u|`` with ``0 ln 0 = 0``."""
    a = np.abs(u.values)
    terms = np.zeros_like(a)
    nz = a > 0
    terms[nz] = a[nz] ** q * np.log(a[nz])
    return float(np.dot(u.grid.volumes, terms))


def report_from_integrals(grad_p, lq_q, log_term, wl2, params: Params) -> EnergyReport:
    p, q = params.p, params.q
    J = grad_p / p - log_term / q + lq_q / q**2
    I = grad_p - log_term
    return EnergyReport(J=J, I=I, L=0.5 * wl2, grad_p=grad_p, lq_q=lq_q, log_term=log_term)


def evaluate(u: RadialField, params: Params) -> EnergyReport:
    g = u.grid
    grad_p, lq_q, log_term, wl2 = kernels.integrals(
        u.values, g.volumes, g.weighted_volumes(params.s), g.face_volumes,
        g.face_spacing, float(params.p), float(params.q))
    return report_from_integrals(grad_p, lq_q, log_term, wl2, params)


def decomposition_residual(report: EnergyReport, params: Params) -> float:
    p, q = params.p, params.q
    rhs = report.I / q + (q - p) / (p * q) * report.grad_p + report.lq_q / q**2
    return abs(report.J - rhs)


def scaled_report(report: EnergyReport, lam: float, params: Params) -> EnergyReport:
    """Report of ``lam * u`` rebuilt from the report of ``u`` (``lam > 0``).

    Uses the homogeneity of each constituent; the weighted norm scales as
    ``lam^2`` and the log term picks up ``lam^q ln(lam) * lq_q``.
    """
    p, q = params.p, params.q
    lq = lam**q
    grad_p = lam**p * report.grad_p
    lq_q = lq * report.lq_q
    log_term = lq * (report.log_term + math.log(lam) * report.lq_q)
    return report_from_integrals(grad_p, lq_q, log_term, 2.0 * lam**2 * report.L, params)
