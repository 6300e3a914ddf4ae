import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from plaplog.constants import r_alpha
from plaplog.domain import Params, RadialField, make_grid
from plaplog.functionals import (decomposition_residual, evaluate, log_source_integral,
                                 scaled_report)

BALL3 = 4 * math.pi / 3


def test_log_source_examples():
    P = Params(2, 3, 3, 1)
    g = make_grid(P, 10)
    signs = np.where(np.arange(10) % 2, 1.0, -1.0)
    assert log_source_integral(RadialField(signs, g), 3) == 0
    assert log_source_integral(RadialField(np.zeros(10), g), 3) == 0
    e = RadialField(np.full(10, math.e), g)
    assert log_source_integral(e, 3) == pytest.approx(math.e**3 * BALL3, abs=1e-10)


def test_evaluate_zero_and_unit_modulus():
    P = Params(2, 3, 3, 1)
    g = make_grid(P, 12)
    r = evaluate(RadialField(np.zeros(12), g), P)
    assert (r.J, r.I, r.L) == (0, 0, 0)
    v = np.zeros(12)
    v[::3] = 1.0
    v[1::3] = -1.0
    r = evaluate(RadialField(v, g), P)
    assert r.I == pytest.approx(r.grad_p, rel=1e-15)
    assert r.J == pytest.approx(r.grad_p / 2 + r.lq_q / 9, rel=1e-15)


def test_evaluate_against_adaptive_quadrature():
    P = Params(2, 3, 3, 0)
    g = make_grid(P, 4000)
    r = evaluate(RadialField(1 - g.centers, g), P)
    w = 4 * math.pi

    def integral(f):
        return w * quad(f, 0, 1, limit=1000, epsabs=1e-14, epsrel=1e-13)[0]

    exact = {
        "grad_p": integral(lambda x: x**2),
        "lq_q": integral(lambda x: (1 - x) ** 3 * x**2),
        "log_term": integral(lambda x: (1 - x) ** 3 * math.log(1 - x) * x**2 if x < 1 else 0),
        "L": 0.5 * integral(lambda x: (1 - x) ** 2 * x**2),
    }
    for k, v in exact.items():
        assert getattr(r, k) == pytest.approx(v, rel=1e-6), k


@pytest.mark.parametrize("P,kind", [
    (Params(2, 4, 3, 1), "random"),
    (Params(3, 5, 5, 0.5), "linear"),
    (Params(2, 2.5, 4, 2), "random"),
])
def test_decomposition_residual(P, kind):
    g = make_grid(P, 64)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(64) * 3 if kind == "random" else 1 - g.centers
    r = evaluate(RadialField(v, g), P)
    assert decomposition_residual(r, P) <= 1e-12 * (1 + abs(r.J))
    z = evaluate(RadialField(np.zeros(64), g), P)
    assert decomposition_residual(z, P) == 0


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_fiber_structure(lam):
    P = Params(2, 3, 3, 1)
    g = make_grid(P, 50)
    u = RadialField(3 * (1 - g.centers**2), g)
    base = evaluate(u, P)
    direct = evaluate(u.scaled(lam), P)
    p, q = P.p, P.q
    gl = (lam**p * base.grad_p - lam**q * base.log_term
          - lam**q * math.log(lam) * base.lq_q)
    assert direct.I == pytest.approx(gl, rel=1e-10)
    sc = scaled_report(base, lam, P)
    for k in ("J", "I", "L", "grad_p", "lq_q", "log_term"):
        assert getattr(sc, k) == pytest.approx(getattr(direct, k), rel=1e-10, abs=1e-13)


def test_sign_structure_inside_radius(base_params, base_grid, base_constants):
    P, g, wc = base_params, base_grid, base_constants
    r = wc.r_alpha
    rng = np.random.default_rng(7)
    for _ in range(20):
        v = np.abs(rng.standard_normal(g.M)).cumsum()[::-1] * rng.uniform(0.1, 5)
        u = RadialField(v, g)
        gp = evaluate(u, P).grad_p
        u = u.scaled(0.999 * r / gp ** (1 / P.p))
        assert evaluate(u, P).I > 0
    assert r == pytest.approx(r_alpha(wc.alpha, wc.B_alpha, P))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([
    (2, 3, 3, 1), (2, 2.5, 3, 0), (3, 4, 4, 1), (2, 3, 5, 2), (4, 6, 6, 0.5)]))
def test_decomposition_property(seed, pqns):
    P = Params(*pqns)
    g = make_grid(P, 16)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(16) * 10 ** rng.uniform(-3, 2)
    r = evaluate(RadialField(v, g), P)
    assert decomposition_residual(r, P) <= 1e-12 * (1 + abs(r.J))
    neg = evaluate(RadialField(-v, g), P)
    assert neg == r
