import math
from dataclasses import replace

import numpy as np
import pytest

from plaplog.domain import Params, make_grid, profile
from plaplog.errors import HypothesisError
from plaplog.evolution import SolverConfig, run
from plaplog.functionals import evaluate
from plaplog.theorems import (best_lower_bound, blowup_bound_T25, blowup_bound_T26,
                              blowup_bound_T27, blowup_lower_bound_T28, check_trajectory,
                              concavity_blowup_oracle, decay_envelope, log_inequality_sides,
                              lower_bound_params, verify_hardy_sobolev,
                              verify_log_inequalities)


def test_t25_examples():
    assert blowup_bound_T25(1.0, -1.0, 4.0) == pytest.approx(0.25, abs=1e-12)
    assert blowup_bound_T25(2.0, -1.0, 4.0) == 2 * blowup_bound_T25(1.0, -1.0, 4.0)
    assert blowup_bound_T25(1.0, -1e-12, 4.0) > 1e10
    with pytest.raises(HypothesisError):
        blowup_bound_T25(1.0, 0.0, 4.0)


def test_t26_examples():
    assert blowup_bound_T26(1.0, 0.0, 0.5, 4.0) == pytest.approx(3.0, abs=1e-12)
    assert blowup_bound_T26(1.0, 0.0, 1.0, 3.0) == pytest.approx(16 / 3, abs=1e-12)
    assert blowup_bound_T26(1.0, 0.5 - 1e-12, 0.5, 4.0) > 1e10
    with pytest.raises(HypothesisError):
        blowup_bound_T26(1.0, 0.5, 0.5, 4.0)
    gaps = np.linspace(0.1, 5, 20)
    vals = [blowup_bound_T26(1.0, 1.0 - g, 1.0, 3.0) for g in gaps]
    assert np.all(np.diff(vals) < 0)


@pytest.fixture
def unit_wc(base_constants):
    return replace(base_constants, C_tilde=1.0, C1=0.5, C2=2.0)


def test_t27_examples(unit_wc):
    P = Params(2, 4, 3, 0)
    F0, T = blowup_bound_T27(2.5, 0.5, P, unit_wc)
    assert F0 == pytest.approx(1.0, abs=1e-12)
    assert T == pytest.approx(7.5, abs=1e-12)
    F0, T = blowup_bound_T27(2.5, (2.0 - 1e-9) / 2.0, P, unit_wc)
    assert F0 < 1e-8 and T > 1e8
    wide = replace(unit_wc, C_tilde=2.0, C1=1.0, C2=4.0)
    F0b, Tb = blowup_bound_T27(2.5, 0.125, P, wide)
    assert F0b == pytest.approx(1.0) and Tb == pytest.approx(15.0)
    with pytest.raises(HypothesisError, match="0 < C2"):
        blowup_bound_T27(2.5, -0.1, P, unit_wc)
    with pytest.raises(HypothesisError, match="L\\(0\\) - C1"):
        blowup_bound_T27(2.5, 1.0, P, unit_wc)
    Ts = [blowup_bound_T27(10.0, j, P, unit_wc)[1] for j in np.linspace(4.5, 0.1, 20)]
    assert np.all(np.diff(Ts) < 0)


def test_t28_exponents():
    lb = lower_bound_params(Params(2, 2.2, 3, 0), 0.2)
    assert lb.theta_exp == pytest.approx(0.25, abs=1e-12)
    assert lb.kappa_exp == pytest.approx(9 / 7, abs=1e-12)
    assert lb.diam == 2.0
    with pytest.raises(HypothesisError):
        lower_bound_params(Params(2, 3, 3, 0), 0.5)


def test_t28_homogeneity(base_constants):
    P = Params(2, 2.2, 3, 0)
    lb = lower_bound_params(P, 0.2)
    wc = replace(base_constants, C_star=0.4)
    T1 = blowup_lower_bound_T28(3.0, P, wc, lb)
    T2 = blowup_lower_bound_T28(3.0, P, replace(wc, C_star=0.8), lb)
    k = P.q + 0.2
    th = lb.theta_exp
    assert T2 / T1 == pytest.approx(2 ** (-th * k * P.p / (P.p - th * k)), rel=1e-12)
    # s = 0 removes the diameter factor
    T3 = blowup_lower_bound_T28(3.0, P, wc, replace(lb, diam=7.0))
    assert T3 == pytest.approx(T1, rel=1e-14)
    best = best_lower_bound(3.0, P, replace(wc, C_star=3.0))
    assert best is not None and np.isfinite(best[0]) and best[0] > 0
    assert 0 < best[1].alpha and P.q + best[1].alpha < P.p * (1 + 2 / P.N)
    assert best[0] >= blowup_lower_bound_T28(3.0, P, replace(wc, C_star=3.0),
                                             lower_bound_params(P, best[1].alpha))
    assert best_lower_bound(3.0, Params(2, 3.4, 3, 0), wc) is None


def test_decay_envelope_examples(base_params, base_constants):
    wc = base_constants
    t = np.array([0.0, 0.3, 1.0])
    env = decay_envelope(base_params, wc, 2.0, 0.0, t)
    np.testing.assert_allclose(env, 2.0 * np.exp(-2 / wc.C_tilde * t), rtol=1e-14)
    env = decay_envelope(base_params, wc, 2.0, 0.5 * wc.d_alpha, t)
    assert env[0] == 2.0 and np.all(np.diff(env) < 0)
    P3 = Params(3, 4, 4, 1)
    wc3 = replace(wc, params=P3, C_tilde=1.0)
    assert decay_envelope(P3, wc3, 0.5, 0.0, 1.0) == pytest.approx(1 / 8, abs=1e-14)
    assert decay_envelope(P3, wc3, 0.5, 0.0, 0.0) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(HypothesisError):
        decay_envelope(base_params, wc, 1.0, wc.d_alpha, t)
    with pytest.raises(HypothesisError):
        decay_envelope(base_params, wc, 1.0, -0.1, t)


def test_log_inequalities():
    rep = verify_log_inequalities(1_000_000, seed=3)
    assert rep["violations"] == 0 and rep["max_slack"] >= 0
    for p, mu in ((2.0, 1.0), (3.5, 0.3), (0.7, 4.0)):
        lhs, rhs = log_inequality_sides(math.exp(1 / mu), p, mu)
        assert lhs == pytest.approx(rhs, rel=1e-12)
        lhs, rhs = log_inequality_sides(math.exp(-1 / p), p, mu)
        assert lhs == pytest.approx(rhs, rel=1e-12)
    lhs, rhs = log_inequality_sides(1.0, 2.0, 1.0)
    assert lhs == 0 < rhs
    lhs, rhs = log_inequality_sides(math.e, 2.0, 1.0)
    assert lhs == pytest.approx(math.e**2, rel=1e-14) and rhs == pytest.approx(lhs, rel=1e-14)


@pytest.mark.parametrize("theta,exact", [(0.5, None), (1.0, 1.0), (2.0, 0.5)])
def test_concavity_oracle(theta, exact):
    t2, obs = concavity_blowup_oracle(theta, 1.0, 1.0)
    assert t2 == pytest.approx(1 / theta)
    assert obs <= t2 * (1 + 1e-3)
    if exact is not None:
        assert obs == pytest.approx(exact, abs=1e-3)
    t2b, _ = concavity_blowup_oracle(theta, 1.0, 2.0)
    assert t2b == pytest.approx(t2 / 2)


def test_hardy_sobolev_suite(base_params, base_grid):
    rep = verify_hardy_sobolev(base_params, base_grid, 8, seed=1)
    assert rep["bounded"] and rep["scale_drift"] < 1e-12


def test_check_zero_data(base_params, base_grid, base_constants):
    u = profile(base_grid, "power", 0.0)
    tr = run(u, base_params, SolverConfig(1e-2, 0.1))
    assert check_trajectory(tr, base_params, base_constants) == []


def test_check_negative_energy_run(base_params, base_grid, base_constants):
    u = profile(base_grid, "eigen", 20.0)
    assert evaluate(u, base_params).J < 0
    tr = run(u, base_params, SolverConfig(1e-3, 2.0, monitor_stride=10))
    reps = check_trajectory(tr, base_params, base_constants)
    ids = [r.theorem_id for r in reps]
    assert ids[0] == "T2.5" and set(ids) <= {"T2.5", "T2.6", "T2.7", "T2.8"}
    assert all(r.passed for r in reps)


def test_check_decay_run(base_params, base_grid, base_constants, base_d):
    from plaplog.nehari import classify
    u = profile(base_grid, "eigen", 1.0)
    assert classify(u, base_params, base_d).label == "inside_W"
    tr = run(u, base_params, SolverConfig(1e-3, 1.0, monitor_stride=5))
    reps = check_trajectory(tr, base_params, base_constants)
    assert [r.theorem_id for r in reps] == ["T2.3_decay"]
    assert reps[0].hypotheses_met and reps[0].passed


def test_inconclusive_when_horizon_short(base_params, base_grid, base_constants):
    u = profile(base_grid, "eigen", 20.0)
    tr = run(u, base_params, SolverConfig(1e-3, 0.01))
    rep = check_trajectory(tr, base_params, base_constants)[0]
    assert rep.theorem_id == "T2.5" and rep.passed is None
