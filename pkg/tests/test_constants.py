import json
import math

import numpy as np
import pytest

from plaplog.constants import (WellConstants, alpha_grid, alpha_sweep, c_tilde,
                               estimate_embedding_constant, estimate_hardy_constant,
                               hardy_sobolev_ratio, r_alpha, r_star, refinement_prefixes,
                               sigma_alpha, trial_profile)
from plaplog.domain import Params, RadialField, eigen_profile, grad_norm_p, lq_norm, make_grid
from plaplog.errors import ConfigurationError, DomainError

P23 = Params(2, 2.5, 3, 1)
P3 = Params(2, 3, 3, 1)


def test_r_alpha_examples():
    assert r_alpha(0.5, 1.0, P23) == pytest.approx(0.5, rel=1e-15)
    assert r_alpha(1.0, 2.0, P3) == pytest.approx(0.25, rel=1e-15)
    k = P3.q + 1.0
    assert r_alpha(1.0, 4.0, P3) / r_alpha(1.0, 2.0, P3) == pytest.approx(
        2 ** (-k / (k - P3.p)))


def test_r_alpha_domain():
    with pytest.raises(DomainError):
        r_alpha(0.0, 1.0, P3)
    with pytest.raises(DomainError):
        r_alpha(P3.alpha_max + 0.1, 1.0, P3)
    with pytest.raises(DomainError):
        r_alpha(1.0, 0.0, P3)


def test_sigma_alpha_examples():
    assert sigma_alpha(0.7, 1.3, P3, 1.0) == pytest.approx(r_alpha(0.7, 1.3, P3))
    assert sigma_alpha(1.0, 1.0, P3, math.e**2) == pytest.approx(math.exp(1 / 3), rel=1e-14)
    small = [sigma_alpha(a, 0.5, P3, 4.0) for a in (1e-2, 1e-4, 1e-8)]
    assert small[0] > small[1] > small[2] and small[2] < 1e-3
    with pytest.raises(DomainError):
        sigma_alpha(4.0, 1.0, P3, 1.0)


def test_c_tilde_examples():
    vol = 4 * math.pi / 3
    assert c_tilde(0.7, Params(2, 3, 4, 2), 5.0) == 0.7
    assert c_tilde(0.7, Params(3, 3.5, 4, 2), vol) == pytest.approx(
        0.7 * vol ** (1.0 - 2 / 3))
    # N=3, s=0, p=3 is outside the parameter range; the formula only needs p, N, s
    from types import SimpleNamespace
    assert c_tilde(0.7, SimpleNamespace(p=3.0, N=3, s=0.0), vol) == pytest.approx(0.7 * vol)
    assert c_tilde(0.7, P3, vol) == pytest.approx(0.7 * vol ** (1 / 3))
    # 2N/(N+2-s) <= 2 <= p for admissible data, so the regime error needs p < 2
    with pytest.raises(DomainError):
        c_tilde(0.7, SimpleNamespace(p=1.5, N=4, s=2.0), vol)
    with pytest.raises(DomainError):
        c_tilde(0.0, P3, vol)


def test_embedding_constant_l2_oracle():
    P = Params(2, 3, 3, 0)
    g = make_grid(P, 100)
    val = estimate_embedding_constant(g, P, 2.0, family_size=8)
    assert val == pytest.approx(1 / math.pi, rel=0.10)
    seed = RadialField(np.abs(eigen_profile(g)), g)
    assert val >= lq_norm(seed, 2.0) / grad_norm_p(seed, 2.0) ** 0.5


def test_embedding_constant_monotone_in_family():
    g = make_grid(P3, 60)
    vals = [estimate_embedding_constant(g, P3, 4.0, n) for n in (1, 2, 4, 8, 16)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_embedding_target_range():
    g = make_grid(P3, 20)
    with pytest.raises(ConfigurationError):
        estimate_embedding_constant(g, P3, 1.5)
    with pytest.raises(ConfigurationError):
        estimate_embedding_constant(g, P3, 6.5)


def test_family_is_nested_and_prefixes():
    g = make_grid(P3, 30)
    np.testing.assert_array_equal(trial_profile(5, g, 2.0), trial_profile(5, g, 2.0))
    for n in (1, 2, 3, 8, 16, 24):
        pre = refinement_prefixes(n)
        assert set(pre) <= set(refinement_prefixes(2 * n))
        assert max(pre) == n


def test_hardy_ratio_examples():
    P = Params(2, 3, 3, 2)
    errs = []
    for M in (40, 80, 160):
        g = make_grid(P, M)
        u = RadialField(1 - g.centers, g)
        ratio = hardy_sobolev_ratio(u, P, 2.0, 2.0)
        errs.append(abs(ratio - 1))
        assert hardy_sobolev_ratio(u.scaled(2.0), P, 2.0, 2.0) == pytest.approx(ratio,
                                                                               rel=1e-13)
    assert errs[-1] < 1e-3 and errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3
    g = make_grid(P, 40)
    u = RadialField(np.cos(g.centers), g)
    gam = 1.5 * 3 / (3 - 1.5)
    plain = lq_norm(u, gam) ** gam / grad_norm_p(u, 1.5) ** (gam / 1.5)
    assert hardy_sobolev_ratio(u, P, 0.0, 1.5) == pytest.approx(plain, rel=1e-12)
    with pytest.raises(DomainError):
        hardy_sobolev_ratio(RadialField(np.zeros(40), g), P, 2.0, 2.0)
    with pytest.raises(DomainError):
        hardy_sobolev_ratio(u, P, 2.0, 3.0)


def test_hardy_instance_is_scale_invariant():
    for s in (0.0, 1.0, 2.0):
        P = Params(2, 3, 3, s)
        n = 2 * 3 / (3 + 2 - s)
        g = make_grid(P, 30)
        u = RadialField(1 - g.centers**2, g)
        a = hardy_sobolev_ratio(u, P, s, n)
        assert hardy_sobolev_ratio(u.scaled(-3.5), P, s, n) == pytest.approx(a, rel=1e-12)


def test_hardy_estimate_monotone():
    g = make_grid(P3, 40)
    vals = [estimate_hardy_constant(g, P3, n) for n in (1, 2, 4, 8)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_alpha_grid():
    a = alpha_grid(P3, 32)
    assert a[0] == pytest.approx(1e-3) and a[-1] == pytest.approx(P3.alpha_max)
    assert alpha_grid(P3, 1).tolist() == [P3.alpha_max]


def test_r_star_one_point_and_max():
    g = make_grid(P3, 30)
    rs, a = r_star(P3, g, alpha_samples=1, family_size=4)
    sw = alpha_sweep(P3, g, 1, 4)
    assert rs == pytest.approx(r_alpha(a, sw.B[0], P3))
    sw = alpha_sweep(P3, g, 8, 4)
    rs, a = r_star(P3, g, 8, 4)
    assert np.all(rs >= sw.r)


@pytest.mark.slow
def test_r_star_dense_sampling():
    P = Params(2, 3, 4, 0)
    g = make_grid(P, 32)
    coarse = r_star(P, g, 16, 4)[0]
    dense = r_star(P, g, 256, 4)[0]
    assert coarse == pytest.approx(dense, rel=0.05)


def test_well_constants_invariants(base_params, base_constants):
    wc, P = base_constants, base_params
    p, q = P.p, P.q
    assert 0 < wc.alpha <= P.alpha_max
    assert np.all(wc.r_star >= wc.r_values)
    assert 0 < wc.r_star <= wc.r_sup
    assert wc.M_depth == (q - p) / (p * q) * wc.r_star**p
    assert wc.C1 == wc.C_tilde / 2
    assert wc.C2 == pytest.approx(p * q / (q - p) * wc.C_tilde / 2, rel=1e-15)
    assert wc.d_alpha == pytest.approx(wc.at_alpha(wc.alpha)[1])


def test_conservative_direction(base_constants):
    wc = base_constants
    c = wc.conservative()
    assert c.inflated and c.conservative() is c
    np.testing.assert_allclose(c.B_values, 1.25 * wc.B_values, rtol=1e-15)
    assert c.C_tilde == pytest.approx(1.25 * wc.C_tilde)
    assert c.C_star == pytest.approx(1.25 * wc.C_star)
    assert c.M_depth < wc.M_depth and c.r_star < wc.r_star


def test_constants_table(base_constants):
    doc = json.loads(base_constants.to_json())
    names = {r["name"] for r in doc["constants"]}
    assert {"B_alpha", "kappa_q", "C_star", "C_hardy", "C_tilde", "r_star", "M_depth",
            "C1", "C2"} <= names
    assert len(doc["alpha_sweep"]["alpha"]) == 32
    text = base_constants.to_text()
    assert "M_depth" in text and "1.25" in text


def test_from_estimates_roundtrip(base_params, base_constants):
    wc = base_constants
    again = WellConstants.from_estimates(base_params, wc.alphas, wc.B_values, wc.kappa_q,
                                         wc.C_star, wc.C_hardy, wc.volume)
    assert again.r_star == wc.r_star and again.C_tilde == wc.C_tilde
