import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import alpha_composite, beta_direct
from polaron2d.errors import BracketError, DomainError
from polaron2d.stability import (
    alpha_M,
    beta_kink,
    beta_u,
    beta_u_auxiliary,
    critical_mass,
    epsilon_max,
    k_error,
    stability_margin,
)


def test_beta_examples():
    assert beta_u(0.0, 1e-4, 2.0) == 1.0
    assert beta_u(1.0, 0.0, 2.0) == pytest.approx(0.8, rel=1e-15)


def test_beta_monotone_in_u():
    u = np.linspace(0, 1, 2001)
    b = np.array([beta_u(x, 0.0, 2.0) for x in u])
    assert np.all(np.diff(b) <= 1e-15)


@settings(max_examples=200, deadline=None)
@given(u=st.floats(0, 1), M=st.floats(0.1, 50), frac=st.floats(0, 0.99))
def test_beta_range_and_auxiliary_form(u, M, frac):
    eps = frac * epsilon_max(M)
    b = beta_u(u, eps, M)
    assert 0 < b <= 1
    assert b == pytest.approx(beta_u_auxiliary(u, eps, M), rel=1e-12)
    assert b == pytest.approx(beta_direct(u, eps, M), rel=1e-14)


def test_beta_domain():
    with pytest.raises(DomainError):
        beta_u(1.5, 0.0, 2.0)
    with pytest.raises(DomainError):
        beta_u(0.0, 0.9, 2.0)


def test_epsilon_ceiling_is_sharp():
    for M in (0.5, 2.0, 10.0):
        e = epsilon_max(M)
        beta_u(0.0, e * (1 - 1e-9), M)
        with pytest.raises(DomainError):
            alpha_M(M, e)


def test_kink_location():
    assert beta_kink(0.0, 2.0) == pytest.approx(1 / 3, abs=1e-14)


def test_alpha_oracle():
    assert alpha_M(2.0, 0.0) == pytest.approx(alpha_composite(2.0), abs=1e-8)


def test_alpha_large_mass_decays():
    vals = [alpha_M(M, 0.0) for M in (10.0, 100.0, 1000.0)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 2e-3


def test_zero_density_sign_flip():
    assert 1.2 / 2.2 - alpha_M(1.2, 0.0) < 0 < 1.25 / 2.25 - alpha_M(1.25, 0.0)


def test_alpha_continuous_in_eps():
    base = alpha_M(2.0, 0.0)
    diffs = [abs(alpha_M(2.0, e) - base) for e in (1e-2, 1e-4, 1e-6)]
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 1e-3


def test_margin_examples():
    assert stability_margin(2.0, 0.0).condition_holds
    assert not stability_margin(1.0, 0.0).condition_holds
    base = stability_margin(2.0, 0.0).margin
    for e in (1e-3, 1e-2):
        assert stability_margin(2.0, e).margin <= base


def test_margin_consistency():
    r = stability_margin(1.7, 0.01)
    assert r.alpha > 0
    assert r.condition_holds == (r.margin >= 0)


def test_critical_mass_zero_density():
    m, (lo, hi) = critical_mass(0.0)
    assert 1.220 <= m <= 1.230
    assert stability_margin(lo).margin < 0 < stability_margin(hi).margin


def test_critical_mass_continuity():
    m0, _ = critical_mass(0.0)
    m1, _ = critical_mass(1e-6)
    assert abs(m1 - m0) < 0.02


def test_critical_mass_quad_refinement():
    a, _ = critical_mass(0.0, quad_tol=1e-10)
    b, _ = critical_mass(0.0, quad_tol=5e-11)
    assert abs(a - b) < 1e-8


def test_margin_single_sign_change():
    Ms = np.linspace(1.0, 2.0, 1000)
    m = np.array([stability_margin(M).margin for M in Ms])
    assert np.count_nonzero(np.diff(np.sign(m))) == 1
    assert np.all(np.diff(m) > 0)


def test_critical_mass_bracket_error():
    with pytest.raises(BracketError):
        critical_mass(0.25)


def test_k_error():
    assert k_error(1.0, math.e) == pytest.approx(3.0, rel=1e-15)
    lg = math.log(1e6)
    hand = 10.0 * (10.0 + math.sqrt(lg) + 0.01 * lg)
    assert k_error(0.01, 1e6) == pytest.approx(hand, rel=1e-12)
    vals = [k_error(0.1, mt) for mt in (1e2, 1e4, 1e8)]
    assert vals[0] < vals[1] < vals[2]
    with pytest.raises(DomainError):
        k_error(0.0, 10.0)
    with pytest.raises(DomainError):
        k_error(0.1, 1.0)
