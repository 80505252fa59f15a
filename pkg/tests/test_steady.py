import math

import numpy as np
import pytest
from hypothesis import given

from laserstats.errors import NotLasingError, ParameterError
from laserstats.model import LaserParams
from laserstats.oracles import steady_by_root
from laserstats.steady import (
    derived_params,
    m_saturation,
    solve_steady,
    threshold_gamma,
    threshold_pump,
)

from .conftest import lasing_params

FOUR = dict(N=100_000, alpha=6.32, p_d=632.0)


def four(**kw):
    args = dict(FOUR, P=316.0, p_u=316.0)
    args.update(kw)
    return LaserParams("Four4", **args)


def test_derived_params_definitions():
    p = LaserParams("Four4", 1000, P=3.0, ell=1, p_u=5.0, p_d=7.0, alpha=2.0)
    dp = derived_params(p)
    assert dp.scriptN == 500.0
    assert dp.scriptP == pytest.approx(1 / (1 / 3 + 2 / 7 + 2 / 5), rel=1e-15)
    p = LaserParams("Lambda3", 1000, P=3.0, ell=1, p_d=7.0, alpha=2.0)
    assert derived_params(p).scriptP == pytest.approx(1 / (1 / 3 + 3 / 7), rel=1e-15)
    p = LaserParams("V3", 1000, P=3.0, ell=1, p_u=5.0, alpha=2.0)
    dp = derived_params(p)
    assert dp.scriptN == 250.0
    assert dp.scriptP == pytest.approx(1 / (1 / 3 + 3 / 10), rel=1e-15)


@given(lasing_params())
def test_m_is_larger_root_of_quadratic(p):
    dp = derived_params(p)
    m = solve_steady(p).m
    roots = np.roots([1.0, -dp.scriptB, -dp.scriptP * dp.scriptN])
    assert m >= 0
    assert m == pytest.approx(max(roots.real), rel=1e-9)


def test_vanishing_pump_gives_no_photons():
    p = four(P=1e-12, gamma=3.0)
    dp = derived_params(p)
    assert dp.scriptB == pytest.approx(-1 - 3.0, rel=1e-6)
    m = solve_steady(p).m
    assert m == pytest.approx(dp.scriptP * dp.scriptN / -dp.scriptB, rel=1e-6)
    assert m < 1e-8


def test_reference_photon_number_four_level():
    p = four()
    # closed form evaluated independently of the library
    NN = 1e5 / 6.32
    PP = 1 / (1 / 316 + 2 / 632 + 1 / 316)
    B = PP * (NN - 1 + 1 / 632) - 1
    m_ref = 0.5 * (B + math.sqrt(B * B + 4 * PP * NN))
    ss = solve_steady(p)
    assert ss.m == pytest.approx(m_ref, rel=1e-12)
    assert ss.m == pytest.approx(1.67e6, rel=5e-3)


@given(lasing_params())
def test_steady_state_against_root_oracle(p):
    ss = solve_steady(p)
    ref = steady_by_root(p)
    assert ss.m == pytest.approx(ref.m, rel=1e-8)
    np.testing.assert_allclose(ss.populations, ref.populations, rtol=0, atol=1e-8 * p.N)


@given(lasing_params())
def test_balance_and_conservation(p):
    ss = solve_steady(p)
    n = ss.populations
    assert n.sum() == pytest.approx(p.N, rel=1e-12)
    assert n.min() >= -1e-9 * p.N
    assert ss.balance_residual() < 1e-10
    assert ss.Q == pytest.approx(p.alpha * ss.m, rel=1e-15)
    unused = [k for k in range(4) if k not in p.scheme.levels]
    assert all(n[k] == 0 for k in unused)
    assert (ss.U is None) == (p.scheme.value == "Lambda3")
    assert (ss.D is None) == (p.scheme.value == "V3")


@given(lasing_params(scheme="Lambda3"))
def test_lambda_equals_four_level_without_upper_delay(p):
    lam = p.replace(ell=0)
    f = lam.replace(scheme="Four4", p_u=math.inf)
    a, b = solve_steady(lam), solve_steady(f)
    assert a.m == pytest.approx(b.m, rel=1e-12)
    np.testing.assert_allclose(a.populations[:3], b.populations[:3], rtol=1e-12, atol=1e-12 * p.N)


@given(lasing_params())
def test_photon_number_grows_with_pump(p):
    grid = np.geomspace(1e-3, 1e4, 60)
    ms = [solve_steady(p.replace(P=x)).m for x in grid]
    assert np.all(np.diff(ms) >= -1e-9 * np.abs(ms[1:]))


def test_steady_needs_pump_and_decays():
    with pytest.raises(ParameterError):
        solve_steady(four(P=0.0))
    with pytest.raises(ParameterError):
        solve_steady(four(p_d=0.0))


def test_large_m_variant_clamps_gain():
    p = four(gamma=6.32)
    ss = solve_steady(p, large_m=True)
    n = ss.populations
    assert n[2] - n[1] == pytest.approx(p.alpha, rel=1e-9)
    assert ss.inversion == p.alpha
    assert ss.balance_residual() < 1e-10


def test_threshold_gamma_formulas():
    p = four(N=632, alpha=6.32)  # script N = 100
    assert threshold_gamma(p) == pytest.approx(99 / (101 / 632 + 1 / 316), rel=1e-14)
    assert threshold_gamma(four(N=10, alpha=10.0)) == 0.0
    v = LaserParams("V3", 100, P=1.0, p_u=632.0, alpha=6.32)
    NN = 100 / (2 * 6.32)
    assert threshold_gamma(v) == pytest.approx((2 * NN - 1) * 632, rel=1e-14)
    lam = LaserParams("Lambda3", 100, P=1.0, ell=1, p_d=50.0, alpha=2.0)
    assert threshold_gamma(lam) == pytest.approx((50 - 2) * 50 / 51, rel=1e-14)


def test_gamma_above_bound_barely_lases():
    p = four()
    g = threshold_gamma(p)
    assert g == pytest.approx((1e5 / 6.32 - 1) / ((1e5 / 6.32 + 1) / 632 + 1 / 316), rel=1e-14)
    assert 6325 > g
    for x in np.geomspace(1e-3, 1e3, 13):
        assert solve_steady(four(P=x * 632, gamma=6325.0)).m < 1.0
    assert threshold_pump(four(gamma=6325.0)) == math.inf


def test_threshold_pump_separates_lasing():
    p = LaserParams("V3", 100, P=1.0, p_u=632.0, gamma=6.32, alpha=6.32)
    pth = threshold_pump(p)
    assert 0 < pth < math.inf
    assert solve_steady(p.replace(P=1.01 * pth), large_m=True).m > 0
    with pytest.raises(NotLasingError):
        solve_steady(p.replace(P=0.99 * pth), large_m=True)


def test_threshold_pump_zero_without_spontaneous_decay():
    assert threshold_pump(four(gamma=0.0)) == 0.0


def test_saturation_limit():
    p = four(gamma=0.0)
    ms = m_saturation(p)
    NN = 1e5 / 6.32
    assert ms == pytest.approx((NN - 1) * 632 / (632 / 316 + 2), rel=1e-14)
    assert ms == pytest.approx(2.50e6, rel=1e-3)
    assert solve_steady(four(P=1e6)).m == pytest.approx(ms, rel=1e-3)
    assert m_saturation(four(gamma=632.0)) == -632.0


def test_saturation_only_for_four_level():
    with pytest.raises(ParameterError):
        m_saturation(LaserParams("V3", 100, P=1.0, p_u=1.0))


@pytest.mark.parametrize("gamma", [0.0, 6.32, 63.2, 632.0])
def test_coherent_and_incoherent_curves_coincide_at_matched_upper_rate(gamma):
    # the two pump types share script P when (1 + ell) / p_u is equal
    for x in np.geomspace(1e-3, 1e2, 11):
        a = solve_steady(four(P=x * 632, p_u=316.0, ell=0, gamma=gamma)).m
        b = solve_steady(four(P=x * 632, p_u=632.0, ell=1, gamma=gamma)).m
        assert b == pytest.approx(a, rel=1e-12)


@pytest.mark.xfail(strict=True, reason="with p_u=949 the coherent curve lies up to 20% above; see notes")
def test_coherent_curve_with_optimum_upper_rate_superimposes():
    for x in np.geomspace(1e-3, 1e2, 11):
        a = solve_steady(four(P=x * 632, p_u=316.0, ell=0)).m
        b = solve_steady(four(P=x * 632, p_u=949.0, ell=1)).m
        assert b == pytest.approx(a, rel=1e-2)
