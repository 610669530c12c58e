import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from glbackward.params import (
    H1,
    L2,
    admissibility_check,
    beta_schedule,
    eps_threshold,
    make_schedule,
    pi_bar,
    q_exponent,
    q_schedule,
    rho_ceiling,
    rho_schedule,
    theoretical_rate_H1,
    theoretical_rate_L2,
)

# a schedule whose three order terms all vanish as n grows
GOOD = dict(alpha0=1.0, delta0=0.5, m0=0.3, m1=0.3, gamma=2.0, mu=1.0, mu0=4.0, a0=0.5, a1=2.0)


# --- beta / rho --------------------------------------------------------------


def test_beta_examples():
    assert beta_schedule([32], 1.0) == pytest.approx(4.0, rel=1e-15)
    assert beta_schedule([1, 1], 0.7) == 1.0
    assert beta_schedule([8, 8], 2.0) == pytest.approx(64 ** (1 / 5), rel=1e-15)


def test_rho_examples():
    assert rho_schedule([32], 1.0, 1.0) == pytest.approx(math.log(4.0), rel=1e-15)
    assert rho_schedule([1, 1, 1], 1.0, 2.0) == 0.0


def test_rho_beta_identity_example():
    assert math.exp(rho_schedule([32], 1.0, 1.0)) == pytest.approx(beta_schedule([32], 1.0), rel=1e-12)


@given(
    st.lists(st.integers(1, 4096), min_size=1, max_size=3),
    st.floats(0.1, 5.0),
    st.floats(0.1, 5.0),
)
def test_growth_identity(n, alpha0, T):
    d = len(n)
    lhs = math.exp(rho_schedule(n, alpha0, T) * T)
    rhs = math.prod(n) ** (alpha0 / (2 * alpha0 + d / 2))
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert lhs == pytest.approx(beta_schedule(n, alpha0) ** alpha0, rel=1e-12)


def test_schedule_preconditions():
    with pytest.raises(ValueError):
        beta_schedule([4], 0.0)
    with pytest.raises(ValueError):
        rho_schedule([4], 1.0, 0.0)


# --- Q -----------------------------------------------------------------------


def test_q_example():
    T = 1.3
    assert q_schedule(math.exp(-6 * T), 0.5, T) == pytest.approx(1 / math.sqrt(2), rel=1e-14)


def test_q_vanishes_as_delta0_tends_to_one():
    qs = [q_schedule(0.01, d0, 1.0) for d0 in (0.9, 0.99, 0.999999)]
    assert qs[0] > qs[1] > qs[2]
    assert qs[2] < 1e-3


@given(st.floats(1e-300, 0.999), st.floats(0.01, 0.99), st.floats(0.1, 10.0), st.sampled_from([L2, H1]))
def test_q_identity(pb, delta0, T, mode):
    q = q_schedule(pb, delta0, T, mode, 0.5, 2.0)
    c = q_exponent(T, mode, 0.5, 2.0)
    assert math.exp(c * q * q) == pytest.approx(pb ** (delta0 - 1), rel=1e-9)


@pytest.mark.parametrize("pb", [1.0, 2.0])
def test_q_rejects_pi_bar_at_least_one(pb):
    with pytest.raises(ValueError):
        q_schedule(pb, 0.5, 1.0)


def test_q_exponents():
    assert q_exponent(2.0, L2) == 12.0
    assert q_exponent(2.0, H1, 0.5, 2.0) == pytest.approx(64.0)
    with pytest.raises(ValueError):
        q_exponent(1.0, H1)
    with pytest.raises(ValueError):
        q_exponent(1.0, "H2")


# --- pi_bar ------------------------------------------------------------------


def test_pi_bar_spot_value():
    beta, rho = 4.0, math.log(4.0)
    first = math.exp(2 * rho) * beta**0.5 * 32.0**-4
    third = math.exp(2 * rho) * beta**-1
    second = rho**-2
    expected = max(first, second, third)
    assert expected == pytest.approx(4.0)
    assert pi_bar([32], beta, rho, 1.0, 1.0, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)


def test_pi_bar_gamma_zero_is_one():
    s = make_schedule([1024], 1e-8, **{**GOOD, "gamma": 0.0})
    assert s.pi_bar == 1.0
    assert math.isnan(s.q)
    assert "pi_bar" in " ".join(admissibility_check(s).reasons)


def test_pi_bar_tends_to_zero():
    vals = [make_schedule([2**k], 1e-8, **GOOD).pi_bar for k in (6, 10, 14, 18, 22)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.05


# --- admissibility -----------------------------------------------------------


def test_admissibility_rho_example_passes():
    s = make_schedule([32], 1e-6, T=1.0, alpha0=1.0, m0=0.3, m1=0.3)
    assert s.rho == pytest.approx(math.log(4))
    assert rho_ceiling(s) == pytest.approx(0.3 * math.log(1e6))
    assert not any(r.startswith("rho bound") for r in admissibility_check(s).reasons)


def test_admissibility_rho_boundary_fails():
    rho = math.log(4)
    eps = math.exp(-(rho - 0.01) / 0.3)  # ceiling = rho - 0.01
    s = make_schedule([32], eps, T=1.0, alpha0=1.0, m0=0.3, m1=0.3)
    assert s.rho == pytest.approx(rho_ceiling(s) + 0.01)
    adm = admissibility_check(s)
    assert not adm.ok
    assert any(r.startswith("rho bound") for r in adm.reasons)


def test_admissibility_reports_every_violation():
    s = make_schedule([64], 0.5, **{**GOOD, "m0": 0.6, "m1": 0.6, "mu0": 1.0, "gamma": 0.0})
    text = " ".join(admissibility_check(s).reasons)
    for name in ("m0+m1", "mu0", "rho bound", "pi_bar", "beta decay", "gamma"):
        assert name in text


def test_noise_term_vanishes_as_eps_tends_to_zero():
    s = [make_schedule([64], eps, **GOOD) for eps in (1e-4, 1e-8, 1e-16)]
    noise = [x.eps / (x.E * x.E0) for x in s]
    assert noise[0] > noise[1] > noise[2]
    assert noise[2] == pytest.approx(1e-16**0.4, rel=1e-12)


@pytest.mark.parametrize("mode", [L2, H1])
@pytest.mark.parametrize("n", [64, 256, 1024])
def test_admissible_below_reported_threshold(n, mode):
    s = make_schedule([n], 1e-3, mode=mode, **GOOD)
    thr = eps_threshold(s)
    assert 0 < thr < 1
    below = make_schedule([n], thr * 0.5, mode=mode, **GOOD)
    assert admissibility_check(below).ok, admissibility_check(below).reasons
    above = make_schedule([n], min(thr * 2, 0.99), mode=mode, **GOOD)
    assert not admissibility_check(above).ok


# --- rates -------------------------------------------------------------------


def oracle_rate(t, s, mode):
    d = len(s.n)
    power = (d + 2) / 2 if mode == H1 else d / 2
    c = 6 * s.T if mode == L2 else 48 * s.T / (s.a1 - s.a0)
    terms = [
        math.exp(2 * s.rho * (s.T - t)) * s.beta**power * math.prod(n ** (-4 * m) for n, m in zip(s.n, s.mu)),
        math.exp(-2 * s.rho * t) * s.rho ** (-2 * s.gamma),
        math.exp(2 * s.rho * (s.T - t)) * s.beta ** (-s.mu0),
    ]
    return math.exp(c * s.q**2) * max(terms) + s.eps / (s.eps**s.m0 * s.eps**s.m1)


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0])
def test_rate_spot_values(t):
    s = make_schedule([1024], 1e-8, **GOOD)
    s_h1 = make_schedule([1024], 1e-8, mode=H1, **GOOD)
    assert theoretical_rate_L2(t, s) == pytest.approx(oracle_rate(t, s, L2), rel=1e-12)
    assert theoretical_rate_H1(t, s_h1) == pytest.approx(oracle_rate(t, s_h1, H1), rel=1e-12)


def test_rate_at_final_time_has_no_growth():
    s = make_schedule([256], 1e-8, **GOOD)
    amp = math.exp(6 * s.T * s.q**2)
    main = max(s.beta**0.5 * 256.0**-4, math.exp(-2 * s.rho * s.T) * s.rho**-4, s.beta**-4)
    assert theoretical_rate_L2(s.T, s) == pytest.approx(amp * main + s.eps**0.4, rel=1e-12)


@given(st.sampled_from([64, 128, 512, 4096]), st.floats(0, 1), st.floats(0, 1))
def test_rate_nonincreasing_in_t(n, a, b):
    s = make_schedule([n], 1e-6, **GOOD)
    lo, hi = sorted((a, b))
    assert theoretical_rate_L2(hi, s) <= theoretical_rate_L2(lo, s) * (1 + 1e-12)
    assert theoretical_rate_H1(hi, s) <= theoretical_rate_H1(lo, s) * (1 + 1e-12)


def test_h1_first_term_is_beta_times_l2():
    from glbackward.params import _order_terms

    s = make_schedule([128, 64], 1e-6, **GOOD)
    l2 = _order_terms(s.n, s.beta, s.rho, s.mu, s.mu0, s.gamma, s.T, 0.3, L2)
    h1 = _order_terms(s.n, s.beta, s.rho, s.mu, s.mu0, s.gamma, s.T, 0.3, H1)
    assert h1[0] == pytest.approx(s.beta * l2[0], rel=1e-14)
    assert h1[1:] == l2[1:]


def test_rate_strictly_decreasing_in_n():
    rates = [theoretical_rate_L2(0.0, make_schedule([n], 1e-8, **GOOD)) for n in (64, 128, 256, 512, 1024)]
    assert all(a > b for a, b in zip(rates, rates[1:])), rates


def test_rate_rejects_time_outside_horizon():
    s = make_schedule([64], 1e-6, **GOOD)
    with pytest.raises(ValueError):
        theoretical_rate_L2(1.5, s)


def test_rate_saturates_instead_of_overflowing():
    s = make_schedule([64], 1e-6, **{**GOOD, "delta0": 1e-9, "gamma": 0.01})
    assert theoretical_rate_H1(0.0, s) >= theoretical_rate_L2(0.0, s)


# --- bookkeeping ---------------------------------------------------------------


@given(st.integers(1, 10**6), st.floats(0.1, 3.0))
def test_nu_equals_rho(n, alpha0):
    s = make_schedule([n], 1e-4, alpha0=alpha0)
    assert s.nu == s.rho


def test_schedule_dict_round_trips_to_json_types():
    import json

    s = make_schedule([16, 8], 1e-4, **GOOD)
    out = json.loads(json.dumps(s.as_dict()))
    assert out["n"] == [16, 8]
    assert out["nu"] == out["rho"]
