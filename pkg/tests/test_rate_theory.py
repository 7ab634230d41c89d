import math

import numpy as np
import pytest

from helpers import series_favard
from uno import rate_theory as rt


def test_favard_matches_series_oracle():
    for n in range(9):
        assert rt.favard_constant(n) == pytest.approx(series_favard(n), abs=1e-12)


def test_favard_closed_forms():
    assert rt.favard_constant(0) == 1.0
    assert rt.favard_constant(1) == pytest.approx(math.pi / 2, abs=1e-12)
    assert rt.favard_constant(2) == pytest.approx(math.pi**2 / 8, abs=1e-12)
    assert rt.favard_constant(3) == pytest.approx(math.pi**3 / 24, abs=1e-12)


def test_favard_converges_toward_limit():
    limit = 4 / math.pi
    ks = [rt.favard_constant(n) for n in range(20)]
    gaps = [abs(k - limit) for k in ks]
    assert gaps[19] < 1e-8
    # distance to the limit shrinks along both parity subsequences
    assert all(gaps[n + 2] < gaps[n] for n in range(1, 18))


def test_favard_rejects_negative():
    with pytest.raises(ValueError):
        rt.favard_constant(-1)


def test_excess_ratio_examples():
    assert rt.excess_ratio(3, 3) == pytest.approx(1.0 / rt.favard_constant(3), rel=1e-14)
    # numerator forced to K_0 = 1 whenever l == N
    for N in (1, 2, 5):
        assert rt.excess_ratio(N, N) == pytest.approx(1.0 / rt.favard_constant(N), rel=1e-14)
    oracle_23 = series_favard(1) / series_favard(3)
    assert rt.excess_ratio(2, 3) == pytest.approx(oracle_23, rel=1e-12)
    assert rt.excess_ratio(1, 1) == pytest.approx(2 / math.pi, rel=1e-12)


def test_excess_ratio_rejects_bad_orders():
    with pytest.raises(ValueError):
        rt.excess_ratio(4, 3)
    with pytest.raises(ValueError):
        rt.excess_ratio(0, 3)


def test_uno_rate_bound_reference_point():
    # direct formula evaluation with series-oracle constants
    e_23 = series_favard(1) / series_favard(3)
    expected = 1.0 / (math.pi * math.e) * (1.0 / (2 * 255 * e_23)) ** 0.5
    got = rt.uno_rate_bound(1.0, 255.0, 1.0, 2, 3)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.00470, abs=5e-6)


def test_uno_rate_bound_linear_in_lambda_when_l_is_1():
    base = rt.uno_rate_bound(1.0, 10.0, 1.0, 1, 3)
    assert rt.uno_rate_bound(2.0, 10.0, 1.0, 1, 3) == pytest.approx(2 * base, rel=1e-12)


def test_uno_rate_bound_h_cancels_pi_e():
    expected = 1.0 / (2.0 * rt.excess_ratio(1, 1))
    assert rt.uno_rate_bound(1.0, 1.0, math.pi * math.e, 1, 1) == pytest.approx(
        expected, rel=1e-12)


def test_classic_rate_bound():
    e_23 = series_favard(1) / series_favard(3)
    expected = 1.0 / (math.pi * math.e) * (1.0 / (255 * e_23)) ** 0.5
    assert rt.classic_rate_bound(1.0, 255.0, 1.0, 2, 3) == pytest.approx(expected, rel=1e-12)
    assert rt.classic_rate_bound(1.0, 255.0, 1.0, 2, 3) == pytest.approx(0.00665, abs=5e-6)
    # algebraic identity: classic = uno * 2^(1/l)
    rng = np.random.default_rng(7)
    for _ in range(200):
        lam = rng.uniform(0.1, 10)
        beta = rng.uniform(1, 500)
        h = rng.uniform(0.1, 5)
        N = int(rng.integers(1, 6))
        l = int(rng.integers(1, N + 1))
        uno_b = rt.uno_rate_bound(lam, beta, h, l, N)
        classic = rt.classic_rate_bound(lam, beta, h, l, N)
        assert classic == pytest.approx(uno_b * 2 ** (1 / l), rel=1e-12)
        assert uno_b < classic
    assert rt.classic_rate_bound(1.0, 7.0, 1.0, 1, 2) == pytest.approx(
        2 * rt.uno_rate_bound(1.0, 7.0, 1.0, 1, 2), rel=1e-14)


def test_difference_bound():
    # base collapses to 1 when T = h/(pi e)
    h = 2.0
    T = h / (math.pi * math.e)
    for l, N in ((1, 3), (2, 3), (3, 3)):
        assert rt.difference_bound(T, h, l, N, 10.0) == pytest.approx(
            rt.excess_ratio(l, N) * 10.0, rel=1e-12)
    e_23 = series_favard(1) / series_favard(3)
    expected = (0.005 * math.pi * math.e) ** 2 * e_23 * 255
    assert rt.difference_bound(0.005, 1.0, 2, 3, 255.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.566, abs=1e-3)
    assert rt.difference_bound(0.005, 1.0, 2, 3, 0.0) == 0.0


def test_difference_bound_monotone():
    rng = np.random.default_rng(3)
    for _ in range(100):
        h = rng.uniform(0.5, 2)
        T1, T2 = sorted(rng.uniform(0.001, 0.1, 2))
        g1, g2 = sorted(rng.uniform(0.1, 300, 2))
        assert rt.difference_bound(T1, h, 2, 3, g1) <= rt.difference_bound(T2, h, 2, 3, g1)
        assert rt.difference_bound(T1, h, 2, 3, g1) <= rt.difference_bound(T1, h, 2, 3, g2)


def test_error_budget():
    assert rt.error_budget(1.0, 2) == 0.125
    assert rt.error_budget(1.0, 1) == 0.25
    assert rt.error_budget(2.0, 3) == 0.125
    with pytest.raises(ValueError):
        rt.error_budget(1.0, 0)
    with pytest.raises(ValueError):
        rt.error_budget(-1.0, 2)


def test_certify_reference_configuration():
    cert = rt.certify(1.0, 255.0, 1.0, 2, 3, 0.005)
    # the bound is sufficient, not necessary: this configuration runs anyway
    assert not cert.satisfied
    assert cert.t_max_uno == pytest.approx(cert.t_max_classic / 2**0.5, rel=1e-14)
    assert cert.error_budget == 0.125
    assert cert.to_dict() == {
        "t_max_uno": cert.t_max_uno,
        "t_max_classic": cert.t_max_classic,
        "error_budget": 0.125,
        "satisfied": False,
    }


def test_certify_boundary_is_strict():
    bound = rt.uno_rate_bound(1.0, 255.0, 1.0, 2, 3)
    assert rt.certify(1.0, 255.0, 1.0, 2, 3, bound / 2).satisfied
    assert not rt.certify(1.0, 255.0, 1.0, 2, 3, bound).satisfied


def test_certify_scale_invariance():
    rng = np.random.default_rng(11)
    for _ in range(100):
        lam = rng.uniform(0.1, 5)
        beta = rng.uniform(1, 400)
        T = rng.uniform(0.0001, 0.05)
        c = rng.uniform(0.01, 100)
        a = rt.certify(lam, beta, 1.0, 2, 3, T).satisfied
        b = rt.certify(c * lam, c * beta, 1.0, 2, 3, T).satisfied
        assert a == b


def test_domain_errors():
    for bad in ((0.0, 255.0), (-1.0, 255.0), (1.0, 0.0)):
        with pytest.raises(ValueError):
            rt.uno_rate_bound(bad[0], bad[1], 1.0, 2, 3)
    with pytest.raises(ValueError):
        rt.difference_bound(0.0, 1.0, 2, 3, 255.0)
    with pytest.raises(ValueError):
        rt.certify(1.0, 255.0, 1.0, 2, 3, 0.0)
