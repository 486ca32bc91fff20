import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from talbot.gauss import (
    MAX_MODULUS,
    NotCoprimeError,
    gamma_sum,
    gamma_via_cases,
    gauss_sum,
    gauss_sums,
)


def gamma_mp(p, q, m):
    """Independent high-precision summation, straight from the defining exponent."""
    mpmath.mp.dps = 30
    total = mpmath.mpc(0)
    half_p = mpmath.mpf(p) / 2
    shift = mpmath.mpf(q * (p % 2)) / 2
    for r in range(q):
        total += mpmath.expj(2 * mpmath.pi * ((shift + m) * r - half_p * r * r) / q)
    return complex(total)


@pytest.mark.parametrize(
    "a, b, c, expected",
    [
        (1, 0, 1, 1),
        (1, 0, 2, 0),
        (1, 1, 2, 2),
        (1, 0, 4, 2 + 2j),
        (1, 0, 3, 1j * math.sqrt(3)),
        (1, 0, 5, math.sqrt(5)),
        (2, 0, 5, -math.sqrt(5)),
    ],
)
def test_gauss_sum_known_values(a, b, c, expected):
    assert abs(gauss_sum(a, b, c) - expected) < 1e-12


def test_gauss_sum_rejects_bad_modulus():
    with pytest.raises(ValueError, match="modulus"):
        gauss_sum(1, 0, 0)
    with pytest.raises(ValueError, match="cap"):
        gauss_sum(1, 0, MAX_MODULUS + 1)


@pytest.mark.parametrize("p, q, m", [(1, 3, 0), (1, 2, 1), (3, 7, 4), (-5, 12, 11), (4, 9, 2), (0, 1, 0)])
def test_gamma_matches_high_precision(p, q, m):
    assert abs(gamma_sum(p, q, m) - gamma_mp(p, q, m)) < 1e-12


def test_gamma_small_cases():
    assert gamma_sum(0, 1, 0) == pytest.approx(1)
    # p = 1, q = 2: r = 0, 1 with exponent (1/2 + m) r - r^2 / 4 over 2
    assert gamma_sum(1, 2, 1) == pytest.approx(gamma_via_cases(1, 2, 1), abs=1e-12)
    assert abs(gamma_sum(1, 3, 0)) == pytest.approx(math.sqrt(3))


@pytest.mark.parametrize("p, q", [(2, 4), (0, 2), (3, 9), (-6, 15)])
def test_gamma_rejects_non_coprime(p, q):
    with pytest.raises(NotCoprimeError):
        gamma_sum(p, q, 0)
    with pytest.raises(NotCoprimeError):
        gamma_via_cases(p, q, 0)


def test_gamma_rejects_bad_q():
    with pytest.raises(ValueError):
        gamma_sum(1, 0, 0)


coprime_pq = st.tuples(st.integers(-20, 20), st.integers(1, 50)).filter(lambda t: math.gcd(abs(t[0]), t[1]) == 1)


@given(coprime_pq, st.integers(-100, 100))
def test_gamma_modulus_property(pq, m):
    p, q = pq
    assert abs(abs(gamma_sum(p, q, m)) - math.sqrt(q)) < 1e-10


@given(coprime_pq, st.integers(-100, 100))
def test_cases_agree_with_summation(pq, m):
    p, q = pq
    assert abs(gamma_via_cases(p, q, m) - gamma_sum(p, q, m)) < 1e-10


@given(coprime_pq.filter(lambda t: t[0] % 2 == 0), st.integers(-50, 50))
def test_gamma_q_periodic_in_m_for_even_p(pq, m):
    p, q = pq
    assert abs(gamma_sum(p, q, m + q) - gamma_sum(p, q, m)) < 1e-10


@given(coprime_pq, st.integers(-50, 50))
def test_gamma_2q_periodic_in_m(pq, m):
    p, q = pq
    assert abs(gamma_sum(p, q, m + 2 * q) - gamma_sum(p, q, m)) < 1e-10


@settings(max_examples=200)
@given(st.integers(-200, 200), st.integers(-200, 200), st.integers(0, 49).map(lambda k: 2 * k + 1))
def test_odd_modulus_magnitude(a, b, c):
    if math.gcd(a, c) != 1:
        return
    assert abs(abs(gauss_sum(a, b, c)) - math.sqrt(c)) < 1e-10


@given(st.integers(1, 30), st.integers(1, 30), st.integers(-10, 10), st.integers(-10, 10))
def test_multiplicativity(c, d, a, b):
    if math.gcd(c, d) != 1 or math.gcd(a, c * d) != 1:
        return
    lhs = gauss_sum(a, b, c * d)
    rhs = gauss_sum(a * c, b, d) * gauss_sum(a * d, b, c)
    assert abs(lhs - rhs) < 1e-10


def test_gauss_sum_reduces_exponents_exactly():
    # huge coefficients must give the same phases as their residues
    assert gauss_sum(10**15 + 1, 10**12, 7) == pytest.approx(gauss_sum((10**15 + 1) % 7, 10**12 % 7, 7), abs=1e-12)
    assert cmath.isclose(gamma_sum(1, 3, 10**9), gamma_sum(1, 3, 10**9 % 6), abs_tol=1e-12)


@given(st.integers(-50, 50), st.lists(st.integers(-100, 100), min_size=1, max_size=8), st.integers(1, 60))
def test_batched_sums_match_scalar(a, bs, c):
    batch = gauss_sums(a, bs, c)
    assert np.allclose(batch, [gauss_sum(a, b, c) for b in bs], atol=1e-12)
