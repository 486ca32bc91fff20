"""Quadratic Gauss sums and the revival weights Gamma(p, q; m).

Every exponent is reduced to an exact integer residue before it is turned
into a phase, so magnitudes such as ``|G(a, b, c)| = sqrt(c)`` hold to
round-off in the final summation only.
"""

import math

import numpy as np
from sympy import jacobi_symbol

MAX_MODULUS = 10**6


class NotCoprimeError(ValueError):
    """Raised when (p, q) do not form a reduced fraction."""


def _check_modulus(c):
    if c < 1:
        raise ValueError(f"modulus must be >= 1, got {c}")
    if c > MAX_MODULUS:
        raise ValueError(f"modulus {c} exceeds cap {MAX_MODULUS}")


def check_coprime(p, q):
    if q < 1:
        raise ValueError(f"q must be a positive integer, got {q}")
    if math.gcd(abs(p), q) != 1:
        raise NotCoprimeError(f"p={p} and q={q} are not coprime")


def _phase_sum(residues, modulus):
    return complex(np.exp(2j * np.pi * (residues / modulus)).sum())


def gauss_sum(a: int, b: int, c: int) -> complex:
    """Direct c-term sum of exp(2 pi i (a r^2 + b r) / c)."""
    _check_modulus(c)
    r = np.arange(c, dtype=np.int64)
    # r^2 < 10^12 and the residues stay below c, so nothing overflows int64
    k = ((a % c) * (r * r % c) + (b % c) * r) % c
    return _phase_sum(k, c)


def gauss_sums(a: int, b, c: int) -> np.ndarray:
    """:func:`gauss_sum` for an array of linear coefficients ``b`` at once."""
    _check_modulus(c)
    b = np.atleast_1d(np.asarray(b, dtype=np.int64))
    r = np.arange(c, dtype=np.int64)
    k = ((a % c) * (r * r % c) + np.multiply.outer(b % c, r)) % c
    return np.exp(2j * np.pi * (k / c)).sum(axis=1)


def gamma_sum(p: int, q: int, m: int) -> complex:
    """Revival weight Gamma(p, q; m) by direct summation over r in [0, q).

    The exponent ((q (p mod 2) / 2 + m) r - (p/2) r^2) / q is written over
    the common denominator 2q, with ``p mod 2`` taken in {0, 1}.
    """
    check_coprime(p, q)
    _check_modulus(2 * q)
    two_q = 2 * q
    r = np.arange(q, dtype=np.int64)
    lin = (q * (p % 2) + 2 * m) % two_q
    k = (lin * r - (p % two_q) * (r * r % two_q)) % two_q
    return _phase_sum(k, two_q)


def _gauss_odd_closed(a, b, c):
    """G(a, b, c) for odd c and gcd(a, c) = 1, by completing the square.

    G(a, 0, c) = (a/c) eps_c sqrt(c) with eps_c = 1 or i as c = 1 or 3 mod 4.
    """
    assert c % 2 == 1 and math.gcd(a, c) == 1
    if c == 1:
        return 1.0 + 0j
    shift = (b * pow(2 * a, -1, c)) % c
    const = (-a * shift * shift) % c
    eps = 1.0 if c % 4 == 1 else 1j
    return int(jacobi_symbol(a % c, c)) * eps * math.sqrt(c) * np.exp(2j * np.pi * const / c)


def _gauss_quadratic_closed(a, c):
    """G(a, 0, c) for c = 0 mod 4 and odd a: (c/|a|)(1 + i^|a|) sqrt(c), conjugated for a < 0."""
    assert c % 4 == 0 and a % 2 == 1
    aa = abs(a)
    value = int(jacobi_symbol(c, aa)) * (1 + 1j**(aa % 4)) * math.sqrt(c)
    return value.conjugate() if a < 0 else value


def _gauss_mod2(a, b):
    return 2.0 + 0j if (a + b) % 2 == 0 else 0j


def gamma_via_cases(p: int, q: int, m: int) -> complex:
    """Gamma(p, q; m) through the classical reductions rather than summation.

    * p even (so q odd): G(-p/2, m, q).
    * p odd, q odd: G(-p, 2m+q, 2q) / 2 split by multiplicativity into
      G(-pq, 2m+q, 2) G(-2p, 2m+q, q) / 2.
    * p odd, q even: complete the square with p^{-1} mod 2q, leaving
      exp(2 pi i p^{-1} ((2m+q)/2)^2 / 2q) G(-p, 0, 2q) / 2.

    Each Gauss sum is taken from its closed form, so this route shares no
    summation with :func:`gamma_sum`.
    """
    check_coprime(p, q)
    if p % 2 == 0:
        return complex(_gauss_odd_closed(-p // 2, m, q))
    b = 2 * m + q
    if q % 2 == 1:
        return complex(0.5 * _gauss_mod2(-p * q, b) * _gauss_odd_closed(-2 * p, b, q))
    two_q = 2 * q
    try:
        p_inv = pow(p, -1, two_q)
    except ValueError as exc:  # pragma: no cover - excluded by coprimality
        raise AssertionError(f"{p} has no inverse mod {two_q}") from exc
    half_b = b // 2
    const = (p_inv * half_b * half_b) % two_q
    phase = np.exp(2j * np.pi * const / two_q)
    return complex(0.5 * phase * _gauss_quadratic_closed(-p, two_q))
