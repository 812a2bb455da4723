import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from pureloss.errors import DomainError
from pureloss.numerics import (LogProb, binary_entropy, binomial_fraction_pmf, ceil_tol,
                               entropy_values, g_entropy, log2_sum, log_binomial,
                               log_binomial_exact)


def g_mp(x):
    mpmath.mp.dps = 50
    x = mpmath.mpf(x)
    if x == 0:
        return mpmath.mpf(0)
    return (x + 1) * mpmath.log(x + 1, 2) - x * mpmath.log(x, 2)


def test_g_entropy_known_values():
    assert g_entropy(0) == 0
    assert g_entropy(1) == 2
    assert g_entropy(2) == pytest.approx(3 * math.log2(3) - 2, abs=1e-12)
    assert g_entropy(2) == pytest.approx(2.754887, abs=1e-6)


@given(st.floats(min_value=1e-12, max_value=1e6))
def test_g_entropy_matches_high_precision(x):
    assert g_entropy(x) == pytest.approx(float(g_mp(x)), rel=1e-12, abs=1e-15)


def test_g_entropy_domain():
    with pytest.raises(DomainError):
        g_entropy(-0.1)


def test_binary_entropy():
    assert binary_entropy(0) == 0
    assert binary_entropy(1) == 0
    assert binary_entropy(0.5) == 1
    assert binary_entropy(0.25) == pytest.approx(0.811278, abs=1e-6)
    with pytest.raises(DomainError):
        binary_entropy(1.5)


def test_entropy_values_bundle():
    ev = entropy_values(1.0, 0.5)
    assert ev.g_value == 2 and ev.h2_value == 1


def test_log_binomial_small():
    assert log_binomial(4, 2).log2_value == pytest.approx(math.log2(6), abs=1e-15)
    assert log_binomial(10, 5).log2_value == pytest.approx(math.log2(252), abs=1e-15)
    assert log_binomial(7, 0).log2_value == 0
    with pytest.raises(DomainError):
        log_binomial(3, 4)


@pytest.mark.parametrize("n,k", [(100, 50), (1000, 333), (5000, 2500), (61, 30)])
def test_log_binomial_large_matches_exact_integer(n, k):
    assert log_binomial(n, k).log2_value == pytest.approx(
        log_binomial_exact(n, k).log2_value, rel=1e-14)


def test_ceil_tol_absorbs_roundoff():
    assert ceil_tol(50 * 1.0) == 50
    assert ceil_tol(3 * 0.1 * 10) == 3  # 3.0000000000000004
    assert ceil_tol(2.5) == 3
    assert ceil_tol(0.0) == 0


def test_logprob_arithmetic():
    a, b = LogProb.from_linear(0.25), LogProb.from_linear(0.5)
    assert (a + b).linear == pytest.approx(0.75, abs=1e-15)
    assert (a * b).linear == pytest.approx(0.125, abs=1e-15)
    assert (b / a).linear == pytest.approx(2.0)
    assert (b ** 3).linear == pytest.approx(0.125)
    z = LogProb.zero()
    assert z.linear == 0 and (z * a).linear == 0 and (z + a).linear == pytest.approx(0.25)
    assert LogProb.one().linear == 1


@given(st.integers(min_value=-1000, max_value=1000))
def test_logprob_roundtrip_exact_for_powers_of_two(k):
    x = math.ldexp(1.0, k)
    assert LogProb.from_linear(x).linear == x


@given(st.floats(min_value=1e-300, max_value=1e300))
def test_logprob_roundtrip_relative(x):
    # relative error grows with |log2 x| times machine epsilon
    assert LogProb.from_linear(x).linear == pytest.approx(x, rel=2e-13)


def test_log2_sum_tiny_terms():
    terms = [-2000.0] * 4
    assert log2_sum(terms) == pytest.approx(-1998.0, abs=1e-12)
    assert log2_sum([]) == -math.inf


def test_binomial_fraction_pmf():
    assert binomial_fraction_pmf(4, 2, Fraction(1, 2)) == Fraction(6, 16)
