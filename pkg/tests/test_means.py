import math

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from powerspec.errors import DomainError, ResourceLimitError
from powerspec.euler import delta2
from powerspec.functions import named_function, random_function, values_upto
from powerspec.means import (
    SOFT_ALARM,
    decay_gap,
    log_mean_sqrt,
    logmean_identity_check,
    mean_identity_check,
    normalized_log_mean,
    partial_sum,
    powerful_constant,
    powerful_harmonic_sqrt,
    powerful_terms,
    s_small_primes,
    slow_variation_gap,
    verify_log_separation,
    verify_separation,
)

seeds = st.integers(0, 10**6)


def test_small_examples():
    ones = named_function("all-ones")
    assert partial_sum(ones, 100) == 14
    assert log_mean_sqrt(ones, 4) == 1.5
    assert normalized_log_mean(ones, 10**6).ratio == 1.0
    assert partial_sum(named_function("delta"), 10**6) == 1.0


@given(seeds, st.integers(1, 10**5))
@settings(max_examples=30, deadline=None)
def test_walk_sums_match_full_sieve(seed, x):
    f = random_function(seed, "powerful-support")
    vals = values_upto(f, x)
    assert partial_sum(f, x) == pytest.approx(math.fsum(vals), abs=1e-11)
    direct = math.fsum(vals[1:] / np.sqrt(np.arange(1, x + 1)))
    assert log_mean_sqrt(f, x) == pytest.approx(direct, abs=1e-11)


def test_terms_are_powerful_and_sorted():
    ns, vs = powerful_terms(random_function(3, "powerful-support"), 10**6)
    assert np.all(np.diff(ns) > 0)
    for n in ns[::50]:
        assert all(e >= 2 for e in sympy.factorint(int(n)).values())


def test_general_partial_sum_and_limits():
    f = random_function(3, "general")
    assert partial_sum(f, 1000) == pytest.approx(math.fsum(values_upto(f, 1000)))
    with pytest.raises(DomainError):
        partial_sum(f, 0)
    with pytest.raises(ResourceLimitError):
        partial_sum(f, 10**9)
    with pytest.raises(ResourceLimitError):
        partial_sum(named_function("all-ones"), 10**16)
    with pytest.raises(DomainError):
        normalized_log_mean(f, 100)


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_identity_checks_are_exact(seed):
    f = random_function(seed, "powerful-support")
    for x in (10**3, 10**4, 10**5):
        assert logmean_identity_check(f, x)["residual"] <= 1e-9
        assert mean_identity_check(f, x)["residual"] <= 1e-9


def test_powerful_constant():
    assert powerful_constant() == pytest.approx(float(mpmath.zeta(1.5) / mpmath.zeta(3)), abs=5e-4)


def test_harmonic_offset_is_bounded():
    offsets = [powerful_harmonic_sqrt(10**e)[1] for e in (4, 6, 8, 10)]
    # sum over powerful n <= x of n^-1/2 = C2 log sqrt(x) + O(1)
    assert all(-4 < o < 0 for o in offsets)
    assert abs(offsets[-1] - offsets[-2]) < abs(offsets[1] - offsets[0])


def test_endpoint_profiles_move_toward_limits():
    f2 = named_function("minus-at-2")
    ratios = [normalized_log_mean(f2, 10**e).ratio for e in (4, 6, 8)]
    assert ratios[0] > ratios[1] > ratios[2] > delta2()
    odd = named_function("odd-powerful")
    assert normalized_log_mean(odd, 10**8).ratio >= -0.05


def test_report_fields():
    rep = normalized_log_mean(named_function("minus-at-2"), 10**5)
    assert rep.ratio == pytest.approx(rep.raw_sum / rep.normalizer)
    assert rep.csv_row()[0] == "100000"
    assert set(rep.as_dict()) >= {"x", "raw_sum", "normalizer", "ratio"}


def test_s_small_primes():
    assert s_small_primes(named_function("all-ones"), 1) == 0.0
    zero_on_primes = random_function(0, "powerful-support")
    # f(p) = 0 on primes gives the prime harmonic sum
    mertens = math.fsum(1 / p for p in sympy.primerange(2, 10**4 + 1))
    assert s_small_primes(zero_on_primes, 10**4) == pytest.approx(mertens)


@given(seeds)
@settings(max_examples=8, deadline=None)
def test_separation_ratio_small(seed):
    f = random_function(seed, "general")
    rep = verify_separation(f, 10**5, 0.25)
    assert rep["ratio"] < SOFT_ALARM and not rep["alarm"]
    lrep = verify_log_separation(f, 10**5, 20)
    assert lrep["ratio"] < SOFT_ALARM


def test_separation_completely_multiplicative_is_exact_when_y_small():
    f = random_function(4, "completely-multiplicative")
    rep = verify_separation(f, 1000, 0.05)
    assert rep["y"] < 2 and rep["residual"] == pytest.approx(0.0, abs=1e-15)


def test_separation_domains():
    f = random_function(4, "general")
    with pytest.raises(DomainError):
        verify_separation(f, 1000, 1.5)
    with pytest.raises(ResourceLimitError):
        verify_separation(f, 10**8, 0.1)
    with pytest.raises(DomainError):
        verify_log_separation(f, 1000, 1)
    with pytest.raises(DomainError):
        slow_variation_gap(f, 1000, 2000)
    with pytest.raises(DomainError):
        decay_gap(f, 1000, 500)


def test_slow_variation_and_decay():
    f = random_function(6, "general")
    sv = slow_variation_gap(f, 10**6, 10)
    assert sv["gap"] >= 0 and sv["ratio"] < SOFT_ALARM
    ones = random_function(6, "completely-multiplicative")
    dg = decay_gap(ones, 10**6, 10)
    assert math.isfinite(dg["ratio"]) and dg["ratio"] < SOFT_ALARM
