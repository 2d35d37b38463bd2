import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from powerspec.arith import kfull_constant, primes_upto
from powerspec.errors import DomainError, InvariantViolation
from powerspec.euler import (
    H0,
    H1,
    delta2,
    delta2_from_local_bound,
    h0_euler_product,
    ip_factor,
    ip_product,
    ip_truncation_bound,
    local_factors,
    modified_euler_product,
    modified_factor,
    per_prime_bounds_check,
    theta,
)
from powerspec.functions import (
    MultiplicativeFunction,
    from_doc,
    h0_closed_form,
    named_function,
    random_function,
    values_upto,
)

mpmath.mp.dps = 30
ODD_PRIMES = [int(p) for p in primes_upto(97) if p > 2]


def local_series(f, p, s, terms=160):
    """``sum_k f(p^k) p^(-k s)`` summed directly in high precision."""
    return mpmath.fsum(mpmath.mpf(1 if k == 0 else f.local(p, k)) * mpmath.mpf(p) ** (-k * s) for k in range(terms))


def local_doc(p, values):
    return from_doc({"profile": "local", "defaults": {"support": 2, "value": 1.0}, "overrides": [[p, k + 2, v] for k, v in enumerate(values)]})


unit = st.one_of(st.floats(-1.0, 1.0), st.sampled_from([-1.0, 0.0, 1.0]))


def test_delta2_closed_forms_agree():
    assert delta2() == pytest.approx(-0.2612038749637415, abs=1e-15)
    assert delta2_from_local_bound() == pytest.approx(delta2(), abs=1e-15)
    # direct series: 1 - sum_{k>=2} 2^(-k/2), times (1 - 1/2)/(1 + 2^(-3/2))
    series = 1 - mpmath.mpf(0.5) / (1 - 2**-0.5)
    assert float(series * 0.5 / (1 + mpmath.mpf(2) ** -1.5)) == pytest.approx(delta2(), abs=1e-15)


def test_extremal_factor_at_two():
    f2 = named_function("minus-at-2")
    assert abs(modified_factor(f2, 2) - delta2()) < 1e-9
    assert ip_factor(f2, 2) == pytest.approx(float(1 - mpmath.mpf(0.5) / (1 - 2**-0.5)) * 1.5, abs=1e-12)


@given(st.integers(0, 10**6), st.sampled_from(ODD_PRIMES + [2]))
@settings(max_examples=60, deadline=None)
def test_ip_matches_direct_series(seed, p):
    f = random_function(seed, "powerful-support")
    alpha = f.local(p, 2)
    oracle = (1 - alpha / mpmath.mpf(p)) * local_series(f, p, mpmath.mpf(0.5))
    assert ip_factor(f, p) == pytest.approx(float(oracle), abs=1e-12)
    mod = oracle * (1 - mpmath.mpf(1) / p) / (1 + mpmath.mpf(p) ** -1.5) / (1 - alpha / mpmath.mpf(p))
    assert modified_factor(f, p) == pytest.approx(float(mod), abs=1e-12)


def test_all_ones_local_factors():
    f = named_function("all-ones")
    for p in (3, 7, 101):
        assert ip_factor(f, p) == pytest.approx(1 + p**-1.5, abs=1e-15)
        assert modified_factor(f, p) == pytest.approx(1.0, abs=1e-15)


@given(st.sampled_from(ODD_PRIMES), st.lists(unit, min_size=1, max_size=12))
@settings(max_examples=300, deadline=None)
def test_local_bounds_adversarial_odd(p, values):
    rep = per_prime_bounds_check(local_doc(p, values), p)
    assert rep["ip"] > 0 and rep["factor"] <= 1 + 1e-12


@given(st.lists(unit, min_size=1, max_size=12))
@settings(max_examples=300, deadline=None)
def test_local_bound_adversarial_two(values):
    rep = per_prime_bounds_check(local_doc(2, values), 2)
    assert rep["factor"] >= delta2() - 1e-12


def test_local_bounds_random_sweep():
    primes = primes_upto(97)
    for seed in range(200):
        ip, factor = local_factors(random_function(seed, "powerful-support"), primes)
        assert np.all(ip[1:] > 0) and np.all(factor[1:] <= 1 + 1e-12) and factor[0] >= delta2() - 1e-12


def test_bounds_check_reports_violations():
    bad = MultiplicativeFunction(lambda p, k: 5.0 if k == 3 else 1.0, support=2, bound=5.0)
    with pytest.raises(InvariantViolation, match="p=3"):
        per_prime_bounds_check(bad, 3)


def test_requires_powerful_support():
    with pytest.raises(DomainError):
        modified_factor(random_function(1, "general"), 3)


def test_truncation_bound_covers_depth_change():
    f = random_function(8, "powerful-support")
    for p in (2, 3, 5):
        assert abs(ip_factor(f, p, 8) - ip_factor(f, p, 64)) <= ip_truncation_bound(p, 8)


def test_modified_product_extremal():
    val = modified_euler_product(named_function("minus-at-2"), 10**5)
    assert val.value == pytest.approx(delta2(), abs=1e-9)
    assert val.contains(delta2())
    assert math.isinf(modified_euler_product(named_function("odd-powerful"), 10**4).tail_bound)


def test_ip_product_is_powerful_constant_for_all_ones():
    c2 = float(mpmath.zeta(1.5) / mpmath.zeta(3))
    val = ip_product(named_function("all-ones"), 10**6)
    assert val.contains(c2)
    assert val.value == pytest.approx(kfull_constant(2, 10**6).value, rel=1e-12)


def test_theta_trivial_cases():
    ones = MultiplicativeFunction(lambda p, k: 1.0, name="one")
    assert theta(ones, 10**4).value == pytest.approx(1.0, abs=1e-12)
    assert theta(ones, 1.5).value == 1.0
    zero = MultiplicativeFunction(lambda p, k: 0.0, name="zero", completely_multiplicative=True)
    direct = math.prod(1 - 1 / p for p in primes_upto(1000).tolist())
    assert theta(zero, 1000).value == pytest.approx(direct, rel=1e-12)
    # Mertens: prod (1 - 1/p) ~ e^-gamma / log y
    assert theta(zero, 10**6).value * math.log(10**6) == pytest.approx(math.exp(-float(mpmath.euler)), rel=1e-3)


@given(st.integers(0, 10**6), st.sampled_from(["general", "completely-multiplicative"]))
@settings(max_examples=20, deadline=None)
def test_theta_matches_direct_series(seed, profile):
    f = random_function(seed, profile)
    y = 60
    direct = mpmath.fprod(local_series(f, p, 1) * (1 - mpmath.mpf(1) / p) for p in primes_upto(y).tolist())
    val = theta(f, y)
    assert val.value == pytest.approx(float(direct), rel=1e-12)
    assert val.contains(float(direct))


def test_theta_exact_zero_factor():
    # f(2^k) = -1 for all k makes the local series at 2 equal to 1 - sum 2^-k = 0
    f = MultiplicativeFunction(lambda p, k: -1.0 if p == 2 else 1.0)
    val = theta(f, 10)
    assert val.value == 0.0 and math.isinf(val.tail_bound)


def test_h0_euler_product_against_direct_sum():
    f = random_function(2, "general")
    y = 5
    rep = h0_euler_product(f, y, 10**5)
    vals = values_upto(h0_closed_form(f, y), 10**6)
    direct = math.fsum(vals[1:] / np.arange(1, 10**6 + 1))
    assert rep["value"] == pytest.approx(direct, abs=1e-2)


def test_h0_series_against_products():
    c2 = float(mpmath.zeta(1.5) / mpmath.zeta(3))
    est = H0(named_function("all-ones"), 10**8)
    assert abs(est.value - c2) <= est.rigorous_bound
    assert est.partials[10**8] == est.value
    f2 = named_function("minus-at-2")
    expected = ip_factor(f2, 2) * c2 / (1 + 2**-1.5)
    est2 = H0(f2, 10**8)
    assert abs(est2.value - expected) <= est2.rigorous_bound
    # slow convergence from the -2 * 2^(-k/2) terms at p = 2: the gap shrinks along the partials
    gaps = [abs(v - expected) for _, v in sorted(est2.partials.items())]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.15


def test_h1_derivative_oracle():
    # H1 = d/ds of prod_p I_p(s) at s = 1/2 for the all-ones profile: -(1/2) * d/ds log form
    f = named_function("all-ones")
    est = H1(f, 10**8)
    s = mpmath.mpf(0.5)
    logd = mpmath.diff(lambda t: mpmath.log(mpmath.zeta(3 * t) / mpmath.zeta(6 * t)), s)
    oracle = 0.5 * float(mpmath.zeta(1.5) / mpmath.zeta(3) * logd)
    assert est.value < 0 and oracle < 0
    assert abs(est.value - oracle) <= est.rigorous_bound
    assert abs(est.value - oracle) < 0.75


def test_series_domain():
    with pytest.raises(DomainError):
        H0(named_function("all-ones"), 10)
