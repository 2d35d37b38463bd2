"""Euler products over primes: the small-prime factor, the modified local factors
of the powerful-number spectrum, and the series over cubefull numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import powerful_walk, primes_upto
from .errors import DomainError, InvariantViolation
from .functions import MultiplicativeFunction, residual_htilde_powerful
from .values import EulerProductValue

DEFAULT_DEPTH = 64
ZERO_FACTOR = 1e-12
EPS = 2.0**-53


def delta2() -> float:
    """Lower endpoint of the real logarithmic spectrum over powerful numbers."""
    r2 = math.sqrt(2.0)
    return -r2 / (4.0 + r2)


def delta2_from_local_bound() -> float:
    """The same constant assembled from the p = 2 local-factor bound."""
    return (0.25 - 1.0 / (2**2.5 - 4.0)) / (1.0 + 2**-1.5)


def _signed_product(factors: np.ndarray) -> float:
    """Product in log space with sign tracking; exact zero if any factor vanishes."""
    if len(factors) == 0:
        return 1.0
    if np.any(factors == 0.0):
        return 0.0
    negatives = int(np.count_nonzero(factors < 0))
    log_abs = math.fsum(np.log(np.abs(factors)))
    return (-1.0) ** negatives * math.exp(log_abs)


def _rounding(factors: np.ndarray, depth: int) -> np.ndarray:
    """Relative rounding error of each factor: about ``depth + 8`` operations on terms of total size at most 4."""
    return (depth + 8) * EPS * (1.0 + 4.0 / np.abs(factors))


def _log_tail(rel: np.ndarray) -> float:
    """``sum -log(1 - r)`` plus the rounding of the log-space product; infinite once any ``r`` reaches 1."""
    if np.any(rel >= 1.0):
        return math.inf
    return math.fsum(-np.log1p(-rel)) + 4 * EPS * (len(rel) + 1)


def theta(f: MultiplicativeFunction, y: float, depth: int = DEFAULT_DEPTH) -> EulerProductValue:
    """``prod_{p <= y} (sum_k f(p^k) p^-k) (1 - 1/p)``.

    Completely multiplicative ``f`` uses the closed geometric form. Otherwise
    the inner series is cut at ``depth`` and the remainder is modelled by
    repeating ``f(p^depth)``; the model misses by at most
    ``2 p^-(depth+1) / (1 - 1/p)`` per prime, which feeds ``tail_bound``.
    """
    if depth < 4:
        raise DomainError("depth must be >= 4")
    if y < 2:
        return EulerProductValue(1.0, 1, 0.0, depth)
    ps = primes_upto(int(y))
    pf = ps.astype(float)
    if f.completely_multiplicative:
        inner = 1.0 / (1.0 - f.local_many(ps, 1) / pf)
        err = np.zeros(len(ps))
    else:
        inner = np.zeros(len(ps))
        for k in range(depth):
            inner += f.local_many(ps, k) * pf**-k
        inner += f.local_many(ps, depth) * pf**-depth / (1.0 - 1.0 / pf)
        err = 2.0 * pf ** -(depth + 1) / (1.0 - 1.0 / pf)
    factors = inner * (1.0 - 1.0 / pf)
    tiny = np.abs(factors) < ZERO_FACTOR
    if tiny.any():
        return EulerProductValue(0.0, int(ps[-1]), math.inf, depth)
    rel = err * (1.0 - 1.0 / pf) / np.abs(factors) + _rounding(factors, depth)
    return EulerProductValue(_signed_product(factors), int(ps[-1]), _log_tail(rel), depth)


def ip_truncation_bound(p, depth: int = DEFAULT_DEPTH):
    """Worst-case error of the modelled tail of the local series, with ``|h(p^k)| <= 2``."""
    q = np.asarray(p, dtype=float) ** -0.5
    return 4.0 * q ** (depth + 1) / (1.0 - q)


def _ip_vector(f: MultiplicativeFunction, ps: np.ndarray, depth: int) -> np.ndarray:
    pf = ps.astype(float)
    vals = [f.local_many(ps, k) for k in range(depth + 1)]
    alpha = vals[2]
    out = np.ones(len(ps))
    for k in range(3, depth + 1):
        out += (vals[k] - vals[k - 2] * alpha) * pf ** (-k / 2)
    # exponents beyond depth repeat f(p^depth)
    c = vals[depth]
    q = pf**-0.5
    out += (c - vals[depth - 1] * alpha) * q ** (depth + 1)
    out += c * (1.0 - alpha) * q ** (depth + 2) / (1.0 - q)
    return out


def _check_powerful(f: MultiplicativeFunction):
    if f.support < 2:
        raise DomainError(f"{f.name} is not flagged as supported on powerful numbers")


def ip_factor(f: MultiplicativeFunction, p: int, depth: int = DEFAULT_DEPTH) -> float:
    """Local factor ``1 + sum_{k>=3} (f(p^k) - f(p^(k-2)) f(p^2)) p^(-k/2)``."""
    _check_powerful(f)
    if depth < 4:
        raise DomainError("depth must be >= 4")
    return float(_ip_vector(f, np.array([p], dtype=np.int64), depth)[0])


def _modified_vector(f: MultiplicativeFunction, ps: np.ndarray, depth: int) -> np.ndarray:
    pf = ps.astype(float)
    alpha = f.local_many(ps, 2)
    return _ip_vector(f, ps, depth) * (1.0 - 1.0 / pf) / (1.0 - alpha / pf) / (1.0 + pf**-1.5)


def modified_factor(f: MultiplicativeFunction, p: int, depth: int = DEFAULT_DEPTH) -> float:
    """``I_p (1 - 1/p) / (1 - f(p^2)/p) / (1 + p^(-3/2))``."""
    _check_powerful(f)
    return float(_modified_vector(f, np.array([p], dtype=np.int64), depth)[0])


def local_factors(f: MultiplicativeFunction, primes, depth: int = DEFAULT_DEPTH) -> tuple[np.ndarray, np.ndarray]:
    """``(I_p, modified factor)`` for every prime in ``primes`` at once."""
    _check_powerful(f)
    ps = np.asarray(primes, dtype=np.int64)
    pf = ps.astype(float)
    ip = _ip_vector(f, ps, depth)
    alpha = f.local_many(ps, 2)
    return ip, ip * (1.0 - 1.0 / pf) / (1.0 - alpha / pf) / (1.0 + pf**-1.5)


def _far_prime_tail(P: int) -> float:
    """Bound on ``sum_{p > P} |log(I_p / (1 + p^-1.5))|`` when ``f(p^2) = 1`` beyond ``P``."""
    q = P**-0.5
    u = 2.0 * q**3 / (1.0 - q)
    c = 2.0 / ((1.0 - q) * (1.0 - u)) + 1.0
    return c * 2.0 * q


def modified_euler_product(
    f: MultiplicativeFunction, prime_limit: int, depth: int = DEFAULT_DEPTH
) -> EulerProductValue:
    """Product of :func:`modified_factor` over ``p <= prime_limit``.

    The omitted primes are bounded only when ``f`` is known to equal 1 on
    ``p^2`` for every ``p > prime_limit``; otherwise the factors
    ``(1 - 1/p)/(1 - f(p^2)/p)`` can drift without bound and the tail is
    reported as infinite.
    """
    _check_powerful(f)
    ps = primes_upto(prime_limit)
    factors = _modified_vector(f, ps, depth)
    trunc = _log_tail(ip_truncation_bound(ps, depth) / np.abs(factors) + _rounding(factors, depth))
    tail = math.inf
    if f.tail is not None and prime_limit >= f.tail[0] and f.far_value(2) == 1.0:
        tail = _far_prime_tail(prime_limit) + trunc
    return EulerProductValue(_signed_product(factors), int(ps[-1]) if len(ps) else 1, tail, depth)


def ip_product(f: MultiplicativeFunction, prime_limit: int, depth: int = DEFAULT_DEPTH) -> EulerProductValue:
    """``prod_{p <= prime_limit} I_p``; the omitted primes change the log by at most ``~4/sqrt(P)``."""
    _check_powerful(f)
    ps = primes_upto(prime_limit)
    factors = _ip_vector(f, ps, depth)
    q = prime_limit**-0.5
    u = 2.0 * q**3 / (1.0 - q)
    far = 2.0 / ((1.0 - q) * (1.0 - u)) * 2.0 * q
    trunc = _log_tail(ip_truncation_bound(ps, depth) / np.abs(factors) + _rounding(factors, depth))
    return EulerProductValue(_signed_product(factors), int(ps[-1]), far + trunc, depth)


def per_prime_bounds_check(f: MultiplicativeFunction, p: int, depth: int = DEFAULT_DEPTH) -> dict:
    """Check the local extremal inequalities at one prime.

    For ``p >= 3``: ``I_p > 0`` and the modified factor is at most 1.
    For ``p = 2``: the modified factor is at least ``delta2``.
    Raises :class:`InvariantViolation` with the offending values otherwise.
    """
    ip = ip_factor(f, p, depth)
    factor = modified_factor(f, p, depth)
    if p == 2:
        ok = factor >= delta2() - 1e-12
        report = {"p": p, "ip": ip, "factor": factor, "ip_positive": ip > 0, "within": ok}
    else:
        ok = ip > 0 and factor <= 1.0 + 1e-12
        report = {"p": p, "ip": ip, "factor": factor, "ip_positive": ip > 0, "within": factor <= 1.0 + 1e-12}
    if not ok:
        values = [f.local(p, k) for k in range(2, 9)]
        raise InvariantViolation(f"local bound fails at p={p}: I_p={ip}, factor={factor}, f(p^2..p^8)={values}")
    return report


# -- series over cubefull numbers ------------------------------------------


@dataclass
class SeriesEstimate:
    """Partial sum of a series over cubefull ``n <= n_max`` with convergence diagnostics."""

    value: float
    n_max: int
    terms: int
    partials: dict = field(default_factory=dict)
    empirical_error: float = math.nan
    rigorous_bound: float = math.inf


def _rankin_constant(s: float, prime_limit: int = 10**5) -> float:
    """``sum_n 2^omega(n) n^(s - 1/2)`` over cubefull n, as an Euler product with tail bound."""
    ps = primes_upto(prime_limit).astype(float)
    r = ps ** (s - 0.5)
    local = 2.0 * r**3 / (1.0 - r)
    log_val = math.fsum(np.log1p(local))
    P = float(prime_limit)
    a = 3.0 * (0.5 - s)
    rP = P ** (s - 0.5)
    log_val += 2.0 / (1.0 - rP) * P ** (1.0 - a) / (a - 1.0)
    return math.exp(log_val)


def _rankin_tail(n_max: int, log_weight: bool) -> float:
    """Crude rigorous bound on the tail beyond ``n_max`` by Rankin's trick, minimized over a grid."""
    best = math.inf
    for s in np.linspace(0.01, 0.16, 16):
        if log_weight:
            for t in np.linspace(0.005, 0.16 - s, 8):
                if t <= 0 or s + t >= 1 / 6:
                    continue
                best = min(best, n_max**-s * _rankin_constant(s + t) / (math.e * t))
        else:
            best = min(best, n_max**-s * _rankin_constant(s))
    return best


def _cubefull_terms(f: MultiplicativeFunction, n_max: int):
    _check_powerful(f)
    if n_max < 1000:
        raise DomainError("n_max must be >= 1000")
    ht = residual_htilde_powerful(f)
    ns, hs = powerful_walk(n_max, ht.local, k=3)
    return ns, hs


def _partials(ns, terms, n_max):
    out = {}
    for cut in (n_max // 4, n_max // 2, n_max):
        j = int(np.searchsorted(ns, cut, side="right"))
        out[cut] = math.fsum(terms[:j])
    return out


def H0(f: MultiplicativeFunction, n_max: int) -> SeriesEstimate:
    """``sum h(n)/sqrt(n)`` over cubefull ``n <= n_max`` with ``h = residual_htilde_powerful(f)``."""
    ns, hs = _cubefull_terms(f, n_max)
    terms = hs / np.sqrt(ns.astype(float))
    partials = _partials(ns, terms, n_max)
    vals = list(partials.values())
    return SeriesEstimate(
        value=vals[-1],
        n_max=n_max,
        terms=int(np.count_nonzero(hs)),
        partials=partials,
        empirical_error=max(abs(vals[2] - vals[1]), abs(vals[1] - vals[0])),
        rigorous_bound=_rankin_tail(n_max, log_weight=False),
    )


def H1(f: MultiplicativeFunction, n_max: int) -> SeriesEstimate:
    """``-1/2 sum h(n) log(n)/sqrt(n)`` over cubefull ``n <= n_max``."""
    ns, hs = _cubefull_terms(f, n_max)
    nf = ns.astype(float)
    terms = -0.5 * hs * np.log(nf) / np.sqrt(nf)
    partials = _partials(ns, terms, n_max)
    vals = list(partials.values())
    return SeriesEstimate(
        value=vals[-1],
        n_max=n_max,
        terms=int(np.count_nonzero(hs)),
        partials=partials,
        empirical_error=max(abs(vals[2] - vals[1]), abs(vals[1] - vals[0])),
        rigorous_bound=0.5 * _rankin_tail(n_max, log_weight=True),
    )


def h0_euler_product(f: MultiplicativeFunction, y: float, prime_limit: int, depth: int = DEFAULT_DEPTH) -> dict:
    """Exact Euler product of ``sum h0(n)/n`` split at ``y``: the small-prime
    factor ``theta(f, y)`` times ``prod_{p > y} (1 + sum_{k>=2} (f(p^k) - f(p^(k-1)) f(p)) p^-k)``."""
    th = theta(f, y, depth)
    ps = primes_upto(prime_limit)
    ps = ps[ps > y]
    pf = ps.astype(float)
    f1 = f.local_many(ps, 1)
    large = np.ones(len(ps))
    prev = f1
    for k in range(2, depth + 1):
        cur = f.local_many(ps, k)
        large += (cur - prev * f1) * pf**-k
        prev = cur
    return {"theta": th.value, "large": _signed_product(large), "value": th.value * _signed_product(large)}
