"""Partial sums, mean values and logarithmic means, plus numerical checks of the
small-prime separation and slow-variation estimates.

All sums are accumulated with :func:`math.fsum`, so they are correctly rounded
and independent of summation order.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .arith import MAX_X, enumerate_kfull, kfull_constant, powerful_walk, primes_upto
from .errors import DomainError, ResourceLimitError
from .euler import theta
from .functions import (
    MultiplicativeFunction,
    cm_extension,
    residual_htilde_powerful,
    smooth_g,
    square_compression,
    values_upto,
)
from .values import MeanReport

#: Largest x summed term by term for functions without powerful support.
FULL_SUM_LIMIT = 10**8
#: Largest x for the separation and slow-variation experiments.
EXPERIMENT_LIMIT = 10**7
#: Residual/scale ratios above this indicate an implementation bug, not mathematics.
SOFT_ALARM = 100.0


@lru_cache(maxsize=1)
def powerful_constant() -> float:
    """Leading constant of the powerful counting function, ``prod_p (1 + p^-3/2)``."""
    return kfull_constant(2, 10**7).value


def _require_powerful(f: MultiplicativeFunction):
    if f.support < 2:
        raise DomainError(f"{f.name} is not flagged as supported on powerful numbers")


def _check_x(x) -> int:
    x = int(x)
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    if x > MAX_X:
        raise ResourceLimitError(f"x = {x} exceeds the cap {MAX_X}")
    return x


def powerful_terms(f: MultiplicativeFunction, x: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted support points ``n <= x`` of ``f`` (all k-full n, k = support) with ``f(n)``."""
    _require_powerful(f)
    return powerful_walk(_check_x(x), f.local, k=f.support)


def _full_values(f: MultiplicativeFunction, x: int) -> np.ndarray:
    if x > FULL_SUM_LIMIT:
        raise ResourceLimitError(
            f"summing {f.name} up to {x} needs {x} evaluations; flag the function as powerful-supported or use x <= {FULL_SUM_LIMIT}"
        )
    return values_upto(f, x)


def partial_sum(f: MultiplicativeFunction, x) -> float:
    """``sum_{n <= x} f(n)``; powerful-supported functions only visit their support."""
    x = _check_x(x)
    if f.support >= 2:
        return math.fsum(powerful_terms(f, x)[1])
    return math.fsum(_full_values(f, x))


def log_mean_sqrt(f: MultiplicativeFunction, x) -> float:
    """``sum_{n <= x} f(n) / sqrt(n)`` for ``f`` supported on powerful numbers."""
    ns, vs = powerful_terms(f, x)
    return math.fsum(vs / np.sqrt(ns.astype(float)))


def powerful_harmonic_sqrt(x) -> tuple[float, float]:
    """``sum 1/sqrt(n)`` over powerful ``n <= x``, and its offset from ``C2 log sqrt(x)``."""
    x = _check_x(x)
    total = math.fsum(math.fsum(1.0 / np.sqrt(block.astype(float))) for block in enumerate_kfull(x, 2).blocks())
    return total, total - powerful_constant() * 0.5 * math.log(x)


def normalized_log_mean(f: MultiplicativeFunction, x) -> MeanReport:
    """Ratio of ``sum f(n)/sqrt(n)`` to ``sum 1/sqrt(n)``, both over powerful ``n <= x``."""
    _require_powerful(f)
    x = _check_x(x)
    ns, vs = powerful_walk(x, f.local, k=2)
    w = 1.0 / np.sqrt(ns.astype(float))
    raw = math.fsum(vs * w)
    norm = math.fsum(w)
    return MeanReport(x=x, raw_sum=raw, normalizer=norm, ratio=raw / norm, terms_used=len(ns))


def _gtilde_prefix(f: MultiplicativeFunction, m_max: int, weighted: bool) -> np.ndarray:
    g = values_upto(square_compression(f), m_max)
    if weighted:
        g[1:] /= np.arange(1, m_max + 1)
    return np.cumsum(g)


def logmean_identity_check(f: MultiplicativeFunction, x) -> dict:
    """Both sides of ``sum f(n)/sqrt(n) = sum_n h(n)/sqrt(n) sum_{m <= sqrt(x/n)} g(m)/m``.

    ``h`` is the cubefull residual and ``g`` the square compression of ``f``;
    both sides are finite sums, so the residual measures rounding only.
    """
    x = _check_x(x)
    lhs = log_mean_sqrt(f, x)
    ht = residual_htilde_powerful(f)
    ns, hs = powerful_walk(x, ht.local, k=3)
    prefix = _gtilde_prefix(f, math.isqrt(x), weighted=True)
    cut = np.array([math.isqrt(x // int(n)) for n in ns])
    rhs = math.fsum(hs / np.sqrt(ns.astype(float)) * prefix[cut])
    residual = abs(lhs - rhs)
    return {"x": x, "lhs": lhs, "rhs": rhs, "residual": residual, "relative": residual / max(1.0, abs(lhs))}


def mean_identity_check(f: MultiplicativeFunction, x) -> dict:
    """Both sides of ``x^-1/2 sum f(n) = sum_n h(n)/sqrt(n) (x/n)^-1/2 sum_{m <= sqrt(x/n)} g(m)``."""
    x = _check_x(x)
    lhs = partial_sum(f, x) / math.sqrt(x)
    ht = residual_htilde_powerful(f)
    ns, hs = powerful_walk(x, ht.local, k=3)
    prefix = _gtilde_prefix(f, math.isqrt(x), weighted=False)
    cut = np.array([math.isqrt(x // int(n)) for n in ns])
    nf = ns.astype(float)
    rhs = math.fsum(hs / np.sqrt(nf) * np.sqrt(nf / x) * prefix[cut])
    residual = abs(lhs - rhs)
    return {"x": x, "lhs": lhs, "rhs": rhs, "residual": residual, "relative": residual / max(1.0, abs(lhs))}


def s_small_primes(f: MultiplicativeFunction, y) -> float:
    """``sum_{p <= y} |1 - f(p)| / p``."""
    if y < 2:
        return 0.0
    ps = primes_upto(int(y))
    return math.fsum(np.abs(1.0 - f.local_many(ps, 1)) / ps)


def _experiment_x(x) -> int:
    x = _check_x(x)
    if x > EXPERIMENT_LIMIT:
        raise ResourceLimitError(f"x = {x} exceeds the experiment cap {EXPERIMENT_LIMIT}")
    return x


def _report(lhs, main, scale, **extra) -> dict:
    residual = abs(lhs - main)
    ratio = residual / scale if scale > 0 else math.inf
    return {"lhs": lhs, "main_term": main, "residual": residual, "bound": scale, "ratio": ratio, "alarm": ratio > SOFT_ALARM, **extra}


def verify_separation(f: MultiplicativeFunction, x, eps: float) -> dict:
    """Compare ``x^-1 sum f`` with ``theta(f, x^eps) x^-1 sum g`` for the small-prime smoothing ``g``.

    The reference scale is ``eps exp(s(f, x))``; the ``1 + O(x^-eps)``
    correction to the main term is left inside the residual.
    """
    x = _experiment_x(x)
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    y = x**eps
    g = smooth_g(f, y) if y >= 2 else cm_extension(f)
    th = theta(f, y)
    lhs = math.fsum(values_upto(f, x)) / x
    main = th.value * math.fsum(values_upto(g, x)) / x
    scale = eps * math.exp(s_small_primes(f, x))
    return _report(lhs, main, scale, x=x, eps=eps, y=y, theta=th.value)


def verify_log_separation(f: MultiplicativeFunction, x, y) -> dict:
    """Logarithmic analogue: ``(log x)^-1 sum f(n)/n`` against ``theta(f, y) (log x)^-1 sum g(n)/n``.

    Reference scale ``(log y)^3 / log x``.
    """
    x = _experiment_x(x)
    if not 2 <= y <= x / 2:
        raise DomainError(f"need 2 <= y <= x/2, got y={y}, x={x}")
    g = smooth_g(f, y)
    th = theta(f, y)
    inv = 1.0 / np.arange(1, x + 1)
    lx = math.log(x)
    lhs = math.fsum(values_upto(f, x)[1:] * inv) / lx
    main = th.value * math.fsum(values_upto(g, x)[1:] * inv) / lx
    scale = math.log(y) ** 3 / lx
    return _report(lhs, main, scale, x=x, y=y, theta=th.value, s=s_small_primes(f, y))


def slow_variation_gap(f: MultiplicativeFunction, x, y) -> dict:
    """``|x^-1 S(x) - (x/y)^-1 S(x/y)|`` against ``log(2y)/log(x) exp(s(f, x))``."""
    x = _experiment_x(x)
    if not 1 <= y <= x:
        raise DomainError(f"need 1 <= y <= x, got {y}")
    vals = values_upto(f, x)
    xy = x / y
    gap = abs(math.fsum(vals) / x - math.fsum(vals[: int(xy) + 1]) / xy)
    scale = math.log(2 * y) / math.log(x) * math.exp(s_small_primes(f, x))
    return {"x": x, "y": y, "gap": gap, "bound": scale, "ratio": gap / scale}


def decay_gap(f: MultiplicativeFunction, x, w) -> dict:
    """``x^-1 |S(x)| - (w/x) |S(x/w)|`` against the slow-decay reference scale."""
    x = _experiment_x(x)
    if not 1 <= w <= x / 10:
        raise DomainError(f"need 1 <= w <= x/10, got {w}")
    vals = values_upto(f, x)
    gap = abs(math.fsum(vals)) / x - w / x * abs(math.fsum(vals[: int(x / w) + 1]))
    lx = math.log(x)
    r = math.log(2 * w) / lx
    scale = r ** (1 - 2 / math.pi) * math.log(1 / r) + math.log(lx) / lx ** (2 - math.sqrt(3))
    return {"x": x, "w": w, "gap": gap, "bound": scale, "ratio": gap / scale}
