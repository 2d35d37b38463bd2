"""Prime sieving, factorization and k-full number enumeration."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DomainError, ResourceLimitError
from .values import EulerProductValue

#: Largest bound accepted by the k-full enumerators (64-bit products stay exact).
MAX_X = 10**15
#: Largest sieve the process is allowed to allocate (about one byte per two integers).
SIEVE_BUDGET = 10**9
#: Integers up to this size are factorized from a cached smallest-prime-factor table.
SPF_CACHE_LIMIT = 10**7

_prime_cache = np.array([2, 3, 5, 7], dtype=np.int64)
_prime_cache_limit = 10
_spf_cache = np.zeros(0, dtype=np.int32)


def sieve_primes(limit: int) -> np.ndarray:
    """Primes ``p <= limit`` in ascending order (odd-only Eratosthenes)."""
    limit = int(limit)
    if limit < 2:
        raise DomainError(f"sieve limit must be >= 2, got {limit}")
    if limit > SIEVE_BUDGET:
        raise ResourceLimitError(f"sieve limit {limit} exceeds budget {SIEVE_BUDGET}")
    if limit < 3:
        return np.array([2], dtype=np.int64)
    # index i stands for 2*i + 1
    size = (limit - 1) // 2 + 1
    odd = np.ones(size, dtype=bool)
    odd[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if odd[i]:
            p = 2 * i + 1
            odd[p * p // 2 :: p] = False
    primes = 2 * np.flatnonzero(odd).astype(np.int64) + 1
    return np.concatenate(([2], primes)).astype(np.int64)


def primes_upto(limit: int) -> np.ndarray:
    """Cached variant of :func:`sieve_primes`; the cache only ever grows."""
    global _prime_cache, _prime_cache_limit
    limit = int(limit)
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    if limit > _prime_cache_limit:
        new_limit = max(limit, 2 * _prime_cache_limit)
        new_limit = min(new_limit, max(limit, SIEVE_BUDGET))
        _prime_cache = sieve_primes(new_limit)
        _prime_cache_limit = new_limit
    return _prime_cache[: np.searchsorted(_prime_cache, limit, side="right")]


def spf_table(limit: int) -> np.ndarray:
    """Smallest prime factor of every ``n <= limit`` (``spf[1] = 1``, ``spf[0] = 0``)."""
    global _spf_cache
    limit = int(limit)
    if len(_spf_cache) > limit:
        return _spf_cache[: limit + 1]
    if limit > SIEVE_BUDGET // 4:
        raise ResourceLimitError(f"spf table of size {limit} exceeds budget")
    size = max(limit, 2 * (len(_spf_cache) - 1), 1024)
    spf = np.zeros(size + 1, dtype=np.int32)
    spf[1] = 1
    for p in primes_upto(math.isqrt(size)):
        p = int(p)
        block = spf[p * p :: p]
        block[block == 0] = p
    rest = spf == 0
    rest[0] = False
    spf[rest] = np.flatnonzero(rest)
    _spf_cache = spf
    return spf[: limit + 1]


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer with its prime factorization as ``(p, e)`` pairs."""

    value: int
    factors: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise DomainError(f"malformed factorization {self.factors}")
            last = p
            prod *= p**e
        if prod != self.value:
            raise DomainError(f"factors {self.factors} do not multiply to {self.value}")

    def __int__(self) -> int:
        return self.value

    @classmethod
    def from_factors(cls, factors) -> FactoredInteger:
        factors = tuple(sorted((int(p), int(e)) for p, e in factors if e))
        return cls(math.prod(p**e for p, e in factors), factors)

    def divisors(self) -> list[FactoredInteger]:
        out = [()]
        for p, e in self.factors:
            out = [d + ((p, i),) if i else d for d in out for i in range(e + 1)]
        return sorted((FactoredInteger.from_factors(d) for d in out), key=int)


def factorize(n: int) -> FactoredInteger:
    n = int(n)
    if n < 1:
        raise DomainError(f"cannot factorize {n}")
    if n <= SPF_CACHE_LIMIT:
        spf = spf_table(max(n, 1 << 16))
        factors = []
        m = n
        while m > 1:
            p = int(spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            factors.append((p, e))
        return FactoredInteger(n, tuple(factors))
    import sympy

    return FactoredInteger(n, tuple(sorted(sympy.factorint(n).items())))


def _as_factored(n) -> FactoredInteger:
    return n if isinstance(n, FactoredInteger) else factorize(n)


def is_kfull(n, k: int) -> bool:
    """True when every exponent of ``n`` is at least ``k`` (so 1 is always k-full)."""
    return all(e >= k for _, e in _as_factored(n).factors)


def _check_bound(x: int, k: int) -> int:
    x = int(x)
    if x < 1:
        raise DomainError(f"bound must be >= 1, got {x}")
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if x > MAX_X:
        raise DomainError(f"bound {x} exceeds 64-bit safe cap {MAX_X}")
    return x


def icbrt(n: int) -> int:
    r = int(round(n ** (1 / 3)))
    while r**3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return r


def iroot(n: int, k: int) -> int:
    r = int(round(n ** (1 / k)))
    while r > 0 and r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def squarefree_upto(limit: int) -> np.ndarray:
    """Ascending squarefree integers in ``[1, limit]``."""
    flags = np.ones(limit + 1, dtype=bool)
    flags[0] = False
    for p in primes_upto(math.isqrt(limit)):
        flags[int(p) * int(p) :: int(p) * int(p)] = False
    return np.flatnonzero(flags).astype(np.int64)


def _kfull_dfs(x: int, k: int) -> np.ndarray:
    primes = [int(p) for p in primes_upto(iroot(x, k))]
    out = [1]
    stack = [(1, 0)]
    while stack:
        n, i = stack.pop()
        for j in range(i, len(primes)):
            p = primes[j]
            m = n * p**k
            if m > x:
                break
            while m <= x:
                out.append(m)
                stack.append((m, j + 1))
                m *= p
    arr = np.array(out, dtype=np.int64)
    arr.sort()
    return arr


class KfullStream:
    """Ascending stream of the k-full integers ``n <= bound``.

    For ``k = 2`` every powerful number is written uniquely as ``a**2 * b**3``
    with ``b`` squarefree; the stream is produced block by block over windows
    of ``sqrt(n)`` so memory stays bounded. Other ``k`` use a depth-first walk
    over prime powers.
    """

    BLOCK = 1 << 19

    def __init__(self, bound: int, k: int = 2):
        self.bound = _check_bound(bound, k)
        self.k = k

    def blocks(self) -> Iterator[np.ndarray]:
        if self.k != 2:
            yield _kfull_dfs(self.bound, self.k)
            return
        x = self.bound
        bs = squarefree_upto(icbrt(x))
        cubes = [int(b) ** 3 for b in bs]
        root = math.isqrt(x)
        lo = 0
        s = 0
        while lo < x:
            s += self.BLOCK
            hi = min(x, s * s)
            parts = []
            for b3 in cubes:
                if b3 > hi:
                    break
                a_lo = math.isqrt(lo // b3) + 1
                a_hi = math.isqrt(hi // b3)
                if a_hi >= a_lo:
                    a = np.arange(a_lo, a_hi + 1, dtype=np.int64)
                    parts.append(a * a * b3)
            block = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
            block.sort(kind="stable")
            if len(block) > 1 and np.any(block[1:] == block[:-1]):
                raise AssertionError("duplicate powerful number in a^2 b^3 generation")
            yield block
            lo = hi
            if s > root:
                break

    def __iter__(self) -> Iterator[int]:
        for block in self.blocks():
            yield from map(int, block)

    def to_array(self) -> np.ndarray:
        parts = list(self.blocks())
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def enumerate_kfull(x: int, k: int = 2) -> KfullStream:
    return KfullStream(x, k)


def count_kfull(x: int, k: int = 2) -> int:
    """Exact number of k-full ``n <= x``."""
    x = _check_bound(x, k)
    if k == 2:
        return sum(math.isqrt(x // int(b) ** 3) for b in squarefree_upto(icbrt(x)))
    return len(_kfull_dfs(x, k))


def kfull_constant(k: int, prime_limit: int) -> EulerProductValue:
    """Leading constant of the k-full counting function, as a truncated Euler product.

    With ``log(1 + t) <= t`` the omitted primes change the logarithm by at most
    ``sum_m sum_{p > P} p^(-s)``, ``s = m/k``. Partial summation with
    ``pi(t) < 1.25506 t / log t`` bounds each inner sum by
    ``1.25506 s P^(1-s) / ((s - 1) log P)``.
    """
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if prime_limit < 3:
        raise DomainError("prime_limit must be >= 3")
    p = primes_upto(prime_limit).astype(float)
    local = np.zeros_like(p)
    for m in range(k + 1, 2 * k):
        local += p ** (-m / k)
    value = math.exp(math.fsum(np.log1p(local)))
    P = float(prime_limit)
    tail = math.fsum(1.25506 * (m / k) * P ** (1 - m / k) / ((m / k - 1) * math.log(P)) for m in range(k + 1, 2 * k))
    return EulerProductValue(value, int(p[-1]), tail, 2 * k - 1)


def powerful_walk(x: int, local, k: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """All k-full ``n <= x`` with the multiplicative weight ``prod local(p, e)``.

    ``local(p, e)`` supplies the prime-power values. Returned arrays are sorted
    by ``n``. Nodes whose remaining budget admits only one further prime at
    exponent ``k`` are expanded in bulk, which is where almost all of the
    k-full numbers live.
    """
    x = _check_bound(x, k)
    primes = primes_upto(iroot(x, k))
    plist = [int(p) for p in primes]
    pk = primes**k
    lead = np.array([local(p, k) for p in plist], dtype=float)
    single_n = [1]
    single_v = [1.0]
    bulk_n = []
    bulk_v = []
    stack = [(1, 1.0, 0)]
    while stack:
        n, v, i = stack.pop()
        r = x // n
        j_end = bisect.bisect_right(plist, iroot(r, k), lo=i)
        if j_end <= i:
            continue
        # from j_bulk on, q**(k+1) > r: only q**k fits and nothing can follow it
        j_bulk = bisect.bisect_right(plist, iroot(r, k + 1), lo=i)
        for j in range(i, j_bulk):
            p = plist[j]
            m = n * p**k
            e = k
            while m <= x:
                w = v * local(p, e)
                single_n.append(m)
                single_v.append(w)
                stack.append((m, w, j + 1))
                m *= p
                e += 1
        if j_end > j_bulk:
            bulk_n.append(n * pk[j_bulk:j_end])
            bulk_v.append(v * lead[j_bulk:j_end])
    n_all = np.concatenate([np.array(single_n, dtype=np.int64)] + bulk_n)
    v_all = np.concatenate([np.array(single_v, dtype=float)] + bulk_v)
    order = np.argsort(n_all, kind="stable")
    return n_all[order], v_all[order]
