"""Multiplicative functions, Dirichlet convolution and the auxiliary constructions.

A :class:`MultiplicativeFunction` is described by its values on prime powers.
``f(1) = 1`` always; ``f(p**0) = 1`` is hard-coded in every residual formula
below.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .arith import FactoredInteger, factorize, primes_upto
from .errors import DomainError, InvariantViolation, UsageError

Local = Callable[[int, int], float]

RANDOM_PROFILES = ("general", "powerful-support", "odd-powerful", "completely-multiplicative")
NAMED_PROFILES = ("all-ones", "minus-at-2", "odd-powerful", "delta")

DEFAULT_P_MAX = 10**4
DEFAULT_K_MAX = 16
TOL = 1e-12


class MultiplicativeFunction:
    """Prime-power rule plus metadata.

    Parameters
    ----------
    local:
        ``local(p, k)`` for ``k >= 1``. For completely multiplicative functions
        only ``local(p, 1)`` is consulted.
    support:
        ``f(p**k) = 0`` for ``1 <= k < support`` (2 for powerful support).
    bound:
        Magnitude bound on prime-power values, either a number or a callable
        of the exponent. Convolutions record a computed bound here.
    tail:
        ``(P0, rule)`` when every prime ``p > P0`` has ``f(p**k) = rule(k)``.
        Lets Euler products bound their omitted primes.
    local_many:
        Optional vectorized ``local_many(primes, k)``.
    """

    def __init__(
        self,
        local: Local,
        *,
        name: str = "f",
        completely_multiplicative: bool = False,
        support: int = 1,
        bound: float | Callable[[int], float] = 1.0,
        tail: tuple[int, Callable[[int], float]] | None = None,
        local_many: Callable[[np.ndarray, int], np.ndarray] | None = None,
        doc: dict | None = None,
    ):
        self._rule = local
        self.name = name
        self.completely_multiplicative = completely_multiplicative
        self.support = support
        self._bound = bound
        self.tail = tail
        self._many = local_many
        self.doc = doc
        self._cache: dict[tuple[int, int], float] = {}

    def __repr__(self):
        flags = []
        if self.completely_multiplicative:
            flags.append("cm")
        if self.support > 1:
            flags.append(f"Q{self.support}")
        return f"<MultiplicativeFunction {self.name} {' '.join(flags)}>".replace(" >", ">")

    def bound_at(self, k: int) -> float:
        if k == 0:
            return 1.0
        return self._bound(k) if callable(self._bound) else float(self._bound)

    def local(self, p: int, k: int) -> float:
        """Value at ``p**k``."""
        if k == 0:
            return 1.0
        if k < self.support:
            return 0.0
        key = (p, k)
        try:
            return self._cache[key]
        except KeyError:
            pass
        if self.completely_multiplicative:
            v = float(self._rule(p, 1)) ** k
        else:
            v = float(self._rule(p, k))
        self._cache[key] = v
        return v

    __call__ = local

    def local_many(self, primes: np.ndarray, k: int) -> np.ndarray:
        if k == 0:
            return np.ones(len(primes))
        if k < self.support:
            return np.zeros(len(primes))
        if self._many is not None:
            if self.completely_multiplicative:
                return self._many(primes, 1) ** k
            return self._many(primes, k)
        return np.fromiter((self.local(int(p), k) for p in primes), dtype=float, count=len(primes))

    def far_value(self, k: int) -> float | None:
        """Common value at ``p**k`` for all sufficiently large primes, if known."""
        if self.tail is None:
            return None
        if k == 0:
            return 1.0
        if k < self.support:
            return 0.0
        rule = self.tail[1]
        return rule(1) ** k if self.completely_multiplicative else rule(k)


def evaluate(f: MultiplicativeFunction, n) -> float:
    """``f(n)`` as the product of prime-power values."""
    fn = n if isinstance(n, FactoredInteger) else factorize(n)
    v = 1.0
    for p, e in fn.factors:
        w = f.local(p, e)
        if abs(w) > f.bound_at(e) + TOL:
            raise InvariantViolation(f"|{f.name}({p}^{e})| = {abs(w)} exceeds bound {f.bound_at(e)}")
        v *= w
    return v


def values_between(f: MultiplicativeFunction, lo: int, hi: int) -> np.ndarray:
    """``f(n)`` for ``lo <= n < hi`` by sieving out prime powers block-wise."""
    lo = max(int(lo), 1)
    hi = int(hi)
    if hi <= lo:
        return np.zeros(0)
    primes = primes_upto(math.isqrt(hi - 1))
    rem = np.arange(lo, hi, dtype=np.int64)
    val = np.ones(hi - lo)
    for p in primes:
        p = int(p)
        start = (-lo) % p
        if start >= len(rem):
            continue
        r = rem[start::p] // p
        e = np.ones(len(r), dtype=np.int64)
        while True:
            mask = r % p == 0
            if not mask.any():
                break
            r[mask] //= p
            e[mask] += 1
        rem[start::p] = r
        table = np.array([f.local(p, j) for j in range(int(e.max()) + 1)])
        val[start::p] *= table[e]
    big = rem > 1
    if big.any():
        val[big] *= f.local_many(rem[big], 1)
    return val


def values_upto(f: MultiplicativeFunction, n_max: int, block: int = 1 << 22) -> np.ndarray:
    """Array ``a`` with ``a[n] = f(n)`` for ``1 <= n <= n_max`` (``a[0] = 0``)."""
    parts = [np.zeros(1)]
    for lo in range(1, n_max + 1, block):
        parts.append(values_between(f, lo, min(lo + block, n_max + 1)))
    return np.concatenate(parts)


@lru_cache(maxsize=4)
def divisor_pairs(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """All pairs ``(n, d)`` with ``d | n <= n_max``, enumerated by brute force."""
    ns, ds = [], []
    for d in range(1, n_max + 1):
        m = np.arange(d, n_max + 1, d, dtype=np.int64)
        ns.append(m)
        ds.append(np.full(len(m), d, dtype=np.int64))
    return np.concatenate(ns), np.concatenate(ds)


def dirichlet_convolve_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``c[n] = sum_{d | n} a[n/d] * b[d]`` over the full index range of ``a``."""
    n_max = len(a) - 1
    ns, ds = divisor_pairs(n_max)
    return np.bincount(ns, weights=a[ns // ds] * b[ds], minlength=n_max + 1)


def convolve(f: MultiplicativeFunction, g: MultiplicativeFunction, name: str | None = None) -> MultiplicativeFunction:
    """Dirichlet convolution, evaluated lazily on each prime power."""

    def local(p, k):
        return math.fsum(f.local(p, i) * g.local(p, k - i) for i in range(k + 1))

    def bound(k):
        return sum(f.bound_at(i) * g.bound_at(k - i) for i in range(k + 1))

    tail = None
    if f.tail is not None and g.tail is not None:
        P0 = max(f.tail[0], g.tail[0])
        tail = (P0, lambda k: math.fsum(f.far_value(i) * g.far_value(k - i) for i in range(k + 1)))
    return MultiplicativeFunction(
        local,
        name=name or f"({f.name}*{g.name})",
        support=min(f.support, g.support),
        bound=bound,
        tail=tail,
    )


def _far(f: MultiplicativeFunction, rule: Callable[[Callable[[int], float]], Callable[[int], float]]):
    if f.tail is None:
        return None
    return (f.tail[0], rule(f.far_value))


def identity() -> MultiplicativeFunction:
    """The convolution identity: 1 at ``n = 1`` and 0 elsewhere."""
    return MultiplicativeFunction(lambda p, k: 0.0, name="delta", support=2, tail=(1, lambda k: 0.0))


def cm_extension(f: MultiplicativeFunction) -> MultiplicativeFunction:
    """Completely multiplicative function agreeing with ``f`` on primes."""
    return MultiplicativeFunction(
        lambda p, k: f.local(p, 1),
        name=f"cm({f.name})",
        completely_multiplicative=True,
        tail=_far(f, lambda far: lambda k: far(1)),
        local_many=lambda ps, k: f.local_many(ps, 1),
    )


def residual_htilde_cm(f: MultiplicativeFunction) -> MultiplicativeFunction:
    """``h(p^k) = f(p^k) - f(p^(k-1)) f(p)``, so that ``f = h * cm(f)``."""

    def local(p, k):
        return f.local(p, k) - f.local(p, k - 1) * f.local(p, 1)

    return MultiplicativeFunction(
        local,
        name=f"htilde({f.name})",
        bound=2.0,
        tail=_far(f, lambda far: lambda k: far(k) - far(k - 1) * far(1)),
    )


def smooth_g(f: MultiplicativeFunction, y: float) -> MultiplicativeFunction:
    """Completely multiplicative, 1 on primes ``p <= y`` and ``f(p)`` above."""
    if y < 2:
        raise DomainError(f"threshold must be >= 2, got {y}")

    def many(ps, k):
        out = f.local_many(ps, 1)
        out[ps <= y] = 1.0
        return out

    return MultiplicativeFunction(
        lambda p, k: 1.0 if p <= y else f.local(p, 1),
        name=f"g({f.name},{y:g})",
        completely_multiplicative=True,
        tail=None if f.tail is None else (max(f.tail[0], int(y)), lambda k: f.far_value(1)),
        local_many=many,
    )


def small_prime_h(f: MultiplicativeFunction, y: float) -> MultiplicativeFunction:
    """``h(p^k) = f(p)^k - f(p)^(k-1)`` for ``p <= y`` and 0 otherwise, so ``cm(f) = h * g``."""
    if y < 2:
        raise DomainError(f"threshold must be >= 2, got {y}")

    def local(p, k):
        if p > y:
            return 0.0
        a = f.local(p, 1)
        return a**k - a ** (k - 1)

    return MultiplicativeFunction(local, name=f"h({f.name},{y:g})", bound=2.0, tail=(int(y), lambda k: 0.0))


def flawed_small_prime_h(f: MultiplicativeFunction, y: float) -> MultiplicativeFunction:
    """``f(p^k) - f(p^(k-1))`` below ``y``, 0 above.

    Convolved with :func:`smooth_g` this recovers ``f`` only when ``f`` is
    completely multiplicative; kept as a regression witness for that failure.
    """

    def local(p, k):
        return f.local(p, k) - f.local(p, k - 1) if p <= y else 0.0

    return MultiplicativeFunction(local, name=f"h_old({f.name},{y:g})", bound=2.0, tail=(int(y), lambda k: 0.0))


def h0_closed_form(f: MultiplicativeFunction, y: float) -> MultiplicativeFunction:
    """Closed form of ``residual_htilde_cm(f) * small_prime_h(f, y)``."""
    if y < 2:
        raise DomainError(f"threshold must be >= 2, got {y}")

    def local(p, k):
        if p <= y:
            return f.local(p, k) - f.local(p, k - 1)
        if k == 1:
            return 0.0
        return f.local(p, k) - f.local(p, k - 1) * f.local(p, 1)

    tail = None
    if f.tail is not None:
        far = f.far_value
        tail = (max(f.tail[0], int(y)), lambda k: 0.0 if k == 1 else far(k) - far(k - 1) * far(1))
    return MultiplicativeFunction(local, name=f"h0({f.name},{y:g})", bound=2.0, tail=tail)


def _require_powerful(f: MultiplicativeFunction):
    if f.support < 2:
        raise DomainError(f"{f.name} is not flagged as supported on powerful numbers")


def square_support_extension(f: MultiplicativeFunction) -> MultiplicativeFunction:
    """``F(p^(2k)) = f(p^2)^k`` and ``F(p^(2k+1)) = 0``."""
    _require_powerful(f)

    def local(p, k):
        return 0.0 if k % 2 else f.local(p, 2) ** (k // 2)

    return MultiplicativeFunction(
        local,
        name=f"sq({f.name})",
        tail=_far(f, lambda far: lambda k: 0.0 if k % 2 else far(2) ** (k // 2)),
    )


def compress(F: MultiplicativeFunction) -> MultiplicativeFunction:
    """``G(m) = F(m^2)``; completely multiplicative when ``F`` comes from a square extension."""
    return MultiplicativeFunction(
        lambda p, k: F.local(p, 2 * k),
        name=f"compress({F.name})",
        tail=_far(F, lambda far: lambda k: far(2 * k)),
    )


def square_compression(f: MultiplicativeFunction) -> MultiplicativeFunction:
    """Completely multiplicative ``g(p^k) = f(p^2)^k``; equal to ``compress(square_support_extension(f))``."""
    _require_powerful(f)
    return MultiplicativeFunction(
        lambda p, k: f.local(p, 2),
        name=f"gtilde({f.name})",
        completely_multiplicative=True,
        tail=_far(f, lambda far: lambda k: far(2)),
        local_many=lambda ps, k: f.local_many(ps, 2),
    )


def residual_htilde_powerful(f: MultiplicativeFunction) -> MultiplicativeFunction:
    """``h(p) = 0`` and ``h(p^k) = f(p^k) - f(p^(k-2)) f(p^2)``; supported on cubefull numbers."""

    def local(p, k):
        if k == 1:
            return 0.0
        return f.local(p, k) - f.local(p, k - 2) * f.local(p, 2)

    return MultiplicativeFunction(
        local,
        name=f"hfull({f.name})",
        support=3,
        bound=2.0,
        tail=_far(f, lambda far: lambda k: 0.0 if k == 1 else far(k) - far(k - 2) * far(2)),
    )


# -- profiles ---------------------------------------------------------------


def _table_function(
    name: str,
    *,
    support: int,
    default: float,
    cm: bool,
    table_primes: np.ndarray,
    table: np.ndarray,
    extra: dict[tuple[int, int], float],
    doc: dict,
) -> MultiplicativeFunction:
    """Override table rows ``table[i, k]`` for ``table_primes[i]``; the last column repeats."""
    index = {int(p): i for i, p in enumerate(table_primes)}
    k_cols = table.shape[1] - 1 if table.size else 0
    by_prime: dict[int, list[tuple[int, float]]] = {}
    for (p, k), v in sorted(extra.items()):
        by_prime.setdefault(p, []).append((k, v))

    def local(p, k):
        rows = by_prime.get(p)
        if rows is not None:
            v = None
            for kk, vv in rows:
                if kk <= k:
                    v = vv
            if v is not None:
                return v
        i = index.get(p)
        if i is not None:
            return float(table[i, min(k, k_cols)])
        return default

    def many(ps, k):
        out = np.full(len(ps), default)
        if len(table_primes):
            pos = np.searchsorted(table_primes, ps)
            pos = np.minimum(pos, len(table_primes) - 1)
            hit = table_primes[pos] == ps
            out[hit] = table[pos[hit], min(k, k_cols)]
        for p in by_prime:
            out[ps == p] = local(p, k)
        return out

    horizon = int(table_primes[-1]) if len(table_primes) else 1
    if by_prime:
        horizon = max(horizon, max(by_prime))
    bound = max([1.0] + [abs(v) for v in extra.values()])
    if table.size:
        bound = max(bound, float(np.abs(table).max()))
    if abs(default) > bound:
        bound = abs(default)
    return MultiplicativeFunction(
        local,
        name=name,
        completely_multiplicative=cm,
        support=support,
        bound=bound,
        tail=(horizon, lambda k: default),
        local_many=many,
        doc=doc,
    )


def random_function(
    seed: int,
    profile: str = "powerful-support",
    p_max: int = DEFAULT_P_MAX,
    k_max: int = DEFAULT_K_MAX,
) -> MultiplicativeFunction:
    """Seeded function with independent uniform values in [-1, 1] on prime powers.

    Values are drawn for ``p <= p_max`` and exponents up to ``k_max``; higher
    exponents repeat the ``k_max`` value and larger primes take value 1.
    """
    if profile not in RANDOM_PROFILES:
        raise UsageError(f"unknown random profile {profile!r}; expected one of {RANDOM_PROFILES}")
    rng = np.random.default_rng(seed)
    primes = primes_upto(p_max)
    cm = profile == "completely-multiplicative"
    support = 2 if profile in ("powerful-support", "odd-powerful") else 1
    cols = 2 if cm else k_max + 1
    table = rng.uniform(-1.0, 1.0, size=(len(primes), cols))
    table[:, 0] = 1.0
    table[:, 1:support] = 0.0
    if profile == "odd-powerful":
        table[0, 1:] = 0.0
    doc = {"profile": profile, "seed": int(seed), "p_max": int(p_max), "k_max": int(k_max)}
    return _table_function(
        f"{profile}#{seed}",
        support=support,
        default=1.0,
        cm=cm,
        table_primes=primes,
        table=table,
        extra={},
        doc=doc,
    )


def named_function(profile: str) -> MultiplicativeFunction:
    """Deterministic functions supported on powerful numbers.

    ``all-ones``: 1 on every ``p^k`` with ``k >= 2``.
    ``minus-at-2``: -1 on ``2^k``, 1 on odd ``p^k`` (``k >= 2``); the extremal case.
    ``odd-powerful``: 0 on ``2^k`` and -1 on odd ``p^k`` (``k >= 2``).
    ``delta``: the convolution identity.
    """
    docs = {
        "all-ones": {"profile": "all-ones", "defaults": {"support": 2, "value": 1.0}, "overrides": []},
        "minus-at-2": {"profile": "minus-at-2", "defaults": {"support": 2, "value": 1.0}, "overrides": [[2, 2, -1.0]]},
        "odd-powerful": {
            "profile": "odd-powerful",
            "defaults": {"support": 2, "value": -1.0},
            "overrides": [[2, 2, 0.0]],
        },
        "delta": {"profile": "delta", "defaults": {"support": 2, "value": 0.0}, "overrides": []},
    }
    if profile not in docs:
        raise UsageError(f"unknown profile {profile!r}; expected one of {NAMED_PROFILES}")
    return from_doc(docs[profile])


def from_doc(doc: dict) -> MultiplicativeFunction:
    """Build a function from its JSON profile document.

    ``{"profile": ..., "defaults": {"support", "value", "completely_multiplicative"},
    "overrides": [[p, k, value], ...]}``. An override at ``(p, k)`` also covers
    higher exponents of ``p`` until the next override. Random profiles are
    rebuilt from ``seed`` (plus ``p_max``/``k_max``) and then overridden.
    """
    if not isinstance(doc, dict) or "profile" not in doc:
        raise UsageError("function document must be an object with a 'profile' key")
    profile = doc["profile"]
    overrides = doc.get("overrides", [])
    try:
        extra = {(int(p), int(k)): float(v) for p, k, v in overrides}
    except (TypeError, ValueError) as exc:
        raise UsageError(f"overrides must be [p, k, value] triples: {exc}") from None
    for (p, k), v in extra.items():
        if k < 1 or abs(v) > 1 + TOL:
            raise UsageError(f"override ({p}, {k}, {v}) outside exponent >= 1 and |value| <= 1")
    if profile in RANDOM_PROFILES and "seed" in doc:
        base = random_function(int(doc["seed"]), profile, int(doc.get("p_max", DEFAULT_P_MAX)), int(doc.get("k_max", DEFAULT_K_MAX)))
        if not extra:
            return base
        return MultiplicativeFunction(
            lambda p, k: extra[(p, k)] if (p, k) in extra else base.local(p, k),
            name=base.name + "+",
            completely_multiplicative=base.completely_multiplicative,
            support=base.support,
            tail=base.tail,
            doc=dict(doc),
        )
    defaults = doc.get("defaults", {})
    support = int(defaults.get("support", 1))
    default = float(defaults.get("value", 1.0))
    if abs(default) > 1 + TOL:
        raise UsageError(f"default value {default} outside [-1, 1]")
    return _table_function(
        str(profile),
        support=support,
        default=default,
        cm=bool(defaults.get("completely_multiplicative", False)),
        table_primes=np.zeros(0, dtype=np.int64),
        table=np.zeros((0, 0)),
        extra=extra,
        doc=dict(doc),
    )


def load_function(spec: str) -> MultiplicativeFunction:
    """Resolve a CLI function reference: a named profile, ``random:<profile>:<seed>``, or a JSON file path."""
    if spec in NAMED_PROFILES:
        return named_function(spec)
    if spec.startswith("random:"):
        try:
            _, profile, seed = spec.split(":")
            return random_function(int(seed), profile)
        except ValueError:
            raise UsageError(f"expected random:<profile>:<seed>, got {spec!r}") from None
    try:
        with open(spec) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"unknown profile or missing function file {spec!r}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"function file {spec!r} is not valid JSON: {exc}") from None
    return from_doc(doc)


def dump_doc(f: MultiplicativeFunction) -> str:
    if f.doc is None:
        raise UsageError(f"{f.name} was not built from a profile document")
    return json.dumps(f.doc, sort_keys=True)


def sample_prime_powers(f: MultiplicativeFunction, primes: Iterable[int], k_max: int) -> np.ndarray:
    """Matrix of ``f(p^k)`` for the given primes and ``0 <= k <= k_max``."""
    return np.array([[f.local(int(p), k) for k in range(k_max + 1)] for p in primes])
