"""Small result records passed between modules and serialized by the CLI."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class EulerProductValue:
    """A truncated Euler product together with a bound on what was left out.

    ``tail_bound`` bounds ``|log(true / value)|`` (or, for a signed product,
    the relative error); ``math.inf`` means no finite bound is available.
    """

    value: float
    prime_limit: int
    tail_bound: float
    terms_per_prime: int | None = None

    def interval(self) -> tuple[float, float]:
        if not math.isfinite(self.tail_bound):
            return (-math.inf, math.inf)
        lo = self.value * math.exp(-self.tail_bound)
        hi = self.value * math.exp(self.tail_bound)
        return (min(lo, hi), max(lo, hi))

    def contains(self, other: float) -> bool:
        lo, hi = self.interval()
        return lo <= other <= hi

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MeanReport:
    x: int
    raw_sum: float
    normalizer: float
    ratio: float
    terms_used: int

    CSV_FIELDS = ("x", "raw_sum", "normalizer", "ratio")

    def as_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> list[str]:
        return [str(self.x)] + [repr(float(getattr(self, k))) for k in self.CSV_FIELDS[1:]]
