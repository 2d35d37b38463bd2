"""Forward-marching solver for ``u s(u) = int_0^u s(u - t) chi(t) dt`` with ``s = 1`` on [0, 1].

``chi`` is a step function taking the value 1 on [0, 1]. The scheme works on
the reflected form ``int_0^u s(t) chi(u - t) dt`` with the composite trapezoid
rule; the unknown ``s(u)`` then enters only through ``chi(0) = 1`` and each
step is an explicit division by ``u - step/2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, UsageError

DEFAULT_STEP = 2.0**-10
DEFAULT_UMAX = 8.0
CHI_GRAMMAR = "const:<v> | step:<b1>:<v1>[:<b2>:<v2>...] with 1 <= b1 < b2 < ... and |v| <= 1"


@dataclass(frozen=True)
class ChiSpec:
    """Step function: ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``.

    ``breakpoints[0] = 0``, ``values[0] = 1`` and ``breakpoints[1] >= 1`` so
    that ``chi = 1`` on [0, 1].
    """

    breakpoints: tuple[float, ...] = (0.0,)
    values: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if len(self.breakpoints) != len(self.values) or not self.breakpoints:
            raise DomainError("breakpoints and values must have equal, nonzero length")
        if self.breakpoints[0] != 0.0 or self.values[0] != 1.0:
            raise DomainError("chi must start at 0 with value 1")
        if len(self.breakpoints) > 1 and self.breakpoints[1] < 1.0:
            raise DomainError("chi must equal 1 on [0, 1]")
        if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
            raise DomainError("breakpoints must increase")
        if any(abs(v) > 1.0 for v in self.values):
            raise DomainError("chi values must lie in [-1, 1]")

    @classmethod
    def step(cls, *pairs: tuple[float, float]) -> ChiSpec:
        """``ChiSpec.step((1.0, -1.0))`` is 1 up to 1 and -1 afterwards."""
        return cls((0.0,) + tuple(float(b) for b, _ in pairs), (1.0,) + tuple(float(v) for _, v in pairs))

    def __call__(self, t: float) -> float:
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[max(i, 0)]

    def on_grid(self, step: float, n: int) -> np.ndarray:
        """``chi(k step)`` for ``k = 0..n``; a jump at a node takes the mean of its two sides."""
        c = np.empty(n + 1)
        idx = [self._snap(b, step) for b in self.breakpoints] + [n + 1]
        for i, v in enumerate(self.values):
            c[min(idx[i], n + 1) : min(idx[i + 1], n + 1)] = v
        for i in range(1, len(self.values)):
            k = idx[i]
            if k <= n:
                c[k] = 0.5 * (self.values[i - 1] + self.values[i])
        return c

    @staticmethod
    def _snap(b: float, step: float) -> int:
        k = round(b / step)
        if abs(k * step - b) > 1e-12 * max(1.0, b):
            warnings.warn(f"chi breakpoint {b} snapped to grid point {k * step}", stacklevel=3)
        return k

    def describe(self) -> str:
        if len(self.values) == 1:
            return "const:1"
        parts = [f"{b:g}:{v:g}" for b, v in zip(self.breakpoints[1:], self.values[1:])]
        return "step:" + ":".join(parts)


def parse_chi(text: str) -> ChiSpec:
    """Parse the CLI syntax, e.g. ``step:1.0:-1`` or ``const:1``."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "const" and len(parts) == 2:
            v = float(parts[1])
            return ChiSpec() if v == 1.0 else ChiSpec.step((1.0, v))
        if parts[0] == "step" and len(parts) >= 3 and len(parts) % 2 == 1:
            nums = [float(p) for p in parts[1:]]
            return ChiSpec.step(*zip(nums[::2], nums[1::2]))
    except (ValueError, DomainError) as exc:
        raise UsageError(f"bad chi {text!r}: {exc}; expected {CHI_GRAMMAR}") from None
    raise UsageError(f"bad chi {text!r}; expected {CHI_GRAMMAR}")


def random_chi(seed: int, segments: int = 6, horizon: float = 8.0, step: float = 1 / 64) -> ChiSpec:
    """Seeded step function with grid-aligned breakpoints in ``[1, horizon)``."""
    rng = np.random.default_rng(seed)
    grid = np.arange(round(1 / step), round(horizon / step))
    cuts = np.sort(rng.choice(grid, size=segments, replace=False)) * step
    cuts[0] = 1.0
    vals = rng.uniform(-1.0, 1.0, size=segments)
    return ChiSpec.step(*zip(cuts.tolist(), vals.tolist()))


@dataclass(frozen=True)
class SigmaSolution:
    step: float
    values: np.ndarray = field(repr=False)
    chi: ChiSpec

    @property
    def grid(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.step

    @property
    def u_max(self) -> float:
        return (len(self.values) - 1) * self.step

    def __call__(self, u: float) -> float:
        return float(np.interp(u, self.grid, self.values))

    def running_average(self) -> np.ndarray:
        """``(1/u) int_0^u s`` at every grid point (1 at ``u = 0``)."""
        cum = integrate.cumulative_trapezoid(self.values, dx=self.step, initial=0.0)
        out = np.ones(len(self.values))
        out[1:] = cum[1:] / self.grid[1:]
        return out

    def rows(self):
        """``(u, sigma, average)`` triples for CSV export."""
        return zip(self.grid.tolist(), self.values.tolist(), self.running_average().tolist())


def solve_sigma(chi: ChiSpec, u_max: float = DEFAULT_UMAX, step: float = DEFAULT_STEP) -> SigmaSolution:
    if step > 1 / 64:
        raise DomainError("step must be <= 1/64")
    m = round(1 / step)
    if abs(m * step - 1.0) > 1e-12:
        raise DomainError("1/step must be an integer so that u = 1 is a grid point")
    if not 1 < u_max <= 64:
        raise DomainError("u_max must lie in (1, 64]")
    n = round(u_max / step)
    c = chi.on_grid(step, n)
    crev = c[::-1].copy()
    s = np.ones(n + 1)
    for k in range(m + 1, n + 1):
        u = k * step
        known = 0.5 * s[0] * c[k] + np.dot(s[1:k], crev[n - k + 1 : n])
        s[k] = step * known / (u - 0.5 * step)
    s.setflags(write=False)
    return SigmaSolution(step, s, chi)


def sigma_min(sol: SigmaSolution) -> dict:
    """Smallest value of the solution with parabolic refinement around the best grid point."""
    y = sol.values
    i = int(np.argmin(y))
    value, where = float(y[i]), float(i * sol.step)
    if 0 < i < len(y) - 1:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        curv = y0 - 2 * y1 + y2
        if curv > 0:
            off = 0.5 * (y0 - y2) / curv
            value = float(y1 - 0.25 * (y0 - y2) * off)
            where = float((i + off) * sol.step)
    return {"value": value, "argmin": where}


def lambda0_average(sol: SigmaSolution, u: float) -> float:
    """``(1/u) int_0^u s(t) dt`` by the trapezoid rule on the stored grid."""
    if u < 0 or u > sol.u_max + 1e-12:
        raise DomainError(f"u must lie in [0, {sol.u_max}]")
    if u == 0:
        return 1.0
    cum = integrate.cumulative_trapezoid(sol.values, dx=sol.step, initial=0.0)
    i = min(int(u / sol.step), len(sol.values) - 1)
    rest = u - i * sol.step
    total = cum[i] + rest * 0.5 * (sol.values[i] + sol(u))
    return float(total / u)


def delta1_quadrature(tol: float = 1e-12) -> float:
    """``1 - 2 log(1 + sqrt e) + 4 int_1^sqrt(e) log t / (t + 1) dt``."""
    if tol < 1e-12:
        raise DomainError("tol must be >= 1e-12")
    r = math.sqrt(math.e)
    integral, _ = integrate.quad(lambda t: math.log(t) / (t + 1.0), 1.0, r, epsabs=tol, epsrel=tol)
    return 1.0 - 2.0 * math.log(1.0 + r) + 4.0 * integral


def extremal_chi() -> ChiSpec:
    """1 on [0, 1] and -1 afterwards; its solution attains the smallest value."""
    return ChiSpec.step((1.0, -1.0))


def dickman_chi() -> ChiSpec:
    """Indicator of [0, 1]; the solution is the Dickman function."""
    return ChiSpec.step((1.0, 0.0))
