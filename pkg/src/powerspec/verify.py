"""Seeded verification suites shared by the command line and the test-suite.

Each suite returns a plain dict with ``passed``, ``trials``, the worst observed
error and, on failure, the smallest failing case (an integer ``n`` or a prime
power ``(p, k)``) so a report points at something small enough to inspect.
"""

from __future__ import annotations

import math

import numpy as np

from .arith import primes_upto
from .errors import InvariantViolation, UsageError
from .euler import delta2, local_factors, per_prime_bounds_check
from .functions import (
    MultiplicativeFunction,
    cm_extension,
    dirichlet_convolve_arrays,
    flawed_small_prime_h,
    h0_closed_form,
    random_function,
    residual_htilde_cm,
    small_prime_h,
    smooth_g,
    values_upto,
)
from .means import SOFT_ALARM, logmean_identity_check, verify_separation
from .volterra import lambda0_average, random_chi, solve_sigma

SUITES = ("identities", "counterexample", "factor-bounds", "volterra", "separation")
IDENTITY_TOL = 1e-12
LOGMEAN_TOL = 1e-9
FAR_PRIMES = (10007, 99991, 1000003)


def _first_bad(lhs: np.ndarray, rhs: np.ndarray, tol: float) -> tuple[float, int | None]:
    err = np.abs(lhs - rhs)
    err[0] = 0.0
    bad = np.flatnonzero(err > tol)
    return float(err.max()), (int(bad[0]) if len(bad) else None)


def _at(f: MultiplicativeFunction, p: int, k: int) -> float:
    return 1.0 if k == 0 else f.local(p, k)


def _pp_conv(a, b, p, k):
    return math.fsum(_at(a, p, i) * _at(b, p, k - i) for i in range(k + 1))


def identity_trial(seed: int, n_max: int = 10**4, k_max: int = 8) -> dict:
    """Check ``f = ht * cm(f)``, ``cm(f) = h * g`` and ``h0 = ht * h`` for one seeded function."""
    rng = np.random.default_rng([seed, 1])
    f = random_function(seed, "general")
    y = float(rng.integers(2, 200))
    ht, ft = residual_htilde_cm(f), cm_extension(f)
    h, g, h0 = small_prime_h(f, y), smooth_g(f, y), h0_closed_form(f, y)
    F, HT, FT, H, G, H0 = (values_upto(u, n_max) for u in (f, ht, ft, h, g, h0))
    checks = {
        "f = ht * cm(f)": (F, dirichlet_convolve_arrays(HT, FT)),
        "cm(f) = h * g": (FT, dirichlet_convolve_arrays(H, G)),
        "h0 = ht * h": (H0, dirichlet_convolve_arrays(HT, H)),
    }
    worst, failure = 0.0, None
    for name, (lhs, rhs) in checks.items():
        err, n = _first_bad(lhs, rhs, IDENTITY_TOL)
        worst = max(worst, err)
        if n is not None and (failure is None or n < failure["n"]):
            failure = {"identity": name, "n": n, "lhs": float(lhs[n]), "rhs": float(rhs[n])}
    primes = [2, 3, 5, 7] + [int(p) for p in primes_upto(200)[-3:]] + list(FAR_PRIMES)
    for p in primes:
        for k in range(1, k_max + 1):
            pairs = {
                "f = ht * cm(f)": (f.local(p, k), _pp_conv(ht, ft, p, k)),
                "cm(f) = h * g": (ft.local(p, k), _pp_conv(h, g, p, k)),
                "h0 = ht * h": (h0.local(p, k), _pp_conv(ht, h, p, k)),
            }
            for name, (lhs, rhs) in pairs.items():
                err = abs(lhs - rhs)
                worst = max(worst, err)
                if err > IDENTITY_TOL and failure is None:
                    failure = {"identity": name, "p": p, "k": k, "lhs": lhs, "rhs": rhs}
    return {"seed": seed, "y": y, "max_error": worst, "failure": failure}


def logmean_trial(seed: int, xs=(10**3, 10**4, 10**5)) -> dict:
    f = random_function(seed, "powerful-support")
    worst, failure = 0.0, None
    for x in xs:
        rep = logmean_identity_check(f, x)
        worst = max(worst, rep["residual"])
        if rep["residual"] > LOGMEAN_TOL and failure is None:
            failure = {"x": x, "lhs": rep["lhs"], "rhs": rep["rhs"]}
    return {"seed": seed, "max_error": worst, "failure": failure}


def suite_identities(seed: int, trials: int, n_max: int = 10**4, logmean_trials: int | None = None) -> dict:
    rows = [identity_trial(seed + i, n_max) for i in range(trials)]
    lm_rows = [logmean_trial(seed + i) for i in range(trials if logmean_trials is None else logmean_trials)]
    fails = [r for r in rows + lm_rows if r["failure"] is not None]
    smallest = min(fails, key=lambda r: r["failure"].get("n", r["failure"].get("x", math.inf))) if fails else None
    return {
        "suite": "identities",
        "trials": trials,
        "passed": not fails,
        "max_error": max(r["max_error"] for r in rows),
        "tolerance": IDENTITY_TOL,
        "logmean_max_error": max((r["max_error"] for r in lm_rows), default=0.0),
        "logmean_tolerance": LOGMEAN_TOL,
        "failures": len(fails),
        "minimal_failure": smallest,
    }


def counterexample_function(p: int = 101) -> MultiplicativeFunction:
    """``f(q) = 1`` for every prime, ``f(p^2) = -1`` at one chosen prime, 1 on other prime powers."""
    return MultiplicativeFunction(lambda q, k: -1.0 if (q == p and k == 2) else 1.0, name=f"counterexample@{p}")


def suite_counterexample(y: float = 10.0, p: int = 101, n_max: int = 20000) -> dict:
    """Reproduce the failure of the naive small-prime decomposition and check its correction.

    Passing means: the naive ``h`` of :func:`flawed_small_prime_h` gives ``(h * g)(p^2) = 1`` where
    ``f(p^2) = -1``, ``p^2`` is the smallest such ``n``, and the corrected
    decomposition ``f = ht * cm(f)`` holds everywhere.
    """
    f = counterexample_function(p)
    g = smooth_g(f, y)
    old = dirichlet_convolve_arrays(values_upto(flawed_small_prime_h(f, y), n_max), values_upto(g, n_max))
    F = values_upto(f, n_max)
    _, first = _first_bad(F, old, IDENTITY_TOL)
    fixed = dirichlet_convolve_arrays(values_upto(residual_htilde_cm(f), n_max), values_upto(cm_extension(f), n_max))
    fixed_err, fixed_bad = _first_bad(F, fixed, IDENTITY_TOL)
    reproduced = first == p * p and old[p * p] == 1.0 and F[p * p] == -1.0
    return {
        "suite": "counterexample",
        "trials": 1,
        "passed": bool(reproduced and fixed_bad is None),
        "y": y,
        "p": p,
        "smallest_mismatch_n": first,
        "old_value": float(old[first]) if first is not None else None,
        "f_value": float(F[first]) if first is not None else None,
        "corrected_max_error": fixed_err,
        "tolerance": IDENTITY_TOL,
    }


def suite_factor_bounds(seed: int, trials: int, p_max: int = 97) -> dict:
    """Local extremal inequalities at every prime ``<= p_max`` for seeded powerful-support functions."""
    primes = primes_upto(p_max)
    odd = primes > 2
    smallest = None
    failures = 0
    worst_factor, worst_ip, min_two = -math.inf, math.inf, math.inf
    for i in range(trials):
        f = random_function(seed + i, "powerful-support")
        ip, factor = local_factors(f, primes)
        bad = odd & ((ip <= 0) | (factor > 1.0 + 1e-12))
        bad |= ~odd & (factor < delta2() - 1e-12)
        worst_factor = max(worst_factor, float(factor[odd].max()))
        worst_ip = min(worst_ip, float(ip[odd].min()))
        min_two = min(min_two, float(factor[~odd].min()))
        if bad.any():
            failures += int(bad.sum())
            p = int(primes[np.flatnonzero(bad)[0]])
            if smallest is None or p < smallest["p"]:
                try:
                    per_prime_bounds_check(f, p)
                    detail = "vectorized and scalar evaluations disagree"
                except InvariantViolation as exc:
                    detail = str(exc)
                smallest = {"seed": seed + i, "p": p, "detail": detail}
    return {
        "suite": "factor-bounds",
        "trials": trials,
        "passed": failures == 0,
        "max_factor_odd": worst_factor,
        "min_ip_odd": worst_ip,
        "min_factor_at_2": min_two,
        "delta2": delta2(),
        "tolerance": 1e-12,
        "failures": failures,
        "minimal_failure": smallest,
    }


def suite_volterra(seed: int, trials: int, step: float = 2.0**-7, u_max: float = 8.0) -> dict:
    """Boundedness of the solution and of its running average for seeded step functions."""
    tol = 10 * step**2
    worst_sigma, lo_avg, hi_avg = 0.0, math.inf, -math.inf
    smallest = None
    for i in range(trials):
        chi = random_chi(seed + i, horizon=u_max, step=step)
        sol = solve_sigma(chi, u_max, step)
        avg = sol.running_average()
        worst_sigma = max(worst_sigma, float(np.abs(sol.values).max()))
        lo_avg, hi_avg = min(lo_avg, float(avg.min())), max(hi_avg, float(avg.max()))
        bad = np.flatnonzero((np.abs(sol.values) > 1 + tol) | (avg < -tol) | (avg > 1 + tol))
        if len(bad):
            u = float(bad[0] * step)
            if smallest is None or u < smallest["u"]:
                smallest = {"seed": seed + i, "chi": chi.describe(), "u": u, "sigma": float(sol.values[bad[0]]), "average": lambda0_average(sol, u)}
    return {
        "suite": "volterra",
        "trials": trials,
        "passed": smallest is None,
        "max_abs_sigma": worst_sigma,
        "min_average": lo_avg,
        "max_average": hi_avg,
        "tolerance": tol,
        "minimal_failure": smallest,
    }


def suite_separation(seed: int, trials: int, x: int = 10**6, eps: float = 0.2) -> dict:
    """Residual/scale ratios of the small-prime separation for seeded general functions."""
    ratios = []
    smallest = None
    for i in range(trials):
        f = random_function(seed + i, "general")
        rep = verify_separation(f, x, eps)
        ratios.append(rep["ratio"])
        if rep["alarm"] and (smallest is None or rep["ratio"] > smallest["ratio"]):
            smallest = {"seed": seed + i, "ratio": rep["ratio"], "residual": rep["residual"]}
    return {
        "suite": "separation",
        "trials": trials,
        "passed": smallest is None,
        "x": x,
        "eps": eps,
        "max_ratio": max(ratios),
        "median_ratio": float(np.median(ratios)),
        "alarm_threshold": SOFT_ALARM,
        "minimal_failure": smallest,
    }


def run_suite(suite: str, seed: int = 0, trials: int | None = None) -> dict:
    defaults = {"identities": 500, "counterexample": 1, "factor-bounds": 1000, "volterra": 100, "separation": 50}
    if suite not in defaults:
        raise UsageError(f"unknown suite {suite!r}; expected one of {SUITES}")
    n = defaults[suite] if trials is None else trials
    if n < 1:
        raise UsageError("trials must be >= 1")
    if suite == "identities":
        return suite_identities(seed, n, logmean_trials=min(n, 20))
    if suite == "counterexample":
        return suite_counterexample()
    if suite == "factor-bounds":
        return suite_factor_bounds(seed, n)
    if suite == "volterra":
        return suite_volterra(seed, n)
    return suite_separation(seed, n)
