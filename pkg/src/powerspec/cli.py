"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource limit.
Output is CSV or JSON on stdout (or ``--out``); ``--figure`` additionally
renders a PNG next to it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import __version__
from .arith import count_kfull, enumerate_kfull, kfull_constant
from .errors import DomainError, InvariantViolation, ResourceLimitError, UsageError
from .euler import delta2
from .functions import NAMED_PROFILES, RANDOM_PROFILES, load_function, random_function
from .means import SOFT_ALARM, normalized_log_mean, verify_log_separation, verify_separation
from .verify import SUITES, run_suite
from .volterra import CHI_GRAMMAR, DEFAULT_STEP, DEFAULT_UMAX, delta1_quadrature, parse_chi, sigma_min, solve_sigma

EPS = 2.0**-53
LIST_LIMIT = 10**6
ENDPOINT_PROFILES = ("minus-at-2", "all-ones", "odd-powerful")
DEFAULT_ENDPOINT_GRID = (10**6, 10**8, 10**10)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_int(text: str) -> int:
    """Integer from ``1000000``, ``1e6`` or ``10**6``."""
    text = text.strip().replace("_", "")
    try:
        if "**" in text:
            b, e = text.split("**")
            return int(b) ** int(e)
        d = Decimal(text)
    except (InvalidOperation, ValueError):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(d)


def parse_step(text: str) -> float:
    """Grid spacing from ``0.0009765625``, ``1/1024`` or ``2**-10``."""
    try:
        if "/" in text:
            a, b = text.split("/")
            return float(a) / float(b)
        if "**" in text:
            b, e = text.split("**")
            return float(b) ** float(e)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad step {text!r}") from None


# -- commands ---------------------------------------------------------------


def cmd_constants(args) -> tuple[list[dict], int]:
    rows = []
    for k, limit in ((2, 10**7), (3, 10**7)):
        c = kfull_constant(k, limit)
        rows.append({"name": f"C{k}", "value": c.value, "error": c.value * math.expm1(c.tail_bound), "method": f"Euler product over p <= {limit} with prime-counting tail bound"})
    tol = 1e-12
    d1 = delta1_quadrature(tol)
    rows.append({"name": "delta1", "value": d1, "error": 4 * tol, "method": "adaptive quadrature of the closed form"})
    d2 = delta2()
    rows.append({"name": "delta2", "value": d2, "error": 4 * EPS, "method": "closed form -sqrt(2)/(4+sqrt(2))"})
    rows.append({"name": "delta1*log2", "value": d1 * math.log(2), "error": 4 * tol * math.log(2), "method": "product of the above"})
    return rows, 0


def cmd_powerful(args) -> tuple[list[dict], int]:
    x = args.x[0] if args.x else 10**6
    if args.action == "count":
        rows = [{"x": x, "k": args.k, "count": count_kfull(x, args.k), "error": 0}]
        return rows, 0
    n = count_kfull(x, args.k)
    if n > LIST_LIMIT:
        raise ResourceLimitError(f"{n} numbers to list exceeds {LIST_LIMIT}; use 'count' or a smaller --x")
    return [{"n": int(v), "error": 0} for v in enumerate_kfull(x, args.k)], 0


def _resolve_function(args, default: str):
    if args.function_file:
        return load_function(args.function_file)
    spec = args.profile or default
    if spec in RANDOM_PROFILES and spec not in NAMED_PROFILES:
        return random_function(args.seed, spec)
    return load_function(spec)


def cmd_endpoint_run(args) -> tuple[list[dict], int]:
    profile = args.profile or "minus-at-2"
    if profile not in ENDPOINT_PROFILES and not args.function_file:
        raise UsageError(f"endpoint-run profile must be one of {ENDPOINT_PROFILES}")
    f = load_function(args.function_file) if args.function_file else load_function(profile)
    target = delta2()
    rows = []
    for x in sorted(set(args.x or DEFAULT_ENDPOINT_GRID)):
        rep = normalized_log_mean(f, x)
        row = {
            "x": x,
            "ratio": rep.ratio,
            "gap_to_delta2": rep.ratio - target,
            "error": 2 * rep.terms_used * EPS,
            "terms": rep.terms_used,
        }
        if profile == "odd-powerful":
            row["decay_reference"] = -((math.log(math.log(x))) ** -(1 - args.eps))
        rows.append(row)
    if args.figure:
        from .plotting import plot_endpoint

        plot_endpoint(rows, target, _figure_path(args), label=f.name)
    return rows, 0


def cmd_verify(args) -> tuple[dict, int]:
    report = run_suite(args.suite, args.seed, args.trials)
    return report, 0 if report["passed"] else 1


def cmd_volterra(args) -> tuple[dict, int]:
    chi = parse_chi(args.chi)
    sol = solve_sigma(chi, args.umax, args.step)
    coarse = solve_sigma(chi, args.umax, 2 * args.step) if 2 * args.step <= 1 / 64 else None
    m = sigma_min(sol)
    # Richardson estimate of the discretization error: |s_h - s_2h| / 3
    if coarse is not None:
        err_fine = (np.abs(sol.values - np.interp(sol.grid, coarse.grid, coarse.values)) / 3.0).tolist()
    else:
        err_fine = [10 * args.step**2] * len(sol.values)
    trace = [{"u": u, "sigma": s, "average": a, "error": e} for (u, s, a), e in zip(sol.rows(), err_fine)]
    summary = {
        "chi": chi.describe(),
        "step": args.step,
        "u_max": args.umax,
        "sigma_min": m["value"],
        "argmin": m["argmin"],
        "min_error": max(err_fine),
    }
    if args.figure:
        from .plotting import plot_sigma

        plot_sigma(sol, _figure_path(args))
    return {"summary": summary, "trace": trace}, 0


def cmd_separation(args) -> tuple[list[dict], int]:
    f = _resolve_function(args, "general")
    x = args.x[0] if args.x else 10**6
    rows = []
    sep = verify_separation(f, x, args.eps)
    rows.append({"test": "separation", "x": x, "parameter": args.eps, "lhs": sep["lhs"], "main_term": sep["main_term"], "residual": sep["residual"], "error": sep["bound"], "ratio": sep["ratio"]})
    y = args.y if args.y is not None else max(2.0, x**args.eps)
    lsep = verify_log_separation(f, x, y)
    rows.append({"test": "log-separation", "x": x, "parameter": y, "lhs": lsep["lhs"], "main_term": lsep["main_term"], "residual": lsep["residual"], "error": lsep["bound"], "ratio": lsep["ratio"]})
    alarm = any(r["ratio"] > SOFT_ALARM for r in rows)
    return rows, 1 if alarm else 0


# -- output -----------------------------------------------------------------


def _figure_path(args) -> Path:
    if args.figure != "auto":
        return Path(args.figure)
    if args.out:
        return Path(args.out).with_suffix(".png")
    return Path(f"{args.command}.png")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _csv_text(payload) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(payload, dict) and "trace" in payload:
        for key, val in sorted(payload["summary"].items()):
            buf.write(f"# {key}={_fmt(val)}\n")
        rows = payload["trace"]
    elif isinstance(payload, dict):
        w.writerow(["key", "value"])
        for key, val in sorted(payload.items()):
            w.writerow([key, json.dumps(val, sort_keys=True) if isinstance(val, (dict, list)) else _fmt(val)])
        return buf.getvalue()
    else:
        rows = payload
    if rows:
        fields = list(rows[0])
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r.get(k, "")) for k in fields])
    return buf.getvalue()


def render(payload, fmt: str) -> str:
    if fmt == "csv":
        return _csv_text(payload)
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument(
        "--figure", nargs="?", const="auto", default=None, help="also render a PNG (default path: --out with .png suffix)"
    )
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="powerspec", description="Mean values and spectra of multiplicative functions on powerful numbers.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("constants", parents=[common], help="C2, C3, delta1, delta2 with error bounds")

    pw = sub.add_parser("powerful", parents=[common], help="count or list k-full numbers up to x")
    pw.add_argument("action", choices=("count", "list"))
    pw.add_argument("--x", type=parse_int, nargs=1)
    pw.add_argument("--k", type=int, default=2)

    ep = sub.add_parser("endpoint-run", parents=[common], help="normalized logarithmic mean over powerful n <= x")
    ep.add_argument("--profile", default="minus-at-2", help=f"one of {', '.join(ENDPOINT_PROFILES)}")
    ep.add_argument("--function-file")
    ep.add_argument("--x", type=parse_int, nargs="+", help="grid of x values")
    ep.add_argument("--eps", type=float, default=0.1, help="exponent slack in the odd-powerful decay reference")

    vf = sub.add_parser("verify", parents=[common], help="seeded verification suites")
    vf.add_argument("--suite", choices=SUITES, required=True)
    vf.add_argument("--trials", type=int)

    vo = sub.add_parser("volterra", parents=[common], help="solve for sigma given a step function chi")
    vo.add_argument("--chi", default="step:1.0:-1", help=CHI_GRAMMAR)
    vo.add_argument("--umax", type=float, default=DEFAULT_UMAX)
    vo.add_argument("--step", type=parse_step, default=DEFAULT_STEP)

    se = sub.add_parser("separation", parents=[common], help="small-prime separation residuals for one function")
    se.add_argument("--profile", help="named profile, random:<profile>:<seed>, or a random profile name used with --seed")
    se.add_argument("--function-file")
    se.add_argument("--x", type=parse_int, nargs=1)
    se.add_argument("--eps", type=float, default=0.2)
    se.add_argument("--y", type=float)
    return p


COMMANDS = {
    "constants": cmd_constants,
    "powerful": cmd_powerful,
    "endpoint-run": cmd_endpoint_run,
    "verify": cmd_verify,
    "volterra": cmd_volterra,
    "separation": cmd_separation,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        payload, code = COMMANDS[args.command](args)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 1
    text = render(payload, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
