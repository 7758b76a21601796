"""Command-line interface: ``delayosc <command> [options]``.

Exit status: 0 on success, 2 for unreadable or malformed input, 3 when the
input violates a structural requirement, 4 for numerical failures, 1 when
``verify`` finds a failing check.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import errors, specio, verify
from .examples import by_name
from .integrator import History, integrate, sample_solution
from .oscillation import EPS_ZERO, certify, classify, delay_bounds, features_from
from .special import lambda_of, sigma_of

EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_FAILED = 2, 3, 4, 1
VALIDATION_ERRORS = (errors.ValidationError, errors.OutOfDomain, errors.StepInvalid,
                     errors.HistoryTooShort)
NUMERIC_ERRORS = (errors.NonFiniteValue, errors.DomainError, errors.TooFewZeros,
                  errors.WindowTooShort, errors.HypothesisViolated, errors.InconsistentFeatures)

LAMBDA_TABLE_POINTS = 81
FIGURE_POINTS = 400
FIGURE_MARKERS = ((1.125, 1.625 + math.log(2.0)), (2.0, 2.0))
FIGURE_EXTENSION_END = 3.0


def _emit(text: str, output: str | None) -> None:
    if output:
        specio.atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _load(args) -> tuple:
    obj = specio.load_json(args.input)
    eq = specio.equation_from_dict(obj)
    hist = specio.history_from_dict(obj, eq)
    return eq, hist


def _divergent(eq) -> bool:
    """``int_0^inf |c| = inf``; decidable only for periodic coefficients."""
    return eq.c.extension == "periodic" and eq.c.abs_integral(0.0, eq.c.period) > 0.0


def _simulate(args):
    eq, hist = _load(args)
    horizon = args.horizon if args.horizon is not None else hist.t0 + 20.0
    if not horizon > 0:
        raise errors.StepInvalid(f"horizon must be positive, got {horizon}")
    return eq, integrate(eq, hist, horizon, args.step)


# -- commands ----------------------------------------------------------------------

def cmd_simulate(args) -> int:
    _, x = _simulate(args)
    _emit(specio.trajectory_csv(x), args.output)
    return 0


def cmd_analyze(args) -> int:
    eq, x = _simulate(args)
    rep = classify(eq, x, eps_zero=args.eps_zero, eps_t=args.eps_t)
    out = rep.as_dict()
    out["t1"], out["rho"], out["step"] = eq.t1, eq.rho, x.step
    _emit(specio.dumps(out), args.output)
    return 0


def cmd_certify(args) -> int:
    eq, x = _simulate(args)
    rep = classify(eq, x, eps_zero=args.eps_zero, eps_t=args.eps_t)
    C, D = delay_bounds(eq, x.t_end)
    feats = features_from(eq, rep, x.step, C=C, D=D, s_choice=args.s,
                          divergent_integral=_divergent(eq))
    if args.ell is not None:
        feats = replace(feats, ell=args.ell)
    cert = certify(feats)
    _emit(specio.dumps(cert.as_dict()), args.output)
    return 0


def lambda_table(points: int = LAMBDA_TABLE_POINTS) -> str:
    lines = ["s,lambda,sigma"]
    for s in np.linspace(1.0, 2.0, points):
        lines.append(f"{s:.12g},{lambda_of(s):.12g},{sigma_of(s):.12g}")
    return "\n".join(lines) + "\n"


def cmd_lambda_table(args) -> int:
    _emit(lambda_table(), args.output)
    return 0


def figure_csv(points: int = FIGURE_POINTS) -> str:
    lines = ["s,lambda"]
    lines.extend(f"{s:.12g},{lambda_of(s):.12g}" for s in np.linspace(1.0, 2.0, points))
    return "\n".join(lines) + "\n"


def figure_svg(points: int = FIGURE_POINTS) -> str:
    """``Lambda(s)`` on ``[1, 2]`` continued by the constant 2, with the two classical points."""
    width, height, pad = 480, 320, 40
    x_lo, x_hi, y_lo, y_hi = 1.0, FIGURE_EXTENSION_END, 1.9, 2.55

    def px(s, v):
        return (pad + (s - x_lo) / (x_hi - x_lo) * (width - 2 * pad),
                height - pad - (v - y_lo) / (y_hi - y_lo) * (height - 2 * pad))

    curve = [(s, lambda_of(s)) for s in np.linspace(1.0, 2.0, points)]
    curve.append((FIGURE_EXTENSION_END, 2.0))
    poly = " ".join(f"{a:.2f},{b:.2f}" for a, b in (px(s, v) for s, v in curve))
    marks = "\n".join(
        f'  <circle cx="{a:.2f}" cy="{b:.2f}" r="4" fill="black"/>'
        for a, b in (px(s, v) for s, v in FIGURE_MARKERS)
    )
    x0, y0 = px(x_lo, y_lo)
    x1, _ = px(x_hi, y_lo)
    _, y1 = px(x_lo, y_hi)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'  <line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}" stroke="gray"/>\n'
        f'  <line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x0:.2f}" y2="{y1:.2f}" stroke="gray"/>\n'
        f'  <text x="{x1:.2f}" y="{y0 + 25:.2f}" text-anchor="end" font-size="12">sup-delay integral s</text>\n'
        f'  <text x="{x0 - 5:.2f}" y="{y1 - 10:.2f}" font-size="12">oscillation speed</text>\n'
        f'  <polyline fill="none" stroke="red" stroke-width="2" points="{poly}"/>\n'
        f"{marks}\n"
        "</svg>\n"
    )


def cmd_figure(args) -> int:
    _emit(figure_svg() if args.format == "svg" else figure_csv(), args.output)
    return 0


def cmd_example(args) -> int:
    ex = by_name(args.name, args.s)
    out = Path(args.output or ".")
    tag = ex.name if ex.s is None else f"{ex.name}-{ex.s:g}"
    start = ex.history_start(0.0)
    hist = History.from_function(ex.solution, start, 0.0, args.step, ex.kinks(start, 0.0))
    specio.write_equation_file(out / f"{tag}.json", ex.eq, hist)
    end = 2.0 * ex.period
    x = sample_solution(ex.eq, ex.solution, start, 0.0, end, args.step, ex.kinks(start, end))
    specio.atomic_write(out / f"{tag}_solution.csv", specio.trajectory_csv(x))
    meta = {"name": ex.name, "s": ex.s, "period": ex.period, "expected": ex.expected,
            "t1": ex.eq.t1, "rho": ex.eq.rho}
    specio.atomic_write(out / f"{tag}_expected.json", specio.dumps(meta))
    return 0


def cmd_verify(args) -> int:
    if args.criterion:
        ok = True
        for k in args.criterion:
            for c in verify.run_criterion(k):
                print(f"{k}. {c.line()}")
                ok &= c.passed
    else:
        ok = verify.run_all(print)
    return 0 if ok else EXIT_FAILED


# -- argument parsing --------------------------------------------------------------

def _positive(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayosc",
        description="Simulate and analyse x'(t) + c(t) x(tau(t)) = 0 with piecewise c and tau.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_args(p):
        p.add_argument("--input", required=True, help="equation JSON file")
        p.add_argument("--output", help="output file (default: stdout)")
        p.add_argument("--step", type=_positive, default=1e-3, help="nominal step h")
        p.add_argument("--horizon", type=_positive, help="integration end T (default t0 + 20)")

    def zero_args(p):
        p.add_argument("--eps-zero", type=_positive, default=EPS_ZERO,
                       help="relative threshold for zero clusters")
        p.add_argument("--eps-t", type=_positive, help="merge distance for zeros (default: h)")

    p = sub.add_parser("simulate", help="integrate and write a t,x CSV")
    sim_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="oscillation report as JSON")
    sim_args(p)
    zero_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", help="stability certificate as JSON")
    sim_args(p)
    zero_args(p)
    p.add_argument("--s", type=float, help="fix s in [1, 2] instead of optimising it")
    p.add_argument("--ell", type=float, help="use this oscillation speed instead of the measured one")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("lambda-table", help="s, Lambda(s), sigma(s) on [1, 2]")
    p.add_argument("--output")
    p.set_defaults(func=cmd_lambda_table)

    p = sub.add_parser("figure", help="Lambda(s) dataset (csv) or plot (svg)")
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("example", help="write fixture files for a limit-case solution")
    p.add_argument("--name", choices=("x_s", "y_s", "myshkis_f", "lillo_g"), required=True)
    p.add_argument("--s", type=float, help="parameter s for x_s / y_s (default 2)")
    p.add_argument("--step", type=_positive, default=1e-3)
    p.add_argument("--output", help="output directory (default: current)")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("verify", help="run the oracle suite")
    p.add_argument("--criterion", type=int, action="append", choices=sorted(verify.CRITERIA),
                   help="run only this criterion (repeatable)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NUMERIC_ERRORS as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
