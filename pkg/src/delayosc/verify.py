"""Oracle checks tying every module to exactly known values.

Each check returns a :class:`Check` with the measured worst-case quantity and
the tolerance it is held to; ``run_all`` evaluates the full suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import generators
from .examples import check_g_ys_identity, make_lillo_g, make_myshkis_f, make_xs, make_ys
from .integrator import History, integrate, residual, sample_solution
from .oscillation import (
    Features,
    cascade_check,
    certify,
    classify,
    delay_bounds,
    features_from,
    measure_ell,
    sup_delay_integral,
    verify_exponential,
)
from .special import lambda_of, psi_closed, psi_picard, sigma_argmin, sigma_of

S_VALUES = (1.0, 9.0 / 8.0, 1.5, 2.0)
LN2 = math.log(2.0)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.name}: {self.value:.3e} <= {self.tol:.1e}{extra}"


def _history(ex, h: float) -> History:
    start = ex.history_start(0.0)
    return History.from_function(ex.solution, start, 0.0, h, ex.kinks(start, 0.0))


def check_lambda_values() -> Check:
    err = max(abs(lambda_of(2.0) - 2.0), abs(lambda_of(9.0 / 8.0) - (13.0 / 8.0 + LN2)))
    return Check("lambda values", err, 1e-12)


def check_sigma_argmin() -> list[Check]:
    s, val = sigma_argmin()
    return [
        Check("sigma argmin location", abs(s - 1.125), 1e-9),
        Check("sigma minimum value", abs(val - (2.75 + LN2)), 1e-12),
    ]


def check_psi(n: int = 60) -> list[Check]:
    picard = 0.0
    end = 0.0
    for s in S_VALUES:
        t = np.linspace(0.0, lambda_of(s) - 1.0, 1000)
        picard = max(picard, float(np.max(np.abs(psi_picard(s, t, n) - psi_closed(s, t)))))
        end = max(end, abs(psi_closed(s, lambda_of(s) - 1.0) - 1.0))
    return [Check("psi Picard vs closed form", picard, 1e-6),
            Check("psi(Lambda - 1) = 1", end, 1e-10)]


def named_examples():
    out = [make_xs(s) for s in S_VALUES] + [make_ys(s) for s in S_VALUES]
    return out + [make_myshkis_f(), make_lillo_g()]


def _label(ex) -> str:
    return ex.name if ex.s is None else f"{ex.name}(s={ex.s:g})"


def check_oracle_residual(h: float = 1e-4) -> Check:
    worst, where = 0.0, ""
    for ex in named_examples():
        start = ex.history_start(0.0)
        end = 2.0 * ex.period
        x = sample_solution(ex.eq, ex.solution, start, 0.0, end, h, ex.kinks(start, end))
        r = residual(ex.eq, x)
        if r >= worst:
            worst, where = r, _label(ex)
    return Check("oracle residual", worst, 1e-6, f"worst {where}")


def check_identity(points: int = 10_000) -> Check:
    return Check("g / y_9/8 identity", check_g_ys_identity(points), 1e-12)


def check_measured(h: float = 1e-3) -> list[Check]:
    """Integrated x_s and y_s trajectories reproduce the exact features."""
    checks = []
    for ex in [make_xs(s) for s in S_VALUES]:
        T = ex.eq.rho + 4.0 * ex.period
        x = integrate(ex.eq, _history(ex, h), T, h)
        rep = classify(ex.eq, x)
        tol = 4.0 * h * ex.eq.c.sup_abs(0.0, T)
        err = max(abs(rep.sup_delay_integral - ex.expected["sup_int"]),
                  abs(rep.ell_measured - ex.expected["ell"]))
        checks.append(Check(f"measured sup_int, ell for {_label(ex)}", err, tol))
    for ex in [make_ys(s) for s in S_VALUES]:
        # y_s sits on an unstable equation, so keep the window short
        T = ex.eq.rho + 2.0 * ex.half
        x = integrate(ex.eq, _history(ex, h), T, h)
        rep = classify(ex.eq, x)
        tol = 4.0 * h * ex.eq.c.sup_abs(0.0, T)
        checks.append(Check(f"measured tau_max for {_label(ex)}",
                            abs(rep.tau_max - sigma_of(ex.s)), tol))
    return checks


def check_contraction(count: int = 50, seed: int | None = None, h: float = 1e-3) -> Check:
    """Cascade bound of the 3/2 criterion on random nonnegative equations."""
    rng = np.random.default_rng(generators.seed_from_env() if seed is None else seed)
    worst, short = -math.inf, 0
    for _ in range(count):
        eq, hist, x = generators.draw_oscillatory(
            generators.random_nonneg, rng, lambda e: 40.0, h=h, min_zeros=6,
        )
        q = max(sup_delay_integral(eq, x.t_end), 1.0)
        res = cascade_check(eq, x, q - 0.5, steps=3, slack=0.05)
        short += res.steps < 3
        for obs, bound in zip(res.observed, res.bounds):
            worst = max(worst, obs - bound)
    return Check("3/2 cascade: max(observed - bound)", worst, 0.0,
                 f"{count} equations, {short} with fewer than 3 cascade steps")


def check_speed_bound(count: int = 50, seed: int | None = None, h: float = 1e-3) -> Check:
    """Measured ell never exceeds the sup-delay integral when c <= 0."""
    rng = np.random.default_rng(generators.seed_from_env() if seed is None else seed)
    worst = -math.inf
    for _ in range(count):
        eq, hist, x = generators.draw_oscillatory(
            generators.random_nonpos, rng, lambda e: e.rho + 3.0 * e.tau.period, h=h,
        )
        ell = measure_ell(x, eq, max(eq.rho, x.t0))
        sup = sup_delay_integral(eq, x.t_end)
        margin = 4.0 * h * eq.c.sup_abs(0.0, x.t_end)
        worst = max(worst, ell - sup - margin)
    return Check("speed bound: max(ell - sup_int - 4h sup|c|)", worst, 0.0, f"{count} equations")


def check_sharpness(h: float = 1e-3, periods: int = 10) -> list[Check]:
    checks = []
    for s in (2.0, 9.0 / 8.0):
        ex = make_xs(s)
        x = integrate(ex.eq, _history(ex, h), periods * ex.period, h)
        sups = [x.sup_abs(k * ex.period, (k + 1) * ex.period) for k in range(periods)]
        checks.append(Check(f"x_s(s={s:g}) per-period sup drift", float(np.max(np.abs(np.diff(sups)))), 1e-3))
        cert = certify(Features(ex.eq.c.sign_class(), ex.expected["sup_int"], ex.expected["ell"]))
        factor = math.nan if cert.factor is None else cert.factor
        checks.append(Check(f"x_s(s={s:g}) certified factor |d - 1|", abs(factor - 1.0), 1e-10,
                            cert.theorem.value))
    return checks


def check_exponential(count: int = 10, seed: int | None = None, h: float = 1e-3,
                      horizon: float = 30.0) -> Check:
    rng = np.random.default_rng(generators.seed_from_env() if seed is None else seed)
    worst, uncertified = -math.inf, 0
    for _ in range(count):
        for _attempt in range(generators.MAX_DRAWS):
            eq, hist = generators.random_exponential(rng)
            x = integrate(eq, hist, horizon, h)
            C, D = delay_bounds(eq, horizon)
            cert = certify(features_from(eq, classify(eq, x), h, C=C, D=D))
            if cert.constants is not None:
                break
            uncertified += 1
        ok, margin = verify_exponential(x, cert.constants, eq.t1)
        worst = max(worst, -margin)
    return Check("exponential bound: max(|x| - bound)", worst, 0.0,
                 f"{count} equations, {uncertified} redrawn")


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("lambda values", check_lambda_values),
    2: ("sigma minimum", check_sigma_argmin),
    3: ("psi consistency", check_psi),
    4: ("oracle residual", check_oracle_residual),
    5: ("g / y identity", check_identity),
    6: ("measured oscillation data", check_measured),
    7: ("3/2 contraction", check_contraction),
    8: ("speed bound", check_speed_bound),
    9: ("sharpness", check_sharpness),
    10: ("exponential bound", check_exponential),
}


def run_criterion(k: int) -> list[Check]:
    out = CRITERIA[k][1]()
    return out if isinstance(out, list) else [out]


def run_all(echo: Callable[[str], None] | None = None) -> bool:
    ok = True
    for k, (title, _) in CRITERIA.items():
        checks = run_criterion(k)
        passed = all(c.passed for c in checks)
        ok &= passed
        if echo is not None:
            echo(f"[{'PASS' if passed else 'FAIL'}] {k}. {title}")
            for c in checks:
                echo(f"    {c.line()}")
    return ok
