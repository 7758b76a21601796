"""Limit-case periodic solutions and the equations they solve exactly.

Each constructor returns a :class:`NamedExample` bundling the equation, an exact
analytic evaluator of its periodic (or antiperiodic) solution and the exact
values of the sup-delay integral, the oscillation speed and the maximal delay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fnspec import BREAK_TOL, Equation, Piece, PiecewiseFn
from .special import PsiProfile, _check_s, lambda_of, psi_closed

LN2 = math.log(2.0)


@dataclass(frozen=True)
class NamedExample:
    """An equation together with an exact solution of it.

    ``base`` evaluates the solution on ``[0, half]``; the solution is extended
    by ``x(t + half) = sign * x(t)``, so ``sign = -1`` marks an antiperiodic
    solution whose full period is ``2 * half``.
    """

    name: str
    s: float | None
    eq: Equation
    base: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    half: float
    sign: int
    knots: tuple
    expected: dict

    @property
    def period(self) -> float:
        return self.half if self.sign > 0 else 2.0 * self.half

    def solution(self, t):
        """Exact solution value(s) at ``t`` (any real ``t``)."""
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.floor(arr / self.half)
        r = arr - k * self.half
        # floor can land one cell off when t is within rounding of a multiple
        over = r >= self.half
        k[over] += 1
        r[over] -= self.half
        r = np.clip(r, 0.0, self.half)
        out = self.base(r)
        if self.sign < 0:
            out = np.where(np.mod(k, 2) == 0, out, -out)
        if np.ndim(t) == 0:
            return float(out[0])
        return out

    __call__ = solution

    def history_start(self, t0: float = 0.0) -> float:
        return self.eq.tau.tau_min(t0)

    def kinks(self, a: float, b: float) -> list[float]:
        """Points of ``[a, b]`` where the solution may fail to be smooth."""
        out = []
        k_lo = math.floor(a / self.half) - 1
        k_hi = math.ceil(b / self.half) + 1
        for k in range(k_lo, k_hi + 1):
            for knot in (0.0,) + tuple(self.knots):
                t = k * self.half + knot
                if a - BREAK_TOL <= t <= b + BREAK_TOL:
                    out.append(min(max(t, a), b))
        return sorted(set(out))


def _pieces(rows, period: float):
    """Build pieces from ``(start, end, slope, intercept)`` rows, dropping empty ones."""
    out = []
    for start, end, slope, intercept in rows:
        if end - start <= BREAK_TOL:
            continue
        if slope == 0.0:
            out.append(Piece.constant(start, end, intercept))
        else:
            out.append(Piece.affine(start, end, slope, intercept))
    # absorb rounding at the period end into the last piece
    last = out[-1]
    out[-1] = Piece(last.start, period, last.kind, last.slope, last.intercept)
    return out


def _coefficient(rows, period: float) -> PiecewiseFn:
    return PiecewiseFn(
        _pieces([(a, b, 0.0, v) for a, b, v in rows], period),
        extension="periodic", role="coefficient",
    )


def _delay(rows, period: float) -> PiecewiseFn:
    return PiecewiseFn(_pieces(rows, period), extension="affine_periodic", role="delay")


def _xs_base(s: float):
    lam = lambda_of(s)
    end = lam - 1.0

    def base(r):
        out = np.empty_like(r)
        rising = r <= end
        out[rising] = psi_closed(s, r[rising])
        out[~rising] = lam - r[~rising]
        return out

    return base


def make_xs(s: float) -> NamedExample:
    """The nonnegative ``Lambda(s)``-periodic solution ``x_s`` built from ``psi_s``."""
    s = _check_s(s)
    lam = lambda_of(s)
    prof = PsiProfile.of(s)
    k1, k2, k3 = prof.knots
    c = _coefficient([(0.0, k3, -1.0), (k3, lam, 1.0)], lam)
    tau = _delay(
        [
            (0.0, k1, 0.0, -1.0),
            (k1, k2, 1.0, -s),
            (k2, k3, 1.0, 0.0),
            (k3, lam, 0.0, k3),
        ],
        lam,
    )
    eq = Equation.build(c, tau)
    return NamedExample(
        name="x_s", s=s, eq=eq, base=_xs_base(s), half=lam, sign=1,
        knots=(k1, k2, k3),
        expected={"sup_int": s, "ell": lam, "tau_max": s},
    )


def make_ys(s: float) -> NamedExample:
    """The antiperiodic solution ``y_s`` with ``|y_s| = x_s`` and ``c = -1``."""
    s = _check_s(s)
    lam = lambda_of(s)
    k1, k2, k3 = PsiProfile.of(s).knots
    c = _coefficient([(0.0, lam, -1.0)], lam)
    tau = _delay(
        [
            (0.0, k1, 0.0, -1.0 - lam),
            (k1, k2, 1.0, -s - lam),
            (k2, k3, 1.0, 0.0),
            (k3, lam, 0.0, -1.0),
        ],
        lam,
    )
    eq = Equation.build(c, tau)
    return NamedExample(
        name="y_s", s=s, eq=eq, base=_xs_base(s), half=lam, sign=-1,
        knots=(k1, k2, k3),
        expected={"sup_int": s + lam, "ell": lam, "tau_max": s + lam},
    )


def _f_base(r):
    u = r - 1.5
    return np.where(r <= 1.5, 1.0 - r, -0.5 - (u - 0.5 * u * u))


def make_myshkis_f() -> NamedExample:
    """Myshkis' function ``f``: antiperiodic with half-period 5/2, ``0 <= c <= 1``."""
    half = 2.5
    c = _coefficient([(0.0, half, 1.0)], half)
    tau = _delay([(0.0, 1.5, 0.0, 0.0), (1.5, half, 1.0, -1.5)], half)
    eq = Equation.build(c, tau)
    return NamedExample(
        name="myshkis_f", s=None, eq=eq, base=_f_base, half=half, sign=-1,
        knots=(1.0, 1.5),
        expected={"sup_int": 1.5, "ell": half, "tau_max": 1.5},
    )


def _g_base(r):
    u = r - 9.0 / 8.0
    return np.select(
        [r <= 9.0 / 8.0, r <= 13.0 / 8.0],
        [1.0 - r, -0.125 - (u - 0.5 * u * u)],
        -0.5 * np.exp(r - 13.0 / 8.0),
    )


def make_lillo_g() -> NamedExample:
    """Lillo's function ``g``: antiperiodic with half-period ``13/8 + ln 2``, ``c = -1``."""
    half = 13.0 / 8.0 + LN2
    c = _coefficient([(0.0, half, -1.0)], half)
    tau = _delay(
        [
            (0.0, 9.0 / 8.0, 0.0, -half),
            (9.0 / 8.0, 13.0 / 8.0, 1.0, -9.0 / 8.0 - half),
            (13.0 / 8.0, half, 1.0, 0.0),
        ],
        half,
    )
    eq = Equation.build(c, tau)
    sigma = 9.0 / 8.0 + half
    return NamedExample(
        name="lillo_g", s=None, eq=eq, base=_g_base, half=half, sign=-1,
        knots=(1.0, 9.0 / 8.0, 13.0 / 8.0),
        expected={"sup_int": sigma, "ell": half, "tau_max": sigma},
    )


def check_g_ys_identity(grid_points: int = 10_000, shift: float | None = None) -> float:
    """Max of ``|g(t + 1) - y_{9/8}(t + shift)|`` over two full periods.

    ``shift`` defaults to ``ln 2 + 13/8``, where the two functions coincide.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    if shift is None:
        shift = LN2 + 13.0 / 8.0
    g = make_lillo_g()
    y = make_ys(9.0 / 8.0)
    t = np.linspace(0.0, 2.0 * g.period, grid_points)
    return float(np.max(np.abs(g(t + 1.0) - y(t + shift))))


def by_name(name: str, s: float | None = None) -> NamedExample:
    makers = {
        "x_s": lambda: make_xs(2.0 if s is None else s),
        "y_s": lambda: make_ys(2.0 if s is None else s),
        "myshkis_f": make_myshkis_f,
        "lillo_g": make_lillo_g,
    }
    try:
        return makers[name]()
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(makers)}") from None
