"""Seeded random equations for property checks.

All generators take a ``numpy.random.Generator`` and return
``(equation, history)``; candidates failing a cheap structural filter are
redrawn, so results depend only on the generator state.
"""
from __future__ import annotations

import math
import os

import numpy as np

from .examples import make_ys
from .fnspec import Equation, Piece, PiecewiseFn
from .integrator import History, Trajectory, integrate
from .oscillation import delay_integral_range, find_zeros

DEFAULT_SEED = 20240607
INV_E = 1.0 / math.e
MAX_DRAWS = 1000


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    """Seed from ``DELAYOSC_SEED`` if set, else ``default``."""
    raw = os.environ.get("DELAYOSC_SEED")
    return int(raw) if raw not in (None, "") else default


def _cuts(rng: np.random.Generator, period: float, n: int) -> np.ndarray:
    inner = np.sort(rng.uniform(0.1, 0.9, n - 1)) * period
    return np.concatenate(([0.0], inner, [period]))


def _random_history(rng: np.random.Generator, t_start: float, knots: int = 5) -> History:
    times = np.linspace(t_start, 0.0, knots)
    values = rng.uniform(-1.0, 1.0, knots)
    values[-1] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
    return History(times, values)


def _lag_delay(cuts: np.ndarray, lags) -> PiecewiseFn:
    pieces = [Piece.affine(a, b, 1.0, -r) for a, b, r in zip(cuts[:-1], cuts[1:], lags)]
    return PiecewiseFn(pieces, extension="affine_periodic", role="delay")


def _coefficient(cuts: np.ndarray, values) -> PiecewiseFn:
    pieces = [Piece.constant(a, b, v) for a, b, v in zip(cuts[:-1], cuts[1:], values)]
    return PiecewiseFn(pieces, extension="periodic", role="coefficient")


def random_nonneg(rng: np.random.Generator, sup_range=(0.5, 1.4),
                  inf_min: float = INV_E + 0.02) -> tuple[Equation, History]:
    """Nonnegative piecewise-constant ``c`` with piecewise lags.

    ``c`` is rescaled so the sup-delay integral hits a target drawn from
    ``sup_range``; draws whose inf-delay integral is at most ``inf_min`` are
    rejected, which keeps solutions oscillatory.
    """
    for _ in range(MAX_DRAWS):
        period = rng.uniform(1.0, 3.0)
        n = int(rng.integers(2, 5))
        cuts = _cuts(rng, period, n)
        base_lag = rng.uniform(0.7, 1.3)
        lags = base_lag * rng.uniform(0.9, 1.1, n)
        vals = rng.uniform(0.85, 1.15, n)
        tau = _lag_delay(cuts, lags)
        probe = Equation.build(_coefficient(cuts, vals), tau)
        lo, hi = delay_integral_range(probe, probe.rho + period)
        target = rng.uniform(*sup_range)
        scale = target / hi
        if lo * scale <= inf_min:
            continue
        eq = Equation.build(_coefficient(cuts, vals * scale), tau)
        return eq, _random_history(rng, tau.tau_min(0.0))
    raise RuntimeError("no admissible nonnegative equation drawn")


def random_nonpos(rng: np.random.Generator, kappa_range=(0.8, 1.0)) -> tuple[Equation, History]:
    """Nonpositive ``c`` obtained by rescaling ``y_s``'s coefficient piecewise.

    The delay is that of ``y_s`` for a random ``s`` and ``|c|`` takes values in
    ``kappa_range`` on random subdivisions of the period; ``y_s`` itself
    seeds the history.  Roughly half of the draws oscillate; see
    :func:`draw_oscillatory`.
    """
    s = float(rng.uniform(1.0, 2.0))
    ex = make_ys(s)
    period = ex.half
    n = int(rng.integers(1, 5))
    cuts = _cuts(rng, period, n) if n > 1 else np.array([0.0, period])
    vals = -rng.uniform(*kappa_range, len(cuts) - 1)
    eq = Equation.build(_coefficient(cuts, vals), ex.eq.tau)
    start = eq.tau.tau_min(0.0)
    return eq, History.from_function(ex.solution, start, 0.0, 1e-3, ex.kinks(start, 0.0))


def random_exponential(rng: np.random.Generator, ar_range=(0.8, 0.95)) -> tuple[Equation, History]:
    """Nearly constant nonnegative ``c`` with a constant lag and ``a r`` in ``ar_range``.

    Such equations satisfy the two-sided delay bounds with ``C = 2 r`` and
    oscillate at a speed ``ell`` between 2 and ``Lambda(1)``.
    """
    lag = float(rng.uniform(0.9, 1.1))
    ar = float(rng.uniform(*ar_range))
    n = int(rng.integers(1, 4))
    cuts = _cuts(rng, 1.0, n) if n > 1 else np.array([0.0, 1.0])
    vals = (ar / lag) * rng.uniform(0.97, 1.03, len(cuts) - 1)
    tau = _lag_delay(cuts, [lag] * (len(cuts) - 1))
    eq = Equation.build(_coefficient(cuts, vals), tau)
    start = tau.tau_min(0.0)
    return eq, History(np.array([start, 0.0]), np.array([1.0, 1.0]) * rng.choice([-1.0, 1.0]))


def draw_oscillatory(generator, rng: np.random.Generator, horizon, h: float = 1e-3,
                     min_zeros: int = 3, **kwargs) -> tuple[Equation, History, Trajectory]:
    """Redraw from ``generator`` until the integrated solution has ``min_zeros`` zeros.

    ``horizon(eq)`` gives the integration end; zeros are counted from
    ``max(rho, t0)`` on.
    """
    for _ in range(MAX_DRAWS):
        eq, hist = generator(rng, **kwargs)
        x = integrate(eq, hist, horizon(eq), h)
        start = max(eq.rho, hist.t0)
        if sum(z >= start for z in find_zeros(x)) >= min_zeros:
            return eq, hist, x
    raise RuntimeError("no oscillatory solution drawn")
