"""Fixed-step integration of ``x'(t) + c(t) x(tau(t)) = 0`` from a history segment.

Each step ``[t_n, t_{n+1}]`` advances ``x`` by two-point Gauss-Legendre
quadrature of ``c(u) x(tau(u))``, with ``x`` at delayed arguments taken from
the piecewise-linear interpolant of history and computed values.  Breakpoints
of ``c`` and ``tau`` are always grid points, so every panel is smooth.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import _kernels_py
from .errors import HistoryTooShort, NonFiniteValue, StepInvalid
from .fnspec import BREAK_TOL, Equation

try:  # compiled core, optional
    from . import _kernels as _kernels_ext
except ImportError:  # pragma: no cover - depends on the build
    _kernels_ext = None

#: ``"ext"`` when the compiled kernel is in use, ``"python"`` otherwise
BACKEND = "ext" if (_kernels_ext is not None and not os.environ.get("DELAYOSC_PURE")) else "python"

_GAUSS = 0.5 / math.sqrt(3.0)
#: uniform grid points closer than this fraction of h to a breakpoint are dropped
MERGE_FRACTION = 1e-3


def _kernel(backend: str | None):
    backend = backend or BACKEND
    if backend == "ext":
        if _kernels_ext is None:
            raise RuntimeError("compiled kernel not built")
        return _kernels_ext.advance
    if backend == "python":
        return _kernels_py.advance
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class History:
    """Initial function on ``[t_start, t0]`` given by samples."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 1:
            raise ValueError("history needs matching 1-d times and values")
        if np.any(np.diff(times) <= 0):
            raise ValueError("history times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t0(self) -> float:
        return float(self.times[-1])

    @classmethod
    def constant(cls, value: float, t_start: float, t0: float) -> "History":
        if t_start == t0:
            return cls(np.array([t0]), np.array([value]))
        return cls(np.array([t_start, t0]), np.array([value, value]))

    @classmethod
    def from_function(cls, fn: Callable, t_start: float, t0: float, h: float,
                      knots: Iterable[float] = ()) -> "History":
        """Sample ``fn`` on a grid of spacing ``<= h`` that contains ``knots``."""
        grid = _merged_grid(t_start, t0, h, knots)
        return cls(grid, np.asarray(fn(grid), dtype=float))


@dataclass(frozen=True)
class Trajectory:
    """Samples of a solution; ``times[i0]`` is ``t0``, earlier samples are history."""

    times: np.ndarray
    values: np.ndarray
    step: float
    equation: Equation
    i0: int = 0

    @property
    def t0(self) -> float:
        return float(self.times[self.i0])

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def sup_abs(self, a: float, b: float) -> float:
        """``sup |x|`` over ``[a, b]`` for the piecewise-linear interpolant."""
        mask = (self.times >= a) & (self.times <= b)
        inner = np.abs(self.values[mask])
        ends = np.abs(self(np.array([a, b])))
        return float(max(inner.max(initial=0.0), ends.max()))


def _merged_grid(a: float, b: float, h: float, knots: Iterable[float] = ()) -> np.ndarray:
    if b <= a:
        return np.array([a])
    n = max(1, math.ceil((b - a) / h - 1e-9))
    uniform = a + (b - a) * np.arange(n + 1) / n
    knots = np.array(sorted(k for k in knots if a < k < b), dtype=float)
    if knots.size == 0:
        return uniform
    # drop uniform points crowding a knot so no step degenerates
    pos = np.searchsorted(knots, uniform)
    near = np.zeros(uniform.shape, dtype=bool)
    for side in (pos - 1, pos):
        ok = (side >= 0) & (side < knots.size)
        near[ok] |= np.abs(uniform[ok] - knots[side[ok]]) < MERGE_FRACTION * h
    near[0] = near[-1] = False
    grid = np.union1d(uniform[~near], knots)
    keep = np.concatenate(([True], np.diff(grid) > BREAK_TOL * max(1.0, abs(b))))
    return grid[keep]


def build_grid(eq: Equation, t0: float, t_end: float, h: float) -> np.ndarray:
    """Uniform ``h`` grid on ``[t0, t_end]`` merged with every breakpoint of ``c`` and ``tau``."""
    return _merged_grid(t0, t_end, h, eq.breakpoints(t0, t_end))


def _gauss_nodes(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dt = np.diff(grid)
    mid = 0.5 * (grid[:-1] + grid[1:])
    nodes = np.stack((mid - _GAUSS * dt, mid + _GAUSS * dt), axis=1)
    return nodes, dt


def _delayed_arguments(eq: Equation, nodes: np.ndarray) -> np.ndarray:
    v = eq.tau.eval_array(nodes.ravel()).reshape(nodes.shape)
    # rounding in the affine-periodic shift must not push tau(u) past u
    return np.minimum(v, nodes)


def check_step(eq: Equation, t0: float, t_end: float, h: float) -> float:
    """Validate ``h`` and return ``sup |c|`` on ``[t0, t_end]``."""
    if not (h > 0 and math.isfinite(h)):
        raise StepInvalid(f"step must be positive, got {h}")
    sup_c = eq.c.sup_abs(t0, t_end)
    if sup_c > 0 and h >= 0.5 / sup_c:
        raise StepInvalid(f"step {h} >= 0.5 / sup|c| = {0.5 / sup_c}")
    return sup_c


def integrate(eq: Equation, hist: History, t_end: float, h: float,
              backend: str | None = None) -> Trajectory:
    """Integrate forward from ``hist`` to ``t_end`` with nominal step ``h``."""
    t0 = hist.t0
    if not t_end > t0:
        raise ValueError(f"t_end = {t_end} must exceed t0 = {t0}")
    check_step(eq, t0, t_end, h)
    if eq.tau.tau_min(t0) < hist.t_start - BREAK_TOL * max(1.0, abs(t0)):
        raise HistoryTooShort(
            f"history starts at {hist.t_start} but tau reaches {eq.tau.tau_min(t0)}"
        )

    grid = build_grid(eq, t0, t_end, h)
    grid[0] = t0
    nodes, dt = _gauss_nodes(grid)
    v = _delayed_arguments(eq, nodes)
    W = np.ascontiguousarray(eq.c.eval_array(nodes.ravel()).reshape(nodes.shape) * (0.5 * dt)[:, None])

    m = hist.times.size - 1
    times = np.concatenate((hist.times[:-1], grid))
    X = np.zeros(times.size)
    X[: m + 1] = hist.values

    if v.min() < times[0] - BREAK_TOL * max(1.0, abs(times[0])):
        raise HistoryTooShort(f"delayed argument {v.min()} precedes history start {times[0]}")
    v = np.maximum(v, times[0])
    current = m + np.arange(grid.size - 1)[:, None]
    J = np.searchsorted(times, v, side="right") - 1
    J = np.minimum(np.maximum(J, 0), current)
    F = (v - times[J]) / (times[J + 1] - times[J])

    failed = _kernel(backend)(
        X, np.ascontiguousarray(J, dtype=np.intp), np.ascontiguousarray(F), W, m
    )
    if failed >= 0:
        raise NonFiniteValue(f"overflow at t = {grid[failed + 1]}")
    return Trajectory(times, X, float(h), eq, i0=m)


def residual_profile(eq: Equation, x: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Per-interval averaged residual on the integration part of ``x``.

    Returns the interval left ends and
    ``|x(t_{n+1}) - x(t_n) + int c(u) x(tau(u)) du| / (t_{n+1} - t_n)``.
    """
    grid = x.times[x.i0:]
    vals = x.values[x.i0:]
    if grid.size < 2:
        return grid[:0], vals[:0]
    nodes, dt = _gauss_nodes(grid)
    v = _delayed_arguments(eq, nodes)
    if v.min() < x.times[0] - BREAK_TOL * max(1.0, abs(x.times[0])):
        raise HistoryTooShort(f"delayed argument {v.min()} precedes trajectory start {x.times[0]}")
    xv = np.interp(v, x.times, x.values)
    cv = eq.c.eval_array(nodes.ravel()).reshape(nodes.shape)
    integral = 0.5 * dt * (cv * xv).sum(axis=1)
    return grid[:-1], np.abs(np.diff(vals) + integral) / dt


def residual(eq: Equation, x: Trajectory) -> float:
    """Maximum interval-averaged residual of ``x`` against ``eq``."""
    _, r = residual_profile(eq, x)
    return float(r.max(initial=0.0))


def sample_solution(eq: Equation, fn: Callable, t_start: float, t0: float, t_end: float,
                    h: float, knots: Iterable[float] = ()) -> Trajectory:
    """Trajectory of an exactly known function on the grid ``integrate`` would use."""
    knots = list(knots)
    hist = History.from_function(fn, t_start, t0, h, knots)
    grid = build_grid(eq, t0, t_end, h)
    extra = [k for k in knots if t0 < k < t_end]
    if extra:
        grid = _merged_grid(t0, t_end, h, sorted(set(extra) | set(grid[1:-1].tolist())))
    grid[0] = t0
    times = np.concatenate((hist.times[:-1], grid))
    values = np.asarray(fn(times), dtype=float)
    return Trajectory(times, values, float(h), eq, i0=hist.times.size - 1)
