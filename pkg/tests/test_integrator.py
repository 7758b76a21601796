import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayosc import integrator
from delayosc.errors import HistoryTooShort, NonFiniteValue, StepInvalid
from delayosc.examples import make_xs
from delayosc.fnspec import Equation, Piece, PiecewiseFn
from delayosc.integrator import History, build_grid, integrate, residual, sample_solution


def ode(c=1.0):
    """``x' = -c x``: the delay is the identity."""
    return Equation.build(PiecewiseFn.constant(c), PiecewiseFn.lag(0.0))


def lag_equation(c=1.0, lag=1.0):
    return Equation.build(PiecewiseFn.constant(c), PiecewiseFn.lag(lag))


def exp_error(h, T=5.0):
    x = integrate(ode(), History.constant(1.0, 0.0, 0.0), T, h)
    return float(np.max(np.abs(x.values - np.exp(-x.times))))


def xs_history(ex, h):
    start = ex.history_start(0.0)
    return History.from_function(ex.solution, start, 0.0, h, ex.kinks(start, 0.0))


def test_zero_coefficient_keeps_history_value():
    eq = Equation.build(PiecewiseFn.constant(0.0), PiecewiseFn.lag(1.0))
    x = integrate(eq, History.constant(2.5, -1.0, 0.0), 10.0, 0.01)
    assert np.all(x.values == 2.5)


def test_exponential_decay_accuracy():
    assert exp_error(1e-3) <= 1e-5


def test_second_order_convergence():
    ratio = exp_error(2e-2) / exp_error(1e-2)
    assert 3.2 <= ratio <= 4.8


def test_method_of_steps_values():
    """Constant lag 1, c = 1, x = 1 before 0: x = 1 - t, then 1 - t + (t - 1)^2 / 2."""
    x = integrate(lag_equation(), History.constant(1.0, -1.0, 0.0), 2.0, 1e-3)
    t = x.times[x.i0:]
    exact = np.where(t <= 1.0, 1.0 - t, 1.0 - t + 0.5 * (t - 1.0) ** 2)
    assert np.max(np.abs(x.values[x.i0:] - exact)) <= 1e-9


def test_x2_tracks_exact_solution():
    ex = make_xs(2.0)
    h = 1e-3
    x = integrate(ex.eq, xs_history(ex, h), 3 * ex.period, h)
    assert np.max(np.abs(x.values - ex.solution(x.times))) <= 5e-3


def test_grid_contains_breakpoints():
    ex = make_xs(1.5)
    grid = build_grid(ex.eq, 0.0, 10.0, 0.01)
    for k in ex.eq.breakpoints(0.0, 10.0):
        assert np.min(np.abs(grid - k)) <= 1e-12
    assert np.max(np.diff(grid)) <= 0.01 + 1e-12


def test_trajectory_layout():
    x = integrate(lag_equation(), History.constant(1.0, -1.0, 0.0), 3.0, 0.01)
    assert x.t_start == -1.0 and x.t0 == 0.0 and x.t_end == pytest.approx(3.0)
    assert np.all(np.diff(x.times) > 0)
    assert x.sup_abs(-1.0, 0.0) == 1.0


@pytest.mark.skipif(integrator._kernels_ext is None, reason="compiled kernel not built")
def test_backends_agree():
    ex = make_xs(1.125)
    h = 1e-3
    a = integrate(ex.eq, xs_history(ex, h), 20.0, h, backend="ext")
    b = integrate(ex.eq, xs_history(ex, h), 20.0, h, backend="python")
    assert np.max(np.abs(a.values - b.values)) <= 1e-12


def test_unknown_backend():
    with pytest.raises(ValueError):
        integrate(ode(), History.constant(1.0, 0.0, 0.0), 1.0, 0.1, backend="fortran")


def test_step_too_large():
    with pytest.raises(StepInvalid):
        integrate(ode(2.0), History.constant(1.0, 0.0, 0.0), 1.0, 0.25)
    with pytest.raises(StepInvalid):
        integrate(ode(), History.constant(1.0, 0.0, 0.0), 1.0, -0.1)


def test_history_too_short():
    with pytest.raises(HistoryTooShort):
        integrate(lag_equation(lag=2.0), History.constant(1.0, -1.0, 0.0), 5.0, 0.01)


def test_overflow_reported():
    with pytest.raises(NonFiniteValue):
        integrate(ode(-400.0), History.constant(1.0, 0.0, 0.0), 3.0, 1e-3)


def test_residual_of_zero_solution():
    x = integrate(lag_equation(), History.constant(0.0, -1.0, 0.0), 5.0, 0.01)
    assert residual(lag_equation(), x) == 0.0


def test_exact_solution_residual_small():
    ex = make_xs(2.0)
    start = ex.history_start(0.0)
    end = 2 * ex.period
    x = sample_solution(ex.eq, ex.solution, start, 0.0, end, 1e-4, ex.kinks(start, end))
    assert residual(ex.eq, x) <= 1e-6


def test_wrong_solution_residual_large():
    ex = make_xs(2.0)
    start = ex.history_start(0.0)
    x = sample_solution(ex.eq, lambda t: np.cos(t), start, 0.0, 4.0, 1e-3)
    assert residual(ex.eq, x) > 0.1


@st.composite
def histories(draw):
    vals = draw(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
    return History(np.array([-1.0, -0.5, 0.0]), np.array(vals))


@settings(max_examples=30, deadline=None)
@given(histories(), histories(), st.floats(-3, 3))
def test_linear_in_history(h1, h2, a):
    eq = Equation.build(
        PiecewiseFn([Piece.constant(0, 0.7, 1.2), Piece.affine(0.7, 1.5, -1.0, 1.0)], "periodic"),
        PiecewiseFn.lag(1.0),
    )
    combo = History(h1.times, a * h1.values + h2.values)
    x1, x2, xc = (integrate(eq, h, 6.0, 0.01).values for h in (h1, h2, combo))
    scale = 1.0 + np.max(np.abs(xc))
    assert np.max(np.abs(xc - (a * x1 + x2))) <= 1e-11 * scale


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 1.5), st.floats(0.1, 2.0))
def test_constant_history_sign_preserved_for_small_lag(c, lag):
    """Below c * lag = 1/e solutions of a constant positive history stay positive."""
    if c * lag >= 1.0 / math.e:
        return
    x = integrate(lag_equation(c, lag), History.constant(1.0, -lag, 0.0), 20.0, 0.01)
    assert np.all(x.values > 0)
