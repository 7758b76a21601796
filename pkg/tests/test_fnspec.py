import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from delayosc.errors import OutOfDomain, Unbounded, ValidationError
from delayosc.examples import make_xs, make_ys
from delayosc.fnspec import (
    Equation,
    Piece,
    PiecewiseFn,
    abs_integral,
    breakpoints,
    compute_anchor,
    eval_fn,
    tau_min,
    tau_min_iter,
)
from delayosc.special import lambda_of


def tau2():
    return make_xs(2.0).eq.tau


def c2():
    return make_xs(2.0).eq.c


def simpson(f, a, b, panels=100_000):
    t = np.linspace(a, b, 2 * panels + 1)
    t[-1] = np.nextafter(b, a)  # left limit at a possible jump
    y = np.abs(f(t))
    h = (b - a) / (2 * panels)
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


# -- eval ----------------------------------------------------------------------------

def test_eval_constant_piece():
    f = PiecewiseFn([Piece.constant(0, 2, 1.0)])
    assert eval_fn(f, 1.3) == 1.0


def test_eval_tau2_values():
    assert tau2()(0.5) == -1.0
    assert tau2()(1.5) == 1.0


def test_eval_affine_periodic_lag():
    tau = PiecewiseFn([Piece.affine(0, 1, 1.0, -1.0)], "affine_periodic", "delay")
    assert tau(3.4) == pytest.approx(2.4, abs=1e-14)


def test_eval_right_continuous_at_breakpoints():
    f = PiecewiseFn([Piece.constant(0, 1, 5.0), Piece.constant(1, 2, 7.0)])
    assert f(1.0) == 7.0


def test_eval_out_of_domain():
    f = PiecewiseFn([Piece.constant(0, 2, 1.0)])
    with pytest.raises(OutOfDomain):
        f(2.5)
    with pytest.raises(OutOfDomain):
        f(-0.1)


def test_eval_array_matches_scalar():
    tau = make_ys(1.3).eq.tau
    t = np.linspace(0, 12, 997)
    assert np.array_equal(tau.eval_array(t), np.array([tau(u) for u in t]))


# -- construction ------------------------------------------------------------------

def test_gap_is_named():
    with pytest.raises(ValidationError, match=r"gap between pieces: \[1.0, 1.5\)"):
        PiecewiseFn([Piece.constant(0, 1, 1.0), Piece.constant(1.5, 2, 1.0)])


def test_overlap_rejected():
    with pytest.raises(ValidationError, match="overlapping"):
        PiecewiseFn([Piece.constant(0, 1.2, 1.0), Piece.constant(1.0, 2, 1.0)])


def test_delay_exceeding_t_rejected():
    with pytest.raises(ValidationError, match="delay exceeds t"):
        PiecewiseFn([Piece.affine(0, 1, 1.0, 1.0)], "affine_periodic", "delay")


def test_periodic_delay_is_unbounded():
    with pytest.raises(Unbounded):
        PiecewiseFn([Piece.constant(0, 1, -1.0)], "periodic", "delay")


def test_empty_piece_rejected():
    with pytest.raises(ValidationError):
        Piece.constant(1.0, 1.0, 0.0)


# -- abs_integral ------------------------------------------------------------------

def test_abs_integral_constant():
    assert abs_integral(PiecewiseFn.constant(1.0), 0, 1.5) == pytest.approx(1.5, abs=1e-15)


@pytest.mark.parametrize("s", [1.0, 1.125, 1.5, 2.0])
def test_abs_integral_cs_over_period(s):
    ex = make_xs(s)
    assert abs_integral(ex.eq.c, 0, lambda_of(s)) == pytest.approx(lambda_of(s), rel=1e-14)


def test_abs_integral_affine_sign_change():
    f = PiecewiseFn([Piece.affine(0, 2, -1.0, 1.0)])
    assert abs_integral(f, 0, 2) == pytest.approx(1.0, abs=1e-15)
    assert simpson(lambda t: 1 - t, 0, 2) == pytest.approx(1.0, rel=1e-8)


def test_abs_integral_reversed_bounds():
    with pytest.raises(OutOfDomain):
        abs_integral(PiecewiseFn.constant(1.0), 2, 1)


def test_abs_integral_matches_simpson_on_examples():
    f = PiecewiseFn(
        [Piece.affine(0, 1.5, 2.0, -1.0), Piece.constant(1.5, 2.0, -0.5), Piece.affine(2.0, 3.0, -1.0, 2.5)],
        "periodic",
    )
    a, b = 0.3, 7.9
    knots = sorted({a, b, *breakpoints(f, a, b)})
    ref = sum(simpson(f.eval_array, u, v, panels=20_000) for u, v in zip(knots, knots[1:]))
    assert abs_integral(f, a, b) == pytest.approx(ref, rel=1e-8)


# -- breakpoints -------------------------------------------------------------------

def test_breakpoints_constant():
    f = PiecewiseFn([Piece.constant(0, 10, 1.0)])
    assert breakpoints(f, 0, 10) == [0.0, 10.0]


def test_breakpoints_c2():
    assert breakpoints(c2(), 0, 4) == [0.0, 1.0, 2.0, 3.0, 4.0]


def test_breakpoints_affine_root():
    f = PiecewiseFn([Piece.affine(0, 2, -1.0, 1.0)])
    assert breakpoints(f, 0, 2) == [0.0, 1.0, 2.0]


# -- tau_min and anchors ----------------------------------------------------------

def test_tau_min_monotone_lag():
    assert tau_min(PiecewiseFn.lag(1.0), 5.0) == pytest.approx(4.0)


def test_tau_min_tau2():
    assert tau_min(tau2(), 0.0) == -1.0
    grid = np.linspace(1.0, 1.0 + 4.0, 40001)
    assert tau_min(tau2(), 1.0) == pytest.approx(tau2().eval_array(grid).min()) == 1.0


def test_tau_min_iter_lag():
    lag = PiecewiseFn.lag(1.0)
    assert tau_min_iter(lag, 5.0, 2) == pytest.approx(3.0)
    assert tau_min_iter(lag, 5.0, 1) == pytest.approx(4.0)


def test_tau_min_iter_tau2_against_brute_force():
    def brute(t):
        return tau2().eval_array(np.linspace(t, t + 4.0, 80001)).min()

    assert tau_min_iter(tau2(), 4.0, 2) == pytest.approx(brute(brute(4.0)), abs=1e-12)


def test_compute_anchor_lag():
    t1, rho = compute_anchor(PiecewiseFn.lag(1.0))
    assert t1 == pytest.approx(1.0, abs=1e-11)
    assert rho == pytest.approx(2.0 + 1e-9, abs=1e-11)


def test_compute_anchor_no_lag():
    t1, rho = compute_anchor(PiecewiseFn.lag(0.0))
    assert t1 == pytest.approx(0.0, abs=1e-11)
    assert 0.0 <= rho < 1e-8


def test_compute_anchor_tau2_matches_grid_scan():
    t1, _ = compute_anchor(tau2())
    grid = np.linspace(0, 4, 40001)
    scan = next(t for t in grid if tau_min(tau2(), t) > 0)
    assert abs(t1 - scan) <= 1e-4 + 1e-9
    assert t1 == pytest.approx(1.0, abs=1e-9)


def test_equation_rejects_swapped_roles():
    with pytest.raises(ValidationError):
        Equation.build(PiecewiseFn.lag(1.0), PiecewiseFn.lag(1.0))


def test_equation_common_period():
    eq = Equation.build(PiecewiseFn.constant(1.0, period=0.5), PiecewiseFn.lag(1.0, period=1.0))
    assert eq.period == 1.0
    assert make_xs(1.5).eq.period == pytest.approx(lambda_of(1.5))


# -- properties --------------------------------------------------------------------

@st.composite
def coefficients(draw):
    n = draw(st.integers(1, 4))
    widths = draw(st.lists(st.floats(0.1, 2.0), min_size=n, max_size=n))
    edges = np.concatenate(([0.0], np.cumsum(widths)))
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        if draw(st.booleans()):
            pieces.append(Piece.constant(a, b, draw(st.floats(-3, 3))))
        else:
            pieces.append(Piece.affine(a, b, draw(st.floats(-3, 3)), draw(st.floats(-3, 3))))
    return PiecewiseFn(pieces, "periodic")


@st.composite
def delays(draw):
    n = draw(st.integers(1, 4))
    widths = draw(st.lists(st.floats(0.1, 2.0), min_size=n, max_size=n))
    edges = np.concatenate(([0.0], np.cumsum(widths)))
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        lag = draw(st.floats(0.0, 3.0))
        if draw(st.booleans()):
            pieces.append(Piece.affine(a, b, 1.0, -lag))
        else:
            pieces.append(Piece.constant(a, b, a - lag))
    return PiecewiseFn(pieces, "affine_periodic", "delay")


@settings(max_examples=60, deadline=None)
@given(coefficients(), st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_abs_integral_additive(f, a, b, c):
    a, b, c = sorted((a, b, c))
    whole = abs_integral(f, a, c)
    assert abs_integral(f, a, b) + abs_integral(f, b, c) == pytest.approx(whole, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(coefficients(), st.floats(0, 20))
def test_periodic_extension_consistent(f, t):
    assume(min(abs(t - k) for k in breakpoints(f, 0, t + 1)) > 1e-9)
    assert f(t + f.period) == pytest.approx(f(t), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(delays(), st.floats(0, 20))
def test_affine_periodic_extension_consistent(tau, t):
    assume(min(abs(t - k) for k in breakpoints(tau, 0, t + 1)) > 1e-9)
    assert tau(t + tau.period) == pytest.approx(tau(t) + tau.period, rel=1e-12, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(delays(), st.lists(st.floats(0, 15), min_size=2, max_size=20))
def test_tau_min_nondecreasing_and_below_tau(tau, ts):
    ts = sorted(ts)
    mins = [tau_min(tau, t) for t in ts]
    assert all(b >= a - 1e-12 for a, b in zip(mins, mins[1:]))
    assert all(m <= tau(t) + 1e-12 for m, t in zip(mins, ts))


@settings(max_examples=25, deadline=None)
@given(delays(), st.integers(0, 2**32 - 1))
def test_delay_validity_random_points(tau, seed):
    t = np.random.default_rng(seed).uniform(0, 50, 10_000)
    assert np.all(tau.eval_array(t) <= t + 1e-9)


@pytest.mark.parametrize("maker", [make_xs, make_ys])
@pytest.mark.parametrize("s", [1.0, 1.125, 1.5, 2.0])
def test_example_delays_valid(maker, s):
    tau = maker(s).eq.tau
    t = np.random.default_rng(7).uniform(0, 30, 10_000)
    assert np.all(tau.eval_array(t) <= t + 1e-12)
    assert math.isfinite(tau_min(tau, 0.0))
