import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayosc import generators
from delayosc.errors import InconsistentFeatures, TooFewZeros, WindowTooShort
from delayosc.examples import make_lillo_g, make_myshkis_f, make_xs, make_ys
from delayosc.fnspec import Equation, PiecewiseFn
from delayosc.integrator import History, Trajectory, integrate
from delayosc.oscillation import (
    Features,
    Verdict,
    best_s,
    cascade_check,
    certify,
    classify,
    delay_bounds,
    features_from,
    find_zeros,
    measure_ell,
    sign_segments,
    sup_delay_integral,
    tau_max,
    verify_exponential,
)
from delayosc.special import Theorem, decay_factor, exp_decay_constants, lambda_of, sigma_of

LAG1 = Equation.build(PiecewiseFn.constant(1.0), PiecewiseFn.lag(1.0))


def traj(t, v, eq=LAG1, step=None):
    t = np.asarray(t, dtype=float)
    return Trajectory(t, np.asarray(v, dtype=float), step or float(t[1] - t[0]), eq)


def sine(a=0.5, b=11.7, h=1e-3, freq=1.0):
    t = np.arange(a, b + h / 2, h)
    return traj(t, np.sin(math.pi * freq * t))


# -- zeros ---------------------------------------------------------------------------

def test_sine_zeros_at_integers():
    z = find_zeros(sine())
    assert len(z) == 11
    assert np.max(np.abs(np.array(z) - np.arange(1, 12))) <= 1e-6


def test_zero_cluster_reported_at_midpoint():
    x = traj(np.arange(7.0), [1.0, 0.5, 0.0, 0.0, 0.0, -0.5, -1.0], step=1.0)
    assert find_zeros(x, eps_t=0.5) == [3.0]


def test_close_candidates_merged():
    x = traj([0.0, 1.0, 1.001, 2.0], [1.0, -1e-3, 1e-3, 1.0], step=0.5)
    assert len(find_zeros(x)) == 1


def test_no_zeros_for_positive_function():
    t = np.linspace(0, 5, 501)
    assert find_zeros(traj(t, 1 + t)) == []


def test_bad_thresholds_rejected():
    with pytest.raises(ValueError):
        find_zeros(sine(), eps_zero=0.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.3, 3.0), min_size=2, max_size=8))
def test_zeros_of_piecewise_linear_function(gaps):
    """Sign-alternating knots produce one zero per knot pair, found by interpolation."""
    knots = np.concatenate(([0.0], np.cumsum(gaps)))
    vals = np.array([(-1.0) ** k for k in range(knots.size)])
    t = np.linspace(0, knots[-1], 20_001)
    x = traj(t, np.interp(t, knots, vals))
    expected = 0.5 * (knots[:-1] + knots[1:])
    z = np.array(find_zeros(x))
    assert z.size == expected.size
    assert np.max(np.abs(z - expected)) <= 1e-9


# -- ell and segments --------------------------------------------------------------

def test_unit_coefficient_sine_speed_is_one():
    assert measure_ell(sine(), LAG1) == pytest.approx(1.0, abs=1e-6)


def test_speed_scales_with_zero_spacing():
    assert measure_ell(sine(freq=0.5, b=20.0), LAG1) == pytest.approx(2.0, abs=1e-6)


def test_end_segments_censored():
    x = sine()
    segs = sign_segments(x, LAG1, find_zeros(x), 1.5)
    assert segs[0].censored and segs[-1].censored
    assert not any(s.censored for s in segs[1:-1])
    assert [s.sign for s in segs[1:4]] == [1, -1, 1]


def test_too_few_zeros():
    t = np.linspace(0, 5, 501)
    with pytest.raises(TooFewZeros):
        measure_ell(traj(t, t - 2.5), LAG1)


# -- exact delay quantities --------------------------------------------------------

@pytest.mark.parametrize("s", [1.0, 1.125, 1.5, 2.0])
def test_xs_delay_quantities(s):
    eq = make_xs(s).eq
    assert sup_delay_integral(eq, 40.0) == pytest.approx(s, abs=1e-12)
    assert tau_max(eq, 40.0) == pytest.approx(s, abs=1e-12)


@pytest.mark.parametrize("s", [1.0, 1.125, 2.0])
def test_ys_delay_quantities(s):
    eq = make_ys(s).eq
    assert sup_delay_integral(eq, 40.0) == pytest.approx(sigma_of(s), abs=1e-12)
    assert tau_max(eq, 40.0) == pytest.approx(sigma_of(s), abs=1e-12)


def test_named_function_delay_quantities():
    assert sup_delay_integral(make_myshkis_f().eq, 30.0) == pytest.approx(1.5, abs=1e-12)
    assert tau_max(make_lillo_g().eq, 30.0) == pytest.approx(sigma_of(1.125), abs=1e-12)


def test_constant_lag_delay_quantities():
    eq = Equation.build(PiecewiseFn.constant(0.8), PiecewiseFn.lag(1.5))
    assert sup_delay_integral(eq, 20.0) == pytest.approx(1.2, abs=1e-12)
    assert tau_max(eq, 20.0) == pytest.approx(1.5, abs=1e-12)
    C, D = delay_bounds(eq, 20.0)
    assert C >= D > 0


# -- classify ------------------------------------------------------------------------

def test_classify_x2():
    ex = make_xs(2.0)
    h = 1e-3
    start = ex.history_start(0.0)
    x = integrate(ex.eq, History.from_function(ex.solution, start, 0.0, h, ex.kinks(start, 0.0)), 12.0, h)
    rep = classify(ex.eq, x)
    assert rep.oscillatory and rep.sign_of_c == "mixed"
    assert rep.ell_measured == pytest.approx(2.0, abs=4 * h)
    assert rep.sup_delay_integral == pytest.approx(2.0, abs=1e-12)
    assert rep.as_dict() == classify(ex.eq, x).as_dict()


def test_classify_nonoscillatory_monotone():
    eq = Equation.build(PiecewiseFn.constant(0.3), PiecewiseFn.lag(1.0))
    x = integrate(eq, History.constant(1.0, -1.0, 0.0), 20.0, 0.01)
    rep = classify(eq, x)
    assert not rep.oscillatory
    assert rep.monotone_tail is True
    assert math.isnan(rep.ell_measured)


# -- certify -------------------------------------------------------------------------

def test_certify_nonneg_three_halves():
    cert = certify(Features("nonneg", 1.4, oscillatory=True))
    assert cert.theorem is Verdict.T2352_TO_ZERO
    assert cert.factor == pytest.approx(0.9, abs=1e-12)


def test_certify_nonpos_uses_speed_bound():
    cert = certify(Features("nonpos", 1.2))
    assert cert.to_zero
    assert cert.measured["ell_T2054"] == 1.2
    assert cert.theorem is Verdict.T2056_TO_ZERO


def test_certify_picks_smallest_factor():
    cert = certify(Features("nonpos", 1.2, ell=1.1))
    cands = cert.measured["factor_candidates"]
    assert cert.factor == min(cands.values())
    assert cert.factor <= decay_factor(Theorem.T2055, ell=1.1)
    assert cert.factor <= decay_factor(Theorem.T2056, sup_int=1.2, ell=1.1, s=1.2) + 1e-12


def test_certify_reports_margins_when_nothing_applies():
    cert = certify(Features("mixed", 2.0, ell=2.5))
    assert cert.theorem is Verdict.NONE
    assert not cert.to_zero
    assert cert.measured["margins"]["ell-2"] == pytest.approx(0.5)
    assert "ell-2 = 0.5" in cert.verdict


@pytest.mark.parametrize("s", [1.0, 1.125, 1.5, 2.0])
def test_certify_limit_cases_only_bounded(s):
    ex = make_xs(s)
    cert = certify(Features("mixed", ex.expected["sup_int"], ex.expected["ell"]))
    assert cert.factor == 1.0
    assert not cert.to_zero


def test_certify_inconsistent_nonpos_features():
    with pytest.raises(InconsistentFeatures):
        certify(Features("nonpos", 1.0, ell=1.5))
    with pytest.raises(InconsistentFeatures):
        certify(Features("mixed", math.inf, ell=1.0))


def test_certify_nonoscillatory_nonneg():
    cert = certify(Features("nonneg", 2.0, oscillatory=False, divergent_integral=True))
    assert cert.theorem is Verdict.T2353_TO_ZERO
    cert = certify(Features("nonneg", 2.0, oscillatory=False))
    assert cert.theorem is Verdict.T2353_MONOTONE


def test_certify_exponential_constants():
    cert = certify(Features("mixed", 1.5, ell=1.9, C=2.0, D=0.5))
    assert cert.theorem is Verdict.T1914_EXPONENTIAL
    k = cert.constants
    assert k.beta == math.floor(1.9 / 0.5) + 1
    assert k.d == cert.factor < 1
    assert "constants" in cert.as_dict()


def test_best_s_respects_hypotheses():
    s = best_s(1.2, 1.1)
    assert s is not None and s >= 1.2 - 1e-12 and 1.1 <= lambda_of(s) + 1e-12
    assert best_s(2.5, 1.0) is None


def test_features_from_adds_step_margin():
    x = sine()
    rep = classify(LAG1, x)
    f = features_from(LAG1, rep, 1e-3)
    assert f.ell == pytest.approx(rep.ell_measured + 4e-3)


# -- trajectory checks ---------------------------------------------------------------

def test_verify_exponential_pass_and_fail():
    k = exp_decay_constants(0.5, C=1.0, D=1.0, ell=2.5)
    t = np.linspace(0, 40, 4001)
    ok, margin = verify_exponential(traj(t, np.exp(-t)), k, 1.0)
    assert ok and margin > 0
    ok, margin = verify_exponential(traj(t, np.ones_like(t)), k, 1.0)
    assert not ok and margin < 0


def test_verify_exponential_needs_window():
    k = exp_decay_constants(0.5, C=1.0, D=1.0, ell=2.5)
    t = np.linspace(0, 3, 301)
    with pytest.raises(WindowTooShort):
        verify_exponential(traj(t, np.exp(-t)), k, 1.0)


def test_cascade_on_random_nonneg_equation():
    rng = np.random.default_rng(3)
    eq, _, x = generators.draw_oscillatory(generators.random_nonneg, rng, lambda e: 40.0, min_zeros=6)
    q = max(sup_delay_integral(eq, x.t_end), 1.0)
    res = cascade_check(eq, x, q - 0.5)
    assert res.steps >= 1
    assert res.passed


def test_generators_deterministic_under_seed():
    a = generators.random_nonneg(np.random.default_rng(11))[0]
    b = generators.random_nonneg(np.random.default_rng(11))[0]
    assert a == b
