"""Zeros, oscillation speed, delay integrals and stability certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InconsistentFeatures, OutOfDomain, TooFewZeros, Unbounded, WindowTooShort
from .fnspec import BREAK_TOL, Equation, _dedup
from .integrator import Trajectory
from .special import (
    HYP_TOL,
    DecayConstants,
    Theorem,
    alpha_root,
    decay_factor,
    exp_decay_constants,
    lambda_inverse,
    lambda_of,
    optimal_q_2055,
)

EPS_ZERO = 1e-9
#: slack added to a measured ell before it is fed to a certificate
ELL_MARGIN_STEPS = 4.0
S_GRID = 2000


# -- zeros and sign segments -------------------------------------------------------

def find_zeros(x: Trajectory, eps_zero: float = EPS_ZERO, eps_t: float | None = None) -> list[float]:
    """Zeros of the piecewise-linear trajectory.

    A run of samples with ``|x| <= eps_zero * running max |x|`` is a zero
    cluster located at its midpoint; a strict sign change between two samples
    is located by linear interpolation.  Candidates closer than ``eps_t``
    (default: one step) are merged to the midpoint of the group.
    """
    if eps_t is None:
        eps_t = x.step
    if not (eps_zero > 0 and eps_t > 0):
        raise ValueError("eps_zero and eps_t must be positive")
    t, v = x.times, x.values
    a = np.abs(v)
    small = a <= eps_zero * np.maximum.accumulate(a)

    cands = []
    # clusters: maximal runs of small samples
    edges = np.diff(np.concatenate(([0], small.astype(np.int8), [0])))
    for lo, hi in zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1):
        cands.append(float(0.5 * (t[lo] + t[hi])))
    # strict sign changes between two non-small samples
    i = np.flatnonzero((v[:-1] * v[1:] < 0) & ~small[:-1] & ~small[1:])
    cands.extend((t[i] - v[i] * (t[i + 1] - t[i]) / (v[i + 1] - v[i])).tolist())
    if not cands:
        return []
    cands.sort()

    zeros = []
    first = last = cands[0]
    for c in cands[1:]:
        if c - last < eps_t:
            last = c
        else:
            zeros.append(float(0.5 * (first + last)))
            first = last = c
    zeros.append(float(0.5 * (first + last)))
    return zeros


@dataclass(frozen=True)
class SignSegment:
    a: float
    b: float
    sign: int
    mass: float
    censored: bool = False


def sign_segments(x: Trajectory, eq: Equation, zeros, start: float) -> list[SignSegment]:
    """Zero-free segments of ``[start, T]``; the leading and trailing ones are censored."""
    T = x.t_end
    inside = [z for z in zeros if start <= z <= T]
    cuts = [start] + inside + [T]
    segs = []
    for k, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
        if b - a <= BREAK_TOL:
            continue
        mid = float(x(0.5 * (a + b)))
        censored = k == 0 or k == len(cuts) - 2
        segs.append(SignSegment(a, b, 1 if mid >= 0 else -1, eq.c.abs_integral(a, b), censored))
    return segs


def measure_ell(x: Trajectory, eq: Equation, t1: float | None = None,
                eps_zero: float = EPS_ZERO, eps_t: float | None = None) -> float:
    """Largest ``int |c|`` over uncensored zero-to-zero segments in ``[t1, T]``."""
    start = max(eq.t1 if t1 is None else t1, x.t_start)
    zeros = [z for z in find_zeros(x, eps_zero, eps_t) if start <= z <= x.t_end]
    if len(zeros) < 2:
        raise TooFewZeros(f"{len(zeros)} zero(s) in [{start}, {x.t_end}], need 2")
    return max(s.mass for s in sign_segments(x, eq, zeros, start) if not s.censored)


# -- exact delay quantities --------------------------------------------------------

def _window(eq: Equation, T: float) -> tuple[float, float]:
    a = eq.rho
    if not T > a:
        raise OutOfDomain(f"horizon {T} does not exceed rho = {a}")
    P = eq.period
    if P is not None:
        T = min(T, a + P)
    return a, T


def _delay_pieces(eq: Equation, a: float, b: float):
    """Subintervals of ``[a, b]`` on which ``int_{tau(t)}^t |c|`` is one quadratic.

    Yields ``(lo, hi, slope, intercept)`` of the active delay piece.
    """
    cuts_c = eq.c.breakpoints(a, b)
    for lo, hi, slope, icpt in eq.tau.unrolled(a, b):
        cuts = [lo, hi] + [p for p in cuts_c if lo < p < hi]
        if slope != 0.0:
            v_lo, v_hi = sorted((slope * lo + icpt, slope * hi + icpt))
            for p in eq.c.breakpoints(max(v_lo, 0.0), max(v_hi, 0.0)):
                t = (p - icpt) / slope
                if lo < t < hi:
                    cuts.append(t)
        cuts = _dedup(sorted(cuts))
        for p, q in zip(cuts[:-1], cuts[1:]):
            yield p, q, slope, icpt


def delay_integral_range(eq: Equation, T: float) -> tuple[float, float]:
    """Exact ``inf`` and ``sup`` of ``F(t) = int_{tau(t)}^t |c|`` over ``t in [rho, T]``.

    ``F`` is a quadratic on each subinterval returned by ``_delay_pieces``;
    its extrema are read off the end values (left limits included) and the
    vertex of the interpolating parabola.
    """
    a, b = _window(eq, T)
    lo_val, hi_val = math.inf, -math.inf
    for p, q, slope, icpt in _delay_pieces(eq, a, b):
        m = 0.5 * (p + q)
        f = [eq.c.abs_integral(min(slope * t + icpt, t), t) for t in (p, m, q)]
        cands = list(f)
        curv = 0.5 * (f[0] + f[2]) - f[1]
        lin = 0.5 * (f[2] - f[0])
        if abs(curv) > 1e-15:
            u = -lin / (2.0 * curv)
            if -1.0 < u < 1.0:
                cands.append(f[1] - lin * lin / (4.0 * curv))
        lo_val = min(lo_val, *cands)
        hi_val = max(hi_val, *cands)
    return lo_val, hi_val


def sup_delay_integral(eq: Equation, T: float) -> float:
    """``sup_{t in [rho, T]} int_{tau(t)}^t |c|``, one period past ``rho`` for periodic equations."""
    return delay_integral_range(eq, T)[1]


def tau_max(eq: Equation, T: float) -> float:
    """``sup (t - tau(t))`` over ``[rho, T]`` (or one period), left limits included."""
    a, b = _window(eq, T)
    best = -math.inf
    for lo, hi, slope, icpt in eq.tau.unrolled(a, b):
        best = max(best, (1.0 - slope) * lo - icpt, (1.0 - slope) * hi - icpt)
    return best


def delay_bounds(eq: Equation, T: float, n: int = 4000) -> tuple[float, float]:
    """Rigorous ``C >= sup |t - tau_min^2(t)|`` and ``D <= inf int_{tau_min^2(t)}^t |c|``.

    Both are taken over ``t in [t1, T]`` (one period for periodic equations)
    using monotonicity of ``tau_min^2`` between ``n`` grid points.
    """
    a = eq.t1
    P = eq.period
    b = a + P if P is not None else T
    if not b > a:
        raise WindowTooShort(f"horizon {T} does not exceed t1 = {a}")
    grid = np.linspace(a, b, n + 1)
    m2 = np.array([eq.tau.tau_min_iter(float(g), 2) for g in grid])
    C = float(np.max(grid[1:] - m2[:-1]))
    # c lives on t >= 0; dropping the part below 0 keeps D a lower bound
    lower = np.maximum(m2[1:], 0.0)
    D = min(
        eq.c.abs_integral(float(lo), float(g)) if lo < g else 0.0
        for lo, g in zip(lower, grid[:-1])
    )
    return C, float(D)


# -- classification ----------------------------------------------------------------

@dataclass(frozen=True)
class OscillationReport:
    zeros: list
    segments: list
    ell_measured: float
    sup_delay_integral: float
    tau_max: float
    window: tuple
    oscillatory: bool
    sign_of_c: str
    monotone_tail: bool | None = None

    def as_dict(self) -> dict:
        return {
            "zeros": list(self.zeros),
            "ell_measured": self.ell_measured,
            "sup_delay_integral": self.sup_delay_integral,
            "tau_max": self.tau_max,
            "window": list(self.window),
            "oscillatory": self.oscillatory,
            "sign_of_c": self.sign_of_c,
            "monotone_tail": self.monotone_tail,
            "segments": [
                {"a": s.a, "b": s.b, "sign": s.sign, "mass": s.mass, "censored": s.censored}
                for s in self.segments
            ],
        }


def _monotone_after(x: Trajectory, b: float, tol: float) -> bool:
    mask = x.times >= b
    v = np.abs(x.values[mask])
    return bool(v.size < 2 or np.all(np.diff(v) <= tol))


def classify(eq: Equation, x: Trajectory, eps_zero: float = EPS_ZERO,
             eps_t: float | None = None) -> OscillationReport:
    start = max(eq.t1, x.t_start)
    T = x.t_end
    zeros = [z for z in find_zeros(x, eps_zero, eps_t) if start <= z <= T]
    segments = sign_segments(x, eq, zeros, start)
    counted = [s.mass for s in segments if not s.censored]
    ell = max(counted) if len(zeros) >= 2 and counted else math.nan
    # the zero solution forms a single cluster; anything else with two zeros counts
    oscillatory = len(zeros) >= 2 and x.sup_abs(zeros[0], T) > 0.0
    try:
        sup_int = sup_delay_integral(eq, T)
        tmax = tau_max(eq, T)
    except OutOfDomain:
        sup_int = tmax = math.nan
    monotone = None
    if not oscillatory:
        # past the last zero x keeps one sign once tau_min clears it
        a = max([start] + zeros[-1:])
        try:
            b = eq.tau.first_exceeding(a)
        except Unbounded:
            b = T
        monotone = _monotone_after(x, b, x.step)
    return OscillationReport(
        zeros=zeros, segments=segments, ell_measured=ell, sup_delay_integral=sup_int,
        tau_max=tmax, window=(start, T), oscillatory=oscillatory,
        sign_of_c=eq.c.sign_class(), monotone_tail=monotone,
    )


# -- certificates ------------------------------------------------------------------

class Verdict(str, Enum):
    T2352_BOUNDED = "T2352_bounded"
    T2352_TO_ZERO = "T2352_to_zero"
    T2353_MONOTONE = "T2353_monotone"
    T2353_TO_ZERO = "T2353_to_zero"
    T2054_SPEED_BOUND = "T2054_speed_bound"
    T2055_BOUNDED = "T2055_bounded"
    T2055_TO_ZERO = "T2055_to_zero"
    T2056_BOUNDED = "T2056_bounded"
    T2056_TO_ZERO = "T2056_to_zero"
    T1914_EXPONENTIAL = "T1914_exponential"
    NONE = "none"


@dataclass(frozen=True)
class Features:
    sign_of_c: str
    sup_int: float
    ell: float | None = None
    s_choice: float | None = None
    C: float | None = None
    D: float | None = None
    divergent_integral: bool = False
    oscillatory: bool | None = None


@dataclass(frozen=True)
class Certificate:
    theorem: Verdict
    measured: dict
    factor: float | None = None
    constants: DecayConstants | None = None
    base: str | None = None
    verdict: str = ""

    @property
    def to_zero(self) -> bool:
        return self.factor is not None and self.factor < 1.0

    def as_dict(self) -> dict:
        out = {
            "theorem": self.theorem.value,
            "base": self.base,
            "factor": self.factor,
            "verdict": self.verdict,
            "measured": dict(self.measured),
        }
        if self.constants is not None:
            k = self.constants
            out["constants"] = {
                "d": k.d, "beta": k.beta, "M": k.M, "gamma": k.gamma, "delta": k.delta,
                "C": k.C, "D": k.D, "ell": k.ell, "q": k.q, "alpha": k.alpha,
            }
        return out


def _factor_2056(sup_int: float, ell: float, s: float) -> float:
    return decay_factor(Theorem.T2056, sup_int=sup_int, ell=ell, s=s)


def best_s(sup_int: float, ell: float) -> float | None:
    """The ``s`` minimising the ``psi_s(ell - alpha)`` factor subject to its hypotheses."""
    lo = max(1.0, sup_int)
    hi = lambda_inverse(ell)
    if lo > 2.0 + HYP_TOL or lo > hi + HYP_TOL or ell > lambda_of(1.0) + HYP_TOL:
        return None
    lo = min(lo, 2.0)
    if hi - lo <= HYP_TOL:
        return lo
    grid = np.linspace(lo, hi, S_GRID)
    vals = np.array([_factor_2056(sup_int, ell, s) for s in grid])
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, S_GRID - 1)]
    # polish: bisection on the sign of a central difference
    for _ in range(60):
        if b - a < 1e-12:
            break
        m = 0.5 * (a + b)
        eps = min(1e-9, 0.25 * (b - a))
        if _factor_2056(sup_int, ell, m + eps) - _factor_2056(sup_int, ell, m - eps) > 0:
            b = m
        else:
            a = m
    s = 0.5 * (a + b)
    return s if _factor_2056(sup_int, ell, s) <= vals[i] else float(grid[i])


def _ell_candidates(sup_int: float, ell: float, s_choice: float | None, measured: dict):
    """(label, factor, extras) for T2056 and T2055 where their hypotheses hold."""
    out = []
    s = best_s(sup_int, ell) if s_choice is None else s_choice
    if s is not None:
        try:
            d = _factor_2056(sup_int, ell, s)
        except Exception as exc:  # hypotheses fail for the chosen s
            measured["T2056_failure"] = str(exc)
        else:
            alpha = alpha_root(s, ell) if ell <= lambda_of(s) + HYP_TOL else None
            out.append(("T2056", d, {"s": s, "Lambda(s)": lambda_of(s), "alpha": alpha}))
    if ell <= 2.0 + HYP_TOL:
        d = decay_factor(Theorem.T2055, ell=ell)
        out.append(("T2055", d, {"q": optimal_q_2055(ell) if ell < 2.0 - HYP_TOL else 2.0}))
    return out


def _margins(f: Features, ell: float | None) -> dict:
    m = {}
    if f.sign_of_c == "nonneg":
        m["sup_int-3/2"] = f.sup_int - 1.5
    if ell is not None:
        m["ell-2"] = ell - 2.0
        if f.sup_int > 2.0:
            m["sup_int-2"] = f.sup_int - 2.0
        else:
            m["ell-Lambda(max(1,sup_int))"] = ell - lambda_of(max(1.0, f.sup_int))
    return m


def certify(features: Features) -> Certificate:
    """Apply the theorem ladder and return the strongest conclusion available."""
    f = features
    if not math.isfinite(f.sup_int) or f.sup_int < 0:
        raise InconsistentFeatures(f"sup_int must be finite and >= 0, got {f.sup_int}")
    measured = {"sign_of_c": f.sign_of_c, "sup_int": f.sup_int, "ell": f.ell}
    ell = f.ell

    if f.sign_of_c == "nonneg" and f.oscillatory is False:
        to_zero = f.divergent_integral
        measured["divergent_integral"] = to_zero
        return Certificate(
            Verdict.T2353_TO_ZERO if to_zero else Verdict.T2353_MONOTONE, measured,
            base="T2353",
            verdict="nonoscillatory solutions are monotone"
            + (" and tend to zero" if to_zero else " and have a limit"),
        )

    if f.sign_of_c == "nonpos":
        if ell is not None and ell > f.sup_int + HYP_TOL:
            raise InconsistentFeatures(
                f"ell = {ell} exceeds sup_int = {f.sup_int} although c <= 0"
            )
        ell = f.sup_int if ell is None else min(ell, f.sup_int)
        measured["ell_T2054"] = ell

    cands = []
    if f.sign_of_c == "nonneg" and f.sup_int <= 1.5 + HYP_TOL:
        q = max(f.sup_int, 1.0)
        cands.append(("T2352", decay_factor(Theorem.T2352, sup_int=f.sup_int), {"q": q}))
    ell_cands = _ell_candidates(f.sup_int, ell, f.s_choice, measured) if ell is not None else []
    cands.extend(ell_cands)

    if not cands:
        margins = _margins(f, ell)
        measured["margins"] = margins
        failing = {k: v for k, v in margins.items() if v > 0}
        name, gap = min(failing.items(), key=lambda kv: kv[1]) if failing else ("", 0.0)
        if f.sign_of_c == "nonpos":
            return Certificate(
                Verdict.T2054_SPEED_BOUND, measured, base="T2054",
                verdict=f"oscillatory solutions are {ell:.12g}-rapidly oscillating; "
                        f"no stability theorem applies (nearest margin {name} = {gap:.6g})",
            )
        return Certificate(Verdict.NONE, measured,
                           verdict=f"no theorem applies (nearest margin {name} = {gap:.6g})")

    # smallest factor wins; ties keep ladder order
    order = {"T2352": 0, "T2056": 1, "T2055": 2}
    label, d, extra = min(cands, key=lambda c: (c[1], order[c[0]]))
    measured.update({f"{label}:{k}": v for k, v in extra.items()})
    measured["factor_candidates"] = {c[0]: c[1] for c in cands}
    to_zero = d < 1.0
    theorem = Verdict(f"{label}_{'to_zero' if to_zero else 'bounded'}")
    text = (f"oscillatory solutions tend to zero (factor {d:.12g})" if to_zero
            else "oscillatory solutions are bounded (factor 1)")

    constants = None
    if f.C is not None and f.D is not None and ell_cands:
        e_label, e_d, e_extra = min(ell_cands, key=lambda c: (c[1], order[c[0]]))
        if e_d < 1.0:
            constants = exp_decay_constants(
                e_d, f.C, f.D, ell, q=e_extra.get("q"), alpha=e_extra.get("alpha"),
            )
            measured["C"], measured["D"] = f.C, f.D
            theorem = Verdict.T1914_EXPONENTIAL
            label = e_label
            d = e_d
            text = (f"oscillatory solutions tend to zero exponentially "
                    f"(d = {e_d:.12g}, gamma = {constants.gamma:.6g})")
    return Certificate(theorem, measured, factor=d, constants=constants, base=label, verdict=text)


def features_from(eq: Equation, report: OscillationReport, step: float, **extra) -> Features:
    """Certificate inputs from a report, with ``4 h sup|c|`` added to the measured ell."""
    ell = report.ell_measured
    if ell is not None and math.isfinite(ell):
        a, b = report.window
        ell = ell + ELL_MARGIN_STEPS * step * eq.c.sup_abs(a, b)
    else:
        ell = None
    return Features(
        sign_of_c=report.sign_of_c, sup_int=report.sup_delay_integral, ell=ell,
        oscillatory=report.oscillatory, **extra,
    )


# -- trajectory-level checks -------------------------------------------------------

def verify_exponential(x: Trajectory, constants: DecayConstants, t1: float) -> tuple[bool, float]:
    """Check ``|x(t)| <= M sup_{[t1, t1+delta]} |x| exp(-gamma (t - t1))`` after ``t1 + delta``."""
    t_hi = t1 + constants.delta
    if x.t_end < t_hi or x.t_start > t1:
        raise WindowTooShort(f"trajectory [{x.t_start}, {x.t_end}] does not cover [{t1}, {t_hi}]")
    S = x.sup_abs(t1, t_hi)
    mask = x.times >= t_hi
    if not mask.any():
        return True, math.inf
    bound = constants.bound(S, x.times[mask], t1)
    margin = float(np.min(bound - np.abs(x.values[mask])))
    return margin >= 0.0, margin


@dataclass
class CascadeResult:
    zeros: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    observed: list = field(default_factory=list)
    initial_sup: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.zeros)

    @property
    def passed(self) -> bool:
        return all(o <= b for o, b in zip(self.observed, self.bounds))


def cascade_check(eq: Equation, x: Trajectory, d: float, steps: int = 3, slack: float = 0.05,
                  eps_zero: float = EPS_ZERO) -> CascadeResult:
    """Zero-to-zero contraction: ``sup_{[xi_k, T]} |x| <= (d + slack)^k S0``.

    ``xi_1`` is the first zero whose ``tau_min`` lies past both ``rho`` and
    ``t0``; each later ``xi_k`` is the first zero with
    ``tau_min^2(xi_k) >= xi_{k-1}``; ``S0`` is ``sup |x|`` on
    ``[tau_min^2(xi_1), xi_1]``.
    """
    res = CascadeResult()
    floor = max(eq.rho, x.t0)
    prev = None
    for z in find_zeros(x, eps_zero):
        if z < floor:
            continue
        if z >= x.t_end:
            break
        if prev is None:
            if eq.tau.tau_min(z) < floor:
                continue
            res.initial_sup = x.sup_abs(eq.tau.tau_min_iter(z, 2), z)
        elif eq.tau.tau_min_iter(z, 2) < prev:
            continue
        k = len(res.zeros) + 1
        res.zeros.append(z)
        res.bounds.append((d + slack) ** k * res.initial_sup)
        res.observed.append(x.sup_abs(z, x.t_end))
        prev = z
        if k == steps:
            break
    return res
