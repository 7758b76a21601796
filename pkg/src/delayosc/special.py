"""Oscillation-speed threshold Lambda(s), the extremal profile psi_s and decay constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import DomainError, HypothesisViolated

S_MIN, S_MAX = 1.0, 2.0
#: slack used when comparing measured values against theorem thresholds
HYP_TOL = 1e-12
#: WLOG lift applied when ell <= Lambda(s) - 1
ELL_LIFT = 1e-9
ROOT_TOL = 1e-15
PICARD_POINTS = 16385


def _check_s(s: float) -> float:
    s = float(s)
    if not (S_MIN - HYP_TOL <= s <= S_MAX + HYP_TOL):
        raise DomainError(f"s = {s} outside [1, 2]")
    return min(max(s, S_MIN), S_MAX)


def lambda_of(s: float) -> float:
    """``Lambda(s) = 2 + s - sqrt(2s) - ln(sqrt(2s) - 1)`` on ``[1, 2]``."""
    s = _check_s(s)
    r = math.sqrt(2.0 * s)
    return 2.0 + s - r - math.log(r - 1.0)


def sigma_of(s: float) -> float:
    return lambda_of(s) + _check_s(s)


def sigma_prime(s: float) -> float:
    r = math.sqrt(2.0 * _check_s(s))
    return (2.0 * r - 3.0) / (r - 1.0)


def lambda_inverse(ell: float) -> float:
    """The ``s`` in ``[1, 2]`` with ``Lambda(s) = ell`` (Lambda is decreasing).

    Values of ``ell`` above ``Lambda(1)`` map to 1 and below 2 map to 2.
    """
    if ell >= lambda_of(1.0):
        return 1.0
    if ell <= 2.0:
        return 2.0
    lo, hi = 1.0, 2.0
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if lambda_of(mid) > ell:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sigma_argmin() -> tuple[float, float]:
    """Minimiser of ``sigma`` on ``[1, 2]`` and the minimum value.

    Golden-section search brackets the minimum; sigma is too flat there for
    function values to resolve ``s`` beyond ~1e-8, so the bracket is polished
    by bisection on the sign of the closed-form derivative.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = S_MIN, S_MAX
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = sigma_of(c), sigma_of(d)
    while b - a > 1e-6:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = sigma_of(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = sigma_of(d)
    # widen slightly so the bracket certainly straddles the derivative root
    a, b = max(S_MIN, a - 1e-6), min(S_MAX, b + 1e-6)
    if sigma_prime(a) > 0 or sigma_prime(b) < 0:
        raise ArithmeticError("golden-section bracket misses the minimum")
    while b - a > ROOT_TOL:
        mid = 0.5 * (a + b)
        if sigma_prime(mid) < 0:
            a = mid
        else:
            b = mid
    s_star = 0.5 * (a + b)
    return s_star, sigma_of(s_star)


# -- psi_s ---------------------------------------------------------------------

@dataclass(frozen=True)
class PsiProfile:
    """Knots of ``psi_s``: linear, quadratic and exponential branches."""

    s: float
    knots: tuple  # (s - 1, (1 + s) - sqrt(2s), Lambda(s) - 1)
    values: tuple  # (s - 1, sqrt(2s) - 1, 1)

    @classmethod
    def of(cls, s: float) -> "PsiProfile":
        s = _check_s(s)
        r = math.sqrt(2.0 * s)
        lam = lambda_of(s)
        return cls(s, (s - 1.0, (1.0 + s) - r, lam - 1.0), (s - 1.0, r - 1.0, 1.0))

    @property
    def end(self) -> float:
        return self.knots[2]


def _psi_branches(s: float, t: np.ndarray) -> np.ndarray:
    k1, k2, k3 = PsiProfile.of(s).knots
    r = math.sqrt(2.0 * s)
    out = np.empty_like(t)
    b1 = t <= k1
    b3 = t >= k2
    b2 = ~(b1 | b3)
    out[b1] = t[b1]
    u = t[b2]
    out[b2] = (s - 1.0) + (s * (u - (s - 1.0)) - 0.5 * (u * u - (s - 1.0) ** 2))
    out[b3] = (r - 1.0) * np.exp(t[b3] - k2)
    # pin knot values to their closed forms
    out[t == k1] = s - 1.0
    if k2 > k1:
        out[t == k2] = r - 1.0
    out[t >= k3] = 1.0
    return out


def _psi_scalar(s: float, t: float) -> float:
    k1, k2, k3 = PsiProfile.of(s).knots
    if t >= k3:
        return 1.0
    if t <= k1:
        return t
    if t < k2:
        return (s - 1.0) + (s * (t - (s - 1.0)) - 0.5 * (t * t - (s - 1.0) ** 2))
    if t == k2:
        return math.sqrt(2.0 * s) - 1.0
    return (math.sqrt(2.0 * s) - 1.0) * math.exp(t - k2)


def psi_closed(s: float, t):
    """Closed-form ``psi_s(t)`` on ``[0, Lambda(s) - 1]`` (scalar or array)."""
    s = _check_s(s)
    end = lambda_of(s) - 1.0
    if np.ndim(t) == 0:
        t = float(t)
        if t < -HYP_TOL or t > end + 1e-10:
            raise DomainError(f"psi_{s} evaluated outside [0, {end}]")
        return _psi_scalar(s, min(max(t, 0.0), end))
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    if arr.size and (arr.min() < -HYP_TOL or arr.max() > end + 1e-10):
        raise DomainError(f"psi_{s} evaluated outside [0, {end}]")
    out = _psi_branches(s, np.clip(arr, 0.0, end))
    if np.ndim(t) == 0:
        return float(out[0])
    return out


@lru_cache(maxsize=64)
def _picard_iterates(s: float, n: int, points: int) -> tuple:
    end = lambda_of(s) - 1.0
    grid = np.linspace(0.0, end, points)
    h = np.diff(grid)
    iterate = np.zeros(points)
    out = [iterate]
    for _ in range(n):
        integrand = np.minimum(1.0, np.maximum(s - grid, iterate))
        iterate = np.concatenate(([0.0], np.cumsum(0.5 * h * (integrand[1:] + integrand[:-1]))))
        out.append(iterate)
    return grid, tuple(out)


def psi_picard(s: float, t, n: int, points: int = PICARD_POINTS):
    """``n``-th Picard iterate for ``psi' = min(1, max(s - u, psi))``, ``psi(0) = 0``.

    Integrals use the composite trapezoid rule on a uniform grid; the iterate
    is evaluated at ``t`` by linear interpolation.
    """
    s = _check_s(s)
    if n < 0:
        raise DomainError("iteration count must be >= 0")
    if points < 4096:
        raise DomainError("Picard grid needs at least 4096 points")
    end = lambda_of(s) - 1.0
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    if arr.size and (arr.min() < -HYP_TOL or arr.max() > end + 1e-10):
        raise DomainError(f"psi_{s} evaluated outside [0, {end}]")
    grid, iterates = _picard_iterates(s, int(n), int(points))
    out = np.interp(np.clip(arr, 0.0, end), grid, iterates[n])
    if np.ndim(t) == 0:
        return float(out[0])
    return out


def alpha_root(s: float, ell: float) -> float:
    """Root of ``alpha - psi_s(ell - alpha)`` on ``[1 + ell - Lambda(s), 1]``."""
    s = _check_s(s)
    lam = lambda_of(s)
    if ell > lam + HYP_TOL:
        raise DomainError(f"ell = {ell} exceeds Lambda({s}) = {lam}")
    if ell >= lam - HYP_TOL:
        return 1.0
    if ell <= lam - 1.0:
        ell = lam - 1.0 + ELL_LIFT
    lo, hi = 1.0 + ell - lam, 1.0
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if mid - psi_closed(s, ell - mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- decay factors ---------------------------------------------------------------

class Theorem(str, Enum):
    T2352 = "T2352"  # c >= 0, sup-delay integral <= 3/2
    T2055 = "T2055"  # ell <= 2
    T2056 = "T2056"  # sup-delay integral <= s, ell <= Lambda(s)


def optimal_q_2055(ell: float) -> float:
    """The q in (ell, 2) minimising ``max(q - 1, 1 - (q - ell)/2)``."""
    ell = max(ell, 1.0)
    q = (4.0 + ell) / 3.0
    return min(max(q, ell), 2.0)


def decay_factor(theorem, sup_int: float = math.nan, ell: float = math.nan, s: float = math.nan) -> float:
    """Contraction factor per zero-to-zero cascade step of the named theorem."""
    theorem = Theorem(theorem)
    if theorem is Theorem.T2352:
        if not sup_int <= 1.5 + HYP_TOL:
            raise HypothesisViolated(f"sup-delay integral {sup_int} > 3/2")
        q = max(sup_int, 1.0)
        return min(q - 0.5, 1.0)
    if theorem is Theorem.T2055:
        if not ell <= 2.0 + HYP_TOL:
            raise HypothesisViolated(f"ell {ell} > 2")
        if ell >= 2.0 - HYP_TOL:
            return 1.0
        # any ell-rapidly oscillating function is also (1+eps)-rapidly oscillating
        ell = max(ell, 1.0)
        q = optimal_q_2055(ell)
        return max(q - 1.0, 1.0 - 0.5 * (q - ell))
    s = _check_s(s)
    if not sup_int <= s + HYP_TOL:
        raise HypothesisViolated(f"sup-delay integral {sup_int} > s = {s}")
    lam = lambda_of(s)
    if not ell <= lam + HYP_TOL:
        raise HypothesisViolated(f"ell {ell} > Lambda({s}) = {lam}")
    alpha = alpha_root(s, ell)
    if alpha == 1.0:
        return 1.0
    if ell <= lam - 1.0:
        ell = lam - 1.0 + ELL_LIFT
    return psi_closed(s, ell - alpha)


@dataclass(frozen=True)
class DecayConstants:
    d: float
    beta: int
    M: float
    gamma: float
    delta: float
    C: float
    D: float
    ell: float
    q: float | None = None
    alpha: float | None = None

    def bound(self, sup_initial: float, t, t1: float):
        """Exponential envelope ``M * sup_initial * exp(-gamma (t - t1))``."""
        return self.M * sup_initial * np.exp(-self.gamma * (np.asarray(t) - t1))


def exp_decay_constants(d: float, C: float, D: float, ell: float, q=None, alpha=None) -> DecayConstants:
    if not 0.0 < d < 1.0:
        raise DomainError(f"contraction factor d = {d} not in (0, 1)")
    if C <= 0.0 or D <= 0.0:
        raise DomainError("C and D must be positive")
    if ell < 0.0:
        raise DomainError("ell must be >= 0")
    beta = math.floor(ell / D) + 1
    delta = C * beta + C + 1.0
    return DecayConstants(
        d=d, beta=beta, M=1.0 / d, gamma=-math.log(d) / delta, delta=delta,
        C=C, D=D, ell=ell, q=q, alpha=alpha,
    )
