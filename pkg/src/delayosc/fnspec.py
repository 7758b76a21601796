"""Piecewise constant/affine functions used as coefficients and delays.

A :class:`PiecewiseFn` is defined on a base interval ``[0, P)`` and is either
left as is (``extension="none"``, domain ``[0, P]``), repeated periodically
(``"periodic"``) or repeated with a shift, ``f(t + P) = f(t) + P``
(``"affine_periodic"``, delays only).  All integrals are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import OutOfDomain, Unbounded, ValidationError

EXTENSIONS = ("none", "periodic", "affine_periodic")
ROLES = ("coefficient", "delay")

#: breakpoints closer than this are treated as one
BREAK_TOL = 1e-12
#: offset realising the strict inequality in the definition of rho
RHO_OFFSET = 1e-9
#: absolute bisection tolerance of compute_anchor
ANCHOR_TOL = 1e-12


@dataclass(frozen=True)
class Piece:
    """One constant or affine piece on ``[start, end)``.

    Affine pieces are written in absolute time: ``slope * t + intercept``.
    """

    start: float
    end: float
    kind: str = "constant"
    slope: float = 0.0
    intercept: float = 0.0

    def __post_init__(self):
        if not (self.start < self.end):
            raise ValidationError(f"empty piece [{self.start}, {self.end})")
        if self.kind not in ("constant", "affine"):
            raise ValidationError(f"unknown piece kind {self.kind!r}")
        if self.kind == "constant" and self.slope != 0.0:
            raise ValidationError("constant piece with nonzero slope")

    @classmethod
    def constant(cls, start: float, end: float, value: float) -> "Piece":
        return cls(float(start), float(end), "constant", 0.0, float(value))

    @classmethod
    def affine(cls, start: float, end: float, slope: float, intercept: float) -> "Piece":
        return cls(float(start), float(end), "affine", float(slope), float(intercept))

    @property
    def value(self) -> float:
        """Value of a constant piece."""
        return self.intercept

    def __call__(self, t):
        return self.slope * t + self.intercept


def _abs_affine_integral(slope: float, intercept: float, lo: float, hi: float) -> float:
    """Exact integral of ``|slope*u + intercept|`` over ``[lo, hi]``."""
    if hi <= lo:
        return 0.0
    flo = slope * lo + intercept
    fhi = slope * hi + intercept
    if flo * fhi >= 0.0:
        return 0.5 * abs(flo + fhi) * (hi - lo)
    root = lo + flo / (flo - fhi) * (hi - lo)
    return 0.5 * abs(flo) * (root - lo) + 0.5 * abs(fhi) * (hi - root)


@dataclass(frozen=True)
class PiecewiseFn:
    pieces: tuple
    extension: str = "none"
    role: str = "coefficient"
    _starts: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if not pieces:
            raise ValidationError("piecewise function without pieces")
        if self.extension not in EXTENSIONS:
            raise ValidationError(f"unknown extension {self.extension!r}")
        if self.role not in ROLES:
            raise ValidationError(f"unknown role {self.role!r}")
        if abs(pieces[0].start) > BREAK_TOL:
            raise ValidationError(f"base interval must start at 0, got {pieces[0].start}")
        for left, right in zip(pieces, pieces[1:]):
            if right.start > left.end + BREAK_TOL:
                raise ValidationError(f"gap between pieces: [{left.end}, {right.start})")
            if right.start < left.end - BREAK_TOL:
                raise ValidationError(f"overlapping pieces on [{right.start}, {left.end})")
        if self.role == "delay":
            if self.extension == "periodic":
                raise Unbounded("a periodic delay is bounded, so tau(t) -> infinity fails")
            for p in pieces:
                for t in (p.start, p.end):
                    if p(t) > t + BREAK_TOL * max(1.0, abs(t)):
                        raise ValidationError(
                            f"delay exceeds t on [{p.start}, {p.end}): tau({t}) = {p(t)}"
                        )
        object.__setattr__(self, "_starts", np.array([p.start for p in pieces]))
        cum = [0.0]
        for p in pieces:
            cum.append(cum[-1] + _abs_affine_integral(p.slope, p.intercept, p.start, p.end))
        object.__setattr__(self, "_cum", np.array(cum))

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, value: float, period: float = 1.0, role: str = "coefficient") -> "PiecewiseFn":
        return cls((Piece.constant(0.0, period, value),), "periodic", role)

    @classmethod
    def lag(cls, r: float, period: float = 1.0) -> "PiecewiseFn":
        """Constant-lag delay ``tau(t) = t - r``."""
        return cls((Piece.affine(0.0, period, 1.0, -r),), "affine_periodic", "delay")

    # -- basic properties -----------------------------------------------------
    @property
    def period(self) -> float:
        """Length of the base interval (the period when extended)."""
        return self.pieces[-1].end

    @property
    def t_max(self) -> float:
        return math.inf if self.extension != "none" else self.period

    def _check(self, t: float) -> float:
        if t < 0.0:
            if t < -BREAK_TOL:
                raise OutOfDomain(f"t = {t} < 0")
            t = 0.0
        if self.extension == "none" and t > self.period + BREAK_TOL:
            raise OutOfDomain(f"t = {t} beyond T_max = {self.period}")
        return t

    def _reduce(self, t: float) -> tuple[float, int]:
        """Split ``t`` into base-interval position and period count."""
        if self.extension == "none":
            return min(t, self.period), 0
        P = self.period
        k = math.floor(t / P)
        r = t - k * P
        if r < 0.0:
            r += P
            k -= 1
        elif r >= P:
            r -= P
            k += 1
        return r, k

    def _index(self, r: float) -> int:
        i = int(np.searchsorted(self._starts, r, side="right")) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def piece_at(self, t: float) -> tuple[float, float]:
        """``(slope, intercept)`` in absolute time of the piece containing ``t``."""
        t = self._check(t)
        r, k = self._reduce(t)
        p = self.pieces[self._index(r)]
        shift = k * self.period
        intercept = p.intercept - p.slope * shift
        if self.extension == "affine_periodic":
            intercept += shift
        return p.slope, intercept

    def eval(self, t: float) -> float:
        r, k = self._reduce(self._check(t))
        p = self.pieces[self._index(r)]
        # evaluate in base coordinates for accuracy
        value = p(r)
        if self.extension == "affine_periodic":
            value += k * self.period
        return float(value)

    def __call__(self, t):
        if np.ndim(t) == 0:
            return self.eval(float(t))
        return self.eval_array(np.asarray(t, dtype=float))

    def eval_array(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.size and t.min() < -BREAK_TOL:
            raise OutOfDomain(f"t = {t.min()} < 0")
        t = np.maximum(t, 0.0)
        P = self.period
        if self.extension == "none":
            if t.size and t.max() > P + BREAK_TOL:
                raise OutOfDomain(f"t = {t.max()} beyond T_max = {P}")
            r = np.minimum(t, P)
            k = np.zeros_like(t)
        else:
            k = np.floor(t / P)
            r = t - k * P
            low = r < 0.0
            r[low] += P
            k[low] -= 1
            high = r >= P
            r[high] -= P
            k[high] += 1
        idx = np.clip(np.searchsorted(self._starts, r, side="right") - 1, 0, len(self.pieces) - 1)
        slopes = np.array([p.slope for p in self.pieces])[idx]
        icpts = np.array([p.intercept for p in self.pieces])[idx]
        out = slopes * r + icpts
        if self.extension == "affine_periodic":
            out = out + k * P
        return out

    # -- unrolling ------------------------------------------------------------
    def unrolled(self, a: float, b: float) -> Iterator[tuple[float, float, float, float]]:
        """Yield ``(lo, hi, slope, intercept)`` pieces covering ``[a, b]``.

        Slope and intercept are expressed in absolute time.
        """
        a = self._check(a)
        b = self._check(b)
        if b < a:
            raise OutOfDomain(f"empty range [{a}, {b}]")
        P = self.period
        _, k0 = self._reduce(a)
        k1 = 0 if self.extension == "none" else math.floor(b / P)
        for k in range(k0, k1 + 1):
            shift = k * P
            for p in self.pieces:
                lo = p.start + shift
                hi = p.end + shift
                if hi <= a or lo > b:
                    continue
                intercept = p.intercept - p.slope * shift
                if self.extension == "affine_periodic":
                    intercept += shift
                yield max(lo, a), min(hi, b), p.slope, intercept

    def breakpoints(self, a: float, b: float) -> list[float]:
        """Piece boundaries and sign changes inside ``[a, b]``, sorted."""
        a = self._check(a)
        b = self._check(b)
        P = self.period
        _, k0 = self._reduce(a)
        k1 = 0 if self.extension == "none" else math.floor(b / P) + 1
        pts = []
        for k in range(k0, k1 + 1):
            shift = k * P
            for p in self.pieces:
                pts.append(p.start + shift)
                if p.slope != 0.0:
                    intercept = p.intercept - p.slope * shift
                    if self.extension == "affine_periodic":
                        intercept += shift
                    root = -intercept / p.slope
                    if p.start + shift < root < p.end + shift:
                        pts.append(root)
            pts.append(P + shift)
        return _dedup(sorted(t for t in pts if a - BREAK_TOL <= t <= b + BREAK_TOL))

    # -- integrals -------------------------------------------------------------
    def _cumulative_base(self, r: float) -> float:
        i = self._index(r)
        p = self.pieces[i]
        return float(self._cum[i]) + _abs_affine_integral(p.slope, p.intercept, p.start, r)

    def cumulative_abs(self, t: float) -> float:
        """``G(t) = integral of |f| over [0, t]``."""
        t = self._check(t)
        if self.extension == "affine_periodic":
            return sum(_abs_affine_integral(s, c, lo, hi) for lo, hi, s, c in self.unrolled(0.0, t))
        r, k = self._reduce(t)
        return k * float(self._cum[-1]) + self._cumulative_base(r)

    def abs_integral(self, a: float, b: float) -> float:
        """Exact integral of ``|f|`` over ``[a, b]``."""
        if b < a:
            raise OutOfDomain(f"abs_integral needs a <= b, got [{a}, {b}]")
        a = self._check(a)
        b = self._check(b)
        if self.extension == "affine_periodic" or (b - a) < self.period:
            return sum(_abs_affine_integral(s, c, lo, hi) for lo, hi, s, c in self.unrolled(a, b))
        return self.cumulative_abs(b) - self.cumulative_abs(a)

    def sup_abs(self, a: float, b: float) -> float:
        """Supremum of ``|f|`` over ``[a, b]``."""
        best = 0.0
        for lo, hi, s, c in self.unrolled(a, b):
            best = max(best, abs(s * lo + c), abs(s * hi + c))
        return best

    def sign_class(self) -> str:
        """``"nonneg"``, ``"nonpos"`` or ``"mixed"`` over the whole domain."""
        vals = []
        for p in self.pieces:
            vals.extend((p(p.start), p(p.end)))
        if min(vals) >= 0.0:
            return "nonneg"
        if max(vals) <= 0.0:
            return "nonpos"
        return "mixed"

    # -- delays ---------------------------------------------------------------
    def _require_delay(self):
        if self.role != "delay":
            raise ValidationError("operation defined for delays only")
        if self.extension == "periodic":
            raise Unbounded("periodic delay")

    def tau_min(self, t: float) -> float:
        """``inf_{v >= t} tau(v)``."""
        self._require_delay()
        t = self._check(t)
        if self.extension == "none":
            stop = self.period
        else:
            # tau(v + P) = tau(v) + P, so the infimum is reached within one period
            stop = t + self.period
        best = math.inf
        for lo, hi, s, c in self.unrolled(t, stop):
            best = min(best, s * lo + c, s * hi + c)
        return best

    def tau_min_iter(self, t: float, k: int) -> float:
        if k < 1:
            raise ValueError("k must be a positive integer")
        for _ in range(k):
            t = self.tau_min(t)
        return t

    def first_exceeding(self, threshold: float) -> float:
        """``inf {t >= 0 : tau_min(t) > threshold}`` by bisection."""
        self._require_delay()
        if self.tau_min(0.0) > threshold:
            return 0.0
        lo = 0.0
        hi = self.period
        if self.extension == "none":
            if self.tau_min(hi) <= threshold:
                raise Unbounded(f"tau_min never exceeds {threshold} on [0, {hi}]")
        else:
            while self.tau_min(hi) <= threshold:
                lo = hi
                hi *= 2.0
        while hi - lo > ANCHOR_TOL:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self.tau_min(mid) > threshold:
                hi = mid
            else:
                lo = mid
        return hi


def _dedup(values: Sequence[float], tol: float = BREAK_TOL) -> list[float]:
    out: list[float] = []
    for v in values:
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def eval_fn(f: PiecewiseFn, t: float) -> float:
    return f.eval(t)


def abs_integral(f: PiecewiseFn, a: float, b: float) -> float:
    return f.abs_integral(a, b)


def breakpoints(f: PiecewiseFn, a: float, b: float) -> list[float]:
    return f.breakpoints(a, b)


def tau_min(tau: PiecewiseFn, t: float) -> float:
    return tau.tau_min(t)


def tau_min_iter(tau: PiecewiseFn, t: float, k: int) -> float:
    return tau.tau_min_iter(t, k)


def compute_anchor(tau: PiecewiseFn) -> tuple[float, float]:
    """Return ``(t1, rho)`` for a delay.

    ``t1`` is the first time after which ``tau_min`` is positive and ``rho``
    exceeds the first time after which ``tau_min`` exceeds ``t1``.
    """
    t1 = tau.first_exceeding(0.0)
    rho = tau.first_exceeding(t1) + RHO_OFFSET
    return t1, rho


@dataclass(frozen=True)
class Equation:
    """``x'(t) + c(t) x(tau(t)) = 0`` together with its anchor times."""

    c: PiecewiseFn
    tau: PiecewiseFn
    t1: float
    rho: float

    def __post_init__(self):
        if self.c.role != "coefficient":
            raise ValidationError("c must have role 'coefficient'")
        if self.tau.role != "delay":
            raise ValidationError("tau must have role 'delay'")

    @classmethod
    def build(cls, c: PiecewiseFn, tau: PiecewiseFn) -> "Equation":
        t1, rho = compute_anchor(tau)
        return cls(c, tau, t1, rho)

    @property
    def period(self) -> float | None:
        """Common period of ``c`` and ``tau`` or ``None`` if there is none."""
        pc, pt = self.c.period, self.tau.period
        if self.c.extension != "periodic" or self.tau.extension != "affine_periodic":
            return None
        if abs(pc - pt) <= BREAK_TOL * max(1.0, pt):
            return pt
        ratio = pt / pc
        if abs(ratio - round(ratio)) < 1e-12 and round(ratio) >= 1:
            return pt
        ratio = pc / pt
        if abs(ratio - round(ratio)) < 1e-12 and round(ratio) >= 1:
            return pc
        return None

    def breakpoints(self, a: float, b: float) -> list[float]:
        return _dedup(sorted(self.c.breakpoints(a, b) + self.tau.breakpoints(a, b)))
