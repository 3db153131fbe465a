"""Outward-rounded interval arithmetic on IEEE doubles.

Every elementary operation rounds to nearest and then widens each endpoint by
one ulp with ``nextafter``, which encloses the exact result.  Scalar
:class:`Interval` values back the public API; :func:`eval_batch` evaluates one
polynomial over many boxes at once with numpy and is what the subdivision
engine uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .polynomial import Polynomial, PolynomialError

__all__ = ["Interval", "Box", "eval_interval", "eval_batch", "fraction_enclosure"]

_INF = math.inf


def _down(v: float) -> float:
    return math.nextafter(v, -_INF)


def _up(v: float) -> float:
    return math.nextafter(v, _INF)


def fraction_enclosure(c: Fraction) -> tuple[float, float]:
    """Tightest float interval containing the rational ``c``."""
    f = float(c)
    if Fraction(f) == c:
        return f, f
    if Fraction(f) < c:
        return f, _up(f)
    return _down(f), f


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v) -> "Interval":
        if isinstance(v, Fraction):
            return cls(*fraction_enclosure(v))
        return cls(float(v), float(v))

    @staticmethod
    def _lift(v) -> "Interval":
        return v if isinstance(v, Interval) else Interval.point(v)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other) -> "Interval":
        o = self._lift(other)
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Interval":
        return self._lift(other) - self

    def __mul__(self, other) -> "Interval":
        o = self._lift(other)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_down(min(ps)), _up(max(ps)))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Interval":
        if k < 0:
            raise ValueError("negative interval power")
        if k == 0:
            return Interval(1.0, 1.0)
        lo, hi = _pow_interval(np.array([self.lo]), np.array([self.hi]), k)
        return Interval(float(lo[0]), float(hi[0]))

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


class Box:
    """Axis-aligned box; a product of closed intervals."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box needs matching, nonempty bounds")
        if any(not a <= b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box {lo} {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Box is immutable")

    def __reduce__(self):
        return (Box, (self.lo, self.hi))

    @classmethod
    def from_intervals(cls, coords: Iterable[Interval]) -> "Box":
        coords = list(coords)
        return cls([c.lo for c in coords], [c.hi for c in coords])

    @classmethod
    def cube(cls, n: int, half_width: float) -> "Box":
        return cls([-half_width] * n, [half_width] * n)

    @property
    def coords(self) -> tuple[Interval, ...]:
        return tuple(Interval(a, b) for a, b in zip(self.lo, self.hi))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (a + b) for a, b in zip(self.lo, self.hi))

    def contains(self, point: Sequence[float]) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lo, point, self.hi))

    def bisect(self, axis: int | None = None) -> tuple["Box", "Box"]:
        if axis is None:
            w = self.widths()
            axis = max(range(len(w)), key=lambda i: w[i])
        mid = 0.5 * (self.lo[axis] + self.hi[axis])
        hi1 = list(self.hi)
        hi1[axis] = mid
        lo2 = list(self.lo)
        lo2[axis] = mid
        return Box(self.lo, hi1), Box(lo2, self.hi)

    def append(self, iv: Interval) -> "Box":
        return Box(self.lo + (iv.lo,), self.hi + (iv.hi,))

    def to_list(self) -> list[list[float]]:
        return [[a, b] for a, b in zip(self.lo, self.hi)]

    def __eq__(self, other) -> bool:
        return isinstance(other, Box) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __lt__(self, other: "Box") -> bool:
        return (self.lo, self.hi) < (other.lo, other.hi)

    def __repr__(self) -> str:
        return "Box(" + " x ".join(f"[{a:.6g}, {b:.6g}]" for a, b in zip(self.lo, self.hi)) + ")"


# -- vectorised kernels ---------------------------------------------------------

_ndown = lambda a: np.nextafter(a, -np.inf)  # noqa: E731
_nup = lambda a: np.nextafter(a, np.inf)  # noqa: E731


def _mul_batch(alo, ahi, blo, bhi):
    p1, p2, p3, p4 = alo * blo, alo * bhi, ahi * blo, ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    # a zero endpoint is exact when every zero product has a zero factor (no underflow)
    underflow = np.zeros(lo.shape, dtype=bool)
    for pr, a, b in ((p1, alo, blo), (p2, alo, bhi), (p3, ahi, blo), (p4, ahi, bhi)):
        underflow |= (pr == 0) & (a != 0) & (b != 0)
    lo = np.where((lo == 0) & ~underflow, 0.0, _ndown(lo))
    hi = np.where((hi == 0) & ~underflow, 0.0, _nup(hi))
    return lo, hi


def _add_dir(a, b, up: bool):
    # TwoSum gives the exact rounding error; widen only when it is nonzero
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    if up:
        return np.where(err > 0, _nup(s), s)
    return np.where(err < 0, _ndown(s), s)


def _pow_nonneg(a, k, up: bool):
    # a >= 0; repeated multiplication with directed widening
    r = a.copy()
    step = _nup if up else _ndown
    for _ in range(k - 1):
        r = step(r * a)
    if not up:
        r = np.maximum(r, 0.0)
    return r


def _pow_interval(lo, hi, k: int):
    if k == 1:
        return lo, hi
    alo, ahi = np.abs(lo), np.abs(hi)
    if k % 2 == 0:
        mag = np.maximum(alo, ahi)
        mig = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(alo, ahi))
        return _pow_nonneg(mig, k, False), _pow_nonneg(mag, k, True)
    # odd powers are monotone
    out_lo = np.where(lo >= 0, _pow_nonneg(alo, k, False), -_pow_nonneg(alo, k, True))
    out_hi = np.where(hi >= 0, _pow_nonneg(ahi, k, True), -_pow_nonneg(ahi, k, False))
    return out_lo, out_hi


def eval_batch(p: Polynomial, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Enclose ``p`` over each box ``[lo[i], hi[i]]``; arrays have shape (N, nvars).

    Terms are evaluated in power form (even powers of intervals straddling 0
    stay non-negative) and summed left to right with outward rounding.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.ndim != 2 or lo.shape[1] != p.nvars:
        raise PolynomialError(f"boxes must have shape (N, {p.nvars})")
    n = lo.shape[0]
    acc_lo = np.zeros(n)
    acc_hi = np.zeros(n)
    if p.is_zero():
        return acc_lo, acc_hi
    maxe = p.max_exponents()
    powers = []
    for j in range(p.nvars):
        pj = {1: (lo[:, j], hi[:, j])}
        for k in range(2, maxe[j] + 1):
            pj[k] = _pow_interval(lo[:, j], hi[:, j], k)
        powers.append(pj)
    for mono, c in p.sorted_terms():
        clo, chi = fraction_enclosure(c)
        tlo = np.full(n, clo)
        thi = np.full(n, chi)
        for j, e in enumerate(mono):
            if e:
                tlo, thi = _mul_batch(tlo, thi, *powers[j][e])
        acc_lo = _add_dir(acc_lo, tlo, up=False)
        acc_hi = _add_dir(acc_hi, thi, up=True)
    return acc_lo, acc_hi


def eval_interval(p: Polynomial, box: Box) -> Interval:
    """Interval enclosure of the range of ``p`` over ``box``."""
    if box.dim != p.nvars:
        raise PolynomialError(f"box has dimension {box.dim}, polynomial has {p.nvars} variables")
    lo, hi = eval_batch(p, np.array([box.lo]), np.array([box.hi]))
    return Interval(float(lo[0]), float(hi[0]))
