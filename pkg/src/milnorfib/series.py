"""Truncated univariate power series in ``s``.

Coefficients are exact :class:`~fractions.Fraction` values when the inputs
are rational; float coefficients are accepted for curves with irrational data
(e.g. ``sin(theta0)``).  A series knows whether it is *exact*: a polynomial
that lost no terms to truncation.  The order of an exact all-zero series is
``inf``; for an inexact one it is indeterminate and :class:`TruncationError`
asks the caller to raise the truncation degree.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .polynomial import Polynomial, PolynomialError, parse_polynomial

__all__ = ["UnivariateSeries", "TruncationError", "compose_curve", "DEFAULT_TRUNCATION"]

DEFAULT_TRUNCATION = 16


class TruncationError(ArithmeticError):
    """The truncation degree is too small to determine a series order."""


def _is_zero(c, tol: float) -> bool:
    if isinstance(c, Fraction) or isinstance(c, int):
        return c == 0
    return abs(c) <= tol


class UnivariateSeries:
    """Power series ``sum_k c_k s^k`` known up to ``s^trunc``."""

    __slots__ = ("coeffs", "trunc", "exact")

    def __init__(self, coeffs: Sequence, trunc: int = DEFAULT_TRUNCATION, exact: bool = True):
        cs = [c if isinstance(c, (Fraction, float)) else Fraction(c) for c in coeffs]
        if len(cs) > trunc + 1:
            if any(not _is_zero(c, 0.0) for c in cs[trunc + 1 :]):
                exact = False
            cs = cs[: trunc + 1]
        while cs and _is_zero(cs[-1], 0.0):
            cs.pop()
        self.coeffs = tuple(cs)
        self.trunc = trunc
        self.exact = exact

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, c, trunc: int = DEFAULT_TRUNCATION) -> "UnivariateSeries":
        return cls([c], trunc)

    @classmethod
    def monomial(cls, k: int, c=1, trunc: int = DEFAULT_TRUNCATION) -> "UnivariateSeries":
        return cls([0] * k + [c], trunc)

    @classmethod
    def parse(cls, text: str, trunc: int = DEFAULT_TRUNCATION) -> "UnivariateSeries":
        """Parse a polynomial in ``s``."""
        p = parse_polynomial(text, 1, names=("s",))
        deg = max(p.degree(), 0)
        cs = [Fraction(0)] * (deg + 1)
        for (e,), c in p.items():
            cs[e] = c
        return cls(cs, trunc)

    def with_trunc(self, trunc: int) -> "UnivariateSeries":
        return UnivariateSeries(self.coeffs, trunc, self.exact)

    # -- access -------------------------------------------------------------

    def __getitem__(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def is_float(self) -> bool:
        return any(isinstance(c, float) for c in self.coeffs)

    def _scale_tol(self, rel: float) -> float:
        mags = [abs(float(c)) for c in self.coeffs]
        return rel * max(mags, default=0.0)

    def order(self, rel_tol: float = 0.0) -> float:
        """Index of the first nonzero coefficient (``inf`` for an exact zero series).

        Float coefficients below ``rel_tol`` times the largest magnitude are
        treated as zero.
        """
        tol = self._scale_tol(rel_tol)
        for k, c in enumerate(self.coeffs):
            if not _is_zero(c, tol):
                return k
        if self.exact:
            return math.inf
        raise TruncationError(f"all coefficients up to s^{self.trunc} vanish")

    def leading(self, rel_tol: float = 0.0):
        k = self.order(rel_tol)
        return self.coeffs[k] if k != math.inf else Fraction(0)

    def is_identically_zero(self, rel_tol: float = 0.0) -> bool:
        tol = self._scale_tol(rel_tol)
        return all(_is_zero(c, tol) for c in self.coeffs)

    def __call__(self, s: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * s + float(c)
        return acc

    # -- arithmetic ---------------------------------------------------------

    def _lift(self, other) -> "UnivariateSeries":
        if isinstance(other, UnivariateSeries):
            return other
        return UnivariateSeries([other], self.trunc)

    def __add__(self, other) -> "UnivariateSeries":
        o = self._lift(other)
        n = max(len(self.coeffs), len(o.coeffs))
        t = min(self.trunc, o.trunc)
        return UnivariateSeries([self[k] + o[k] for k in range(n)], t, self.exact and o.exact)

    __radd__ = __add__

    def __neg__(self) -> "UnivariateSeries":
        return UnivariateSeries([-c for c in self.coeffs], self.trunc, self.exact)

    def __sub__(self, other) -> "UnivariateSeries":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "UnivariateSeries":
        return self._lift(other) - self

    def __mul__(self, other) -> "UnivariateSeries":
        o = self._lift(other)
        t = min(self.trunc, o.trunc)
        a, b = self.coeffs, o.coeffs
        if not a or not b:
            return UnivariateSeries([], t, self.exact and o.exact)
        full = len(a) + len(b) - 1
        n = min(full, t + 1)
        out = []
        for k in range(n):
            acc = Fraction(0)
            for i in range(max(0, k - len(b) + 1), min(k, len(a) - 1) + 1):
                acc = acc + a[i] * b[k - i]
            out.append(acc)
        exact = self.exact and o.exact
        if full > n:
            # dropped products; only exact if they are all zero
            for k in range(n, full):
                for i in range(max(0, k - len(b) + 1), min(k, len(a) - 1) + 1):
                    if not _is_zero(a[i] * b[k - i], 0.0):
                        exact = False
                        break
                if not exact:
                    break
        return UnivariateSeries(out, t, exact)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "UnivariateSeries":
        result = UnivariateSeries([1], self.trunc)
        for _ in range(k):
            result = result * self
        return result

    def derivative(self) -> "UnivariateSeries":
        return UnivariateSeries(
            [k * c for k, c in enumerate(self.coeffs)][1:], max(self.trunc - 1, 0), self.exact
        )

    def tail(self) -> "UnivariateSeries":
        """The series minus its constant term."""
        return UnivariateSeries([0] + list(self.coeffs[1:]), self.trunc, self.exact)

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*s^{k}" for k, c in enumerate(self.coeffs) if c) or "0"
        return f"UnivariateSeries({body}, trunc={self.trunc}{'' if self.exact else ', inexact'})"


def cos_sin_series(phase0_cos, phase0_sin, delta: UnivariateSeries):
    """Series of ``cos(phi0 + delta(s))`` and ``sin(phi0 + delta(s))``.

    ``delta`` must have zero constant term; ``phase0_cos``/``phase0_sin`` are
    the (exact or float) values at ``s = 0``.
    """
    if delta[0] != 0:
        raise ValueError("delta must vanish at s = 0")
    t = delta.trunc
    if delta.is_identically_zero() and delta.exact:
        return UnivariateSeries([phase0_cos], t), UnivariateSeries([phase0_sin], t)
    # cos(delta), sin(delta) by Taylor series; delta has order >= 1
    c_d = UnivariateSeries([1], t, exact=False)
    s_d = UnivariateSeries([], t, exact=False)
    term = UnivariateSeries([1], t)
    for k in range(1, t + 1):
        term = term * delta * Fraction(1, k)
        if term.is_identically_zero():
            break
        sign = -1 if (k // 2) % 2 else 1
        if k % 2:
            s_d = s_d + term * sign
        else:
            c_d = c_d + term * sign
    c_d = UnivariateSeries(c_d.coeffs, t, exact=False)
    s_d = UnivariateSeries(s_d.coeffs, t, exact=False)
    cos_s = c_d * phase0_cos - s_d * phase0_sin
    sin_s = s_d * phase0_cos + c_d * phase0_sin
    return cos_s, sin_s


def compose_curve(
    p: Polynomial, alpha: Sequence[UnivariateSeries], trunc: int | None = None
) -> UnivariateSeries:
    """Series of ``p(alpha(s))`` truncated at ``trunc`` (default: min of inputs)."""
    if len(alpha) != p.nvars:
        raise PolynomialError(f"curve has {len(alpha)} components, polynomial has {p.nvars} variables")
    if trunc is None:
        trunc = min((a.trunc for a in alpha), default=DEFAULT_TRUNCATION)
    alpha = [a.with_trunc(trunc) for a in alpha]
    cache: list[dict[int, UnivariateSeries]] = [{0: UnivariateSeries([1], trunc)} for _ in alpha]

    def power(i: int, e: int) -> UnivariateSeries:
        if e not in cache[i]:
            cache[i][e] = power(i, e - 1) * alpha[i]
        return cache[i][e]

    total = UnivariateSeries([], trunc)
    for mono, c in p.sorted_terms():
        term = UnivariateSeries([c], trunc)
        for i, e in enumerate(mono):
            if e:
                term = term * power(i, e)
        total = total + term
    return total
