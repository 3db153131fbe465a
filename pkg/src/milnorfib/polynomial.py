"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Polynomial` maps exponent tuples to :class:`fractions.Fraction`
coefficients.  Exact arithmetic is the primary representation; float and
interval evaluation are derived views built from cached coefficient arrays.

Text syntax: variables ``x1 .. xm`` (aliases ``x, y, z, w`` when m <= 4),
integer, decimal and rational literals, ``+ - * / ^`` (``**`` also accepted)
and parentheses.  Division is only allowed by nonzero constants.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "PolynomialError",
    "ParseError",
    "variable_names",
    "parse_polynomial",
    "arith",
    "gradient",
]

ALIASES = ("x", "y", "z", "w")


class PolynomialError(ValueError):
    """Raised on dimension mismatches and invalid polynomial operations."""


class ParseError(PolynomialError):
    """Raised when polynomial text cannot be parsed."""


def variable_names(m: int) -> tuple[str, ...]:
    """Canonical printed variable names for dimension ``m``."""
    if m <= len(ALIASES):
        return ALIASES[:m]
    return tuple(f"x{i + 1}" for i in range(m))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c))
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as a polynomial coefficient")


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables over the rationals."""

    __slots__ = ("nvars", "_terms", "__dict__")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 0:
            raise PolynomialError("nvars must be non-negative")
        clean: dict[tuple[int, ...], Fraction] = {}
        for mono, c in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != nvars:
                raise PolynomialError(f"monomial {mono} does not have {nvars} exponents")
            if any(e < 0 for e in mono):
                raise PolynomialError(f"negative exponent in {mono}")
            c = _as_fraction(c)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
                if not clean[mono]:
                    del clean[mono]
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    def __reduce__(self):
        return (Polynomial, (self.nvars, dict(self._terms)))

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        if not 0 <= i < nvars:
            raise PolynomialError(f"variable index {i} out of range for {nvars} variables")
        mono = [0] * nvars
        mono[i] = 1
        return cls(nvars, {tuple(mono): 1})

    @classmethod
    def variables(cls, nvars: int) -> list["Polynomial"]:
        return [cls.variable(nvars, i) for i in range(nvars)]

    @classmethod
    def parse(cls, text: str, nvars: int) -> "Polynomial":
        return parse_polynomial(text, nvars)

    # -- basic protocol -----------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.nvars, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self.to_string()!r})"

    def __str__(self) -> str:
        return self.to_string()

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def lowest_degree(self) -> int:
        """Smallest total degree of a term; -1 for the zero polynomial."""
        return min((sum(m) for m in self._terms), default=-1)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, mono: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def max_exponents(self) -> tuple[int, ...]:
        if not self._terms:
            return (0,) * self.nvars
        return tuple(max(m[i] for m in self._terms) for i in range(self.nvars))

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise PolynomialError(
                    f"dimension mismatch: {self.nvars} vs {other.nvars} variables"
                )
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        other = self._coerce(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, out)

    def __rmul__(self, other) -> "Polynomial":
        return self.scale(other)

    def __truediv__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.degree() > 0:
                raise PolynomialError("division by a non-constant polynomial")
            other = other.constant_term()
        other = _as_fraction(other)
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        return self.scale(1 / other)

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise PolynomialError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c) -> "Polynomial":
        c = _as_fraction(c)
        return Polynomial(self.nvars, {m: c * v for m, v in self._terms.items()})

    # -- calculus -----------------------------------------------------------

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for m, c in self._terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                out[tuple(mm)] = c * m[i]
        return Polynomial(self.nvars, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.nvars)]

    def compose(self, subs: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute polynomials (all in a common ring) for each variable."""
        if len(subs) != self.nvars:
            raise PolynomialError(f"need {self.nvars} substitutions, got {len(subs)}")
        if not subs:
            return self
        target = subs[0].nvars
        result = Polynomial.zero(target)
        powers: list[dict[int, Polynomial]] = [{0: Polynomial.constant(target, 1)} for _ in subs]

        def power(i: int, e: int) -> Polynomial:
            cache = powers[i]
            if e not in cache:
                cache[e] = power(i, e - 1) * subs[i]
            return cache[e]

        for m, c in self._terms.items():
            term = Polynomial.constant(target, c)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        monos = sorted(self._terms)
        exps = np.array(monos, dtype=np.int64).reshape(len(monos), self.nvars)
        coefs = np.array([float(self._terms[m]) for m in monos], dtype=float)
        return exps, coefs

    @cached_property
    def _horner_tree(self):
        return _build_horner([(m, float(c)) for m, c in self._terms.items()], 0, self.nvars)

    def eval_exact(self, point: Sequence) -> Fraction:
        """Exact value at a rational point (floats are converted exactly)."""
        if len(point) != self.nvars:
            raise PolynomialError(f"point has {len(point)} coordinates, expected {self.nvars}")
        pt = [_as_fraction(v) for v in point]
        total = Fraction(0)
        for m, c in self._terms.items():
            t = c
            for v, e in zip(pt, m):
                if e:
                    t *= v**e
            total += t
        return total

    def __call__(self, point: Sequence[float]) -> float:
        return eval_point(self, point)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation; ``points`` has shape (..., nvars)."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.nvars:
            raise PolynomialError(f"points have {pts.shape[-1]} coordinates, expected {self.nvars}")
        exps, coefs = self._arrays
        if not len(coefs):
            return np.zeros(pts.shape[:-1])
        out = np.zeros(pts.shape[:-1])
        for e, c in zip(exps, coefs):
            t = np.full(pts.shape[:-1], c)
            for i, k in enumerate(e):
                if k:
                    t = t * pts[..., i] ** int(k)
            out = out + t
        return out

    # -- text ---------------------------------------------------------------

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in canonical print order: descending degree, then lex descending."""
        return sorted(self._terms.items(), key=lambda mc: (-sum(mc[0]), tuple(-e for e in mc[0])))

    def to_string(self, names: Sequence[str] | None = None) -> str:
        names = tuple(names) if names is not None else variable_names(self.nvars)
        if not self._terms:
            return "0"
        parts: list[str] = []
        for k, (m, c) in enumerate(self.sorted_terms()):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            factors = []
            for name, e in zip(names, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            coef = str(a.numerator) if a.denominator == 1 else f"{a.numerator}/{a.denominator}"
            if factors:
                body = "*".join(factors) if a == 1 else coef + "*" + "*".join(factors)
            else:
                body = coef
            if k == 0:
                parts.append(("-" if sign == "-" else "") + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)


def arith(p: Polynomial, q, op: str) -> Polynomial:
    """Dispatch ``add``, ``sub``, ``mul`` or ``scale`` (``q`` a scalar for scale)."""
    if op == "add":
        return p + p._coerce(q)
    if op == "sub":
        return p - p._coerce(q)
    if op == "mul":
        return p * p._coerce(q)
    if op == "scale":
        return p.scale(q)
    raise PolynomialError(f"unknown operation {op!r}")


def eval_point(p: Polynomial, point: Sequence[float]) -> float:
    """Horner-style float evaluation at a single point."""
    if len(point) != p.nvars:
        raise PolynomialError(f"point has {len(point)} coordinates, expected {p.nvars}")
    if p.nvars == 0:
        return float(p.constant_term())
    return _horner(p._horner_tree, [float(v) for v in point], 0)


def _build_horner(terms: Iterable[tuple[tuple[int, ...], float]], var: int, nvars: int):
    # Nested dict: exponent of `var` -> subtree over remaining variables.
    if var == nvars:
        return sum(c for _, c in terms)
    groups: dict[int, list] = {}
    for m, c in terms:
        groups.setdefault(m[var], []).append((m, c))
    return {e: _build_horner(g, var + 1, nvars) for e, g in groups.items()}


def _horner(tree, pt: list[float], var: int) -> float:
    if not isinstance(tree, dict):
        return tree
    if not tree:
        return 0.0
    degs = sorted(tree, reverse=True)
    x = pt[var]
    acc = 0.0
    prev = degs[0]
    for d in degs:
        acc = acc * x ** (prev - d) + _horner(tree[d], pt, var + 1)
        prev = d
    return acc * x**prev


def gradient(p: Polynomial) -> list[Polynomial]:
    return p.gradient()


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r} at position {pos} in {text!r}")
        kind = mt.lastgroup
        val = mt.group(kind)
        out.append((kind, "^" if val == "**" else val))
        pos = mt.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, text: str, names: Mapping[str, int], nvars: int):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.names = names
        self.nvars = nvars

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, val: str):
        kind, v = self.take()
        if v != val:
            raise ParseError(f"expected {val!r} in {self.text!r}, found {v!r}")

    def parse(self) -> Polynomial:
        if not self.tokens:
            raise ParseError("empty polynomial text")
        p = self.expr()
        if self.pos != len(self.tokens):
            raise ParseError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if q.degree() > 0:
                    raise ParseError(f"division by non-constant in {self.text!r}")
                if q.is_zero():
                    raise ParseError(f"division by zero in {self.text!r}")
                p = p / q
        return p

    def unary(self) -> Polynomial:
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            p = self.unary()
            return -p if op == "-" else p
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, v = self.take()
            if kind != "num" or not v.isdigit():
                raise ParseError(f"exponent must be a non-negative integer literal in {self.text!r}")
            return base ** int(v)
        return base

    def atom(self) -> Polynomial:
        kind, v = self.take()
        if kind == "num":
            return Polynomial.constant(self.nvars, Fraction(v))
        if kind == "name":
            if v not in self.names:
                raise ParseError(f"unknown variable {v!r} in {self.text!r}")
            return Polynomial.variable(self.nvars, self.names[v])
        if v == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise ParseError(f"unexpected token {v!r} in {self.text!r}")


def _name_map(nvars: int, names: Sequence[str] | None) -> dict[str, int]:
    if names is not None:
        return {n: i for i, n in enumerate(names)}
    out = {f"x{i + 1}": i for i in range(nvars)}
    if nvars <= len(ALIASES):
        out.update({a: i for i, a in enumerate(ALIASES[:nvars])})
    return out


def parse_polynomial(text: str, nvars: int, names: Sequence[str] | None = None) -> Polynomial:
    """Parse polynomial text in ``nvars`` variables."""
    return _Parser(str(text), _name_map(nvars, names), nvars).parse()
