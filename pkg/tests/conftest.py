import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from milnorfib.polynomial import Polynomial

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SYM = sp.symbols("x y z w")


def to_sympy(p: Polynomial):
    xs = SYM[: p.nvars]
    return sp.Add(*[sp.Rational(c.numerator, c.denominator) * sp.Mul(*[v**e for v, e in zip(xs, mono)])
                    for mono, c in p.items()])


def from_sympy(expr, nvars: int) -> Polynomial:
    poly = sp.Poly(sp.expand(expr), *SYM[:nvars])
    return Polynomial(nvars, {mono: Fraction(int(c.p), int(c.q)) for mono, c in poly.terms()})


coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=8)


@st.composite
def polynomials(draw, nvars=2, max_terms=5, max_deg=4):
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        mono = tuple(draw(st.integers(0, max_deg)) for _ in range(nvars))
        terms[mono] = draw(coeffs)
    return Polynomial(nvars, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_annulus_points(rng, m, n, r_in, r_out):
    z = rng.standard_normal((n, m))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = rng.uniform(r_in, r_out, size=(n, 1))
    return z * r


def angle_dist(a, b):
    d = math.fmod(a - b, 2 * math.pi)
    return min(abs(d), 2 * math.pi - abs(d))
