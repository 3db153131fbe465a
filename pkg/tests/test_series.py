import math
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from .conftest import SYM
from milnorfib.polynomial import parse_polynomial
from milnorfib.series import TruncationError, UnivariateSeries, compose_curve, cos_sin_series

s_ = sp.Symbol("s")


def S(text, trunc=16):
    return UnivariateSeries.parse(text, trunc)


def test_compose_examples():
    a = compose_curve(parse_polynomial("x", 2), [S("s"), S("s^2")])
    assert a.coeffs == (0, 1) and a.order() == 1
    pq = compose_curve(parse_polynomial("x*y", 2), [S("s^2"), S("s^3")])
    assert pq.order() == 5 and pq.leading() == 1
    r2 = compose_curve(parse_polynomial("x^2 + y^2", 2), [S("s"), S("s")])
    assert r2.coeffs == (0, 0, 2) and r2.order() == 2


def test_zero_series_orders():
    assert UnivariateSeries([]).order() == math.inf
    inexact = UnivariateSeries([0, 0, 0], trunc=2, exact=False)
    with pytest.raises(TruncationError):
        inexact.order()


def test_truncation_marks_inexact():
    a = S("s^3", trunc=4)
    assert not (a * a).exact
    assert (a * a).is_identically_zero()
    with pytest.raises(TruncationError):
        (a * a).order()
    assert (a * a).with_trunc(8).exact is False
    b = S("s^3", trunc=8)
    assert (b * b).order() == 6


def test_order_tolerance_for_floats():
    a = UnivariateSeries([1e-20, 0.5])
    assert a.order() == 0
    assert a.order(rel_tol=1e-12) == 1


@given(st.lists(st.fractions(-3, 3, max_denominator=5), max_size=5),
       st.lists(st.fractions(-3, 3, max_denominator=5), max_size=5))
def test_order_additive(a, b):
    A, B = UnivariateSeries(a), UnivariateSeries(b)
    prod = A * B
    if A.order() == math.inf or B.order() == math.inf:
        assert prod.order() == math.inf
    else:
        assert prod.order() == A.order() + B.order()


def test_compose_matches_sympy():
    p = parse_polynomial("x^3*y - 2*x*y^2 + y^4", 2)
    alpha = [S("s + 2*s^2"), S("-s^2 + s^3/3")]
    series = compose_curve(p, alpha)
    expr = sp.expand(sp.sympify("x**3*y - 2*x*y**2 + y**4").subs(
        {sp.Symbol("x"): s_ + 2 * s_**2, sp.Symbol("y"): -(s_**2) + s_**3 / 3}, simultaneous=True))
    poly = sp.Poly(expr, s_)
    expected = {m[0]: Fraction(int(c.p), int(c.q)) for m, c in poly.terms()}
    for k in range(series.trunc + 1):
        assert series[k] == expected.get(k, 0)


def test_cos_sin_series_against_sympy():
    delta = S("s - 1/2*s^3")
    c, s = cos_sin_series(Fraction(0), Fraction(1), delta)
    # cos(pi/2 + d) = -sin d, sin(pi/2 + d) = cos d
    ser_c = sp.series(-sp.sin(s_ - s_**3 / 2), s_, 0, 10).removeO()
    ser_s = sp.series(sp.cos(s_ - s_**3 / 2), s_, 0, 10).removeO()
    for k in range(10):
        assert c[k] == Fraction(str(sp.Poly(ser_c, s_).coeff_monomial(s_**k)))
        assert s[k] == Fraction(str(sp.Poly(ser_s, s_).coeff_monomial(s_**k)))
    assert not c.exact


def test_series_call_and_derivative():
    a = S("1 + 2*s + 3*s^2")
    assert a(0.5) == pytest.approx(2.75)
    assert a.derivative().coeffs == (2, 6)
    assert a.tail().coeffs == (0, 2, 3)
