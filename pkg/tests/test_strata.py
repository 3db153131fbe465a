import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from milnorfib.certify import PASS, Annulus, SubdivisionConfig, certify_nonvanishing, find_parallel_points
from milnorfib.germ import REGISTRY, MapGerm, SeadeFamily, theta_of
from milnorfib.polynomial import ParseError
from milnorfib.series import UnivariateSeries
from milnorfib.strata import (
    BUILTIN_CURVES,
    CurveError,
    DegenerateCurve,
    NotLinkApproach,
    StratPair,
    TestCurve,
    c_regularity_limit,
    curve_ratio_diagnostic,
    full_gradient,
    load_curve,
    m_condition_scan,
    m_condition_system,
    whitney_a_limit,
)

EX52 = REGISTRY["ex-5.2"]
IDENT = REGISTRY["identity"]
F52 = SeadeFamily(EX52)
FID = SeadeFamily(IDENT)
SWEEP = [10.0**-k for k in range(2, 7)]


def ex52_gradient(x, y, th):
    """Hand-typed full gradient of cos(th) x - sin(th) (y x^2 + y^3)."""
    c, s = math.cos(th), math.sin(th)
    return np.array([c - s * 2 * x * y, -s * (x * x + 3 * y * y), -s * x - c * (y * x * x + y**3)])


def theta_share(v):
    return abs(v[-1]) / np.linalg.norm(v)


def radial_curve(theta0_pi):
    t0 = float(theta0_pi) * math.pi
    return TestCurve(
        (UnivariateSeries([0.0, math.sin(t0)]), UnivariateSeries([0.0, math.cos(t0)])),
        UnivariateSeries([]), Fraction(theta0_pi), name="radial",
    )


def test_full_gradient_examples():
    for xv in (0.3, -0.01):
        assert np.allclose(full_gradient(F52, [xv, 0.0], math.pi / 2), [0.0, -xv * xv, -xv], atol=1e-17)
    g = REGISTRY["ruas-1.5"]
    pt = [0.25, 0.5]
    assert abs(g.Q(pt)) < 1e-17
    fg = full_gradient(SeadeFamily(g), pt, 0.0)
    assert np.allclose(fg, [0.5, 0.25, 0.0])
    for th in (0.0, 0.7, 2.5):
        assert np.allclose(full_gradient(FID, [0.0, 0.0], th), [math.cos(th), -math.sin(th), 0.0])


def test_whitney_fails_along_builtin_sequence():
    rep = whitney_a_limit(F52, BUILTIN_CURVES["ex-5.2"])
    assert rep.verdict == "FAILS"
    assert abs(rep.limit - 1.0) <= 1e-9
    assert rep.exponents == {"order_normal_theta_sq": 2, "order_normal_sq": 2}
    # oracle: hand-typed gradient along (s, 0, pi/2)
    vals = [theta_share(ex52_gradient(s, 0.0, math.pi / 2)) for s in SWEEP]
    assert vals[2] >= 0.999
    assert abs(vals[-1] - rep.limit) <= 1e-4


@pytest.mark.parametrize("theta0_pi", [Fraction(1, 4), Fraction(1, 3), Fraction(0), Fraction(1, 2)])
def test_radial_identity_curve(theta0_pi):
    c = radial_curve(theta0_pi)
    w = whitney_a_limit(FID, c)
    assert w.limit == 0.0 and w.verdict == "HOLDS"
    cr = c_regularity_limit(StratPair(FID), c)
    assert cr.limit == 0.0 and cr.verdict == "HOLDS"
    t0 = float(theta0_pi) * math.pi
    for s in SWEEP:
        n = full_gradient(FID, c.point(s), t0)
        assert theta_share(n) == pytest.approx(s / math.sqrt(1 + s * s), rel=1e-9)


def test_constant_theta_zero_derivative_gives_zero():
    # Psi = -y at theta = pi/2 and dPsi/dtheta = -x vanishes on x = 0
    c = TestCurve.from_strings(["0", "s"], "pi/2")
    g = MapGerm.from_strings(2, "x", "y*x")
    assert whitney_a_limit(SeadeFamily(g), TestCurve.from_strings(["0", "s"], "0")).limit == 0.0
    assert whitney_a_limit(FID, TestCurve.from_strings(["0", "s"], "0")).limit == 0.0
    with pytest.raises(CurveError):
        whitney_a_limit(FID, c)


def _c_numeric(f, curve, s):
    """Theta share of grad rho projected onto the tangent space of X, computed with floats."""
    x = curve.point(s)
    n = full_gradient(f, x, curve.theta_at(s))
    n = n / np.linalg.norm(n)
    grad_rho = np.append(2 * x, 0.0)
    w = grad_rho - np.dot(grad_rho, n) * n
    return theta_share(w)


def test_c_regularity_second_example_matches_sweep():
    c = BUILTIN_CURVES["ex-5.2"]
    rep = c_regularity_limit(StratPair(F52), c)
    vals = [_c_numeric(F52, c, s) for s in SWEEP]
    assert abs(vals[-1] - rep.limit) <= 1e-4 * max(1.0, rep.limit)


def test_truncation_is_raised_automatically():
    g = MapGerm.from_strings(2, "x^3", "y^3")
    c = TestCurve.from_strings(["s^6", "0"], "pi/2")
    rep = whitney_a_limit(SeadeFamily(g), c)
    assert rep.limit == pytest.approx(1.0)
    assert rep.exponents["order_normal_sq"] == 36
    assert rep.details["trunc"] >= 36


def test_curve_not_on_x_reports_first_residual():
    with pytest.raises(CurveError, match="s\\^1"):
        whitney_a_limit(FID, TestCurve.from_strings(["s", "s"], "0"))
    with pytest.raises(CurveError):
        whitney_a_limit(FID, TestCurve.from_strings(["1 + s", "0"], "pi/2"))


def test_degenerate_c_regularity():
    # grad rho is normal to X along this curve: rho restricted to X is critical
    g = MapGerm.from_strings(2, "x^2 + y^2", "x*y")
    c = TestCurve.from_strings(["s", "s"], "pi/4")
    f = SeadeFamily(g)
    with pytest.raises(CurveError):
        c_regularity_limit(StratPair(f), c)


# -- curve ratio diagnostic ---------------------------------------------------------------


def test_ratio_precondition_violations():
    plane = MapGerm.from_strings(2, "x", "y")
    with pytest.raises(NotLinkApproach):
        curve_ratio_diagnostic(plane, TestCurve.from_strings(["s", "1"]))
    with pytest.raises(NotLinkApproach):
        curve_ratio_diagnostic(plane, TestCurve.from_strings(["s", "s"]))
    # arc of the circle of radius 1/10 starting at (0, 1/10): psi(alpha(0)) = (0, 1/10) != 0
    arc = TestCurve.from_strings(["s", "1/10 - 5*s^2 - 125/2*s^4"])
    with pytest.raises(NotLinkApproach):
        curve_ratio_diagnostic(plane, arc)


def _ratio_numeric(g, alpha, s):
    x = alpha.point(s)
    p, q = g.P(list(x)), g.Q(list(x))
    gp = np.array([d(list(x)) for d in g.grad_P])
    gq = np.array([d(list(x)) for d in g.grad_Q])
    return np.linalg.norm(2 * (p * gp + q * gq)) / np.linalg.norm(p * gq - q * gp)


def test_ratio_bounded_for_plane_in_three_space():
    g = MapGerm.from_strings(3, "x", "y")
    c = TestCurve.from_strings(["s", "s", "1/10"])
    rep = curve_ratio_diagnostic(g, c)
    assert rep.verdict == "BOUNDED"
    assert rep.exponents["r"] == 1 and rep.exponents["k"] == 1
    assert rep.limit == pytest.approx(2.0)
    assert not rep.details["degenerate_equal_orders"]
    assert _ratio_numeric(g, c, 1e-6) == pytest.approx(rep.limit, rel=1e-4)


def test_ratio_into_link_of_third_example():
    g = REGISTRY["ex-5.3"]
    t = Fraction(1, 10)
    c = TestCurve.from_strings([f"{t} + s", f"{t**3} + s", "s^2"])
    rep = curve_ratio_diagnostic(g, c)
    assert rep.verdict == "BOUNDED"
    assert rep.exponents["r"] == 2 and rep.exponents["k"] == 1
    num = [_ratio_numeric(g, c, s) for s in SWEEP]
    assert num[-1] == pytest.approx(rep.limit, rel=1e-4)


def test_ratio_flags_degenerate_equal_orders():
    g = MapGerm.from_strings(2, "x", "x*(1 + y)")
    c = TestCurve.from_strings(["s", "1"])
    rep = curve_ratio_diagnostic(g, c)
    assert rep.exponents["r"] == rep.exponents["k"] == 1
    assert rep.details["degenerate_equal_orders"]


# -- (m)-condition scan ------------------------------------------------------------------


@given(st.integers(1, 12))
def test_m_scan_identity_passes_for_any_grid(n):
    cert = m_condition_scan(StratPair(FID), Annulus(0.1, 1.0), n)
    assert cert.verdict == PASS


def test_m_scan_petal_germ_fails_at_petal_angle():
    g = REGISTRY["milnor-1.1"]
    pp = find_parallel_points(g, 0.05)
    pt = pp.verified()[0].point
    th = theta_of(g, pt)
    polys = m_condition_system(SeadeFamily(g), th)
    cert = certify_nonvanishing(polys, Annulus(0.04, 0.06), SubdivisionConfig(max_depth=30))
    assert cert.verdict != PASS


def test_m_scan_records_failing_thetas():
    g = MapGerm.from_strings(2, "x", "x^2 + y*(x^2 + y^2)", name="petal")
    cert = m_condition_scan(StratPair.of(g), Annulus(0.04, 0.06), 4, SubdivisionConfig(max_depth=14))
    assert set(cert.details["failing_thetas"]) <= {k * math.pi / 4 for k in range(4)}
    assert cert.details["theta_grid"] == 4
    with pytest.raises(ValueError):
        m_condition_scan(StratPair.of(g), Annulus(0.04, 0.06), 0)


# -- curve spec ---------------------------------------------------------------------------


def test_curve_spec_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text('name: seq\nx: ["s", "0"]\ntheta: "pi/2"\ns_max: 0.05\n')
    c = load_curve(p)
    assert c.name == "seq" and c.theta_pi == Fraction(1, 2) and c.s_max == 0.05
    assert whitney_a_limit(F52, c).limit == pytest.approx(1.0)
    assert TestCurve.from_strings(c.to_dict()["x"], c.to_dict()["theta"]).theta_pi == Fraction(1, 2)


def test_curve_spec_theta_with_polynomial_part():
    c = TestCurve.from_strings(["s", "0"], "pi/3 + s^2 - 1/2*s")
    assert c.theta_pi == Fraction(1, 3)
    assert c.theta_at(0.1) == pytest.approx(math.pi / 3 + 0.01 - 0.05)


@pytest.mark.parametrize("text", ["pi^2", "s*pi", "pi/x"])
def test_curve_spec_bad_theta(text):
    with pytest.raises(ParseError):
        TestCurve.from_strings(["s", "0"], text)


def test_curve_spec_missing_field(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("theta: 0\n")
    with pytest.raises(CurveError):
        load_curve(p)


def test_dimension_mismatch():
    with pytest.raises(CurveError):
        whitney_a_limit(SeadeFamily(REGISTRY["ex-5.3"]), BUILTIN_CURVES["ex-5.2"])
