"""Regularity diagnostics for the strata X = Psi^{-1}(0) minus the theta-axis, Y = theta-axis.

Limits along curves are computed from truncated power series, so they come
with the leading exponents that decide them.  Curves are given by polynomial
coordinates ``x(s)`` and an angle ``theta(s) = a*pi + f(s)`` with rational
``a``; quarter-turn base angles keep every series exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .certify import FAIL, PASS, UNKNOWN, Annulus, Certificate, SubdivisionConfig, certify_nonvanishing
from .germ import MapGerm, SeadeFamily
from .interval import Interval
from .polynomial import ParseError, Polynomial, parse_polynomial
from .series import DEFAULT_TRUNCATION, TruncationError, UnivariateSeries, compose_curve, cos_sin_series

__all__ = [
    "StratPair",
    "TestCurve",
    "LimitReport",
    "CurveError",
    "NotLinkApproach",
    "DegenerateCurve",
    "full_gradient",
    "whitney_a_limit",
    "c_regularity_limit",
    "m_condition_scan",
    "curve_ratio_diagnostic",
    "load_curve",
    "BUILTIN_CURVES",
]

MAX_TRUNCATION = 256
FLOAT_REL_TOL = 1e-12


class CurveError(ValueError):
    """Curve does not satisfy the preconditions of a diagnostic."""


class NotLinkApproach(CurveError):
    """The curve does not start at a point of the link (psi(x(0)) != 0 or x(0) = 0)."""


class DegenerateCurve(CurveError):
    """A vector needed for the limit vanishes identically along the curve."""


@dataclass(frozen=True)
class StratPair:
    """The pair (X, Y) for a Seade family with control function sum(x_i^2)."""

    family: SeadeFamily
    control: str = "rho(x, theta) = sum_i x_i^2"

    @property
    def germ(self) -> MapGerm:
        return self.family.germ

    @classmethod
    def of(cls, g: MapGerm) -> "StratPair":
        return cls(SeadeFamily(g))


@dataclass(frozen=True)
class TestCurve:
    """s -> (x(s), theta(s)) with theta(s) = theta_pi * pi + theta(s)."""

    x: tuple[UnivariateSeries, ...]
    theta: UnivariateSeries = field(default_factory=lambda: UnivariateSeries([]))
    theta_pi: Fraction = Fraction(0)
    s_max: float = 0.1
    name: str = "curve"

    __test__ = False  # not a pytest class

    @classmethod
    def from_strings(
        cls, xs: Sequence[str], theta: str = "0", s_max: float = 0.1, name: str = "curve"
    ) -> "TestCurve":
        coords = tuple(UnivariateSeries.parse(str(t)) for t in xs)
        tp, tf = _parse_theta(str(theta))
        return cls(coords, tf, tp, s_max, name)

    @property
    def m(self) -> int:
        return len(self.x)

    def with_trunc(self, trunc: int) -> "TestCurve":
        return TestCurve(
            tuple(c.with_trunc(trunc) for c in self.x), self.theta.with_trunc(trunc),
            self.theta_pi, self.s_max, self.name,
        )

    def point(self, s: float) -> np.ndarray:
        return np.array([c(s) for c in self.x])

    def theta_at(self, s: float) -> float:
        return float(self.theta_pi) * math.pi + self.theta(s)

    def trig_series(self) -> tuple[UnivariateSeries, UnivariateSeries]:
        t = self.theta.trunc
        f0 = self.theta[0]
        delta = self.theta.tail()
        if f0 == 0 and (2 * self.theta_pi).denominator == 1:
            c0, s0 = [(1, 0), (0, 1), (-1, 0), (0, -1)][int(2 * self.theta_pi) % 4]
            c0, s0 = Fraction(c0), Fraction(s0)
        else:
            phi0 = float(self.theta_pi) * math.pi + float(f0)
            c0, s0 = math.cos(phi0), math.sin(phi0)
        return cos_sin_series(c0, s0, UnivariateSeries(delta.coeffs, t, delta.exact))

    def to_dict(self) -> dict:
        names = ("s",)
        xs = [_series_text(c, names) for c in self.x]
        th = _series_text(self.theta, names)
        if self.theta_pi:
            pi = f"{self.theta_pi}*pi"
            th = pi if th == "0" else f"{pi} + {th}"
        return {"name": self.name, "x": xs, "theta": th, "s_max": self.s_max}


def _series_text(c: UnivariateSeries, names) -> str:
    if c.is_float():
        return " + ".join(f"{float(v)!r}*s^{k}" for k, v in enumerate(c.coeffs) if v) or "0"
    p = Polynomial(1, {(k,): v for k, v in enumerate(c.coeffs)})
    return p.to_string(names)


def _parse_theta(text: str) -> tuple[Fraction, UnivariateSeries]:
    p = parse_polynomial(text, 2, names=("s", "pi"))
    pi_part = Fraction(0)
    coeffs: dict[int, Fraction] = {}
    for (es, ep), c in p.items():
        if ep == 0:
            coeffs[es] = c
        elif ep == 1 and es == 0:
            pi_part = c
        else:
            raise ParseError(f"theta must be a*pi + f(s), got {text!r}")
    deg = max(coeffs, default=0)
    return pi_part, UnivariateSeries([coeffs.get(k, Fraction(0)) for k in range(deg + 1)])


def load_curve(path: str | Path) -> TestCurve:
    """Read a curve-spec file: mapping with ``x`` (list of polynomials in s), ``theta``, optional ``s_max``, ``name``."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise CurveError(f"{path}: not a valid curve-spec document: {exc}") from exc
    if not isinstance(data, dict) or "x" not in data:
        raise CurveError(f"{path}: curve-spec needs a field x (list of polynomials in s)")
    xs = data["x"]
    if not isinstance(xs, list):
        raise CurveError(f"{path}: x must be a list")
    return TestCurve.from_strings(
        [str(v) for v in xs], str(data.get("theta", "0")), float(data.get("s_max", 0.1)),
        str(data.get("name", path.stem)),
    )


@dataclass
class LimitReport:
    operation: str
    limit: float
    verdict: str
    exponents: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, (list, tuple)):
                return [enc(u) for u in v]
            if isinstance(v, dict):
                return {k: enc(u) for k, u in v.items()}
            return v

        return {
            "operation": self.operation,
            "limit": enc(self.limit),
            "verdict": self.verdict,
            "exponents": enc(self.exponents),
            "details": enc(self.details),
        }


# -- pointwise --------------------------------------------------------------------


def full_gradient(f: SeadeFamily, x: Sequence[float], theta: float) -> np.ndarray:
    """(grad_x Psi, dPsi/dtheta) at (x, theta)."""
    from .germ import cos_sin

    c, s = cos_sin(theta)
    g = f.germ
    x = list(x)
    gx = [c * dp(x) - s * dq(x) for dp, dq in zip(g.grad_P, g.grad_Q)]
    dth = -s * g.P(x) - c * g.Q(x)
    return np.array(gx + [dth])


# -- series machinery ---------------------------------------------------------------


def _with_retries(fn, curve: TestCurve):
    trunc = max(c.trunc for c in curve.x) if curve.x else DEFAULT_TRUNCATION
    while True:
        try:
            return fn(curve.with_trunc(trunc))
        except TruncationError:
            if trunc >= MAX_TRUNCATION:
                raise
            trunc *= 2


def _tol(series: Sequence[UnivariateSeries]) -> float:
    return FLOAT_REL_TOL if any(s.is_float() for s in series) else 0.0


def _sum_sq(vs: Sequence[UnivariateSeries]) -> UnivariateSeries:
    out = UnivariateSeries([], vs[0].trunc)
    for v in vs:
        out = out + v * v
    return out


def _dot(u, v) -> UnivariateSeries:
    out = UnivariateSeries([], u[0].trunc)
    for a, b in zip(u, v):
        out = out + a * b
    return out


def _normal_series(f: SeadeFamily, c: TestCurve) -> list[UnivariateSeries]:
    g = f.germ
    if c.m != g.m:
        raise CurveError(f"curve has {c.m} coordinates, germ has m = {g.m}")
    cs, sn = c.trig_series()
    P = compose_curve(g.P, c.x)
    Q = compose_curve(g.Q, c.x)
    out = [cs * compose_curve(dp, c.x) - sn * compose_curve(dq, c.x) for dp, dq in zip(g.grad_P, g.grad_Q)]
    out.append(-(sn * P) - cs * Q)
    return out


def curve_residual(f: SeadeFamily, c: TestCurve) -> UnivariateSeries:
    """Series of Psi(x(s), theta(s))."""
    g = f.germ
    cs, sn = c.trig_series()
    return cs * compose_curve(g.P, c.x) - sn * compose_curve(g.Q, c.x)


def validate_on_X(f: SeadeFamily, c: TestCurve) -> None:
    """Raise CurveError unless x(0) = 0 and Psi vanishes identically along the curve."""
    if c.m != f.germ.m:
        raise CurveError(f"curve {c.name!r} has {c.m} components, germ has m = {f.germ.m}")
    if np.any(c.point(0.0) != 0):
        raise CurveError(f"curve {c.name!r} must start on the theta-axis (x(0) = 0)")
    res = curve_residual(f, c)
    scale = max((abs(float(v)) for v in compose_curve(f.germ.P, c.x).coeffs), default=1.0)
    tol = FLOAT_REL_TOL * max(1.0, scale)
    for k, v in enumerate(res.coeffs):
        nonzero = abs(v) > tol if isinstance(v, float) else v != 0
        if nonzero:
            raise CurveError(
                f"curve {c.name!r} is not on X: Psi(x(s), theta(s)) has nonzero coefficient {v} at s^{k}"
            )


def _ratio_limit(num: UnivariateSeries, den: UnivariateSeries, tol: float) -> tuple[float, float, float]:
    """Limit of sqrt(num/den) as s -> 0+ with the orders of both series."""
    on = num.order(tol)
    od = den.order(tol)
    if od == math.inf:
        raise DegenerateCurve("denominator vanishes identically along the curve")
    if on > od:
        return 0.0, on, od
    if on < od:
        return math.inf, on, od
    return math.sqrt(float(num.leading(tol)) / float(den.leading(tol))), on, od


def whitney_a_limit(f: SeadeFamily, c: TestCurve) -> LimitReport:
    """Limit of |theta-component| of the unit normal of X along the curve.

    Whitney (a) over Y holds along the curve iff the limit is 0.
    """
    validate_on_X(f, c)

    def run(cc: TestCurve) -> LimitReport:
        N = _normal_series(f, cc)
        tol = _tol(N)
        lim, on, od = _ratio_limit(N[-1] * N[-1], _sum_sq(N), tol)
        return LimitReport(
            "whitney_a_limit", lim, "HOLDS" if lim == 0.0 else "FAILS",
            {"order_normal_theta_sq": on, "order_normal_sq": od},
            {"curve": cc.name, "trunc": cc.x[0].trunc if cc.x else None,
             "normal_leading": [_lead_info(v, tol) for v in N]},
        )

    return _with_retries(run, c)


def c_regularity_limit(pair: StratPair, c: TestCurve) -> LimitReport:
    """Limit of the theta-component of the unit gradient of rho restricted to X."""
    f = pair.family
    validate_on_X(f, c)

    def run(cc: TestCurve) -> LimitReport:
        N = _normal_series(f, cc)
        grad_rho = [2 * xi for xi in cc.x] + [UnivariateSeries([], cc.x[0].trunc)]
        nn = _sum_sq(N)
        gn = _dot(grad_rho, N)
        w = [nn * a - gn * b for a, b in zip(grad_rho, N)]
        tol = _tol(w)
        ww = _sum_sq(w)
        if ww.is_identically_zero(tol) and ww.exact:
            raise DegenerateCurve("grad(rho|X) vanishes along the curve: rho|X is not a submersion there")
        lim, on, od = _ratio_limit(w[-1] * w[-1], ww, tol)
        return LimitReport(
            "c_regularity_limit", lim, "HOLDS" if lim == 0.0 else "FAILS",
            {"order_proj_theta_sq": on, "order_proj_sq": od},
            {"curve": cc.name, "control": pair.control},
        )

    return _with_retries(run, c)


def _lead_info(v: UnivariateSeries, tol: float):
    try:
        k = v.order(tol)
    except TruncationError:
        return {"order": "unknown"}
    if k == math.inf:
        return {"order": math.inf}
    return {"order": k, "coefficient": float(v.coeffs[k])}


def curve_ratio_diagnostic(g: MapGerm, c: TestCurve) -> LimitReport:
    """Orders of ||grad ||psi||^2||^2 and ||gamma||^2 along a curve into the link.

    Exponents follow the Taylor bookkeeping: ``n`` order of alpha - alpha(0),
    ``r``/``k`` orders of P/Q along alpha, ``l``/``p`` orders of
    grad P/grad Q minus their values a0/b0 at alpha(0).
    """
    if c.m != g.m:
        raise CurveError(f"curve has {c.m} coordinates, germ has m = {g.m}")
    x0 = c.point(0.0)
    p0 = compose_curve(g.P, c.x)[0]
    q0 = compose_curve(g.Q, c.x)[0]
    tiny = 1e-12 * max(1.0, float(np.abs(x0).max()) if x0.size else 1.0)
    if not np.any(x0 != 0):
        raise NotLinkApproach("curve starts at the origin, not at a link point")
    if abs(float(p0)) > tiny or abs(float(q0)) > tiny or (
        not isinstance(p0, float) and not isinstance(q0, float) and (p0 != 0 or q0 != 0)
    ):
        raise NotLinkApproach(f"psi(x(0)) = ({float(p0)}, {float(q0)}) is not 0: curve does not approach the link")

    def run(cc: TestCurve) -> LimitReport:
        P = compose_curve(g.P, cc.x)
        Q = compose_curve(g.Q, cc.x)
        dP = [compose_curve(d, cc.x) for d in g.grad_P]
        dQ = [compose_curve(d, cc.x) for d in g.grad_Q]
        tol = _tol([P, Q] + dP + dQ + list(cc.x))
        # psi(alpha(0)) = 0 up to float noise; drop the constant term
        P0, Q0 = P.tail(), Q.tail()
        num = _sum_sq([2 * (P0 * a + Q0 * b) for a, b in zip(dP, dQ)])
        den = _sum_sq([P0 * b - Q0 * a for a, b in zip(dP, dQ)])
        lim, on, od = _ratio_limit(num, den, tol)
        a0 = [float(d[0]) for d in dP]
        b0 = [float(d[0]) for d in dQ]
        r = P0.order(tol)
        k = Q0.order(tol)
        P1 = P0.leading(tol)
        Q1 = Q0.leading(tol)
        n = min(x.tail().order(tol) for x in cc.x)
        l = min(d.tail().order(tol) for d in dP)
        p = min(d.tail().order(tol) for d in dQ)
        degenerate = False
        if r == k and r != math.inf:
            combo = [float(P1) * bb - float(Q1) * aa for aa, bb in zip(a0, b0)]
            scale = max(abs(float(P1)), abs(float(Q1))) * max(max(map(abs, a0)), max(map(abs, b0)), 1e-300)
            degenerate = max(map(abs, combo)) <= FLOAT_REL_TOL * scale if tol else not any(
                P1 * dq[0] - Q1 * dp[0] for dp, dq in zip(dP, dQ)
            )
        verdict = "BOUNDED" if on >= od else "UNBOUNDED"
        return LimitReport(
            "curve_ratio_diagnostic", lim, verdict,
            {"n": n, "r": r, "k": k, "l": l, "p": p, "order_numerator": on, "order_denominator": od},
            {"curve": cc.name, "a0": a0, "b0": b0, "P1": float(P1), "Q1": float(Q1),
             "degenerate_equal_orders": degenerate},
        )

    return _with_retries(run, c)


# -- (m)-condition grid scan ----------------------------------------------------------


def m_condition_system(f: SeadeFamily, theta: float) -> list[Polynomial]:
    """Psi_theta together with the 2x2 minors of the rows (grad Psi_theta, x)."""
    psi_t = f.polynomial(theta)
    grad = psi_t.gradient()
    xs = Polynomial.variables(f.germ.m)
    minors = [grad[i] * xs[j] - grad[j] * xs[i] for i, j in combinations(range(f.germ.m), 2)]
    return [psi_t] + minors


def _scan_one(args):
    f, theta, region, cfg = args
    return certify_nonvanishing(m_condition_system(f, theta), region, cfg, operation="m_condition_theta")


def m_condition_scan(
    pair: StratPair, region: Annulus, theta_grid: int, cfg: SubdivisionConfig | None = None
) -> Certificate:
    """For theta on a uniform grid of [0, pi), certify Psi_theta = 0 meets no sphere tangentially in ``region``."""
    if theta_grid < 1:
        raise ValueError("theta_grid must be >= 1")
    cfg = cfg or SubdivisionConfig()
    thetas = [k * math.pi / theta_grid for k in range(theta_grid)]
    jobs = [(pair.family, th, region, cfg) for th in thetas]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            certs = list(pool.map(_scan_one, jobs))
    else:
        certs = [_scan_one(j) for j in jobs]
    verdicts = [c.verdict for c in certs]
    if all(v == PASS for v in verdicts):
        verdict = PASS
    elif FAIL in verdicts:
        verdict = FAIL
    else:
        verdict = UNKNOWN
    witnesses = []
    for th, cert in zip(thetas, certs):
        witnesses.extend(b.append(Interval(th, th)) for b in cert.witnesses)
    stats = {
        "boxes": sum(c.stats.get("boxes", 0) for c in certs),
        "max_depth": max(c.stats.get("max_depth", 0) for c in certs),
    }
    margin = min(c.margin for c in certs) if verdict == PASS else 0.0
    return Certificate(
        verdict, margin, witnesses, stats, "m_condition_scan",
        {
            "theta_grid": theta_grid,
            "region": [region.r_in, region.r_out],
            "failing_thetas": [th for th, v in zip(thetas, verdicts) if v != PASS],
            "control": pair.control,
        },
    )


# -- built-in curves --------------------------------------------------------------------

BUILTIN_CURVES: dict[str, TestCurve] = {
    # x_i -> 0, y_i = 0, theta_i = pi/2
    "ex-5.2": TestCurve.from_strings(["s", "0"], "pi/2", s_max=0.1, name="ex-5.2-sequence"),
}
