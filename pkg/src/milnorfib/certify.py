"""Interval branch-and-bound certification over annuli.

All certifications share one engine (:func:`subdivide`).  Boxes are processed
a whole level at a time with numpy; each level every surviving box is bisected
along its widest coordinate, so output is deterministic and independent of the
``workers`` hint (which only chunks the vectorised evaluation across threads).

Verdicts:

* ``PASS``    every box meeting the region was certified.
* ``FAIL``    a rational sample point was found where the property fails,
              confirmed in exact arithmetic.
* ``UNKNOWN`` depth, width or box budget ran out; residual boxes are listed.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .germ import MapGerm
from .interval import Box, eval_batch
from .polynomial import Polynomial, PolynomialError

__all__ = [
    "PASS",
    "FAIL",
    "UNKNOWN",
    "Annulus",
    "SubdivisionConfig",
    "Certificate",
    "CertificationError",
    "DegeneratePoint",
    "subdivide",
    "certify_nonvanishing",
    "certify_isolated_singularity",
    "angle_measure",
    "angle_measure_all_theta",
    "StrongMilnorSystem",
    "certify_strong_milnor",
    "ParallelCandidate",
    "ParallelPoints",
    "find_parallel_points",
    "jacquemard_angle_sup",
]

PASS, FAIL, UNKNOWN = "PASS", "FAIL", "UNKNOWN"

_SPLIT, _DROP, _KEEP = 0, 1, 2
MAX_LISTED_WITNESSES = 2000


class CertificationError(ValueError):
    """Invalid input to a certification routine."""


class DegeneratePoint(ValueError):
    """angle_measure evaluated at a point of the critical locus."""


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise CertificationError(f"annulus needs 0 < r_in < r_out, got [{self.r_in}, {self.r_out}]")

    def contains(self, x: Sequence[float]) -> bool:
        r = math.sqrt(sum(float(v) ** 2 for v in x))
        return self.r_in <= r <= self.r_out

    def cascade(self, halvings: int) -> list["Annulus"]:
        """Shells [r_in/2^k, r_in/2^(k-1)] below this annulus, outermost first."""
        shells = [self]
        r = self.r_in
        for _ in range(halvings):
            shells.append(Annulus(r / 2, r))
            r /= 2
        return shells


@dataclass(frozen=True)
class SubdivisionConfig:
    max_depth: int = 48
    min_box_width: float = 0.0
    workers: int = 1
    max_boxes: int = 400_000

    def __post_init__(self):
        if self.max_depth < 1:
            raise CertificationError("max_depth must be >= 1")


@dataclass
class Certificate:
    verdict: str
    margin: float
    witnesses: list[Box] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    operation: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self, max_witnesses: int = 100) -> dict:
        return {
            "operation": self.operation,
            "verdict": self.verdict,
            "margin": self.margin,
            "n_witnesses": len(self.witnesses),
            "witnesses": [b.to_list() for b in self.witnesses[:max_witnesses]],
            "stats": dict(self.stats),
            "details": dict(self.details),
        }


# -- engine ---------------------------------------------------------------------


def _chunked(fn, lo, hi, workers: int, chunk: int = 20_000):
    n = lo.shape[0]
    if workers <= 1 or n <= chunk:
        return fn(lo, hi)
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda b: fn(lo[b[0] : b[1]], hi[b[0] : b[1]]), bounds))
    return np.concatenate(parts)


def _region_mask(lo, hi, r_in: float, r_out: float) -> np.ndarray:
    m = lo.shape[1]
    r2 = sum((v * v for v in Polynomial.variables(m)), Polynomial.zero(m))
    rlo, rhi = eval_batch(r2, lo, hi)
    inner = math.nextafter(r_in * r_in, -math.inf)
    outer = math.nextafter(r_out * r_out, math.inf)
    return (rhi >= inner) & (rlo <= outer)


def in_region_exact(point: Sequence[float], r_in: float, r_out: float) -> bool:
    r2 = sum(Fraction(float(v)) ** 2 for v in point)
    return Fraction(r_in) ** 2 <= r2 <= Fraction(r_out) ** 2


def _sorted_boxes(lo, hi) -> list[Box]:
    boxes = [Box(a, b) for a, b in zip(lo.tolist(), hi.tolist())]
    boxes.sort()
    return boxes


@dataclass
class SubdivisionResult:
    verdict: str
    residual: list[Box]
    kept: list[Box]
    violations: list[Box]
    stats: dict
    certified_lo: list = field(default_factory=list)
    certified_hi: list = field(default_factory=list)


def subdivide(
    m: int,
    r_in: float,
    r_out: float,
    cfg: SubdivisionConfig,
    classify: Callable[[np.ndarray, np.ndarray], np.ndarray],
    violation: Callable[[np.ndarray, np.ndarray], list[Box]] | None = None,
    keep_certified: bool = False,
) -> SubdivisionResult:
    """Run branch and bound on ``[-r_out, r_out]^m`` restricted to the annulus.

    ``classify(lo, hi)`` returns per-box codes: 0 split, 1 certified (drop),
    2 keep as a terminal result.  ``violation(lo, hi)`` returns exactly
    verified counterexample points (as degenerate boxes) found among the
    undecided boxes; the first level producing any ends the run with ``FAIL``.
    """
    if r_in < 0 or r_out <= 0 or r_in > r_out:
        raise CertificationError(f"empty region [{r_in}, {r_out}]")
    lo = np.full((1, m), -float(r_out))
    hi = np.full((1, m), float(r_out))
    depth = 0
    processed = 0
    kept_lo, kept_hi = [], []
    cert_lo, cert_hi = [], []
    stats = {"boxes": 0, "max_depth": 0}
    while True:
        mask = _region_mask(lo, hi, r_in, r_out)
        lo, hi = lo[mask], hi[mask]
        if lo.shape[0] == 0:
            verdict = PASS
            residual: list[Box] = []
            break
        codes = _chunked(classify, lo, hi, cfg.workers)
        processed += lo.shape[0]
        stats["max_depth"] = depth
        if keep_certified:
            cert_lo.append(lo[codes == _DROP])
            cert_hi.append(hi[codes == _DROP])
        keep = codes == _KEEP
        if keep.any():
            kept_lo.append(lo[keep])
            kept_hi.append(hi[keep])
        split = codes == _SPLIT
        lo, hi = lo[split], hi[split]
        if lo.shape[0] == 0:
            verdict = PASS
            residual = []
            break
        if violation is not None:
            bad = violation(lo, hi)
            if bad:
                stats["boxes"] = processed
                return SubdivisionResult(
                    FAIL, [], _stack_boxes(kept_lo, kept_hi), sorted(bad), stats, cert_lo, cert_hi
                )
        widths = hi - lo
        if (
            depth >= cfg.max_depth
            or widths.max() <= cfg.min_box_width
            or 2 * lo.shape[0] > cfg.max_boxes
        ):
            verdict = UNKNOWN
            stats["exhausted"] = (
                "depth" if depth >= cfg.max_depth
                else "width" if widths.max() <= cfg.min_box_width
                else "boxes"
            )
            residual = _sorted_boxes(lo, hi)
            break
        axis = np.argmax(widths, axis=1)
        rows = np.arange(lo.shape[0])
        mid = 0.5 * (lo[rows, axis] + hi[rows, axis])
        lo2, hi1 = lo.copy(), hi.copy()
        hi1[rows, axis] = mid
        lo2[rows, axis] = mid
        lo = np.concatenate([lo, lo2])
        hi = np.concatenate([hi1, hi])
        depth += 1
    stats["boxes"] = processed
    return SubdivisionResult(verdict, residual, _stack_boxes(kept_lo, kept_hi), [], stats, cert_lo, cert_hi)


def _stack_boxes(los, his) -> list[Box]:
    if not los:
        return []
    return _sorted_boxes(np.concatenate(los), np.concatenate(his))


def _excludes_zero(p: Polynomial, lo, hi) -> np.ndarray:
    plo, phi = eval_batch(p, lo, hi)
    return (plo > 0) | (phi < 0)


def _positive(p: Polynomial, lo, hi) -> np.ndarray:
    return eval_batch(p, lo, hi)[0] > 0


def _sample_points(lo, hi, corners: bool) -> np.ndarray:
    """Centers (and optionally corners) of each box; shape (N, k, m)."""
    pts = [0.5 * (lo + hi)]
    if corners:
        m = lo.shape[1]
        for signs in product((0, 1), repeat=m):
            pts.append(np.where(np.array(signs, dtype=bool), hi, lo))
    return np.stack(pts, axis=1)


def _exact_violations(lo, hi, r_in, r_out, float_test, exact_test, corners=False, cap=64) -> list[Box]:
    """Float pre-screen on sample points, then exact confirmation of at most ``cap`` points."""
    pts = _sample_points(lo, hi, corners)
    n, k, m = pts.shape
    flat = pts.reshape(n * k, m)
    cand = float_test(flat).reshape(n, k)
    found: set[tuple[float, ...]] = set()
    checked = 0
    for i, j in zip(*np.nonzero(cand)):
        pt = tuple(float(v) for v in flat[i * k + j])
        if pt in found or not in_region_exact(pt, r_in, r_out):
            continue
        checked += 1
        if exact_test([Fraction(v) for v in pt]):
            found.add(pt)
        if checked >= cap:
            break
    return [Box(pt, pt) for pt in sorted(found)]


# -- nonvanishing ---------------------------------------------------------------


def certify_nonvanishing(
    polys: Sequence[Polynomial],
    region: Annulus,
    cfg: SubdivisionConfig | None = None,
    *,
    operation: str = "certify_nonvanishing",
) -> Certificate:
    """Certify that the system ``{p = 0 for p in polys}`` has no solution in ``region``."""
    cfg = cfg or SubdivisionConfig()
    polys = list(polys)
    if not polys:
        raise CertificationError("need at least one polynomial")
    m = polys[0].nvars
    if any(p.nvars != m for p in polys):
        raise PolynomialError("polynomials have different dimensions")

    def classify(lo, hi):
        ok = np.zeros(lo.shape[0], dtype=bool)
        for p in polys:
            ok |= _excludes_zero(p, lo, hi)
        return np.where(ok, _DROP, _SPLIT)

    def float_test(pts):
        return np.all([np.abs(p.eval_many(pts)) == 0.0 for p in polys], axis=0)

    def exact_test(pt):
        return all(p.eval_exact(pt) == 0 for p in polys)

    def violation(lo, hi):
        return _exact_violations(lo, hi, region.r_in, region.r_out, float_test, exact_test, corners=True)

    res = subdivide(m, region.r_in, region.r_out, cfg, classify, violation, keep_certified=True)
    margin = 0.0
    if res.verdict == PASS:
        margin = _nonvanishing_slack(polys, res)
    witnesses = res.violations if res.verdict == FAIL else res.residual
    return Certificate(res.verdict, margin, witnesses, res.stats, operation)


def _nonvanishing_slack(polys, res: SubdivisionResult) -> float:
    lo = np.concatenate(res.certified_lo) if res.certified_lo else np.zeros((0, polys[0].nvars))
    hi = np.concatenate(res.certified_hi) if res.certified_hi else lo
    if lo.shape[0] == 0:
        return 0.0
    best = np.zeros(lo.shape[0])
    for p in polys:
        plo, phi = eval_batch(p, lo, hi)
        best = np.maximum(best, np.where(plo > 0, plo, np.where(phi < 0, -phi, 0.0)))
    return float(best.min())


def certify_isolated_singularity(g: MapGerm, region: Annulus, cfg: SubdivisionConfig | None = None) -> Certificate:
    """PASS certifies rank(D psi) = 2 throughout ``region``."""
    from .germ import jacobian_minors

    cert = certify_nonvanishing(jacobian_minors(g), region, cfg, operation="certify_isolated_singularity")
    cert.details["region"] = [region.r_in, region.r_out]
    return cert


# -- angle measure ----------------------------------------------------------------


def angle_measure_all_theta(g: MapGerm, x: Sequence[float]) -> float:
    """max over theta of |<grad Psi_theta, x>| / (||grad Psi_theta|| ||x||)."""
    x = np.asarray(x, dtype=float)
    J = g.jacobian(x)
    G = np.array([J[0], -J[1]])  # columns of grad Psi_theta = G^T (cos, sin)
    B = G @ G.T
    a = G @ x
    det = B[0, 0] * B[1, 1] - B[0, 1] ** 2
    if det <= 1e-300 or det <= 1e-14 * B[0, 0] * B[1, 1]:
        raise DegeneratePoint("grad P and grad Q are parallel: point of the critical locus")
    val = a @ np.linalg.solve(B, a)
    return float(min(1.0, math.sqrt(max(val, 0.0)) / np.linalg.norm(x)))


def angle_measure(g: MapGerm, x: Sequence[float]) -> float:
    """Cosine of the angle between grad Psi_theta and x at the admissible theta(s).

    Off the variety the admissible gradient is parallel to gamma, so the value
    is |<gamma, x>| / (||gamma|| ||x||).  On psi^{-1}(0) every theta is
    admissible and the maximum over theta is returned.
    """
    x = np.asarray(x, dtype=float)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise DegeneratePoint("x = 0")
    p, q = g.psi(x)
    if p == 0.0 and q == 0.0:
        return angle_measure_all_theta(g, x)
    from .germ import gamma_eval

    gam = gamma_eval(g, x)
    ng = float(np.linalg.norm(gam))
    if ng == 0.0:
        warnings.warn("gamma(x) = 0 with psi(x) != 0; reporting angle measure 0", RuntimeWarning)
        return 0.0
    return float(min(1.0, abs(float(gam @ x)) / (ng * nx)))


# -- strong Milnor ----------------------------------------------------------------


def _dot(u: Sequence[Polynomial], v: Sequence[Polynomial]) -> Polynomial:
    return sum((a * b for a, b in zip(u, v)), Polynomial.zero(u[0].nvars))


class StrongMilnorSystem:
    """Polynomials used to certify the angle condition with margin ``rho``.

    ``G``   (1-rho)^2 ||gamma||^2 ||x||^2 - <gamma, x>^2   (admissible theta, psi != 0)
    ``V11`` (1,1) entry of (1-rho)^2 ||x||^2 B - a a^T
    ``D``   its determinant divided by (1-rho)^2 ||x||^2
    where B is the Gram matrix of (grad P, -grad Q) and a = (<grad P, x>, -<grad Q, x>).
    """

    def __init__(self, g: MapGerm, rho: float):
        if not 0 < rho <= 1:
            raise CertificationError(f"rho must lie in (0, 1], got {rho}")
        self.germ = g
        self.rho = rho
        k = (1 - Fraction(rho)) ** 2
        xs = g.coords
        r2 = g.radius2
        gam = g.gamma
        self.G = (_dot(gam, gam) * r2).scale(k) - _dot(gam, xs) ** 2
        gp, gq = g.grad_P, g.grad_Q
        b11, b12, b22 = _dot(gp, gp), -_dot(gp, gq), _dot(gq, gq)
        a1, a2 = _dot(gp, xs), -_dot(gq, xs)
        c = r2.scale(k)
        self.V11 = c * b11 - a1 * a1
        self.D = c * (b11 * b22 - b12 * b12) - (b22 * a1 * a1 - (a1 * a2 * b12).scale(2) + b11 * a2 * a2)

    def off_variety_ok(self, lo, hi) -> np.ndarray:
        g = self.germ
        nonzero = _excludes_zero(g.P, lo, hi) | _excludes_zero(g.Q, lo, hi)
        out = nonzero.copy()
        idx = np.nonzero(nonzero)[0]
        if idx.size:
            out[idx] = _positive(self.G, lo[idx], hi[idx])
        return out

    def all_theta_ok(self, lo, hi) -> np.ndarray:
        out = _positive(self.V11, lo, hi)
        idx = np.nonzero(out)[0]
        if idx.size:
            out[idx] = _positive(self.D, lo[idx], hi[idx])
        return out

    def exact_violation(self, pt, measure: str) -> bool:
        g = self.germ
        if measure == "admissible":
            p, q = g.P.eval_exact(pt), g.Q.eval_exact(pt)
            if p != 0 or q != 0:
                return self.G.eval_exact(pt) < 0
        return self.V11.eval_exact(pt) < 0 or self.D.eval_exact(pt) < 0


def certify_strong_milnor(
    g: MapGerm,
    region: Annulus,
    rho: float,
    cfg: SubdivisionConfig | None = None,
    measure: str = "admissible",
) -> Certificate:
    """Certify angle_measure(x) <= 1 - rho on ``region``.

    ``measure="admissible"`` accepts a box when psi != 0 and the gamma
    inequality holds (case G) or when the all-theta matrix condition holds
    (case V).  ``measure="all-theta"`` demands case V everywhere, the literal
    reading of the hypothesis over every theta.
    """
    cfg = cfg or SubdivisionConfig()
    if measure not in ("admissible", "all-theta"):
        raise CertificationError(f"unknown measure {measure!r}")
    system = StrongMilnorSystem(g, rho)

    def classify(lo, hi):
        if measure == "admissible":
            ok = system.off_variety_ok(lo, hi)
            rest = np.nonzero(~ok)[0]
            if rest.size:
                ok[rest] = system.all_theta_ok(lo[rest], hi[rest])
        else:
            ok = system.all_theta_ok(lo, hi)
        return np.where(ok, _DROP, _SPLIT)

    def float_test(pts):
        if measure == "admissible":
            return system.G.eval_many(pts) < 0
        return (system.V11.eval_many(pts) < 0) | (system.D.eval_many(pts) < 0)

    def violation(lo, hi):
        return _exact_violations(
            lo, hi, region.r_in, region.r_out, float_test,
            lambda pt: system.exact_violation(pt, measure),
        )

    res = subdivide(g.m, region.r_in, region.r_out, cfg, classify, violation)
    witnesses = res.violations if res.verdict == FAIL else res.residual
    cert = Certificate(
        res.verdict, rho if res.verdict == PASS else 0.0, witnesses, res.stats, "certify_strong_milnor"
    )
    cert.details.update({"rho": rho, "measure": measure, "region": [region.r_in, region.r_out]})
    return cert


# -- parallel points --------------------------------------------------------------


@dataclass
class ParallelCandidate:
    box: Box
    on_link: bool
    verified: bool = False
    point: tuple[float, ...] | None = None


@dataclass
class ParallelPoints:
    radius: float
    candidates: list[ParallelCandidate]
    exhausted: bool = False
    stats: dict = field(default_factory=dict)

    @property
    def boxes(self) -> list[Box]:
        return [c.box for c in self.candidates]

    def off_link(self) -> list[ParallelCandidate]:
        return [c for c in self.candidates if not c.on_link]

    def link(self) -> list[ParallelCandidate]:
        return [c for c in self.candidates if c.on_link]

    def verified(self) -> list[ParallelCandidate]:
        return [c for c in self.candidates if c.verified]

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "exhausted": self.exhausted,
            "stats": dict(self.stats),
            "candidates": [
                {
                    "box": c.box.to_list(),
                    "on_link": c.on_link,
                    "verified": c.verified,
                    "point": list(c.point) if c.point is not None else None,
                }
                for c in self.candidates
            ],
        }


def parallel_minors(g: MapGerm) -> list[Polynomial]:
    """2x2 minors of the 2 x m matrix with rows gamma(x) and x."""
    gam, xs = g.gamma, g.coords
    return [gam[i] * xs[j] - gam[j] * xs[i] for i, j in combinations(range(g.m), 2)]


def find_parallel_points(
    g: MapGerm,
    radius: float,
    cfg: SubdivisionConfig | None = None,
    link_width: float | None = None,
) -> ParallelPoints:
    """Enclose the points of the sphere ||x|| = radius where gamma(x) is parallel to x.

    Boxes that may meet the link (where gamma = 0 trivially) but are certified
    free of off-link parallel points by the all-theta condition are returned
    with ``on_link=True``.  For m = 2 every off-link candidate cluster is
    refined along the circle and verified by an interval sign change of
    <gamma, x_perp>.
    """
    if radius <= 0:
        raise CertificationError("radius must be positive")
    cfg = cfg or SubdivisionConfig(max_depth=64, min_box_width=radius * 1e-7)
    if link_width is None:
        link_width = radius * 1e-3
    minors = parallel_minors(g)
    sphere = g.radius2 - Fraction(radius) ** 2
    near = StrongMilnorSystem(g, 1e-12)

    def classify(lo, hi):
        n = lo.shape[0]
        drop = _excludes_zero(sphere, lo, hi)
        for p in minors:
            rest = ~drop
            if not rest.any():
                break
            drop[rest] = _excludes_zero(p, lo[rest], hi[rest])
        codes = np.where(drop, _DROP, _SPLIT)
        rest = np.nonzero(~drop)[0]
        if rest.size:
            v_ok = near.all_theta_ok(lo[rest], hi[rest])
            psi_ok = _excludes_zero(g.P, lo[rest], hi[rest]) | _excludes_zero(g.Q, lo[rest], hi[rest])
            small = (hi[rest] - lo[rest]).max(axis=1) <= link_width
            codes[rest[v_ok & psi_ok]] = _DROP
            codes[rest[v_ok & ~psi_ok & small]] = _KEEP
        return codes

    res = subdivide(g.m, radius, radius, cfg, classify)
    cands: list[ParallelCandidate] = []
    for b in res.kept:
        cands.append(ParallelCandidate(b, on_link=True))
    residual_off = []
    for b in res.residual:
        lo, hi = np.array([b.lo]), np.array([b.hi])
        psi_ok = bool(_excludes_zero(g.P, lo, hi)[0] or _excludes_zero(g.Q, lo, hi)[0])
        if psi_ok:
            residual_off.append(b)
        else:
            cands.append(ParallelCandidate(b, on_link=True))
    if g.m == 2 and residual_off:
        cands.extend(_verify_circle_roots(g, radius, residual_off))
    else:
        cands.extend(ParallelCandidate(b, on_link=False) for b in residual_off)
    cands.sort(key=lambda c: (c.on_link, c.box))
    return ParallelPoints(radius, cands, exhausted=res.verdict == UNKNOWN and bool(residual_off), stats=res.stats)


def _arc_box(radius: float, a: float, b: float) -> Box:
    # bounding box of the arc between angles a < b (short arcs), padded for the sagitta
    xs = [radius * math.cos(a), radius * math.cos(b)]
    ys = [radius * math.sin(a), radius * math.sin(b)]
    pad = radius * (1 - math.cos(0.5 * (b - a))) + 4 * radius * 2.0**-52
    for k in range(-4, 9):
        ang = k * math.pi / 2
        if a <= ang <= b:
            xs.append(radius * math.cos(ang))
            ys.append(radius * math.sin(ang))
    return Box([min(xs) - pad, min(ys) - pad], [max(xs) + pad, max(ys) + pad])


def _circle_point_box(radius: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    x, y = radius * math.cos(phi), radius * math.sin(phi)
    eps = 8 * radius * 2.0**-52
    return np.array([[x - eps, y - eps]]), np.array([[x + eps, y + eps]])


def _verify_circle_roots(g: MapGerm, radius: float, boxes: list[Box]) -> list[ParallelCandidate]:
    from .germ import pencil_determinant

    pencil = pencil_determinant(g)

    def f(phi: float) -> float:
        return pencil([radius * math.cos(phi), radius * math.sin(phi)])

    def sign_at(phi: float) -> int:
        lo, hi = eval_batch(pencil, *_circle_point_box(radius, phi))
        return 1 if lo[0] > 0 else -1 if hi[0] < 0 else 0

    # angular hull of each box, merged into clusters
    arcs = []
    for b in boxes:
        angs = [math.atan2(y, x) for x in (b.lo[0], b.hi[0]) for y in (b.lo[1], b.hi[1])]
        lo_a, hi_a = min(angs), max(angs)
        if hi_a - lo_a > math.pi:  # straddles the branch cut at +-pi
            angs = [a + 2 * math.pi if a < 0 else a for a in angs]
            lo_a, hi_a = min(angs), max(angs)
        arcs.append([lo_a, hi_a, b])
    arcs.sort(key=lambda t: t[0])
    clusters: list[list] = []
    for a in arcs:
        if clusters and a[0] <= clusters[-1][1] + 1e-12:
            clusters[-1][1] = max(clusters[-1][1], a[1])
            clusters[-1][2].append(a[2])
        else:
            clusters.append([a[0], a[1], [a[2]]])
    out = []
    for lo_a, hi_a, members in clusters:
        pad = max(hi_a - lo_a, 1e-9)
        grid = np.linspace(lo_a - pad, hi_a + pad, 33)
        vals = [f(p) for p in grid]
        found = False
        for p0, p1, v0, v1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if v0 == 0.0 or v0 * v1 < 0:
                root = p0 if v0 == 0.0 else brentq(f, p0, p1, xtol=1e-16, rtol=4 * 2.0**-52)
                a, b = root, root
                step = 1e-14 * max(1.0, abs(root))
                s_a, s_b = sign_at(a), sign_at(b)
                while not (s_a * s_b < 0) and step < 1e-6:
                    a, b = root - step, root + step
                    s_a, s_b = sign_at(a), sign_at(b)
                    step *= 4
                verified = s_a * s_b < 0
                pt = (radius * math.cos(root), radius * math.sin(root))
                box = _arc_box(radius, a, b) if verified else Box.from_intervals(
                    [members[0].coords[0], members[0].coords[1]]
                )
                out.append(ParallelCandidate(box, on_link=False, verified=verified, point=pt))
                found = True
        if not found:
            out.extend(ParallelCandidate(b, on_link=False) for b in members)
    return out


# -- Jacquemard (A) ---------------------------------------------------------------


def jacquemard_angle_sup(
    g: MapGerm, region: Annulus, delta: float, cfg: SubdivisionConfig | None = None
) -> Certificate:
    """Certify <grad P, grad Q>^2 <= (1 - delta)^2 ||grad P||^2 ||grad Q||^2 on ``region``."""
    if not 0 < delta < 1:
        raise CertificationError(f"delta must lie in (0, 1), got {delta}")
    cfg = cfg or SubdivisionConfig()
    gp, gq = g.grad_P, g.grad_Q
    J = (_dot(gp, gp) * _dot(gq, gq)).scale((1 - Fraction(delta)) ** 2) - _dot(gp, gq) ** 2

    def classify(lo, hi):
        return np.where(_positive(J, lo, hi), _DROP, _SPLIT)

    def violation(lo, hi):
        return _exact_violations(
            lo, hi, region.r_in, region.r_out,
            lambda pts: J.eval_many(pts) < 0,
            lambda pt: J.eval_exact(pt) < 0,
        )

    res = subdivide(g.m, region.r_in, region.r_out, cfg, classify, violation)
    witnesses = res.violations if res.verdict == FAIL else res.residual
    cert = Certificate(res.verdict, delta if res.verdict == PASS else 0.0, witnesses, res.stats, "jacquemard_angle_sup")
    cert.details.update({"delta": delta, "region": [region.r_in, region.r_out]})
    return cert
