"""The omega vector field, its flow on the sphere, fibers, link and fiber transport.

``omega = ||psi||^2 u / ||u||^2`` with ``u`` the tangential part of
``gamma = P grad Q - Q grad P``.  Along the flow the phase of ``psi``
advances with unit speed, so flowing for time ``t`` carries the fiber over
phase ``a`` onto the fiber over ``a + t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats.qmc import Halton

from .germ import MapGerm, gamma_eval

__all__ = [
    "FlowError",
    "ParallelPointError",
    "OnLinkError",
    "StepUnderflow",
    "SpherePoint",
    "Trajectory",
    "FiberSample",
    "LinkSample",
    "omega",
    "log_norm_rate",
    "integrate_flow",
    "phase_drift",
    "refine_to_fiber",
    "sample_fiber",
    "compute_link",
    "transport_fiber",
    "sphere_seeds",
]

TWO_PI = 2.0 * math.pi
PARALLEL_TOL = 1e-8
# largest raw phase error of one step before projection
PHASE_STEP_TOL = 1e-4


class FlowError(RuntimeError):
    code = "FLOW_ERROR"

    def __init__(self, message: str, point: Sequence[float] | None = None):
        super().__init__(message)
        self.point = None if point is None else tuple(float(v) for v in point)


class ParallelPointError(FlowError):
    """gamma(x) is (numerically) parallel to x: the flow is undefined."""

    code = "PARALLEL_POINT"


class OnLinkError(FlowError):
    """||psi(x)|| fell below the link floor."""

    code = "ON_LINK"


class StepUnderflow(FlowError):
    code = "STEP_UNDERFLOW"


def _wrap(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True)
class SpherePoint:
    coords: tuple[float, ...]
    radius: float

    @classmethod
    def project(cls, x, radius: float | None = None) -> "SpherePoint":
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x)) if radius is None else float(radius)
        n = float(np.linalg.norm(x))
        if n == 0.0:
            raise ValueError("cannot project the origin onto a sphere")
        return cls(tuple(float(v) for v in x * (r / n)), r)

    def array(self) -> np.ndarray:
        return np.array(self.coords)

    def radial_error(self) -> float:
        return abs(math.hypot(*self.coords) - self.radius)


def _link_floor(g: MapGerm, radius: float) -> float:
    deg = max(g.P.degree(), g.Q.degree(), 1)
    return max(1e-12 * radius**deg, 1e-300)


def _psi(g: MapGerm, x: np.ndarray) -> tuple[float, float]:
    xl = list(x)
    return g.P(xl), g.Q(xl)


def _phase(p: float, q: float) -> float:
    return math.atan2(q, p)


def omega(
    g: MapGerm,
    x,
    parallel_tol: float = PARALLEL_TOL,
    floor: float | None = None,
) -> np.ndarray:
    """Tangent field along which the phase of psi grows with unit speed."""
    x = np.asarray(x.coords if isinstance(x, SpherePoint) else x, dtype=float)
    r = float(np.linalg.norm(x))
    p, q = _psi(g, x)
    npsi2 = p * p + q * q
    if floor is None:
        floor = _link_floor(g, r)
    if math.sqrt(npsi2) < floor:
        raise OnLinkError(f"||psi(x)|| = {math.sqrt(npsi2):.3e} below link floor {floor:.3e}", x)
    gam = gamma_eval(g, x)
    xhat = x / r
    u = gam - np.dot(gam, xhat) * xhat
    u = u - np.dot(u, xhat) * xhat
    nu2 = float(np.dot(u, u))
    ng = float(np.linalg.norm(gam))
    if ng == 0.0 or math.sqrt(nu2) < parallel_tol * ng:
        raise ParallelPointError("gamma(x) is parallel to x; the flow hypothesis fails here", x)
    return (npsi2 / nu2) * u


def log_norm_rate(g: MapGerm, x) -> float:
    """d/dt log ||psi||^2 along the flow: <omega, grad ||psi||^2> / ||psi||^2."""
    x = np.asarray(x, dtype=float)
    w = omega(g, x)
    p, q = _psi(g, x)
    xl = list(x)
    grad = np.array([2 * (p * dp(xl) + q * dq(xl)) for dp, dq in zip(g.grad_P, g.grad_Q)])
    return float(np.dot(w, grad)) / (p * p + q * q)


# -- integrator -------------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


@dataclass
class Trajectory:
    times: list[float]
    points: list[SpherePoint]
    phases: list[float]  # unwrapped
    stats: dict = field(default_factory=dict)

    @property
    def samples(self) -> list[tuple[float, SpherePoint, float]]:
        return list(zip(self.times, self.points, self.phases))

    @property
    def end(self) -> SpherePoint:
        return self.points[-1]


def _dp_step(g, x, h, k1, floor):
    ks = [k1]
    for i in range(1, 7):
        y = x + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(omega(g, y, floor=floor))
    y5 = x + h * sum(b * k for b, k in zip(_B5, ks))
    y4 = x + h * sum(b * k for b, k in zip(_B4, ks))
    return y5, float(np.linalg.norm(y5 - y4)), ks[-1]


def integrate_flow(
    g: MapGerm,
    x0,
    T: float,
    tol: float = 1e-8,
    max_steps: int = 200_000,
    h0: float | None = None,
    floor: float | None = None,
) -> Trajectory:
    """Integrate dx/dt = omega(x) on the sphere through ``x0`` for time ``T >= 0``.

    A step is accepted when the embedded error estimate is below
    ``tol * radius`` and its raw phase error is small; the endpoint is then
    pushed back onto the sphere and Newton-projected along omega onto the
    fiber over ``phase0 + t``, so the accumulated drift stays below ``tol``.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    start = x0 if isinstance(x0, SpherePoint) else SpherePoint.project(x0)
    eps = start.radius
    if floor is None:
        floor = _link_floor(g, eps)
    x = start.array()
    p, q = _psi(g, x)
    if math.hypot(p, q) < floor:
        raise OnLinkError("start point lies on the link", x)
    phase0 = _phase(p, q)
    k1 = omega(g, x, floor=floor)
    times, pts, phases = [0.0], [start], [phase0]
    stats = {"accepted": 0, "rejected": 0, "h_min": math.inf, "h_max": 0.0, "max_drift": 0.0}
    if T == 0.0:
        stats["h_min"] = 0.0
        return Trajectory(times, pts, phases, stats)
    t = 0.0
    h = min(T, h0 if h0 is not None else 1e-2)
    h_floor = 1e-14 * max(1.0, T)
    unwrapped = raw_prev = phase0
    while t < T:
        if stats["accepted"] + stats["rejected"] >= max_steps:
            raise StepUnderflow(f"step budget {max_steps} exhausted at t = {t}", x)
        h = min(h, T - t, math.pi / 8)
        try:
            y, err, _ = _dp_step(g, x, h, k1, floor)
            y = y * (eps / float(np.linalg.norm(y)))
            p, q = _psi(g, y)
            if math.hypot(p, q) < floor:
                raise OnLinkError("trajectory reached the link floor", y)
            raw = _phase(p, q)
            step_err = _wrap(raw - raw_prev) - h
            if pos_ok := (err <= tol * eps and abs(step_err) <= PHASE_STEP_TOL):
                # pull the endpoint back onto the fiber over phase0 + t + h
                y, raw, drift = _phase_project(g, y, eps, raw, unwrapped + _wrap(raw - raw_prev), phase0 + t + h, floor)
            k_next = omega(g, y, floor=floor) if pos_ok else None
        except FlowError as exc:
            if h * 0.25 < h_floor:
                raise exc
            stats["rejected"] += 1
            h *= 0.25
            continue
        if pos_ok and abs(drift) <= tol:
            unwrapped = phase0 + t + h + drift
            raw_prev = raw
            t = T if T - (t + h) < 1e-15 * T else t + h
            x = y
            k1 = k_next
            times.append(t)
            pts.append(SpherePoint(tuple(float(v) for v in x), eps))
            phases.append(unwrapped)
            stats["accepted"] += 1
            stats["h_min"] = min(stats["h_min"], h)
            stats["h_max"] = max(stats["h_max"], h)
            stats["max_drift"] = max(stats["max_drift"], abs(drift))
        else:
            stats["rejected"] += 1
        f_pos = (tol * eps / err) ** 0.2 if err > 0 else 5.0
        f_ph = (PHASE_STEP_TOL / abs(step_err)) ** 0.2 if step_err != 0 else 5.0
        h *= min(5.0, max(0.2, 0.9 * min(f_pos, f_ph)))
        if h < h_floor:
            raise StepUnderflow(f"step size underflow at t = {t}", x)
    return Trajectory(times, pts, phases, stats)


def _phase_project(g, y, eps, raw, unwrapped, target, floor, iters: int = 3):
    """Newton steps along omega so that the unwrapped phase of y equals ``target``."""
    d = unwrapped - target
    for _ in range(iters):
        if abs(d) <= 1e-15:
            break
        z = y - d * omega(g, y, floor=floor)
        z *= eps / np.linalg.norm(z)
        p, q = _psi(g, z)
        r2 = _phase(p, q)
        d2 = d + _wrap(r2 - raw)
        if abs(d2) >= abs(d):
            break
        y, raw, d = z, r2, d2
    return y, raw, d


def phase_drift(g: MapGerm, traj: Trajectory) -> float:
    """Max |phase(x_t) - phase(x_0) - t| recomputed from psi at the samples alone."""
    prev = None
    acc = 0.0
    base = None
    worst = 0.0
    for t, pt in zip(traj.times, traj.points):
        p, q = _psi(g, pt.array())
        ph = _phase(p, q)
        if prev is None:
            base = ph
            acc = ph
        else:
            acc += _wrap(ph - prev)
        prev = ph
        worst = max(worst, abs(acc - base - t))
    return worst


# -- fibers and link -------------------------------------------------------------------


def sphere_seeds(m: int, radius: float, n: int, seed: int = 0) -> np.ndarray:
    """Quasi-random points on the sphere of given radius (scrambled Halton through the normal CDF)."""
    if m == 2:
        offset = Halton(d=1, seed=seed).random(1)[0, 0]
        ang = TWO_PI * ((np.arange(n) + offset) / n)
        return radius * np.column_stack([np.cos(ang), np.sin(ang)])
    u = Halton(d=m, seed=seed).random(n)
    z = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return radius * z


@dataclass
class FiberSample:
    alpha: float
    radius: float
    points: list[SpherePoint]
    residuals: list[float]
    status: list[str] = field(default_factory=list)
    note: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = ["ok"] * len(self.points)

    def arrays(self) -> np.ndarray:
        return np.array([p.coords for p in self.points]).reshape(len(self.points), -1)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "radius": self.radius,
            "points": [list(p.coords) for p in self.points],
            "residuals": list(self.residuals),
            "status": list(self.status),
            "note": self.note,
        }


@dataclass
class LinkSample:
    radius: float
    points: list[SpherePoint]
    residuals: list[float]

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "points": [list(p.coords) for p in self.points],
            "residuals": list(self.residuals),
        }


def _phase_residual(g: MapGerm, x: np.ndarray, alpha: float) -> float:
    p, q = _psi(g, x)
    return _wrap(_phase(p, q) - alpha)


def refine_to_fiber(
    g: MapGerm, x, alpha: float, steps: int = 60, tol: float = 0.0
) -> tuple[np.ndarray, float]:
    """Damped Newton on the phase along omega: x <- x - r(x) omega(x), back on the sphere.

    Returns the refined point and its wrapped phase residual.
    """
    x = np.asarray(x, dtype=float)
    eps = float(np.linalg.norm(x))
    r = _phase_residual(g, x, alpha)
    for _ in range(steps):
        if abs(r) <= tol:
            break
        w = omega(g, x)
        lam = 1.0
        improved = False
        while lam > 1e-6:
            y = x - lam * r * w
            y *= eps / np.linalg.norm(y)
            try:
                ry = _phase_residual(g, y, alpha)
            except ValueError:
                ry = math.inf
            if abs(ry) < abs(r):
                x, r = y, ry
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    return x, abs(r)


def _dedupe(points: list[np.ndarray], radius: float) -> list[int]:
    kept: list[int] = []
    for i, p in enumerate(points):
        if all(np.linalg.norm(p - points[j]) > radius for j in kept):
            kept.append(i)
    return kept


def _canonical(points: list[np.ndarray]) -> list[int]:
    return sorted(range(len(points)), key=lambda i: tuple(np.round(points[i], 12)))


def sample_fiber(
    g: MapGerm,
    eps: float,
    alpha: float,
    n: int,
    tol: float = 1e-10,
    seed: int = 0,
    budget: int | None = None,
) -> FiberSample:
    """Up to ``n`` distinct points of the sphere whose phase equals ``alpha`` within ``tol``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = math.fmod(alpha, TWO_PI)
    if alpha < 0:
        alpha += TWO_PI
    budget = budget or max(64, 8 * n)
    found: list[np.ndarray] = []
    res: list[float] = []
    for s in sphere_seeds(g.m, eps, budget, seed):
        try:
            y, r = refine_to_fiber(g, s, alpha)
        except FlowError:
            continue
        p, q = _psi(g, y)
        if r <= tol and p * math.cos(alpha) + q * math.sin(alpha) > 0:
            found.append(y)
            res.append(r)
    keep = _dedupe(found, 10 * tol * eps)
    found = [found[i] for i in keep]
    res = [res[i] for i in keep]
    order = _canonical(found)[:n]
    pts = [SpherePoint(tuple(float(v) for v in found[i]), eps) for i in order]
    note = "" if pts else f"no fiber point found from {budget} seeds"
    return FiberSample(alpha, eps, pts, [res[i] for i in order], note=note)


def _refine_link(g: MapGerm, x: np.ndarray, steps: int = 80) -> tuple[np.ndarray, float]:
    eps = float(np.linalg.norm(x))
    for _ in range(steps):
        p, q = _psi(g, x)
        J = g.jacobian(x)
        xhat = x / eps
        Jt = J - np.outer(J @ xhat, xhat)
        dx, *_ = np.linalg.lstsq(Jt, -np.array([p, q]), rcond=None)
        y = x + dx
        y *= eps / np.linalg.norm(y)
        if math.hypot(*_psi(g, y)) >= math.hypot(p, q):
            break
        x = y
    return x, math.hypot(*_psi(g, x))


def compute_link(g: MapGerm, eps: float, n: int, tol: float = 1e-10, seed: int = 0) -> LinkSample:
    """Points of psi^{-1}(0) on the sphere of radius ``eps``, clustered within ``10*tol``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    found: list[np.ndarray] = []
    res: list[float] = []
    for s in sphere_seeds(g.m, eps, max(64, 8 * n), seed):
        y, r = _refine_link(g, s)
        if r <= tol and abs(np.linalg.norm(y) - eps) <= tol:
            found.append(y)
            res.append(r)
    keep = _dedupe(found, 10 * tol)
    found = [found[i] for i in keep]
    res = [res[i] for i in keep]
    order = _canonical(found)[:n]
    return LinkSample(eps, [SpherePoint(tuple(float(v) for v in found[i]), eps) for i in order],
                      [res[i] for i in order])


def transport_fiber(
    g: MapGerm, fs: FiberSample, t: float, tol: float = 1e-8, refine_steps: int = 1
) -> FiberSample:
    """Flow every point of ``fs`` for time ``t``; result targets phase ``alpha + t``.

    Failed points keep their start position and carry the error code in ``status``.
    ``refine_steps`` Newton steps pull each endpoint back onto the target fiber.
    """
    target = math.fmod(fs.alpha + t, TWO_PI)
    if target < 0:
        target += TWO_PI
    pts, res, status = [], [], []
    for pt in fs.points:
        try:
            traj = integrate_flow(g, pt, t, tol=tol)
            y = traj.end.array()
            if refine_steps:
                y, r = refine_to_fiber(g, y, target, steps=refine_steps)
            else:
                r = abs(_phase_residual(g, y, target))
            pts.append(SpherePoint.project(y, fs.radius))
            res.append(r)
            status.append("ok")
        except FlowError as exc:
            pts.append(pt)
            res.append(math.inf)
            status.append(exc.code)
    return FiberSample(target, fs.radius, pts, res, status)
