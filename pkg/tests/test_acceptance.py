"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest
import sympy as sp

from milnorfib.certify import (
    PASS,
    Annulus,
    SubdivisionConfig,
    angle_measure,
    certify_strong_milnor,
    find_parallel_points,
)
from milnorfib.cli import main
from milnorfib.fibration import (
    OnLinkError,
    ParallelPointError,
    compute_link,
    integrate_flow,
    omega,
    phase_drift,
    sample_fiber,
    sphere_seeds,
    transport_fiber,
)
from milnorfib.germ import REGISTRY, SeadeFamily, gamma_eval, gram_residual, pencil_determinant, seade_gradient, theta_of
from milnorfib.polynomial import Polynomial
from milnorfib.strata import BUILTIN_CURVES, StratPair, m_condition_scan, whitney_a_limit

from .conftest import random_annulus_points, to_sympy

EX52 = REGISTRY["ex-5.2"]
EX53 = REGISTRY["ex-5.3"]
M11 = REGISTRY["milnor-1.1"]
IDENT = REGISTRY["identity"]


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_second_example_determinant(verdict):
    t0 = time.perf_counter()
    det = pencil_determinant(EX52)
    dt = time.perf_counter() - t0
    x, y = sp.symbols("x y")
    target = sp.expand((x**2 + y**2) ** 2)
    d = sp.expand(to_sympy(det))
    ok = (d == target or d == -target) and dt < 1.0
    verdict(1, ok, f"determinant = {d}, {dt:.3f} s")


def test_criterion_02_second_example_certificate(verdict):
    t0 = time.perf_counter()
    cert = certify_strong_milnor(EX52, Annulus(1e-2, 1e-1), 0.05, SubdivisionConfig(max_depth=24))
    dt = time.perf_counter() - t0
    ok = cert.verdict == PASS and cert.margin >= 0.05 and cert.stats["max_depth"] <= 24 and dt < 120
    verdict(2, ok, f"{cert.verdict} rho={cert.margin} depth={cert.stats['max_depth']} boxes={cert.stats.get('boxes')} {dt:.2f} s")


def test_criterion_03_whitney_failure(verdict):
    rep = whitney_a_limit(SeadeFamily(EX52), BUILTIN_CURVES["ex-5.2"])
    s = 1e-4
    # symbolic gradient along (s, 0, pi/2) is (0, -s^2, -s)
    n = np.array([0.0, -s * s, -s])
    sweep = abs(n[2]) / np.linalg.norm(n)
    ok = abs(rep.limit - 1.0) <= 1e-9 and rep.verdict == "FAILS" and sweep >= 0.999
    verdict(3, ok, f"series limit {rep.limit!r} ({rep.verdict}), sweep at s=1e-4: {sweep:.9f}")


def test_criterion_04_third_example_link(verdict):
    t0 = time.perf_counter()
    link = compute_link(EX53, 0.1, 16)
    dt = time.perf_counter() - t0
    pts = [p.array() for p in link.points]
    sym = len(pts) == 2 and np.allclose(pts[0], -pts[1], atol=1e-12)
    ok = len(pts) == 2 and max(link.residuals) <= 1e-10 and sym and dt < 10
    verdict(4, ok, f"{len(pts)} points, max residual {max(link.residuals, default=0):.2e}, symmetric={sym}, {dt:.2f} s")


def test_criterion_05_third_example_parallel_system(verdict):
    sizes = {r: len(find_parallel_points(EX53, r).off_link()) for r in (0.1, 0.05, 0.025)}
    verdict(5, all(v == 0 for v in sizes.values()), f"off-link parallel points per radius {sizes}")


def test_criterion_06_petal_germ_detection(verdict):
    r = 0.05
    off = find_parallel_points(M11, r).off_link()
    n = 1_000_000
    phi = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    vals = (r**4) - (r * np.cos(phi)) ** 2 * (r * np.sin(phi))
    s = np.sign(vals)
    brackets = [(phi[i], phi[i] + 2 * math.pi / n) for i in np.nonzero(s != np.roll(s, -1))[0]]
    resid = max(abs((px * px + py * py) ** 2 - px * px * py) for px, py in (c.point for c in off)) if off else math.inf
    matched = all(
        any(a - 1e-5 <= math.atan2(c.point[1], c.point[0]) % (2 * math.pi) <= b + 1e-5 for a, b in brackets) for c in off
    )
    ok = bool(off) and resid <= 1e-10 and matched and len(off) == len(brackets)
    verdict(6, ok, f"{len(off)} witnesses vs {len(brackets)} grid brackets, max residual {resid:.2e}")


def test_criterion_07_flow_phase_linearity(verdict):
    rng = np.random.default_rng(7)
    drifts = []
    for _ in range(16):
        a = rng.uniform(0, 2 * math.pi)
        x0 = 0.1 * np.array([math.cos(a), math.sin(a)])
        drifts.append(phase_drift(EX52, integrate_flow(EX52, x0, 2 * math.pi, tol=1e-8)))
    verdict(7, max(drifts) <= 1e-6, f"max phase drift over 16 starts {max(drifts):.2e}")


def test_criterion_08_omega_identity(verdict):
    rng = np.random.default_rng(8)
    worst = {}
    for name, g in REGISTRY.items():
        pts = random_annulus_points(rng, g.m, 1100, 0.01, 0.1)
        errs = []
        for x in pts:
            try:
                w = omega(g, x)
            except (ParallelPointError, OnLinkError):
                continue
            p, q = g.psi(x)
            errs.append(abs(float(w @ gamma_eval(g, x)) / (p * p + q * q) - 1.0))
            if len(errs) == 1000:
                break
        worst[name] = (len(errs), max(errs))
    ok = all(n == 1000 and e <= 1e-12 for n, e in worst.values())
    verdict(8, ok, "; ".join(f"{k}: n={n} max rel err {e:.1e}" for k, (n, e) in worst.items()))


def test_criterion_09_monodromy_closure(verdict):
    fibers = [sample_fiber(EX52, 0.1, a, 1) for a in np.linspace(0, 2 * math.pi, 32, endpoint=False)]
    worst, n = 0.0, 0
    for fs in fibers:
        out = transport_fiber(EX52, fs, 2 * math.pi, refine_steps=1)
        for p, s in zip(out.points, out.status):
            if s != "ok":
                worst = math.inf
                continue
            worst = max(worst, min(np.linalg.norm(p.array() - q.array()) for q in fs.points))
            n += 1
    verdict(9, n == 32 and worst <= 1e-5, f"{n} fiber points transported by 2 pi, max distance {worst:.2e}")


def test_criterion_10_parallelism_suite(verdict):
    rng = np.random.default_rng(10)
    worst = {}
    for name, g in REGISTRY.items():
        f = SeadeFamily(g)
        rel, n = 0.0, 0
        for x in random_annulus_points(rng, g.m, 1000, 0.01, 0.1):
            gam = gamma_eval(g, x)
            grad = seade_gradient(f, x, theta_of(g, x))
            scale = float(np.dot(gam, gam) * np.dot(grad, grad))
            if scale == 0.0:
                continue
            rel = max(rel, gram_residual(gam, grad) / scale)
            n += 1
        worst[name] = (n, rel)
    ok = all(n >= 999 and r <= 1e-18 for n, r in worst.values())
    verdict(10, ok, "; ".join(f"{k}: n={n} max {r:.1e}" for k, (n, r) in worst.items()))


def test_criterion_11_ruas_m_scan(verdict):
    t0 = time.perf_counter()
    cert = m_condition_scan(StratPair.of(REGISTRY["ruas-1.5"]), Annulus(1e-2, 1e-1), 64)
    verdict(11, cert.verdict == PASS, f"{cert.verdict} over 64 thetas, {time.perf_counter() - t0:.2f} s")


def test_criterion_12_identity_sanity(verdict, capsys):
    rc = main(["check", "identity"])
    doc = json.loads(capsys.readouterr().out)
    checks_ok = rc == 0 and all(c["verdict"] == PASS for c in doc["checks"])
    rng = np.random.default_rng(12)
    radial = sum((gi * xi for gi, xi in zip(IDENT.gamma, IDENT.coords)), Polynomial.zero(2))
    meas = max(angle_measure(IDENT, x) for x in random_annulus_points(rng, 2, 1000, 0.01, 1.0))
    sizes = [len(sample_fiber(IDENT, 0.1, a, 8).points) for a in np.linspace(0, 2 * math.pi, 8, endpoint=False)]
    rot = 0.0
    for x0 in sphere_seeds(2, 0.1, 8, seed=1):
        T = 2.5
        a0 = math.atan2(x0[1], x0[0])
        end = integrate_flow(IDENT, x0, T).end.array()
        rot = max(rot, float(np.linalg.norm(end - 0.1 * np.array([math.cos(a0 + T), math.sin(a0 + T)]))) / 0.1)
    ok = checks_ok and radial.is_zero() and meas <= 1e-15 and sizes == [1] * 8 and rot <= 1e-9
    verdict(12, ok, f"checks all PASS={checks_ok}, <gamma, x> == 0 exactly: {radial.is_zero()}, max float angle measure {meas:.1e}, fiber sizes {set(sizes)}, rotation err {rot:.1e}")
