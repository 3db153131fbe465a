"""Command-line front end: ``milnorfib check | fibrate | strata | link | export-examples | list``.

Exit codes: 0 everything passed or completed, 1 some check FAILed, 2 some
check is UNKNOWN (or errored), 3 usage or parse error.
"""

from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import click
import numpy as np
import yaml

from .certify import (
    FAIL,
    PASS,
    UNKNOWN,
    Annulus,
    SubdivisionConfig,
    certify_isolated_singularity,
    certify_strong_milnor,
    find_parallel_points,
    jacquemard_angle_sup,
)
from .export import (
    export_name,
    fiber_edges,
    trajectory_polyline,
    write_fiber_csv,
    write_link_csv,
    write_obj,
)
from .fibration import compute_link, integrate_flow, sample_fiber, transport_fiber
from .germ import REGISTRY, GermError, MapGerm, SeadeFamily, germ_to_yaml, get_germ
from .polynomial import PolynomialError
from .report import ERROR, NOT_APPLICABLE, Report, RunConfig, dumps, exit_code_for
from .strata import (
    BUILTIN_CURVES,
    CurveError,
    StratPair,
    TestCurve,
    c_regularity_limit,
    curve_ratio_diagnostic,
    load_curve,
    m_condition_scan,
    validate_on_X,
    whitney_a_limit,
)

EXIT_USAGE = 3


class UsageFailure(click.ClickException):
    exit_code = EXIT_USAGE


def _germ(source: str) -> MapGerm:
    try:
        return get_germ(source)
    except (GermError, PolynomialError, OSError) as exc:
        raise UsageFailure(str(exc)) from exc


def _config(germ: str, **kw) -> RunConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    try:
        return RunConfig(germ, **kw)
    except ValueError as exc:
        raise UsageFailure(str(exc)) from exc


def _emit(report: Report) -> int:
    if report.config.out:
        path = report.write(report.config.out)
        click.echo(f"report written to {path}", err=True)
    click.echo(dumps(report.to_dict()), nl=False)
    for c in report.checks:
        tag = " (informational)" if c.get("informational") else ""
        click.echo(f"{c['name']:<28} {c.get('verdict', ERROR)}{tag}", err=True)
    return exit_code_for(report.overall())


def _guarded(report: Report, name: str, fn, informational: bool = False):
    t0 = time.perf_counter()
    try:
        result = fn()
    except Exception as exc:  # surfaced per check, siblings keep running
        result = {"verdict": ERROR, "error": f"{type(exc).__name__}: {exc}"}
    report.timing[name] = round(time.perf_counter() - t0, 6)
    return report.add(name, result, informational)


def _combine(verdicts: list[str]) -> str:
    if all(v == PASS for v in verdicts):
        return PASS
    if FAIL in verdicts:
        return FAIL
    return UNKNOWN


# -- shared options -----------------------------------------------------------------

def _opt_out(f):
    return click.option("--out", type=click.Path(file_okay=False), default=None,
                        help="Directory for the report and exported files.")(f)


def _opt_seed(f):
    return click.option("--seed", type=int, default=0, show_default=True, help="Seed for quasi-random samplers.")(f)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact", prog_name="milnorfib")
def cli():
    """Certify strong Milnor hypotheses for polynomial map germs (R^m,0) -> (R^2,0)."""


@cli.command("list")
def list_cmd():
    """List the built-in germs."""
    for key, g in REGISTRY.items():
        click.echo(f"{key:<12} m={g.m}  P = {g.P}   Q = {g.Q}")
    return 0


@cli.command()
@click.argument("germ")
@click.option("--rin", type=float, default=0.05, show_default=True, help="Inner radius of the outermost annulus.")
@click.option("--rout", type=float, default=0.1, show_default=True, help="Outer radius.")
@click.option("--halvings", type=click.IntRange(0, 30), default=4, show_default=True,
              help="Number of shells below the first annulus, each halving the radius.")
@click.option("--rho", type=float, default=0.05, show_default=True, help="Target margin: angle measure <= 1 - rho.")
@click.option("--delta", type=float, default=0.05, show_default=True, help="Margin for the gradient angle bound.")
@click.option("--depth", type=click.IntRange(1, 200), default=32, show_default=True, help="Maximum subdivision depth.")
@click.option("--grid", type=click.IntRange(1), default=16, show_default=True, help="Theta grid size for the (m) scan.")
@click.option("--workers", type=click.IntRange(1), default=1, show_default=True)
@_opt_seed
@_opt_out
def check(germ, rin, rout, halvings, rho, delta, depth, grid, workers, seed, out):
    """Run the certificate suite on GERM (registry key or germ-spec file)."""
    g = _germ(germ)
    cfg_run = _config(germ, r_in=rin, r_out=rout, halvings=halvings, rho=rho, delta=delta,
                      depth=depth, grid=grid, workers=workers, seed=seed, out=out)
    report = Report("check", cfg_run, g)
    cfg = SubdivisionConfig(max_depth=depth, workers=workers)
    shells = Annulus(rin, rout).cascade(halvings)
    whole = Annulus(shells[-1].r_in, rout)

    _guarded(report, "isolated_singularity",
             lambda: certify_isolated_singularity(g, whole, cfg).to_dict())

    def strong_milnor():
        certs = [certify_strong_milnor(g, a, rho, cfg) for a in shells]
        verdict = _combine([c.verdict for c in certs])
        bad = next((c for c in certs if c.verdict != PASS), None)
        return {
            "operation": "certify_strong_milnor",
            "verdict": verdict,
            "margin": rho if verdict == PASS else 0.0,
            "measure": "admissible",
            "cascade": [c.to_dict(max_witnesses=8) for c in certs],
            "witnesses": bad.to_dict()["witnesses"] if bad else [],
        }

    sm = _guarded(report, "strong_milnor", strong_milnor)

    if sm["verdict"] != PASS and g.m == 2:
        def petal():
            radius = 0.5 * (rin + rout)
            pp = find_parallel_points(g, radius)
            off = pp.off_link()
            verified = [c for c in off if c.verified]
            verdict = FAIL if verified else (UNKNOWN if off else PASS)
            return {"operation": "find_parallel_points", "verdict": verdict, **pp.to_dict()}

        _guarded(report, "parallel_points", petal)

    _guarded(report, "jacquemard_angle", lambda: jacquemard_angle_sup(g, whole, delta, cfg).to_dict())
    _guarded(report, "m_condition_scan",
             lambda: m_condition_scan(StratPair.of(g), whole, grid, cfg).to_dict())

    curve = BUILTIN_CURVES.get(g.name)
    if curve is not None:
        def whitney():
            r = whitney_a_limit(SeadeFamily(g), curve).to_dict()
            r["verdict_tag"] = r.pop("verdict")
            r["verdict"] = PASS if r["verdict_tag"] == "HOLDS" else FAIL
            return r

        _guarded(report, "whitney_a_builtin_sequence", whitney, informational=True)
    return _emit(report)


@cli.command()
@click.argument("germ")
@click.option("--eps", type=float, default=0.1, show_default=True, help="Sphere radius.")
@click.option("--phases", type=click.IntRange(1), default=8, show_default=True, help="Number of fiber phases.")
@click.option("--points", type=click.IntRange(1), default=16, show_default=True, help="Points per fiber.")
@click.option("--rho", type=float, default=0.05, show_default=True)
@click.option("--depth", type=click.IntRange(1, 200), default=32, show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True, help="Flow and fiber tolerance.")
@click.option("--force", is_flag=True, help="Skip the strong Milnor gate.")
@_opt_seed
@_opt_out
def fibrate(germ, eps, phases, points, rho, depth, tol, force, seed, out):
    """Sample link and fibers on the sphere of radius EPS and check monodromy."""
    g = _germ(germ)
    cfg_run = _config(germ, eps=eps, phases=phases, points=points, rho=rho, depth=depth, tol=tol,
                      force=force, seed=seed, out=out)
    report = Report("fibrate", cfg_run, g)
    gate = _guarded(report, "gate_strong_milnor", lambda: certify_strong_milnor(
        g, Annulus(eps / 2, eps), rho, SubdivisionConfig(max_depth=depth)).to_dict(max_witnesses=8))
    if gate["verdict"] != PASS and not force:
        gate["refusal"] = (
            f"strong Milnor condition not certified on [{eps / 2:g}, {eps:g}] with rho = {rho:g}; "
            "the flow may hit parallel points. Re-run with --force to sample anyway."
        )
        click.echo(gate["refusal"], err=True)
        return _emit(report)

    outdir = Path(out) if out else None
    link_holder = {}

    def link():
        ls = compute_link(g, eps, points, seed=seed)
        link_holder["link"] = ls
        if outdir:
            report.artifacts.append(write_link_csv(outdir / export_name(g.name, "link", eps), ls, g.m).name)
        return {"operation": "compute_link", "verdict": PASS, "n_points": len(ls.points), **ls.to_dict()}

    _guarded(report, "link", link, informational=True)

    alphas = [2 * math.pi * k / phases for k in range(phases)]
    fibers = {}

    def sample():
        out_f = []
        for a in alphas:
            fs = sample_fiber(g, eps, a, points, tol=min(tol, 1e-10), seed=seed)
            fibers[a] = fs
            out_f.append(fs.to_dict())
            if outdir and fs.points:
                report.artifacts.append(write_fiber_csv(outdir / export_name(g.name, "fiber", eps, a), fs).name)
                if g.m == 3:
                    pts = fs.arrays()
                    report.artifacts.append(write_obj(
                        outdir / export_name(g.name, "fiber", eps, a, "obj"), meshes=[(pts, fiber_edges(pts))],
                        comment=f"fiber of {g.name} at phase {a:.6f}").name)
        ok = all(r <= tol for fs in fibers.values() for r in fs.residuals)
        return {"operation": "sample_fiber", "verdict": PASS if ok else FAIL,
                "sizes": [len(f.points) for f in fibers.values()], "fibers": out_f}

    _guarded(report, "fibers", sample)

    def monodromy():
        fs = fibers.get(alphas[0])
        if fs is None or not fs.points:
            return {"verdict": NOT_APPLICABLE, "reason": "empty fiber at phase 0"}
        moved = transport_fiber(g, fs, 2 * math.pi, tol=tol)
        orig = fs.arrays()
        dist = [float(np.min(np.linalg.norm(orig - p.array(), axis=1))) for p in moved.points]
        ok = all(s == "ok" for s in moved.status) and max(moved.residuals) <= tol
        traj = integrate_flow(g, fs.points[0], 2 * math.pi, tol=tol)
        if outdir:
            report.artifacts.append(write_obj(
                outdir / export_name(g.name, "trajectory", eps, alphas[0], "obj"),
                polylines=[trajectory_polyline(traj)], comment=f"omega-flow of {g.name}, T = 2 pi").name)
        return {
            "operation": "transport_fiber",
            "verdict": PASS if ok else FAIL,
            "t": 2 * math.pi,
            "status": moved.status,
            "max_phase_residual": max(moved.residuals),
            "nearest_original_distance": dist,
            "trajectory_steps": traj.stats["accepted"],
        }

    _guarded(report, "monodromy", monodromy)
    return _emit(report)


@cli.command()
@click.argument("germ")
@click.option("--eps", type=float, default=0.1, show_default=True)
@click.option("--points", type=click.IntRange(1), default=16, show_default=True)
@_opt_seed
@_opt_out
def link(germ, eps, points, seed, out):
    """Compute the link psi^{-1}(0) on the sphere of radius EPS."""
    g = _germ(germ)
    report = Report("link", _config(germ, eps=eps, points=points, seed=seed, out=out), g)

    def run():
        ls = compute_link(g, eps, points, seed=seed)
        if out:
            report.artifacts.append(write_link_csv(Path(out) / export_name(g.name, "link", eps), ls, g.m).name)
        return {"operation": "compute_link", "verdict": PASS, "n_points": len(ls.points), **ls.to_dict()}

    _guarded(report, "link", run)
    return _emit(report)


@cli.command()
@click.argument("germ")
@click.option("--curve", "curve_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Curve-spec file (x as polynomials in s, theta = a*pi + f(s)).")
@click.option("--builtin-sequence", is_flag=True, help="Use the built-in sequence for GERM.")
@_opt_out
def strata(germ, curve_path, builtin_sequence, out):
    """Whitney (a), (c)-regularity and curve-order diagnostics along a curve."""
    g = _germ(germ)
    if builtin_sequence == (curve_path is not None):
        raise UsageFailure("give exactly one of --curve FILE or --builtin-sequence")
    if builtin_sequence:
        if g.name not in BUILTIN_CURVES:
            raise UsageFailure(f"no built-in sequence for {g.name!r} (have: {', '.join(BUILTIN_CURVES)})")
        curve = BUILTIN_CURVES[g.name]
    else:
        try:
            curve = load_curve(curve_path)
        except (CurveError, PolynomialError) as exc:
            raise UsageFailure(str(exc)) from exc
    if curve.m != g.m:
        raise UsageFailure(f"curve has {curve.m} coordinates, germ has m = {g.m}")
    report = Report("strata", _config(germ, out=out), g)
    report.add("curve", {"verdict": PASS, **curve.to_dict()}, informational=True)
    f = SeadeFamily(g)
    starts_on_axis = not np.any(curve.point(0.0) != 0)
    if starts_on_axis:
        try:
            validate_on_X(f, curve)
        except CurveError as exc:
            raise UsageFailure(str(exc)) from exc
        _guarded(report, "whitney_a", lambda: _limit(whitney_a_limit(f, curve)), informational=True)
        _guarded(report, "c_regularity", lambda: _limit(c_regularity_limit(StratPair(f), curve)), informational=True)
    else:
        _guarded(report, "curve_ratio", lambda: _limit(curve_ratio_diagnostic(g, curve)), informational=True)
    return _emit(report)


def _limit(rep) -> dict:
    d = rep.to_dict()
    d["verdict_tag"] = d.pop("verdict")
    d["verdict"] = PASS if d["verdict_tag"] in ("HOLDS", "BOUNDED") else FAIL
    return d


@cli.command("export-examples")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Target directory.")
def export_examples(out):
    """Write the built-in germs and example curves as editable spec files."""
    d = Path(out)
    (d / "germs").mkdir(parents=True, exist_ok=True)
    (d / "curves").mkdir(parents=True, exist_ok=True)
    written = []
    for key, g in REGISTRY.items():
        p = d / "germs" / f"{key}.yaml"
        p.write_text(germ_to_yaml(g))
        written.append(p)
    plane = MapGerm.from_strings(3, "x", "y", name="plane-3d")
    p = d / "germs" / "plane-3d.yaml"
    p.write_text(germ_to_yaml(plane))
    written.append(p)
    curves = dict(BUILTIN_CURVES)
    curves["identity-radial"] = TestCurve.from_strings(["0", "s"], "0", name="identity-radial")
    curves["plane-3d-link-approach"] = TestCurve.from_strings(["s", "s", "1/10"], "0", name="plane-3d-link-approach")
    for key, c in curves.items():
        p = d / "curves" / f"{key}.yaml"
        p.write_text(yaml.safe_dump(c.to_dict(), sort_keys=False))
        written.append(p)
    for p in written:
        click.echo(str(p))
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        rc = cli.main(args=argv, prog_name="milnorfib", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    return rc if isinstance(rc, int) else 0


if __name__ == "__main__":
    sys.exit(main())
