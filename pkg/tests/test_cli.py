import json
import subprocess
import sys

import pytest

from milnorfib.cli import main
from milnorfib.germ import load_germ, REGISTRY
from milnorfib.report import dumps
from milnorfib.strata import load_curve


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr().out
    return rc, (json.loads(out) if out.startswith("{") else out)


def verdicts(doc):
    return {c["name"]: c["verdict"] for c in doc["checks"]}


def test_list(capsys):
    rc, out = run(capsys, "list")
    assert rc == 0
    for key in REGISTRY:
        assert key in out


@pytest.mark.parametrize("germ", ["identity", "ex-5.2", "ex-5.3"])
def test_check_passes(capsys, germ):
    rc, doc = run(capsys, "check", germ)
    assert rc == 0
    assert doc["summary"] == {"verdict": "PASS", "exit_code": 0}
    v = verdicts(doc)
    assert v["strong_milnor"] == "PASS"
    assert v["isolated_singularity"] == "PASS"


def test_check_petal_germ_fails_with_witnesses(capsys):
    rc, doc = run(capsys, "check", "milnor-1.1")
    assert rc == 1
    v = verdicts(doc)
    assert v["strong_milnor"] == "FAIL"
    pp = next(c for c in doc["checks"] if c["name"] == "parallel_points")
    assert pp["verdict"] == "FAIL"
    assert any(c["verified"] and not c["on_link"] for c in pp["candidates"])


def test_check_report_is_reproducible(capsys, tmp_path):
    bodies = []
    for _ in range(2):
        rc, doc = run(capsys, "check", "ex-5.3", "--out", str(tmp_path))
        doc.pop("timing")
        bodies.append(dumps(doc))
        saved = json.loads((tmp_path / "ex-5.3-check-report.json").read_text())
        assert "timing" in saved
    assert bodies[0] == bodies[1]


def test_fibrate_identity_writes_artifacts(capsys, tmp_path):
    rc, doc = run(capsys, "fibrate", "identity", "--eps", "1", "--phases", "4", "--points", "2", "--out", str(tmp_path))
    assert rc == 0
    names = {p.name for p in tmp_path.iterdir()}
    for a in ("0.000000", "1.570796", "3.141593", "4.712389"):
        assert f"identity-fiber-1-{a}.csv" in names
    assert "identity-link-1.csv" in names
    assert "identity-fibrate-report.json" in names
    assert sorted(doc["artifacts"]) == doc["artifacts"]
    lines = (tmp_path / "identity-fiber-1-1.570796.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,phase,residual"
    x, y = map(float, lines[1].split(",")[:2])
    assert abs(x) < 1e-10 and abs(y - 1) < 1e-10
    fibers = next(c for c in doc["checks"] if c["name"] == "fibers")
    assert fibers["sizes"] == [1, 1, 1, 1]


def test_fibrate_refuses_without_certificate(capsys):
    rc, doc = run(capsys, "fibrate", "milnor-1.1", "--phases", "1", "--points", "1")
    assert rc == 1
    assert [c["name"] for c in doc["checks"]] == ["gate_strong_milnor"]


def test_fibrate_force_runs_anyway(capsys, tmp_path):
    rc, doc = run(capsys, "fibrate", "milnor-1.1", "--force", "--phases", "1", "--points", "2", "--out", str(tmp_path))
    assert rc in (0, 1, 2)
    assert "fibers" in verdicts(doc)


def test_link_command(capsys, tmp_path):
    rc, doc = run(capsys, "link", "ex-5.3", "--points", "8", "--out", str(tmp_path))
    assert rc == 0
    link = doc["checks"][0]
    assert link["n_points"] == 2
    assert (tmp_path / "ex-5.3-link-0.1.csv").exists()


def test_strata_builtin_sequence(capsys):
    rc, doc = run(capsys, "strata", "ex-5.2", "--builtin-sequence")
    assert rc == 0
    w = next(c for c in doc["checks"] if c["name"] == "whitney_a")
    assert w["verdict_tag"] == "FAILS" and abs(w["limit"] - 1.0) < 1e-9
    assert w.get("informational")


def test_export_examples_round_trip(capsys, tmp_path):
    assert main(["export-examples", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    for key, g in REGISTRY.items():
        assert load_germ(tmp_path / "germs" / f"{key}.yaml") == g
    c = load_curve(tmp_path / "curves" / "ex-5.2.yaml")
    assert c.m == 2
    rc, doc = run(capsys, "strata", str(tmp_path / "germs" / "plane-3d.yaml"),
                  "--curve", str(tmp_path / "curves" / "plane-3d-link-approach.yaml"))
    assert rc == 0
    ratio = next(c for c in doc["checks"] if c["name"] == "curve_ratio")
    assert ratio["verdict_tag"] == "BOUNDED" and abs(ratio["limit"] - 2.0) < 1e-9
    rc, doc = run(capsys, "check", str(tmp_path / "germs" / "ex-5.2.yaml"))
    assert rc == 0


def test_germ_from_file_matches_registry(capsys, tmp_path):
    p = tmp_path / "g.yaml"
    p.write_text('name: mine\nm: 2\nP: "x"\nQ: "y*x^2 + y^3"\n')
    rc, doc = run(capsys, "check", str(p))
    assert rc == 0 and doc["germ"]["name"] == "mine"


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "no-such-germ"],
        ["check", "identity", "--rin", "0.2", "--rout", "0.1"],
        ["check", "identity", "--bogus"],
        ["fibrate", "identity", "--eps", "-1"],
        ["strata", "ex-5.2"],
    ],
)
def test_usage_errors_exit_3(capsys, argv):
    assert main(argv) == 3


def test_bad_polynomial_file(capsys, tmp_path):
    p = tmp_path / "g.yaml"
    p.write_text('m: 2\nP: "x +* y"\nQ: "y"\n')
    assert main(["check", str(p)]) == 3


def test_curve_not_on_x_reported(capsys, tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text('x: ["s", "s"]\ntheta: "0"\nname: bad\n')
    rc, doc = run(capsys, "strata", "identity", "--curve", str(p))
    assert rc == 3 or any("not on X" in c.get("error", "") for c in doc["checks"])


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "milnorfib.cli", "check", "identity"], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["summary"]["verdict"] == "PASS"
