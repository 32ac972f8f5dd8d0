import json
import subprocess
import sys

import pytest

from robustinspect import serialization
from robustinspect.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_synth_linear_coefficients(capsys):
    code, out, _ = run(capsys, "synth", "--mu", "0.5", "--rule", "linear")
    assert code == 0
    m = serialization.loads(out)
    assert m.params.lambda1 == pytest.approx(8 / 9, abs=1e-15)
    assert m.params.lambda0 == pytest.approx(-1 / 9, abs=1e-15)


def test_synth_below_boundary(capsys):
    code, _, err = run(capsys, "synth", "--mu", "0.2", "--rule", "linear")
    assert code == 1
    assert "mu'" in err and "three" in err


def test_json_errors(capsys):
    code, _, err = run(capsys, "--json-errors", "synth", "--mu", "1.5", "--rule", "maximal")
    assert code == 1
    payload = json.loads(err)
    assert payload["exit_code"] == 1
    assert payload["error"] == "DomainError"


def test_usage_errors_exit_64(capsys):
    assert run(capsys, "synth", "--mu", "0.5", "--rule", "linear", "--bogus")[0] == 64
    assert run(capsys, "nonsense")[0] == 64
    assert run(capsys)[0] == 64


@pytest.mark.parametrize("mu,rule", [
    ("0.5", "linear"), ("0.5", "clipped"), ("0.7", "maximal"),
    ("0.15", "three-point"), ("0.15", "three-point-maximal"),
])
def test_verify_accepts_synth_output(tmp_path, capsys, mu, rule):
    f = tmp_path / "m.json"
    assert run(capsys, "synth", "--mu", mu, "--rule", rule, "--out", str(f))[0] == 0
    code, out, _ = run(capsys, "verify", str(f), "--grid", "501")
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_verify_blend(tmp_path, capsys):
    f = tmp_path / "b.json"
    assert run(capsys, "synth", "--mu", "0.6", "--rule", "linear", "--blend", "0.3", "--out", str(f))[0] == 0
    assert run(capsys, "verify", str(f), "--grid", "501")[0] == 0


def test_verify_bad_file(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    code, _, err = run(capsys, "verify", str(f))
    assert code == 1
    assert "line 1" in err
    assert run(capsys, "verify", str(tmp_path / "missing.json"))[0] == 1


def test_uniform_table(capsys):
    code, out, _ = run(capsys, "experiment", "uniform-table")
    assert code == 0
    rows = dict(line.split(",") for line in out.splitlines()[1:])
    assert float(rows["posted_price"]) == 0.25
    assert float(rows["linear"]) == pytest.approx(0.3333, abs=1e-4)
    assert float(rows["maximal"]) == pytest.approx(0.3716, abs=1e-4)


def test_worst_case_commands(capsys):
    code, out, _ = run(capsys, "worst-case", "--mu", "0.2", "--points", "3")
    assert code == 0
    q = serialization.loads(out)
    assert q.mean()[0] == pytest.approx(0.2)
    code, out, _ = run(capsys, "worst-case", "--mu", "0.4", "--agents", "2")
    assert code == 0
    assert json.loads(out)["lemma"]["bound"] <= 0.4
    code, out, _ = run(capsys, "worst-case", "--mu", "0.4", "--agents", "3")
    assert json.loads(out)["bound"] == 0.4


def test_frontier(capsys):
    code, out, _ = run(capsys, "frontier", "--moments", "0.5", "--grid", "51")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(1 / 3, abs=2e-3)
    assert run(capsys, "frontier", "--moments", "0.5,0.1")[0] == 1


def test_multi_agent_and_verify_table(tmp_path, capsys):
    f = tmp_path / "t.json"
    assert run(capsys, "multi-agent", "--agents", "3", "--grid", "5", "--out", str(f))[0] == 0
    assert run(capsys, "verify", str(f))[0] == 0
    code, out, _ = run(capsys, "multi-agent", "--agents", "3", "--grid", "5", "--format", "csv", "--fix", "2=1")
    assert code == 0
    assert out.startswith("nu_a,nu_b,x1,p1,pm1\n")
    assert run(capsys, "multi-agent", "--agents", "2", "--grid", "6", "--flags", "bogus_flag")[0] == 1
    assert run(capsys, "multi-agent", "--agents", "3", "--grid", "40")[0] == 1


def test_sweeps(capsys):
    code, out, _ = run(capsys, "sweep", "--what", "zstar", "--from", "0.1", "--to", "0.9", "--steps", "5")
    assert code == 0
    assert len(out.splitlines()) == 6
    code, out, _ = run(capsys, "sweep", "--what", "mu-prime", "--from", "0", "--to", "1", "--steps", "11")
    assert code == 0
    assert out.splitlines()[-2].endswith(",nan")  # t = 0.9 lies in the infeasible gap
    assert run(capsys, "sweep", "--what", "zstar", "--from", "0.9", "--to", "0.1", "--steps", "5")[0] == 1


def test_svg_output_is_reproducible(tmp_path, capsys):
    outs = []
    for k in range(2):
        svg = tmp_path / f"run{k}" / "mech.svg"
        svg.parent.mkdir()
        assert run(capsys, "synth", "--mu", "0.5", "--rule", "maximal", "--format", "svg", "--out", str(svg))[0] == 0
        outs.append((svg.read_bytes(), svg.with_suffix(".json").read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][0].startswith(b"<?xml")


def test_figure_flag(tmp_path, capsys):
    png = tmp_path / "g.png"
    code, out, _ = run(capsys, "experiment", "guarantees", "--figure", str(png))
    assert code == 0
    assert png.read_bytes()[:4] == b"\x89PNG"
    assert out.startswith("mu,rho,c,b,z_approx")


def test_help_has_example():
    r = subprocess.run([sys.executable, "-m", "robustinspect.cli", "synth", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "example:" in r.stdout
