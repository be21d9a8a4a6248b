import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from dislab import cli
from dislab.config import load_config
from dislab.errors import SolverFailure


def write(tmp_path, body, name="run.toml"):
    p = tmp_path / name
    p.write_text(body)
    return str(p)


def dis(*items, eps=0.05):
    rows = ",\n".join(f"  {{ x = {x}, y = {y}, b = {b} }}" for x, y, b in items)
    return f"[system]\nid = \"t\"\nepsilon0 = {eps}\ndislocations = [\n{rows}\n]\n"


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, command, body, *extra):
    out = tmp_path / "out"
    code = cli.main([command, "--config", write(tmp_path, body), "--out", str(out), *extra])
    return code, out


def test_energy_center_dislocation(tmp_path):
    code, out = run(tmp_path, "energy", dis((0, 0, 1.0)) + "[energy]\neps_ladder = [0.02, 0.01]\n")
    assert code == 0
    rows = read(out / "energy.csv")
    assert list(rows[0]) == cli.ENERGY_COLUMNS
    assert abs(float(rows[0]["U_total"])) < 1e-10
    assert [r["param"] for r in rows] == ["R", "eps", "eps"]
    assert len({r["core_coefficient"] for r in rows}) == 1
    for r in rows[1:]:
        assert abs(float(r["residual"])) < 1e-9


def test_energy_missing_b(tmp_path, capsys):
    body = "[system]\nepsilon0 = 0.05\ndislocations = [\n  { x = 0.1, y = 0.2 },\n]\n"
    code, _ = run(tmp_path, "energy", body)
    assert code == 1
    err = capsys.readouterr().err
    assert "missing field 'b'" in err and "run.toml:4" in err


def test_forces_image_force_and_symmetry(tmp_path):
    code, out = run(tmp_path, "forces", dis((0.5, 0.0, 1.0)))
    assert code == 0
    rows = read(out / "forces.csv")
    assert list(rows[0]) == cli.FORCE_COLUMNS
    assert {r["route"] for r in rows} == {"contour", "explicit"}
    for r in rows:
        assert float(r["f_x"]) == pytest.approx(1 / (3 * np.pi), abs=1e-6)
    code, out = run(tmp_path, "forces", dis((0.3, 0.0, 1.0), (-0.3, 0.0, 1.0)))
    rows = [r for r in read(out / "forces.csv") if r["route"] == "explicit"]
    assert float(rows[0]["f_x"]) == pytest.approx(-float(rows[1]["f_x"]), abs=1e-14)


def test_forces_discrepancy_gate(tmp_path, capsys):
    code, _ = run(tmp_path, "forces", dis((0.5, 0.1, 1.0)) + "[forces]\nmax_discrepancy = 1e-300\n")
    assert code == 2
    assert "route discrepancy" in capsys.readouterr().err


def test_flow_cases(tmp_path):
    code, out = run(tmp_path, "flow", dis((0, 0, 1.0)))
    rows = read(out / "trajectory.csv")
    assert code == 0 and len(rows) == 2
    assert (rows[0]["x_0"], rows[0]["y_0"]) == (rows[1]["x_0"], rows[1]["y_0"])
    assert rows[-1]["reason"] == "force-threshold" and rows[0]["reason"] == ""
    code, out = run(tmp_path, "flow", dis((0.5, 0.0, 1.0)) + "[flow]\ndt = 0.05\nmax_steps = 500\n")
    assert read(out / "trajectory.csv")[-1]["reason"] == "boundary-approach"
    code, out = run(tmp_path, "flow", dis((0.15, 0.0, 1.0), (-0.15, 0.0, -1.0), eps=0.03)
                    + "[flow]\ndt = 0.002\nmax_steps = 500\n")
    assert read(out / "trajectory.csv")[-1]["reason"] == "near-collision"


def test_verify_suites(tmp_path, capsys):
    out = tmp_path / "v"
    assert cli.main(["verify", "--suite", "annulus", "--suite", "gradU", "--out", str(out)]) == 0
    rows = read(out / "verify.csv")
    assert list(rows[0]) == cli.VERIFY_COLUMNS
    assert {r["passed"] for r in rows} == {"True"}
    assert any(r["check"].startswith("annulus") for r in rows)
    assert any(r["check"].startswith("gradU") for r in rows)
    assert cli.main(["verify", "--suite", "nope", "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "unknown suite" in err and "annulus" in err


def test_verify_seed_from_env(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("DISLAB_SEED", "11")
    cli.main(["verify", "--suite", "annulus", "--out", str(a)])
    cli.main(["verify", "--suite", "annulus", "--out", str(b)])
    assert (a / "verify.csv").read_bytes() == (b / "verify.csv").read_bytes()
    monkeypatch.setenv("DISLAB_SEED", "x")
    assert cli.main(["verify", "--suite", "annulus", "--out", str(a)]) == 1


def test_dump_config_round_trip(tmp_path):
    body = dis((0.3, 0.1, 1.0), (-0.2, 0.2, -2.0)) + "[flow]\ndt = 0.003\n"
    out = tmp_path / "d"
    assert cli.main(["dump-config", "--config", write(tmp_path, body), "--out", str(out)]) == 0
    first = load_config(write(tmp_path, body))
    again = load_config(out / "config.toml")
    assert again == cli.with_overrides(first, out_dir=str(out))


def test_outputs_are_deterministic(tmp_path):
    body = dis((0.3, 0.1, 1.0), (-0.2, 0.2, -2.0)) + "[flow]\nmax_steps = 5\n"
    blobs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        for cmd in ("energy", "forces", "flow"):
            assert cli.main([cmd, "--config", write(tmp_path, body), "--out", str(out)]) == 0
        blobs.append([(out / f).read_bytes() for f in ("energy.csv", "forces.csv",
                                                       "trajectory.csv")])
    assert blobs[0] == blobs[1]


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise SolverFailure("forced")

    monkeypatch.setattr(cli.Problem, "solve", boom)
    code, _ = run(tmp_path, "energy", dis((0.3, 0.0, 1.0)))
    assert code == 3
    assert "SolverFailure" in capsys.readouterr().err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["energy"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["launch"])
    assert exc.value.code == 1
    assert cli.main(["verify", "--suite", "annulus", "--threads", "0"]) == 1


def test_console_script(tmp_path):
    cfg = write(tmp_path, dis((0.5, 0.0, 1.0)))
    res = subprocess.run([sys.executable, "-m", "dislab.cli", "forces", "--config", cfg,
                          "--out", str(tmp_path / "s")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "s" / "forces.csv").exists()
