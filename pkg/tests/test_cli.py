import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from billiardlab import cli


def run_cli(tmp_path, command, config=None, extra=()):
    args = [command, "--out", str(tmp_path / "out")]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"version": 1, **config}))
        args += ["--config", str(path)]
    return cli.main(args + list(extra))


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_boundary_info(tmp_path):
    assert run_cli(tmp_path, "boundary-info", {"boundary": "circle"}) == 0
    info = json.loads((tmp_path / "out" / "boundary.json").read_text())
    assert info["curve"]["is_circle"]
    np.testing.assert_allclose(info["radius_of_curvature_samples"], 1 / (2 * np.pi), rtol=1e-14)


def test_phase_circle_is_foliated(tmp_path):
    assert run_cli(tmp_path, "phase", {"boundary": "circle", "phase_orbits": 3, "phase_steps": 50}) == 0
    rows = read_csv(tmp_path / "out" / "phase.csv")
    assert list(rows[0]) == ["orbit", "step", "x", "l"]
    for k in range(3):
        ls = np.array([float(r["l"]) for r in rows if r["orbit"] == str(k)])
        assert np.ptp(ls) <= 1e-12 * ls[0]


def test_phase_oval_bands_are_flat(tmp_path):
    cfg = {"phase_orbits": 3, "phase_steps": 300, "phase_l_min": 1e-5, "phase_l_max": 1e-4}
    assert run_cli(tmp_path, "phase", cfg) == 0
    rows = read_csv(tmp_path / "out" / "phase.csv")
    for k in range(3):
        ls = np.array([float(r["l"]) for r in rows if r["orbit"] == str(k)])
        assert np.ptp(ls) < 1e-3 * ls.mean()


def test_phase_billiard_coordinates(tmp_path):
    cfg = {"phase_coords": "billiard", "phase_orbits": 2, "phase_steps": 5}
    assert run_cli(tmp_path, "phase", cfg) == 0
    assert list(read_csv(tmp_path / "out" / "phase.csv")[0]) == ["orbit", "step", "s", "v"]


def test_config_errors(tmp_path, capsys):
    assert run_cli(tmp_path, "boundary-info", {"boundary": "profile", "profile_file": str(tmp_path / "nope.json")}) == 2
    assert "config error" in capsys.readouterr().err
    assert run_cli(tmp_path, "boundary-info", {"bogus": 1}) == 2
    assert run_cli(tmp_path, "boundary-info", {"boundary": "oval", "oval_eps": 1.1}) == 2
    (tmp_path / "v0.json").write_text(json.dumps({"boundary": "circle"}))
    assert cli.main(["boundary-info", "--config", str(tmp_path / "v0.json"), "--out", str(tmp_path)]) == 2
    assert run_cli(tmp_path, "verify", {"kappa": 0.3}, ["--stage", "main-theorem"]) == 2
    assert run_cli(tmp_path, "mather", {"omega_min": 0.1, "omega_max": 0.1001, "omega_count": 1}) == 2


def test_profile_file_boundary(tmp_path):
    (tmp_path / "p.json").write_text(json.dumps({"cos": [1.0, 0.0, 0.1], "sin": [0, 0, 0, 0.05]}))
    assert run_cli(tmp_path, "boundary-info", {"boundary": "profile", "profile_file": str(tmp_path / "p.json")}) == 0


def test_verify_expansion_on_circle(tmp_path):
    assert run_cli(tmp_path, "verify", {"boundary": "circle"}, ["--stage", "expansion"]) == 0
    rep = json.loads((tmp_path / "out" / "verify_expansion.json").read_text())
    assert rep["passed"] and rep["min_slope"] >= 3.9


@pytest.mark.slow
def test_verify_positivity(tmp_path):
    assert run_cli(tmp_path, "verify", {"boundary": "circle"}, ["--stage", "positivity"]) == 0
    rep = json.loads((tmp_path / "out" / "verify_positivity.json").read_text())
    assert rep["margin"] > 0 and rep["threshold"] == 0.5


def test_mather_circle(tmp_path):
    cfg = {"boundary": "circle", "omega_min": 2e-3, "omega_max": 0.1, "omega_count": 25, "alpha_count": 10,
           "q_cap": 40, "resonances": [0.5]}
    assert run_cli(tmp_path, "mather", cfg) == 0
    rep = json.loads((tmp_path / "out" / "mather_report.json").read_text())
    assert rep["beta_convex"]
    assert rep["degeneracy"]["slope"] == pytest.approx(3.0, abs=0.02)
    assert rep["circle"]["beta_max_abs_error"] < 1e-12
    assert rep["gaps"][0]["status"] == "degenerate: invariant curve"
    assert list(read_csv(tmp_path / "out" / "beta.csv")[0]) == ["omega", "beta", "err"]
    assert list(read_csv(tmp_path / "out" / "mather_set_0.csv")[0]) == ["x", "momentum", "gap_flag"]


def test_mather_oval_gap_report(tmp_path):
    cfg = {"omega_min": 2e-3, "omega_max": 0.1, "omega_count": 10, "alpha_count": 5, "q_cap": 60,
           "resonances": [0.5]}
    assert run_cli(tmp_path, "mather", cfg) == 0
    gap = json.loads((tmp_path / "out" / "mather_report.json").read_text())["gaps"][0]
    assert gap["status"] == "gap" and gap["largest_gap"] > 0.2


def test_help_documents_columns():
    out = subprocess.run([sys.executable, "-m", "billiardlab", "mather", "--help"], capture_output=True,
                         text=True, check=True).stdout
    assert "omega,beta,err" in out and "x,momentum,gap_flag" in out


def test_json_writer_is_canonical(tmp_path):
    cli.write_json({"b": [1.0, 0.1], "a": {"z": True, "y": None}}, tmp_path / "x.json")
    text = (tmp_path / "x.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text
    assert json.loads(text) == {"a": {"y": None, "z": True}, "b": [1.0, 0.1]}
