import json
import subprocess
import sys
from pathlib import Path

import pytest

from patsim.cli import main
from patsim.scenario import ScenarioError, load_scenario, load_toml, parse_scenario

REPO = Path(__file__).resolve().parents[1]
SCENARIOS = REPO / "scenarios"

ALL_SCENARIOS = sorted(p.name for p in SCENARIOS.glob("*.toml")
                       if not p.name.startswith("common"))


@pytest.mark.parametrize("name", ALL_SCENARIOS)
def test_all_shipped_scenarios_validate(name):
    sc = load_scenario(str(SCENARIOS / name))
    assert sc.name == name.removesuffix(".toml")


def test_include_mechanism_merges_blocks(tmp_path):
    (tmp_path / "base.toml").write_text(
        "[model]\nmode = 'PlainPAT'\n[space]\nn_trunc = 4\n")
    (tmp_path / "child.toml").write_text(
        "include = ['base.toml']\nname = 'x'\ntask = 'constraints'\n[space]\nn_trunc = 2\n")
    data = load_toml(str(tmp_path / "child.toml"))
    assert data["model"]["mode"] == "PlainPAT"
    assert data["space"]["n_trunc"] == 2


def test_missing_field_names_the_path():
    with pytest.raises(ScenarioError, match=r"evolution\.t_final"):
        parse_scenario({
            "name": "x", "task": "evolve",
            "model": _tiny_model_cfg(),
            "space": {"n_trunc": 2, "sector": 1},
            "initial": {"kind": "single_particle", "site": [0, 0]},
            "evolution": {"samples": 10},
        })


def test_unknown_top_level_key_rejected():
    with pytest.raises(ScenarioError, match="unknown top-level field"):
        parse_scenario({"name": "x", "task": "constraints", "ions": {}, "bogus": 1})


def test_bad_engine_named():
    cfg = {
        "name": "x", "task": "evolve", "model": _tiny_model_cfg(),
        "space": {"n_trunc": 2, "sector": 1},
        "initial": {"kind": "single_particle", "site": [0, 0]},
        "evolution": {"t_final": 10.0, "engine": "warp"},
    }
    with pytest.raises(ScenarioError, match=r"evolution\.engine"):
        parse_scenario(cfg)


def _tiny_model_cfg():
    return {
        "mode": "PlainPAT",
        "lattice": {"dims": [2, 1], "spacings": [1.0, 1.0],
                    "coupling_law": {"law": "explicit",
                                     "pairs": [{"i": [1, 0], "j": [0, 0], "j_t": 0.01}]}},
        "drive": {"delta_omega": 0.0, "eta_d": 0.0, "omega_d": 0.0},
    }


def _write_quick_evolve(tmp_path, name="quick"):
    cfg = f"""
name = "{name}"
task = "evolve"

[model]
mode = "PlainPAT"

[model.lattice]
dims = [2, 1]
spacings = [1.0, 1.0]

[model.lattice.coupling_law]
law = "explicit"
pairs = [{{ i = [1, 0], j = [0, 0], j_t = 0.01 }}]

[model.drive]
delta_omega = 0.5
eta_d = 1.0
omega_d = 0.5
phi1 = 3.141592653589793
r = 1

[space]
n_trunc = 4
sector = 1

[initial]
kind = "single_particle"
site = [0, 0]

[evolution]
t_final = 100.0
samples = 50
engine = "effective"

[output]
csv = "{name}.csv"
"""
    path = tmp_path / f"{name}.toml"
    path.write_text(cfg)
    return path


def test_run_evolve_writes_csv_and_manifest(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = _write_quick_evolve(tmp_path)
    assert main(["run", str(config)]) == 0
    lines = (tmp_path / "quick.csv").read_text().splitlines()
    assert lines[0] == "time,n_0_0_effective,n_1_0_effective"
    assert len(lines) == 51
    manifest = json.loads((tmp_path / "quick_manifest.json").read_text())
    assert manifest["task"] == "evolve"
    assert manifest["versions"]["patsim"]
    assert manifest["resolved_config"]["model"]["drive"]["omega_d"] == 0.5
    assert manifest["wall_time_s"] > 0


def test_run_is_bit_deterministic(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = _write_quick_evolve(tmp_path)
    assert main(["run", str(config), "--seed", "7"]) == 0
    first = (tmp_path / "quick.csv").read_bytes()
    assert main(["run", str(config), "--seed", "7"]) == 0
    assert (tmp_path / "quick.csv").read_bytes() == first


def test_run_stdout_mode(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    config = _write_quick_evolve(tmp_path)
    assert main(["run", str(config), "--stdout"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("time,n_0_0_effective")
    assert not (tmp_path / "quick.csv").exists()


def test_run_engine_override(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = _write_quick_evolve(tmp_path)
    assert main(["run", str(config), "--engine", "both"]) == 0
    header = (tmp_path / "quick.csv").read_text().splitlines()[0]
    assert "n_0_0_full" in header and "n_0_0_effective" in header


def test_validate_exit_codes(tmp_path, capsys):
    good = _write_quick_evolve(tmp_path, name="ok")
    assert main(["validate", str(good)]) == 0
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "b"\ntask = "evolve"\n')
    assert main(["validate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "model" in err
    assert main(["validate", str(tmp_path / "missing.toml")]) == 2


def test_run_validation_failure_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "b"\ntask = "sweep"\n[model]\n')
    assert main(["run", str(bad)]) == 2


def test_constraints_command(tmp_path, capsys):
    assert main(["constraints", str(SCENARIOS / "ions_table1.toml"),
                 "--json", str(tmp_path / "r.json")]) == 0
    out = capsys.readouterr().out
    assert "overall: pass" in out
    payload = json.loads((tmp_path / "r.json").read_text())
    assert payload["passed"] is True


def test_palette_command(capsys):
    assert main(["palette", "--phi1", "0.7", "--phi2", "1.1"]) == 0
    out = capsys.readouterr().out
    assert "9 distinct fluxes" in out
    assert out.count("\n") >= 18


def test_decorate_scenario_runs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(SCENARIOS / "fig6g.toml")]) == 0
    payload = json.loads((tmp_path / "out/fig6g_flux.json").read_text())
    fluxes = list(payload.values())
    zeros = [v for v in fluxes if abs(v) < 1e-9]
    assert len(fluxes) == 9 and len(zeros) == 1


def test_flux_map_scenario_runs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(SCENARIOS / "nonabelian_flux.toml")]) == 0
    payload = json.loads((tmp_path / "out/nonabelian_flux.json").read_text())
    assert set(payload) == {"x", "y"}
    for key, vx in payload["x"].items():
        assert vx == pytest.approx(-payload["y"][key], abs=1e-12)


def test_sweep_scenario_parallel_jobs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = f"""
name = "mini_sweep"
task = "sweep"
include = ["{(SCENARIOS / 'common_two_site.toml').as_posix()}"]

[model.drive]
delta_omega = 0.5
eta_d = 1.0
omega_d = 0.5
phi1 = 3.141592653589793
r = 1

[sweep]
parameter = "phi1"
start = 0.0
stop = 6.283185307179586
points = 5
observable = "n_1_0"
statistic = "max"
horizon = "fixed"
t_star = 150.0
samples = 120

[output]
csv = "mini.csv"
"""
    path = tmp_path / "mini.toml"
    path.write_text(cfg)
    assert main(["run", str(path), "--jobs", "2"]) == 0
    rows = (tmp_path / "mini.csv").read_text().splitlines()
    assert rows[0] == "phi1,n_1_0_full,n_1_0_effective,t_star"
    assert len(rows) == 6
    assert main(["run", str(path), "--jobs", "1"]) == 0
    # parallel dispatch must not change a single byte
    assert (tmp_path / "mini.csv").read_text().splitlines() == rows


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "patsim.cli", "palette",
                           "--phi1", "3.141592653589793", "--phi2", "3.141592653589793"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "2 distinct fluxes" in proc.stdout
