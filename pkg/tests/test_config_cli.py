import json

import numpy as np
import pytest

from thermogas.cli import main
from thermogas.config import ConfigError, load_config, parse_config

BASE = {
    "grid": {"d": 1, "n": 32, "L": 6.283185307179586},
    "params": {"kappa1": 1.0, "kappa2": 1.0, "kappa3_bar": 1.0, "kappa3_profile": "zero"},
    "initial": {"preset": "zero"},
    "time": {"T": 0.2, "dt": 0.01},
}


def write_config(tmp_path, overrides=None, name="config.json"):
    cfg = json.loads(json.dumps(BASE))
    for key, value in (overrides or {}).items():
        if value is None:
            cfg.pop(key, None)
        else:
            cfg[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


# --------------------------------------------------------------- validation


def test_parse_valid_config():
    cfg = parse_config(json.loads(json.dumps(BASE)))
    assert cfg.grid.n == 32
    assert cfg.params.kappa1 == 1.0
    assert cfg.time["scheme"] == "ETDRK2"


def test_unknown_key_is_named():
    raw = json.loads(json.dumps(BASE))
    raw["params"]["kappa9"] = 1.0
    with pytest.raises(ConfigError, match="params.kappa9"):
        parse_config(raw)
    raw = json.loads(json.dumps(BASE))
    raw["extra_section"] = {}
    with pytest.raises(ConfigError, match="extra_section"):
        parse_config(raw)


def test_negative_kappa1_names_key():
    raw = json.loads(json.dumps(BASE))
    raw["params"]["kappa1"] = -1.0
    with pytest.raises(ConfigError, match="kappa1"):
        parse_config(raw)


def test_missing_profile_and_alpha():
    raw = json.loads(json.dumps(BASE))
    del raw["params"]["kappa3_profile"]
    with pytest.raises(ConfigError, match="kappa3_profile"):
        parse_config(raw)
    raw = json.loads(json.dumps(BASE))
    raw["params"]["kappa3_profile"] = "tanh"
    with pytest.raises(ConfigError, match="kappa3_alpha"):
        parse_config(raw)


def test_bad_grid_reported():
    raw = json.loads(json.dumps(BASE))
    raw["grid"]["n"] = 12
    with pytest.raises(ConfigError, match="power of two"):
        parse_config(raw)


def test_initial_presets_validated():
    raw = json.loads(json.dumps(BASE))
    raw["initial"] = {"preset": "single_mode", "k": [1, 2], "amplitude": 0.1}
    with pytest.raises(ConfigError, match="initial.k"):
        parse_config(raw)
    raw["initial"] = {"preset": "warm_start"}
    with pytest.raises(ConfigError, match="preset"):
        parse_config(raw)


def test_time_validation():
    raw = json.loads(json.dumps(BASE))
    raw["time"]["dt"] = 1.0
    with pytest.raises(ConfigError, match="dt"):
        parse_config(raw)
    raw = json.loads(json.dumps(BASE))
    raw["time"]["scheme"] = "RK4"
    with pytest.raises(ConfigError, match="scheme"):
        parse_config(raw)


def test_load_config_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(path)


# ---------------------------------------------------------------------- CLI


def test_cli_simulate_zero_preset(tmp_path, capsys):
    out = tmp_path / "out"
    code = main([
        "simulate", "--config", write_config(tmp_path), "--out", str(out), "--no-plots",
    ])
    assert code == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("time,h2_a")
    values = np.array([line.split(",")[1:7] for line in lines[1:]], dtype=float)
    assert np.abs(values).max() == 0.0
    assert (out / "energy.csv").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, {"params": {
        "kappa1": -1.0, "kappa2": 1.0, "kappa3_bar": 1.0, "kappa3_profile": "zero"}})
    code = main(["simulate", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "kappa1" in capsys.readouterr().err


def test_cli_rejects_non_unit_equilibrium_for_stepping(tmp_path, capsys):
    path = write_config(tmp_path, {"params": {
        "kappa1": 1.0, "kappa2": 1.0, "kappa3_bar": 1.0, "kappa3_profile": "zero",
        "equilibrium": [2.0, 1.0]}})
    code = main(["simulate", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "equilibrium" in capsys.readouterr().err


def test_cli_simulate_writes_plots_and_snapshots(tmp_path):
    cfg = write_config(tmp_path, {
        "initial": {"preset": "single_mode", "k": [1], "amplitude": 0.001},
        "time": {"T": 0.1, "dt": 0.01, "snapshot_stride": 5, "write_snapshots": True},
    })
    out = tmp_path / "out"
    code = main(["simulate", "--config", cfg, "--out", str(out)])
    assert code == 0
    assert (out / "trajectory.png").exists()
    assert (out / "a_000000.snap").exists()
    from thermogas.snapshots import load_snapshot

    field, time = load_snapshot(out / "a_000001.snap")
    assert time == pytest.approx(0.05)
    assert field.grid.n == 32


def test_cli_simulate_deterministic_with_seed(tmp_path):
    cfg = write_config(tmp_path, {
        "initial": {"preset": "random_band", "band": 2, "amplitude": 0.001},
        "time": {"T": 0.1, "dt": 0.01},
    })
    outs = []
    for name in ("o1", "o2"):
        out = tmp_path / name
        assert main(["simulate", "--config", cfg, "--out", str(out),
                     "--seed", "42", "--no-plots"]) == 0
        outs.append((out / "trajectory.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_besov(tmp_path):
    cfg = write_config(tmp_path, {
        "initial": {"preset": "single_mode", "k": [1], "amplitude": 1.0},
        "besov": {"s": 1.5, "p": 2.0, "r": 1.0},
    })
    out = tmp_path / "out"
    assert main(["besov", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "besov.png").exists()
    lines = (out / "besov_a.csv").read_text().splitlines()
    assert lines[0] == "j,weighted_block_norm,cumulative_norm"
    total = float(lines[-1].rsplit(",", 1)[-1])
    from thermogas.grid import RealField, make_grid
    from thermogas.integrators import BESOV_CRITICAL
    from thermogas.lp import besov_norm

    grid = make_grid(1, 32, 2 * np.pi)
    expected = besov_norm(RealField(grid, np.cos(grid.x)), BESOV_CRITICAL)
    assert total == pytest.approx(expected, rel=1e-12)


def test_cli_scaling(tmp_path):
    cfg = write_config(tmp_path, {
        "initial": {"preset": "single_mode", "k": [1], "amplitude": 0.001},
        "time": {"T": 0.05, "dt": 0.001},
        "scaling": {"lam": 2},
    })
    out = tmp_path / "out"
    assert main(["scaling", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "scaling.csv").read_text().splitlines()
    assert lines[0].startswith("lam,discrepancy")
    assert float(lines[1].split(",")[1]) <= 1e-6


def test_cli_fixedpoint(tmp_path):
    cfg = write_config(tmp_path, {
        "initial": {"preset": "single_mode", "k": [1], "amplitude": 0.0005},
        "time": {"T": 0.2, "dt": 0.01},
        "fixedpoint": {"tol": 1e-11, "max_iter": 20},
    })
    out = tmp_path / "out"
    assert main(["fixedpoint", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "fixedpoint.png").exists()
    lines = (out / "fixedpoint.csv").read_text().splitlines()
    assert lines[0] == "iteration,e_norm,difference,ratio"
    assert "converged" in (out / "fixedpoint_summary.txt").read_text()


def test_cli_verify_subset_and_exit_codes(tmp_path, capsys, monkeypatch):
    out = tmp_path / "out"
    assert main(["verify", "--out", str(out), "--criteria", "1", "--seed", "0"]) == 0
    captured = capsys.readouterr().out
    assert "PASS" in captured and "helmholtz-closure" in captured
    assert (out / "verify.csv").read_text().startswith("criterion,name,status,details")

    # a failing criterion must drive exit code 3
    import thermogas.acceptance as acceptance

    monkeypatch.setattr(
        acceptance, "CRITERIA", ((1, "always-fails", lambda seed: (False, "forced")),)
    )
    assert main(["verify", "--out", str(tmp_path / "o2"), "--criteria", "1"]) == 3


def test_cli_verify_rejects_bad_criteria(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path / "o"), "--criteria", "99"]) == 2
    assert "criterion indices" in capsys.readouterr().err
    assert main(["verify", "--out", str(tmp_path / "o"), "--criteria", "abc"]) == 2


def test_cli_breach_exit_code(tmp_path, capsys):
    # a-form stepping from data violating the floor stops immediately: exit 1
    cfg = write_config(tmp_path, {
        "params": {"kappa1": 1.0, "kappa2": 1.0, "kappa3_bar": 1.0,
                   "kappa3_profile": "zero", "eps_a": 0.9},
        "initial": {"preset": "single_mode", "k": [1], "amplitude": 0.5, "component": "a"},
        "time": {"T": 0.1, "dt": 0.01, "formulation": "a_form"},
    })
    code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "out"), "--no-plots"])
    assert code == 1
    assert "floor" in capsys.readouterr().err
