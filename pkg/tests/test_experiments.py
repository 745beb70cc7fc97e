import json
import math

import numpy as np
import pytest

from cavity_cz import InvalidArgumentError
from cavity_cz.cli import main
from cavity_cz.experiments import (OMEGA_G, ResumableCSV, SweepConfig, f1_sweep, load_config,
                                   locate_optimum, param_key, run_points, summarize_gate_sweep,
                                   write_manifest)


def _square(p):
    return {"x": p["x"], "y": p["x"] ** 2}


def _exploding(p):
    raise AssertionError("cached points must not be recomputed")


SMALL_F1 = {"k": 2, "dt_over_tau": 0.02, "gamma_over_omega": [3.0, 6.0],
            "gamma_L_over_omega": [0.0, 1e-3], "T_over_tau": [8.0]}


def test_config_defaults_and_overrides():
    cfg = SweepConfig.from_mapping({"k": 2}, workers=None, dt_over_tau=0.02)
    assert cfg.k == 2 and cfg.workers == 1 and cfg.dt_over_tau == 0.02
    assert SweepConfig.from_mapping(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [
    {"k": 4},
    {"dt_over_tau": 0.05},
    {"T_over_tau": [14.405]},
    {"gamma_over_omega": []},
    {"gamma_over_omega": [-1.0]},
    {"gamma_L_over_omega": [-1e-3]},
    {"eta_policy": "sometimes"},
    {"eta_policy": 1.5},
    {"workers": 0},
    {"colour": "red"},
])
def test_config_validation(bad):
    with pytest.raises(InvalidArgumentError):
        SweepConfig.from_mapping(bad)


def test_fixed_eta_policy_is_parsed():
    assert SweepConfig(eta_policy="0.9").eta_policy == 0.9


def test_load_config_yaml_and_json(tmp_path):
    (tmp_path / "a.yaml").write_text("k: 2\nT_over_tau: [8, 10]\n")
    (tmp_path / "b.json").write_text(json.dumps({"k": 3}))
    (tmp_path / "c.yaml").write_text("- 1\n- 2\n")
    (tmp_path / "d.yaml").write_text("k: [1\n")
    (tmp_path / "e.yaml").write_text("")
    assert load_config(tmp_path / "a.yaml") == {"k": 2, "T_over_tau": [8, 10]}
    assert load_config(tmp_path / "b.json") == {"k": 3}
    assert load_config(tmp_path / "e.yaml") == {}
    for name in ("c.yaml", "d.yaml"):
        with pytest.raises(InvalidArgumentError):
            load_config(tmp_path / name)


def test_param_key_ignores_order():
    assert param_key({"a": 1, "b": 2.0}) == param_key({"b": 2.0, "a": 1})
    assert param_key({"a": 1}) != param_key({"a": 2})


def test_run_points_resumes(tmp_path):
    tasks = [{"x": float(i)} for i in range(5)]
    path = tmp_path / "r.csv"
    rows = run_points(tasks[:3], _square, path, ["x", "y"])
    assert [r["y"] for r in rows] == [0.0, 1.0, 4.0]
    rows = run_points(tasks, _square, path, ["x", "y"])
    assert [r["y"] for r in rows] == [0.0, 1.0, 4.0, 9.0, 16.0]
    again = run_points(tasks, _exploding, path, ["x", "y"])
    assert again == rows


def test_partial_file_is_resumed(tmp_path):
    path = tmp_path / "r.csv"
    tasks = [{"x": float(i)} for i in range(3)]
    store = ResumableCSV(path, ["x", "y"])
    store.append(param_key(tasks[1]), _square(tasks[1]))
    rows = run_points(tasks, _square, path, ["x", "y"])
    assert [r["x"] for r in rows] == [0.0, 1.0, 2.0]
    lines = path.read_text().splitlines()
    assert len(lines) == 4


def test_changed_columns_start_over(tmp_path, caplog):
    path = tmp_path / "r.csv"
    run_points([{"x": 1.0}], _square, path, ["x", "y"])
    run_points([{"x": 1.0}], _square, path, ["y", "x"])
    assert "different columns" in caplog.text


def test_f1_sweep_deterministic_across_workers(tmp_path):
    a = SweepConfig.from_mapping(SMALL_F1)
    b = SweepConfig.from_mapping(SMALL_F1, workers=2)
    f1_sweep(a, tmp_path / "a.csv")
    f1_sweep(b, tmp_path / "b.csv")
    f1_sweep(a, tmp_path / "c.csv")
    text = (tmp_path / "a.csv").read_bytes()
    assert text == (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()
    assert b"np.float64" not in text


def test_f1_sweep_marks_infeasible_points(tmp_path):
    cfg = SweepConfig.from_mapping(dict(SMALL_F1, k=3, gamma_over_omega=[1.0, 30.0],
                                        gamma_L_over_omega=[0.0]))
    rows = f1_sweep(cfg, tmp_path / "f.csv")
    assert [r["status"] for r in rows] == ["infeasible", "ok"]
    assert math.isnan(rows[0]["F1"]) and rows[1]["F1"] > 0.99


def test_locate_optimum_on_parabola_in_log_t():
    T = np.array([5, 7, 10, 14, 20, 28, 40.0])
    x0 = math.log(12.0)
    err = 1e-3 + 2e-3 * (np.log(T) - x0) ** 2
    chi = 2 * math.pi / T
    opt = locate_optimum(T, err, 0.5 * err, chi, 1e-4)
    assert opt.interior
    assert opt.T_over_tau == pytest.approx(12.0, rel=1e-9)
    assert opt.error == pytest.approx(1e-3, rel=1e-9)
    assert opt.error_cond == pytest.approx(5e-4, rel=1e-9)
    assert opt.chi == pytest.approx(2 * math.pi / 12.0, rel=1e-9)
    assert opt.chi_over_gamma_L == pytest.approx(opt.chi / (1e-4 * OMEGA_G))


def test_locate_optimum_at_grid_edge():
    opt = locate_optimum([5, 10, 20], [3e-3, 2e-3, 1e-3], [1, 1, 1], [1, 1, 1], 1e-5)
    assert not opt.interior and opt.T_over_tau == 20


SYNTH_T = np.exp(np.linspace(math.log(6), math.log(90), 40))


def _synthetic_rows(b=2.0, ratio=4.0, p=2.0, a=3.0):
    """Lossless error a T^-p; with loss, err = a T^-p + b gamma_L T (chi = 2 pi / T)."""
    rows = []
    for gl in [0.0, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3]:
        for T in SYNTH_T:
            loss = b * gl * OMEGA_G * T
            err = a * T ** -p + loss
            rows.append({"status": "ok", "gamma_over_omega": 30.0, "gamma_L_over_omega": gl,
                         "T_over_tau": float(T), "F11": 1 - err,
                         "F11_cond": 1 - (a * T ** -p + loss / ratio),
                         "chi": 2 * math.pi / T})
    return rows


def test_summary_recovers_synthetic_laws():
    b, p = 2.0, 2.0
    s = summarize_gate_sweep(_synthetic_rows(b=b, p=p), 3, 30.0)
    assert s.lossless_exponent == pytest.approx(-p, abs=1e-9)
    assert s.lossless_r_squared == pytest.approx(1.0)
    assert s.slope == pytest.approx(-1.0, abs=0.02)
    assert len(s.optima) == 5 and all(o["interior"] for o in s.optima)
    # at the optimum err = (1 + 1/p) b gamma_L T*, and chi T* = 2 pi
    assert s.C == pytest.approx((1 + 1 / p) * b * 2 * math.pi, rel=0.02)
    assert s.conditional_ratio > 1
    assert s.best_lossless_error_below_T30 == pytest.approx(3.0 / SYNTH_T[SYNTH_T < 30].max() ** 2)


def test_manifest(tmp_path):
    path = write_manifest(tmp_path, "demo", {"k": 3}, {"note": 1})
    data = json.loads(path.read_text())
    assert data["command"] == "demo" and data["config"] == {"k": 3} and data["note"] == 1
    assert "tolerances" in data and "version" in data


# ---------------------------------------------------------------- CLI


def test_cli_materials(tmp_path, capsys):
    assert main(["materials", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "materials.csv").exists()
    assert (tmp_path / "manifest_materials.json").exists()
    assert "LiNbO3" in capsys.readouterr().out


def test_cli_materials_user_material(tmp_path):
    cfg = tmp_path / "m.yaml"
    cfg.write_text("materials:\n  - k: 2\n    spec: {name: AlN, n: 2.1, wavelength: 1.55e-6,"
                   " chi2_suscept: 1.0e-12}\nvolumes: [0.01]\n")
    assert main(["materials", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "AlN" in (tmp_path / "materials.csv").read_text()


def test_cli_absorb(tmp_path, capsys):
    assert main(["absorb", "--out", str(tmp_path), "--dt-over-tau", "0.02"]) == 0
    assert (tmp_path / "absorb_k3_g30.csv").exists()
    out = capsys.readouterr().out
    assert out.count("P01=") == 2


def test_cli_f1_sweep(tmp_path):
    cfg = tmp_path / "f1.yaml"
    cfg.write_text(json.dumps(SMALL_F1))
    assert main(["f1-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "f1_sweep_k2.csv").exists()
    manifest = json.loads((tmp_path / "manifest_f1_sweep_k2.json").read_text())
    assert manifest["config"]["k"] == 2


@pytest.mark.parametrize("argv", [
    ["f1-sweep", "--dt-over-tau", "0.1"],
    ["gate-sweep", "--k", "5"],
    ["frobnicate"],
    ["f1-sweep", "--config", "/nonexistent.yaml"],
])
def test_cli_invalid_arguments(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_cli_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("k: 2\nspeed: fast\n")
    assert main(["f1-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_infeasible_reports_invalid(tmp_path):
    cfg = tmp_path / "abs.yaml"
    cfg.write_text("cases: [[3, 0.5]]\n")
    assert main(["absorb", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_oracle_check_limits_bins(tmp_path):
    cfg = tmp_path / "o.yaml"
    cfg.write_text("n_bins: 96\n")
    assert main(["oracle-check", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
