import json
import subprocess
import sys

import pytest

from plbarrier.cli import ConfigError, load_config, main


def _run(tmp_path, cfg, *extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    code = main(["--config", str(path), "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


def test_operator_check(tmp_path):
    code, rep, out = _run(tmp_path, {"command": "operator-check", "operator": "p_laplacian",
                                     "p": 3, "n": 2})
    assert code == 0
    assert rep["schema"] == 1 and rep["k1"] == 1.0
    assert rep["script_H"] == pytest.approx(2.0) and rep["lambda0"] > 1
    meta = json.loads((out / "metadata.json").read_text())
    assert "timestamp" in meta and "elapsed_s" in meta


def test_quasilinear_fails_condition_C(tmp_path):
    code, rep, _ = _run(tmp_path, {"command": "operator-check",
                                   "operator": "quasilinear_remark320", "n": 2})
    assert code == 1
    assert [c["passed"] for c in rep["checks"]] == [True, True, False]


def test_negative_sigma_is_config_error(tmp_path, capsys):
    code, rep, _ = _run(tmp_path, {"command": "barrier-super", "sigma": -1})
    assert code == 2 and rep is None
    assert "sigma must be ≥ 0" in capsys.readouterr().err


def test_json_syntax_error_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"command": "aux-check",\n "sigma": }')
    with pytest.raises(ConfigError) as exc:
        load_config(str(p))
    assert ":2:" in exc.value.diagnostics[0]


def test_unknown_key_rejected(tmp_path):
    code, _, _ = _run(tmp_path, {"command": "aux-check", "sigmaa": 1})
    assert code == 2


def test_barrier_commands_and_case_filter(tmp_path):
    base = {"operator": "p_laplacian", "p": 3, "n": 2, "sigma": 0.5,
            "chi": {"kind": "linear", "c0": 0.3, "c1": -0.3, "T": 1.0},
            "h": {"kind": "bump", "base": 0.0, "height": 1.0, "width": 1.0},
            "output": {"formats": ["json", "csv"]}}
    code, rep, out = _run(tmp_path, {"command": "barrier-super", **base})
    assert code == 0 and rep["barrier"]["case_tag"] == "I.ii.3"
    assert (out / "residual.csv").read_text().startswith("r,t,residual,bound")
    code, rep, _ = _run(tmp_path, {"command": "barrier-sub", **base})
    assert code == 0 and rep["barrier"]["case_tag"] == "I.a"
    code, rep, _ = _run(tmp_path, {"command": "barrier-super", **base}, "--case", "II")
    assert code == 0 and rep["checks"] == [] and "skipped" in rep


def test_report_is_deterministic(tmp_path):
    cfg = {"command": "aux-check", "operator": "p_laplacian", "p": 3, "n": 2, "sigma": 1.0}
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    _, _, out1 = _run(tmp_path / "a", cfg)
    _, _, out2 = _run(tmp_path / "b", cfg)
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_simulate_writes_dumps(tmp_path):
    cfg = {"command": "simulate", "operator": "laplacian", "n": 2, "sigma": 0.0, "T": 0.2,
           "chi": 0.3, "h": {"kind": "bump"}, "numeric": {"rho": 5.0, "nr": 41},
           "output": {"formats": ["json", "csv", "bin"]}}
    code, rep, out = _run(tmp_path, cfg)
    assert code == 0
    assert (out / "field.bin").exists() and (out / "field.csv").exists()
    assert {c["name"] for c in rep["checks"]} >= {"max_linear"}


def test_limits_subcase_b(tmp_path):
    cfg = {"command": "limits", "operator": "p_laplacian", "p": 3, "n": 2, "sigma": 4.0,
           "chi": 0.3, "numeric": {"b_sequence": [1e-2, 1e-3, 1e-4]}}
    code, rep, _ = _run(tmp_path, cfg)
    assert "F_limit" in rep and rep["F_limit"]["target"] == 0


def test_module_entry_point(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"command": "aux-check", "operator": "p_laplacian", "p": 3, "sigma": 6}))
    proc = subprocess.run([sys.executable, "-m", "plbarrier", "--config", str(p), "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
