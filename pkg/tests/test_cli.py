import json

import pytest

from teleopsim.cli import (EXIT_BAD_CONFIG, EXIT_MISSING_FILE, EXIT_OK, main)

from conftest import CONFIGS, TRACES


def test_no_arguments_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_bandwidth_report_optimized(capsys):
    assert main(["bandwidth-report", str(CONFIGS / "optimized")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "TOTAL" in out and "gloves" in out


def test_bandwidth_report_accepts_extensionless_path(capsys):
    assert main(["bandwidth-report", str(CONFIGS / "xprize-baseline")]) == EXIT_OK


def test_missing_config_exit_code(capsys):
    assert main(["run", "missing.cfg", "--trace", "x", "--report", "y"]) == EXIT_MISSING_FILE
    err = capsys.readouterr().err
    assert err.startswith("teleopsim: error[3]")


def test_missing_trace_exit_code(capsys, tmp_path):
    report = tmp_path / "r.json"
    code = main(["run", str(CONFIGS / "bench"), "--trace", "missing.trace",
                 "--report", str(report)])
    assert code == EXIT_MISSING_FILE


def test_invalid_config_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: x\nsurprise: true\n")
    assert main(["bandwidth-report", str(bad)]) == EXIT_BAD_CONFIG
    assert "error[4]" in capsys.readouterr().err


def test_run_writes_report(capsys, tmp_path):
    report = tmp_path / "report.json"
    code = main(["run", str(CONFIGS / "bench"),
                 "--trace", str(TRACES / "constant_v.trace"),
                 "--report", str(report)])
    assert code == EXIT_OK
    data = json.loads(report.read_text())
    assert abs(data["final_pose"][0] - 1.0) < 1e-6


def test_run_reports_reproducible_with_seed(capsys, tmp_path):
    out = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        assert main(["run", str(CONFIGS / "starlink"),
                     "--trace", str(TRACES / "constant_v.trace"),
                     "--report", str(path), "--seed", "123"]) == EXIT_OK
        out.append(path.read_bytes())
    assert out[0] == out[1]
    assert json.loads(out[0])["seed"] == 123
