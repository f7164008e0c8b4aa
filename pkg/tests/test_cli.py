from __future__ import annotations

import csv
import io
import json

import pytest

from ospcheck.cli import main
from ospcheck.config import ConfigError, RenormConstants
from ospcheck.report import ScanSpec, records_to_csv, run_scan, to_json


def test_default_scan_passes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["scan", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["schema_version"] == "1" and report["tool"] == "ospcheck"
    assert report["summary"]["records"] == 16 * 7
    assert report["summary"]["all_gated_pass"]
    assert report["provenance"]["note"] == "defaults applied"
    assert "gated failures: 0" in capsys.readouterr().out


def test_super_threshold_scan_warns(tmp_path):
    out = tmp_path / "r.json"
    assert main(["scan", "--lambda-min", "0.17", "--lambda-max", "0.2", "--steps", "4", "--n-max", "5", "--out", str(out)]) == 0
    s = json.loads(out.read_text())["summary"]
    assert s["gated_records"] == 0 and len(s["warnings"]) == 12
    assert {r["range_flag"] for r in json.loads(out.read_text())["records"]} == {"outside-weak-condition"}


def test_zero_steps_is_config_error(capsys):
    assert main(["scan", "--steps", "0"]) == 2
    assert "steps" in capsys.readouterr().err


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("lambda_min: 0.05\nlambda_max: 0.05\nsteps: 1\nn_max: 3\nd0: 0.5\n")
    out = tmp_path / "r.json"
    assert main(["scan", "--lambda-min", "0.01", "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["config"]["lambda_min"] == 0.05 and report["config"]["n_max"] == 3
    assert report["constants"]["d0"] == 0.5
    assert "d0" not in report["provenance"]["defaulted_constants"]


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"lambda_min": 0.02, "bogus": 1}')
    assert main(["scan", "--config", str(cfg)]) == 2
    assert "unknown keys: bogus" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    assert main(["scan", "--steps", "1", "--n-max", "1", "--out", str(tmp_path / "no" / "r.json")]) == 2


def test_csv_scan(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["scan", "--steps", "2", "--n-max", "7", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 8
    assert list(rows[0])[:2] == ["lambda", "n"]
    assert {"small_n.margin", "closed_form.h", "matrix.triangular_sum"} <= set(rows[0])


def test_check_n5(capsys):
    assert main(["check", "5", "--lambda", "0.04"]) == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["record"]["small_n"]["passed"]
    assert "verdict: pass" in captured.err


def test_check_n7(capsys):
    assert main(["check", "7", "--lambda", "0.1"]) == 0
    th = json.loads(capsys.readouterr().out)["record"]["closed_form"]
    assert th["h"] > 0 and th["h_hat"] > 0 and th["bracket_h"] == pytest.approx(0.4)


def test_check_parity(capsys):
    assert main(["check", "2"]) == 2
    assert "parity" in capsys.readouterr().err


def test_partitions_csv(capsys):
    assert main(["partitions", "5"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [(r["profile"], r["set_partition_count"], r["multinomial"]) for r in rows] == [
        ("(5)", "1", "1"),
        ("(3,1,1)", "10", "20"),
        ("(1,1,1,1,1)", "1", "120"),
    ]
    assert main(["partitions", "7", "--k", "3"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_audit_outputs(capsys, tmp_path):
    assert main(["audit", "5", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 3 and rows[-1]["mismatch_setpart"] == "True"
    out = tmp_path / "a.json"
    assert main(["audit", "7", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["rows"]) == 5


def test_audit_guard(capsys):
    assert main(["audit", "15"]) == 2
    assert "oracle scale exceeded" in capsys.readouterr().err


def test_positivity_failure_exit_code(monkeypatch, tmp_path):
    import ospcheck.report as report

    real = report.evaluate_point

    def broken(*args, **kwargs):
        recs = real(*args, **kwargs)
        recs[0]["passed"], recs[0]["failures"] = False, ["forced"]
        return recs

    monkeypatch.setattr(report, "evaluate_point", broken)
    assert main(["scan", "--steps", "2", "--n-max", "3", "--out", str(tmp_path / "r.json")]) == 1


def test_threads_do_not_change_output(monkeypatch):
    spec = ScanSpec(steps=6, n_max=7)
    monkeypatch.setenv("OSPCHECK_THREADS", "1")
    a = to_json(run_scan(spec, RenormConstants()))
    monkeypatch.setenv("OSPCHECK_THREADS", "4")
    b = to_json(run_scan(spec, RenormConstants()))
    assert a == b


def test_scanspec_validation():
    with pytest.raises(ConfigError):
        ScanSpec(n_max=4)
    with pytest.raises(ConfigError):
        ScanSpec(lambda_min=0.2, lambda_max=0.1)
    with pytest.raises(ConfigError):
        ScanSpec(sigma=(0.0,))
    assert ScanSpec(steps=1).grid() == [0.01]


def test_csv_flattening():
    text = records_to_csv([{"lambda": 0.1, "n": 3, "a": {"b": 1}, "l": [1, 2], "tags": {"x": "y"}}])
    assert text.splitlines() == ["lambda,n,a.b,l", "0.1,3,1,1;2"]
