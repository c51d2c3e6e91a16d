"""Command-line interface behavior: exit codes, output formats,
and deterministic figure data."""

import csv
import io
import json

import pytest

from causalqfi.cli import main


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out


def test_bad_config_file_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    code, _ = run_cli(capsys, ["compute", "--config", str(cfg)])
    assert code == 2


def test_missing_config_file_exits_2(tmp_path, capsys):
    code, _ = run_cli(capsys, ["compute", "--config",
                               str(tmp_path / "nope.json")])
    assert code == 2


def test_unknown_class_exits_2(capsys):
    code, _ = run_cli(capsys, ["compute", "--classes", "QC-Bogus"])
    assert code == 2


def test_non_monotone_sweep_exits_2(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "channel": {"family": "depolarizing", "theta": 0.5},
        "N": 1,
        "sweep": {"param": "theta", "grid": [0.5, 0.3, 0.7]},
    }))
    code, _ = run_cli(capsys, ["compute", "--config", str(cfg)])
    assert code == 2


def test_compute_single_copy_json(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "channel": {"family": "depolarizing", "theta": 0.5},
        "N": 1,
        "classes": ["QC-Par", "Gen"],
        "format": "json",
    }))
    code, out = run_cli(capsys, ["compute", "--config", str(cfg)])
    assert code == 0
    rows = json.loads(out)
    assert [r["class"] for r in rows] == ["QC-Par", "Gen"]
    want = 3.0 / ((1 - 0.5) * (1 + 3 * 0.5))
    for row in rows:
        assert row["qfi"] == pytest.approx(want, rel=1e-6)
        assert row["status"] in ("optimal", "inaccurate")


def test_figures_match_closed_forms(capsys):
    code, out = run_cli(capsys, ["figures", "depol-n2"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9
    mid = next(r for r in rows if abs(float(r["theta"]) - 0.5) < 1e-12)
    assert float(mid["QS"]) == pytest.approx(2.357895, abs=1e-4)
    assert float(mid["Seq"]) == pytest.approx(1.066667, abs=1e-4)
    assert float(mid["2-Choi"]) == pytest.approx(4.8, abs=1e-4)


def test_figures_output_is_deterministic(capsys):
    _, first = run_cli(capsys, ["figures", "thermal-n2"])
    _, second = run_cli(capsys, ["figures", "thermal-n2"])
    assert first == second
    assert first.splitlines()[0] == "theta,QS,Seq,parallel"


def test_figures_writes_out_file(tmp_path, capsys):
    out = tmp_path / "fig.csv"
    code, printed = run_cli(capsys, ["figures", "depol-n2",
                                     "--out", str(out)])
    assert code == 0
    assert out.read_text() == printed
