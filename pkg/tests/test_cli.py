import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from metaplan.cli import main
from metaplan.data_io import save_session, session_to_json
from tests.test_data_io import build_session


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def sessions_dir(tmp_path):
    d = tmp_path / "sessions"
    d.mkdir()
    save_session(d / "p0.json", build_session("LVLC", n_trials=6, clicks_per_trial=2, pid="p0"))
    save_session(d / "p1.json", build_session("LVLC", n_trials=6, clicks_per_trial=0, pid="p1"))
    save_session(d / "p2.json", build_session("HVHC", n_trials=6, clicks_per_trial=3, pid="p2"))
    return d


def test_validate_ok_and_excluded(runner, sessions_dir):
    result = runner.invoke(main, ["validate", str(sessions_dir / "p0.json"), str(sessions_dir / "p1.json")])
    assert result.exit_code == 0
    assert "excluded" in result.output


def test_validate_bad_file_exits_3(runner, tmp_path, sessions_dir):
    obj = session_to_json(build_session())
    obj["trials"][0]["score"] += 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    result = runner.invoke(main, ["validate", str(bad)])
    assert result.exit_code == 3


def test_unknown_condition_exits_2(runner, tmp_path):
    result = runner.invoke(
        main, ["simulate", "--condition", "NOPE", "--out-dir", str(tmp_path)]
    )
    assert result.exit_code == 2


def test_bad_config_exits_2(runner, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"bogus": true}')
    result = runner.invoke(
        main, ["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]
    )
    assert result.exit_code == 2


def test_simulate_writes_outputs(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "simulate", "--variant", "rf", "--condition", "LVLC",
            "--agents", "2", "--trials", "5", "--seed", "1",
            "--out-dir", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    curve = (out / "simulate_curve_rf_LVLC.csv").read_text().splitlines()
    assert curve[0] == "trial,mean_clicks,sem"
    assert len(curve) == 6
    summary = json.loads((out / "simulate_summary_rf.json").read_text())
    assert "LVLC" in summary["conditions"]


def test_fit_select_analyze_pipeline(runner, sessions_dir, tmp_path):
    fits = tmp_path / "fits"
    result = runner.invoke(
        main,
        [
            "fit", "--data", str(sessions_dir), "--variant", "rf",
            "--budget", "2", "--sims", "1", "--seed", "0", "--out-dir", str(fits),
        ],
    )
    assert result.exit_code == 0, result.output
    result = runner.invoke(
        main,
        [
            "fit", "--data", str(sessions_dir), "--variant", "lvoc",
            "--budget", "2", "--sims", "1", "--seed", "0", "--out-dir", str(fits),
        ],
    )
    assert result.exit_code == 0, result.output
    assert len(list(fits.glob("fit_*.json"))) == 6

    reports = tmp_path / "reports"
    result = runner.invoke(
        main,
        ["select", "--fits", str(fits), "--mc-samples", "20000", "--seed", "0",
         "--out-dir", str(reports)],
    )
    assert result.exit_code == 0, result.output
    assert (reports / "bic_table.csv").exists()
    assert (reports / "best_counts.csv").exists()
    assert (reports / "bms_variants.csv").exists()
    bms = json.loads((reports / "bms_variants.json").read_text())
    assert "overall" in bms

    analysis = tmp_path / "analysis"
    result = runner.invoke(
        main,
        ["analyze", "--data", str(sessions_dir), "--fits", "%s" % fits,
         "--fit-variant", "rf", "--out-dir", str(analysis), "--seed", "0"],
    )
    assert result.exit_code == 0, result.output
    assert (analysis / "trend_tests.csv").exists()
    assert (analysis / "curves_LVLC.csv").exists()
    assert (analysis / "group_tests.csv").exists()
    catalog = (analysis / "feature_catalog.csv").read_text().splitlines()
    assert len(catalog) == 53  # header + 52 features


def test_fit_missing_data_is_data_error(runner, tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    result = runner.invoke(
        main, ["fit", "--data", str(empty), "--variant", "rf", "--out-dir", str(tmp_path)]
    )
    assert result.exit_code == 3
