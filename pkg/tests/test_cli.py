import csv
import json
from pathlib import Path
from typing import Any

import pytest

from pmkit.cli.config import load_run_config, resolve_seed
from pmkit.cli.main import main


def error_of(capsys: pytest.CaptureFixture[str]) -> dict[str, Any]:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]


def test_help_exits_zero(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["--help"]) == 0
    assert "estimate" in capsys.readouterr().out


def test_unknown_command_is_a_usage_error() -> None:
    assert main(["frobnicate"]) == 2


def test_estimate_weibull_prints_fit(fixtures_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["estimate", "weibull", "--lifetimes", str(fixtures_dir / "lifetimes.csv")])

    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"theta", "kappa", "loglik", "mean_life_months", "median_life_months"}
    assert payload["theta"] > 0
    assert payload["kappa"] > 1


def test_estimate_beta_without_covariates(fixtures_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["estimate", "beta", "--lifetimes", str(fixtures_dir / "lifetimes.csv")])

    assert code == 2
    assert error_of(capsys)["code"] == "insufficient_covariates"


def test_estimate_beta_with_covariates(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    lifetimes = tmp_path / "lifetimes.csv"
    lifetimes.write_text("farm_id,unit_id,event,age_months\nF1,A,failure,16\nF1,B,failure,18\nF1,C,failure,20\n")
    rows = ["unit_id,month,value"]
    for unit, level in (("A", 66.0), ("B", 58.0), ("C", 63.0)):
        rows += [f"{unit},{month},{60.0 if month <= 12 else level}" for month in range(1, 21)]
    covariates = tmp_path / "covariates.csv"
    covariates.write_text("\n".join(rows) + "\n")

    code = main(["estimate", "beta", "--lifetimes", str(lifetimes), "--covariates", str(covariates)])

    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["failures_used"] == 3
    assert payload["flat_likelihood"] is False


def test_estimate_factors(fixtures_dir: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    lifetimes = tmp_path / "lifetimes.csv"
    lifetimes.write_text("farm_id,unit_id,event,age_months\nF1,A,failure,16\n")
    covariates = tmp_path / "covariates.csv"
    covariates.write_text("unit_id,month,value\n" + "".join(f"A,{m},{60 if m <= 13 else 65}\n" for m in range(1, 17)))

    code = main(
        [
            "estimate",
            "factors",
            "--config",
            str(fixtures_dir / "farm_config.json"),
            "--lifetimes",
            str(lifetimes),
            "--covariates",
            str(covariates),
        ]
    )

    assert code == 0
    [factor] = json.loads(capsys.readouterr().out)
    assert factor["unit_id"] == "A"
    assert factor["cox_factor"] == pytest.approx(2.718281828459045)


def test_plan_is_deterministic(fixtures_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    args = ["plan", "--config", str(fixtures_dir / "farm_config.json")]

    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    second = capsys.readouterr().out

    assert first == second
    payload = json.loads(first)
    assert set(payload) == {"t_star", "replace", "expected_cost", "no_pm", "c"}
    assert payload["no_pm"] is (payload["t_star"] is None)


def test_plan_replaces_ancient_component_next_month(
    run_config: dict[str, Any], write_config, capsys: pytest.CaptureFixture[str]
) -> None:
    run_config["costs"] = {"mode": "flat", "flat": {"g": 10.0, "h0": 0.1, "h": 0.1, "m": 0.0}}
    run_config["farm"] = {
        "start_month": 15,
        "horizon_month": 21,
        "units": [{"id": "OLD", "age": 150}, {"id": "N1", "age": 0}, {"id": "N2", "age": 0}],
    }

    assert main(["plan", "--config", str(write_config(run_config))]) == 0

    payload = json.loads(capsys.readouterr().out)
    assert payload["t_star"] == 16
    assert "OLD" in payload["replace"]


def test_plan_with_failed_unit_returns_replacements(
    run_config: dict[str, Any], write_config, capsys: pytest.CaptureFixture[str]
) -> None:
    path = write_config(run_config)

    assert main(["plan", "--config", str(path), "--failed", "T02"]) == 0
    assert "T02" in json.loads(capsys.readouterr().out)["replace"]

    assert main(["plan", "--config", str(path), "--failed", "T99"]) == 2
    assert error_of(capsys)["code"] == "unknown_unit"


def test_plan_reports_malformed_json(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{"baseline": {"theta": 1e-6,\n')

    assert main(["plan", "--config", str(path)]) == 2
    error = error_of(capsys)
    assert error["code"] == "parse_error"
    assert error["line"] >= 1


def test_plan_points_at_offending_key(
    run_config: dict[str, Any], write_config, capsys: pytest.CaptureFixture[str]
) -> None:
    run_config["costs"]["flat"]["h0"] = -1.0

    assert main(["plan", "--config", str(write_config(run_config))]) == 2
    assert error_of(capsys)["pointer"] == "/costs/flat/h0"


def test_replay_of_empty_script_only_advances(
    fixtures_dir: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    script = tmp_path / "script.csv"
    script.write_text("unit_id,failure_age\n")
    output = tmp_path / "trajectory.csv"

    code = main(
        ["replay", "--config", str(fixtures_dir / "farm_config.json"), "--script", str(script), "--output", str(output)]
    )

    assert code == 0
    with output.open(newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert rows
    assert {row["action"] for row in rows} == {"advance"}
    assert [int(row["s"]) for row in rows] == list(range(15, 45, 3))


def test_replay_of_farm9_script_is_stable(fixtures_dir: Path, tmp_path: Path) -> None:
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    base = [
        "replay",
        "--config",
        str(fixtures_dir / "farm9_config.json"),
        "--script",
        str(fixtures_dir / "farm9_script.csv"),
    ]

    assert main([*base, "--output", str(first)]) == 0
    assert main([*base, "--output", str(second)]) == 0

    assert first.read_bytes() == second.read_bytes()
    assert b"\r" not in first.read_bytes()
    with first.open(newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert list(rows[0]) == ["s", "t_star", "planned_count", "action", "replaced_ids", "cost"]
    replaced = {
        unit_id
        for row in rows
        if row["action"] in {"cm_executed", "pm_executed"}
        for unit_id in row["replaced_ids"].split(";")
    }
    assert {"T01", "T02", "T03", "T05", "T07", "T09", "T11", "T14"} <= replaced
    assert any(row["action"] == "cm_executed" for row in rows)


def test_corrective_replay_matches_golden_trajectory(
    fixtures_dir: Path, tmp_path: Path, run_config: dict[str, Any], write_config
) -> None:
    run_config["costs"]["flat"]["g"] = 2.0
    output = tmp_path / "trajectory.csv"

    code = main(
        [
            "replay",
            "--config",
            str(write_config(run_config)),
            "--script",
            str(fixtures_dir / "golden_script.csv"),
            "--policy",
            "cm_only",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    assert output.read_bytes() == (fixtures_dir / "golden_trajectory.csv").read_bytes()


def test_replay_rejects_unknown_units(fixtures_dir: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    script = tmp_path / "script.csv"
    script.write_text("unit_id,failure_age\nT99,30\n")

    code = main(
        [
            "replay",
            "--config",
            str(fixtures_dir / "farm_config.json"),
            "--script",
            str(script),
            "--output",
            str(tmp_path / "out.csv"),
        ]
    )

    assert code == 2
    assert error_of(capsys)["code"] == "unknown_unit"


def test_simulate_is_byte_identical_on_rerun(fixtures_dir: Path, tmp_path: Path) -> None:
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    base = ["simulate", "--config", str(fixtures_dir / "farm_config.json"), "--replications", "2", "--seed", "3"]

    assert main([*base, "--output", str(first)]) == 0
    assert main([*base, "--output", str(second)]) == 0

    assert first.read_bytes() == second.read_bytes()
    report = json.loads(first.read_text())
    assert report["replications"] == 2
    assert report["policy"] == "algorithm1"


def test_simulate_fixed_period_policy(fixtures_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "simulate",
            "--config",
            str(fixtures_dir / "farm_config.json"),
            "--policy",
            "fixed_period",
            "--period",
            "12",
            "--replications",
            "2",
        ]
    )

    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["mean_pm_count"] >= 1.0
    assert report["zero_pm_fraction"] == 0.0


def test_cost_table_writes_csv(fixtures_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["cost-table", "--config", str(fixtures_dir / "farm_config.json"), "--max-month", "24"])

    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "month,pm_cost,virtual_cost,effective_cost,q,c"
    assert len(lines) == 26


def test_seed_precedence(fixtures_dir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    config = load_run_config(fixtures_dir / "farm_config.json")
    monkeypatch.delenv("PMKIT_SEED", raising=False)

    assert resolve_seed(None, config) == 7
    monkeypatch.setenv("PMKIT_SEED", "42")
    assert resolve_seed(None, config) == 42
    assert resolve_seed(5, config) == 5
