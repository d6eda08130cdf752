import json
import os

import pytest

from bellsim.cli import (
    ConfigError,
    EXIT_INFEASIBLE,
    EXIT_INVALID,
    EXIT_OK,
    LOG_HEADER,
    main,
    parse_config,
)
from bellsim.consistency import quantum_chsh_scenario, write_scenario
from bellsim.core import make_setting

OPTIMAL_CFG = """
mode = per-pair
angle_a = 0
angle_b = 45
angle_c = -45
angle_d = 90
trials_per_pair = {j}
seed = {seed}
log_path = {log}
report_path = {report}
{extra}
"""


def write_cfg(tmp_path, name="run.cfg", j=2000, seed=5, extra="", mode=None):
    log = tmp_path / "trials.csv"
    report = tmp_path / "report.json"
    text = OPTIMAL_CFG.format(j=j, seed=seed, log=log, report=report, extra=extra)
    if mode is not None:
        text = text.replace("mode = per-pair", f"mode = {mode}")
    path = tmp_path / name
    path.write_text(text)
    return path, log, report


def test_parse_config_rejects_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("mode = per-pair\nwhat = 3\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("mode = per-pair\nmode = per-pair\n")
    with pytest.raises(ConfigError, match="missing keys"):
        parse_config("mode = per-pair\n")


def test_simulate_writes_log_and_report(tmp_path, capsys):
    cfg, log, report = write_cfg(tmp_path)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    lines = log.read_text().splitlines()
    assert lines[0] == LOG_HEADER
    assert len(lines) == 1 + 4 * 2000
    doc = json.loads(report.read_text())
    counts = doc["gamma"]["counts"]
    assert sum(counts.values()) == 2000
    assert doc["gamma"]["counting_bound"]["passed"]
    assert all(doc["pairs"][label]["trials"] == 2000 for label in ("AB", "AC", "DB", "DC"))
    assert doc["config"]["seed_source"] == "config"


def test_simulate_zero_trials_exits_1_without_files(tmp_path, capsys):
    cfg, log, report = write_cfg(tmp_path, j=0)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_INVALID
    assert not log.exists()
    assert not report.exists()


def test_simulate_rejects_unknown_key(tmp_path):
    cfg, _, _ = write_cfg(tmp_path, extra="surprise = 1")
    assert main(["simulate", "--config", str(cfg)]) == EXIT_INVALID


def test_simulate_env_seed_override(tmp_path, monkeypatch):
    cfg, log, report = write_cfg(tmp_path, seed=5)
    monkeypatch.setenv("BELLSIM_SEED", "123")
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    doc = json.loads(report.read_text())
    assert doc["config"]["seed"] == 123
    assert doc["config"]["seed_source"] == "env"
    monkeypatch.setenv("BELLSIM_SEED", "not-a-number")
    assert main(["simulate", "--config", str(cfg)]) == EXIT_INVALID


def test_simulate_common_space_report(tmp_path):
    cfg, log, report = write_cfg(tmp_path, mode="common-space", j=3000)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    doc = json.loads(report.read_text())
    counts = doc["gamma"]["counts"]
    assert counts["plus4"] == counts["minus4"] == counts["zero"] == 0
    assert doc["gamma"]["mean_M"] <= 2.0
    lines = log.read_text().splitlines()
    assert len(lines) == 1 + 4 * 3000


def test_audit_round_trip_matches_simulate(tmp_path, capsys):
    cfg, log, report = write_cfg(tmp_path, j=4000, seed=9)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    capsys.readouterr()
    audit_path = tmp_path / "audit.json"
    assert main(["audit", str(log), "--report", str(audit_path)]) == EXIT_OK
    capsys.readouterr()
    sim = json.loads(report.read_text())
    audit = json.loads(audit_path.read_text())
    assert audit["gamma"]["counts"] == sim["gamma"]["counts"]
    assert audit["gamma"]["mean_M"] == sim["gamma"]["mean_M"]
    assert audit["gamma"]["delta"] == sim["gamma"]["delta"]
    assert audit["gamma"]["counting_bound"] == sim["gamma"]["counting_bound"]


def test_audit_round_trip_common_space(tmp_path, capsys):
    cfg, log, report = write_cfg(tmp_path, mode="common-space", j=2500, seed=12)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    capsys.readouterr()
    audit_path = tmp_path / "audit.json"
    assert main(["audit", str(log), "--report", str(audit_path)]) == EXIT_OK
    capsys.readouterr()
    sim = json.loads(report.read_text())
    audit = json.loads(audit_path.read_text())
    assert audit["gamma"]["counts"] == sim["gamma"]["counts"]
    assert audit["gamma"]["mean_M"] == sim["gamma"]["mean_M"]


def test_audit_rejects_malformed_rows(tmp_path, capsys):
    log = tmp_path / "bad.csv"
    log.write_text(LOG_HEADER + "\n0,0,AB,0,0,1\n")
    assert main(["audit", str(log)]) == EXIT_INVALID
    assert "line 2" in capsys.readouterr().err

    log.write_text(LOG_HEADER + "\n0,0,AB,0,1\n")
    assert main(["audit", str(log)]) == EXIT_INVALID
    assert "line 2" in capsys.readouterr().err

    log.write_text(LOG_HEADER + "\n0,1,AB,0,1,1\n")
    assert main(["audit", str(log)]) == EXIT_INVALID
    assert "line 2" in capsys.readouterr().err


def test_audit_rejects_empty_log(tmp_path, capsys):
    log = tmp_path / "empty.csv"
    log.write_text(LOG_HEADER + "\n")
    assert main(["audit", str(log)]) == EXIT_INVALID
    log.write_text("")
    assert main(["audit", str(log)]) == EXIT_INVALID


def test_check_quantum_scenario_infeasible(tmp_path, capsys):
    scn = tmp_path / "chsh.scn"
    write_scenario(
        str(scn),
        quantum_chsh_scenario(make_setting(0), make_setting(45), make_setting(-45), make_setting(90)),
    )
    report = tmp_path / "check.json"
    assert main(["check", str(scn), "--report", str(report)]) == EXIT_INFEASIBLE
    out = capsys.readouterr().out
    assert "cyclicity: cyclic" in out
    assert "feasible: no" in out
    assert "2.828427" in out
    doc = json.loads(report.read_text())
    assert doc["certificate"]["value"] == pytest.approx(2.8284271247, abs=1e-6)


def test_check_chain_scenario_feasible(tmp_path, capsys):
    # acyclic chain of pair constraints with uniform tables
    text = "\n".join(
        [
            "variables: X Y Z",
            "constraint: X Y",
            "0.25 0.25 0.25 0.25",
            "constraint: Y Z",
            "0.25 0.25 0.25 0.25",
            "",
        ]
    )
    scn = tmp_path / "chain.scn"
    scn.write_text(text)
    assert main(["check", str(scn)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "cyclicity: acyclic" in out
    assert "feasible: yes" in out


def test_check_rejects_bad_normalization(tmp_path, capsys):
    scn = tmp_path / "bad.scn"
    scn.write_text("variables: X Y\nconstraint: X Y\n0.2 0.2 0.2 0.3\n")
    assert main(["check", str(scn)]) == EXIT_INVALID


def test_check_names_disagreeing_overlap(tmp_path, capsys):
    scn = tmp_path / "overlap.scn"
    scn.write_text(
        "variables: X Y Z\n"
        "constraint: X Y\n0.25 0.25 0.25 0.25\n"
        "constraint: X Z\n0.45 0.45 0.05 0.05\n"
    )
    assert main(["check", str(scn)]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "inconsistent marginals" in err
    assert "'X'" in err


def test_oracle_output(capsys):
    assert main(["oracle", "--a", "0", "--b", "45", "--c", "-45", "--d", "90"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "chsh_facet_value: +2.828427125" in out

    assert main(["oracle", "--a", "10", "--b", "10", "--c", "10", "--d", "10"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "chsh_facet_value: +2.000000000" in out

    assert main(["oracle", "--a", "0", "--b", "90", "--c", "90", "--d", "0"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "chsh_facet_value: +0.000000000" in out


def test_logs_are_byte_identical_across_runs_and_threads(tmp_path):
    cfg1, log1, rep1 = write_cfg(tmp_path, name="one.cfg", j=1500, seed=33)
    assert main(["simulate", "--config", str(cfg1)]) == EXIT_OK
    bytes1 = log1.read_bytes()

    log2 = tmp_path / "trials2.csv"
    rep2 = tmp_path / "report2.json"
    cfg2 = tmp_path / "two.cfg"
    cfg2.write_text(
        cfg1.read_text().replace(str(log1), str(log2)).replace(str(rep1), str(rep2))
        + "threads = 4\n"
    )
    assert main(["simulate", "--config", str(cfg2)]) == EXIT_OK
    assert log2.read_bytes() == bytes1

    assert main(["simulate", "--config", str(cfg1)]) == EXIT_OK
    assert log1.read_bytes() == bytes1


def test_simulate_io_error_exit_code(tmp_path):
    cfg, _, _ = write_cfg(tmp_path)
    text = cfg.read_text().replace(
        f"log_path = {tmp_path / 'trials.csv'}", "log_path = /nonexistent-dir/trials.csv"
    )
    cfg.write_text(text)
    assert main(["simulate", "--config", str(cfg)]) == 2
