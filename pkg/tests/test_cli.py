"""Command line behavior: output shapes, exit codes, determinism."""
import json

import pytest

from mdscache.cli import build_parser, dec_str, main
from fractions import Fraction


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dec_str_significant_digits():
    assert dec_str(Fraction(1, 3)) == "0.333333333333"
    assert dec_str(Fraction(45, 64)) == "0.703125"
    assert dec_str(Fraction(2)) == "2"


def test_rate_prints_all_schemes(capsys):
    code, out, _ = run(capsys, "rate", "--n", "2", "--m", "1", "--k", "3", "--r", "2")
    assert code == 0
    assert "45/64" in out and "0.703125" in out
    assert "uncoded decentralized" in out
    assert "uncoded centralized" in out
    assert "stop_index=2" in out


def test_rate_accepts_rational_flags(capsys):
    code, out, _ = run(capsys, "rate", "--n", "2", "--m", "1", "--k", "3",
                       "--r", "3/2")
    assert code == 0
    assert "25/36" in out


def test_rate_missing_flag_exits_2(capsys):
    code, _, err = run(capsys, "rate", "--n", "2", "--m", "1", "--k", "3")
    assert code == 2
    assert "--r" in err


def test_rate_invalid_params_exit_2(capsys):
    code, _, err = run(capsys, "rate", "--n", "2", "--m", "5", "--k", "3", "--r", "2")
    assert code == 2
    assert "cache budget" in err


def test_sweep_csv_shape(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "100", "--m", "2", "--k", "10",
                       "--r", "1", "--axis", "r", "--values", "1,2,10")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("r,coded_prefetch_exact,")
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "1"
    # r=1 column equals the uncoded decentralized rate
    assert first[1] == first[3]


def test_sweep_single_point(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "2", "--m", "1", "--k", "3",
                       "--r", "2", "--axis", "m", "--values", "1")
    assert code == 0
    assert len(out.strip().splitlines()) == 2


def test_sweep_warns_on_infeasible_point(capsys):
    code, out, err = run(capsys, "sweep", "--n", "2", "--m", "1", "--k", "3",
                         "--r", "2", "--axis", "m", "--values", "1,3")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3
    assert lines[2].endswith(",,,,,,")  # empty cells for m > n
    assert "skipping" in err


def test_sweep_writes_file(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--n", "2", "--m", "1", "--k", "2",
                     "--r", "2", "--axis", "k", "--values", "2,3,4",
                     "--out", str(path))
    assert code == 0
    assert len(path.read_text().splitlines()) == 4


def test_best_r_output(capsys):
    code, out, _ = run(capsys, "best-r", "--n", "20", "--m", "12", "--k", "4",
                       "--grid", "1,1.25,1.5,1.75,2")
    assert code == 0
    assert out.startswith("r=3/2 ")


def test_simulate_report_and_log(tmp_path, capsys):
    report = tmp_path / "report.json"
    log = tmp_path / "trials.jsonl"
    code, _, err = run(capsys, "simulate", "--n", "2", "--m", "1", "--k", "3",
                       "--r", "2", "--f", "1000", "--trials", "4", "--seed", "3",
                       "--out", str(report), "--log", str(log))
    assert code == 0
    assert "PASS" in err
    obj = json.loads(report.read_text())
    assert obj["comparison"]["passed"] is True
    assert obj["settings"]["trials"] == 4
    assert obj["aggregate"]["success_fraction"] == 1.0
    lines = log.read_text().splitlines()
    assert len(lines) == 4
    rec = json.loads(lines[0])
    assert rec["trial"] == 0 and all(rec["successes"])


def test_simulate_same_seed_byte_identical(tmp_path, capsys):
    paths = []
    for name in ("a", "b"):
        report = tmp_path / f"report_{name}.json"
        log = tmp_path / f"log_{name}.jsonl"
        code, _, _ = run(capsys, "simulate", "--n", "2", "--m", "1", "--k", "3",
                         "--r", "2", "--f", "1000", "--trials", "3",
                         "--seed", "11", "--out", str(report), "--log", str(log))
        assert code == 0
        paths.append((report.read_bytes(), log.read_bytes()))
    assert paths[0] == paths[1]


def test_simulate_different_seed_differs(tmp_path, capsys):
    logs = []
    for seed in ("1", "2"):
        log = tmp_path / f"log_{seed}.jsonl"
        run(capsys, "simulate", "--n", "2", "--m", "1", "--k", "3", "--r", "2",
            "--f", "1000", "--trials", "3", "--seed", seed, "--log", str(log))
        logs.append(log.read_bytes())
    assert logs[0] != logs[1]


def test_simulate_infeasible_f_suggests(capsys):
    code, _, err = run(capsys, "simulate", "--n", "2", "--m", "1", "--k", "3",
                       "--r", "3/2", "--f", "1001")
    assert code == 2
    assert "smallest feasible f" in err


def test_simulate_tolerance_zero_fails_with_explanation(capsys):
    code, _, err = run(capsys, "simulate", "--n", "2", "--m", "1", "--k", "3",
                       "--r", "2", "--f", "1000", "--trials", "2",
                       "--tolerance", "0")
    assert code == 1
    assert "tolerance 0" in err


def test_simulate_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "n": 2, "m": 1, "k": 3, "r": 2, "f": 1000, "trials": 2, "seed": 5,
        "tolerance": 0.05,
    }))
    code, out, err = run(capsys, "simulate", "--config", str(config))
    assert code == 0
    # flags win over the config file
    code2, _, err2 = run(capsys, "simulate", "--config", str(config),
                         "--tolerance", "0")
    assert code2 == 1
    assert "tolerance 0" in err2


def test_verify_preset_runs_exact_mode(tmp_path, capsys):
    report = tmp_path / "verify.json"
    code, _, err = run(capsys, "verify", "--n", "2", "--m", "1", "--k", "3",
                       "--r", "2", "--seed", "5", "--out", str(report))
    assert code == 0, err
    obj = json.loads(report.read_text())
    assert obj["settings"]["mode"] == "exact"
    assert obj["settings"]["codec"] == "real"
    assert obj["comparison"]["exact_success_fraction"] == 1.0


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) >= 6
    assert all(line.startswith("PASS") for line in lines)


def test_demand_flag(tmp_path, capsys):
    report = tmp_path / "report.json"
    code, _, _ = run(capsys, "simulate", "--n", "2", "--m", "1", "--k", "3",
                     "--r", "2", "--f", "1000", "--trials", "2",
                     "--demand", "1,1,1", "--tolerance", "0.1",
                     "--out", str(report))
    assert code == 0
    obj = json.loads(report.read_text())
    assert obj["demand"] == [1, 1, 1]
    assert obj["comparison"]["distinct_files"] == 1


def test_parser_help_lists_subcommands():
    parser = build_parser()
    text = parser.format_help()
    for name in ("rate", "sweep", "simulate", "verify", "selftest", "best-r"):
        assert name in text
