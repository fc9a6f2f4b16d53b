"""CLI contract tests: verbs, exit codes, determinism, report agreement."""

import json
import re

import numpy as np
import pytest

from chainsense import cli, estimate, ssm
from chainsense.accessible import SensorConfig


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- analyze -----------------------------------------------------------------


def test_analyze_single_qubit_incapable(capsys):
    code, out, _ = run_cli(
        ["analyze", "--sensor-qubits", "1", "--measurement", "Yb",
         "--n-chain", "3"], capsys)
    assert code == 0
    assert "incapable" in out
    assert "x0 = 0" in out


def test_analyze_ladder_identifiable_in_magnitude(capsys):
    code, out, _ = run_cli(
        ["analyze", "--measurement", "ZaYb", "--n-chain", "4"], capsys)
    assert code == 0
    assert "identifiable-in-magnitude" in out
    assert "scan_clean = True" in out
    assert "det_cm_matches_closed_form = True" in out


def test_analyze_orthogonal_two_qubit_incapable(capsys):
    for initial in ("xa", "xb", "xaxb"):
        code, out, _ = run_cli(
            ["analyze", "--measurement", "YaYb", "--initial", initial,
             "--n-chain", "2"], capsys)
        assert code == 0
        assert "incapable" in out


def test_analyze_cube_identifiable(capsys):
    code, out, _ = run_cli(
        ["analyze", "--measurement", "YaZb", "--n-chain", "2"], capsys)
    assert code == 0
    assert "'identifiable'" in out
    assert "minimal_order = 12" in out


def test_analyze_cube_long_chain_undecided(capsys):
    code, out, _ = run_cli(
        ["analyze", "--measurement", "YaZb", "--n-chain", "4"], capsys)
    assert code == 0
    assert "undecided" in out


def test_analyze_rejects_unknown_measurement(capsys):
    code, _, err = run_cli(
        ["analyze", "--measurement", "XaXb", "--n-chain", "2"], capsys)
    assert code == 2
    assert "not in the catalog" in err


def test_analyze_requires_initial_when_ambiguous(capsys):
    code, _, err = run_cli(
        ["analyze", "--measurement", "Zb", "--sensor-qubits", "2",
         "--n-chain", "2"], capsys)
    assert code == 2
    assert "--initial" in err


def test_analyze_catalog_verdicts_all_schemes(capsys):
    """Every catalog scheme analyzed at N in {2,3,4} without error; the
    capable pair is exactly {ladder, cube-or-undecided}."""
    expected = {
        ("Yb", 1): "incapable",
        ("Zb", 1): "incapable",
        ("ZaYb", 2): "identifiable-in-magnitude",
        ("YaZb", 2): "identifiable",
        ("YaYb", 2): "incapable",
        ("ZaZb", 2): "incapable",
        ("Yb", 2): "incapable",
        ("Zb", 2): "incapable",
    }
    for (meas, nq), want in expected.items():
        for n in (2, 3, 4):
            argv = ["analyze", "--measurement", meas, "--sensor-qubits",
                    str(nq), "--n-chain", str(n)]
            if nq == 2 and meas in ("YaYb", "ZaZb", "Yb", "Zb"):
                argv += ["--initial", "xa"]
            code, out, _ = run_cli(argv, capsys)
            assert code == 0
            if want == "identifiable" and n > 2:
                assert "undecided" in out
            else:
                assert want in out


# -- simulate ----------------------------------------------------------------


CUBE_FLAGS = ["--measurement", "YaZb", "--n-chain", "2",
              "--set", "ha=1.0", "--set", "hb=0.8", "--set", "h1=0.6"]


def test_simulate_writes_matching_record(tmp_path, capsys):
    path = tmp_path / "rec.csv"
    code, out, _ = run_cli(
        ["simulate", *CUBE_FLAGS, "--count", "40", "--record", str(path)],
        capsys)
    assert code == 0
    assert "wrote 40 samples" in out
    rec = estimate.load_record(str(path))
    cfg = SensorConfig(2, 2, "YaZb", "xb")
    model = ssm.build(cfg)
    expect = ssm.impulse_response(
        model, {"ha": 1.0, "hb": 0.8, "h1": 0.6}, rec.times)
    assert np.array_equal(rec.values, expect)


def test_simulate_same_seed_identical_files(tmp_path, capsys):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["simulate", *CUBE_FLAGS, "--count", "30", "--noise-sigma",
            "0.001", "--seed", "5"]
    assert run_cli(argv + ["--record", str(p1)], capsys)[0] == 0
    assert run_cli(argv + ["--record", str(p2)], capsys)[0] == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_simulate_single_qubit_zeros_with_warning(tmp_path, capsys):
    path = tmp_path / "zero.csv"
    code, out, _ = run_cli(
        ["simulate", "--sensor-qubits", "1", "--measurement", "Yb",
         "--n-chain", "2", "--set", "hb=0.8", "--set", "h1=0.5",
         "--count", "20", "--record", str(path)], capsys)
    assert code == 0
    assert "warning" in out
    rec = estimate.load_record(str(path))
    assert np.all(rec.values == 0.0)


def test_simulate_requires_truth(capsys):
    code, _, err = run_cli(
        ["simulate", "--measurement", "YaZb", "--n-chain", "2"], capsys)
    assert code == 2
    assert "ground-truth" in err


def test_simulate_rejects_incomplete_truth(capsys):
    code, _, err = run_cli(
        ["simulate", "--measurement", "YaZb", "--n-chain", "2",
         "--set", "ha=1.0"], capsys)
    assert code == 2
    assert "missing" in err


def test_simulate_rejects_coarse_dt(capsys):
    code, _, err = run_cli(
        ["simulate", *CUBE_FLAGS, "--dt", "2.0"], capsys)
    assert code == 2
    assert "too coarse" in err


# -- estimate ----------------------------------------------------------------


def test_estimate_cube_round_trip(tmp_path, capsys):
    rec_path = tmp_path / "rec.csv"
    run_cli(["simulate", *CUBE_FLAGS, "--count", "120",
             "--record", str(rec_path)], capsys)
    code, out, _ = run_cli(
        ["estimate", *CUBE_FLAGS, "--record", str(rec_path)], capsys)
    assert code == 0
    match = re.search(r"max_abs_err = (\S+)", out)
    assert match is not None
    assert float(match.group(1)) < 1e-6


def test_estimate_ladder_round_trip(tmp_path, capsys):
    flags = ["--measurement", "ZaYb", "--n-chain", "5",
             "--set", "ha=1.0", "--set", "hb=0.9", "--set", "h1=1.2",
             "--set", "h2=0.7", "--set", "h3=1.1", "--set", "h4=0.8"]
    rec_path = tmp_path / "rec.csv"
    run_cli(["simulate", *flags, "--count", "72", "--record",
             str(rec_path)], capsys)
    code, out, _ = run_cli(
        ["estimate", *flags, "--record", str(rec_path)], capsys)
    assert code == 0
    match = re.search(r"max_abs_err = (\S+)", out)
    assert float(match.group(1)) < 1e-6
    assert "moment-chain" in out


def test_estimate_refuses_orthogonal(tmp_path, capsys):
    rec_path = tmp_path / "zero.csv"
    run_cli(["simulate", "--measurement", "YaYb", "--initial", "xa",
             "--n-chain", "2", "--set", "ha=1.0", "--set", "hb=0.8",
             "--set", "h1=0.5", "--count", "20", "--record",
             str(rec_path)], capsys)
    code, _, err = run_cli(
        ["estimate", "--measurement", "YaYb", "--initial", "xa",
         "--n-chain", "2", "--record", str(rec_path)], capsys)
    assert code == 3
    assert "refused" in err


def test_estimate_corrupted_csv_names_row(tmp_path, capsys):
    rec_path = tmp_path / "bad.csv"
    rec_path.write_text(
        "t,y,sigma,seed,scheme\n"
        "0.0,0.0,0.0,0,YaZb@2q\n"
        "0.1,not-a-number,0.0,0,YaZb@2q\n"
    )
    code, _, err = run_cli(
        ["estimate", "--measurement", "YaZb", "--n-chain", "2",
         "--record", str(rec_path)], capsys)
    assert code == 2
    assert "line 3" in err


def test_estimate_missing_record_flag(capsys):
    code, _, err = run_cli(
        ["estimate", "--measurement", "YaZb", "--n-chain", "2"], capsys)
    assert code == 2
    assert "--record" in err


# -- oracle-check ------------------------------------------------------------


def test_oracle_check_ladder(capsys):
    code, out, _ = run_cli(
        ["oracle-check", "--measurement", "ZaYb", "--n-chain", "3"], capsys)
    assert code == 0
    assert "oracle_agreement = True" in out
    for n in (2, 3, 4, 5):
        assert f"det_cm_N{n} = True" in out
    for n in (3, 5):
        assert f"det_p_bar_N{n} = True" in out
    match = re.search(r"oracle_max_residual = (\S+)", out)
    assert float(match.group(1)) <= 1e-8


def test_oracle_check_size_cap(capsys):
    code, _, err = run_cli(
        ["oracle-check", "--measurement", "ZaYb", "--n-chain", "13"], capsys)
    assert code == 2
    assert "qubit" in err.lower()


# -- reports and config files ------------------------------------------------


def test_machine_report_deterministic(tmp_path, capsys):
    rec_path = tmp_path / "rec.csv"
    run_cli(["simulate", *CUBE_FLAGS, "--count", "120", "--record",
             str(rec_path)], capsys)
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    argv = ["estimate", *CUBE_FLAGS, "--record", str(rec_path)]
    assert run_cli(argv + ["--report", str(r1)], capsys)[0] == 0
    assert run_cli(argv + ["--report", str(r2)], capsys)[0] == 0
    assert r1.read_bytes() == r2.read_bytes()


def test_machine_and_human_renderings_agree(tmp_path, capsys):
    rec_path = tmp_path / "rec.csv"
    run_cli(["simulate", *CUBE_FLAGS, "--count", "120", "--record",
             str(rec_path)], capsys)
    report_path = tmp_path / "r.json"
    _, human, _ = run_cli(
        ["estimate", *CUBE_FLAGS, "--record", str(rec_path),
         "--report", str(report_path)], capsys)
    payload = json.loads(report_path.read_text())
    for name, value in payload["estimates"].items():
        assert f"{name} = {value!r}" in human
    for name, value in payload["residuals"].items():
        assert f"{name} = {value!r}" in human


def test_report_verb_rerenders(tmp_path, capsys):
    rec_path = tmp_path / "rec.csv"
    run_cli(["simulate", *CUBE_FLAGS, "--count", "120", "--record",
             str(rec_path)], capsys)
    report_path = tmp_path / "r.json"
    _, human, _ = run_cli(
        ["estimate", *CUBE_FLAGS, "--record", str(rec_path),
         "--report", str(report_path)], capsys)
    code, rendered, _ = run_cli(["report", str(report_path)], capsys)
    assert code == 0
    # the re-rendered view carries the same values (runtime line differs)
    strip = lambda text: [
        ln for ln in text.splitlines()
        if not ln.startswith("  runtime") and "report written" not in ln
    ]
    assert strip(rendered) == strip(human)


def test_report_verb_rejects_garbage(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run_cli(["report", str(bad)], capsys)
    assert code == 2
    assert "JSON" in err


def test_config_file_drives_run(tmp_path, capsys):
    rec_path = tmp_path / "rec.csv"
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(
        "[scheme]\n"
        "n_chain = 2\n"
        "sensor_qubits = 2\n"
        "measurement = YaZb\n"
        "initial = xb\n"
        "\n"
        "[truth]\n"
        "ha = 1.0\n"
        "hb = 0.8\n"
        "h1 = 0.6\n"
        "\n"
        "[sampling]\n"
        "count = 120\n"
        "seed = 4\n"
        "\n"
        f"[output]\nrecord = {rec_path}\n"
    )
    code, out, _ = run_cli(["simulate", "--config", str(cfg_path)], capsys)
    assert code == 0
    assert "wrote 120 samples" in out
    code, out, _ = run_cli(["estimate", "--config", str(cfg_path)], capsys)
    assert code == 0
    match = re.search(r"max_abs_err = (\S+)", out)
    assert float(match.group(1)) < 1e-6


def test_config_file_flag_overrides(tmp_path, capsys):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("[scheme]\nn_chain = 2\nmeasurement = YaZb\n")
    rec_path = tmp_path / "rec.csv"
    code, out, _ = run_cli(
        ["simulate", "--config", str(cfg_path), "--n-chain", "1",
         "--set", "ha=1.0", "--set", "hb=0.7", "--count", "24",
         "--record", str(rec_path)], capsys)
    assert code == 0
    rec = estimate.load_record(str(rec_path))
    assert rec.scheme_tag == "YaZb@2q"
    assert rec.count == 24


def test_config_file_unknown_key_rejected(tmp_path, capsys):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("[scheme]\nn_chian = 2\n")
    code, _, err = run_cli(["analyze", "--config", str(cfg_path)], capsys)
    assert code == 2
    assert "n_chian" in err


def test_config_file_missing(capsys):
    code, _, err = run_cli(
        ["analyze", "--config", "/nonexistent/run.cfg"], capsys)
    assert code == 2
    assert "not found" in err
