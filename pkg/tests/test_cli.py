import json
import subprocess
import sys

import numpy as np
import pytest

from qflow.cli import (
    ResultTable,
    RunConfig,
    UsageError,
    emit_csv,
    format_csv,
    main,
    parse_config,
    parse_csv,
    parse_length,
    parse_modes,
    parse_range,
    read_csv,
    run,
)


def test_table_one_flags():
    cfg = parse_config(["intervals", "--lambda", "6", "--a", "1", "--n", "1", "--r", "a", "--tau", "10:20"])
    assert cfg.scenario == "intervals"
    p = cfg.barrier()
    assert (p.lam, p.a, p.n) == (6.0, 1.0, 1)
    assert parse_length(cfg.text("r"), cfg.a) == 1.0
    assert parse_range(cfg.text("tau"), "tau")[:2] == (10.0, 20.0)


def test_table_three_flags():
    cfg = parse_config(["backflow-opt", "--nmax", "20", "--window", "0.02:0.04"])
    assert cfg.window("window") == (0.02, 0.04)
    assert cfg.text("nmax") == "20"


def test_empty_argv_is_usage_error(capsys):
    assert main([]) == 2
    err = capsys.readouterr().err
    assert json.loads(err.strip().splitlines()[-1])["error"] == "UsageError"


def test_missing_required_field_named():
    with pytest.raises(UsageError, match="'window'"):
        parse_config(["backflow-opt", "--nmax", "20"])


def test_conflicting_fields():
    with pytest.raises(UsageError):
        parse_config(["intervals", "--modes", "1:1", "--lambda", "3", "--tau", "0:1"])
    with pytest.raises(UsageError):
        parse_config(["decay", "--nmax", "3", "--tau", "1:2"])


def test_config_file_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# Table I run\nlambda = 3   # overridden below\nn = 2\ntau = 10:20\n")
    cfg = parse_config(["intervals", "--config", str(path), "--lambda", "6"])
    d = cfg.options_dict()
    assert d["lambda"] == "6" and d["n"] == "2" and d["tau"] == "10:20"
    assert cfg.text("a") == "1"


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("lamda = 6\n")
    with pytest.raises(UsageError, match="unknown key"):
        parse_config(["decay", "--config", str(path)])


def test_config_file_can_name_scenario(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("scenario = backflow-opt\nnmax = 2\nwindow = 0.02:0.04\n")
    assert parse_config(["--config", str(path)]).scenario == "backflow-opt"


def test_value_parsers():
    assert parse_length("8a", 1.5) == 12.0
    assert parse_length("2.5", 1.0) == 2.5
    assert parse_range("0:10a:11", "r", length_a=2.0) == (0.0, 20.0, 11)
    with pytest.raises(UsageError):
        parse_range("5:1", "tau")
    terms = parse_modes("1:0.7071+0i,23:0.5+0.5i")
    assert terms == [(1, 0.7071 + 0j), (23, 0.5 + 0.5j)]
    with pytest.raises(UsageError):
        parse_modes("1-0.5")


def test_modes_are_normalised():
    cfg = parse_config(["free-evolve", "--modes", "1:0.7071+0i,23:0.5+0.5i", "--tau", "0:0.1:3"])
    sup = cfg.superposition()
    assert np.sum(np.abs(sup.coefficients) ** 2) == pytest.approx(1.0, abs=1e-14)


def test_csv_round_trip():
    t = ResultTable(("i", "x"), ("1", "L"), [(1, 0.1), (2, 1e-300), (3, -2.5e17)],
                    (("note", "a b"),), (("tau", "0:1"),), "decay")
    assert parse_csv(format_csv(t)) == t


def test_empty_rows_give_metadata_and_header(tmp_path):
    t = ResultTable(("r", "tau", "log10_neg_j"), ("L", "T", "1"), [], (), (), "current-map")
    path = tmp_path / "e.csv"
    emit_csv(t, str(path))
    lines = path.read_text().splitlines()
    assert lines[-1] == "r,tau,log10_neg_j"
    assert all(line.startswith("#") for line in lines[:-1])
    assert read_csv(str(path)) == t


def test_row_width_checked():
    with pytest.raises(ValueError):
        ResultTable(("a", "b"), ("1", "1"), [(1,)])


def test_backflow_opt_table(tmp_path):
    out = tmp_path / "t3.csv"
    assert main(["backflow-opt", "--nmax", "2,5", "--window", "0.02:0.04", "--out", str(out)]) == 0
    t = read_csv(str(out))
    assert t.columns == ("n", "lambda_low", "e1_low", "lambda_high", "e1_high")
    assert [r[0] for r in t.rows] == [2, 5]
    assert t.rows[0][3] == pytest.approx(0.00032, abs=1e-5)


def test_rerun_from_result_is_byte_identical(tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert main(["intervals", "--lambda", "6", "--r", "a", "--tau", "10:13", "--out", str(first)]) == 0
    assert main(["--config", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    t = read_csv(str(first))
    assert t.columns == ("i", "tau_start", "tau_end", "P", "delta")
    assert len(t.rows) == 3


def test_run_is_deterministic():
    cfg = parse_config(["free-evolve", "--modes", "1:1,2:1i", "--tau", "0.01:0.1:5", "--observable", "density"])
    assert format_csv(run(cfg)) == format_csv(run(cfg))


def test_decay_columns():
    cfg = parse_config(["decay", "--lambda", "3", "--n", "2", "--tau", "1:3:3", "--m", "1"])
    t = run(cfg)
    assert t.columns == ("tau", "P", "S2", "S1")
    assert any(k == "truncation" for k, _ in t.metadata)
    assert all(0 <= row[2] <= row[1] <= 1 for row in t.rows)


def test_current_map_sparse_triples():
    cfg = parse_config(["current-map", "--r", "0.5:3a:6", "--tau", "5:20:16"])
    t = run(cfg)
    assert t.columns == ("r", "tau", "log10_neg_j")
    assert all(len(r) == 3 for r in t.rows)


def test_free_current_trace():
    cfg = parse_config(["free-evolve", "--modes", "1:0.7071+0i,23:0.5+0.5i", "--observable", "current",
                        "--r", "1", "--tau", "0:0.12:13"])
    t = run(cfg)
    assert t.columns == ("tau", "j") and len(t.rows) == 13


def test_runtime_error_is_json_record(capsys):
    # the window ends inside the first negative stretch of Table I
    code = main(["intervals", "--tau", "10.8:10.9"])
    err = capsys.readouterr().err.strip().splitlines()[-1]
    rec = json.loads(err)
    assert code == 1 and rec["scenario"] == "intervals" and rec["error"] == "DomainError"


def test_unknown_observable():
    cfg = parse_config(["free-evolve", "--modes", "1:1", "--tau", "0:1:3", "--observable", "spin"])
    with pytest.raises(UsageError):
        run(cfg)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qflow", "backflow-opt", "--nmax", "2", "--window", "0.02:0.04"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("# qflow")


def test_runconfig_rejects_unknown_scenario():
    with pytest.raises(UsageError):
        RunConfig("teleport", ())
