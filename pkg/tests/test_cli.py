import json
import subprocess
import sys

import numpy as np
import pytest

from evclass.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, UsageError, main, parse_config
from evclass.meanest import ConfidenceSequence
from evclass.streams import read_stream, write_stream

HALF = json.dumps({"family": {"name": "interval_mean", "mu": 0.5}})
NON_PROPER = json.dumps({"grid": {"points": [0, 1, 2]}, "tight": ["x"]})


def test_parse_classify(tmp_path):
    p = tmp_path / "h.json"
    p.write_text(HALF)
    cfg = parse_config(["classify", "--hypothesis", str(p)])
    assert cfg.command == "classify" and cfg.hypothesis == str(p)


def test_parse_cs():
    cfg = parse_config(["cs", "--mu-grid", "0.01:0.99:0.001", "--delta", "0.05", "--stream", "data.csv"])
    assert (cfg.command, cfg.mu_grid, cfg.delta, cfg.stream) == ("cs", "0.01:0.99:0.001", 0.05, "data.csv")


def test_bad_delta():
    with pytest.raises(UsageError, match="delta"):
        parse_config(["test", "--delta", "1.5", "--hypothesis", HALF, "--stream", "s.csv"])


def test_config_file_and_override(tmp_path):
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"delta": 0.1, "mu-grid": "0.2,0.4", "stream": "a.csv"}))
    cfg = parse_config(["cs", "--config", str(c), "--delta", "0.01"])
    assert cfg.delta == 0.01 and cfg.mu_grid == "0.2,0.4"


def test_unknown_config_key_named(tmp_path, capsys):
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"delta": 0.1, "colour": "red"}))
    assert main(["cs", "--config", str(c), "--stream", "a.csv"]) == EXIT_USAGE
    assert "'colour'" in capsys.readouterr().err


def test_unknown_tolerance(capsys):
    assert main(["classify", "--hypothesis", HALF, "--tolerance", "speed=1"]) == EXIT_USAGE
    assert "speed" in capsys.readouterr().err


def test_synthetic_needs_seed():
    with pytest.raises(UsageError, match="seed"):
        parse_config(["test", "--hypothesis", HALF, "--synthetic", '{"distribution": "bernoulli", "p": 0.5}',
                      "--rounds", "5"])


def test_stream_source_exclusive():
    with pytest.raises(UsageError):
        parse_config(["test", "--hypothesis", HALF])


def test_classify_output(capsys):
    assert main(["classify", "--hypothesis", HALF]) == EXIT_OK
    out = capsys.readouterr().out
    assert "classification: proper" in out and "minimal_dimension: 1" in out
    assert main(["classify", "--hypothesis", NON_PROPER]) == EXIT_OK
    assert "finitely_non_proper" in capsys.readouterr().out


def test_test_outside_support(tmp_path, capsys):
    s = tmp_path / "s.csv"
    write_stream(s, [[1.0], [0.0]])
    out = tmp_path / "t.csv"
    assert main(["test", "--hypothesis", NON_PROPER, "--stream", str(s), "-o", str(out)]) == EXIT_OK
    assert "rejected(1, outside_support)" in capsys.readouterr().out
    np.testing.assert_array_equal(read_stream(out), [[1.0]])


def test_test_infeasible_strategy_is_usage_error(tmp_path, capsys):
    s = tmp_path / "s.csv"
    write_stream(s, [[1.0]])
    code = main(["test", "--hypothesis", HALF, "--stream", str(s), "--strategy", '{"kind":"fixed","lam":[3]}'])
    assert code == EXIT_USAGE and "outside the feasible set" in capsys.readouterr().err


def test_cs_byte_identical(tmp_path):
    args = ["cs", "--mu-grid", "0.1:0.9:0.1", "--synthetic", '{"distribution":"bernoulli","p":0.3}',
            "--seed", "7", "--rounds", "40"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["-o", str(a)]) == EXIT_OK
    assert main(args + ["-o", str(b), "--workers", "2"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    cs = ConfidenceSequence.from_csv(a)
    assert cs.rounds == 40 and cs.is_nested()


def test_cs_heavy_stdout(capsys):
    assert main(["cs", "--family", "heavy", "--mu-grid=-0.5,0,0.5", "--synthetic",
                 '{"distribution":"discrete","values":[1],"probs":[1]}', "--seed", "1", "--rounds", "2"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,mu,in_set,R_t,U_t" and lines[-1].endswith(",1")


def test_verify_optimality(capsys):
    assert main(["verify-optimality", "--trials", "100", "--seed", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    resid = float(out.split("max_residual: ")[1].split()[0])
    assert resid <= 1e-8


def test_verify_optimality_failure_exit_code(capsys):
    # an absurdly tight residual tolerance forces the dual-class check to fail
    assert main(["verify-optimality", "--trials", "5", "--seed", "1",
                 "--hypothesis", json.dumps({"grid": {"points": [0, 0.3, 0.6, 1]}, "tight": ["0.4 - x"]}),
                 "--tolerance", "dual_residual=-1"]) == EXIT_VERIFY


def test_simulate_type_i_small(capsys):
    code = main(["simulate", "--hypothesis", json.dumps({"family": {"name": "interval_mean", "mu": 0.5, "step": 0.1}}),
                 "--rounds", "50", "--replicates", "40", "--seed", "2"])
    out = capsys.readouterr().out
    assert code == EXIT_OK and "type_i_rate:" in out and "standard_error:" in out


def test_simulate_coverage_failure_exit_code(capsys):
    code = main(["simulate", "--mode", "coverage", "--synthetic", '{"distribution":"bernoulli","p":0.7}',
                 "--true-mu", "0.3", "--mu-grid", "0.3,0.7", "--rounds", "200", "--replicates", "10", "--seed", "1"])
    assert code == EXIT_VERIFY


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "evclass", "classify", "--hypothesis", HALF],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "proper" in r.stdout
    r = subprocess.run([sys.executable, "-m", "evclass", "frobnicate"], capture_output=True, text=True)
    assert r.returncode == 1
