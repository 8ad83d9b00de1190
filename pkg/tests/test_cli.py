import csv
import io
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from spacelike import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_kernel_gue_diagonal_column(capsys):
    code, out, _ = run(["kernel", "--name", "gue", "--diag", "--n", "1", "--t", "1",
                        "--xmin", "-3", "--xmax", "3", "--num", "13"], capsys)
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["x1", "n1", "t1", "x2", "n2", "t2", "value", "error"]
    for r in rows:
        x = float(r["x1"])
        assert float(r["value"]) == pytest.approx(math.exp(-x * x) / math.sqrt(math.pi), abs=1e-10)


def test_kernel_discrete_point(capsys):
    code, out, _ = run(["kernel", "--name", "discrete", "--n", "1", "--t", "1", "--x", "-1",
                        "--diag"], capsys)
    assert code == 0
    assert float(read_csv(out)[0]["value"]) == pytest.approx(math.exp(-1), abs=1e-12)


@pytest.mark.parametrize("name", ["gue-static", "scaled", "lue"])
def test_other_kernels_run(name, capsys):
    argv = ["kernel", "--name", name, "--n", "1", "--x", "0.5", "--x2", "0.7", "1.1"]
    if name == "lue":
        argv += ["--p", "2"]
    code, out, _ = run(argv, capsys)
    assert code == 0 and len(read_csv(out)) == 2


def test_usage_errors_exit_2(capsys):
    assert run(["kernel", "--name", "nope"], capsys)[0] == 2
    assert run(["kernel", "--name", "gue", "--t", "0", "--x", "0"], capsys)[0] == 2
    assert run(["simulate", "--model", "particles"], capsys)[0] == 2      # no seed
    assert run(["verify", "--suite", "eynard", "--tolerance", "bogus=1"], capsys)[0] == 2
    assert run(["eynard-check"], capsys)[0] == 2
    assert run(["bogus"], capsys)[0] == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    spec = {"format": "spacelike-weight-spec/1", "sets": [[1.0, 2.0]], "copies": [0],
            "times": [[0.5]], "phi": [[[1.0, 1.0]]], "transitions": [[]], "psi": [[0.5, -0.5]]}
    path = tmp_path / "singular.json"
    path.write_text(json.dumps(spec))
    assert run(["eynard-check", "--spec", str(path), "--point", "1,0,1"], capsys)[0] == 3


def test_simulate_models(capsys):
    code, out, _ = run(["simulate", "--model", "particles", "--seed", "1", "--levels", "2",
                        "--times", "1", "--samples", "4"], capsys)
    rows = read_csv(out)
    assert code == 0 and len(rows) == 4 * 3
    code, out, _ = run(["simulate", "--model", "dbm-minors", "--seed", "1", "--N", "3",
                        "--samples", "5"], capsys)
    rows = read_csv(out)
    assert code == 0 and len(rows) == 5 * 6
    lam = {(int(r["sample"]), int(r["level"]), int(r["k"])): float(r["lambda"]) for r in rows}
    for s in range(5):
        assert lam[(s, 3, 1)] <= lam[(s, 2, 1)] <= lam[(s, 3, 2)] <= lam[(s, 2, 2)] <= lam[(s, 3, 3)]
    code, out, _ = run(["simulate", "--model", "wishart", "--seed", "1", "--N", "2", "--p", "3",
                        "--samples", "2"], capsys)
    assert code == 0 and all(float(r["lambda"]) >= 0 for r in read_csv(out))


def test_simulate_rerun_is_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        assert run(["simulate", "--model", "dbm-minors", "--seed", "3", "--N", "3", "--times", "0.5",
                    "1", "--samples", "20", "-o", str(path)], capsys)[0] == 0
        outs.append(path.read_bytes())
        man = json.loads((tmp_path / f"run{i}.csv.manifest.json").read_text())
        assert man["seed"] == 3 and man["config"]["N"] == 3 and "version" in man
    assert outs[0] == outs[1]


def test_output_directory_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path))
    assert run(["kernel", "--name", "discrete", "--n", "1", "--x", "0", "--diag"], capsys)[0] == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert len(files) == 2 and any(f.endswith(".manifest.json") for f in files)
    assert run(["kernel", "--name", "discrete", "--n", "1", "--x", "0", "--diag", "-o", "-"],
               capsys)[1].startswith("x1,")


def test_config_file_with_flags_winning(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kernel": {"name": "discrete", "n": 1, "x": [-1], "diag": True,
                                          "t": 5.0}}))
    code, out, _ = run(["kernel", "--config", str(cfg), "--t", "1"], capsys)
    assert code == 0
    row = read_csv(out)[0]
    assert float(row["t1"]) == 1.0
    assert float(row["value"]) == pytest.approx(math.exp(-1), abs=1e-12)
    cfg.write_text(json.dumps({"kernel": {"unknown_key": 1}}))
    assert run(["kernel", "--config", str(cfg)], capsys)[0] == 2


def test_verify_eynard_and_canary(tmp_path, capsys):
    path = tmp_path / "rep.json"
    assert run(["verify", "--suite", "eynard", "--trials", "5", "-o", str(path)], capsys)[0] == 0
    assert json.loads(path.read_text())["pass"] is True
    code, _, _ = run(["verify", "--suite", "eynard", "--trials", "5", "--tolerance", "eynard=1e-30",
                      "-o", str(path)], capsys)
    assert code == 1
    assert json.loads(path.read_text())["pass"] is False


def test_eynard_check_random_and_dump(tmp_path, capsys):
    dump = tmp_path / "spec.json"
    code, out, _ = run(["eynard-check", "--random", "--seed", "4", "--dump-spec", str(dump)], capsys)
    assert code == 0 and json.loads(out)["pass"] is True
    code, out, _ = run(["eynard-check", "--spec", str(dump), "--point", "1,0,0"], capsys)
    assert code == 0


@pytest.mark.skipif(shutil.which("spacelike") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["spacelike", "kernel", "--name", "gue", "--diag", "--x", "0"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert float(read_csv(out.stdout)[0]["value"]) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
