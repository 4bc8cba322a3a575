import csv
import subprocess
import sys

import pytest

from hybridrelay.cli import main

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_missing_scenario_file(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) != 0
    assert "scenario file not found" in capsys.readouterr().err


def test_bad_field_is_named(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("sweep: {axis: weather, values: [1]}\n")
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path)]) == 2
    assert "sweep.axis" in capsys.readouterr().err


def test_fig3_row_shape(tmp_path):
    out = tmp_path / "fig3"
    assert main(["figure", "--figure", "fig3", "--seed", "7", "--slots", "50", "--out", str(out)]) == 0
    got = rows(out / "runs.csv")
    keys = {(r["scenario"], r["policy"], r["value"], r["seed"]) for r in got}
    # 3 variants x 3 policies x 11 attenuation values x 1 seed
    assert len(got) == len(keys) == 3 * 3 * 11
    assert {r["seed"] for r in got} == {"7"}
    assert len(rows(out / "summary.csv")) == 3 * 3 * 11


def test_seed_override_is_byte_identical(tmp_path):
    args = ["figure", "--figure", "fig5", "--seed", "7", "--slots", "200", "--iterations", "30"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("runs.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_env_output_directory(tmp_path, monkeypatch):
    monkeypatch.setenv("HYBRIDRELAY_OUT", str(tmp_path / "env"))
    p = tmp_path / "s.yaml"
    p.write_text("network: {relays: 1}\npolicies: [nonba]\nrun: {slots: 20, seeds: [0]}\n")
    assert main(["run", "--scenario", str(p)]) == 0
    assert (tmp_path / "env" / "runs.csv").is_file()


def test_train_lambda_writes_weights(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("network: {relays: 2}\nrun: {train_iterations: 20, train_samples: 200}\n")
    out = tmp_path / "w.txt"
    assert main(["train-lambda", "--scenario", str(p), "--output", str(out)]) == 0
    assert out.read_text().startswith("lambda = ")


def test_verify_fresh_checkout_passes(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5 and all(line.startswith("[PASS]") for line in lines)


def test_verify_corrupted_lambda_fails(tmp_path, capsys):
    p = tmp_path / "lambda.txt"
    p.write_text("lambda = 0.0, 0.0, 0.0\n")
    assert main(["verify", "--suite", "lambda-residual", "--lambda", str(p), "--slots", "2000"]) == 1
    assert "[FAIL] lambda-residual" in capsys.readouterr().out
    p.write_text("lambda = banana\n")
    assert main(["verify", "--suite", "lambda-residual", "--lambda", str(p)]) == 1


def test_verify_slot_flag_honored(capsys):
    assert main(["verify", "--suite", "littles-law", "--suite", "distributed", "--slots", "1500"]) == 0
    out = capsys.readouterr().out
    assert out.count("B=1500") == 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "hybridrelay", "verify", "--suite", "nonba-oracle"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("[PASS] nonba-oracle")
