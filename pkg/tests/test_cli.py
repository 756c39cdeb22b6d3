import json
import subprocess
import sys

import jsonschema
import pytest

from qcf.cli import main, parse_angle
from qcf.harness import load_schema


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def schema_for(report):
    name = report["schema"].split("/")[1].replace("-", "_")
    return load_schema(name)


def validate(report):
    jsonschema.validate(report, schema_for(report))
    if report.get("bias"):
        jsonschema.validate(report["bias"], schema_for(report["bias"]))


def test_flip_completes_and_validates(capsys):
    code, out, _ = run(capsys, "flip", "--code", "hamming-63-57", "--seed", "42", "--fa", "0.1", "--fb", "0.1", "--fc", "0.05")
    report = json.loads(out)
    validate(report)
    assert code == 0
    assert report["outcome"]["status"] == "completed"
    assert report["outcome"]["c"] in (0, 1)


def test_flip_byte_identical(capsys):
    _, a, _ = run(capsys, "flip", "--seed", "7")
    _, b, _ = run(capsys, "flip", "--seed", "7")
    _, c, _ = run(capsys, "flip", "--seed", "8")
    assert a == b != c


def test_flip_infeasible_config_exit_2(capsys):
    code, out, err = run(capsys, "flip", "--fa", "0", "--fb", "0", "--fc", "0", "--code", "hamming-63-57")
    assert code == 2 and out == ""
    assert "infeasible" in err


def test_flip_abort_exit_3(capsys):
    seeds = range(40)
    codes = []
    for seed in seeds:
        code, out, _ = run(capsys, "flip", "--alice", "bitflip-1", "--seed", str(seed))
        report = json.loads(out)
        validate(report)
        assert code == (0 if report["outcome"]["status"] == "completed" else 3)
        codes.append(code)
    assert 3 in codes and 0 in codes


def test_unknown_strategy_exit_2(capsys):
    code, _, err = run(capsys, "flip", "--bob", "oracle")
    assert code == 2 and "unknown Bob strategy" in err


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("QCF_SEED", "42")
    _, from_env, _ = run(capsys, "flip")
    monkeypatch.delenv("QCF_SEED")
    _, from_flag, _ = run(capsys, "flip", "--seed", "42")
    assert from_env == from_flag
    monkeypatch.setenv("QCF_SEED", "x")
    assert run(capsys, "flip")[0] == 2


def test_transcript_file(capsys, tmp_path):
    path = tmp_path / "t.txt"
    run(capsys, "flip", "--seed", "3", "--transcript", str(path))
    text = path.read_text()
    assert text and "alice" in text


def test_out_file_and_timing(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "flip", "--seed", "3", "--out", str(path))
    assert code == 0 and out == ""
    assert "timing" not in json.loads(path.read_text())
    _, out, _ = run(capsys, "flip", "--seed", "3", "--timing")
    assert json.loads(out)["timing"]["seconds"] >= 0


def test_montecarlo_report(capsys, tmp_path):
    csv_path = tmp_path / "sizes.csv"
    argv = ("montecarlo", "--trials", "30", "--seed", "5", "--csv", str(csv_path))
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b
    report = json.loads(a)
    validate(report)
    assert report["bias"] is None
    assert sum(report["outcomes"].values()) == 30
    rows = csv_path.read_text().strip().splitlines()
    assert len(rows) == 31 and rows[0].startswith("trial,status,c")
    assert sum(1 for r in rows[1:] if r.split(",")[4]) == report["set_sizes"]["runs_with_sizes"]


def test_montecarlo_rejects_zero_trials(capsys):
    assert run(capsys, "montecarlo", "--trials", "0")[0] == 2


def test_attack_bitflip_report(capsys):
    code, out, _ = run(capsys, "attack", "--alice", "bitflip-1", "--trials", "60", "--seed", "2")
    report = json.loads(out)
    validate(report)
    cheat = report["bias"]["cheat"]
    assert code == 0 and cheat["activated"] > 0
    assert cheat["activated_abort_histogram"] == {"B9.1-codeword": cheat["activated"]}


def test_attack_workers_match_serial(capsys):
    argv = ("attack", "--bob", "helstrom-guess", "--s", "63", "--trials", "40", "--seed", "9")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--workers", "2")
    assert a == b


def test_s_shorthand(capsys):
    _, a, _ = run(capsys, "flip", "--s", "63", "--seed", "1")
    _, b, _ = run(capsys, "flip", "--code", "hamming-63-57", "--seed", "1")
    assert a == b
    assert run(capsys, "flip", "--s", "64")[0] == 2


def test_verify_formulas(capsys, tmp_path):
    csv_path = tmp_path / "v.csv"
    code, out, _ = run(capsys, "verify-formulas", "--s", "2000", "--seed", "1", "--theta", "pi/6", "--theta", "pi/3",
                       "--csv", str(csv_path))
    report = json.loads(out)
    validate(report)
    assert code == 0 and report["all_pass"]
    assert len(report["cells"]) == 6
    assert csv_path.read_text().startswith("fa,fb,fc,theta")


def test_verify_formulas_bad_theta(capsys):
    assert run(capsys, "verify-formulas", "--theta", "pi/2")[0] == 2
    assert run(capsys, "verify-formulas", "--theta", "half")[0] == 2
    assert run(capsys, "verify-formulas", "--grid", "0.1,0.2")[0] == 2


@pytest.mark.parametrize("text,value", [("pi/4", 0.7853981633974483), ("2*pi/5", 1.2566370614359172),
                                        ("pi / 6", 0.5235987755982988), ("0.3", 0.3)])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("preset,d,census", [("hamming-15-11", 3, (1024, 1024)), ("repetition-5", 5, (1, 1))])
def test_code_command(capsys, preset, d, census):
    code, out, _ = run(capsys, "code", "--preset", preset)
    report = json.loads(out)
    validate(report)
    assert code == 0
    assert report["code"]["d"] == d
    assert (report["parity_census"]["even"], report["parity_census"]["odd"]) == census


def test_code_feasibility_line(capsys):
    _, out, _ = run(capsys, "code", "--preset", "hamming-63-57")
    assert json.loads(out)["feasibility"] == "2d/s = 0.095 < f_a+f_c < 0.5"


def test_code_file_and_random(capsys, tmp_path):
    path = tmp_path / "rep3.txt"
    path.write_text("3 1 3\n111\n")
    code, out, _ = run(capsys, "code", "--code-file", str(path))
    assert code == 0 and json.loads(out)["code"]["d"] == 3
    code, out, _ = run(capsys, "code", "--random", "20", "8", "4")
    assert code == 0 and json.loads(out)["code"]["provenance"] == "random-verified"
    assert run(capsys, "code", "--random", "10", "13", "1")[0] == 2


def test_console_entry_exit_code():
    r = subprocess.run([sys.executable, "-m", "qcf.cli", "flip", "--fa", "0", "--fb", "0", "--fc", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 2
