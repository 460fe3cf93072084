import json

import pytest

from sskm.cli import main, parse_params, parse_range
from sskm.core import load_instance
from sskm.errors import InvalidArgumentError
from sskm.harness import COLUMNS, read_csv


def test_parse_helpers():
    assert parse_params(["k=4", "separation=2.5", "name=abc", "flag=true"]) == \
        {"k": 4, "separation": 2.5, "name": "abc", "flag": True}
    assert parse_range("0..3") == [0, 1, 2, 3]
    assert parse_range("7") == [7] and parse_range("1,4") == [1, 4]
    for bad in ("3..1", "a..b", "x"):
        with pytest.raises(InvalidArgumentError):
            parse_range(bad)
    with pytest.raises(InvalidArgumentError):
        parse_params(["novalue"])


def test_gen_then_run(tmp_path):
    inst_path, out = tmp_path / "inst.json", tmp_path / "res.csv"
    assert main(["gen", "--family", "gaussian", "--params", "k=3", "n=150", "seed=2",
                 "--out", str(inst_path)]) == 0
    inst, truth = load_instance(inst_path)
    assert inst.n == 150 and truth is not None
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sample_cap": 40}))
    code = main(["run", "--algo", "ring,baseline", "--instance", str(inst_path),
                 "--epsilon", "0.2", "--delta", "0.2", "--seeds", "0..2",
                 "--config", str(cfg), "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 6 and list(rows[0]) == COLUMNS
    assert all(r["status"] == "ok" for r in rows)


def test_run_exit_codes(tmp_path, capsys):
    inst_path, out = tmp_path / "inst.json", tmp_path / "res.csv"
    main(["gen", "--family", "gaussian", "--params", "k=2", "n=5000", "--out", str(inst_path)])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q1_cap": 20}))
    base = ["run", "--instance", str(inst_path), "--epsilon", "0.3", "--delta", "0.3",
            "--out", str(out)]
    # an algorithm failure still writes the CSV
    assert main(base + ["--algo", "fast", "--config", str(cfg)]) == 3
    assert read_csv(out)[0]["status"].startswith("InvalidArgumentError")
    cfg.write_text(json.dumps({"unknown_key": 1}))
    assert main(base + ["--algo", "ring", "--config", str(cfg)]) == 2
    cfg.write_text("[1, 2]")
    assert main(base + ["--algo", "ring", "--config", str(cfg)]) == 2
    cfg.write_text("{not json")
    assert main(base + ["--algo", "ring", "--config", str(cfg)]) == 2
    assert main(base + ["--algo", "nope"]) == 2
    missing = ["run", "--algo", "ring", "--instance", str(tmp_path / "missing.json"),
               "--epsilon", "0.2", "--delta", "0.2", "--out", str(out)]
    assert main(missing) == 2
    assert "error:" in capsys.readouterr().err


def test_gen_rejects_bad_params(tmp_path):
    assert main(["gen", "--family", "gaussian", "--params", "k=0",
                 "--out", str(tmp_path / "x.json")]) == 2
    assert main(["gen", "--family", "fms-subsets", "--params", "r=7",
                 "--out", str(tmp_path / "x.json")]) == 3


@pytest.mark.parametrize("check,params", [
    ("lemma51", ["r=1..4"]), ("inaba", []), ("triangle", ["samples=1000"]),
    ("oracle", ["trials=50"]),
])
def test_verify_checks_pass(check, params, capsys):
    assert main(["verify", "--check", check, "--params", *params]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_verify_reports_a_failed_check(capsys):
    assert main(["verify", "--check", "inaba", "--params", "eps=0.05", "delta=0.05", "m=2"]) == 1
    assert json.loads(capsys.readouterr().out)["passed"] is False
    assert main(["verify", "--check", "inaba", "--params", "trials=10"]) == 2
