import json
import pathlib

import pytest

from crowdsched.cli import main

E1 = str(pathlib.Path(__file__).with_name("e1.json"))


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_validate(capsys, tmp_path):
    code, out = run(capsys, "validate", E1)
    assert code == 0 and json.loads(out.out)["valid"]
    bad = json.loads(pathlib.Path(E1).read_text())
    bad["users"][0]["end"] = 0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, out = run(capsys, "validate", str(path))
    assert code == 2 and "empty window" in out.out


def test_solve_offline_branches(capsys):
    code, out = run(capsys, "solve-offline", E1, "--branch", "a")
    data = json.loads(out.out)
    assert code == 0 and data["payments"] == ["4", "0", "1"] and data["violations"] == []
    code, out = run(capsys, "solve-offline", E1, "--branch", "b")
    assert json.loads(out.out)["payments"] == ["10", "0", "0"]
    code, _ = run(capsys, "solve-offline", E1, "--branch", "coin", "--seed", "3")
    assert code == 0


def test_solve_offline_flags_budget_violation(capsys, tmp_path):
    inst = {
        "budget": "10",
        "lambda": 10,
        "tasks": [{"id": 0, "unit_value": "1"}],
        "users": [{"id": 0, "task": 0, "cost": "1/10", "start": 0, "end": 10}],
    }
    path = tmp_path / "long.json"
    path.write_text(json.dumps(inst))
    code, out = run(capsys, "solve-offline", str(path), "--branch", "a")
    assert code == 1 and json.loads(out.out)["total_payment"] == "7381/504"


def test_solve_online(capsys):
    code, out = run(capsys, "solve-online", E1, "--mech", "sampling", "--xi", "1")
    assert code == 0 and json.loads(out.out)["sample_revenue"] == "4"
    code, out = run(capsys, "solve-online", E1, "--mech", "secretary", "--order-seed", "2")
    assert code == 0 and json.loads(out.out)["mechanism"] == "secretary"


def test_stream_replay(capsys, tmp_path):
    lines = [
        {"user": 2, "task": 1, "cost": "1", "start": 0, "end": 4},
        {"user": 0, "task": 0, "cost": "1", "start": 0, "end": 2},
        {"user": 1, "task": 0, "cost": "2", "start": 1, "end": 3},
    ]
    path = tmp_path / "arrivals.jsonl"
    path.write_text("\n".join(json.dumps(x) for x in lines) + "\n")
    code, out = run(capsys, "solve-online", E1, "--mech", "secretary", "--arrivals", str(path))
    data = json.loads(out.out)
    assert code == 0 and data["total_payment"] == "10"
    assert data["decisions"][1] == {"user": 0, "slots": [0], "payment": "10"}


def test_oracle_commands(capsys):
    code, out = run(capsys, "oracle", "opt", E1)
    assert code == 0 and json.loads(out.out)["value"] == "10"
    code, out = run(capsys, "oracle", "payment", E1)
    assert code == 0 and all(w["equal"] for w in json.loads(out.out)["winners"])
    code, out = run(capsys, "oracle", "sweep", E1, "--mech", "secretary")
    assert code == 0 and len(json.loads(out.out)["reports"]) == 3


def test_gen_partition(capsys):
    code, out = run(capsys, "gen-partition", "1", "1", "2")
    assert code == 0 and json.loads(out.out)["budget"] == "2"


def test_experiment_to_file(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, _ = run(capsys, "experiment", "revenue-vs-budget", "--sweep", "20,40", "--trials", "2", "--out", str(path))
    assert code == 0
    assert path.read_text().startswith("param,mechanism,mean_revenue,std_revenue,mean_payment,max_payment,trials,seed")


def test_missing_file_is_input_error(capsys):
    code, out = run(capsys, "validate", "/nonexistent.json")
    assert code == 2 and "error" in out.err


def test_bad_arguments_exit():
    with pytest.raises(SystemExit):
        main(["solve-offline", E1, "--branch", "z"])
