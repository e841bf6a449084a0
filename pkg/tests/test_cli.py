import csv
import json

import pytest

import main
from src.errors import EXIT_CONFIG, EXIT_DATA, EXIT_OK
from src.manifest import load_manifest
from src.policy import PolicyParams

TWO_STATE = {
    "simulation": {"environment": "two_state", "action_bonus": 1.0, "n": 40, "T": 15},
    "actor": {"optim": {"n_restarts": 1, "max_iterations": 30}},
    "rollout": {"horizon": 2000, "burn_in": 200},
}


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def run(*argv):
    return main.main(list(argv))


def test_simulate_is_reproducible(tmp_path):
    config_path = write_config(tmp_path, {"simulation": {"p1": 3, "tau": 0.4}})
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("simulate", "-c", config_path, "--seed", "5", "--out", str(out)) == EXIT_OK
        outputs.append((out / "dataset.csv").read_bytes())
    assert outputs[0] == outputs[1]

    with open(tmp_path / "a" / "dataset.csv", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    # 25 indivíduos × (26 pontos de decisão + 1 estado terminal)
    assert len(rows) - 1 == 25 * 27
    assert rows[0] == ["id", "t", "avail", "action", "reward", "bprob", "s1", "s2", "s3"]

    manifest = load_manifest(str(tmp_path / "a" / "dataset.csv"))
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 5
    assert len(manifest["config_hash"]) == 64


def test_different_seeds_give_different_data(tmp_path):
    config_path = write_config(tmp_path, {"simulation": {}})
    run("simulate", "-c", config_path, "-s", "1", "-o", str(tmp_path / "a"))
    run("simulate", "-c", config_path, "-s", "2", "-o", str(tmp_path / "b"))
    assert (tmp_path / "a" / "dataset.csv").read_bytes() != (tmp_path / "b" / "dataset.csv").read_bytes()


def test_simulate_rejects_small_state(tmp_path):
    config_path = write_config(tmp_path, {"simulation": {"p1": 2}})
    assert run("simulate", "-c", config_path, "-o", str(tmp_path)) == EXIT_CONFIG
    assert not (tmp_path / "dataset.csv").exists()


def test_unknown_config_key(tmp_path):
    config_path = write_config(tmp_path, {"simulation": {"p1": 3, "gamma": 0.9}})
    assert run("simulate", "-c", config_path, "-o", str(tmp_path)) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert run("train", "-c", str(tmp_path / "missing.json")) == EXIT_CONFIG


def test_evaluate_requires_generative_model(tmp_path):
    config_path = write_config(tmp_path, {"data": {"path": "dados.csv"}})
    assert run("evaluate", "const", "-c", config_path, "-o", str(tmp_path)) == EXIT_CONFIG


def test_reproduce_unknown_scenario(tmp_path, capsys):
    assert run("reproduce", "S9", "-o", str(tmp_path)) == EXIT_CONFIG
    assert "S1, S2, S3, S4" in capsys.readouterr().out


def test_train_rejects_invalid_dataset(tmp_path):
    data = tmp_path / "dados.csv"
    data.write_text("id,t,avail,action,reward,bprob,s1\n1,0,1,1,2.0,1.0,0.5\n1,1,1,0,1.0,0.4,0.1\n",
                    encoding="utf-8")
    config_path = write_config(tmp_path, {"data": {"path": str(data)}})
    assert run("train", "-c", config_path, "-o", str(tmp_path)) == EXIT_DATA


def test_train_then_evaluate_two_state(tmp_path):
    config_path = write_config(tmp_path, TWO_STATE)
    out = tmp_path / "runs"
    assert run("train", "-c", config_path, "-o", str(out)) == EXIT_OK
    for name in ("policy.json", "critic.json", "trace.csv"):
        assert (out / name).exists()
        assert load_manifest(str(out / name))["command"] == "train"

    policy = PolicyParams.load(str(out / "policy.json"))
    assert policy.feature_map.names == ("s1",)
    assert set(policy.coefficients()) == {"Intercept", "s1"}
    with open(out / "trace.csv", encoding="utf-8", newline="") as f:
        header = next(csv.reader(f))
    assert header == ["round", "lambda_a", "lambda_c", "J", "penalized", "fraction"]

    assert run("evaluate", str(out / "policy.json"), "-c", config_path, "-o", str(out)) == EXIT_OK
    report = json.loads((out / "eta_policy.json").read_text(encoding="utf-8"))
    assert report["se"] > 0
    assert report["eta"] == pytest.approx(report["exact_eta"], abs=0.1)


def test_evaluate_named_policy(tmp_path):
    config_path = write_config(tmp_path, TWO_STATE)
    assert run("evaluate", "const", "-c", config_path, "-o", str(tmp_path)) == EXIT_OK
    report = json.loads((tmp_path / "eta_const.json").read_text(encoding="utf-8"))
    assert report["exact_eta"] == pytest.approx(1.8)
    assert report["eta"] == pytest.approx(1.8, abs=0.05)
