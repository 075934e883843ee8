import json
from importlib import resources

import jsonschema
import pytest

from divsim.cli import load_schema
from divsim.experiment import (
    ConfigError,
    ExperimentConfig,
    compare_kinds,
    resolve_threads,
    run_experiment,
    wilson,
)

CONFIGS = resources.files("divsim") / "configs"


def cfg(**kw):
    base = {"graph": "complete:6", "init": "uniform:3", "trials": 40, "master_seed": 3}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_wilson_interval():
    lo, hi = wilson(50, 100)
    assert lo < 0.5 < hi
    assert hi - 0.5 == pytest.approx(0.5 - lo)
    assert wilson(0, 10)[0] == 0.0 and wilson(10, 10)[1] == pytest.approx(1.0)
    assert wilson(0, 0) == (0.0, 1.0)


@pytest.mark.parametrize("bad", [
    {"init": "uniform:3"},
    {"graph": "complete:3", "init": "uniform:3", "extra": 1},
    {"graph": "complete:3", "init": "uniform:3", "kind": "diagonal"},
    {"graph": "complete:3", "init": "uniform:3", "trials": 0},
    {"graph": "complete:3", "init": "uniform:3", "targets": ["nope"]},
    {"graph": "complete:3", "init": "uniform:3", "azuma_grid": [[1]]},
    {"graph": "complete:3", "init": "uniform:3", "eta": 0},
    {"graph": 5, "init": "uniform:3"},
    [1, 2],
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_config_file_paths_relative(tmp_path):
    (tmp_path / "g.txt").write_text("3 2\n0 1\n1 2\n")
    (tmp_path / "c.json").write_text(json.dumps({"graph": "file:g.txt", "init": "values:1,2,2", "trials": 5}))
    c = ExperimentConfig.load(tmp_path / "c.json")
    assert c.graph == f"file:{tmp_path / 'g.txt'}"
    assert run_experiment(c).n == 3


def test_summary_shape_and_schema():
    s = run_experiment(cfg(eps_list=[0.2], azuma_grid=[[3, 10]], targets=["final_value", "bounds", "azuma", "all_win"]))
    d = s.to_dict()
    jsonschema.validate(d, load_schema("experiment"))
    assert d["trials"] == 40 and d["completed"] + d["cap_hits"] == 40
    assert sum(v["count"] for v in d["win_freq"].values()) == d["completed"]
    names = [v["target"] for v in d["verdicts"]]
    assert "final_value.floor_ceil" in names and "bounds.structured" in names
    assert any(n.startswith("azuma[") for n in names)


def test_reproducible_serial_vs_threads():
    c = cfg(trials=60, eps_list=[0.1], targets=["final_value"])
    a = run_experiment(c, threads=1).to_json()
    b = run_experiment(c, threads=4).to_json()
    assert a == b
    assert a == run_experiment(c, threads=1).to_json()


def test_seed_changes_result():
    a = run_experiment(cfg(trials=60)).records
    b = run_experiment(cfg(trials=60, master_seed=4)).records
    assert [r.winner for r in a] != [r.winner for r in b]


def test_threads_env(monkeypatch):
    monkeypatch.setenv("DIVSIM_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv("DIVSIM_THREADS")
    assert resolve_threads(None) == 1


def test_records_csv():
    s = run_experiment(cfg(trials=5))
    lines = s.records_csv().splitlines()
    assert lines[0] == "trial,winner,consensus_step,two_left_step"
    assert len(lines) == 6 and lines[1].startswith("0,")


def test_cap_hits_never_dropped():
    s = run_experiment(ExperimentConfig.from_dict(
        {"graph": "path:40", "init": "blocks:20x1,20x4", "trials": 5, "step_cap": 10, "targets": ["bounds"]}))
    assert s.cap_hits == 5 and s.trials == 5 and not s.passed
    assert s.consensus_step["cap_hits"] == 5


def test_oracle_target_needs_fixed_init():
    s = run_experiment(cfg(targets=["oracle"]))
    assert not s.passed


def test_fixture_k2_fair():
    c = ExperimentConfig.load(CONFIGS / "k2_fair.json")
    s = run_experiment(c)
    f = s.win_freq["1"]["freq"]
    assert abs(f - 0.5) <= 3 * (0.25 / s.completed) ** 0.5
    assert s.passed


def test_fixture_two_opinion_edge():
    s = run_experiment(ExperimentConfig.load(CONFIGS / "two_opinion_edge.json"))
    two_opinion = {v.target: v for v in s.verdicts if v.target.startswith("two_opinion")}
    assert two_opinion["two_opinion[3]"].predicted == pytest.approx(2 / 6)
    assert s.passed


def test_compare_kinds_identical():
    a = run_experiment(cfg(trials=50))
    assert all(v.passed for v in compare_kinds(a, a))
