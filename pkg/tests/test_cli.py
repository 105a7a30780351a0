import csv
import io
import json
import shutil
import subprocess

import pytest

from raolab.cli import EXIT_BREACH, EXIT_INVALID, EXIT_OK, EXIT_ORACLE, expand_readers, main
from raolab.model import Instance, accuracy


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


C1_CORPUS = {"generator": "random", "seed": 0, "count": 3,
             "params": {"n": 8, "budget": 20, "hint_range": [1, 40], "length_range": [1, 20]}}


class TestGenerate:
    def test_lemma5_file(self, capsys, tmp_path):
        out = tmp_path / "l5.json"
        code, _, err = run_cli(capsys, "generate", "lemma5", "--param", "n=5", "--param", "c_acc=10",
                               "--out", str(out))
        assert code == EXIT_OK
        assert accuracy(Instance.from_json(out.read_text())).c_value == 10
        assert "accuracy C = 10" in err

    def test_constant_profile(self, capsys):
        code, out, err = run_cli(capsys, "generate", "random", "--params",
                                 '{"n": 5, "budget": 10, "length_range": [1, 10]}', "--seed", "3")
        assert code == EXIT_OK and "accuracy C = 1 " in err
        assert Instance.from_json(out).n == 5

    def test_low_accuracy_rejected(self, capsys):
        code, _, err = run_cli(capsys, "generate", "lemma5", "--param", "n=3", "--param", "c_acc=0")
        assert code == EXIT_INVALID and "invalid" in err


class TestBound:
    def test_eval_classic(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "eval", "1/81", "0.75", "1.5")
        assert code == EXIT_OK
        rec = json.loads(out)
        assert set(rec) == {"g", "beta", "gamma", "tail1", "tail2", "p_prime", "ratio"}
        assert rec["ratio"] == pytest.approx(341.87, rel=0.01)

    def test_eval_infeasible(self, capsys):
        code, _, err = run_cli(capsys, "bound", "eval", "0.1", "0.85", "1.45")
        assert code == EXIT_INVALID and "2g + beta < 1" in err

    def test_eval_arity(self, capsys):
        assert run_cli(capsys, "bound", "eval", "0.1")[0] == EXIT_INVALID

    def test_maximize(self, capsys, tmp_path):
        out = tmp_path / "best.json"
        assert run_cli(capsys, "bound", "maximize", "--out", str(out))[0] == EXIT_OK
        rec = json.loads(out.read_text())
        assert rec["g"] == pytest.approx(0.021425, abs=0.002)
        assert rec["beta"] == pytest.approx(0.565728, abs=0.002)
        assert rec["gamma"] == pytest.approx(1.478575, abs=0.002)
        assert 240 < rec["ratio"] <= 246

    def test_grid_dump(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "grid", "--fixed-g", "1/81")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK and rows
        assert {float(r["g"]) for r in rows} == {1 / 81}


class TestRun:
    def test_byte_identical_rerun(self, capsys, tmp_path):
        cfg = {"instances": [C1_CORPUS], "trials": 50, "seed": 7,
               "readers": [{"name": "secretary"}, {"name": "reduction"}, {"name": "threshold"}]}
        path = write_config(tmp_path, cfg)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(capsys, "run", "--config", path, "--out", str(a))[0] == EXIT_OK
        assert run_cli(capsys, "run", "--config", path, "--out", str(b), "--workers", "2")[0] == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 1 + 3 * 3

    def test_seed_flag_overrides(self, capsys, tmp_path):
        cfg = {"instances": [C1_CORPUS], "trials": 30, "readers": [{"name": "threshold"}]}
        path = write_config(tmp_path, cfg)
        base = run_cli(capsys, "run", "--config", path)[1]
        assert run_cli(capsys, "run", "--config", path, "--seed", "0")[1] == base
        assert run_cli(capsys, "run", "--config", path, "--seed", "1")[1] != base

    def test_g_sweep_row_count(self, capsys, tmp_path):
        cfg = {"instances": [C1_CORPUS], "trials": 20,
               "readers": [{"name": "threshold", "sweep": {"g": [0.01, 0.0215, 0.05, 0.1]}}]}
        code, out, _ = run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK and len(rows) == 4 * 3
        assert {(r["instance_id"], r["params"]) for r in rows} == {
            (r["instance_id"], f"g={g}") for r in rows for g in (0.01, 0.0215, 0.05, 0.1)}

    def test_select_max_metric(self, capsys, tmp_path):
        cfg = {"instances": [C1_CORPUS], "trials": 20, "metric": "select_max",
               "readers": [{"name": "secretary"}]}
        code, out, _ = run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK
        assert all(r["opt"] == "" and r["ratio"] == "" for r in rows)
        assert all(0 <= float(r["mean"]) <= 1 for r in rows)

    def test_instance_file(self, capsys, tmp_path):
        run_cli(capsys, "generate", "lemma5", "--param", "n=4", "--param", "c_acc=3",
                "--out", str(tmp_path / "inst.json"))
        cfg = {"instances": [{"file": "inst.json"}], "trials": 10, "readers": [{"name": "prefix"}]}
        code, out, _ = run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))
        assert code == EXIT_OK and "lemma5-n4-c3" in out

    @pytest.mark.parametrize("cfg", [
        {"instances": [C1_CORPUS], "readers": [{"name": "secretary"}], "colour": "blue"},
        {"instances": [], "readers": [{"name": "secretary"}]},
        {"instances": [C1_CORPUS], "readers": [{"name": "oracle"}]},
        {"instances": [C1_CORPUS], "readers": [{"name": "secretary", "params": {"g": 1}}]},
    ])
    def test_invalid_config(self, capsys, tmp_path, cfg):
        assert run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))[0] == EXIT_INVALID

    def test_missing_config(self, capsys, tmp_path):
        assert run_cli(capsys, "run", "--config", str(tmp_path / "none.json"))[0] == EXIT_INVALID

    def test_invalid_instance(self, capsys, tmp_path):
        bad = {"budget": 5, "articles": [{"hint": 2, "length": 2, "segments": [[2, 3]]}]}
        (tmp_path / "bad.json").write_text(json.dumps(bad))
        cfg = {"instances": [{"file": "bad.json"}], "readers": [{"name": "secretary"}]}
        assert run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))[0] == EXIT_INVALID

    def test_waterfill_on_increasing_profile(self, capsys, tmp_path):
        cfg = {"instances": [{"generator": "lemma4", "params": {"n": 3}}],
               "opt_source": "waterfill", "readers": [{"name": "secretary"}]}
        assert run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))[0] == EXIT_INVALID

    def test_dp_limit_exit_code(self, capsys, tmp_path, monkeypatch):
        from raolab import oracles
        monkeypatch.setattr(oracles, "DEFAULT_DP_LIMIT", 10)
        monkeypatch.setattr(oracles.opt_rao_dp, "__defaults__", (10,))
        cfg = {"instances": [C1_CORPUS], "opt_source": "dp", "readers": [{"name": "secretary"}]}
        assert run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))[0] == EXIT_ORACLE

    def test_breach_exit_code(self, capsys, tmp_path, monkeypatch):
        from raolab import readers
        from raolab.readers import OnlineKnapsack

        class Greedy(OnlineKnapsack):
            name = "greedy"

            def decide(self, value, weight, tie):
                return True

        monkeypatch.setitem(readers.OKP_REGISTRY, "greedy", Greedy)
        cfg = {"instances": [C1_CORPUS], "trials": 5,
               "readers": [{"name": "direct", "params": {"okp": "greedy"}}]}
        assert run_cli(capsys, "run", "--config", write_config(tmp_path, cfg))[0] == EXIT_BREACH


def test_expand_readers_cross_product():
    specs = expand_readers([{"name": "threshold", "params": {"r": 3},
                             "sweep": {"g": [0.1, 0.2]}},
                            {"name": "reduction", "sweep": {"alpha": [1, 2, 3]}}])
    assert [s.label for s in specs] == [
        "threshold{g=0.1,r=3}", "threshold{g=0.2,r=3}",
        "reduction{alpha=1}", "reduction{alpha=2}", "reduction{alpha=3}"]


@pytest.mark.skipif(shutil.which("raolab") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["raolab", "bound", "eval", "1/81", "3/4", "3/2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["ratio"] == pytest.approx(341.87, rel=0.01)
