import csv
import json

import pytest

from conftest import run_karel
from induct.data import read_dataset
from induct.regimes import (
    RegimeConfig,
    split_task,
    subset_plan_via_cli,
    run_regime,
)


class TestRegimeConfig:
    def test_unknown_regime_rejected(self):
        with pytest.raises(ValueError):
            RegimeConfig(regime="magic", n=5)

    def test_bad_mixture_rejected(self):
        with pytest.raises(ValueError):
            RegimeConfig(regime="meta", n=5, mixture_ratio=0.0)

    def test_from_json_with_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"regime": "plain", "n": 3, "lr": 0.05}), encoding="utf-8")
        config = RegimeConfig.from_json(path, regime="meta", n=7)
        assert config.regime == "meta"
        assert config.n == 7
        assert config.lr == 0.05

    def test_from_json_unknown_keys(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"regime": "plain", "n": 3, "warp": 9}), encoding="utf-8")
        with pytest.raises(ValueError):
            RegimeConfig.from_json(path)


class TestSplitTask:
    def test_demo_eval_partition(self, test_ds):
        task = read_dataset(test_ds)[0]
        demos, evals = split_task(task, 5)
        assert len(demos.examples) == 5
        assert len(evals.examples) == len(task.examples) - 5
        assert demos.examples + evals.examples == task.examples

    def test_too_few_examples(self, test_ds):
        task = read_dataset(test_ds)[0]
        with pytest.raises(ValueError):
            split_task(task, len(task.examples))


class TestSubsetPlanCli:
    def test_plan_shape(self):
        subsets = subset_plan_via_cli(6, 5, seed=3)
        assert len(subsets) == 3
        assert all(len(s) == 5 for s in subsets)
        assert len(set(subsets)) == 3

    def test_exhaustive_when_small(self):
        assert subset_plan_via_cli(5, 5, seed=0) == [(0, 1, 2, 3, 4)]


class TestRunRegimeEndToEnd:
    def _score(self, result):
        out = run_karel(
            "eval", "--pred", str(result.predictions_path), "--data", str(result.refs_path)
        )
        for line in out.splitlines():
            if line.startswith("exact match:"):
                return float(line.split(":")[1].strip().rstrip("%"))
        raise AssertionError(f"no score line in {out!r}")

    def test_plain_regime(self, test_ds, tmp_path):
        config = RegimeConfig(regime="plain", n=5, plain_epochs=3, lr=0.1, seed=0)
        result = run_regime(config, {"test": test_ds}, tmp_path / "plain")
        refs = read_dataset(result.refs_path)
        assert all(len(t.examples) == 4 for t in refs)  # 9 - n
        lines = result.predictions_path.read_text(encoding="utf-8").strip().split("\n")
        assert len(lines) == 4 * 4  # tasks x eval examples
        accuracy = self._score(result)
        assert 0.0 <= accuracy <= 100.0
        with open(result.curves_path, encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert rows and {"scope", "epoch", "train_loss", "held_out_loss"} <= set(rows[0])

    def test_meta_regime(self, train_ds, test_ds, tmp_path):
        config = RegimeConfig(regime="meta", n=5, meta_epochs=1, lr=0.2, seed=0)
        result = run_regime(config, {"train": train_ds, "test": test_ds}, tmp_path / "meta")
        accuracy = self._score(result)
        assert 0.0 <= accuracy <= 100.0

    def test_meta_adapt_reuses_saved_model(self, train_ds, test_ds, tmp_path):
        saved = tmp_path / "meta.pt"
        config = RegimeConfig(
            regime="meta", n=5, meta_epochs=1, lr=0.2, seed=0,
            save_meta_model_path=str(saved),
        )
        run_regime(config, {"train": train_ds, "test": test_ds}, tmp_path / "m1")
        assert saved.exists()
        adapt_config = RegimeConfig(
            regime="meta_adapt", n=5, adapt_steps=2, batch_size=8, lr=0.05, seed=0,
            meta_model_path=str(saved),
        )
        result = run_regime(adapt_config, {"train": train_ds, "test": test_ds}, tmp_path / "m2")
        accuracy = self._score(result)
        assert 0.0 <= accuracy <= 100.0

    def test_plain_adapt_regime(self, train_ds, test_ds, tmp_path):
        config = RegimeConfig(
            regime="plain_adapt", n=5, plain_epochs=2, lr=0.1, seed=0,
            portfolio_models=2, portfolio_examples=6,
        )
        result = run_regime(config, {"train": train_ds, "test": test_ds}, tmp_path / "pa")
        accuracy = self._score(result)
        assert 0.0 <= accuracy <= 100.0


class TestCli:
    def test_induct_run_plain(self, test_ds, tmp_path):
        from induct.cli import main

        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "datasets": {"test": str(test_ds)},
            "plain_epochs": 2,
            "lr": 0.1,
        }), encoding="utf-8")
        out_dir = tmp_path / "run"
        code = main(["run", "--regime", "plain", "--n", "5",
                     "--config", str(config_path), "--out", str(out_dir)])
        assert code == 0
        assert (out_dir / "predictions.txt").exists()
        assert (out_dir / "refs.karelds").exists()
        assert (out_dir / "curves.csv").exists()
