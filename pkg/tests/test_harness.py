import math
from itertools import combinations

import pytest

from karelbench.core import World, Direction
from karelbench.dataio import FormatError
from karelbench.delta import diff, identity_delta, to_text
from karelbench.generate import GenConfig, generate_records
from karelbench.harness import (
    EmptyPortfolio,
    InvalidArgs,
    MissingPrediction,
    NonFiniteScore,
    PredictionRecord,
    dataset_stats,
    exact_match,
    plan_subsets,
    read_predictions,
    score_dataset,
    select_portfolio_model,
    write_predictions,
)

N = Direction.NORTH


def _dataset(seed=311, tasks=10, examples=6):
    config = GenConfig(seed=seed, examples_per_task=examples)
    return generate_records(config, {"test": tasks})["test"]


def _oracle_predictions(records):
    return {
        (r.task_id, i): PredictionRecord(r.task_id, i, to_text(diff(inp, out)))
        for r in records
        for i, (inp, out) in enumerate(r.examples)
    }


def _identity_predictions(records):
    return {
        (r.task_id, i): PredictionRecord(r.task_id, i, to_text(identity_delta(inp)))
        for r in records
        for i, (inp, _) in enumerate(r.examples)
    }


class TestExactMatch:
    def test_oracle_prediction_scores_true(self):
        records = _dataset(tasks=2)
        inp, out = records[0].examples[0]
        assert exact_match(to_text(diff(inp, out)), inp, out) is True

    def test_identity_prediction_scores_false(self):
        records = _dataset(tasks=2)
        inp, out = records[0].examples[0]
        assert exact_match(to_text(identity_delta(inp)), inp, out) is False

    @pytest.mark.parametrize(
        "tokens",
        ["", "garbage", "AgentRow=+99 AgentCol=+0 HeroDir=north END", "END END END", "\x00\x01"],
    )
    def test_malformed_scores_false_never_raises(self, tokens):
        w = World(2, 2, 0, 0, N)
        assert exact_match(tokens, w, w) is False

    def test_inapplicable_delta_scores_false(self):
        w = World(2, 2, 0, 0, N)
        assert exact_match("AgentRow=-5 AgentCol=+0 HeroDir=north END", w, w) is False


class TestScoreDataset:
    def test_oracle_scores_hundred(self):
        records = _dataset()
        report = score_dataset(_oracle_predictions(records), records)
        assert report.accuracy == 100.0
        assert report.malformed == 0

    def test_identity_scores_zero(self):
        records = _dataset()
        report = score_dataset(_identity_predictions(records), records)
        assert report.accuracy == 0.0

    def test_half_oracle_half_identity_scores_fifty(self):
        records = _dataset(seed=313, tasks=10, examples=10)
        oracle = _oracle_predictions(records)
        identity = _identity_predictions(records)
        keys = sorted(oracle)
        assert len(keys) == 100
        predictions = {k: (oracle[k] if j < 50 else identity[k]) for j, k in enumerate(keys)}
        report = score_dataset(predictions, records)
        assert report.accuracy == 50.0

    def test_missing_prediction_lists_keys(self):
        records = _dataset(tasks=2)
        predictions = _oracle_predictions(records)
        removed = (records[0].task_id, 1)
        del predictions[removed]
        with pytest.raises(MissingPrediction) as info:
            score_dataset(predictions, records)
        assert removed in info.value.missing

    def test_adversarial_predictions_never_abort(self):
        records = _dataset(tasks=3)
        predictions = {
            (r.task_id, i): PredictionRecord(r.task_id, i, junk)
            for r in records
            for i, junk in zip(
                range(len(r.examples)),
                ["", "END", "AgentRow=zz", "\t\t", "A" * 5000, "AgentRow=+1"] * 4,
            )
        }
        report = score_dataset(predictions, records)
        assert report.accuracy == 0.0
        assert report.malformed == report.total

    def test_per_task_breakdown(self):
        records = _dataset(tasks=4)
        oracle = _oracle_predictions(records)
        spoiled_task = records[0].task_id
        for i in range(len(records[0].examples)):
            oracle[(spoiled_task, i)] = PredictionRecord(spoiled_task, i, "junk")
        report = score_dataset(oracle, records)
        assert report.task_accuracy(spoiled_task) == 0.0
        for record in records[1:]:
            assert report.task_accuracy(record.task_id) == 100.0


class TestPredictionFiles:
    def test_round_trip(self, tmp_path):
        records = [
            PredictionRecord("t-0", 0, "AgentRow=+0 AgentCol=+0 HeroDir=north END"),
            PredictionRecord("t-0", 1, "garbage tokens", (-0.5, -1.25)),
        ]
        path = tmp_path / "preds.txt"
        write_predictions(records, path)
        loaded = read_predictions(path)
        assert loaded[("t-0", 0)].tokens == records[0].tokens
        assert loaded[("t-0", 1)].logprobs == (-0.5, -1.25)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "preds.txt"
        path.write_text("t\t0\tEND\nt\t0\tEND\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_predictions(path)

    def test_bad_index_rejected(self, tmp_path):
        path = tmp_path / "preds.txt"
        path.write_text("t\tzero\tEND\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_predictions(path)


class TestPortfolioSelection:
    def test_argmax(self):
        assert select_portfolio_model({"A": -10.0, "B": -3.5}) == "B"

    def test_tie_breaks_lexicographically(self):
        assert select_portfolio_model({"B": -3.5, "A": -3.5}) == "A"

    def test_single_model(self):
        assert select_portfolio_model({"only": -1.0}) == "only"

    def test_empty_portfolio(self):
        with pytest.raises(EmptyPortfolio):
            select_portfolio_model({})

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite_scores(self, bad):
        with pytest.raises(NonFiniteScore):
            select_portfolio_model({"A": -1.0, "B": bad})

    def test_invariant_under_constant_shift(self):
        scores = {"A": -4.0, "B": -2.0, "C": -9.0}
        shifted = {k: v + 123.5 for k, v in scores.items()}
        assert select_portfolio_model(scores) == select_portfolio_model(shifted)


class TestPlanSubsets:
    def test_n_five_k_five_single_subset(self):
        plan = plan_subsets(5, 5, seed=1)
        assert plan.subsets == ((0, 1, 2, 3, 4),)

    def test_fifty_choose_five_gives_twenty(self):
        plan = plan_subsets(50, 5, seed=2)
        assert len(plan.subsets) == 20
        assert len(set(plan.subsets)) == 20

    def test_six_choose_five_capped_at_three(self):
        plan = plan_subsets(6, 5, seed=3)
        assert len(plan.subsets) == 3
        assert len(set(plan.subsets)) == 3

    def test_deterministic(self):
        assert plan_subsets(40, 5, seed=7) == plan_subsets(40, 5, seed=7)

    @pytest.mark.parametrize("n,k", [(5, 0), (5, 6), (0, 1)])
    def test_invalid_args(self, n, k):
        with pytest.raises(InvalidArgs):
            plan_subsets(n, k, seed=0)

    def test_enumeration_small_n(self):
        for n in range(1, 11):
            for k in range(1, n + 1):
                plan = plan_subsets(n, k, seed=n * 100 + k)
                expected = min((2 * n + k - 1) // k, math.comb(n, k))
                assert len(plan.subsets) == expected
                assert len(set(plan.subsets)) == expected
                valid = set(combinations(range(n), k))
                for subset in plan.subsets:
                    assert subset in valid
                if math.comb(n, k) <= expected:
                    assert set(plan.subsets) == valid


class TestDatasetStats:
    def test_generated_dataset_is_clean(self):
        records = _dataset(seed=317, tasks=12)
        report = dataset_stats(records)
        assert report.num_tasks == 12
        assert report.num_examples == 72
        assert report.duplicate_programs == 0
        assert report.duplicate_inputs == 0
        assert set(report.depth_hist) <= {0, 1, 2, 3, 4}
        assert all(1 <= size <= 20 for size in report.program_size_hist)
        assert set(report.grid_dim_hist) <= set(range(2, 21))
        assert 0.0 < report.obstacle_density < 0.3
        assert 0.0 < report.marker_density < 0.3

    def test_empty_dataset_all_zero(self):
        report = dataset_stats([])
        assert report.num_tasks == 0
        assert report.num_examples == 0
        assert report.marker_density == 0.0
        assert report.obstacle_density == 0.0
        assert not report.program_size_hist
        assert not report.depth_hist

    def test_duplicates_detected(self):
        records = _dataset(seed=319, tasks=3)
        doubled = records + [records[0]]
        report = dataset_stats(doubled)
        assert report.duplicate_programs == 1
        assert report.duplicate_inputs == len(records[0].examples)
