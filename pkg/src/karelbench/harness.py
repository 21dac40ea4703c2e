"""Scoring, portfolio selection, subset planning, dataset statistics.

Prediction files are tab-separated text, one record per line:

    task_id <TAB> example_index <TAB> predicted token line [<TAB> logprobs]

The token field uses the delta-codec text form; anything that fails to
detokenize or apply simply scores false, so scoring is total even on
adversarial files. The optional fourth field holds space-separated
per-token log-probabilities.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

from .core import KarelError, World, statement_count, nesting_depth, world_equal
from .dataio import FormatError, TaskRecord, world_to_text
from .delta import apply, detokenize
from .parsing import parse


class MissingPrediction(KarelError):
    """A reference example has no prediction record."""

    def __init__(self, missing: list[tuple[str, int]]):
        preview = ", ".join(f"({t}, {i})" for t, i in missing[:5])
        more = "" if len(missing) <= 5 else f" and {len(missing) - 5} more"
        super().__init__(f"missing predictions for {preview}{more}")
        self.missing = missing


class EmptyPortfolio(KarelError):
    pass


class NonFiniteScore(KarelError):
    pass


class InvalidArgs(KarelError):
    pass


# --- predictions ---


@dataclass(frozen=True)
class PredictionRecord:
    task_id: str
    example_index: int
    tokens: str
    logprobs: tuple[float, ...] | None = None


def format_prediction(record: PredictionRecord) -> str:
    line = f"{record.task_id}\t{record.example_index}\t{record.tokens}"
    if record.logprobs is not None:
        line += "\t" + " ".join(f"{v:.6f}" for v in record.logprobs)
    return line


def write_predictions(records: list[PredictionRecord], path: str | Path) -> None:
    Path(path).write_text("".join(format_prediction(r) + "\n" for r in records), encoding="utf-8")


def read_predictions(path: str | Path) -> dict[tuple[str, int], PredictionRecord]:
    """Keyed by (task_id, example_index); duplicates are format errors."""
    out: dict[tuple[str, int], PredictionRecord] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            parts = raw.split("\t")
            if len(parts) not in (3, 4):
                raise FormatError(f"expected 3 or 4 tab-separated fields, got {len(parts)}", line_no)
            try:
                index = int(parts[1], 10)
            except ValueError:
                raise FormatError(f"bad example index {parts[1]!r}", line_no) from None
            logprobs = None
            if len(parts) == 4 and parts[3]:
                try:
                    logprobs = tuple(float(v) for v in parts[3].split())
                except ValueError:
                    raise FormatError(f"bad logprob field {parts[3]!r}", line_no) from None
            key = (parts[0], index)
            if key in out:
                raise FormatError(f"duplicate prediction for {key}", line_no)
            out[key] = PredictionRecord(parts[0], index, parts[2], logprobs)
    return out


# --- scoring ---


def exact_match(predicted_tokens: str, input_world: World, reference: World) -> bool:
    """True iff the predicted delta reconstructs the reference exactly.
    Malformed or inapplicable predictions score false, never raise."""
    try:
        predicted = apply(input_world, detokenize(predicted_tokens))
    except KarelError:
        return False
    return world_equal(predicted, reference)


@dataclass
class ScoreReport:
    total: int
    correct: int
    malformed: int
    per_task: dict[str, tuple[int, int]]  # task_id -> (correct, total)

    @property
    def accuracy(self) -> float:
        """Exact-match percentage over examples."""
        return 100.0 * self.correct / self.total if self.total else 0.0

    def task_accuracy(self, task_id: str) -> float:
        correct, total = self.per_task[task_id]
        return 100.0 * correct / total if total else 0.0


def score_dataset(
    predictions: dict[tuple[str, int], PredictionRecord],
    records: list[TaskRecord],
) -> ScoreReport:
    """Example-level exact-match accuracy with per-task breakdown.
    Every reference example must have a prediction."""
    missing = [
        (record.task_id, idx)
        for record in records
        for idx in range(len(record.examples))
        if (record.task_id, idx) not in predictions
    ]
    if missing:
        raise MissingPrediction(missing)
    total = correct = malformed = 0
    per_task: dict[str, tuple[int, int]] = {}
    for record in records:
        task_correct = 0
        for idx, (input_world, output_world) in enumerate(record.examples):
            pred = predictions[(record.task_id, idx)]
            try:
                delta = detokenize(pred.tokens)
            except KarelError:
                malformed += 1
                delta = None
            ok = False
            if delta is not None:
                try:
                    ok = world_equal(apply(input_world, delta), output_world)
                except KarelError:
                    ok = False
            total += 1
            task_correct += ok
        correct += task_correct
        per_task[record.task_id] = (task_correct, len(record.examples))
    return ScoreReport(total, correct, malformed, per_task)


# --- portfolio selection ---


def select_portfolio_model(scores: dict[str, float]) -> str:
    """Model with the highest summed log-likelihood; ties go to the
    lexicographically smallest id."""
    if not scores:
        raise EmptyPortfolio("no models to select from")
    for model_id, value in scores.items():
        if not math.isfinite(value):
            raise NonFiniteScore(f"score for {model_id!r} is {value!r}")
    return min(scores, key=lambda m: (-scores[m], m))


# --- subset planning ---


@dataclass(frozen=True)
class SubsetPlan:
    n: int
    k: int
    seed: int
    subsets: tuple[tuple[int, ...], ...]


def plan_subsets(n: int, k: int, seed: int) -> SubsetPlan:
    """Distinct k-sized index subsets for ensembled decoding. The count
    is min(ceil(2n/k), C(n, k)); when every subset fits the budget the
    plan is exhaustive (lexicographic)."""
    if k < 1 or k > n:
        raise InvalidArgs(f"need 1 <= k <= n, got n={n} k={k}")
    target = (2 * n + k - 1) // k  # ceil(2n/k)
    total = math.comb(n, k)
    if total <= target:
        return SubsetPlan(n, k, seed, tuple(combinations(range(n), k)))
    rng = random.Random(seed)
    chosen: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    while len(chosen) < target:
        subset = tuple(sorted(rng.sample(range(n), k)))
        if subset not in seen:
            seen.add(subset)
            chosen.append(subset)
    return SubsetPlan(n, k, seed, tuple(chosen))


# --- dataset statistics ---


@dataclass
class StatsReport:
    num_tasks: int = 0
    num_examples: int = 0
    program_size_hist: Counter = field(default_factory=Counter)
    depth_hist: Counter = field(default_factory=Counter)
    grid_dim_hist: Counter = field(default_factory=Counter)  # over input rows and cols
    marker_density: float = 0.0
    obstacle_density: float = 0.0
    duplicate_programs: int = 0
    duplicate_inputs: int = 0


def dataset_stats(records: list[TaskRecord]) -> StatsReport:
    report = StatsReport()
    report.num_tasks = len(records)
    program_counts: Counter = Counter()
    input_counts: Counter = Counter()
    marker_cells = obstacle_cells = total_cells = 0
    for record in records:
        program_counts[record.program_source] += 1
        program = parse(record.program_source)
        report.program_size_hist[statement_count(program)] += 1
        report.depth_hist[nesting_depth(program)] += 1
        for input_world, _ in record.examples:
            report.num_examples += 1
            input_counts[world_to_text(input_world)] += 1
            report.grid_dim_hist[input_world.rows] += 1
            report.grid_dim_hist[input_world.cols] += 1
            marker_cells += len(input_world.markers)
            obstacle_cells += len(input_world.obstacles)
            total_cells += input_world.rows * input_world.cols
    if total_cells:
        report.marker_density = marker_cells / total_cells
        report.obstacle_density = obstacle_cells / total_cells
    report.duplicate_programs = sum(c - 1 for c in program_counts.values() if c > 1)
    report.duplicate_inputs = sum(c - 1 for c in input_counts.values() if c > 1)
    return report
