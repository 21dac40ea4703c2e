"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with -s to see them live)."""

import contextlib
import itertools
import math
import multiprocessing
import time
from collections import Counter
from itertools import combinations

from conftest import accepted_triples, make_config
from karelbench.core import (
    ActionKind,
    CondKind,
    Crash,
    CrashCause,
    Direction,
    If,
    IfElse,
    Repeat,
    Success,
    Timeout,
    While,
    World,
    nesting_depth,
    statement_count,
    world_equal,
)
from karelbench.dataio import dataset_to_text, world_to_text
from karelbench.delta import apply, diff, identity_delta, to_text
from karelbench.generate import GenConfig, generate_records, sample_program
from karelbench.harness import PredictionRecord, plan_subsets, score_dataset
from karelbench.interpreter import execute
from karelbench.parsing import parse
from oracle_programs import CASES
from reference_interpreter import reference_execute

import random


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


# --- interpreter oracle suite ---


def _walk(stmts):
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, (If, While, Repeat)):
            yield from _walk(stmt.block)
        elif isinstance(stmt, IfElse):
            yield from _walk(stmt.then_block)
            yield from _walk(stmt.else_block)


def _cond_kinds(source):
    return {kind for kind in CondKind if kind.value in source}


def test_interpreter_oracle_suite():
    with criterion("interpreter oracle suite"):
        start = time.perf_counter()
        assert len(CASES) >= 25

        actions = set()
        conds = set()
        constructs = set()
        crashes = set()
        outcomes = set()
        for name, source, world, limit in CASES:
            program = parse(source)
            got = execute(program, world, limit)
            want = reference_execute(program, world, limit)
            assert got == want, f"{name}: {got} != {want}"
            for stmt in _walk(program.body):
                constructs.add(type(stmt).__name__)
                if hasattr(stmt, "kind"):
                    actions.add(stmt.kind)
            conds |= _cond_kinds(source)
            if "not(" in source:
                conds.add("not")
            if isinstance(got, Crash):
                crashes.add(got.cause)
            outcomes.add(type(got).__name__)

        assert actions == set(ActionKind)
        assert conds == set(CondKind) | {"not"}
        assert {"If", "IfElse", "While", "Repeat"} <= constructs
        assert crashes == set(CrashCause)
        assert outcomes == {"Success", "Crash", "Timeout"}
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"oracle suite took {elapsed:.1f}s"


# --- codec round trips ---


def _all_2x2_worlds(obstacles):
    free = [cell for cell in ((0, 0), (0, 1), (1, 0), (1, 1)) if cell not in obstacles]
    worlds = []
    for counts in itertools.product((0, 1, 2), repeat=len(free)):
        markers = {cell: n for cell, n in zip(free, counts) if n}
        for cell in free:
            for direction in Direction:
                worlds.append(World(2, 2, cell[0], cell[1], direction, markers, obstacles))
    return worlds


def _check_2x2_chunk(args):
    obstacle_cells, lo, hi = args
    worlds = _all_2x2_worlds(frozenset(obstacle_cells))
    checked = 0
    for before in worlds[lo:hi]:
        for after in worlds:
            delta = diff(before, after)
            rebuilt = apply(before, delta)
            if not world_equal(rebuilt, after):
                raise AssertionError(f"round trip A failed: {before} -> {after}")
            if diff(before, rebuilt) != delta:
                raise AssertionError(f"round trip B failed: {before} -> {after}")
            checked += 1
    return checked


def test_codec_round_trips():
    with criterion("codec round trips"):
        start = time.perf_counter()

        triples = accepted_triples(999, 10_000)
        assert len(triples) == 10_000
        for _, before, after in triples:
            delta = diff(before, after)
            assert world_equal(apply(before, delta), after)

        # exhaustive 2x2 sweep, split into chunks across processes
        cells = ((0, 0), (0, 1), (1, 0), (1, 1))
        jobs = []
        expected = 0
        for n_obs in range(4):
            for obstacle_cells in combinations(cells, n_obs):
                count = len(_all_2x2_worlds(frozenset(obstacle_cells)))
                expected += count * count
                step = max(1, count // 8)
                jobs.extend(
                    (obstacle_cells, lo, min(lo + step, count))
                    for lo in range(0, count, step)
                )
        with multiprocessing.Pool(2) as pool:
            checked = sum(pool.imap_unordered(_check_2x2_chunk, jobs, chunksize=1))
        assert checked == expected  # 2,131,200 ordered pairs

        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"codec criterion took {elapsed:.1f}s"


# --- generation contract ---


def test_generation_contract():
    with criterion("generation contract"):
        config = make_config(0)
        rng = random.Random(1)
        for _ in range(10_000):
            program = sample_program(rng, config)
            assert nesting_depth(program) <= 4
            assert statement_count(program) <= 20

        triples = accepted_triples(999, 10_000)
        programs = {}
        for source, before, after in triples:
            assert 2 <= before.rows <= 20 and 2 <= before.cols <= 20
            program = programs.get(source)
            if program is None:
                program = programs[source] = parse(source)
            outcome = execute(program, before, 1000)
            assert isinstance(outcome, Success), "accepted example crashed or timed out"
            assert world_equal(outcome.final, after)
            assert (before.agent_row, before.agent_col) != (after.agent_row, after.agent_col)


# --- uniqueness + determinism ---


def test_uniqueness_and_determinism():
    with criterion("uniqueness + determinism"):
        config = GenConfig(seed=20_26)
        counts = {"train": 800, "validation": 100, "test": 100}

        first = generate_records(config, counts, workers=1)
        programs = []
        inputs = []
        n_tasks = 0
        for split in ("train", "validation", "test"):
            for record in first[split]:
                n_tasks += 1
                programs.append(record.program_source)
                inputs.extend(world_to_text(before) for before, _ in record.examples)
        assert n_tasks == 1000
        assert len(set(programs)) == len(programs)
        assert len(set(inputs)) == len(inputs)

        blob = "".join(dataset_to_text(first[s]) for s in ("train", "validation", "test"))
        again = generate_records(config, counts, workers=1)
        blob_again = "".join(dataset_to_text(again[s]) for s in ("train", "validation", "test"))
        assert blob == blob_again

        sharded = generate_records(config, counts, workers=2)
        blob_sharded = "".join(dataset_to_text(sharded[s]) for s in ("train", "validation", "test"))
        assert blob == blob_sharded


# --- evaluation totality and correctness ---


def test_evaluation_totality_and_correctness():
    with criterion("evaluation totality + correctness"):
        records = generate_records(
            GenConfig(seed=515, examples_per_task=10), {"test": 10}
        )["test"]
        keys = [
            (record, idx, before, after)
            for record in records
            for idx, (before, after) in enumerate(record.examples)
        ]
        assert len(keys) == 100

        oracle = {
            (r.task_id, i): PredictionRecord(r.task_id, i, to_text(diff(b, a)))
            for r, i, b, a in keys
        }
        assert score_dataset(oracle, records).accuracy == 100.0

        identity = {
            (r.task_id, i): PredictionRecord(r.task_id, i, to_text(identity_delta(b)))
            for r, i, b, a in keys
        }
        assert score_dataset(identity, records).accuracy == 0.0

        half = {
            key: (oracle[key] if j < 50 else identity[key])
            for j, key in enumerate(sorted(oracle))
        }
        assert score_dataset(half, records).accuracy == 50.0

        adversarial_tokens = itertools.cycle([
            "", "END", "garbage", "AgentRow=+999 AgentCol=+0 HeroDir=north END",
            "AgentRow=+0", "\x00\x7f", "A" * 10_000,
            "AgentRow=+0 AgentCol=+0 HeroDir=north MarkerRow=0 MarkerCol=0 MarkerCount=0 END",
        ])
        adversarial = {
            (r.task_id, i): PredictionRecord(r.task_id, i, next(adversarial_tokens))
            for r, i, b, a in keys
        }
        report = score_dataset(adversarial, records)  # must not raise
        assert report.accuracy == 0.0


# --- subset planner ---


def test_subset_planner():
    with criterion("subset planner"):
        for n in range(1, 11):
            for k in range(1, n + 1):
                plan = plan_subsets(n, k, seed=1000 + 10 * n + k)
                expected = min(math.ceil(2 * n / k), math.comb(n, k))
                assert len(plan.subsets) == expected
                assert len(set(plan.subsets)) == expected
                universe = set(combinations(range(n), k))
                assert set(plan.subsets) <= universe
                if math.comb(n, k) <= expected:
                    assert set(plan.subsets) == universe
                sizes = Counter(len(set(s)) for s in plan.subsets)
                assert set(sizes) == {k}
