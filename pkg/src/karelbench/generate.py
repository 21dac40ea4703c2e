"""Random program/world sampling and dataset generation.

Programs come from top-down grammar expansion with a uniform choice
among the productions that are legal at each node; productions that
would break the depth or statement caps are masked out of the choice,
so sampling never rejects whole programs. Worlds are sampled cell by
cell. Examples pair a sampled input with the program's output and are
rejected when execution crashes, times out, or leaves the agent's
position unchanged.

All sampling is driven by random.Random so a seed fixes every byte of
output. Dataset generation derives an independent child seed per
(task index, attempt), which keeps output identical for any worker
count.
"""

from __future__ import annotations

import hashlib
import multiprocessing
import random
from dataclasses import dataclass
from pathlib import Path

from .core import (
    Action,
    ActionKind,
    Cond,
    CondKind,
    Condition,
    Direction,
    If,
    IfElse,
    KarelError,
    MAX_DIM,
    MAX_NESTING_DEPTH,
    MAX_REPEAT,
    MAX_STATEMENTS,
    MIN_DIM,
    MIN_REPEAT,
    Not,
    Program,
    Repeat,
    Statement,
    Success,
    While,
    World,
)
from .dataio import SPLITS, TaskRecord, dataset_to_text, world_to_text
from .interpreter import DEFAULT_STEP_LIMIT, execute
from .parsing import pretty_print

DEFAULT_OBSTACLE_PROB = 0.10
DEFAULT_MARKER_PROB = 0.10


class RetriesExhausted(KarelError):
    """No accepted example within the retry budget (degenerate program)."""


@dataclass(frozen=True)
class GenConfig:
    seed: int
    max_statements: int = MAX_STATEMENTS
    max_depth: int = MAX_NESTING_DEPTH
    grid_dim_range: tuple[int, int] = (MIN_DIM, MAX_DIM)
    examples_per_task: int = 6
    step_limit: int = DEFAULT_STEP_LIMIT
    max_retries_per_example: int = 1000
    obstacle_prob: float = DEFAULT_OBSTACLE_PROB
    marker_prob: float = DEFAULT_MARKER_PROB

    def __post_init__(self) -> None:
        if self.max_statements < 1 or self.max_depth < 0:
            raise KarelError("statement/depth caps must be positive")
        lo, hi = self.grid_dim_range
        if not MIN_DIM <= lo <= hi <= MAX_DIM:
            raise KarelError(f"grid_dim_range {self.grid_dim_range} outside [{MIN_DIM}, {MAX_DIM}]")
        if self.examples_per_task < 2:
            raise KarelError("examples_per_task must be >= 2")
        if self.step_limit < 1 or self.max_retries_per_example < 1:
            raise KarelError("step_limit and retry budget must be positive")
        if not (0.0 <= self.obstacle_prob < 1.0 and 0.0 <= self.marker_prob <= 1.0):
            raise KarelError("cell probabilities out of range")


# --- program sampling ---

_ACTION_KINDS = list(ActionKind)
_ATOMIC_CONDS = list(CondKind)
_DIRECTIONS = list(Direction)


class _Budget:
    __slots__ = ("left",)

    def __init__(self, total: int):
        self.left = total


def _sample_condition(rng: random.Random) -> Condition:
    # six productions: five atomic tests plus not(cond)
    pick = rng.randrange(6)
    if pick < 5:
        return Cond(_ATOMIC_CONDS[pick])
    return Not(_sample_condition(rng))


def _sample_statement(rng: random.Random, budget: _Budget, depth: int, reserve: int) -> Statement:
    remaining = budget.left - reserve
    choices = list(_ACTION_KINDS)
    if depth >= 1:
        if remaining >= 2:
            choices.extend(("if", "while", "repeat"))
        if remaining >= 3:
            choices.append("ifelse")
    pick = choices[rng.randrange(len(choices))]
    budget.left -= 1
    if isinstance(pick, ActionKind):
        return Action(pick)
    if pick == "if":
        return If(_sample_condition(rng), _sample_block(rng, budget, depth - 1, reserve))
    if pick == "while":
        return While(_sample_condition(rng), _sample_block(rng, budget, depth - 1, reserve))
    if pick == "repeat":
        times = rng.randint(MIN_REPEAT, MAX_REPEAT)
        return Repeat(times, _sample_block(rng, budget, depth - 1, reserve))
    then_block = _sample_block(rng, budget, depth - 1, reserve + 1)
    else_block = _sample_block(rng, budget, depth - 1, reserve)
    return IfElse(_sample_condition(rng), then_block, else_block)


def _sample_block(rng: random.Random, budget: _Budget, depth: int, reserve: int) -> tuple[Statement, ...]:
    stmts = [_sample_statement(rng, budget, depth, reserve)]
    # stmt+ as stmt | stmt stmts: continue with probability 1/2 while legal
    while budget.left - reserve >= 1 and rng.random() < 0.5:
        stmts.append(_sample_statement(rng, budget, depth, reserve))
    return tuple(stmts)


def sample_program(rng: random.Random, config: GenConfig) -> Program:
    budget = _Budget(config.max_statements)
    return Program(_sample_block(rng, budget, config.max_depth, 0))


# --- world sampling ---


def sample_world(rng: random.Random, config: GenConfig) -> World:
    # all draws go through rng.random(): int(u * n) is uniform on
    # [0, n) and much cheaper than randrange for this hot path
    random_ = rng.random
    lo, hi = config.grid_dim_range
    span = hi - lo + 1
    rows = lo + int(random_() * span)
    cols = lo + int(random_() * span)
    # one uniform draw decides each cell: obstacle w.p. p_obs, else
    # marker w.p. p_mark (p_mark conditional on not being an obstacle)
    p_obs = config.obstacle_prob
    p_cut = p_obs + (1.0 - p_obs) * config.marker_prob
    while True:
        obstacles = set()
        markers = {}
        for r in range(rows):
            for c in range(cols):
                u = random_()
                if u < p_obs:
                    obstacles.add((r, c))
                elif u < p_cut:
                    markers[(r, c)] = 1 + int(random_() * 10)
        if len(obstacles) < rows * cols:
            break
        # fully blocked grid (rare, tiny grids only): redraw the cell layer
    while True:
        agent_row, agent_col = divmod(int(random_() * (rows * cols)), cols)
        if (agent_row, agent_col) not in obstacles:
            break
    agent_dir = _DIRECTIONS[int(random_() * 4)]
    return World(rows, cols, agent_row, agent_col, agent_dir, markers, frozenset(obstacles))


# --- example and task generation ---


def _contains_move(stmts: tuple[Statement, ...]) -> bool:
    for stmt in stmts:
        if isinstance(stmt, Action):
            if stmt.kind is ActionKind.MOVE:
                return True
        elif isinstance(stmt, (If, While, Repeat)):
            if _contains_move(stmt.block):
                return True
        elif isinstance(stmt, IfElse):
            if _contains_move(stmt.then_block) or _contains_move(stmt.else_block):
                return True
    return False


def generate_example(program: Program, rng: random.Random, config: GenConfig) -> tuple[World, World]:
    """First (input, output) pair surviving the rejection rule: accepted
    runs succeed within the step limit and move the agent's position."""
    if not _contains_move(program.body):
        # the agent's position can only change via move; don't burn retries
        raise RetriesExhausted("program contains no move statement")
    for _ in range(config.max_retries_per_example):
        world = sample_world(rng, config)
        outcome = execute(program, world, config.step_limit)
        if isinstance(outcome, Success) and (
            (outcome.final.agent_row, outcome.final.agent_col)
            != (world.agent_row, world.agent_col)
        ):
            return world, outcome.final
    raise RetriesExhausted(
        f"no accepted example in {config.max_retries_per_example} attempts"
    )


def generate_task(
    rng: random.Random,
    config: GenConfig,
    task_id: str = "task-00000",
    split: str = "train",
) -> TaskRecord:
    """Sample programs until one yields a full complement of examples."""
    while True:
        program = sample_program(rng, config)
        try:
            examples = tuple(
                generate_example(program, rng, config)
                for _ in range(config.examples_per_task)
            )
        except RetriesExhausted:
            continue
        return TaskRecord(task_id, pretty_print(program), examples, split)


# --- dataset generation ---


def _child_seed(seed: int, index: int, attempt: int) -> int:
    digest = hashlib.sha256(f"{seed}/{index}/{attempt}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _candidate(args: tuple[GenConfig, int, int, str, str]) -> TaskRecord:
    config, index, attempt, task_id, split = args
    rng = random.Random(_child_seed(config.seed, index, attempt))
    return generate_task(rng, config, task_id, split)


def _collides(record: TaskRecord, programs: set[str], inputs: set[str]) -> bool:
    if record.program_source in programs:
        return True
    task_inputs = [world_to_text(i) for i, _ in record.examples]
    if len(set(task_inputs)) != len(task_inputs):
        return True
    return any(text in inputs for text in task_inputs)


def generate_records(
    config: GenConfig, counts: dict[str, int], workers: int = 1
) -> dict[str, list[TaskRecord]]:
    """Generate per-split task lists with globally unique program texts
    and input grids. Pure function of (config, counts): worker count
    only affects wall time."""
    plan: list[tuple[int, str, str]] = []  # (global index, split, task_id)
    index = 0
    for split in SPLITS:
        for local in range(counts.get(split, 0)):
            plan.append((index, split, f"{split}-{local:05d}"))
            index += 1

    args = [(config, i, 0, task_id, split) for i, split, task_id in plan]
    if workers > 1 and len(args) > 1:
        with multiprocessing.Pool(workers) as pool:
            candidates = pool.map(_candidate, args, chunksize=16)
    else:
        candidates = [_candidate(a) for a in args]

    programs: set[str] = set()
    inputs: set[str] = set()
    out: dict[str, list[TaskRecord]] = {split: [] for split in SPLITS if counts.get(split, 0)}
    for (i, split, task_id), record in zip(plan, candidates):
        attempt = 0
        while _collides(record, programs, inputs):
            attempt += 1
            record = _candidate((config, i, attempt, task_id, split))
        programs.add(record.program_source)
        inputs.update(world_to_text(inp) for inp, _ in record.examples)
        out[split].append(record)
    return out


def generate_dataset(
    config: GenConfig,
    counts: dict[str, int],
    out_dir: str | Path,
    workers: int = 1,
) -> dict[str, Path]:
    """Write one `<split>.karelds` file per requested split; returns the
    paths. Output bytes depend only on (config, counts)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = generate_records(config, counts, workers)
    paths = {}
    for split, items in records.items():
        path = out_dir / f"{split}.karelds"
        path.write_text(dataset_to_text(items), encoding="utf-8")
        paths[split] = path
    return paths
