"""Deterministic interpreter for Karel programs.

Only primitive actions consume steps; condition checks are free. A
crash aborts the run immediately and discards the partial state. A
while iteration that executes zero actions leaves the world untouched
and therefore can never terminate: it is reported as a Timeout right
away instead of spinning forever.

Programs are compiled once into closure trees (cached per Program);
the generator executes the same program on up to a thousand candidate
worlds, so per-step dispatch cost matters.
"""

from __future__ import annotations

from typing import Callable

from .core import (
    Action,
    ActionKind,
    CondKind,
    Condition,
    Crash,
    CrashCause,
    Direction,
    ExecutionOutcome,
    If,
    IfElse,
    MAX_MARKERS_PER_CELL,
    Not,
    Program,
    Repeat,
    Statement,
    Success,
    Timeout,
    While,
    World,
)

DEFAULT_STEP_LIMIT = 1000

# direction encoded as an int index in N, E, S, W order
_DIR_LIST = (Direction.NORTH, Direction.EAST, Direction.SOUTH, Direction.WEST)
_DIR_INDEX = {d: i for i, d in enumerate(_DIR_LIST)}
_DELTAS = ((-1, 0), (0, 1), (1, 0), (0, -1))


def eval_condition(cond: Condition, world: World) -> bool:
    if isinstance(cond, Not):
        return not eval_condition(cond.inner, world)
    kind = cond.kind
    if kind is CondKind.MARKERS_PRESENT:
        return world.marker_count(world.agent_row, world.agent_col) >= 1
    if kind is CondKind.NO_MARKERS_PRESENT:
        return world.marker_count(world.agent_row, world.agent_col) == 0
    if kind is CondKind.FRONT_IS_CLEAR:
        probe = world.agent_dir
    elif kind is CondKind.LEFT_IS_CLEAR:
        probe = world.agent_dir.left
    else:  # RIGHT_IS_CLEAR
        probe = world.agent_dir.right
    dr, dc = probe.delta
    return world.is_clear(world.agent_row + dr, world.agent_col + dc)


def apply_action(action: Action, world: World) -> World | Crash:
    """Single-action semantics. A failing action is reported as a Crash
    with step 1 (the action is step 1 of its own run)."""
    run = _Run(world, step_limit=1)
    try:
        _ACTION_FNS[action.kind](run)
    except _Halt as halt:
        assert isinstance(halt.outcome, Crash)
        return halt.outcome
    return run.snapshot()


def execute(program: Program, world: World, step_limit: int = DEFAULT_STEP_LIMIT) -> ExecutionOutcome:
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")
    run = _Run(world, step_limit)
    try:
        _compiled(program)(run)
    except _Halt as halt:
        return halt.outcome
    return Success(run.snapshot(), run.steps)


def trace(
    program: Program, world: World, step_limit: int = DEFAULT_STEP_LIMIT
) -> list[tuple[Action, World]]:
    """World snapshots after each executed action, in order. On crash or
    timeout the list covers the successfully executed prefix."""
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")
    entries: list[tuple[Action, World]] = []
    run = _Run(world, step_limit, recorder=entries)
    try:
        _compiled(program)(run)
    except _Halt:
        pass
    return entries


class _Halt(Exception):
    def __init__(self, outcome: ExecutionOutcome):
        self.outcome = outcome


class _Run:
    """Mutable interpreter state; the marker map is copied on first
    write so the input World is never mutated."""

    __slots__ = (
        "rows", "cols", "row", "col", "dirx", "markers", "obstacles",
        "steps", "limit", "recorder", "_markers_owned",
    )

    def __init__(self, world: World, step_limit: int, recorder: list | None = None):
        self.rows = world.rows
        self.cols = world.cols
        self.row = world.agent_row
        self.col = world.agent_col
        self.dirx = _DIR_INDEX[world.agent_dir]
        self.markers = world.markers
        self._markers_owned = False
        self.obstacles = world.obstacles
        self.steps = 0
        self.limit = step_limit
        self.recorder = recorder

    def snapshot(self) -> World:
        return World(
            self.rows, self.cols, self.row, self.col, _DIR_LIST[self.dirx],
            dict(self.markers), self.obstacles,
        )

    def own_markers(self) -> None:
        if not self._markers_owned:
            self.markers = dict(self.markers)
            self._markers_owned = True


_StmtFn = Callable[[_Run], None]
_CondFn = Callable[[_Run], bool]


def _do_move(run: _Run) -> None:
    if run.steps == run.limit:
        raise _Halt(Timeout(run.limit))
    dr, dc = _DELTAS[run.dirx]
    r, c = run.row + dr, run.col + dc
    if not (0 <= r < run.rows and 0 <= c < run.cols):
        raise _Halt(Crash(run.steps + 1, CrashCause.OUT_OF_BOUNDS))
    if (r, c) in run.obstacles:
        raise _Halt(Crash(run.steps + 1, CrashCause.HIT_OBSTACLE))
    run.row, run.col = r, c
    run.steps += 1
    if run.recorder is not None:
        run.recorder.append((Action(ActionKind.MOVE), run.snapshot()))


def _do_turn_left(run: _Run) -> None:
    if run.steps == run.limit:
        raise _Halt(Timeout(run.limit))
    run.dirx = (run.dirx + 3) & 3
    run.steps += 1
    if run.recorder is not None:
        run.recorder.append((Action(ActionKind.TURN_LEFT), run.snapshot()))


def _do_turn_right(run: _Run) -> None:
    if run.steps == run.limit:
        raise _Halt(Timeout(run.limit))
    run.dirx = (run.dirx + 1) & 3
    run.steps += 1
    if run.recorder is not None:
        run.recorder.append((Action(ActionKind.TURN_RIGHT), run.snapshot()))


def _do_put_marker(run: _Run) -> None:
    if run.steps == run.limit:
        raise _Halt(Timeout(run.limit))
    cell = (run.row, run.col)
    count = run.markers.get(cell, 0)
    if count >= MAX_MARKERS_PER_CELL:
        raise _Halt(Crash(run.steps + 1, CrashCause.MARKER_OVERFLOW))
    run.own_markers()
    run.markers[cell] = count + 1
    run.steps += 1
    if run.recorder is not None:
        run.recorder.append((Action(ActionKind.PUT_MARKER), run.snapshot()))


def _do_pick_marker(run: _Run) -> None:
    if run.steps == run.limit:
        raise _Halt(Timeout(run.limit))
    cell = (run.row, run.col)
    count = run.markers.get(cell, 0)
    if count == 0:
        raise _Halt(Crash(run.steps + 1, CrashCause.PICK_EMPTY))
    run.own_markers()
    if count == 1:
        del run.markers[cell]
    else:
        run.markers[cell] = count - 1
    run.steps += 1
    if run.recorder is not None:
        run.recorder.append((Action(ActionKind.PICK_MARKER), run.snapshot()))


_ACTION_FNS: dict[ActionKind, _StmtFn] = {
    ActionKind.MOVE: _do_move,
    ActionKind.TURN_LEFT: _do_turn_left,
    ActionKind.TURN_RIGHT: _do_turn_right,
    ActionKind.PUT_MARKER: _do_put_marker,
    ActionKind.PICK_MARKER: _do_pick_marker,
}


def _probe_clear(run: _Run, dirx: int) -> bool:
    dr, dc = _DELTAS[dirx]
    r, c = run.row + dr, run.col + dc
    return 0 <= r < run.rows and 0 <= c < run.cols and (r, c) not in run.obstacles


def _compile_cond(cond: Condition) -> _CondFn:
    if isinstance(cond, Not):
        inner = _compile_cond(cond.inner)
        return lambda run: not inner(run)
    kind = cond.kind
    if kind is CondKind.FRONT_IS_CLEAR:
        return lambda run: _probe_clear(run, run.dirx)
    if kind is CondKind.LEFT_IS_CLEAR:
        return lambda run: _probe_clear(run, (run.dirx + 3) & 3)
    if kind is CondKind.RIGHT_IS_CLEAR:
        return lambda run: _probe_clear(run, (run.dirx + 1) & 3)
    if kind is CondKind.MARKERS_PRESENT:
        return lambda run: (run.row, run.col) in run.markers
    return lambda run: (run.row, run.col) not in run.markers


def _compile_stmt(stmt: Statement) -> _StmtFn:
    if isinstance(stmt, Action):
        return _ACTION_FNS[stmt.kind]
    if isinstance(stmt, If):
        cond = _compile_cond(stmt.cond)
        body = _compile_block(stmt.block)

        def run_if(run: _Run) -> None:
            if cond(run):
                body(run)

        return run_if
    if isinstance(stmt, IfElse):
        cond = _compile_cond(stmt.cond)
        then_body = _compile_block(stmt.then_block)
        else_body = _compile_block(stmt.else_block)

        def run_ifelse(run: _Run) -> None:
            if cond(run):
                then_body(run)
            else:
                else_body(run)

        return run_ifelse
    if isinstance(stmt, While):
        cond = _compile_cond(stmt.cond)
        body = _compile_block(stmt.block)

        def run_while(run: _Run) -> None:
            while cond(run):
                before = run.steps
                body(run)
                if run.steps == before:
                    # no action ran, state cannot change: infinite loop
                    raise _Halt(Timeout(run.limit))

        return run_while
    if isinstance(stmt, Repeat):
        times = stmt.times
        body = _compile_block(stmt.block)

        def run_repeat(run: _Run) -> None:
            for _ in range(times):
                body(run)

        return run_repeat
    raise TypeError(f"unknown statement node {stmt!r}")


def _compile_block(stmts: tuple[Statement, ...]) -> _StmtFn:
    fns = tuple(_compile_stmt(s) for s in stmts)
    if len(fns) == 1:
        return fns[0]
    if not fns:
        return lambda run: None

    def run_seq(run: _Run) -> None:
        for fn in fns:
            fn(run)

    return run_seq


def _compiled(program: Program) -> _StmtFn:
    # cached on the (frozen) instance itself: re-hashing a whole AST per
    # execute call is measurable when one program runs on 1000 worlds
    fn = getattr(program, "_compiled_fn", None)
    if fn is None:
        fn = _compile_block(program.body)
        object.__setattr__(program, "_compiled_fn", fn)
    return fn
