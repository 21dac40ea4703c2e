"""Core domain types: grid worlds, program ASTs, execution outcomes.

Coordinate convention: row 0 is the top row and rows grow southward,
col 0 is leftmost and cols grow eastward. North therefore decreases
the row index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

MIN_DIM = 2
MAX_DIM = 20
MAX_MARKERS_PER_CELL = 10
MAX_STATEMENTS = 20
MAX_NESTING_DEPTH = 4
MIN_REPEAT = 2
MAX_REPEAT = 10


class KarelError(Exception):
    """Base class for all errors raised by this package."""


class InvalidWorld(KarelError):
    """A World constructor argument violates a structural invariant."""


class DepthError(KarelError):
    """Program nesting depth exceeds MAX_NESTING_DEPTH."""


class SizeError(KarelError):
    """Program statement count exceeds MAX_STATEMENTS."""


class Direction(Enum):
    NORTH = "north"
    EAST = "east"
    SOUTH = "south"
    WEST = "west"

    @property
    def delta(self) -> tuple[int, int]:
        """(drow, dcol) for one step in this direction."""
        return _DELTAS[self]

    @property
    def left(self) -> "Direction":
        return _LEFT[self]

    @property
    def right(self) -> "Direction":
        return _LEFT[_LEFT[_LEFT[self]]]


_DELTAS = {
    Direction.NORTH: (-1, 0),
    Direction.EAST: (0, 1),
    Direction.SOUTH: (1, 0),
    Direction.WEST: (0, -1),
}
_LEFT = {
    Direction.NORTH: Direction.WEST,
    Direction.WEST: Direction.SOUTH,
    Direction.SOUTH: Direction.EAST,
    Direction.EAST: Direction.NORTH,
}


@dataclass(frozen=True)
class World:
    """Immutable Karel grid state.

    markers maps (row, col) -> count; cells absent from the map hold zero
    markers. Obstacles and marker cells are disjoint, and the agent never
    stands on an obstacle (it may stand on markers).
    """

    rows: int
    cols: int
    agent_row: int
    agent_col: int
    agent_dir: Direction
    markers: dict[tuple[int, int], int] = field(default_factory=dict)
    obstacles: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not (MIN_DIM <= self.rows <= MAX_DIM and MIN_DIM <= self.cols <= MAX_DIM):
            raise InvalidWorld(f"grid dims {self.rows}x{self.cols} outside [{MIN_DIM}, {MAX_DIM}]")
        if not isinstance(self.agent_dir, Direction):
            raise InvalidWorld(f"agent_dir must be a Direction, got {self.agent_dir!r}")
        if not self.in_bounds(self.agent_row, self.agent_col):
            raise InvalidWorld(f"agent at ({self.agent_row}, {self.agent_col}) out of bounds")
        object.__setattr__(self, "obstacles", frozenset(self.obstacles))
        object.__setattr__(self, "markers", dict(self.markers))
        if (self.agent_row, self.agent_col) in self.obstacles:
            raise InvalidWorld("agent cell is an obstacle")
        for r, c in self.obstacles:
            if not self.in_bounds(r, c):
                raise InvalidWorld(f"obstacle ({r}, {c}) out of bounds")
        for (r, c), count in self.markers.items():
            if not self.in_bounds(r, c):
                raise InvalidWorld(f"marker cell ({r}, {c}) out of bounds")
            if (r, c) in self.obstacles:
                raise InvalidWorld(f"marker cell ({r}, {c}) is an obstacle")
            if not 1 <= count <= MAX_MARKERS_PER_CELL:
                raise InvalidWorld(f"marker count {count} at ({r}, {c}) outside [1, {MAX_MARKERS_PER_CELL}]")

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.rows and 0 <= col < self.cols

    def marker_count(self, row: int, col: int) -> int:
        return self.markers.get((row, col), 0)

    def is_clear(self, row: int, col: int) -> bool:
        """True iff (row, col) is in bounds and not an obstacle."""
        return self.in_bounds(row, col) and (row, col) not in self.obstacles


def world_equal(a: World, b: World) -> bool:
    """Exact equality over dims, agent pose, markers, and obstacles."""
    return (
        a.rows == b.rows
        and a.cols == b.cols
        and a.agent_row == b.agent_row
        and a.agent_col == b.agent_col
        and a.agent_dir == b.agent_dir
        and a.markers == b.markers
        and a.obstacles == b.obstacles
    )


# --- Execution outcomes ---


class CrashCause(Enum):
    HIT_OBSTACLE = "hit_obstacle"
    OUT_OF_BOUNDS = "out_of_bounds"
    PICK_EMPTY = "pick_empty"
    MARKER_OVERFLOW = "marker_overflow"


@dataclass(frozen=True)
class Success:
    final: World
    steps: int


@dataclass(frozen=True)
class Crash:
    step: int  # 1-based position of the faulting action
    cause: CrashCause


@dataclass(frozen=True)
class Timeout:
    step_limit: int


ExecutionOutcome = Success | Crash | Timeout


# --- Program AST ---


class ActionKind(Enum):
    MOVE = "move"
    TURN_LEFT = "turnLeft"
    TURN_RIGHT = "turnRight"
    PUT_MARKER = "putMarker"
    PICK_MARKER = "pickMarker"


class CondKind(Enum):
    FRONT_IS_CLEAR = "frontIsClear"
    LEFT_IS_CLEAR = "leftIsClear"
    RIGHT_IS_CLEAR = "rightIsClear"
    MARKERS_PRESENT = "markersPresent"
    NO_MARKERS_PRESENT = "noMarkersPresent"


@dataclass(frozen=True)
class Cond:
    kind: CondKind


@dataclass(frozen=True)
class Not:
    inner: "Condition"


Condition = Cond | Not


@dataclass(frozen=True)
class Action:
    kind: ActionKind


@dataclass(frozen=True)
class If:
    cond: Condition
    block: tuple["Statement", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "block", tuple(self.block))
        if not self.block:
            raise KarelError("if block must be non-empty")


@dataclass(frozen=True)
class IfElse:
    cond: Condition
    then_block: tuple["Statement", ...]
    else_block: tuple["Statement", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "then_block", tuple(self.then_block))
        object.__setattr__(self, "else_block", tuple(self.else_block))
        if not self.then_block or not self.else_block:
            raise KarelError("ifelse blocks must be non-empty")


@dataclass(frozen=True)
class While:
    cond: Condition
    block: tuple["Statement", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "block", tuple(self.block))
        if not self.block:
            raise KarelError("while block must be non-empty")


@dataclass(frozen=True)
class Repeat:
    times: int
    block: tuple["Statement", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "block", tuple(self.block))
        if not self.block:
            raise KarelError("repeat block must be non-empty")
        if not MIN_REPEAT <= self.times <= MAX_REPEAT:
            raise KarelError(f"repeat count {self.times} outside [{MIN_REPEAT}, {MAX_REPEAT}]")


Statement = Action | If | IfElse | While | Repeat

# Shorthand action singletons, handy in tests and builders.
MOVE = Action(ActionKind.MOVE)
TURN_LEFT = Action(ActionKind.TURN_LEFT)
TURN_RIGHT = Action(ActionKind.TURN_RIGHT)
PUT_MARKER = Action(ActionKind.PUT_MARKER)
PICK_MARKER = Action(ActionKind.PICK_MARKER)


@dataclass(frozen=True)
class Program:
    """A validated Karel program. Construction enforces the global
    statement-count and nesting-depth caps; an empty body is permitted
    in memory (the concrete grammar requires at least one statement)."""

    body: tuple[Statement, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", tuple(self.body))
        size = _count_statements(self.body)
        if size > MAX_STATEMENTS:
            raise SizeError(f"program has {size} statements (max {MAX_STATEMENTS})")
        depth = _block_depth(self.body)
        if depth > MAX_NESTING_DEPTH:
            raise DepthError(f"program nesting depth {depth} (max {MAX_NESTING_DEPTH})")


def _blocks_of(stmt: Statement) -> tuple[tuple[Statement, ...], ...]:
    if isinstance(stmt, (If, While, Repeat)):
        return (stmt.block,)
    if isinstance(stmt, IfElse):
        return (stmt.then_block, stmt.else_block)
    return ()


def _count_statements(stmts: tuple[Statement, ...]) -> int:
    total = 0
    for stmt in stmts:
        total += 1
        for block in _blocks_of(stmt):
            total += _count_statements(block)
    return total


def _block_depth(stmts: tuple[Statement, ...]) -> int:
    depth = 0
    for stmt in stmts:
        blocks = _blocks_of(stmt)
        if blocks:
            depth = max(depth, 1 + max(_block_depth(b) for b in blocks))
    return depth


def statement_count(program: Program) -> int:
    """Number of Statement nodes, counting control nodes and actions alike."""
    return _count_statements(program.body)


def nesting_depth(program: Program) -> int:
    """Maximum number of nested control nodes along any AST path."""
    return _block_depth(program.body)
