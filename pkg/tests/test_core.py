import pytest

from conftest import sample_programs, sample_worlds
from karelbench.core import (
    Action,
    ActionKind,
    Cond,
    CondKind,
    DepthError,
    Direction,
    If,
    IfElse,
    InvalidWorld,
    KarelError,
    MOVE,
    Not,
    PICK_MARKER,
    Program,
    Repeat,
    SizeError,
    TURN_LEFT,
    While,
    World,
    nesting_depth,
    statement_count,
    world_equal,
)

FRONT = Cond(CondKind.FRONT_IS_CLEAR)
MARKERS = Cond(CondKind.MARKERS_PRESENT)


# Independent AST-metric oracle: a flat worklist walk, unlike the
# recursive implementation under test.
def oracle_metrics(program):
    count = 0
    depth = 0
    work = [(stmt, 0) for stmt in program.body]
    while work:
        stmt, level = work.pop()
        count += 1
        if isinstance(stmt, (If, While, Repeat)):
            depth = max(depth, level + 1)
            work.extend((s, level + 1) for s in stmt.block)
        elif isinstance(stmt, IfElse):
            depth = max(depth, level + 1)
            work.extend((s, level + 1) for s in stmt.then_block)
            work.extend((s, level + 1) for s in stmt.else_block)
    return count, depth


class TestWorldInvariants:
    def test_valid_world(self):
        w = World(5, 7, 2, 3, Direction.EAST, {(0, 0): 3}, frozenset({(4, 4)}))
        assert w.marker_count(0, 0) == 3
        assert w.is_clear(0, 1)
        assert not w.is_clear(4, 4)
        assert not w.is_clear(5, 0)

    @pytest.mark.parametrize("rows,cols", [(1, 5), (5, 1), (21, 5), (5, 21), (0, 0)])
    def test_dims_out_of_range(self, rows, cols):
        with pytest.raises(InvalidWorld):
            World(rows, cols, 0, 0, Direction.NORTH)

    def test_agent_out_of_bounds(self):
        with pytest.raises(InvalidWorld):
            World(3, 3, 3, 0, Direction.NORTH)

    def test_agent_on_obstacle(self):
        with pytest.raises(InvalidWorld):
            World(3, 3, 1, 1, Direction.NORTH, {}, frozenset({(1, 1)}))

    def test_marker_on_obstacle(self):
        with pytest.raises(InvalidWorld):
            World(3, 3, 0, 0, Direction.NORTH, {(2, 2): 1}, frozenset({(2, 2)}))

    def test_marker_out_of_bounds(self):
        with pytest.raises(InvalidWorld):
            World(3, 3, 0, 0, Direction.NORTH, {(3, 0): 1})

    def test_obstacle_out_of_bounds(self):
        with pytest.raises(InvalidWorld):
            World(3, 3, 0, 0, Direction.NORTH, {}, frozenset({(0, 5)}))

    @pytest.mark.parametrize("count", [0, -1, 11])
    def test_marker_count_out_of_range(self, count):
        with pytest.raises(InvalidWorld):
            World(3, 3, 0, 0, Direction.NORTH, {(1, 1): count})

    def test_no_silent_clamp(self):
        # constructor must refuse, not repair
        with pytest.raises(KarelError):
            World(25, 25, 0, 0, Direction.NORTH)


class TestDirections:
    def test_left_cycle(self):
        d = Direction.NORTH
        seen = []
        for _ in range(4):
            d = d.left
            seen.append(d)
        assert seen == [Direction.WEST, Direction.SOUTH, Direction.EAST, Direction.NORTH]

    def test_right_inverts_left(self):
        for d in Direction:
            assert d.left.right is d
            assert d.right.left is d


class TestProgramMetrics:
    def test_single_action(self):
        assert statement_count(Program((MOVE,))) == 1

    def test_while_with_two_actions(self):
        p = Program((While(FRONT, (MOVE, TURN_LEFT)),))
        assert statement_count(p) == 3

    def test_empty_program(self):
        assert statement_count(Program(())) == 0
        assert nesting_depth(Program(())) == 0

    def test_flat_program_depth_zero(self):
        assert nesting_depth(Program((MOVE, TURN_LEFT))) == 0

    def test_nested_depth_two(self):
        p = Program((While(FRONT, (If(MARKERS, (MOVE,)),)),))
        assert nesting_depth(p) == 2

    def test_repeat_tower_depth_four(self):
        p = Program((Repeat(3, (Repeat(3, (Repeat(3, (Repeat(3, (MOVE,)),)),)),)),))
        assert nesting_depth(p) == 4

    def test_depth_five_rejected(self):
        inner = Repeat(2, (MOVE,))
        for _ in range(4):
            inner = Repeat(2, (inner,))
        with pytest.raises(DepthError):
            Program((inner,))

    def test_size_over_twenty_rejected(self):
        with pytest.raises(SizeError):
            Program(tuple(MOVE for _ in range(21)))

    def test_size_twenty_allowed(self):
        assert statement_count(Program(tuple(MOVE for _ in range(20)))) == 20

    def test_empty_block_rejected(self):
        with pytest.raises(KarelError):
            While(FRONT, ())
        with pytest.raises(KarelError):
            IfElse(FRONT, (MOVE,), ())

    @pytest.mark.parametrize("times", [0, 1, 11])
    def test_repeat_range(self, times):
        with pytest.raises(KarelError):
            Repeat(times, (MOVE,))

    def test_metrics_match_oracle_on_samples(self):
        for program in sample_programs(seed=101, count=1000):
            count, depth = oracle_metrics(program)
            assert statement_count(program) == count
            assert nesting_depth(program) == depth


class TestWorldEqual:
    def test_reflexive(self):
        for w in sample_worlds(seed=7, count=50):
            assert world_equal(w, w)

    def test_marker_change_differs(self):
        a = World(3, 3, 0, 0, Direction.NORTH, {(1, 1): 2})
        b = World(3, 3, 0, 0, Direction.NORTH, {(1, 1): 3})
        assert not world_equal(a, b)

    def test_direction_change_differs(self):
        a = World(3, 3, 0, 0, Direction.NORTH)
        b = World(3, 3, 0, 0, Direction.EAST)
        assert not world_equal(a, b)

    def test_equivalence_relation(self):
        worlds = sample_worlds(seed=13, count=40)
        # seed duplicates so equal pairs actually occur
        worlds = worlds + worlds[:10]
        for a in worlds:
            for b in worlds:
                assert world_equal(a, b) == world_equal(b, a)
                if world_equal(a, b):
                    for c in worlds:
                        if world_equal(b, c):
                            assert world_equal(a, c)

    def test_copy_is_equal(self):
        a = World(4, 4, 1, 2, Direction.SOUTH, {(0, 0): 1}, frozenset({(3, 3)}))
        b = World(4, 4, 1, 2, Direction.SOUTH, {(0, 0): 1}, frozenset({(3, 3)}))
        assert world_equal(a, b)


def test_action_kinds_distinct():
    assert len({a.kind for a in (MOVE, TURN_LEFT, PICK_MARKER)}) == 3
    assert Action(ActionKind.MOVE) == MOVE


def test_not_wraps_conditions():
    c = Not(Not(FRONT))
    assert isinstance(c.inner, Not)
