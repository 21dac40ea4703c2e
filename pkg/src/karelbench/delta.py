"""Canonical world-to-world diffs and their token form.

A DeltaScript captures the agent displacement, the final absolute
direction, and every marker-count change. Marker offsets are relative
to the agent's *input* position. The token rendering is fixed:

    AgentRow=+1 AgentCol=+2 HeroDir=south MarkerRow=0 MarkerCol=0 MarkerCount=+2 END

Agent offsets always carry a sign (zero renders as "+0"); marker
offsets render zero without a sign; marker count deltas are never
zero. One canonical byte string per delta.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Direction, KarelError, MAX_DIM, MAX_MARKERS_PER_CELL, World

MAX_OFFSET = MAX_DIM - 1  # agent/marker offsets live in [-19, +19]


class DimensionMismatch(KarelError):
    """diff() inputs must share grid dims and obstacle layout."""


class InvalidDelta(KarelError):
    """apply() would produce an invalid world."""


class MalformedTokenSequence(KarelError):
    """Token text violates the delta grammar."""


_DIRS = {d.value: d for d in Direction}


@dataclass(frozen=True)
class DeltaScript:
    agent_drow: int
    agent_dcol: int
    final_dir: Direction
    marker_edits: tuple[tuple[int, int, int], ...] = ()  # (drow, dcol, dcount)

    def __post_init__(self) -> None:
        object.__setattr__(self, "marker_edits", tuple(self.marker_edits))
        seen: set[tuple[int, int]] = set()
        prev = None
        for drow, dcol, dcount in self.marker_edits:
            if dcount == 0:
                raise InvalidDelta(f"zero marker delta at offset ({drow}, {dcol})")
            if (drow, dcol) in seen:
                raise InvalidDelta(f"duplicate marker edit at offset ({drow}, {dcol})")
            seen.add((drow, dcol))
            if prev is not None and (drow, dcol) < prev:
                raise InvalidDelta("marker edits not in canonical (drow, dcol) order")
            prev = (drow, dcol)


def identity_delta(world: World) -> DeltaScript:
    return DeltaScript(0, 0, world.agent_dir, ())


def diff(input_world: World, output_world: World) -> DeltaScript:
    """Delta turning input into output. Both worlds must share dims and
    obstacles; marker offsets are relative to the input agent cell."""
    if (input_world.rows, input_world.cols) != (output_world.rows, output_world.cols):
        raise DimensionMismatch(
            f"dims differ: {input_world.rows}x{input_world.cols} vs "
            f"{output_world.rows}x{output_world.cols}"
        )
    if input_world.obstacles != output_world.obstacles:
        raise DimensionMismatch("obstacle layouts differ")
    ar, ac = input_world.agent_row, input_world.agent_col
    edits = []
    for cell in input_world.markers.keys() | output_world.markers.keys():
        change = output_world.markers.get(cell, 0) - input_world.markers.get(cell, 0)
        if change:
            edits.append((cell[0] - ar, cell[1] - ac, change))
    edits.sort(key=lambda e: (e[0], e[1]))
    return DeltaScript(
        output_world.agent_row - ar,
        output_world.agent_col - ac,
        output_world.agent_dir,
        tuple(edits),
    )


def apply(input_world: World, delta: DeltaScript) -> World:
    """Inverse of diff: input + delta -> output world."""
    ar, ac = input_world.agent_row, input_world.agent_col
    new_r, new_c = ar + delta.agent_drow, ac + delta.agent_dcol
    if not input_world.in_bounds(new_r, new_c):
        raise InvalidDelta(f"agent destination ({new_r}, {new_c}) out of bounds")
    if (new_r, new_c) in input_world.obstacles:
        raise InvalidDelta(f"agent destination ({new_r}, {new_c}) is an obstacle")
    markers = dict(input_world.markers)
    for drow, dcol, dcount in delta.marker_edits:
        cell = (ar + drow, ac + dcol)
        if not input_world.in_bounds(*cell):
            raise InvalidDelta(f"marker edit target {cell} out of bounds")
        if cell in input_world.obstacles:
            raise InvalidDelta(f"marker edit target {cell} is an obstacle")
        count = markers.get(cell, 0) + dcount
        if not 0 <= count <= MAX_MARKERS_PER_CELL:
            raise InvalidDelta(f"marker count {count} at {cell} outside [0, {MAX_MARKERS_PER_CELL}]")
        if count == 0:
            del markers[cell]
        else:
            markers[cell] = count
    return World(
        input_world.rows, input_world.cols, new_r, new_c, delta.final_dir,
        markers, input_world.obstacles,
    )


def _fmt_signed(value: int) -> str:
    return f"{value:+d}"


def _fmt_offset(value: int) -> str:
    # marker offsets: zero renders without a sign
    return f"{value:+d}" if value else "0"


def tokenize(delta: DeltaScript) -> list[str]:
    """Canonical token sequence, END-terminated."""
    for name, value in (("agent_drow", delta.agent_drow), ("agent_dcol", delta.agent_dcol)):
        if abs(value) > MAX_OFFSET:
            raise InvalidDelta(f"{name} {value} outside [-{MAX_OFFSET}, +{MAX_OFFSET}]")
    tokens = [
        f"AgentRow={_fmt_signed(delta.agent_drow)}",
        f"AgentCol={_fmt_signed(delta.agent_dcol)}",
        f"HeroDir={delta.final_dir.value}",
    ]
    for drow, dcol, dcount in delta.marker_edits:
        if abs(drow) > MAX_OFFSET or abs(dcol) > MAX_OFFSET:
            raise InvalidDelta(f"marker offset ({drow}, {dcol}) outside [-{MAX_OFFSET}, +{MAX_OFFSET}]")
        if abs(dcount) > MAX_MARKERS_PER_CELL:
            raise InvalidDelta(f"marker count delta {dcount} outside [-10, +10]")
        tokens.append(f"MarkerRow={_fmt_offset(drow)}")
        tokens.append(f"MarkerCol={_fmt_offset(dcol)}")
        tokens.append(f"MarkerCount={_fmt_signed(dcount)}")
    tokens.append("END")
    return tokens


def _take(tokens: list[str], index: int, key: str) -> str:
    if index >= len(tokens):
        raise MalformedTokenSequence(f"truncated sequence: expected {key}=... at position {index}")
    token = tokens[index]
    if not token.startswith(key + "="):
        raise MalformedTokenSequence(f"expected {key}=... at position {index}, found {token!r}")
    return token[len(key) + 1 :]


def _parse_int(text: str, key: str, bound: int) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise MalformedTokenSequence(f"bad integer {text!r} for {key}") from None
    if abs(value) > bound:
        raise MalformedTokenSequence(f"{key} value {value} outside [-{bound}, +{bound}]")
    return value


def detokenize(tokens: list[str] | str) -> DeltaScript:
    """Parse a token sequence (list or single-space-joined text) back
    into a DeltaScript. Strict: canonical ordering and END required."""
    if isinstance(tokens, str):
        tokens = tokens.split()
    drow = _parse_int(_take(tokens, 0, "AgentRow"), "AgentRow", MAX_OFFSET)
    dcol = _parse_int(_take(tokens, 1, "AgentCol"), "AgentCol", MAX_OFFSET)
    dir_text = _take(tokens, 2, "HeroDir")
    if dir_text not in _DIRS:
        raise MalformedTokenSequence(f"unknown direction {dir_text!r}")
    edits = []
    i = 3
    while i < len(tokens) and tokens[i] != "END":
        mrow = _parse_int(_take(tokens, i, "MarkerRow"), "MarkerRow", MAX_OFFSET)
        mcol = _parse_int(_take(tokens, i + 1, "MarkerCol"), "MarkerCol", MAX_OFFSET)
        mcount = _parse_int(_take(tokens, i + 2, "MarkerCount"), "MarkerCount", MAX_MARKERS_PER_CELL)
        if mcount == 0:
            raise MalformedTokenSequence("MarkerCount must be nonzero")
        edits.append((mrow, mcol, mcount))
        i += 3
    if i >= len(tokens):
        raise MalformedTokenSequence("missing END token")
    if i != len(tokens) - 1:
        raise MalformedTokenSequence("tokens after END")
    try:
        return DeltaScript(drow, dcol, _DIRS[dir_text], tuple(edits))
    except InvalidDelta as exc:
        raise MalformedTokenSequence(str(exc)) from None


def to_text(delta: DeltaScript) -> str:
    """Single-space-joined token line, the interchange form."""
    return " ".join(tokenize(delta))


def vocabulary() -> list[str]:
    """Every token the codec can emit, in a fixed order (181 entries)."""
    vocab = [f"AgentRow={_fmt_signed(v)}" for v in range(-MAX_OFFSET, MAX_OFFSET + 1)]
    vocab += [f"AgentCol={_fmt_signed(v)}" for v in range(-MAX_OFFSET, MAX_OFFSET + 1)]
    vocab += [f"HeroDir={d.value}" for d in Direction]
    vocab += [f"MarkerRow={_fmt_offset(v)}" for v in range(-MAX_OFFSET, MAX_OFFSET + 1)]
    vocab += [f"MarkerCol={_fmt_offset(v)}" for v in range(-MAX_OFFSET, MAX_OFFSET + 1)]
    vocab += [f"MarkerCount={_fmt_signed(v)}" for v in range(-MAX_MARKERS_PER_CELL, MAX_MARKERS_PER_CELL + 1) if v]
    vocab.append("END")
    return vocab
