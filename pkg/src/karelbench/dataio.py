"""Serialization and the 16-channel feature encoding.

World text record (canonical, 3 lines, sorted coordinate lists):

    rows cols agent_row agent_col dir
    obstacles r,c r,c ...
    markers r,c,count ...

Datasets are newline-delimited JSON, one task per line with sorted
keys and compact separators, worlds embedded as their canonical text.
Canonical formatting makes byte equality coincide with value equality.

Feature channels (shape rows x cols x 16, binary):

    0-3   agent facing north/east/south/west (one bit in the grid)
    4-13  marker count 1..10, one-hot on the count
    14    obstacle
    15    valid-cell mask (all ones here; zeros appear only when a
          consumer pads grids to a fixed size for batching)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Direction, KarelError, MAX_MARKERS_PER_CELL, World

NUM_CHANNELS = 16
CH_AGENT = 0  # 0..3, indexed by Direction order north/east/south/west
CH_MARKER = 4  # 4..13, marker count 1..10
CH_OBSTACLE = 14
CH_VALID = 15

_DIR_INDEX = {d: i for i, d in enumerate(Direction)}
_DIRS_BY_INDEX = list(Direction)
_DIR_NAMES = {d.value: d for d in Direction}

WORLD_SUFFIX = ".karelworld"
DATASET_SUFFIX = ".karelds"


class MalformedFeatureGrid(KarelError):
    """Feature tensor violates the channel invariants."""


class FormatError(KarelError):
    """Structured text parse failure, with a 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- feature encoding ---


def encode_world(world: World) -> np.ndarray:
    """World -> binary uint8 tensor of shape (rows, cols, 16)."""
    grid = np.zeros((world.rows, world.cols, NUM_CHANNELS), dtype=np.uint8)
    grid[world.agent_row, world.agent_col, CH_AGENT + _DIR_INDEX[world.agent_dir]] = 1
    for (r, c), count in world.markers.items():
        grid[r, c, CH_MARKER + count - 1] = 1
    for r, c in world.obstacles:
        grid[r, c, CH_OBSTACLE] = 1
    grid[:, :, CH_VALID] = 1
    return grid


def decode_features(grid: np.ndarray) -> World:
    """Inverse of encode_world; raises MalformedFeatureGrid when the
    tensor does not describe a valid world."""
    arr = np.asarray(grid)
    if arr.ndim != 3 or arr.shape[2] != NUM_CHANNELS:
        raise MalformedFeatureGrid(f"expected shape (rows, cols, {NUM_CHANNELS}), got {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise MalformedFeatureGrid("entries must be binary")
    rows, cols = arr.shape[:2]
    if not (arr[:, :, CH_VALID] == 1).all():
        raise MalformedFeatureGrid("valid-cell mask must be all ones on an unpadded grid")
    agent_bits = arr[:, :, CH_AGENT : CH_AGENT + 4]
    if int(agent_bits.sum()) != 1:
        raise MalformedFeatureGrid(f"expected exactly one agent bit, found {int(agent_bits.sum())}")
    agent_row, agent_col, dir_idx = (int(v) for v in np.argwhere(agent_bits)[0])
    marker_bits = arr[:, :, CH_MARKER : CH_MARKER + MAX_MARKERS_PER_CELL]
    if (marker_bits.sum(axis=2) > 1).any():
        raise MalformedFeatureGrid("marker count channels must be mutually exclusive per cell")
    obstacle = arr[:, :, CH_OBSTACLE]
    if ((marker_bits.sum(axis=2) > 0) & (obstacle > 0)).any():
        raise MalformedFeatureGrid("marker channels set on an obstacle cell")
    markers = {
        (int(r), int(c)): int(k) + 1 for r, c, k in np.argwhere(marker_bits)
    }
    obstacles = frozenset((int(r), int(c)) for r, c in np.argwhere(obstacle))
    try:
        return World(rows, cols, agent_row, agent_col, _DIRS_BY_INDEX[dir_idx], markers, obstacles)
    except KarelError as exc:
        raise MalformedFeatureGrid(str(exc)) from None


# --- world text form ---


def world_to_text(world: World) -> str:
    header = f"{world.rows} {world.cols} {world.agent_row} {world.agent_col} {world.agent_dir.value}"
    obstacles = " ".join(f"{r},{c}" for r, c in sorted(world.obstacles))
    markers = " ".join(f"{r},{c},{n}" for (r, c), n in sorted(world.markers.items()))
    lines = ["obstacles", "markers"]
    lines[0] += f" {obstacles}" if obstacles else ""
    lines[1] += f" {markers}" if markers else ""
    return f"{header}\n{lines[0]}\n{lines[1]}\n"


def _parse_fields(text: str, line: int, expected: int, label: str) -> list[int]:
    parts = text.split(",")
    if len(parts) != expected:
        raise FormatError(f"bad {label} entry {text!r}", line)
    try:
        return [int(p, 10) for p in parts]
    except ValueError:
        raise FormatError(f"bad {label} entry {text!r}", line) from None


def world_from_text(text: str, first_line: int = 1) -> World:
    lines = text.splitlines()
    if len(lines) != 3:
        raise FormatError(f"expected 3 lines in world record, got {len(lines)}", first_line)
    header = lines[0].split()
    if len(header) != 5:
        raise FormatError("header must be 'rows cols agent_row agent_col dir'", first_line)
    try:
        rows, cols, agent_row, agent_col = (int(v, 10) for v in header[:4])
    except ValueError:
        raise FormatError(f"bad header integers in {lines[0]!r}", first_line) from None
    if header[4] not in _DIR_NAMES:
        raise FormatError(f"unknown direction {header[4]!r}", first_line)

    obst_parts = lines[1].split()
    if not obst_parts or obst_parts[0] != "obstacles":
        raise FormatError("second line must start with 'obstacles'", first_line + 1)
    obstacles = frozenset(
        tuple(_parse_fields(p, first_line + 1, 2, "obstacle")) for p in obst_parts[1:]
    )
    mark_parts = lines[2].split()
    if not mark_parts or mark_parts[0] != "markers":
        raise FormatError("third line must start with 'markers'", first_line + 2)
    markers = {}
    for p in mark_parts[1:]:
        r, c, n = _parse_fields(p, first_line + 2, 3, "marker")
        if (r, c) in markers:
            raise FormatError(f"duplicate marker cell ({r}, {c})", first_line + 2)
        markers[(r, c)] = n
    try:
        return World(rows, cols, agent_row, agent_col, _DIR_NAMES[header[4]], markers, obstacles)
    except KarelError as exc:
        raise FormatError(str(exc), first_line) from None


def write_world(world: World, path: str | Path) -> None:
    Path(path).write_text(world_to_text(world), encoding="utf-8")


def read_world(path: str | Path) -> World:
    return world_from_text(Path(path).read_text(encoding="utf-8"))


# --- task records and dataset files ---

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class TaskRecord:
    """One induction task: a program plus its I/O examples."""

    task_id: str
    program_source: str
    examples: tuple[tuple[World, World], ...]
    split: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "examples", tuple(self.examples))
        if self.split not in SPLITS:
            raise KarelError(f"unknown split {self.split!r}")
        if not self.examples:
            raise KarelError("task must carry at least one example")


def record_to_json(record: TaskRecord) -> str:
    payload = {
        "task_id": record.task_id,
        "program": record.program_source,
        "split": record.split,
        "examples": [
            {"input": world_to_text(i), "output": world_to_text(o)}
            for i, o in record.examples
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def record_from_json(text: str, line: int = 1) -> TaskRecord:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad JSON: {exc.msg}", line) from None
    try:
        examples = tuple(
            (world_from_text(ex["input"]), world_from_text(ex["output"]))
            for ex in payload["examples"]
        )
        return TaskRecord(payload["task_id"], payload["program"], examples, payload["split"])
    except KeyError as exc:
        raise FormatError(f"missing field {exc.args[0]!r}", line) from None
    except KarelError as exc:
        raise FormatError(str(exc), line) from None


def dataset_to_text(records: list[TaskRecord] | tuple[TaskRecord, ...]) -> str:
    return "".join(record_to_json(r) + "\n" for r in records)


def write_dataset(records: list[TaskRecord] | tuple[TaskRecord, ...], path: str | Path) -> None:
    Path(path).write_text(dataset_to_text(records), encoding="utf-8")


def read_dataset(path: str | Path) -> list[TaskRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if line:
                records.append(record_from_json(line, line_no))
    return records
