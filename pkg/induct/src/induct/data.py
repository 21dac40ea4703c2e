"""Readers for the benchmark's on-disk formats, re-implemented here.

The trainer talks to the toolchain only through files: `.karelds`
datasets (JSON lines with embedded world text records), the 16-channel
feature layout, and the delta token line format it must emit. Each
piece is parity-tested against the `karel` CLI.

World text record:

    rows cols agent_row agent_col dir
    obstacles r,c ...
    markers r,c,count ...

Feature channels: 0-3 agent facing north/east/south/west, 4-13 marker
count 1..10 one-hot, 14 obstacle, 15 valid-cell mask. Grids are padded
to 20x20 for batching; the mask is zero on padding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

GRID = 20
CHANNELS = 16
DIRS = ("north", "east", "south", "west")
_DIR_INDEX = {name: i for i, name in enumerate(DIRS)}


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GridWorld:
    rows: int
    cols: int
    agent_row: int
    agent_col: int
    agent_dir: str
    markers: tuple[tuple[int, int, int], ...]  # (row, col, count), sorted
    obstacles: tuple[tuple[int, int], ...]  # sorted


@dataclass(frozen=True)
class Task:
    task_id: str
    split: str
    program: str  # generating source, carried through for refs files only
    examples: tuple[tuple[GridWorld, GridWorld], ...]


def parse_world(text: str) -> GridWorld:
    lines = text.splitlines()
    if len(lines) != 3:
        raise DataFormatError(f"world record must have 3 lines, got {len(lines)}")
    header = lines[0].split()
    if len(header) != 5 or header[4] not in _DIR_INDEX:
        raise DataFormatError(f"bad world header {lines[0]!r}")
    rows, cols, agent_row, agent_col = (int(v) for v in header[:4])

    parts = lines[1].split()
    if not parts or parts[0] != "obstacles":
        raise DataFormatError("second line must be the obstacle list")
    obstacles = tuple(tuple(int(v) for v in p.split(",")) for p in parts[1:])

    parts = lines[2].split()
    if not parts or parts[0] != "markers":
        raise DataFormatError("third line must be the marker list")
    markers = tuple(tuple(int(v) for v in p.split(",")) for p in parts[1:])
    return GridWorld(rows, cols, agent_row, agent_col, header[4], markers, obstacles)


def read_dataset(path: str | Path) -> list[Task]:
    tasks = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
                examples = tuple(
                    (parse_world(ex["input"]), parse_world(ex["output"]))
                    for ex in payload["examples"]
                )
                tasks.append(
                    Task(payload["task_id"], payload["split"], payload["program"], examples)
                )
            except (KeyError, ValueError) as exc:
                raise DataFormatError(f"{path}:{line_no}: {exc}") from None
    return tasks


def encode_features(world: GridWorld, pad_to: int = GRID) -> np.ndarray:
    """Channel-first float32 tensor (16, pad_to, pad_to)."""
    if world.rows > pad_to or world.cols > pad_to:
        raise DataFormatError(f"grid {world.rows}x{world.cols} exceeds pad size {pad_to}")
    grid = np.zeros((CHANNELS, pad_to, pad_to), dtype=np.float32)
    grid[_DIR_INDEX[world.agent_dir], world.agent_row, world.agent_col] = 1.0
    for r, c, count in world.markers:
        grid[4 + count - 1, r, c] = 1.0
    for r, c in world.obstacles:
        grid[14, r, c] = 1.0
    grid[15, : world.rows, : world.cols] = 1.0
    return grid


def world_text(world: GridWorld) -> str:
    """Canonical world record, byte-compatible with the toolchain."""
    header = f"{world.rows} {world.cols} {world.agent_row} {world.agent_col} {world.agent_dir}"
    obstacles = " ".join(f"{r},{c}" for r, c in sorted(world.obstacles))
    markers = " ".join(f"{r},{c},{n}" for r, c, n in sorted(world.markers))
    line2 = "obstacles" + (f" {obstacles}" if obstacles else "")
    line3 = "markers" + (f" {markers}" if markers else "")
    return f"{header}\n{line2}\n{line3}\n"


def write_dataset(tasks: list[Task], path: str | Path) -> None:
    """Write tasks back out in the canonical `.karelds` form (used to
    publish eval-only reference files for scoring)."""
    lines = []
    for task in tasks:
        payload = {
            "task_id": task.task_id,
            "program": task.program,
            "split": task.split,
            "examples": [
                {"input": world_text(a), "output": world_text(b)}
                for a, b in task.examples
            ],
        }
        lines.append(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


# --- delta target construction (must match the toolchain byte for byte) ---


def delta_tokens(before: GridWorld, after: GridWorld) -> list[str]:
    """Token sequence describing before -> after, END-terminated."""
    tokens = [
        f"AgentRow={after.agent_row - before.agent_row:+d}",
        f"AgentCol={after.agent_col - before.agent_col:+d}",
        f"HeroDir={after.agent_dir}",
    ]
    counts: dict[tuple[int, int], int] = {}
    for r, c, n in before.markers:
        counts[(r, c)] = -n
    for r, c, n in after.markers:
        counts[(r, c)] = counts.get((r, c), 0) + n
    edits = sorted(
        (r - before.agent_row, c - before.agent_col, d)
        for (r, c), d in counts.items()
        if d
    )
    for drow, dcol, dcount in edits:
        tokens.append(f"MarkerRow={drow:+d}" if drow else "MarkerRow=0")
        tokens.append(f"MarkerCol={dcol:+d}" if dcol else "MarkerCol=0")
        tokens.append(f"MarkerCount={dcount:+d}")
    tokens.append("END")
    return tokens
