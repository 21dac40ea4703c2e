"""Umbrella `karel` command-line tool."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .core import Crash, KarelError, MAX_NESTING_DEPTH, MAX_STATEMENTS, Success, Timeout
from .dataio import encode_world, read_dataset, read_world, world_to_text
from .delta import apply as apply_delta, detokenize, diff, to_text
from .generate import GenConfig, generate_dataset
from .harness import dataset_stats, plan_subsets, read_predictions, score_dataset
from .interpreter import DEFAULT_STEP_LIMIT, execute, trace
from .parsing import parse


def _cmd_gen(args: argparse.Namespace) -> int:
    config = GenConfig(
        seed=args.seed,
        examples_per_task=args.examples_per_task,
        step_limit=args.step_limit,
        max_statements=args.max_statements,
        max_depth=args.max_depth,
    )
    counts = {"train": args.train, "validation": args.valid, "test": args.test}
    counts = {k: v for k, v in counts.items() if v > 0}
    if not counts:
        print("nothing to generate: all split counts are zero", file=sys.stderr)
        return 2
    paths = generate_dataset(config, counts, args.out, workers=args.workers)
    for split, path in paths.items():
        print(f"{split}: {path}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    program = parse(Path(args.program).read_text(encoding="utf-8"))
    world = read_world(args.world)
    if args.trace:
        for step, (action, snapshot) in enumerate(trace(program, world, args.step_limit), start=1):
            print(f"step {step}: {action.kind.value}")
            print(world_to_text(snapshot), end="")
    outcome = execute(program, world, args.step_limit)
    if isinstance(outcome, Success):
        print(f"success steps={outcome.steps}")
        print(world_to_text(outcome.final), end="")
        return 0
    if isinstance(outcome, Crash):
        print(f"crash step={outcome.step} cause={outcome.cause.value}")
        return 1
    assert isinstance(outcome, Timeout)
    print(f"timeout step_limit={outcome.step_limit}")
    return 1


def _cmd_diff(args: argparse.Namespace) -> int:
    input_world = read_world(args.input)
    output_world = read_world(args.output)
    print(to_text(diff(input_world, output_world)))
    return 0


def _cmd_apply(args: argparse.Namespace) -> int:
    input_world = read_world(args.input)
    tokens = Path(args.delta_file).read_text(encoding="utf-8").strip() if args.delta_file else args.delta
    result = apply_delta(input_world, detokenize(tokens))
    print(world_to_text(result), end="")
    return 0


def _cmd_encode(args: argparse.Namespace) -> int:
    world = read_world(args.world)
    grid = encode_world(world)
    rows, cols, channels = grid.shape
    print(f"{rows} {cols} {channels}")
    for r in range(rows):
        print(" ".join("".join(str(int(b)) for b in grid[r, c]) for c in range(cols)))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    predictions = read_predictions(args.pred)
    records = read_dataset(args.data)
    report = score_dataset(predictions, records)
    print(f"examples: {report.total}")
    print(f"correct: {report.correct}")
    print(f"malformed predictions: {report.malformed}")
    print(f"exact match: {report.accuracy:.2f}%")
    print()
    print(f"{'task':<24} {'correct':>8} {'total':>8} {'accuracy':>9}")
    for task_id in sorted(report.per_task):
        correct, total = report.per_task[task_id]
        print(f"{task_id:<24} {correct:>8} {total:>8} {report.task_accuracy(task_id):>8.2f}%")
    for target in (args.csv, args.curves):
        if target:
            with open(target, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(["task_id", "correct", "total", "accuracy"])
                for task_id in sorted(report.per_task):
                    correct, total = report.per_task[task_id]
                    writer.writerow([task_id, correct, total, f"{report.task_accuracy(task_id):.4f}"])
                writer.writerow(["OVERALL", report.correct, report.total, f"{report.accuracy:.4f}"])
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    records = read_dataset(args.data)
    report = dataset_stats(records)
    print(f"tasks: {report.num_tasks}")
    print(f"examples: {report.num_examples}")
    print(f"marker density: {report.marker_density:.4f}")
    print(f"obstacle density: {report.obstacle_density:.4f}")
    print(f"duplicate programs: {report.duplicate_programs}")
    print(f"duplicate input grids: {report.duplicate_inputs}")
    print(f"program sizes: {dict(sorted(report.program_size_hist.items()))}")
    print(f"nesting depths: {dict(sorted(report.depth_hist.items()))}")
    print(f"grid dims: {dict(sorted(report.grid_dim_hist.items()))}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["metric", "key", "value"])
            writer.writerow(["tasks", "", report.num_tasks])
            writer.writerow(["examples", "", report.num_examples])
            writer.writerow(["marker_density", "", f"{report.marker_density:.6f}"])
            writer.writerow(["obstacle_density", "", f"{report.obstacle_density:.6f}"])
            writer.writerow(["duplicate_programs", "", report.duplicate_programs])
            writer.writerow(["duplicate_inputs", "", report.duplicate_inputs])
            for name, hist in (
                ("program_size", report.program_size_hist),
                ("depth", report.depth_hist),
                ("grid_dim", report.grid_dim_hist),
            ):
                for key in sorted(hist):
                    writer.writerow([name, key, hist[key]])
    return 0


def _cmd_plan_subsets(args: argparse.Namespace) -> int:
    plan = plan_subsets(args.n, args.k, args.seed)
    for subset in plan.subsets:
        print(" ".join(str(i) for i in subset))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="karel", description="Karel benchmark toolchain")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate train/validation/test datasets")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--train", type=int, default=0)
    p.add_argument("--valid", type=int, default=0)
    p.add_argument("--test", type=int, default=0)
    p.add_argument("--examples-per-task", type=int, default=6)
    p.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)
    p.add_argument("--max-statements", type=int, default=MAX_STATEMENTS,
                   help="program size cap (smaller = easier task family)")
    p.add_argument("--max-depth", type=int, default=MAX_NESTING_DEPTH)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="execute a program on a world")
    p.add_argument("--program", required=True)
    p.add_argument("--world", required=True)
    p.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("diff", help="token delta between two worlds")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("apply", help="apply a token delta to a world")
    p.add_argument("--input", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--delta", help="token line")
    group.add_argument("--delta-file", help="file holding the token line")
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("encode", help="dump the 16-channel feature grid as text")
    p.add_argument("--world", required=True)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("eval", help="exact-match scoring of a prediction file")
    p.add_argument("--pred", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--csv", help="write the per-task report as CSV")
    p.add_argument("--curves", help="write accuracy CSV for external plotting")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--csv", help="write the report as CSV")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("plan-subsets", help="plan k-sized demonstration subsets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_plan_subsets)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KarelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
