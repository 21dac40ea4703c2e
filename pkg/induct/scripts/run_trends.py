#!/usr/bin/env python3
"""Full trend-reproduction protocol.

Defaults follow the acceptance setup: Small model, 50,000 background
meta-training tasks, 25 held-out test tasks, and the four trends

    (a) meta beats plain at n=5 by >= 10 points exact match
    (b) plain+adapt >= plain at n=100 by >= 5 points
    (c) data-mixture adaptation held-out loss <= no-mixture at matched steps
    (d) meta trained on 10% of the tasks scores lower on unseen tasks

Budgeted for roughly half a day on one GPU-class machine; pass
--scale to shrink everything proportionally for smoke runs (the CI
suite uses scale 0.04 with a simplified program family).

Datasets are produced through the `karel` CLI; predictions are scored
with `karel eval`.
"""

import argparse
import json
import shutil
import subprocess
import sys
import time
from pathlib import Path

import torch

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from induct.data import read_dataset, write_dataset  # noqa: E402
from induct.regimes import RegimeConfig, run_regime  # noqa: E402
from induct.training import TrainSettings, adapt, evaluate_adapt_held_out  # noqa: E402


def karel(*args):
    exe = shutil.which("karel")
    if exe is None:
        raise SystemExit("`karel` CLI not found; install the toolchain package first")
    return subprocess.run([exe, *args], capture_output=True, text=True, check=True).stdout


def score(pred, refs):
    out = karel("eval", "--pred", str(pred), "--data", str(refs))
    for line in out.splitlines():
        if line.startswith("exact match:"):
            return float(line.split(":")[1].strip().rstrip("%"))
    raise RuntimeError("no score line from karel eval")


def generate(out_dir, args):
    """Background, validation, and per-n test datasets."""
    out_dir.mkdir(parents=True, exist_ok=True)
    caps = ["--max-statements", str(args.max_statements), "--max-depth", str(args.max_depth)]
    runs = {
        "bg": ["--seed", "9001", "--train", str(args.meta_tasks),
               "--examples-per-task", "6", "--workers", str(args.workers)],
        "test_n5": ["--seed", "9002", "--test", str(args.test_tasks),
                    "--examples-per-task", str(5 + args.eval_per_task)],
        "test_n100": ["--seed", "9003", "--test", str(max(4, args.test_tasks // 5)),
                      "--examples-per-task", str(100 + args.eval_per_task)],
        "portfolio": ["--seed", "9004", "--train", "4",
                      "--examples-per-task", str(args.portfolio_examples)],
    }
    paths = {}
    for name, flags in runs.items():
        target = out_dir / name
        marker = target / ("train.karelds" if "--train" in flags else "test.karelds")
        if not marker.exists():
            karel("gen", *flags, *caps, "--out", str(target))
        paths[name] = marker
    # carve validation tasks off the background set for checkpoint selection
    val_path = out_dir / "validation.karelds"
    if not val_path.exists():
        bg_tasks = read_dataset(paths["bg"])
        write_dataset(bg_tasks[-50:], val_path)
        write_dataset(bg_tasks[:-50], paths["bg"])
    paths["validation"] = val_path
    return paths


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="trend-runs")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="proportional shrink of task counts and epochs")
    parser.add_argument("--max-statements", type=int, default=20)
    parser.add_argument("--max-depth", type=int, default=4)
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()

    args.meta_tasks = max(200, int(50_000 * args.scale))
    args.test_tasks = 25
    args.eval_per_task = max(10, int(100 * args.scale))
    args.portfolio_examples = max(120, int(1000 * args.scale))
    meta_epochs = max(2, int(20 * args.scale))

    out = Path(args.out)
    paths = generate(out, args)
    report = {}

    # shared meta model
    meta_path = out / "meta-small.pt"
    base = RegimeConfig(
        regime="meta", n=5, model_size="small", lr=0.25, batch_size=16,
        meta_epochs=meta_epochs, meta_restarts=8, seed=0,
        meta_model_path=str(meta_path) if meta_path.exists() else None,
        save_meta_model_path=str(meta_path),
    )

    t0 = time.time()
    result = run_regime(
        base,
        {"train": paths["bg"], "validation": paths["validation"], "test": paths["test_n5"]},
        out / "meta_n5",
    )
    report["meta@n5"] = score(result.predictions_path, result.refs_path)

    plain5 = RegimeConfig(regime="plain", n=5, model_size="small",
                          lr=0.2, batch_size=5, plain_epochs=30, seed=0)
    result = run_regime(plain5, {"test": paths["test_n5"]}, out / "plain_n5")
    report["plain@n5"] = score(result.predictions_path, result.refs_path)
    report["trend_a_margin"] = report["meta@n5"] - report["plain@n5"]

    plain100 = RegimeConfig(regime="plain", n=100, model_size="small",
                            lr=0.2, batch_size=16, plain_epochs=30, seed=0)
    result = run_regime(plain100, {"test": paths["test_n100"]}, out / "plain_n100")
    report["plain@n100"] = score(result.predictions_path, result.refs_path)

    adapt100 = RegimeConfig(regime="plain_adapt", n=100, model_size="small",
                            lr=0.2, batch_size=16, plain_epochs=30, seed=0,
                            portfolio_models=3,
                            portfolio_examples=args.portfolio_examples)
    result = run_regime(adapt100, {"train": paths["portfolio"], "test": paths["test_n100"]},
                        out / "plain_adapt_n100")
    report["plain_adapt@n100"] = score(result.predictions_path, result.refs_path)
    report["trend_b_margin"] = report["plain_adapt@n100"] - report["plain@n100"]

    # (c) mixture vs no-mixture at matched steps, from the same meta init
    from induct.models import MetaInductionModel
    bg_tasks = read_dataset(paths["bg"])
    test_tasks = read_dataset(paths["test_n5"])
    steps = 60
    mixture_losses, plain_losses = [], []
    for task in test_tasks[:5]:
        demos = list(task.examples[:5])
        held_out = list(task.examples[5:15])
        for with_mixture in (True, False):
            model = MetaInductionModel("small")
            model.load_state_dict(torch.load(meta_path, weights_only=True))
            model, _ = adapt(
                model, demos,
                mixture_source=bg_tasks if with_mixture else None,
                mixture_ratio=0.10 if with_mixture else 1.0,
                k=4, settings=TrainSettings(lr=0.05, batch_size=10, seed=1), steps=steps,
            )
            loss = evaluate_adapt_held_out(model, demos, held_out, k=4)
            (mixture_losses if with_mixture else plain_losses).append(loss)
    report["mixture_held_out_loss"] = sum(mixture_losses) / len(mixture_losses)
    report["no_mixture_held_out_loss"] = sum(plain_losses) / len(plain_losses)

    # (d) a tenth of the background tasks, matched gradient steps
    from induct.regimes import build_meta_model

    small_bg = bg_tasks[: len(bg_tasks) // 10]
    small_config = RegimeConfig(
        regime="meta", n=5, model_size="small", lr=0.25, batch_size=16,
        meta_epochs=meta_epochs * 10, meta_restarts=8, seed=0,
    )
    model_small_bg, _ = build_meta_model(
        small_config, small_bg, read_dataset(paths["validation"])
    )
    torch.save(model_small_bg.state_dict(), out / "meta-small-bg.pt")
    fewer = RegimeConfig(regime="meta", n=5, model_size="small", seed=0,
                         meta_model_path=str(out / "meta-small-bg.pt"))
    result = run_regime(fewer, {"train": paths["bg"], "test": paths["test_n5"]},
                        out / "meta_n5_fewer_tasks")
    report["meta@n5_tenth_tasks"] = score(result.predictions_path, result.refs_path)

    report["runtime_seconds"] = round(time.time() - t0, 1)
    (out / "report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    print(json.dumps(report, indent=2))

    ok = (
        report["trend_a_margin"] >= 10.0
        and report["trend_b_margin"] >= 5.0
        and report["mixture_held_out_loss"] <= report["no_mixture_held_out_loss"]
        and report["meta@n5_tenth_tasks"] < report["meta@n5"]
    )
    print("TRENDS:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
