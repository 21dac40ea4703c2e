"""`induct` command-line entry point."""

from __future__ import annotations

import argparse
import sys

from .regimes import REGIMES, RegimeConfig, run_regime


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="induct", description="Karel induction trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one induction regime end to end")
    p.add_argument("--regime", choices=REGIMES, required=True)
    p.add_argument("--n", type=int, required=True, help="demo examples per test task")
    p.add_argument("--config", required=True, help="JSON config with dataset paths and hyperparameters")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    import json
    from pathlib import Path

    payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
    datasets = payload.get("datasets")
    if not datasets or "test" not in datasets:
        print("error: config must name datasets (at least 'test')", file=sys.stderr)
        return 2
    config = RegimeConfig.from_json(args.config, regime=args.regime, n=args.n)
    result = run_regime(config, datasets, args.out)
    print(f"predictions: {result.predictions_path}")
    print(f"refs: {result.refs_path}")
    print(f"curves: {result.curves_path}")
    print(f"score with: karel eval --pred {result.predictions_path} --data {result.refs_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
