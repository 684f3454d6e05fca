"""Command-line entry point.

Subcommands map one-to-one onto the experiment runners; every run reads a
single INI config file, applies optional profile/seed overrides, and
writes one CSV file.  Exit status is 0 on success and 1 when a result
invariant or configuration check fails.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import MaIsacError
from .experiments import (
    emit_correlation_map,
    optimize_ma_layout,
    run_convergence,
    run_mse_sweep,
    run_rate_vs_k,
    run_tradeoff,
    upa_dense_layout,
    upa_sparse_layout,
)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="path to the INI experiment file")
    parser.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    parser.add_argument(
        "--profile", choices=("desk", "paper"), default=None, help="scale profile override"
    )
    parser.add_argument("--out", default=None, help="output CSV path override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ma-isac",
        description="Movable-antenna array design experiments for joint "
        "communication and angle sensing",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("tradeoff", "rate versus sensing-threshold sweep"),
        ("mse", "estimator MSE versus probing power sweep"),
        ("rate-vs-k", "rate versus number of users sweep"),
        ("correlation", "steering-correlation map for one scheme"),
        ("convergence", "optimizer objective traces"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _add_common(cmd)
        if name == "correlation":
            cmd.add_argument(
                "--scheme",
                choices=("ma-statistical", "upa-dense", "upa-sparse"),
                default="ma-statistical",
            )
            cmd.add_argument("--zone-index", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(
            args.config, profile=args.profile, seed=args.seed, output_path=args.out
        )
        if args.command == "tradeoff":
            rows = run_tradeoff(config)
        elif args.command == "mse":
            rows = run_mse_sweep(config)
        elif args.command == "rate-vs-k":
            rows = run_rate_vs_k(config)
        elif args.command == "convergence":
            rows = run_convergence(config)
        else:
            if args.scheme == "upa-dense":
                layout = upa_dense_layout(config)
            elif args.scheme == "upa-sparse":
                layout = upa_sparse_layout(config)
            else:
                layout, _ = optimize_ma_layout(config)
            emit_correlation_map(config, layout, reference_zone_index=args.zone_index)
            rows = []
        print(f"wrote {config.output_path} ({len(rows)} rows)" if rows else f"wrote {config.output_path}")
        return 0
    except MaIsacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
