"""Command-line driver.

    eilearn run --data data/diabetes.csv --label class --holdout 400 \\
        --phases 4 --train-frac 0.66 --clusters 3 --seed 7 --out out/
    eilearn run @configs/diabetes.flags --seed 3
    eilearn validate-config @configs/krkp.flags

Arguments starting with ``@`` are read from a flags file (shell-style
tokens, ``#`` comments allowed).
"""

from __future__ import annotations

import argparse
import logging
import os
import shlex
import sys
from pathlib import Path

from .clustering import EM, KMEANS
from .data import DataError, SplitPlan, load_csv
from .engine import ExperimentConfig, ExperimentError, run_experiment
from .report import render_csv, render_json, render_markdown

log = logging.getLogger("eilearn")


class _Parser(argparse.ArgumentParser):
    def convert_arg_line_to_args(self, arg_line):
        return shlex.split(arg_line, comments=True)


def _positive(name):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer")
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be ≥ 1")
        return v
    return conv


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("train-frac must be a number")
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("train-frac must lie strictly between 0 and 1")
    return v


def _kind(text):
    name, sep, kind = text.partition("=")
    if not sep or kind not in ("numeric", "categorical"):
        raise argparse.ArgumentTypeError("--kind expects NAME=numeric or NAME=categorical")
    return name, kind


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--label", required=True, help="name of the class column")
    p.add_argument("--holdout", required=True, type=_positive("holdout"),
                   help="instances assigned to the train/test pool T; the rest is V")
    p.add_argument("--phases", required=True, type=_positive("phases"))
    p.add_argument("--train-frac", required=True, type=_fraction)
    p.add_argument("--clusters", required=True, type=_positive("clusters"))
    p.add_argument("--seed", required=True, type=int, help="master seed")
    p.add_argument("--clusterer", choices=["em", "kmeans"], default="em")
    p.add_argument("--shuffle-seed", type=int, default=None,
                   help="shuffle D before splitting (default: keep file order)")
    p.add_argument("--max-iters", type=_positive("max-iters"), default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--min-cluster-size", type=_positive("min-cluster-size"), default=5)
    p.add_argument("--min-leaf", type=_positive("min-leaf"), default=2)
    p.add_argument("--max-depth", type=_positive("max-depth"), default=None)
    p.add_argument("--min-gain", type=float, default=1e-9)
    p.add_argument("--kind", type=_kind, action="append", default=[],
                   metavar="NAME=KIND", help="force a column to numeric or categorical")
    p.add_argument("--out", default=os.environ.get("EILEARN_OUT"),
                   help="output directory (default: $EILEARN_OUT)")
    p.add_argument("--format", choices=["md", "json", "csv", "all"], default="all")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eilearn", fromfile_prefix_chars="@",
                     description="Incremental learning with a clustered ensemble of trees.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run an experiment and write its reports"),
        ("validate-config", "check flags and show planned split sizes without running"),
    ):
        p = sub.add_parser(name, help=help_text, fromfile_prefix_chars="@")
        p.convert_arg_line_to_args = parser.convert_arg_line_to_args
        _add_experiment_flags(p)
    return parser


def config_from_args(args) -> ExperimentConfig:
    return ExperimentConfig(
        data_path=args.data,
        label=args.label,
        holdout_size=args.holdout,
        phases=args.phases,
        train_fraction=args.train_frac,
        shuffle_seed=args.shuffle_seed,
        clusterer=EM if args.clusterer == "em" else KMEANS,
        clusters=args.clusters,
        max_iters=args.max_iters,
        tol=args.tol,
        min_cluster_size=args.min_cluster_size,
        min_leaf=args.min_leaf,
        max_depth=args.max_depth,
        min_gain=args.min_gain,
        master_seed=args.seed,
        kind_overrides=tuple(args.kind),
    )


def _describe_split(sizes: dict) -> str:
    parts = []
    for s in sizes["phases"]:
        text = f"per-phase {s['T_i']} = {s['P_i']} train + {s['Q_i']} test"
        if text not in parts:
            parts.append(text)
    return f"T={sizes['T']} V={sizes['V']}; " + "; ".join(parts)


def validate_config(args) -> int:
    cfg = config_from_args(args)
    d = load_csv(cfg.data_path, cfg.label, dict(cfg.kind_overrides) or None)
    plan = SplitPlan(cfg.holdout_size, cfg.phases, cfg.train_fraction, cfg.shuffle_seed)
    sizes = plan.sizes(len(d))
    schema = d.schema
    print(f"dataset: {len(d)} instances, {len(schema.attributes)} attributes, "
          f"classes {list(schema.classes)}")
    for a in schema.attributes:
        kind = "numeric" if a.is_numeric else f"categorical{list(a.categories)}"
        print(f"  {a.name}: {kind}")
    print(_describe_split(sizes))
    return 0


def run(args) -> int:
    cfg = config_from_args(args)
    report = run_experiment(cfg)
    md = render_markdown(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        renderers = {"md": ("report.md", render_markdown),
                     "json": ("report.json", render_json),
                     "csv": ("report.csv", render_csv)}
        chosen = renderers if args.format == "all" else {args.format: renderers[args.format]}
        for fname, fn in chosen.values():
            (out / fname).write_text(fn(report), encoding="utf-8")
    sys.stdout.write(md)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return run(args)
        return validate_config(args)
    except (DataError, ExperimentError, ValueError, OSError) as e:
        print(f"eilearn: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
