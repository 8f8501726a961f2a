"""Command line: generate / train / eval / report.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .generator import GeneratorParams, generate_dataset
from .nn.checkpoint import CheckpointError
from .pgio import DatasetError, FormatError, load_dataset

log = logging.getLogger("paritygnn")

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="paritygnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="generate and solve random parity games")
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--min-n", type=int, default=10)
    gen.add_argument("--max-n", type=int, default=200)
    gen.add_argument("--split", type=float, default=0.7, help="fraction of games in the train split")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="dataset directory")
    gen.add_argument("--jobs", type=int, default=1)

    defaults = ex.ExperimentConfig()
    tr = sub.add_parser("train", help="train a GCN or GAT model on a dataset's train split")
    tr.add_argument("--dataset", required=True)
    tr.add_argument("--variant", choices=("gcn", "gat"), default=defaults.variant)
    tr.add_argument("--layers", type=int, default=defaults.message_layers)
    tr.add_argument("--width", type=int, default=defaults.hidden_width)
    tr.add_argument("--head-width", type=int, default=defaults.head_width)
    tr.add_argument("--heads", type=int, default=defaults.heads)
    tr.add_argument("--dropout", type=float, default=defaults.dropout)
    tr.add_argument("--normalize-colors", action="store_true")
    tr.add_argument("--lr", type=float, default=defaults.lr)
    tr.add_argument("--epochs", type=int, default=defaults.epochs)
    tr.add_argument("--games-per-step", type=int, default=defaults.games_per_step)
    tr.add_argument("--seed", type=int, default=defaults.seed)
    tr.add_argument("--checkpoint", required=True, help="output checkpoint path")
    tr.add_argument("--out", help="loss-curve CSV (default: <checkpoint>.loss.csv)")

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--split", choices=("train", "test", "all"), default="all")
    ev.add_argument("--out", required=True, help="report JSON path")

    rep = sub.add_parser("report", help="render the results table, CSV and scatter data from reports")
    rep.add_argument("reports", nargs="+")
    rep.add_argument("--out", required=True, help="output directory")
    rep.add_argument("--plot", action="store_true", help="also write an SVG scatter per report")
    return parser


def cmd_generate(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    if not 0 < args.split < 1:
        raise UsageError("--split must lie strictly between 0 and 1")
    try:
        params = GeneratorParams(args.min_n, args.max_n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    manifest = generate_dataset(args.count, params, args.seed, args.split, Path(args.out), args.jobs)
    n_train = len(manifest.split("train"))
    print(
        f"wrote {len(manifest.records)} games to {args.out}: "
        f"{n_train} train / {len(manifest.records) - n_train} test (seed {args.seed})"
    )
    return 0


def cmd_train(args) -> int:
    config = ex.ExperimentConfig(
        dataset=str(args.dataset),
        variant=args.variant,
        message_layers=args.layers,
        hidden_width=args.width,
        head_width=args.head_width,
        heads=args.heads,
        dropout=args.dropout,
        normalize_colors=args.normalize_colors,
        lr=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        games_per_step=args.games_per_step,
    )
    try:
        config.model_config()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.epochs < 1 or args.games_per_step < 1:
        raise UsageError("--epochs and --games-per-step must be at least 1")
    manifest = load_dataset(args.dataset)
    pairs = manifest.load_pairs("train")
    if not pairs:
        raise DatasetError("dataset has no train records")

    def progress(step, loss):
        if step % 100 == 0:
            log.info("game %d loss %.4f", step, loss)

    result = ex.train(pairs, config, progress=progress)
    result.save(args.checkpoint)
    curve = Path(args.out) if args.out else Path(f"{args.checkpoint}.loss.csv")
    curve.write_text("game,loss\n" + "".join(f"{i},{l!r}\n" for i, l in enumerate(result.losses, 1)))
    first = result.losses[: min(25, len(result.losses))]
    last = result.losses[-len(first):]
    print(
        f"trained {config.variant} on {len(pairs)} games x {config.epochs} epochs "
        f"in {result.seconds:.1f}s; mean loss first {len(first)}: {sum(first) / len(first):.4f}, "
        f"last {len(last)}: {sum(last) / len(last):.4f}"
    )
    return 0


def cmd_eval(args) -> int:
    manifest = load_dataset(args.dataset)
    splits = ("train", "test") if args.split == "all" else (args.split,)
    report = ex.evaluate_checkpoint(args.checkpoint, manifest, splits)
    report.save(args.out)
    for split in splits:
        m = getattr(report, split)
        print(
            f"{report.label} {split}: accuracy {m.vertex_accuracy:.4f} "
            f"(majority {m.majority_baseline:.4f}), n_err 0/1/>=2: "
            f"{m.games_err0}/{m.games_err1}/{m.games_err2plus}"
        )
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = [ex.EvalReport.load(p) for p in args.reports]
    table = ex.render_table(reports)
    (out / "table.txt").write_text(table)
    print(table, end="")
    for i, report in enumerate(reports):
        metrics = report.test or report.train
        stem = f"{report.label.lower()}_{i}" if len(reports) > 1 else report.label.lower()
        (out / f"{stem}_misclassified.csv").write_text(ex.misclassification_csv(metrics))
        if args.plot:
            ex.scatter_plot(metrics, out / f"{stem}_misclassified.svg", f"Misclassified vertices ({report.label})")
    return 0


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "eval": cmd_eval, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"paritygnn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, FormatError, CheckpointError, OSError, KeyError, ValueError) as exc:
        print(f"paritygnn {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
