"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or data error.
Every subcommand writes its resolved arguments to ``run.json`` in the output
directory before doing any work.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import baseline, data, symmetry, train
from .data import LabeledDataset
from .fileio import atomic_write_text
from .qnn import ArchitectureSpec

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad input detected after argument parsing; maps to exit code 2."""


def _write_run_config(out: Path, args: argparse.Namespace) -> None:
    out.mkdir(parents=True, exist_ok=True)
    cfg = {k: (str(v) if isinstance(v, Path) else v)
           for k, v in vars(args).items() if k != "func"}
    atomic_write_text(out / "run.json", json.dumps(cfg, indent=2, sort_keys=True) + "\n")


def _counts(ds: LabeledDataset) -> dict:
    pos = int((ds.labels == 1).sum())
    return {"total": len(ds), "positive": pos, "negative": len(ds) - pos}


# --- prepare-data -------------------------------------------------------------


def _split(ds: LabeledDataset, fraction: float) -> tuple[LabeledDataset, LabeledDataset]:
    cut = int(round(fraction * len(ds)))
    return (LabeledDataset(ds.patterns[:cut], ds.labels[:cut], "train"),
            LabeledDataset(ds.patterns[cut:], ds.labels[cut:], "test"))


def cmd_prepare_data(args) -> int:
    out = Path(args.out)
    _write_run_config(out, args)
    if args.synthetic:
        full = data.synthetic_dataset(args.n, args.size, args.rule, args.seed)
        train_set, test_set = _split(full, args.train_fraction)
    else:
        if args.mnist_subset:
            mnist_dir = data.export_mnist_subset(out / "mnist-subset")
        else:
            mnist_dir = data.find_mnist(args.mnist_dir)
        if mnist_dir is None:
            raise UsageError(
                "MNIST files not found; pass --mnist-dir, set "
                f"{data.MNIST_ENV}, or use --mnist-subset / --synthetic"
            )
        pos, neg = args.digits
        kw = dict(digit_pos=pos, digit_neg=neg, size=tuple(args.grid), unique=args.unique)
        train_set = data.build_digit_task(data.mnist_split(mnist_dir, "train"), **kw)
        test_set = data.build_digit_task(data.mnist_split(mnist_dir, "test"), **kw)

    sets = {
        "train": train_set,
        "test": test_set,
        "test_negated": test_set.negated(),
        "drawback_train": data.build_drawback_task(train_set),
        "drawback_test": data.build_drawback_task(test_set),
    }
    for name, ds in sets.items():
        data.save_csv(ds, out / f"{name}.csv")
    counts = {name: _counts(ds) for name, ds in sets.items()}
    atomic_write_text(out / "counts.json", json.dumps(counts, indent=2) + "\n")
    for name, c in counts.items():
        print(f"{name:<15} {c['total']:>6}  (+1: {c['positive']}, -1: {c['negative']})")
    return EXIT_OK


# --- train --------------------------------------------------------------------


def _load_task(data_dir: Path, task: str) -> tuple[LabeledDataset, LabeledDataset]:
    prefix = "" if task == "digits" else "drawback_"
    return (data.load_csv(data_dir / f"{prefix}train.csv"),
            data.load_csv(data_dir / f"{prefix}test.csv"))


def _train_config(args) -> train.TrainConfig:
    return train.TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        shots=args.shots,
        patience=args.patience or None,
        init_scale=args.init_scale,
        method=args.method,
    )


def cmd_train(args) -> int:
    out = Path(args.out)
    _write_run_config(out, args)
    train_set, test_set = _load_task(Path(args.data), args.task)
    if args.limit:
        train_set = train_set.take(args.limit)
    config = _train_config(args)

    if args.model == "mlp":
        model = baseline.init_mlp(train_set.width, args.hidden, args.seed)
        model, history = baseline.mlp_train(model, train_set, config, test_set)
        best = max(history, key=lambda h: (h.test_acc, -h.epoch)) if config.patience else history[-1]
        baseline.save_mlp(out / "checkpoint.json", model, config, best.epoch, best)
    else:
        try:
            arch = ArchitectureSpec.parse(args.arch, train_set.width)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        model = train.init_model(arch, seed=args.seed, scale=args.init_scale,
                                 measurement=args.measurement)
        result = train.train(model, train_set, config, test_set)
        history = result.history
        best = history[result.best_epoch]
        train.save_checkpoint(out / "checkpoint.json", result.model, config, best.epoch, best)

    train.write_metrics(out / "metrics.csv", history)
    print(f"{'epoch':>5} {'loss':>10} {'train':>7} {'test':>7} {'negated':>7}")
    for h in history:
        print(f"{h.epoch:>5} {h.train_loss:>10.5f} {h.train_acc:>7.4f} "
              f"{h.test_acc:>7.4f} {h.test_acc_negated:>7.4f}")
    print(f"best epoch {best.epoch}: test {best.test_acc:.4f}, negated {best.test_acc_negated:.4f}")
    return EXIT_OK


# --- eval ---------------------------------------------------------------------


def _load_any(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("model_kind") == "mlp":
        return "mlp", baseline.load_mlp(path)[0]
    return "qnn", train.load_checkpoint(path)[0]


def _check_width(kind, model, ds: LabeledDataset) -> None:
    width = model.n_in if kind == "mlp" else model.n_data
    if ds.width != width:
        raise UsageError(f"dataset width {ds.width} does not match model width {width}")


def cmd_eval(args) -> int:
    out = Path(args.out)
    _write_run_config(out, args)
    kind, model = _load_any(args.checkpoint)
    ds = data.load_csv(args.dataset)
    _check_width(kind, model, ds)
    if kind == "mlp":
        result = {"accuracy": baseline.mlp_evaluate(model, ds),
                  "accuracy_negated": baseline.mlp_evaluate(model, ds.negated())}
    else:
        stats = symmetry.logit_pair_stats(model, ds, args.method)
        result = {"accuracy": train.evaluate(model, ds, args.method),
                  "accuracy_negated": train.evaluate(model, ds.negated(), args.method),
                  "logit_pair_stats": vars(stats)}
    result.update(model_kind=kind, n_examples=len(ds))
    atomic_write_text(out / "eval.json", json.dumps(result, indent=2) + "\n")
    print(json.dumps(result, indent=2))
    return EXIT_OK


# --- verify -------------------------------------------------------------------


def cmd_verify(args) -> int:
    out = Path(args.out)
    _write_run_config(out, args)
    if args.checkpoint:
        model, _ = train.load_checkpoint(args.checkpoint)
        reports = symmetry.check_model(model, args.trials, args.seed, args.tol)
    elif args.arch:
        try:
            arch = ArchitectureSpec.parse(args.arch, args.n)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        claim = symmetry.readout_claim(arch, args.measurement)
        reports = [symmetry.check_claim(arch, args.n, args.measurement, claim, "readout",
                                        args.trials, args.seed, args.tol, args.method)]
    else:
        reports = symmetry.full_suite(args.n, args.trials, args.seed, args.tol, args.method)

    symmetry.write_report(out / "report.json", reports)
    print(symmetry.format_table(reports))
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"FAILED: {r.architecture} {r.target} {r.measurement} {r.claim} "
              f"(max deviation {r.max_deviation:.3e} > {r.tolerance:g})", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# --- features -----------------------------------------------------------------


def cmd_features(args) -> int:
    out = Path(args.out)
    _write_run_config(out, args)
    model, _ = train.load_checkpoint(args.checkpoint)
    ds = data.load_csv(args.dataset)
    _check_width("qnn", model, ds)
    if args.negated:
        ds = ds.negated()
    feats = train.batch_features(model, ds.patterns, args.method)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bits", "label"] + [f"g_{k}" for k in range(1, model.n_data + 1)])
    for bits, lab, g in zip(ds.patterns, ds.labels, feats):
        writer.writerow(["".join(map(str, bits)), int(lab)] + [repr(float(v)) for v in g])
    atomic_write_text(out / "features.csv", buf.getvalue())

    stats = symmetry.feature_pair_stats(model, ds, args.method)
    atomic_write_text(out / "pair_stats.json", json.dumps(vars(stats), indent=2) + "\n")
    print(json.dumps(vars(stats), indent=2))
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="negsym",
        description="Simulate, train and check negational symmetry of XX/ZZ quantum neural networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-data", help="build train/test/negated/drawback CSV caches")
    p.add_argument("--out", required=True, type=Path)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--mnist-dir", type=Path, help=f"MNIST IDX directory (default ${data.MNIST_ENV})")
    src.add_argument("--mnist-subset", action="store_true",
                     help="use the 5000-image MNIST sample bundled with mlxtend")
    src.add_argument("--synthetic", action="store_true")
    p.add_argument("--digits", nargs=2, type=int, default=[3, 6], metavar=("POS", "NEG"))
    p.add_argument("--grid", nargs=2, type=int, default=[4, 4], metavar=("W", "H"))
    p.add_argument("--unique", action="store_true", help="collapse repeated patterns")
    p.add_argument("--n", type=int, default=4, help="synthetic pattern width")
    p.add_argument("--size", type=int, default=200, help="synthetic example count")
    p.add_argument("--rule", choices=data.SYNTHETIC_RULES, default="parity")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prepare_data)

    p = sub.add_parser("train", help="train a QNN (--arch) or the MLP baseline (--model mlp)")
    p.add_argument("--data", required=True, type=Path, help="directory from prepare-data")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--model", choices=["qnn", "mlp"], default="qnn")
    p.add_argument("--arch", default="XX-ZZ")
    p.add_argument("--measurement", choices=["X", "Y", "Z"], default="Z")
    p.add_argument("--hidden", type=int, default=2)
    p.add_argument("--task", choices=["digits", "drawback"], default="digits")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--patience", type=int, default=0, help="early-stop patience (0 disables)")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--init-scale", type=float, default=0.1)
    p.add_argument("--limit", type=int, default=0, help="use only the first LIMIT training examples")
    p.add_argument("--method", choices=train.METHODS, default="branch")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy on a dataset and on its negation")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--method", choices=train.METHODS, default="branch")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run the symmetry grids and Bell checks")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--arch", help="check a single architecture instead of the full grid")
    p.add_argument("--measurement", choices=["X", "Y", "Z"], default="Z")
    p.add_argument("--checkpoint", type=Path, help="check a trained model on random patterns")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--tol", type=float, default=symmetry.DEFAULT_TOL)
    p.add_argument("--method", choices=symmetry.EVAL_METHODS, default="dense")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("features", help="export data-qubit features and pair statistics")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--negated", action="store_true", help="negate every pattern first")
    p.add_argument("--method", choices=train.METHODS, default="branch")
    p.set_defaults(func=cmd_features)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, data.DataError, data.IdxFormatError, FileNotFoundError, ValueError) as exc:
        print(f"negsym {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
