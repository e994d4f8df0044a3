"""verdict-loss command line: train, evaluate, sweep, gradcheck, mcnemar.

Exit codes: 0 success, 1 check failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .data import DEFAULT_SCALE, DEFAULT_SEED, DataFormatError, SyntheticConfig, generate_synthetic, load_jsonl, save_predictions
from .gradcheck import REL_TOL, random_cases
from .losses import InvalidInputError, LossKind, LossSpec, VerdictLabel
from .metrics import evaluate, format_percent, mcnemar
from .sweep import DEFAULT_BETAS, DEFAULT_LAMBDAS, SweepGrid, lambda_effect_table, render_rows, rows_to_csv, run_sweep
from .trainer import TrainConfig, TrainingError, load_checkpoint, predict, save_checkpoint, train_best_of_n
from .weighting import training_weights

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEED_ENV = "VERDICT_LOSS_SEED"


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _beta(text):
    value = float(text)
    if not 0 <= value < 1:
        raise argparse.ArgumentTypeError(f"beta must lie in [0, 1), got {text}")
    return value


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def beta_from_nines(nines: int) -> float:
    """6 -> 0.999999."""
    if nines < 0:
        raise ValueError("number of nines must be >= 0")
    return 0.0 if nines == 0 else float(f"0.{'9' * nines}")


def _default_seed():
    env = os.environ.get(SEED_ENV)
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _add_data_flags(p):
    p.add_argument("--synthetic", action="store_true", help="use the seeded synthetic dataset (default without --dataset)")
    p.add_argument("--scale", type=_positive_float, default=DEFAULT_SCALE, help="synthetic size relative to FEVER")
    p.add_argument("--dataset", type=Path, help="training JSONL")
    p.add_argument("--dev", type=Path, help="dev JSONL")
    p.add_argument("--seed", type=int, default=None, help=f"seed (falls back to ${SEED_ENV}, then {DEFAULT_SEED})")


def _add_train_flags(p):
    p.add_argument("--epochs", type=_positive_int, default=20)
    p.add_argument("--lr", type=_positive_float, default=0.1)
    p.add_argument("--batch-size", type=_positive_int, default=64)
    p.add_argument("--runs", type=_positive_int, default=3, help="train this many seeds and keep the best on dev")
    p.add_argument("--k", type=_positive_int, default=5, help="evidence cutoff for the FEVER score")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verdict-loss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="best-of-n training; writes checkpoint and report")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--loss", choices=[k.value for k in LossKind], default="ce")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.0)
    p.add_argument("--weighting", action="store_true", help="class-balanced weights from training counts")
    beta = p.add_mutually_exclusive_group()
    beta.add_argument("--beta", type=_beta, default=None)
    beta.add_argument("--beta-nines", type=int, default=None, help="beta as a count of nines, e.g. 6 -> 0.999999")
    p.add_argument("--out", type=Path, default=Path("verdict-run"), help="output directory")

    p = sub.add_parser("evaluate", help="LA, FEVER score and confusion matrix")
    p.add_argument("--predictions", type=Path, help="prediction JSONL")
    p.add_argument("--checkpoint", type=Path, help="checkpoint to predict with (needs --dev or --synthetic)")
    p.add_argument("--dev", type=Path)
    p.add_argument("--synthetic", action="store_true")
    p.add_argument("--scale", type=_positive_float, default=DEFAULT_SCALE)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fever-score", action="store_true", help="require the FEVER score (error when evidence is missing)")
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--csv", type=Path)

    p = sub.add_parser("sweep", help="lambda/beta grid over all objectives")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--lambdas", type=_float_list, default=list(DEFAULT_LAMBDAS))
    p.add_argument("--betas", type=_float_list, default=list(DEFAULT_BETAS))
    p.add_argument("--kinds", type=lambda s: [LossKind(v) for v in s.split(",")], default=None)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--csv", type=Path)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients")
    p.add_argument("--samples", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--inject-bug", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("mcnemar", help="paired significance test between two prediction files")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--method", choices=["exact", "chi2"], default=None)
    return parser


def _load_splits(args):
    seed = args.seed if args.seed is not None else _default_seed()
    if args.dataset is not None:
        if args.dev is None:
            raise UsageError("--dataset requires --dev")
        train_set, dev_set = load_jsonl(args.dataset, "dataset"), load_jsonl(args.dev, "dataset")
        if len(train_set) == 0 or len(dev_set) == 0:
            raise UsageError("training and dev files must be non-empty")
        dev_set.split = "dev"
        return train_set, dev_set, seed
    train_set, dev_set = generate_synthetic(SyntheticConfig.at_scale(args.scale, seed=seed))
    return train_set, dev_set, seed


def _report_line(la, fs):
    text = f"LA={format_percent(la)}"
    if fs is not None:
        text = f"FS={format_percent(fs)}, " + text
    return text


def cmd_train(args) -> int:
    if args.loss == "ce" and args.lam != 0:
        print("warning: --lambda is ignored for the ce objective", file=sys.stderr)
    if (args.beta is not None or args.beta_nines is not None) and not args.weighting:
        raise UsageError("--beta/--beta-nines require --weighting")
    train_set, dev_set, seed = _load_splits(args)
    weights = None
    beta = None
    if args.weighting:
        beta = args.beta if args.beta is not None else beta_from_nines(args.beta_nines if args.beta_nines is not None else 6)
        weights = tuple(training_weights(np.maximum(train_set.class_counts, 1), beta))
    config = TrainConfig(LossSpec(LossKind(args.loss), args.lam, weights), args.epochs, args.batch_size, args.lr, seed)
    (model, report), runs = train_best_of_n(train_set, dev_set, config, args.runs)

    args.out.mkdir(parents=True, exist_ok=True)
    best_config = TrainConfig(config.loss, config.epochs, config.batch_size, config.learning_rate, report.seed)
    save_checkpoint(model, best_config, args.out / "checkpoint.json")
    records = dev_set.prediction_records(report.dev_predictions)
    save_predictions(records, args.out / "dev_predictions.jsonl")
    fs = evaluate(records, args.k, dev_set.has_evidence).fever_score
    summary = {
        "loss": args.loss,
        "lambda": config.loss.aux_weight,
        "weighting": args.weighting,
        "beta": beta,
        "selected_seed": report.seed,
        "dev_la": report.dev_accuracy,
        "dev_fs": fs,
        "runs": [{"seed": r.seed, "dev_la": r.dev_accuracy, "epoch_losses": r.epoch_losses} for _, r in runs],
    }
    with open(args.out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for i, (_, r) in enumerate(runs, start=1):
        print(f"run {i} (seed {r.seed}): dev LA={format_percent(r.dev_accuracy)}, final loss={r.epoch_losses[-1]:.6f}")
    print(f"selected seed {report.seed}: {_report_line(report.dev_accuracy, fs)}")
    print(f"wrote {args.out / 'checkpoint.json'}")
    return EXIT_OK


def _write_eval_csv(path, report):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerow(["label_accuracy", format_percent(report.label_accuracy)])
        w.writerow(["fever_score", "" if report.fever_score is None else format_percent(report.fever_score)])
        w.writerow([])
        w.writerow(["gold", "pred_S", "pred_R", "pred_N"])
        for name, row in zip("SRN", report.confusion.counts):
            w.writerow([name] + [int(v) for v in row])
        w.writerow(["Total"] + [int(v) for v in report.confusion.prediction_totals])


def cmd_evaluate(args) -> int:
    if args.predictions is not None:
        records = load_jsonl(args.predictions, "predictions")
    elif args.checkpoint is not None:
        model, _ = load_checkpoint(args.checkpoint)
        if args.dev is not None:
            dev_set = load_jsonl(args.dev, "dataset")
        else:
            seed = args.seed if args.seed is not None else _default_seed()
            _, dev_set = generate_synthetic(SyntheticConfig.at_scale(args.scale, seed=seed))
        if len(dev_set) == 0:
            raise UsageError("evaluation set is empty")
        records = dev_set.prediction_records(predict(model, dev_set.features))
    else:
        raise UsageError("evaluate needs --predictions or --checkpoint")
    if not records:
        raise UsageError("no predictions to evaluate")

    missing = [r.claim_id for r in records if r.gold != VerdictLabel.N and not r.gold_evidence_sets]
    if args.fever_score and missing:
        raise UsageError(f"--fever-score requested but {len(missing)} S/R claims lack gold evidence (first: {missing[0]})")
    report = evaluate(records, args.k, with_fever_score=not missing)
    if report.fever_score is not None:
        print(f"FS={format_percent(report.fever_score)}")
    print(f"LA={format_percent(report.label_accuracy)}")
    print()
    print(report.confusion.render())
    if args.csv is not None:
        _write_eval_csv(args.csv, report)
    return EXIT_OK


def cmd_sweep(args) -> int:
    train_set, dev_set, seed = _load_splits(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        grid = SweepGrid(args.lambdas, args.betas, args.kinds or SweepGrid().kinds)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    base = TrainConfig(LossSpec(), args.epochs, args.batch_size, args.lr, seed)
    rows = run_sweep(train_set, dev_set, grid, base, args.runs, args.jobs, args.k)
    print(render_rows(rows))
    table = lambda_effect_table(rows)
    if table:
        print()
        print(table)
    text = rows_to_csv(rows)
    if args.csv is not None:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    report = random_cases(args.samples, seed, inject_bug=args.inject_bug)
    by_kind = report.max_error_by_kind()
    for kind in LossKind:
        if kind in by_kind:
            print(f"{kind.value:<4} max rel err {by_kind[kind]:.3e}")
    worst = report.worst()
    if report.passed:
        print(f"ok: {len(report.cases)} cases within {REL_TOL:g}")
        return EXIT_OK
    failed = sum(not c.passed for c in report.cases)
    print(f"FAILED: {failed} of {len(report.cases)} cases exceed {REL_TOL:g}")
    print(f"worst: {worst.describe()}")
    return EXIT_FAIL


def cmd_mcnemar(args) -> int:
    a = {r.claim_id: r for r in load_jsonl(args.a, "predictions")}
    b = {r.claim_id: r for r in load_jsonl(args.b, "predictions")}
    if not a or not b:
        raise UsageError("prediction files must be non-empty")
    if a.keys() != b.keys():
        diff = sorted(a.keys() ^ b.keys())
        raise UsageError(f"claim_id sets differ ({len(diff)} ids): {', '.join(map(str, diff[:10]))}")
    ids = sorted(a)
    result = mcnemar([a[i].correct for i in ids], [b[i].correct for i in ids], args.method)
    print(f"b (A right, B wrong) = {result.b}")
    print(f"c (A wrong, B right) = {result.c}")
    print(f"method = {result.method}")
    print(f"statistic = {'n/a' if result.statistic is None else f'{result.statistic:.6g}'}")
    print(f"p-value = {result.p_value:.6g}{' *' if result.significant else ''}")
    print("significant at p < 0.05" if result.significant else "not significant at p < 0.05")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
    "mcnemar": cmd_mcnemar,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DataFormatError, InvalidInputError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
