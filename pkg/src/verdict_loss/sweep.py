"""Grid sweeps over auxiliary weight and class-balancing beta."""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .data import Dataset
from .losses import LossKind, LossSpec
from .metrics import fever_score, format_percent, mcnemar
from .trainer import TrainConfig, train_best_of_n
from .weighting import training_weights

DEFAULT_LAMBDAS = (0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0)
DEFAULT_BETAS = (0.0, 0.9999, 0.99999, 0.999999)
KIND_ORDER = (LossKind.CE, LossKind.OVA, LossKind.SRN, LossKind.SR)

CSV_FIELDS = ("loss", "lambda", "weighting", "beta", "dev_la", "dev_fs", "delta_la", "delta_fs", "mcnemar_p", "best")


def _dedupe(values, name):
    out = []
    for v in values:
        if v in out:
            warnings.warn(f"duplicate {name} value {v!r} removed from grid", stacklevel=3)
        else:
            out.append(v)
    return tuple(out)


@dataclass
class SweepGrid:
    lambdas: tuple = DEFAULT_LAMBDAS
    betas: tuple = DEFAULT_BETAS
    kinds: tuple = KIND_ORDER

    def __post_init__(self):
        self.lambdas = _dedupe(tuple(float(v) for v in self.lambdas), "lambda")
        self.betas = _dedupe(tuple(float(v) for v in self.betas), "beta")
        self.kinds = _dedupe(tuple(LossKind(k) for k in self.kinds), "loss kind")
        if not self.lambdas or not self.betas or not self.kinds:
            raise ValueError("sweep grid lists must be non-empty")
        if any(v < 0 for v in self.lambdas):
            raise ValueError("lambda values must be >= 0")
        if any(not 0 <= v < 1 for v in self.betas):
            raise ValueError("beta values must lie in [0, 1)")

    def points(self) -> List[tuple]:
        """(kind, lambda, beta) triples, CE once per beta, plus the unweighted CE baseline."""
        pts = []
        for kind in self.kinds:
            for lam in (0.0,) if kind is LossKind.CE else self.lambdas:
                for beta in self.betas:
                    pts.append((kind, lam, beta))
        if (LossKind.CE, 0.0, 0.0) not in pts:
            pts.append((LossKind.CE, 0.0, 0.0))
        return sorted(pts, key=lambda p: (KIND_ORDER.index(p[0]), p[1], p[2]))


@dataclass
class ReportRow:
    kind: LossKind
    lam: float
    beta: float
    dev_la: float
    dev_fs: Optional[float]
    correct: np.ndarray = field(repr=False)
    delta_la: float = 0.0
    delta_fs: Optional[float] = None
    mcnemar_p: float = 1.0
    best: bool = False

    @property
    def weighting(self) -> bool:
        return self.beta > 0


def _run_point(args):
    kind, lam, beta, train_set, dev_set, base, n_runs, k = args
    weights = None if beta == 0 else tuple(training_weights(train_set.class_counts, beta))
    cfg = TrainConfig(LossSpec(kind, lam, weights), base.epochs, base.batch_size, base.learning_rate, base.seed, base.shuffle)
    (_, report), _ = train_best_of_n(train_set, dev_set, cfg, n_runs)
    records = dev_set.prediction_records(report.dev_predictions) if dev_set.has_evidence else None
    fs = fever_score(records, k) if records is not None else None
    return kind, lam, beta, report.dev_accuracy, fs, report.dev_predictions == dev_set.labels


def run_sweep(train_set: Dataset, dev_set: Dataset, grid: SweepGrid, base: TrainConfig, n_runs: int = 3, jobs: int = 1, k: int = 5) -> List[ReportRow]:
    """Train every grid point (best of ``n_runs``) and compare against unweighted CE."""
    tasks = [(kind, lam, beta, train_set, dev_set, base, n_runs, k) for kind, lam, beta in grid.points()]
    if jobs <= 1:
        results = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point, tasks))
    rows = [ReportRow(kind, lam, beta, la, fs, correct) for kind, lam, beta, la, fs, correct in results]
    baseline = next(r for r in rows if r.kind is LossKind.CE and r.beta == 0)
    for r in rows:
        r.delta_la = r.dev_la - baseline.dev_la
        r.delta_fs = None if r.dev_fs is None else r.dev_fs - baseline.dev_fs
        r.mcnemar_p = mcnemar(baseline.correct, r.correct).p_value
    for kind in grid.kinds:
        candidates = [r for r in rows if r.kind is kind]
        # highest LA, then smaller lambda, then smaller beta
        max(candidates, key=lambda r: (r.dev_la, -r.lam, -r.beta)).best = True
    return rows


def _signed(x: Optional[float]) -> str:
    if x is None:
        return ""
    s = format_percent(abs(x))
    return ("-" if x < 0 and s != "0.00" else "+") + s


def _fmt(x: float) -> str:
    return repr(float(x))


def rows_to_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in rows:
        writer.writerow(
            [
                r.kind.value,
                _fmt(r.lam),
                "yes" if r.weighting else "no",
                _fmt(r.beta),
                format_percent(r.dev_la),
                "" if r.dev_fs is None else format_percent(r.dev_fs),
                _signed(r.delta_la),
                _signed(r.delta_fs),
                f"{r.mcnemar_p:.6g}",
                "*" if r.best else "",
            ]
        )
    return buf.getvalue()


def render_rows(rows: Sequence[ReportRow]) -> str:
    """Aligned text table with deltas against the CE baseline; ``*`` marks significance, ``<`` the per-kind best."""
    header = ("Objective", "Weighting", "LA", "FS", "McNemar p", "")
    body = []
    for r in rows:
        name = r.kind.name if r.kind is LossKind.CE else f"{r.kind.name} (lambda={r.lam:g})"
        weighting = f"yes (beta={r.beta:g})" if r.weighting else "--"
        sig = "*" if r.mcnemar_p < 0.05 and not (r.kind is LossKind.CE and r.beta == 0) else ""
        la = f"{format_percent(r.dev_la)} ({_signed(r.delta_la)}){sig}"
        fs = "n/a" if r.dev_fs is None else f"{format_percent(r.dev_fs)} ({_signed(r.delta_fs)})"
        body.append((name, weighting, la, fs, f"{r.mcnemar_p:.4g}", "<" if r.best else ""))
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("-" * len(lines[0]))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in body]
    return "\n".join(lines)


def lambda_effect_table(rows: Sequence[ReportRow]) -> Optional[str]:
    """Tuned-lambda OVA against fixed lambda = 1 OVA, when the sweep covers both."""
    ova = [r for r in rows if r.kind is LossKind.OVA]
    if any(r.weighting for r in ova):
        ova = [r for r in ova if r.weighting]
    fixed = [r for r in ova if r.lam == 1.0]
    tuned = [r for r in ova if r.lam != 1.0]
    if not fixed or not tuned:
        return None
    key = lambda r: (r.dev_la, -r.lam, -r.beta)  # noqa: E731
    best_tuned, best_fixed = max(tuned, key=key), max(fixed, key=key)
    lines = ["Effect of tuning lambda (OVA)", f"{'Loss':<22}{'Weighting':<22}{'LA':>8}{'FS':>8}"]
    for r in (best_tuned, best_fixed):
        weighting = f"yes (beta={r.beta:g})" if r.weighting else "--"
        fs = "n/a" if r.dev_fs is None else format_percent(r.dev_fs)
        lines.append(f"{'OVA (lambda=' + format(r.lam, 'g') + ')':<22}{weighting:<22}{format_percent(r.dev_la):>8}{fs:>8}")
    return "\n".join(lines)
