"""Label accuracy, FEVER score, confusion matrices and McNemar's test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .losses import NUM_CLASSES, InvalidInputError, VerdictLabel

DEFAULT_EVIDENCE_K = 5
EXACT_MCNEMAR_MAX_DISCORDANT = 25


class EvidenceItem(NamedTuple):
    page: str
    sentence_index: int


@dataclass(frozen=True)
class PredictionRecord:
    claim_id: int
    gold: VerdictLabel
    predicted: VerdictLabel
    gold_evidence_sets: tuple = ()
    retrieved_evidence: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gold", VerdictLabel(self.gold))
        object.__setattr__(self, "predicted", VerdictLabel(self.predicted))
        sets = tuple(frozenset(EvidenceItem(*item) for item in s) for s in self.gold_evidence_sets)
        retrieved = tuple(EvidenceItem(*item) for item in self.retrieved_evidence)
        for item in [i for s in sets for i in s] + list(retrieved):
            if not item.page:
                raise InvalidInputError(f"claim {self.claim_id}: evidence page must be non-empty")
            if item.sentence_index < 0:
                raise InvalidInputError(f"claim {self.claim_id}: negative sentence index")
        if len(set(retrieved)) != len(retrieved):
            raise InvalidInputError(f"claim {self.claim_id}: duplicate retrieved evidence")
        object.__setattr__(self, "gold_evidence_sets", sets)
        object.__setattr__(self, "retrieved_evidence", retrieved)

    @property
    def correct(self) -> bool:
        return self.gold == self.predicted


@dataclass
class ConfusionMatrix:
    """Counts indexed ``[gold][predicted]``. Matrices add elementwise."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64))

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (NUM_CLASSES, NUM_CLASSES) or np.any(self.counts < 0):
            raise InvalidInputError("confusion matrix must be 3x3 with non-negative counts")

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def prediction_totals(self) -> np.ndarray:
        """How often each class was predicted (column sums)."""
        return self.counts.sum(axis=0)

    @property
    def gold_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def render(self) -> str:
        """Aligned text table: gold rows, prediction columns, and a Total row."""
        names = [label.name for label in VerdictLabel]
        width = max(7, len(str(self.total)) + 2)
        lines = [" " * 12 + "Prediction".rjust(width * 3)]
        lines.append(" " * 12 + "".join(n.rjust(width) for n in names))
        for g, name in enumerate(names):
            lead = "Gold  " if g == 1 else "      "
            lines.append(f"{lead}{name:<6}" + "".join(str(c).rjust(width) for c in self.counts[g]))
        lines.append("-" * (12 + 3 * width))
        lines.append(f"{'Total':<12}" + "".join(str(c).rjust(width) for c in self.prediction_totals))
        return "\n".join(lines)


@dataclass(frozen=True)
class EvalReport:
    label_accuracy: float
    fever_score: Optional[float]
    confusion: ConfusionMatrix

    @property
    def prediction_totals(self) -> np.ndarray:
        return self.confusion.prediction_totals


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    statistic: Optional[float]
    p_value: float
    method: str

    @property
    def significant(self) -> bool:
        return self.p_value < 0.05


def _check_unique(records: Sequence[PredictionRecord]) -> None:
    seen = set()
    for r in records:
        if r.claim_id in seen:
            raise InvalidInputError(f"duplicate claim_id {r.claim_id}")
        seen.add(r.claim_id)


def confusion_matrix(records: Sequence[PredictionRecord]) -> ConfusionMatrix:
    if len(records) == 0:
        raise InvalidInputError("no records")
    _check_unique(records)
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    for r in records:
        counts[r.gold, r.predicted] += 1
    return ConfusionMatrix(counts)


def confusion_from_labels(gold, predicted) -> ConfusionMatrix:
    gold = np.asarray(gold, dtype=int)
    predicted = np.asarray(predicted, dtype=int)
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(counts, (gold, predicted), 1)
    return ConfusionMatrix(counts)


def label_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise InvalidInputError("empty confusion matrix")
    return int(np.trace(cm.counts)) / cm.total


def evidence_found(record: PredictionRecord, k: int = DEFAULT_EVIDENCE_K) -> bool:
    """True when some gold evidence set lies entirely inside the top-``k`` retrieved items."""
    top = set(record.retrieved_evidence[:k])
    return any(s <= top for s in record.gold_evidence_sets)


def fever_correct(record: PredictionRecord, k: int = DEFAULT_EVIDENCE_K) -> bool:
    if record.gold != VerdictLabel.N and not record.gold_evidence_sets:
        raise InvalidInputError(f"claim {record.claim_id}: {record.gold.name} claim has no gold evidence")
    if not record.correct:
        return False
    return record.gold == VerdictLabel.N or evidence_found(record, k)


def fever_score(records: Sequence[PredictionRecord], k: int = DEFAULT_EVIDENCE_K) -> float:
    """Fraction of claims with the right label and, for S/R claims, a complete gold evidence set in the top ``k``."""
    if len(records) == 0:
        raise InvalidInputError("no records")
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    _check_unique(records)
    return sum(fever_correct(r, k) for r in records) / len(records)


def evaluate(records: Sequence[PredictionRecord], k: int = DEFAULT_EVIDENCE_K, with_fever_score: bool = True) -> EvalReport:
    cm = confusion_matrix(records)
    fs = fever_score(records, k) if with_fever_score else None
    return EvalReport(label_accuracy(cm), fs, cm)


def format_percent(x: float) -> str:
    """Render a fraction as a percentage with 2 decimals, rounding half up."""
    # repr() gives the shortest round-tripping decimal, so 0.77805 stays a tie
    d = Decimal(repr(float(x))) * 100
    return str(d.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _exact_two_sided(b: int, c: int) -> float:
    n = b + c
    if n == 0:
        return 1.0
    tail = sum(math.comb(n, i) for i in range(min(b, c) + 1))
    return float(min(Fraction(1), Fraction(2 * tail, 2**n)))


def _chi2_sf_1dof(x: float) -> float:
    # chi-square with one degree of freedom: P(X > x) = erfc(sqrt(x / 2))
    return math.erfc(math.sqrt(x / 2.0))


def mcnemar_from_counts(b: int, c: int, method: Optional[str] = None) -> McNemarResult:
    """McNemar's test from discordant counts.

    ``method`` is ``"exact"`` (two-sided binomial), ``"chi2"`` (continuity
    corrected) or ``None`` to choose exact when ``b + c <= 25``.
    """
    if b < 0 or c < 0:
        raise InvalidInputError("discordant counts must be non-negative")
    if method is None:
        method = "exact" if b + c <= EXACT_MCNEMAR_MAX_DISCORDANT else "chi2"
    if method == "exact":
        return McNemarResult(b, c, None, _exact_two_sided(b, c), "exact-binomial")
    if method == "chi2":
        if b + c == 0:
            return McNemarResult(b, c, 0.0, 1.0, "chi-square-corrected")
        stat = max(abs(b - c) - 1, 0) ** 2 / (b + c)
        return McNemarResult(b, c, stat, min(1.0, _chi2_sf_1dof(stat)), "chi-square-corrected")
    raise InvalidInputError(f"unknown McNemar method {method!r}")


def mcnemar(a_correct: Sequence[bool], b_correct: Sequence[bool], method: Optional[str] = None) -> McNemarResult:
    """Paired test of two classifiers from per-claim correctness, aligned by claim."""
    a = np.asarray(a_correct, dtype=bool)
    bb = np.asarray(b_correct, dtype=bool)
    if a.shape != bb.shape or a.ndim != 1:
        raise InvalidInputError(f"correctness vectors must be aligned: {a.shape} vs {bb.shape}")
    if len(a) == 0:
        raise InvalidInputError("no paired outcomes")
    return mcnemar_from_counts(int(np.sum(a & ~bb)), int(np.sum(~a & bb)), method)
