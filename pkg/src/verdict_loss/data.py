"""Synthetic FEVER-shaped datasets and the JSONL interchange formats.

Dataset line::

    {"claim_id": 7, "label": "SUPPORTS", "features": [0.1, -2.3],
     "gold_evidence": [[["Page", 3]]], "retrieved": [["Page", 3], ["Other", 0]]}

Prediction line::

    {"claim_id": 7, "gold": "SUPPORTS", "predicted": "REFUTES",
     "gold_evidence": [...], "retrieved": [...]}

``gold_evidence`` and ``retrieved`` are optional. Evidence items are
``[page, sentence_index]`` pairs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np

from .losses import NUM_CLASSES, VerdictLabel
from .metrics import DEFAULT_EVIDENCE_K, PredictionRecord
from .weighting import FEVER_TRAIN_COUNTS

DEFAULT_SEED = 2024
DEFAULT_SCALE = 1 / 20
FEVER_DEV_PER_CLASS = 6666

_DATASET_FIELDS = {"claim_id", "label", "features", "gold_evidence", "retrieved"}
_PREDICTION_FIELDS = {"claim_id", "gold", "predicted", "gold_evidence", "retrieved"}


class DataFormatError(ValueError):
    """A JSONL line failed to parse or validate."""

    def __init__(self, message: str, line: Optional[int] = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class Sample:
    claim_id: int
    features: np.ndarray
    gold: VerdictLabel
    gold_evidence_sets: Optional[tuple] = None
    retrieved_evidence: Optional[tuple] = None


@dataclass
class Dataset:
    """Column-oriented labelled feature vectors.

    ``gold_evidence`` and ``retrieved`` are either ``None`` or one entry per
    sample (lists of lists of ``(page, idx)`` tuples / list of tuples).
    """

    claim_ids: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    split: str = "train"
    gold_evidence: Optional[list] = None
    retrieved: Optional[list] = None

    def __post_init__(self):
        self.claim_ids = np.asarray(self.claim_ids, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            self.features = self.features.reshape(len(self.claim_ids), -1)
        n = len(self.claim_ids)
        if self.labels.shape != (n,) or len(self.features) != n:
            raise ValueError("claim_ids, labels and features must have the same length")
        if len(np.unique(self.claim_ids)) != n:
            raise ValueError("claim_id values must be unique")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if np.any((self.labels < 0) | (self.labels >= NUM_CLASSES)):
            raise ValueError("labels must be 0, 1 or 2")

    def __len__(self) -> int:
        return len(self.claim_ids)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=NUM_CLASSES)

    @property
    def has_evidence(self) -> bool:
        return self.gold_evidence is not None and self.retrieved is not None

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield Sample(
                int(self.claim_ids[i]),
                self.features[i],
                VerdictLabel(int(self.labels[i])),
                None if self.gold_evidence is None else tuple(tuple(s) for s in self.gold_evidence[i]),
                None if self.retrieved is None else tuple(self.retrieved[i]),
            )

    def prediction_records(self, predicted: Sequence[int]) -> List[PredictionRecord]:
        predicted = np.asarray(predicted)
        if predicted.shape != (len(self),):
            raise ValueError("need one prediction per sample")
        return [
            PredictionRecord(
                int(self.claim_ids[i]),
                int(self.labels[i]),
                int(predicted[i]),
                self.gold_evidence[i] if self.gold_evidence is not None else (),
                self.retrieved[i] if self.retrieved is not None else (),
            )
            for i in range(len(self))
        ]


def scaled_counts(scale: float = DEFAULT_SCALE) -> tuple:
    """Training counts with FEVER's class ratio at ``scale`` (at least one per class)."""
    return tuple(max(1, int(round(n * scale))) for n in FEVER_TRAIN_COUNTS)


@dataclass
class SyntheticConfig:
    seed: int = DEFAULT_SEED
    train_counts: tuple = field(default_factory=scaled_counts)
    dev_per_class: int = int(round(FEVER_DEV_PER_CLASS * DEFAULT_SCALE))
    dim: int = 8
    cluster_separation: float = 2.0
    label_noise: float = 0.0
    evidence_coverage: float = 0.9

    def __post_init__(self):
        self.train_counts = tuple(int(n) for n in self.train_counts)
        if len(self.train_counts) != NUM_CLASSES or min(self.train_counts) < 1:
            raise ValueError(f"train_counts must be 3 positive integers, got {self.train_counts}")
        if self.dev_per_class < 1:
            raise ValueError("dev_per_class must be positive")
        if self.dim < 2:
            raise ValueError("dim must be at least 2 to place three equidistant clusters")
        if not self.cluster_separation > 0:
            raise ValueError("cluster_separation must be positive")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError("label_noise must lie in [0, 1)")
        if not 0.0 <= self.evidence_coverage <= 1.0:
            raise ValueError("evidence_coverage must lie in [0, 1]")

    @classmethod
    def at_scale(cls, scale: float, **kwargs) -> "SyntheticConfig":
        dev = max(1, int(round(FEVER_DEV_PER_CLASS * scale)))
        return cls(train_counts=scaled_counts(scale), dev_per_class=dev, **kwargs)


def cluster_centers(dim: int, separation: float) -> np.ndarray:
    """Vertices of an equilateral triangle (side ``separation``) in the first two coordinates."""
    radius = separation / np.sqrt(3.0)
    angles = np.pi / 2 + 2 * np.pi * np.arange(NUM_CLASSES) / NUM_CLASSES
    centers = np.zeros((NUM_CLASSES, dim))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def _make_split(rng, labels, centers, label_noise):
    n = len(labels)
    source = labels.copy()
    if label_noise > 0:
        # features of a noisy sample come from a uniformly drawn class, so the
        # observed label counts stay exactly as configured
        noisy = rng.choice(n, size=int(round(label_noise * n)), replace=False)
        source[noisy] = rng.integers(0, NUM_CLASSES, size=len(noisy))
    return centers[source] + rng.standard_normal((n, centers.shape[1]))


def _make_evidence(rng, claim_ids, labels, coverage, k=DEFAULT_EVIDENCE_K):
    """Gold sets and top-k retrieval lists; ``coverage`` of S/R claims get a gold set retrieved."""
    gold_sets, retrieved = [], []
    verifiable = np.flatnonzero(labels != VerdictLabel.N)
    n_covered = int(round(coverage * len(verifiable)))
    covered = set(rng.choice(verifiable, size=n_covered, replace=False).tolist())
    for i, (cid, label) in enumerate(zip(claim_ids.tolist(), labels.tolist())):
        distractors = [(f"distractor_{cid}_{j}", int(j)) for j in range(k)]
        if label == VerdictLabel.N:
            gold_sets.append([])
            retrieved.append(distractors)
            continue
        size = int(rng.integers(1, 3))
        page = f"page_{cid}"
        gold = [(page, s) for s in range(size)]
        gold_sets.append([gold])
        if i in covered:
            items = gold + distractors[: k - size]
            order = rng.permutation(len(items))
            retrieved.append([items[j] for j in order])
        else:
            # at most a partial gold set makes it into the top k
            retrieved.append(gold[: size - 1] + distractors[: k - size + 1])
    return gold_sets, retrieved


def generate_synthetic(config: SyntheticConfig = None):
    """Seeded (train, dev) pair: imbalanced train split, balanced dev split."""
    config = config or SyntheticConfig()
    feature_seq, evidence_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(feature_seq)
    ev_rng = np.random.default_rng(evidence_seq)
    centers = cluster_centers(config.dim, config.cluster_separation)

    train_labels = rng.permutation(np.repeat(np.arange(NUM_CLASSES), config.train_counts))
    train_x = _make_split(rng, train_labels, centers, config.label_noise)
    dev_labels = rng.permutation(np.repeat(np.arange(NUM_CLASSES), config.dev_per_class))
    dev_x = _make_split(rng, dev_labels, centers, 0.0)

    train_ids = np.arange(len(train_labels))
    dev_ids = np.arange(len(dev_labels)) + len(train_labels)
    train_gold, train_ret = _make_evidence(ev_rng, train_ids, train_labels, config.evidence_coverage)
    dev_gold, dev_ret = _make_evidence(ev_rng, dev_ids, dev_labels, config.evidence_coverage)
    return (
        Dataset(train_ids, train_x, train_labels, "train", train_gold, train_ret),
        Dataset(dev_ids, dev_x, dev_labels, "dev", dev_gold, dev_ret),
    )


# --- JSONL ----------------------------------------------------------------


def _label(value, fieldname, line, path):
    if not isinstance(value, str):
        raise DataFormatError(f"field {fieldname!r} must be a string", line, path)
    try:
        return VerdictLabel.from_fever(value)
    except ValueError:
        raise DataFormatError(f"field {fieldname!r}: unknown label {value!r}", line, path) from None


def _item(value, fieldname, line, path):
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not isinstance(value[0], str)
        or not value[0]
        or isinstance(value[1], bool)
        or not isinstance(value[1], int)
        or value[1] < 0
    ):
        raise DataFormatError(f"field {fieldname!r}: evidence item must be [page, sentence_index], got {value!r}", line, path)
    return (value[0], value[1])


def _gold_sets(obj, line, path):
    raw = obj.get("gold_evidence")
    if raw is None:
        return None
    if not isinstance(raw, list) or not all(isinstance(s, list) for s in raw):
        raise DataFormatError("field 'gold_evidence' must be a list of evidence sets", line, path)
    return [[_item(i, "gold_evidence", line, path) for i in s] for s in raw]


def _retrieved(obj, line, path):
    raw = obj.get("retrieved")
    if raw is None:
        return None
    if not isinstance(raw, list):
        raise DataFormatError("field 'retrieved' must be a list of evidence items", line, path)
    items = [_item(i, "retrieved", line, path) for i in raw]
    if len(set(items)) != len(items):
        raise DataFormatError("field 'retrieved' contains duplicate items", line, path)
    return items


def _claim_id(obj, line, path):
    cid = obj.get("claim_id")
    if isinstance(cid, bool) or not isinstance(cid, int):
        raise DataFormatError("field 'claim_id' must be an integer", line, path)
    return cid


def _read_objects(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid JSON ({exc.msg})", lineno, path) from None
            if not isinstance(obj, dict):
                raise DataFormatError("each line must be a JSON object", lineno, path)
            yield lineno, obj


def load_jsonl(path, kind: str = "auto", strict: bool = True) -> Union[Dataset, List[PredictionRecord]]:
    """Read a dataset or prediction JSONL file.

    ``kind`` is ``"dataset"``, ``"predictions"`` or ``"auto"`` (decided by
    the first line). With ``strict`` unknown fields are rejected, otherwise
    ignored. Every error carries the offending line number.
    """
    if kind not in ("auto", "dataset", "predictions"):
        raise ValueError(f"unknown kind {kind!r}")
    objects = list(_read_objects(path))
    if kind == "auto":
        kind = "predictions" if objects and "predicted" in objects[0][1] else "dataset"
    if kind == "predictions":
        return _parse_predictions(objects, path, strict)
    return _parse_dataset(objects, path, strict)


def _check_fields(obj, allowed, required, line, path, strict):
    missing = [f for f in required if f not in obj]
    if missing:
        raise DataFormatError(f"missing field {missing[0]!r}", line, path)
    extra = sorted(set(obj) - allowed)
    if extra and strict:
        raise DataFormatError(f"unknown field {extra[0]!r}", line, path)


def _parse_dataset(objects, path, strict) -> Dataset:
    ids, feats, labels, gold, retrieved = [], [], [], [], []
    seen = {}
    dim = None
    for line, obj in objects:
        _check_fields(obj, _DATASET_FIELDS, ("claim_id", "label", "features"), line, path, strict)
        cid = _claim_id(obj, line, path)
        if cid in seen:
            raise DataFormatError(f"duplicate claim_id {cid} (first seen on line {seen[cid]})", line, path)
        seen[cid] = line
        x = obj["features"]
        if (
            not isinstance(x, list)
            or not x
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)
            or not all(np.isfinite(v) for v in x)
        ):
            raise DataFormatError("field 'features' must be a non-empty list of finite numbers", line, path)
        if dim is None:
            dim = len(x)
        elif len(x) != dim:
            raise DataFormatError(f"field 'features' has length {len(x)}, expected {dim}", line, path)
        ids.append(cid)
        feats.append([float(v) for v in x])
        labels.append(int(_label(obj["label"], "label", line, path)))
        gold.append(_gold_sets(obj, line, path))
        retrieved.append(_retrieved(obj, line, path))
    has_gold = bool(gold) and all(g is not None for g in gold)
    has_ret = bool(retrieved) and all(r is not None for r in retrieved)
    features = np.asarray(feats, dtype=float).reshape(len(ids), dim or 0)
    return Dataset(ids, features, labels, "train", gold if has_gold else None, retrieved if has_ret else None)


def _parse_predictions(objects, path, strict) -> List[PredictionRecord]:
    records, seen = [], {}
    for line, obj in objects:
        _check_fields(obj, _PREDICTION_FIELDS, ("claim_id", "gold", "predicted"), line, path, strict)
        cid = _claim_id(obj, line, path)
        if cid in seen:
            raise DataFormatError(f"duplicate claim_id {cid} (first seen on line {seen[cid]})", line, path)
        seen[cid] = line
        records.append(
            PredictionRecord(
                cid,
                _label(obj["gold"], "gold", line, path),
                _label(obj["predicted"], "predicted", line, path),
                _gold_sets(obj, line, path) or (),
                _retrieved(obj, line, path) or (),
            )
        )
    return records


def _evidence_json(sets):
    return [[[page, idx] for page, idx in sorted(s)] for s in sets]


def _write_lines(path, objs):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for obj in objs:
                fh.write(json.dumps(obj, ensure_ascii=False))
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)}: {exc.strerror}") from exc


def save_predictions(records: Sequence[PredictionRecord], path) -> None:
    def encode(r):
        obj = {"claim_id": r.claim_id, "gold": r.gold.fever_name, "predicted": r.predicted.fever_name}
        if r.gold_evidence_sets:
            obj["gold_evidence"] = _evidence_json(r.gold_evidence_sets)
        if r.retrieved_evidence:
            obj["retrieved"] = [[page, idx] for page, idx in r.retrieved_evidence]
        return obj

    _write_lines(path, (encode(r) for r in records))


def save_dataset(dataset: Dataset, path) -> None:
    def encode(i):
        obj = {
            "claim_id": int(dataset.claim_ids[i]),
            "label": VerdictLabel(int(dataset.labels[i])).fever_name,
            "features": dataset.features[i].tolist(),
        }
        if dataset.gold_evidence is not None:
            obj["gold_evidence"] = [[[p, s] for p, s in g] for g in dataset.gold_evidence[i]]
        if dataset.retrieved is not None:
            obj["retrieved"] = [[p, s] for p, s in dataset.retrieved[i]]
        return obj

    _write_lines(path, (encode(i) for i in range(len(dataset))))
