"""Verdict-prediction objectives and their gradients with respect to logits.

Four objectives are supported, all sharing the form

    loss = w_gold * ( -log p_gold - lam * sum_i ybar_i * log(1 - p_i) )

where ``ybar`` is a kind-specific complement indicator:

* ``CE``  -- no auxiliary term.
* ``OVA`` -- every non-gold class (multi-label logistic loss on softmax outputs).
* ``SRN`` -- S and R penalise each other; N is never a complement, but an N
  claim still penalises both S and R.
* ``SR``  -- only S/R confusion is penalised; N claims carry no auxiliary term.

Class indices are 0-based internally (S=0, R=1, N=2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

NUM_CLASSES = 3

#: Probabilities are clamped into [EPS, 1 - EPS] inside log terms only.
EPS = 1e-12
_LOG_EPS = float(np.log(EPS))
_LOG_ONE_MINUS_EPS = float(np.log1p(-EPS))


class VerdictLabel(enum.IntEnum):
    S = 0
    R = 1
    N = 2

    @property
    def fever_name(self) -> str:
        return _FEVER_NAMES[self]

    @classmethod
    def from_fever(cls, name: str) -> "VerdictLabel":
        try:
            return _FEVER_LOOKUP[name]
        except KeyError:
            raise ValueError(f"unknown FEVER label {name!r}") from None

    def one_hot(self) -> np.ndarray:
        y = np.zeros(NUM_CLASSES)
        y[self] = 1.0
        return y


_FEVER_NAMES = {
    VerdictLabel.S: "SUPPORTS",
    VerdictLabel.R: "REFUTES",
    VerdictLabel.N: "NOT ENOUGH INFO",
}
_FEVER_LOOKUP = {v: k for k, v in _FEVER_NAMES.items()}


class LossKind(str, enum.Enum):
    CE = "ce"
    OVA = "ova"
    SRN = "srn"
    SR = "sr"


class InvalidInputError(ValueError):
    """Raised for malformed logits, labels, probabilities or loss settings."""


@dataclass(frozen=True)
class LossSpec:
    """Which objective to use, the auxiliary weight and optional class weights.

    ``lam`` is ignored for ``CE``. ``weights=None`` behaves exactly like
    ``weights=(1, 1, 1)``.
    """

    kind: LossKind = LossKind.CE
    lam: float = 0.0
    weights: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if not np.isfinite(self.lam) or self.lam < 0:
            raise InvalidInputError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != NUM_CLASSES or not all(np.isfinite(v) and v > 0 for v in w):
                raise InvalidInputError(f"class weights must be 3 positive finite reals, got {self.weights}")
            object.__setattr__(self, "weights", w)

    @property
    def aux_weight(self) -> float:
        return 0.0 if self.kind is LossKind.CE else float(self.lam)


@dataclass(frozen=True)
class LossResult:
    """Loss value, gradient w.r.t. logits, and whether any log term was clamped.

    For a batch, ``value`` is the mean loss and ``grad_z`` has one row per
    sample holding the derivative of that mean w.r.t. the sample's logits.
    """

    value: float
    grad_z: np.ndarray
    saturated: bool = False


def _as_onehot(y) -> np.ndarray:
    if isinstance(y, (VerdictLabel, int, np.integer)) and not isinstance(y, bool):
        return VerdictLabel(int(y)).one_hot()
    arr = np.asarray(y, dtype=float)
    if arr.shape[-1:] != (NUM_CLASSES,) or not np.all((arr == 0) | (arr == 1)) or not np.all(arr.sum(-1) == 1):
        raise InvalidInputError(f"not a one-hot vector over 3 classes: {y!r}")
    return arr


def _as_logits(z) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if arr.shape[-1:] != (NUM_CLASSES,):
        raise InvalidInputError(f"logits must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("logits must be finite")
    return arr


def _as_probs(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (NUM_CLASSES,) or not np.all((arr >= 0) & (arr <= 1)):
        raise InvalidInputError(f"not a probability vector: {p!r}")
    if not np.allclose(arr.sum(-1), 1.0, rtol=0, atol=1e-9):
        raise InvalidInputError(f"probabilities must sum to 1, got {arr.sum(-1)}")
    return arr


def softmax(z) -> np.ndarray:
    """Max-shifted softmax over the last axis."""
    z = _as_logits(z)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z) -> np.ndarray:
    z = _as_logits(z)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def complement_indicator(kind, y) -> np.ndarray:
    """Which classes incur a -log(1 - p_i) penalty for gold one-hot ``y``."""
    kind = LossKind(kind)
    y = _as_onehot(y)
    ybar = np.zeros_like(y)
    if kind is LossKind.OVA:
        ybar = 1.0 - y
    elif kind is LossKind.SRN:
        ybar[..., :2] = 1.0 - y[..., :2]
    elif kind is LossKind.SR:
        ybar[..., :2] = (1.0 - y[..., :2]) * (1.0 - y[..., 2:3])
    return ybar


_COMPLEMENTS = {kind: complement_indicator(kind, np.eye(NUM_CLASSES)) for kind in LossKind}


def aux_loss(kind, y, p) -> float:
    """Auxiliary complement penalty ``-sum_i ybar_i log(1 - p_i)`` (0 for CE)."""
    ybar = complement_indicator(kind, y)
    p = _as_probs(p)
    log1m = np.log(np.clip(1.0 - p, EPS, 1.0 - EPS))
    return float(-(ybar * log1m).sum()) + 0.0  # no negative zero when every ybar_i is 0


def total_loss(spec: LossSpec, y, p) -> float:
    """Objective value for a single sample given probabilities ``p``."""
    y = _as_onehot(y)
    p = _as_probs(p)
    gold = int(np.argmax(y))
    ce = -float(np.log(np.clip(p[gold], EPS, 1.0 - EPS)))
    value = ce + spec.aux_weight * aux_loss(spec.kind, y, p)
    if spec.weights is not None:
        value = spec.weights[gold] * value
    return value


def _loss_and_grad(spec: LossSpec, Y: np.ndarray, Z: np.ndarray, inject_bug: bool = False):
    """Per-sample values and gradients for stacked (n, 3) one-hots and logits."""
    shifted = Z - Z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    total = e.sum(axis=-1, keepdims=True)
    log_total = np.log(total)
    P = e / total
    log_p = shifted - log_total
    # log(1 - p_i) from the sum over j != i, avoiding cancellation in total - e_i
    others = np.stack([e[:, 1] + e[:, 2], e[:, 0] + e[:, 2], e[:, 0] + e[:, 1]], axis=-1)
    with np.errstate(divide="ignore"):
        log_1mp = np.log(others) - log_total
    gold = np.argmax(Y, axis=-1)
    rows = np.arange(len(Y))
    gold_log_p = log_p[rows, gold]

    values = -np.clip(gold_log_p, _LOG_EPS, _LOG_ONE_MINUS_EPS)
    grad = P - Y
    saturated = bool(np.any(gold_log_p < _LOG_EPS))
    lam = spec.aux_weight
    if lam > 0:
        ybar = _COMPLEMENTS[spec.kind][gold]
        # only the lower clamp guards against an infinite loss
        saturated_1m = log_1mp < _LOG_EPS
        saturated = saturated or bool(np.any(saturated_1m & (ybar > 0)))
        coef = lam * ybar
        values = values - (coef * np.clip(log_1mp, _LOG_EPS, _LOG_ONE_MINUS_EPS)).sum(axis=-1)
        # d/dz_j [-log(1 - p_i)] = p_i (delta_ij - p_j) / (1 - p_i); p_i / (1 - p_i) = exp(log p_i - log(1 - p_i))
        odds = np.exp(np.where(saturated_1m, 0.0, log_p - log_1mp))
        q = np.where(saturated_1m, 0.0, coef * odds)
        aux_grad = q - P * q.sum(axis=-1, keepdims=True)
        if inject_bug:
            aux_grad = -aux_grad
        grad = grad + aux_grad
    if spec.weights is not None:
        w = np.asarray(spec.weights)[gold]
        values = w * values
        grad = w[:, None] * grad
    return values, grad, saturated


def loss_gradient(spec: LossSpec, y, z, *, inject_bug: bool = False) -> LossResult:
    """Loss value and exact gradient w.r.t. the logits ``z`` of one sample.

    ``inject_bug`` flips the sign of the auxiliary gradient; it exists only
    as a negative control for the gradient checker.
    """
    Y = _as_onehot(y).reshape(1, NUM_CLASSES)
    Z = _as_logits(z).reshape(1, NUM_CLASSES)
    values, grad, saturated = _loss_and_grad(spec, Y, Z, inject_bug)
    return LossResult(float(values[0]), grad[0], saturated)


def batch_loss(spec: LossSpec, ys, zs=None) -> LossResult:
    """Mean loss over a batch; ``grad_z[k]`` is d(mean)/d(z_k).

    Either pass stacked one-hots and logits, or a single sequence of
    ``(one_hot, logits)`` pairs.
    """
    if zs is None:
        pairs = list(ys)
        if not pairs:
            raise InvalidInputError("empty batch")
        ys, zs = [p[0] for p in pairs], [p[1] for p in pairs]
    if len(ys) == 0:
        raise InvalidInputError("empty batch")
    Y = _as_onehot(ys)
    Z = _as_logits(zs)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Z.ndim == 1:
        Z = Z[None, :]
    if len(Z) == 0:
        raise InvalidInputError("empty batch")
    if Y.shape != Z.shape:
        raise InvalidInputError(f"labels {Y.shape} and logits {Z.shape} disagree")
    values, grad, saturated = _loss_and_grad(spec, Y, Z)
    n = len(Z)
    return LossResult(float(values.sum() / n), grad / n, saturated)


def labels_to_onehot(labels: Sequence[int]) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    return np.eye(NUM_CLASSES)[labels]
