"""Finite-difference verification of the analytic loss gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .losses import NUM_CLASSES, LossKind, LossSpec, loss_gradient, softmax, total_loss

STEP = 1e-6
REL_TOL = 1e-5
ABS_TOL = 1e-8
SMALL = 1e-3


@dataclass
class GradCase:
    spec: LossSpec
    gold: int
    z: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def error(self) -> float:
        """Worst per-component error: absolute below ``SMALL`` magnitude, relative otherwise."""
        worst = 0.0
        for a, f in zip(self.analytic, self.numeric):
            if abs(f) < SMALL:
                worst = max(worst, abs(a - f) * (REL_TOL / ABS_TOL))
            else:
                worst = max(worst, abs(a - f) / abs(f))
        return worst

    @property
    def passed(self) -> bool:
        return self.error <= REL_TOL

    def describe(self) -> str:
        w = "none" if self.spec.weights is None else "(" + ", ".join(f"{v:.6g}" for v in self.spec.weights) + ")"
        z = "(" + ", ".join(f"{v:.6f}" for v in self.z) + ")"
        return f"kind={self.spec.kind.value} lambda={self.spec.lam:.6f} weights={w} gold={'SRN'[self.gold]} z={z} err={self.error:.3e}"


@dataclass
class GradCheckReport:
    cases: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def max_error_by_kind(self) -> Dict[LossKind, float]:
        out = {}
        for c in self.cases:
            out[c.spec.kind] = max(out.get(c.spec.kind, 0.0), c.error)
        return out

    def worst(self) -> Optional[GradCase]:
        return max(self.cases, key=lambda c: c.error, default=None)


def numeric_gradient(spec: LossSpec, y: np.ndarray, z: np.ndarray, h: float = STEP) -> np.ndarray:
    """Central differences of the probability-space objective."""
    grad = np.empty(NUM_CLASSES)
    for j in range(NUM_CLASSES):
        e = np.zeros(NUM_CLASSES)
        e[j] = h
        grad[j] = (total_loss(spec, y, softmax(z + e)) - total_loss(spec, y, softmax(z - e))) / (2 * h)
    return grad


def check_case(spec: LossSpec, gold: int, z, *, inject_bug: bool = False) -> GradCase:
    y = np.eye(NUM_CLASSES)[gold]
    z = np.asarray(z, dtype=float)
    analytic = loss_gradient(spec, y, z, inject_bug=inject_bug).grad_z
    return GradCase(spec, gold, z, analytic, numeric_gradient(spec, y, z))


def random_cases(n: int, seed: int, *, inject_bug: bool = False) -> GradCheckReport:
    """``n`` random draws over kind, lambda in [0, 1], gold, z in [-5, 5]^3 and weights in [0.1, 10]^3."""
    rng = np.random.default_rng(seed)
    kinds = list(LossKind)
    report = GradCheckReport()
    for _ in range(n):
        kind = kinds[rng.integers(len(kinds))]
        lam = rng.uniform(0.0, 1.0)
        gold = int(rng.integers(NUM_CLASSES))
        z = rng.uniform(-5.0, 5.0, NUM_CLASSES)
        weights = tuple(rng.uniform(0.1, 10.0, NUM_CLASSES))
        report.cases.append(check_case(LossSpec(kind, lam, weights), gold, z, inject_bug=inject_bug))
    return report
