import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from verdict_loss.losses import InvalidInputError, LossKind, LossSpec, loss_gradient
from verdict_loss.weighting import (
    FEVER_TRAIN_COUNTS,
    class_balanced_weights,
    inverse_frequency_limit,
    training_weights,
)


def oracle(counts, beta):
    """Direct evaluation at 60 digits, using the same binary value of beta."""
    with mpmath.workdps(60):
        b = mpmath.mpf(beta)
        return [float((1 - b) / (1 - b ** int(n))) for n in counts]


def test_beta_zero_is_uniform():
    np.testing.assert_array_equal(class_balanced_weights((5, 100, 7), 0.0), [1.0, 1.0, 1.0])


def test_small_example():
    np.testing.assert_allclose(class_balanced_weights((1, 2, 3), 0.9), [1.0, 0.5263157895, 0.3690036900], rtol=0, atol=1e-9)
    np.testing.assert_allclose(class_balanced_weights((1, 2, 3), 0.9), oracle((1, 2, 3), 0.9), rtol=1e-14)


def test_fever_counts_match_oracle():
    w = class_balanced_weights(FEVER_TRAIN_COUNTS, 0.999999)
    np.testing.assert_allclose(w, oracle(FEVER_TRAIN_COUNTS, 0.999999), rtol=1e-9)
    ref = oracle(FEVER_TRAIN_COUNTS, 0.999999)
    assert w[1] / w[0] == pytest.approx(ref[1] / ref[0], rel=1e-9)
    assert w[2] / w[0] == pytest.approx(ref[2] / ref[0], rel=1e-9)


@pytest.mark.parametrize("beta", [0.9999, 0.99999, 0.999999, 1 - 1e-9])
@pytest.mark.parametrize("counts", [(1, 10, 1000), (80035, 29775, 35639), (999_999, 1_000_000, 3)])
def test_stable_near_one(beta, counts):
    w = class_balanced_weights(counts, beta)
    assert np.all(np.isfinite(w)) and np.all(w > 0)
    np.testing.assert_allclose(w, oracle(counts, beta), rtol=1e-9)


def test_inverse_frequency():
    np.testing.assert_array_equal(inverse_frequency_limit((1, 1, 1)), [1, 1, 1])
    np.testing.assert_array_equal(inverse_frequency_limit((1, 2, 4)), [1, 0.5, 0.25])


def test_limit_approaches_inverse_frequency():
    w = class_balanced_weights((10, 20, 40), 1 - 1e-12)
    np.testing.assert_allclose(w / w.max(), inverse_frequency_limit((10, 20, 40)), rtol=1e-3)


@given(st.lists(st.integers(1, 10**6), min_size=3, max_size=3, unique=True), st.floats(0.01, 0.999999))
def test_monotone_in_counts(counts, beta):
    w = class_balanced_weights(counts, beta)
    order = np.argsort(counts)
    assert np.all(np.diff(w[order]) <= 0)
    for i in range(3):
        for j in range(3):
            if counts[i] < counts[j]:
                assert w[i] >= w[j]


@pytest.mark.parametrize("beta", [-0.1, 1.0, 1.5])
def test_bad_beta(beta):
    with pytest.raises(InvalidInputError):
        class_balanced_weights((1, 2, 3), beta)


@pytest.mark.parametrize("counts", [(0, 1, 2), (1, 2), (1.5, 2, 3)])
def test_bad_counts(counts):
    with pytest.raises(InvalidInputError):
        class_balanced_weights(counts, 0.5)


def test_training_weights_rescale_only():
    w = class_balanced_weights(FEVER_TRAIN_COUNTS, 0.999999)
    t = training_weights(FEVER_TRAIN_COUNTS, 0.999999)
    assert t.sum() == pytest.approx(3.0)
    np.testing.assert_allclose(t / t[0], w / w[0], rtol=1e-14)
    np.testing.assert_array_equal(training_weights(FEVER_TRAIN_COUNTS, 0.0), [1.0, 1.0, 1.0])


@pytest.mark.parametrize("kind", list(LossKind))
def test_beta_zero_reduces_weighted_loss_bitwise(kind):
    rng = np.random.default_rng(8)
    w = tuple(class_balanced_weights(FEVER_TRAIN_COUNTS, 0.0))
    for _ in range(200):
        z, g = rng.uniform(-5, 5, 3), rng.integers(3)
        a = loss_gradient(LossSpec(kind, 0.4, w), np.eye(3)[g], z)
        b = loss_gradient(LossSpec(kind, 0.4), np.eye(3)[g], z)
        assert a.value == b.value
        np.testing.assert_array_equal(a.grad_z, b.grad_z)
