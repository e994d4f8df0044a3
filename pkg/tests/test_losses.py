import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verdict_loss.losses import (
    InvalidInputError,
    LossKind,
    LossSpec,
    VerdictLabel,
    aux_loss,
    batch_loss,
    complement_indicator,
    loss_gradient,
    softmax,
    total_loss,
)

mpmath.mp.dps = 40

P0 = (0.7, 0.2, 0.1)


def case_formula(kind, lam, weights, gold, p):
    """Per-gold-class objective written out case by case, in extended precision."""
    p = [mpmath.mpf(v) for v in p]
    log, l1m = mpmath.log, lambda v: mpmath.log(1 - v)
    others = [i for i in range(3) if i != gold]
    if kind == "ce":
        aux = 0
    elif kind == "ova":
        aux = -sum(l1m(p[i]) for i in others)
    elif kind == "srn":
        aux = {0: -l1m(p[1]), 1: -l1m(p[0]), 2: -l1m(p[0]) - l1m(p[1])}[gold]
    else:
        aux = {0: -l1m(p[1]), 1: -l1m(p[0]), 2: 0}[gold]
    w = 1 if weights is None else mpmath.mpf(weights[gold])
    return w * (-log(p[gold]) + mpmath.mpf(lam) * aux)


def mp_softmax(z):
    e = [mpmath.exp(mpmath.mpf(v)) for v in z]
    s = sum(e)
    return [v / s for v in e]


def onehot(g):
    return np.eye(3)[g]


probs = st.tuples(*[st.floats(0.001, 1.0) for _ in range(3)]).map(lambda t: tuple(np.array(t) / sum(t)))
logits = st.tuples(*[st.floats(-8, 8) for _ in range(3)]).map(np.array)
golds = st.integers(0, 2)


class TestLabels:
    def test_fever_names_round_trip(self):
        for label in VerdictLabel:
            assert VerdictLabel.from_fever(label.fever_name) is label
            assert int(np.argmax(label.one_hot())) == label

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            VerdictLabel.from_fever("supports")


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(softmax([0, 0, 0]), [1 / 3] * 3, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("c", [-700.0, -3.5, 0.0, 12.0, 800.0])
    def test_constant_shift(self, c):
        np.testing.assert_array_equal(softmax([c, c, c]), softmax([0, 0, 0]))

    def test_log_ratio_example(self):
        np.testing.assert_allclose(softmax([math.log(7), math.log(2), 0.0]), P0, rtol=1e-14)

    def test_non_finite(self):
        with pytest.raises(InvalidInputError):
            softmax([0, np.nan, 1])
        with pytest.raises(InvalidInputError):
            softmax([0, np.inf, 1])

    @given(logits, st.floats(-50, 50))
    def test_shift_invariant_and_normalised(self, z, c):
        p = softmax(z)
        assert abs(p.sum() - 1) < 1e-12
        np.testing.assert_allclose(softmax(z + c), p, rtol=1e-12, atol=1e-300)


class TestComplementIndicator:
    def test_examples(self):
        np.testing.assert_array_equal(complement_indicator("srn", [1, 0, 0]), [0, 1, 0])
        np.testing.assert_array_equal(complement_indicator("sr", [0, 0, 1]), [0, 0, 0])
        np.testing.assert_array_equal(complement_indicator("ova", [0, 1, 0]), [1, 0, 1])

    def test_full_table(self):
        expected = {
            "ce": [[0, 0, 0]] * 3,
            "ova": [[0, 1, 1], [1, 0, 1], [1, 1, 0]],
            "srn": [[0, 1, 0], [1, 0, 0], [1, 1, 0]],
            "sr": [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
        }
        for kind, rows in expected.items():
            for g, row in enumerate(rows):
                np.testing.assert_array_equal(complement_indicator(kind, onehot(g)), row)

    def test_rejects_bad_onehot(self):
        with pytest.raises(InvalidInputError):
            complement_indicator("ova", [1, 1, 0])


class TestAuxAndTotal:
    def test_aux_examples(self):
        assert aux_loss("srn", [1, 0, 0], P0) == pytest.approx(0.2231435513, abs=1e-10)
        assert aux_loss("ova", [1, 0, 0], P0) == pytest.approx(0.3285040670, abs=1e-10)
        assert aux_loss("sr", [0, 0, 1], P0) == 0.0
        assert aux_loss("ce", [0, 0, 1], P0) == 0.0

    def test_total_examples(self):
        assert total_loss(LossSpec("ce"), [1, 0, 0], P0) == pytest.approx(0.3566749439, abs=1e-10)
        assert total_loss(LossSpec("srn", 0.5), [0, 1, 0], (0.25, 0.6, 0.15)) == pytest.approx(0.6546666600, abs=1e-10)
        assert total_loss(LossSpec("sr", 1.0, (2, 1, 1)), [1, 0, 0], P0) == pytest.approx(1.1596369905, abs=1e-10)

    @pytest.mark.parametrize("kind", list(LossKind))
    def test_lambda_zero_is_ce(self, kind):
        for g in range(3):
            assert total_loss(LossSpec(kind, 0.0), onehot(g), P0) == total_loss(LossSpec("ce"), onehot(g), P0)

    def test_ce_ignores_lambda(self):
        assert total_loss(LossSpec("ce", 3.0), [0, 1, 0], P0) == total_loss(LossSpec("ce"), [0, 1, 0], P0)

    @pytest.mark.parametrize("kind,lam,weights", list(itertools.product(["ce", "ova", "srn", "sr"], [0.0, 0.0625, 1.0], [None, (2.5, 0.3, 7.0)])))
    def test_matches_case_formulas(self, kind, lam, weights):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = rng.dirichlet([1, 1, 1]) * 0.98 + 0.02 / 3
            for g in range(3):
                expected = float(case_formula(kind, lam, weights, g, p))
                assert total_loss(LossSpec(kind, lam, weights), onehot(g), p) == pytest.approx(expected, rel=1e-12)

    def test_saturation_is_finite(self):
        value = total_loss(LossSpec("ova", 1.0), [0, 1, 0], (1.0, 0.0, 0.0))
        assert np.isfinite(value) and value > 0

    def test_bad_probabilities(self):
        with pytest.raises(InvalidInputError):
            total_loss(LossSpec(), [1, 0, 0], (0.5, 0.6, 0.1))

    @given(probs, golds)
    def test_case_structure(self, p, g):
        y = onehot(g)
        if g == 2:
            assert aux_loss("ova", y, p) == pytest.approx(aux_loss("srn", y, p), rel=1e-12)
            assert aux_loss("sr", y, p) == 0.0
        else:
            diff = aux_loss("ova", y, p) - aux_loss("srn", y, p)
            assert diff == pytest.approx(-math.log(1 - p[2]), rel=1e-9, abs=1e-12)
            assert diff >= 0
            assert aux_loss("sr", y, p) == aux_loss("srn", y, p)

    @given(probs, golds, st.permutations([0, 1, 2]))
    def test_ova_permutation_symmetry(self, p, g, perm):
        p = np.asarray(p)
        y = onehot(g)
        assert aux_loss("ova", y[perm], p[perm]) == pytest.approx(aux_loss("ova", y, p), rel=1e-12)

    @given(probs, golds)
    def test_sr_swap_symmetry(self, p, g):
        p = np.asarray(p)
        swap = [1, 0, 2]
        for kind in ("srn", "sr"):
            assert aux_loss(kind, onehot(g)[swap], p[swap]) == pytest.approx(aux_loss(kind, onehot(g), p), rel=1e-12)

    def test_srn_not_symmetric_under_s_n_swap(self):
        p = np.array(P0)
        swap = [2, 1, 0]
        assert aux_loss("srn", onehot(0)[swap], p[swap]) != pytest.approx(aux_loss("srn", onehot(0), p))

    @given(probs, golds, st.sampled_from(list(LossKind)), st.floats(0, 5), st.tuples(*[st.floats(0.1, 10)] * 3))
    def test_non_negative(self, p, g, kind, lam, w):
        assert total_loss(LossSpec(kind, lam, w), onehot(g), p) >= 0


class TestGradient:
    def test_ce_uniform(self):
        res = loss_gradient(LossSpec("ce"), [1, 0, 0], [0, 0, 0])
        np.testing.assert_allclose(res.grad_z, [-2 / 3, 1 / 3, 1 / 3], atol=1e-15)
        assert res.value == pytest.approx(math.log(3), rel=1e-15)

    def test_sr_uniform(self):
        res = loss_gradient(LossSpec("sr", 1.0), [1, 0, 0], [0, 0, 0])
        np.testing.assert_allclose(res.grad_z, [-5 / 6, 2 / 3, 1 / 6], atol=1e-15)

    def test_sr_gold_n_is_ce(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            z = rng.uniform(-5, 5, 3)
            ce = loss_gradient(LossSpec("ce"), [0, 0, 1], z)
            sr = loss_gradient(LossSpec("sr", rng.uniform(0, 3)), [0, 0, 1], z)
            np.testing.assert_array_equal(sr.grad_z, ce.grad_z)
            assert sr.value == ce.value

    def test_value_matches_probability_path(self):
        rng = np.random.default_rng(2)
        for kind in LossKind:
            for _ in range(50):
                z, g = rng.uniform(-5, 5, 3), rng.integers(3)
                spec = LossSpec(kind, rng.uniform(0, 1), tuple(rng.uniform(0.1, 10, 3)))
                assert loss_gradient(spec, onehot(g), z).value == pytest.approx(total_loss(spec, onehot(g), softmax(z)), rel=1e-12)

    def test_against_mpmath_derivative(self):
        # exact derivative of the case formulas through softmax, 40 digits
        rng = np.random.default_rng(3)
        for kind in LossKind:
            for _ in range(5):
                z, g = rng.uniform(-5, 5, 3), int(rng.integers(3))
                lam, w = rng.uniform(0, 1), tuple(rng.uniform(0.1, 10, 3))
                got = loss_gradient(LossSpec(kind, lam, w), onehot(g), z).grad_z
                for j in range(3):
                    def f(t, j=j):
                        zz = [mpmath.mpf(v) for v in z]
                        zz[j] = t
                        return case_formula(kind.value, lam, w, g, mp_softmax(zz))
                    expected = float(mpmath.diff(f, mpmath.mpf(z[j])))
                    assert got[j] == pytest.approx(expected, rel=1e-10, abs=1e-14)

    @given(logits, golds)
    def test_ce_gradient_sums_to_zero(self, z, g):
        assert abs(loss_gradient(LossSpec("ce"), onehot(g), z).grad_z.sum()) < 1e-12

    def test_extreme_logits_stay_finite(self):
        res = loss_gradient(LossSpec("ova", 1.0, (1, 2, 3)), [0, 1, 0], [800.0, -800.0, 0.0])
        assert np.isfinite(res.value) and np.all(np.isfinite(res.grad_z))
        assert res.saturated

    def test_not_saturated_normally(self):
        assert not loss_gradient(LossSpec("ova", 1.0), [0, 1, 0], [1.0, 2.0, 3.0]).saturated


class TestBatch:
    spec = LossSpec("srn", 0.3, (1.0, 2.0, 0.5))

    def test_single_sample(self):
        z = np.array([0.3, -1.2, 2.0])
        one = loss_gradient(self.spec, [0, 1, 0], z)
        batch = batch_loss(self.spec, [[0, 1, 0]], [z])
        assert batch.value == one.value
        np.testing.assert_array_equal(batch.grad_z[0], one.grad_z)

    def test_duplicate_samples(self):
        z = np.array([0.3, -1.2, 2.0])
        one = loss_gradient(self.spec, [0, 0, 1], z)
        batch = batch_loss(self.spec, [(np.array([0, 0, 1]), z)] * 2)
        assert batch.value == pytest.approx(one.value, rel=1e-15)
        np.testing.assert_allclose(batch.grad_z.sum(axis=0), one.grad_z, rtol=1e-15)

    def test_uniform_ce(self):
        res = batch_loss(LossSpec("ce"), [[1, 0, 0], [0, 1, 0]], [[0, 0, 0], [0, 0, 0]])
        assert res.value == pytest.approx(1.0986122887, abs=1e-10)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            batch_loss(LossSpec(), [], [])
        with pytest.raises(InvalidInputError):
            batch_loss(LossSpec(), [])

    def test_mean_of_samples(self):
        rng = np.random.default_rng(4)
        Z = rng.uniform(-3, 3, (7, 3))
        Y = np.eye(3)[rng.integers(0, 3, 7)]
        res = batch_loss(self.spec, Y, Z)
        singles = [loss_gradient(self.spec, y, z) for y, z in zip(Y, Z)]
        assert res.value == pytest.approx(np.mean([s.value for s in singles]), rel=1e-14)
        np.testing.assert_allclose(res.grad_z * 7, [s.grad_z for s in singles], rtol=1e-13)


class TestSpec:
    def test_negative_lambda(self):
        with pytest.raises(InvalidInputError):
            LossSpec("ova", -0.1)

    @pytest.mark.parametrize("weights", [(1, 1), (1, 0, 1), (1, np.inf, 1), (-1, 1, 1)])
    def test_bad_weights(self, weights):
        with pytest.raises(InvalidInputError):
            LossSpec("ce", 0.0, weights)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            LossSpec("focal")
