import math

import numpy as np
import pytest

from core_nn.errors import LabelError
from losses import (
    bce_mart,
    cross_entropy,
    cw_margin,
    is_simplex,
    kl_div,
    mart_loss,
    predict,
    scaled_ce,
    softmax,
    trades_loss,
)


def _probs(logits):
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


class TestSoftmax:
    def test_symmetric_logits(self):
        np.testing.assert_allclose(softmax([0.0, 0.0]).data, [0.5, 0.5])

    def test_large_logits_do_not_overflow(self):
        probs = softmax([1000.0, 0.0]).data
        assert np.all(np.isfinite(probs))
        assert probs[0] == pytest.approx(1.0)
        assert probs[1] == pytest.approx(0.0, abs=1e-300)

    def test_shift_invariance(self):
        logits = np.array([0.3, -1.2, 2.5])
        np.testing.assert_allclose(softmax(logits).data, softmax(logits + 17.0).data, rtol=1e-12)

    def test_output_is_on_the_simplex(self):
        assert is_simplex(softmax(np.random.default_rng(0).normal(size=7)).data)
        assert not is_simplex([0.5, 0.6])


class TestCrossEntropy:
    def test_uniform_over_ten_classes(self):
        assert float(cross_entropy(np.zeros(10), 3)) == pytest.approx(math.log(10))

    def test_confident_correct_prediction(self):
        assert float(cross_entropy([50.0, 0.0], 0)) == pytest.approx(0.0, abs=1e-20)

    def test_matches_direct_recomputation(self):
        logits = np.random.default_rng(1).normal(size=5)
        assert float(cross_entropy(logits, 2)) == pytest.approx(-math.log(_probs(logits)[2]), rel=1e-12)

    def test_batch_gives_one_value_per_row(self):
        values = cross_entropy(np.zeros((4, 3)), np.array([0, 1, 2, 0])).data
        np.testing.assert_allclose(values, np.full(4, math.log(3)))

    @pytest.mark.parametrize('label', [-1, 2])
    def test_out_of_range_label(self, label):
        with pytest.raises(LabelError):
            cross_entropy([0.0, 1.0], label)

    def test_saturated_probability_stays_finite(self):
        assert np.isfinite(float(cross_entropy([0.0, 2000.0], 0)))


class TestScaledCrossEntropy:
    def test_even_odds_is_one_bit(self):
        assert float(scaled_ce([0.0, 0.0], 1)) == pytest.approx(1.0, rel=1e-15)

    def test_quarter_probability_is_two_bits(self):
        logits = np.log([0.25, 0.75])
        assert float(scaled_ce(logits, 0)) == pytest.approx(2.0, rel=1e-12)

    def test_misclassification_exceeds_one(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            logits = rng.normal(size=4) * 3
            y = int(rng.integers(0, 4))
            if int(predict(logits)) != y and logits.max() > logits[y]:
                assert float(scaled_ce(logits, y)) > 1.0


class TestKl:
    def test_divergence_from_itself_is_zero(self):
        logits = np.array([0.4, -0.3, 1.0])
        assert float(kl_div(_probs(logits), logits)) == pytest.approx(0.0, abs=1e-15)

    def test_degenerate_reference(self):
        assert float(kl_div([1.0, 0.0], [0.0, 0.0])) == pytest.approx(math.log(2))

    def test_matches_term_by_term_recomputation(self):
        rng = np.random.default_rng(3)
        p_ref = rng.dirichlet(np.ones(4))
        logits = rng.normal(size=4)
        q = _probs(logits)
        expected = float(np.sum(p_ref * np.log(p_ref / q)))
        value = float(kl_div(p_ref, logits))
        assert value >= 0.0
        assert value == pytest.approx(expected, rel=1e-10)


class TestCwMargin:
    @pytest.mark.parametrize('logits, y, kappa, expected', [
        ([10.0, 0.0, 0.0], 0, 0.0, 0.0),
        ([10.0, 0.0, 0.0], 0, 5.0, -5.0),
        ([0.0, 3.0, 1.0], 0, 0.0, 3.0),
    ])
    def test_reference_values(self, logits, y, kappa, expected):
        assert float(cw_margin(logits, y, kappa)) == pytest.approx(expected)

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            cw_margin([0.0, 1.0], 0, -1.0)


class TestMart:
    def test_binary_even_odds(self):
        assert float(bce_mart([0.0, 0.0], 0)) == pytest.approx(2 * math.log(2))

    def test_confident_prediction_has_no_loss(self):
        assert float(bce_mart([40.0, 0.0, 0.0], 0)) == pytest.approx(0.0, abs=1e-15)

    def test_never_below_cross_entropy(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            logits, y = rng.normal(size=3), int(rng.integers(0, 3))
            assert float(bce_mart(logits, y)) >= float(cross_entropy(logits, y))

    def test_zero_beta_reduces_to_bce(self):
        adv, nat = np.array([0.1, 0.9]), np.array([1.0, -1.0])
        assert float(mart_loss(adv, nat, 0, 0.0)) == pytest.approx(float(bce_mart(adv, 0)))

    def test_identical_logits_reduce_to_bce(self):
        logits = np.array([0.2, 0.5, -0.3])
        assert float(mart_loss(logits, logits, 1, 6.0)) == pytest.approx(float(bce_mart(logits, 1)), abs=1e-14)

    def test_certain_natural_prediction_silences_regularizer(self):
        adv, nat = np.array([0.0, 2.0]), np.array([800.0, 0.0])
        assert float(mart_loss(adv, nat, 0, 6.0)) == pytest.approx(float(bce_mart(adv, 0)), abs=1e-12)

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            mart_loss([0.0, 1.0], [0.0, 1.0], 0, -0.1)


class TestTrades:
    def test_zero_beta_is_natural_cross_entropy(self):
        nat, adv = np.array([0.5, -0.5]), np.array([-2.0, 2.0])
        assert float(trades_loss(nat, adv, 0, 0.0)) == pytest.approx(float(cross_entropy(nat, 0)))

    def test_identical_logits_leave_cross_entropy(self):
        logits = np.array([0.3, 0.1, -0.2])
        assert float(trades_loss(logits, logits, 2, 6.0)) == pytest.approx(float(cross_entropy(logits, 2)), abs=1e-14)

    def test_matches_independent_recomputation(self):
        nat, adv = np.array([1.0, 0.0, -1.0]), np.array([0.0, 0.5, 0.2])
        p, q = _probs(nat), _probs(adv)
        expected = -math.log(p[0]) + 6.0 * float(np.sum(p * np.log(p / q)))
        assert float(trades_loss(nat, adv, 0, 6.0)) == pytest.approx(expected, rel=1e-12)

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            trades_loss([0.0, 1.0], [0.0, 1.0], 0, -1.0)


def test_prediction_ties_resolve_to_smallest_index():
    np.testing.assert_array_equal(predict([[1.0, 1.0], [0.0, 2.0]]), [0, 1])
