import numpy as np
import pytest

from core_nn import tensor as ops
from core_nn.errors import ShapeError
from core_nn.gradcheck import finite_diff, relative_error
from core_nn.tensor import PROB_FLOOR, Tape, Tensor


def test_unwatched_ops_compute_values_only():
    out = ops.add(Tensor([1.0, 2.0]), [3.0, 4.0])
    np.testing.assert_array_equal(out.data, [4.0, 6.0])
    assert out.tape is None


def test_linear_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    x0, w0, b0 = rng.normal(size=(4, 3)), rng.normal(size=(2, 3)), rng.normal(size=2)

    def value(x, w, b):
        return float(np.sum(np.sin(x @ w.T + b)))

    tape = Tape()
    x, w, b = tape.watch(x0), tape.watch(w0), tape.watch(b0)
    z = ops.linear(x, w, b)
    # sum(z * cos(z0)) has the same first derivative as sum(sin(z)) at z0
    loss = ops.reduce_sum(ops.mul(z, np.cos(z.data)))
    gx, gw, gb = tape.gradient(loss, [x, w, b])

    assert relative_error(gx, finite_diff(lambda v: value(v, w0, b0), x0)) < 1e-6
    assert relative_error(gw, finite_diff(lambda v: value(x0, v, b0), w0)) < 1e-6
    assert relative_error(gb, finite_diff(lambda v: value(x0, w0, v), b0)) < 1e-6


def test_relu_derivative_at_zero_is_zero():
    tape = Tape()
    a = tape.watch([-1.0, 0.0, 2.0])
    (grad,) = tape.gradient(ops.reduce_sum(ops.relu(a)), [a])
    np.testing.assert_array_equal(grad, [0.0, 0.0, 1.0])


def test_gradient_is_repeatable_and_leaves_inputs_untouched():
    values = np.array([0.3, -1.2, 2.0])
    tape = Tape()
    a = tape.watch(values)
    loss = ops.reduce_sum(ops.mul(ops.exp(a), a))
    first = tape.gradient(loss, [a])[0]
    second = tape.gradient(loss, [a])[0]
    np.testing.assert_array_equal(first, second)
    np.testing.assert_array_equal(values, [0.3, -1.2, 2.0])


def test_unreached_source_gets_zero_gradient():
    tape = Tape()
    a, b = tape.watch([1.0, 2.0]), tape.watch([5.0])
    (ga, gb) = tape.gradient(ops.reduce_sum(a), [a, b])
    np.testing.assert_array_equal(ga, [1.0, 1.0])
    np.testing.assert_array_equal(gb, [0.0])


def test_scaling_the_loss_scales_the_gradient():
    rng = np.random.default_rng(1)
    tape = Tape()
    a = tape.watch(rng.normal(size=5))
    loss = ops.reduce_sum(ops.log_softmax(a) * a)
    (base,) = tape.gradient(loss, [a])
    (scaled,) = tape.gradient(ops.mul(loss, -3.5), [a])
    np.testing.assert_allclose(scaled, -3.5 * base, rtol=1e-14, atol=0)


def test_log_floor_keeps_values_finite():
    out = ops.log(Tensor([0.0, 1.0]))
    assert out.data[0] == pytest.approx(np.log(PROB_FLOOR))
    assert out.data[1] == 0.0


def test_masked_max_breaks_ties_toward_smallest_index():
    tape = Tape()
    a = tape.watch([1.0, 3.0, 3.0])
    out = ops.masked_max(a, 0)
    (grad,) = tape.gradient(out, [a])
    assert out.item() == 3.0
    np.testing.assert_array_equal(grad, [0.0, 1.0, 0.0])


def test_take_selects_one_entry_per_row():
    out = ops.take(Tensor([[1.0, 2.0], [3.0, 4.0]]), np.array([1, 0]))
    np.testing.assert_array_equal(out.data, [2.0, 3.0])


def test_gradient_requires_scalar_target():
    tape = Tape()
    a = tape.watch([1.0, 2.0])
    with pytest.raises(ShapeError):
        tape.gradient(ops.exp(a), [a])


def test_linear_rejects_width_mismatch():
    with pytest.raises(ShapeError):
        ops.linear(Tensor([1.0, 2.0, 3.0]), Tensor(np.zeros((2, 2))), Tensor(np.zeros(2)))
