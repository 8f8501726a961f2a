import mpmath
import numpy as np
import pytest

from paritygnn.nn import autodiff as ad
from paritygnn.nn.autodiff import Tape, UnregisteredParameter
from paritygnn.nn.checkpoint import CheckpointError, dump_params, load_params
from paritygnn.nn.gradcheck import grad_check
from paritygnn.nn.layers import cross_entropy, dropout, linear_forward, relu, softmax_rows
from paritygnn.nn.optim import AdamState, adam_step


class TestLinear:
    def test_identity(self):
        x = np.array([[1.0, -2.0], [3.0, 4.0]])
        assert np.array_equal(linear_forward(x, np.eye(2), np.zeros((1, 2))).value, x)

    def test_hand_example(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        out = linear_forward(np.array([[1.0, 2.0]]), a, np.zeros((1, 3))).value
        assert np.array_equal(out, [[1.0, 2.0, 3.0]])

    def test_bias_only(self):
        b = np.array([[0.5, -1.0, 2.0]])
        out = linear_forward(np.zeros((4, 2)), np.ones((3, 2)), b).value
        assert np.array_equal(out, np.repeat(b, 4, axis=0))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            linear_forward(np.zeros((1, 3)), np.zeros((2, 2)), np.zeros((1, 2)))


class TestRelu:
    def test_negative(self):
        assert np.array_equal(relu(-np.ones((2, 3))).value, np.zeros((2, 3)))

    def test_positive(self):
        x = np.array([[0.5, 2.0, 7.0]])
        assert np.array_equal(relu(x).value, x)

    def test_mixed(self):
        assert np.array_equal(relu(np.array([[-1.0, 0.0, 2.0]])).value, [[0.0, 0.0, 2.0]])


class TestSoftmax:
    def test_symmetric_pair(self):
        assert np.allclose(softmax_rows(np.zeros((1, 2))).value, [[0.5, 0.5]])

    def test_constant_row(self):
        assert np.allclose(softmax_rows(np.full((1, 3), 7.0)).value, [[1 / 3] * 3])

    def test_large_logits_against_extended_precision(self):
        out = softmax_rows(np.array([[1000.0, 0.0]])).value
        mpmath.mp.dps = 50
        denom = mpmath.exp(1000) + 1
        expected = [float(mpmath.exp(1000) / denom), float(1 / denom)]
        assert np.all(np.isfinite(out))
        assert out[0, 0] == pytest.approx(expected[0], rel=1e-15)
        assert out[0, 1] == pytest.approx(expected[1], rel=1e-12, abs=1e-300)

    def test_rows_normalized(self):
        x = np.random.default_rng(0).normal(scale=30, size=(50, 4))
        out = softmax_rows(x).value
        assert np.all(out > 0)
        assert np.max(np.abs(out.sum(axis=1) - 1)) < 1e-12


class TestDropout:
    def test_infer_identity(self):
        x = np.random.default_rng(1).normal(size=(5, 5))
        assert np.array_equal(dropout(x, 0.9, train=False).value, x)

    def test_zero_rate(self):
        x = np.ones((3, 3))
        assert np.array_equal(dropout(x, 0.0, True, np.random.default_rng(0)).value, x)

    def test_inverted_expectation(self):
        out = dropout(np.ones((1000, 1000)), 0.5, True, np.random.default_rng(2)).value
        assert abs(out.mean() - 1) < 0.01
        assert set(np.unique(out)) == {0.0, 2.0}

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            dropout(np.ones(2), 1.0, True, np.random.default_rng(0))


class TestCrossEntropy:
    def test_perfect(self):
        t = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert cross_entropy(t, t).value == 0

    def test_uniform(self):
        loss = cross_entropy(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]])).value
        assert loss == pytest.approx(np.log(2), rel=1e-12)
        assert loss == pytest.approx(0.6931, abs=1e-4)

    def test_row_permutation(self):
        rng = np.random.default_rng(3)
        p = softmax_rows(rng.normal(size=(6, 2))).value
        t = np.eye(2)[rng.integers(0, 2, 6)]
        perm = rng.permutation(6)
        assert cross_entropy(p, t).value == pytest.approx(cross_entropy(p[perm], t[perm]).value)

    def test_clamped_log_finite(self):
        loss = cross_entropy(np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]])).value
        assert np.isfinite(loss) and loss == pytest.approx(-np.log(1e-12))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            cross_entropy(np.ones((2, 2)) / 2, np.ones((3, 2)))


class TestBackward:
    def test_identity_gradient(self):
        tape = Tape()
        x = tape.param("x", 3.0)
        assert tape.backward(x)["x"] == 1.0

    def test_relu_flat_region(self):
        tape = Tape()
        x = tape.param("x", [[-2.0]])
        assert tape.backward(ad.total(relu(x)))["x"][0, 0] == 0.0

    def test_unregistered(self):
        tape = Tape()
        x = tape.param("x", [[1.0]])
        grads = tape.backward(ad.total(x))
        with pytest.raises(UnregisteredParameter):
            grads["y"]

    def test_non_scalar_rejected(self):
        tape = Tape()
        with pytest.raises(ValueError):
            tape.backward(tape.param("x", np.ones(3)))

    def test_unused_parameter_zero(self):
        tape = Tape()
        x = tape.param("x", [[1.0]])
        tape.param("unused", np.ones((2, 2)))
        assert np.array_equal(tape.backward(ad.total(x))["unused"], np.zeros((2, 2)))

    def test_composed_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(6, 4))
        target = np.eye(3)[rng.integers(0, 3, 6)]
        params = {"A": rng.normal(size=(3, 4)), "b": rng.normal(size=(1, 3))}

        def fn(tape, p):
            return cross_entropy(softmax_rows(relu(linear_forward(x, p["A"], p["b"]))), target)

        for report in grad_check(fn, params).values():
            assert report.checked > 0
            assert report.max_rel_error < 1e-4

    def test_graph_ops_match_finite_differences(self):
        rng = np.random.default_rng(5)
        rows = np.array([0, 0, 1, 2, 2, 2])
        cols = np.array([0, 1, 1, 0, 1, 2])
        params = {"e": rng.normal(size=6), "x": rng.normal(size=(3, 2)), "s": rng.normal(size=(3, 2))}
        weights = rng.normal(size=(3, 2))

        def fn(tape, p):
            alpha = ad.segment_softmax(ad.leaky_relu(p["e"]), rows, 3)
            gathered = ad.add(ad.take(p["s"], (rows, 0)), ad.take(p["s"], (cols, 1)))
            out = ad.sparse_aggregate(ad.add(alpha, gathered), p["x"], rows, cols, 3)
            return ad.total(ad.matmul_t(out, weights))

        for report in grad_check(fn, params).values():
            assert report.max_rel_error < 1e-6

    def test_segment_softmax_sums_to_one(self):
        seg = np.array([0, 0, 1, 1, 1, 2])
        alpha = ad.segment_softmax(np.array([1.0, 2.0, 500.0, 0.0, -3.0, 4.0]), seg, 3).value
        assert np.allclose(np.bincount(seg, weights=alpha), 1.0)


class TestAdam:
    def test_zero_gradient_identity(self):
        params = {"w": np.array([[1.0, -2.0]])}
        before = params["w"].copy()
        state = AdamState()
        for _ in range(3):
            adam_step(params, {"w": np.zeros((1, 2))}, state)
        assert np.array_equal(params["w"], before) and state.t == 3

    def test_first_step_magnitude(self):
        params = {"w": np.array([5.0])}
        adam_step(params, {"w": np.array([0.37])}, AdamState(lr=1e-3))
        # m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        assert 5.0 - params["w"][0] == pytest.approx(1e-3 * 0.37 / (0.37 + 1e-8), rel=1e-12)

    def test_quadratic_decreases(self):
        params = {"w": np.array([2.0])}
        state = AdamState(lr=0.1)
        losses = []
        for _ in range(20):
            losses.append(float(params["w"][0] ** 2))
            adam_step(params, {"w": 2 * params["w"]}, state)
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, AdamState())


class TestGradCheck:
    def test_linear_layer(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(5, 4))
        params = {"A": rng.normal(size=(3, 4)), "b": rng.normal(size=(1, 3))}
        reports = grad_check(lambda t, p: ad.total(linear_forward(x, p["A"], p["b"])), params)
        assert all(r.max_rel_error < 1e-6 for r in reports.values())

    def test_samples_at_least_fifty(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(3, 20))
        params = {"A": rng.normal(size=(10, 20)), "b": np.zeros((1, 10))}
        reports = grad_check(lambda t, p: ad.total(linear_forward(x, p["A"], p["b"])), params)
        assert reports["A"].checked == 50 and reports["b"].checked == 10

    def test_relu_kink_excluded(self):
        params = {"x": np.array([[0.0, 1.0, -1.0]])}
        report = grad_check(lambda t, p: ad.total(relu(p["x"])), params)["x"]
        assert report.skipped == 1 and report.checked == 2
        assert report.max_rel_error < 1e-8


class TestCheckpoint:
    def test_bit_exact_round_trip(self):
        rng = np.random.default_rng(9)
        tensors = {"a": rng.normal(size=(3, 4)), "b": np.array([[np.pi, -0.0, 1e-300]])}
        loaded, meta = load_params(dump_params(tensors, {"k": [1, 2]}))
        assert meta == {"k": [1, 2]}
        for name in tensors:
            assert loaded[name].tobytes() == tensors[name].tobytes()

    def test_deterministic_bytes(self):
        tensors = {"a": np.arange(6.0).reshape(2, 3)}
        assert dump_params(tensors, {"x": 1}) == dump_params(tensors, {"x": 1})

    def test_corrupt(self):
        with pytest.raises(CheckpointError):
            load_params(b"nope")
        data = dump_params({"a": np.ones(3)})
        with pytest.raises(CheckpointError):
            load_params(data[:-8])


def test_relative_error_floor():
    from paritygnn.nn.gradcheck import relative_error

    assert relative_error(1.0, 1.0 + 1e-6) == pytest.approx(1e-6, rel=1e-3)
    assert relative_error(0.0, 3e-11) == pytest.approx(3e-5)
    assert relative_error(0.0, 1e-6) == 1.0
