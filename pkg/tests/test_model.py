"""MLP forward/backward, SGD, evaluation, and checkpoint round-trips."""

import numpy as np
import pytest

from rectidistill import model
from rectidistill.errors import (
    CheckpointParseError,
    InvalidArchitectureError,
    InvalidInputError,
    TrainingDivergedError,
)
from rectidistill.numerics import finite_difference_gradient, softmax


def naive_forward(params, x):
    """Triple-loop reference forward pass."""
    h = list(x)
    for li, (w, b) in enumerate(zip(params.weights, params.biases)):
        out = []
        for r in range(w.shape[0]):
            acc = b[r]
            for c in range(w.shape[1]):
                acc += w[r][c] * h[c]
            if li < len(params.weights) - 1:
                acc = max(acc, 0.0)
            out.append(acc)
        h = out
    return np.array(h)


class TestInit:
    def test_same_seed_is_bit_identical(self):
        a = model.init([2, 4, 3], seed=9)
        b = model.init([2, 4, 3], seed=9)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_shapes(self):
        p = model.init([2, 4, 3], seed=0)
        assert [w.shape for w in p.weights] == [(4, 2), (3, 4)]
        assert [b.shape for b in p.biases] == [(4,), (3,)]
        assert p.dims == [2, 4, 3]

    def test_glorot_bound_holds_over_many_draws(self):
        p = model.init([10, 100, 10], seed=3)  # 1000 + 1000 weights
        for w in p.weights:
            fan_out, fan_in = w.shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(w) <= bound)

    def test_biases_start_at_zero(self):
        p = model.init([3, 5, 2], seed=1)
        for b in p.biases:
            assert np.all(b == 0.0)

    def test_invalid_dims_raise(self):
        with pytest.raises(InvalidArchitectureError):
            model.init([], seed=0)
        with pytest.raises(InvalidArchitectureError):
            model.init([3], seed=0)
        with pytest.raises(InvalidArchitectureError):
            model.init([3, 0, 2], seed=0)


class TestForward:
    def test_zero_params_give_zero_logits(self):
        p = model.init([2, 4, 3], seed=0)
        for w in p.weights:
            w[:] = 0.0
        np.testing.assert_array_equal(model.forward(p, [1.0, 2.0]), np.zeros(3))

    def test_identity_single_layer(self):
        p = model.MlpParams(weights=[np.eye(3)], biases=[np.zeros(3)])
        np.testing.assert_array_equal(model.forward(p, [1.0, -2.0, 3.0]), [1.0, -2.0, 3.0])

    def test_matches_naive_oracle(self):
        p = model.init([3, 5, 4], seed=11)
        rng = np.random.default_rng(12)
        for _ in range(10):
            x = rng.normal(size=3)
            np.testing.assert_allclose(model.forward(p, x), naive_forward(p, x), atol=1e-12)

    def test_batch_agrees_with_single(self):
        p = model.init([2, 6, 3], seed=4)
        x = np.random.default_rng(5).normal(size=(7, 2))
        batch = model.forward(p, x)
        for i in range(7):
            # BLAS may pick different kernels for 7-row vs 1-row matmuls
            np.testing.assert_allclose(batch[i], model.forward(p, x[i]), atol=1e-12)

    def test_dimension_mismatch_raises(self):
        p = model.init([2, 3], seed=0)
        with pytest.raises(InvalidInputError):
            model.forward(p, [1.0, 2.0, 3.0])


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self):
        p = model.init([2, 4, 3], seed=0)
        grads = model.backward(p, [1.0, 2.0], np.zeros(3))
        for gw, gb in grads:
            assert np.all(gw == 0.0) and np.all(gb == 0.0)

    def test_linear_layer_is_outer_product(self):
        p = model.MlpParams(
            weights=[np.random.default_rng(1).normal(size=(3, 2))], biases=[np.zeros(3)]
        )
        x = np.array([1.5, -0.5])
        up = np.array([0.2, -0.1, 0.7])
        (gw, gb), = model.backward(p, x, up)
        np.testing.assert_allclose(gw, np.outer(up, x), atol=1e-15)
        np.testing.assert_allclose(gb, up, atol=1e-15)

    def test_full_pipeline_matches_finite_differences(self):
        # CE(softmax) loss through a 2-4-3 net, every parameter checked
        p = model.init([2, 4, 3], seed=7)
        rng = np.random.default_rng(8)
        x = rng.normal(size=(3, 2))
        y = np.array([0, 2, 1])

        def loss_at(flat):
            q = model.unflatten_params(p, flat)
            logits = model.forward(q, x)
            return sum(
                -np.log(softmax(logits[i])[y[i]]) for i in range(3)
            ) / 3.0

        logits = model.forward(p, x)
        probs = np.array([softmax(row) for row in logits])
        upstream = probs.copy()
        upstream[np.arange(3), y] -= 1.0
        grads = model.backward(p, x, upstream / 3.0)
        flat_analytic = np.concatenate(
            [a.ravel() for gw, gb in grads for a in (gw, gb)]
        )
        fd = finite_difference_gradient(loss_at, model.flatten_params(p))
        assert np.max(np.abs(flat_analytic - fd)) <= 1e-5


class TestSgd:
    def test_vanilla_step(self):
        p = model.init([2, 3], seed=0)
        w0 = p.weights[0].copy()
        grads = [(np.ones((3, 2)), np.ones(3))]
        model.sgd_step(p, grads, model.init_velocity(p), lr=0.1, momentum=0.0)
        np.testing.assert_allclose(p.weights[0], w0 - 0.1, atol=1e-15)

    def test_zero_grads_leave_params_unchanged(self):
        p = model.init([2, 3], seed=0)
        w0 = p.weights[0].copy()
        grads = [(np.zeros((3, 2)), np.zeros(3))]
        model.sgd_step(p, grads, model.init_velocity(p), lr=0.1, momentum=0.9)
        assert np.array_equal(p.weights[0], w0)

    def test_two_momentum_steps_match_hand_unrolled_recurrence(self):
        p = model.init([2, 2], seed=2)
        w0 = p.weights[0].copy()
        rng = np.random.default_rng(3)
        g1, g2 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
        vel = model.init_velocity(p)
        model.sgd_step(p, [(g1, np.zeros(2))], vel, lr=0.05, momentum=0.9)
        model.sgd_step(p, [(g2, np.zeros(2))], vel, lr=0.05, momentum=0.9)
        # v1 = g1; v2 = 0.9*g1 + g2; w = w0 - lr*(v1 + v2)
        expected = w0 - 0.05 * (g1 + 0.9 * g1 + g2)
        np.testing.assert_allclose(p.weights[0], expected, atol=1e-15)

    def test_nonfinite_gradients_raise(self):
        p = model.init([2, 2], seed=0)
        bad = [(np.full((2, 2), np.nan), np.zeros(2))]
        with pytest.raises(TrainingDivergedError):
            model.sgd_step(p, bad, model.init_velocity(p), lr=0.1)


class TestEvaluate:
    def test_oracle_labels_as_logits(self):
        p = model.MlpParams(weights=[np.eye(3)], biases=[np.zeros(3)])
        feats = np.eye(3)
        acc, _ = model.evaluate(p, feats, np.array([0, 1, 2]))
        assert acc == 1.0

    def test_constant_logits_tie_rule(self):
        # ties go to class 0, so accuracy equals the class-0 frequency
        p = model.MlpParams(weights=[np.zeros((4, 2))], biases=[np.zeros(4)])
        feats = np.random.default_rng(0).normal(size=(40, 2))
        labels = np.tile(np.arange(4), 10)
        acc, _ = model.evaluate(p, feats, labels)
        assert acc == 0.25

    def test_matches_counting_oracle(self):
        p = model.init([2, 5, 3], seed=6)
        rng = np.random.default_rng(7)
        feats = rng.normal(size=(100, 2))
        labels = rng.integers(0, 3, size=100)
        acc, _ = model.evaluate(p, feats, labels)
        logits = model.forward(p, feats)
        hits = sum(1 for i in range(100) if int(np.argmax(logits[i])) == labels[i])
        assert acc == hits / 100

    def test_empty_dataset_raises(self):
        p = model.init([2, 3], seed=0)
        with pytest.raises(InvalidInputError):
            model.evaluate(p, np.empty((0, 2)), np.empty(0, dtype=int))


class TestCheckpoint:
    def test_round_trip_is_exact(self, tmp_path):
        p = model.init([2, 8, 4], seed=13)
        path = tmp_path / "net.ckpt"
        model.save_checkpoint(p, path)
        q = model.load_checkpoint(path)
        for wa, wb in zip(p.weights, q.weights):
            assert np.array_equal(wa, wb)
        for ba, bb in zip(p.biases, q.biases):
            assert np.array_equal(ba, bb)

    def test_round_trip_preserves_evaluation(self, tmp_path):
        p = model.init([2, 8, 4], seed=13)
        feats = np.random.default_rng(14).normal(size=(50, 2))
        labels = np.random.default_rng(15).integers(0, 4, size=50)
        path = tmp_path / "net.ckpt"
        model.save_checkpoint(p, path)
        q = model.load_checkpoint(path)
        assert model.evaluate(p, feats, labels) == model.evaluate(q, feats, labels)

    def test_truncated_file_raises_with_no_partial_model(self, tmp_path):
        p = model.init([2, 8, 4], seed=13)
        path = tmp_path / "net.ckpt"
        model.save_checkpoint(p, path)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(CheckpointParseError):
            model.load_checkpoint(path)

    def test_hand_written_fixture(self, tmp_path):
        path = tmp_path / "tiny.ckpt"
        path.write_text(
            "rectidistill-mlp v1\n"
            "layers 1\n"
            "layer 2 2\n"
            "1.5 -2.25\n"
            "0.125 3.0\n"
            "0.5 -0.5\n"
        )
        p = model.load_checkpoint(path)
        np.testing.assert_array_equal(p.weights[0], [[1.5, -2.25], [0.125, 3.0]])
        np.testing.assert_array_equal(p.biases[0], [0.5, -0.5])

    def test_bad_header_raises(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text("not a checkpoint\n")
        with pytest.raises(CheckpointParseError, match=":1:"):
            model.load_checkpoint(path)

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text(
            "rectidistill-mlp v1\nlayers 1\nlayer 2 2\n1.0 oops\n0.0 0.0\n0.0 0.0\n"
        )
        with pytest.raises(CheckpointParseError, match=":4:"):
            model.load_checkpoint(path)
