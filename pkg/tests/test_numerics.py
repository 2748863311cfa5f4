import json
import math
import os
import shutil
import tempfile
import unittest

import numpy as np

from semgrasp.errors import CheckpointError, ModelError, NonFiniteError, ShapeError
from semgrasp.numerics import (
    CHECKPOINT_FORMAT,
    AdamState,
    Parameter,
    adam_step,
    dense_backward,
    dense_forward,
    embedding_backward,
    embedding_lookup,
    load_checkpoint,
    masked_mean_pool,
    masked_mean_pool_backward,
    mean_pool,
    mean_pool_backward,
    numerical_gradient,
    relative_error,
    relu_backward,
    relu_forward,
    save_checkpoint,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_backward,
)

CONFIGURATIONS = 100


class DenseTestCase(unittest.TestCase):
    def test_forward(self):
        W = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        self.assertTrue(np.array_equal(dense_forward(W, np.array([0.5, -0.5]), np.array([1.0, 0.0, 1.0])), [6.5, 7.5]))

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            dense_forward(np.zeros((3, 2)), np.zeros(2), np.zeros(4))
        with self.assertRaises(ShapeError):
            dense_forward(np.zeros((3, 2)), np.zeros(3), np.zeros(3))
        with self.assertRaises(ShapeError):
            dense_backward(np.zeros((3, 2)), np.zeros(3), np.zeros(3))

    def test_gradient_5x4(self):
        rng = np.random.default_rng(0)
        W, b, x = rng.normal(size=(5, 4)), rng.normal(size=4), rng.normal(size=5)
        weights = rng.normal(size=4)
        loss = lambda: float(np.dot(dense_forward(W, b, x), weights))
        grad_W, grad_b, grad_x = dense_backward(W, x, weights)
        self.assertLess(relative_error(grad_W, numerical_gradient(loss, W)), 1e-5)
        self.assertLess(relative_error(grad_b, numerical_gradient(loss, b)), 1e-5)
        self.assertLess(relative_error(grad_x, numerical_gradient(loss, x)), 1e-5)

    def test_gradient_random_batches(self):
        rng = np.random.default_rng(1)
        for _ in range(CONFIGURATIONS):
            batch, inputs, outputs = rng.integers(1, 4), rng.integers(1, 6), rng.integers(1, 5)
            W, b, x = rng.normal(size=(inputs, outputs)), rng.normal(size=outputs), rng.normal(size=(batch, inputs))
            weights = rng.normal(size=(batch, outputs))
            loss = lambda: float(np.sum(dense_forward(W, b, x) * weights))
            grad_W, grad_b, grad_x = dense_backward(W, x, weights)
            self.assertLess(relative_error(grad_W, numerical_gradient(loss, W)), 1e-4)
            self.assertLess(relative_error(grad_b, numerical_gradient(loss, b)), 1e-4)
            self.assertLess(relative_error(grad_x, numerical_gradient(loss, x)), 1e-4)


class ReluTestCase(unittest.TestCase):
    def test_forward_and_kink(self):
        x = np.array([-1.0, 0.0, 2.0])
        self.assertTrue(np.array_equal(relu_forward(x), [0.0, 0.0, 2.0]))
        self.assertTrue(np.array_equal(relu_backward(x, np.ones(3)), [0.0, 0.0, 1.0]))

    def test_gradient_away_from_kink(self):
        rng = np.random.default_rng(2)
        for _ in range(CONFIGURATIONS):
            x = rng.normal(size=6)
            x[np.abs(x) < 1e-3] = 0.5
            weights = rng.normal(size=6)
            loss = lambda: float(np.dot(relu_forward(x), weights))
            self.assertLess(relative_error(relu_backward(x, weights), numerical_gradient(loss, x)), 1e-4)


class EmbeddingTestCase(unittest.TestCase):
    def test_lookup(self):
        table = np.arange(12.0).reshape(4, 3)
        self.assertTrue(np.array_equal(embedding_lookup(table, [2, 0]), [[6.0, 7.0, 8.0], [0.0, 1.0, 2.0]]))

    def test_out_of_range(self):
        with self.assertRaises(ModelError):
            embedding_lookup(np.zeros((4, 3)), [4])
        with self.assertRaises(ModelError):
            embedding_lookup(np.zeros((4, 3)), [-1])

    def test_repeated_indices_accumulate(self):
        grad = embedding_backward((3, 2), [1, 1, 2], np.ones((3, 2)))
        self.assertTrue(np.array_equal(grad, [[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]]))

    def test_gradient_6x3(self):
        rng = np.random.default_rng(3)
        for _ in range(CONFIGURATIONS):
            table = rng.normal(size=(6, 3))
            indices = rng.integers(0, 6, size=4)
            weights = rng.normal(size=(4, 3))
            loss = lambda: float(np.sum(embedding_lookup(table, indices) * weights))
            analytic = embedding_backward(table.shape, indices, weights)
            self.assertLess(relative_error(analytic, numerical_gradient(loss, table)), 1e-5)


class PoolingTestCase(unittest.TestCase):
    def test_mean(self):
        self.assertTrue(np.array_equal(mean_pool([[1.0, 2.0], [3.0, 6.0]]), [2.0, 4.0]))
        self.assertTrue(np.array_equal(mean_pool([[0.25, -1.5]]), [0.25, -1.5]))

    def test_identical_vectors(self):
        vector = np.array([0.5, 0.25, -2.0])
        self.assertTrue(np.array_equal(mean_pool([vector, vector, vector, vector]), vector))

    def test_invalid(self):
        with self.assertRaises(ShapeError):
            mean_pool([])
        with self.assertRaises(ShapeError):
            mean_pool([[1.0, 2.0], [1.0]])
        with self.assertRaises(ShapeError):
            masked_mean_pool(np.zeros((1, 2, 3)), [0])

    def test_backward(self):
        self.assertTrue(np.array_equal(mean_pool_backward(np.array([4.0, 8.0]), 2), [[2.0, 4.0], [2.0, 4.0]]))

    def test_masked_matches_mean_pool_bitwise(self):
        rng = np.random.default_rng(4)
        padded = rng.normal(size=(3, 4, 5))
        counts = np.array([4, 1, 3])
        padded[1, 1:] = 0.0
        padded[2, 3:] = 0.0
        pooled = masked_mean_pool(padded, counts)
        for row, count in enumerate(counts):
            self.assertTrue(np.array_equal(pooled[row], mean_pool(padded[row, :count])))

    def test_masked_gradient(self):
        rng = np.random.default_rng(5)
        for _ in range(CONFIGURATIONS):
            batch, slots, size = rng.integers(1, 4), rng.integers(1, 5), rng.integers(1, 4)
            padded = rng.normal(size=(batch, slots, size))
            counts = rng.integers(1, slots + 1, size=batch)
            weights = rng.normal(size=(batch, size))
            loss = lambda: float(np.sum(masked_mean_pool(padded, counts) * weights))
            analytic = masked_mean_pool_backward(weights, counts, slots)
            self.assertLess(relative_error(analytic, numerical_gradient(loss, padded)), 1e-4)


class SoftmaxTestCase(unittest.TestCase):
    def test_uniform(self):
        loss, probabilities = softmax_cross_entropy(np.zeros(3), 0)
        self.assertTrue(np.allclose(probabilities, 1.0 / 3.0, rtol=0.0, atol=1e-15))
        self.assertAlmostEqual(loss, math.log(3.0), places=12)
        self.assertAlmostEqual(loss, 1.0986, places=4)

    def test_large_logits(self):
        loss, probabilities = softmax_cross_entropy(np.array([1000.0, 0.0, 0.0]), 0)
        self.assertTrue(np.all(np.isfinite(probabilities)))
        self.assertAlmostEqual(probabilities[0], 1.0, places=12)
        self.assertAlmostEqual(loss, 0.0, places=12)

    def test_wrong_class_large_logit(self):
        loss, _ = softmax_cross_entropy(np.array([1000.0, 0.0, 0.0]), 2)
        self.assertAlmostEqual(loss, 1000.0, places=6)

    def test_non_finite(self):
        with self.assertRaises(NonFiniteError):
            softmax(np.array([0.0, float("nan"), 1.0]))
        with self.assertRaises(NonFiniteError):
            softmax_cross_entropy(np.array([0.0, float("inf"), 1.0]), 0)

    def test_bad_labels(self):
        with self.assertRaises(ModelError):
            softmax_cross_entropy(np.zeros(3), 3)
        with self.assertRaises(ShapeError):
            softmax_cross_entropy(np.zeros((2, 3)), [0])

    def test_probabilities_are_a_distribution(self):
        rng = np.random.default_rng(6)
        for _ in range(CONFIGURATIONS):
            probabilities = softmax(rng.normal(scale=10.0, size=(4, 3)))
            self.assertTrue(np.all(probabilities > 0.0))
            self.assertTrue(np.all(np.abs(probabilities.sum(axis=1) - 1.0) < 1e-12))

    def test_gradient(self):
        rng = np.random.default_rng(7)
        for _ in range(CONFIGURATIONS):
            logits = rng.normal(size=(3, 3))
            labels = rng.integers(0, 3, size=3)
            loss = lambda: softmax_cross_entropy(logits, labels)[0]
            _, probabilities = softmax_cross_entropy(logits, labels)
            analytic = softmax_cross_entropy_backward(probabilities, labels)
            self.assertLess(relative_error(analytic, numerical_gradient(loss, logits)), 1e-6)

    def test_single_example_gradient(self):
        _, probabilities = softmax_cross_entropy(np.zeros(3), 1)
        grad = softmax_cross_entropy_backward(probabilities, 1)
        self.assertTrue(np.allclose(grad, [1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0]))


def reference_adam(value, gradients, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
    m = v = 0.0
    for t, gradient in enumerate(gradients, 1):
        m = beta1 * m + (1.0 - beta1) * gradient
        v = beta2 * v + (1.0 - beta2) * gradient * gradient
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        value = value - lr * m_hat / (math.sqrt(v_hat) + epsilon)
    return value


class AdamTestCase(unittest.TestCase):
    def test_defaults(self):
        state = AdamState([])
        self.assertEqual((state.learning_rate, state.beta1, state.beta2, state.epsilon), (1e-3, 0.9, 0.999, 1e-8))
        self.assertEqual(state.t, 0)

    def test_first_step(self):
        parameter = Parameter("p", 0.5)
        state = AdamState([parameter])
        parameter.accumulate(np.array(2.0))
        adam_step([parameter], state)
        self.assertAlmostEqual(float(parameter.value), 0.5 - 0.001 * 2.0 / (2.0 + 1e-8), places=15)
        self.assertAlmostEqual(float(parameter.value), 0.499, places=8)
        self.assertEqual(float(parameter.grad), 0.0)
        self.assertEqual(state.t, 1)

    def test_two_steps_match_scalar_reference(self):
        parameter = Parameter("p", 0.5)
        state = AdamState([parameter])
        for _ in range(2):
            parameter.accumulate(np.array(2.0))
            adam_step([parameter], state)
        self.assertAlmostEqual(float(parameter.value), reference_adam(0.5, [2.0, 2.0]), places=15)

    def test_varying_gradients_match_scalar_reference(self):
        gradients = [0.3, -1.2, 4.0, 0.0, 0.7]
        parameter = Parameter("p", np.array([1.5]))
        state = AdamState([parameter], learning_rate=0.01)
        for gradient in gradients:
            parameter.accumulate(np.array([gradient]))
            adam_step([parameter], state)
        self.assertAlmostEqual(float(parameter.value[0]), reference_adam(1.5, gradients, lr=0.01), places=14)

    def test_zero_gradient_leaves_parameter(self):
        parameter = Parameter("p", [1.0, -2.0])
        adam_step([parameter], AdamState([parameter]))
        self.assertTrue(np.array_equal(parameter.value, [1.0, -2.0]))

    def test_invalid_hyperparameters(self):
        with self.assertRaises(ModelError):
            AdamState([], learning_rate=0.0)
        with self.assertRaises(ModelError):
            AdamState([], beta1=1.0)

    def test_step_counter_overflow(self):
        parameter = Parameter("p", 1.0)
        state = AdamState([parameter])
        state.t = 2 ** 53
        with self.assertRaises(ModelError):
            adam_step([parameter], state)

    def test_accumulate_checks_shape(self):
        with self.assertRaises(ShapeError):
            Parameter("p", [1.0, 2.0]).accumulate(np.zeros(3))


class CheckpointTestCase(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.path = os.path.join(self.directory, "model.json")

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_round_trip_is_exact(self):
        rng = np.random.default_rng(8)
        parameters = [Parameter("a", rng.normal(size=(3, 2))), Parameter("b", rng.normal(size=4) / 3.0)]
        state = AdamState(parameters)
        for parameter in parameters:
            parameter.accumulate(rng.normal(size=parameter.shape))
        adam_step(parameters, state)

        save_checkpoint(self.path, {"seed": 3}, parameters, state)
        header, loaded, adam = load_checkpoint(self.path)

        self.assertEqual(header, {"seed": 3})
        self.assertEqual([_parameter.name for _parameter in loaded], ["a", "b"])
        for original, restored in zip(parameters, loaded):
            self.assertEqual(restored.shape, original.shape)
            self.assertTrue(np.array_equal(restored.value, original.value))

        restored_state = AdamState.from_dict(adam, loaded)
        self.assertEqual(restored_state.t, 1)
        for name in ("a", "b"):
            self.assertTrue(np.array_equal(restored_state.m[name], state.m[name]))
            self.assertTrue(np.array_equal(restored_state.v[name], state.v[name]))

    def test_same_parameters_same_bytes(self):
        parameters = [Parameter("w", [[0.1, 0.2], [0.3, 0.4]])]
        other = os.path.join(self.directory, "other.json")
        save_checkpoint(self.path, {"seed": 0}, parameters)
        save_checkpoint(other, {"seed": 0}, parameters)
        with open(self.path, "rb") as _first, open(other, "rb") as _second:
            self.assertEqual(_first.read(), _second.read())

    def test_format_tag(self):
        save_checkpoint(self.path, {}, [Parameter("w", [1.0])])
        with open(self.path, encoding="utf-8") as _file:
            self.assertEqual(json.load(_file)["format"], CHECKPOINT_FORMAT)

    def test_non_finite_values_are_refused(self):
        with self.assertRaises(CheckpointError):
            save_checkpoint(self.path, {}, [Parameter("w", [float("nan")])])
        self.assertFalse(os.path.exists(self.path))

    def test_invalid_files(self):
        with open(self.path, "w", encoding="utf-8") as _file:
            _file.write("{not json")
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

        with open(self.path, "w", encoding="utf-8") as _file:
            json.dump({"format": "other"}, _file)
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

        with open(self.path, "w", encoding="utf-8") as _file:
            json.dump({"format": CHECKPOINT_FORMAT, "parameters": [{"name": "w", "shape": [2, 2], "values": [1.0]}]}, _file)
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)


if __name__ == "__main__":
    unittest.main()
