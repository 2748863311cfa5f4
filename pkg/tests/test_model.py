import os
import shutil
import tempfile
import unittest
from unittest import mock

import numpy as np

from semgrasp.dataset import DEFAULT_VOCABULARIES
from semgrasp.errors import CheckpointError, ModelError, TrainingDivergedError
from semgrasp.evaluation.metrics import RankedList, mean_ap
from semgrasp.features import SemanticFeatureVector, encode_deep, encode_wide
from semgrasp.model import (
    ABLATIONS,
    Batch,
    CageModel,
    ModelConfig,
    ablation_config,
    encode_examples,
    load_model,
    object_embedding,
    predict,
    save_model,
    score_grasp,
    score_grasps,
    train,
)
from semgrasp.numerics import (
    dense_forward,
    embedding_lookup,
    mean_pool,
    numerical_gradient,
    relative_error,
    relu_forward,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_backward,
)

from tests.helpers import N, NS, S, make_dataset, make_object

VOCAB = DEFAULT_VOCABULARIES

SMALL = ModelConfig(embedding_dim=3, hidden_sizes=(5, 4), propagation_dim=4, epochs=5, seed=2)

CUP = (("wrap_grasp", "ceramic"), ("contain", "ceramic"))
PAN = (("contain", "metal"), ("support", "metal"), ("grasp", "wood"))


def features(task="pour", state="filled", parts=CUP, grasp_part=0):
    affordance, material = parts[grasp_part]
    return SemanticFeatureVector(task, state, affordance, material, tuple(parts))


def encode(x, config=SMALL):
    return encode_wide(x, VOCAB, config.crosses), encode_deep(x, VOCAB)


def mixed_dataset():
    cup, pan = make_object("cup-0", "cup", CUP), make_object("pan-0", "pan", PAN)
    return make_dataset([
        ("cup-0/pour/0", "pour", "filled", cup, [(0, S), (1, NS), (0, N)]),
        ("pan-0/lift/0", "lift", "hot", pan, [(0, NS), (1, N), (2, S)]),
    ])


def check_gradients(test, model, batch, tolerance=1e-4):
    logits, cache = model.forward(batch)
    _, probabilities = softmax_cross_entropy(logits, batch.labels)
    model.zero_grad()
    model.backward(cache, softmax_cross_entropy_backward(probabilities, batch.labels))
    for name, parameter in model.parameters.items():
        analytic = parameter.grad.copy()
        numeric = numerical_gradient(lambda: model.loss(batch), parameter.value)
        test.assertLess(relative_error(analytic, numeric), tolerance, name)


def near_relu_kink(model, batch, margin=1e-4):
    # A finite difference across a ReLU kink measures the wrong slope, so
    # configurations with a pre-activation this close to 0 are not checked.
    _, cache = model.forward(batch)
    pre_activations = list(cache.get("pre_activations", ())) + [cache[_key] for _key in ("part_pre",) if _key in cache]
    return any(np.any(np.abs(_pre) < margin) for _pre in pre_activations)


class ModelConfigTestCase(unittest.TestCase):
    def test_defaults(self):
        config = ModelConfig()
        self.assertEqual(config.hidden_sizes, (64, 32))
        self.assertEqual(config.epochs, 150)
        self.assertEqual(config.learning_rate, 1e-3)
        self.assertTrue(config.enable_wide and config.enable_deep)

    def test_invalid(self):
        with self.assertRaises(ModelError):
            ModelConfig(enable_wide=False, enable_deep=False).validate()
        with self.assertRaises(ModelError):
            ModelConfig(hidden_sizes=()).validate()
        with self.assertRaises(ModelError):
            ModelConfig(batch_size=-1).validate()
        with self.assertRaises(ModelError):
            ModelConfig(learning_rate=0.0).validate()

    def test_dict_round_trip(self):
        config = SMALL._replace(crosses=("task_x_affordance",))
        self.assertEqual(ModelConfig.from_dict(config.to_dict()), config)

    def test_ablations(self):
        self.assertEqual(list(ABLATIONS), ["wide-and-deep", "without-deep", "without-wide", "without-states", "without-tasks"])
        self.assertFalse(ablation_config(SMALL, "without-deep").enable_deep)
        self.assertFalse(ablation_config(SMALL, "without-wide").enable_wide)
        self.assertTrue(ablation_config(SMALL, "without-states").mask_states)
        self.assertTrue(ablation_config(SMALL, "without-tasks").mask_tasks)
        self.assertEqual(ablation_config(SMALL, "wide-and-deep"), SMALL)
        with self.assertRaises(ModelError):
            ablation_config(SMALL, "without-everything")


class ForwardTestCase(unittest.TestCase):
    def test_parameter_shapes(self):
        shapes = CageModel(SMALL, VOCAB).parameter_shapes()
        self.assertEqual(shapes["wide.weight"], (49, 3))
        self.assertEqual(shapes["embedding.affordance"], (11, 3))
        self.assertEqual(shapes["propagation.weight"], (6, 4))
        self.assertEqual(shapes["deep.0.weight"], (4 * 3 + 4, 5))
        self.assertEqual(shapes["output.deep_weight"], (4, 3))
        self.assertEqual(shapes["output.bias"], (3,))

    def test_ablated_parameters(self):
        self.assertEqual(list(CageModel(ablation_config(SMALL, "without-deep"), VOCAB).parameters), ["wide.weight", "output.bias"])
        self.assertNotIn("wide.weight", CageModel(ablation_config(SMALL, "without-wide"), VOCAB).parameters)

    def test_zero_weights_give_uniform_probabilities(self):
        model = CageModel(SMALL, VOCAB)
        for parameter in model.parameters.values():
            parameter.value[...] = 0.0
        probabilities = predict(*encode(features()), model=model)
        self.assertTrue(np.allclose(probabilities, 1.0 / 3.0, rtol=0.0, atol=1e-15))

    def test_probabilities_sum_to_one(self):
        model = CageModel(SMALL, VOCAB)
        rng = np.random.default_rng(0)
        for _ in range(20):
            for parameter in model.parameters.values():
                parameter.value[...] = rng.normal(size=parameter.shape)
            probabilities = predict(*encode(features(parts=PAN, grasp_part=2)), model=model)
            self.assertLess(abs(probabilities.sum() - 1.0), 1e-12)
            self.assertTrue(np.all(probabilities > 0.0))

    def test_matches_composition_of_ops(self):
        model = CageModel(SMALL, VOCAB)
        value = lambda _name: model.parameters[_name].value
        x = features(task="lift", state="hot", parts=PAN, grasp_part=1)
        x_wide, x_deep = encode(x)

        parts = sorted(x_deep.parts)
        part_vectors = [
            relu_forward(dense_forward(value("propagation.weight"), value("propagation.bias"), np.concatenate([
                embedding_lookup(value("embedding.affordance"), _affordance),
                embedding_lookup(value("embedding.material"), _material),
            ])))
            for _affordance, _material in parts
        ]
        hidden = np.concatenate([
            embedding_lookup(value("embedding.task"), x_deep.task),
            embedding_lookup(value("embedding.state"), x_deep.state),
            embedding_lookup(value("embedding.affordance"), x_deep.grasp_affordance),
            embedding_lookup(value("embedding.material"), x_deep.grasp_material),
            mean_pool(part_vectors),
        ])
        for index in range(2):
            hidden = relu_forward(dense_forward(value("deep.%d.weight" % index), value("deep.%d.bias" % index), hidden))
        logits = x_wide.to_dense() @ value("wide.weight") + hidden @ value("output.deep_weight") + value("output.bias")

        self.assertTrue(np.allclose(predict(x_wide, x_deep, model), softmax(logits), rtol=0.0, atol=1e-12))

    def test_wide_only_is_linear(self):
        config = ablation_config(SMALL, "without-deep")
        model = CageModel(config, VOCAB)
        x_wide, x_deep = encode(features(), config)
        logits = x_wide.to_dense() @ model.parameters["wide.weight"].value + model.parameters["output.bias"].value
        self.assertTrue(np.allclose(predict(x_wide, x_deep, model), softmax(logits), rtol=0.0, atol=1e-12))

    def test_part_permutation_is_bit_identical(self):
        model = CageModel(SMALL, VOCAB)
        x = features(parts=PAN, grasp_part=0)
        shuffled = x._replace(parts=(PAN[2], PAN[0], PAN[1]))
        self.assertTrue(np.array_equal(predict(*encode(x), model=model), predict(*encode(shuffled), model=model)))

    def test_object_embedding(self):
        model = CageModel(SMALL, VOCAB)
        parts = encode_deep(features(parts=PAN), VOCAB).parts
        embedding = object_embedding(parts, model)
        self.assertEqual(embedding.shape, (4,))
        self.assertTrue(np.array_equal(embedding, object_embedding(tuple(reversed(parts)), model)))
        with self.assertRaises(ModelError):
            object_embedding((), model)
        with self.assertRaises(ModelError):
            object_embedding(parts, CageModel(ablation_config(SMALL, "without-deep"), VOCAB))

    def test_masked_task_has_no_effect(self):
        config = ablation_config(SMALL, "without-tasks")._replace(crosses=("task_x_affordance", "task_x_material"))
        model = CageModel(config, VOCAB)
        pour = predict(*encode(features(task="pour"), config), model=model)
        cut = predict(*encode(features(task="cut"), config), model=model)
        self.assertTrue(np.array_equal(pour, cut))

    def test_masked_state_has_no_effect(self):
        config = ablation_config(SMALL, "without-states")._replace(crosses=("state_x_affordance",))
        model = CageModel(config, VOCAB)
        hot = predict(*encode(features(state="hot"), config), model=model)
        cold = predict(*encode(features(state="cold"), config), model=model)
        self.assertTrue(np.array_equal(hot, cold))

    def test_unmasked_task_has_effect(self):
        model = CageModel(SMALL, VOCAB)
        self.assertFalse(np.array_equal(
            predict(*encode(features(task="pour")), model=model),
            predict(*encode(features(task="cut")), model=model),
        ))

    def test_misfit_inputs(self):
        model = CageModel(SMALL, VOCAB)
        x_wide, x_deep = encode(features(), SMALL._replace(crosses=("task_x_affordance",)))
        with self.assertRaises(ModelError):
            predict(x_wide, x_deep, model)
        with self.assertRaises(ModelError):
            predict(*encode(features()), model=CageModel(SMALL, VOCAB, initialize=False))
        with self.assertRaises(ModelError):
            Batch.stack([])


class GradientTestCase(unittest.TestCase):
    def test_single_example(self):
        model = CageModel(SMALL, VOCAB)
        batch = Batch.stack([encode(features(parts=PAN, grasp_part=1))], labels=[S])
        check_gradients(self, model, batch)

    def test_padded_batch(self):
        dataset = mixed_dataset()
        model = CageModel(SMALL, VOCAB)
        check_gradients(self, model, encode_examples(dataset.subset(dataset.context_ids()), model))

    def test_masks_and_crosses(self):
        config = SMALL._replace(mask_tasks=True, mask_states=True, crosses=("task_x_affordance", "state_x_affordance"))
        dataset = mixed_dataset()
        model = CageModel(config, VOCAB)
        check_gradients(self, model, encode_examples(dataset.subset(dataset.context_ids()), model))
        self.assertFalse(np.any(model.parameters["embedding.task"].grad))

    def test_wide_only(self):
        dataset = mixed_dataset()
        model = CageModel(ablation_config(SMALL, "without-deep"), VOCAB)
        check_gradients(self, model, encode_examples(dataset.subset(dataset.context_ids()), model))

    def test_random_configurations(self):
        rng = np.random.default_rng(9)
        dataset = mixed_dataset()
        examples = dataset.subset(dataset.context_ids())
        checked = 0
        for seed in range(50):
            config = SMALL._replace(
                seed=seed,
                embedding_dim=int(rng.integers(1, 4)),
                hidden_sizes=tuple(int(_size) for _size in rng.integers(2, 6, size=int(rng.integers(1, 3)))),
                propagation_dim=int(rng.integers(1, 5)),
            )
            model = CageModel(config, VOCAB)
            batch = encode_examples(examples, model)
            if near_relu_kink(model, batch):
                continue
            check_gradients(self, model, batch)
            checked += 1
            if checked == 5:
                break
        self.assertEqual(checked, 5)


def separable_dataset():
    # Pouring wants the body, lifting the opening: task and affordance interact
    entries = []
    for index in range(4):
        cup = make_object("cup-%d" % index, "cup", CUP)
        entries.append(("cup-%d/pour/0" % index, "pour", "filled", cup, [(0, S), (1, NS), (0, S), (1, NS)]))
        entries.append(("cup-%d/lift/0" % index, "lift", "empty", cup, [(0, NS), (1, S), (1, S), (0, NS)]))
    return make_dataset(entries)


class TrainTestCase(unittest.TestCase):
    config = ModelConfig(
        embedding_dim=4, hidden_sizes=(16,), propagation_dim=4, crosses=("task_x_affordance",),
        epochs=150, batch_size=0, learning_rate=0.01, seed=1,
    )

    def test_separable_data_is_ranked_perfectly(self):
        dataset = separable_dataset()
        examples = dataset.subset(dataset.context_ids())
        model, losses = train(examples, VOCAB, self.config)

        self.assertEqual(len(losses), 150)
        self.assertLess(losses[-1], losses[0])
        aps = []
        for context, grasps in examples:
            scores = score_grasps(model, context, grasps)
            aps.append(RankedList.from_scores(scores, [_grasp.label for _grasp in grasps]).average_precision())
        self.assertEqual(mean_ap(aps), 1.0)

    def test_deterministic(self):
        dataset = mixed_dataset()
        examples = dataset.subset(dataset.context_ids())
        config = SMALL._replace(batch_size=2)
        first, first_losses = train(examples, VOCAB, config)
        second, second_losses = train(examples, VOCAB, config)
        self.assertEqual(first_losses, second_losses)
        for name, parameter in first.parameters.items():
            self.assertTrue(np.array_equal(parameter.value, second.parameters[name].value))

        third, _ = train(examples, VOCAB, config._replace(seed=3))
        self.assertFalse(np.array_equal(first.parameters["wide.weight"].value, third.parameters["wide.weight"].value))

    def test_optimizer_steps(self):
        dataset = mixed_dataset()
        examples = dataset.subset(dataset.context_ids())
        model, _ = train(examples, VOCAB, SMALL._replace(batch_size=4))
        # 6 grasps in batches of 4: two updates per epoch
        self.assertEqual(model.optimizer.t, 2 * SMALL.epochs)

    def test_empty_split(self):
        with self.assertRaises(ModelError):
            train([], VOCAB, SMALL)

    def test_divergence(self):
        dataset = mixed_dataset()
        examples = dataset.subset(dataset.context_ids())
        diverged = lambda _logits, _labels: (float("nan"), softmax(_logits))
        with mock.patch("semgrasp.model.softmax_cross_entropy", diverged):
            with self.assertRaises(TrainingDivergedError) as context:
                train(examples, VOCAB, SMALL)
        self.assertEqual(context.exception.epoch, 1)


class PersistenceTestCase(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.path = os.path.join(self.directory, "model.json")

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_save_then_load(self):
        dataset = mixed_dataset()
        examples = dataset.subset(dataset.context_ids())
        config = SMALL._replace(mask_states=True)
        model, _ = train(examples, VOCAB, config)
        save_model(model, self.path, seed=7)

        loaded = load_model(self.path)
        self.assertEqual(loaded.config, config)
        self.assertEqual(loaded.vocabularies, VOCAB)
        self.assertEqual(loaded.optimizer.t, model.optimizer.t)
        for name, parameter in model.parameters.items():
            self.assertTrue(np.array_equal(parameter.value, loaded.parameters[name].value))
        for context, grasps in examples:
            self.assertEqual(score_grasps(model, context, grasps), score_grasps(loaded, context, grasps))
            self.assertEqual(score_grasp(model, context, grasps[0]), score_grasp(loaded, context, grasps[0]))

    def test_incomplete_header(self):
        model = CageModel(SMALL, VOCAB)
        save_model(model, self.path)
        with open(self.path, encoding="utf-8") as _file:
            text = _file.read()
        with open(self.path, "w", encoding="utf-8") as _file:
            _file.write(text.replace('"vocabularies"', '"vocabulary"'))
        with self.assertRaises(CheckpointError):
            load_model(self.path)


if __name__ == "__main__":
    unittest.main()
