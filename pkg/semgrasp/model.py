""" The Wide & Deep semantic grasp network.

    P(y | x) = softmax(W_wide^T x_wide + W_deep^T a_last + b)

The wide path is a linear map over the sparse one-hot vector; the deep path
embeds task, state, grasp affordance and grasp material, appends the object
embedding (per-part propagation layer, average pooled) and runs the result
through ReLU layers. Both paths add into one set of three logits sharing the
bias `b` (class 0 = Suitable).
"""
import logging as _logging
import math as _math
from collections import OrderedDict, namedtuple

import numpy as np

from semgrasp import __version__
from semgrasp.dataset.vocabulary import Vocabularies
from semgrasp.errors import CheckpointError, ModelError, NonFiniteError, TrainingDivergedError
from semgrasp.features import encode_deep, encode_wide, extract, wide_layout
from semgrasp.numerics import (
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
    relu_backward,
    relu_forward,
    save_checkpoint,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_backward,
)

__all__ = [
    "ModelConfig",
    "ABLATIONS",
    "ablation_config",
    "Batch",
    "CageModel",
    "encode_examples",
    "object_embedding",
    "predict",
    "train",
    "score_grasp",
    "score_grasps",
    "save_model",
    "load_model",
]

logger = _logging.getLogger(__name__)

NUM_CLASSES = 3


class ModelConfig(namedtuple("ModelConfig", [
    "embedding_dim",
    "hidden_sizes",
    "propagation_dim",
    "enable_wide",
    "enable_deep",
    "mask_states",
    "mask_tasks",
    "crosses",
    "epochs",
    "batch_size",
    "learning_rate",
    "seed",
    "dense_dim",
], defaults=(8, (64, 32), 16, True, True, False, False, (), 150, 64, 1e-3, 0, 0))):
    """ Hyperparameters of the network and of its training.

    Attributes:
        embedding_dim (int): Size of every embedding vector.
        hidden_sizes (tuple[int]): Deep layer widths.
        propagation_dim (int): Size of the per-part propagation output (and of the object embedding).
        enable_wide (bool): Use the wide path.
        enable_deep (bool): Use the deep path.
        mask_states (bool): Zero every state input (one-hot and embedding).
        mask_tasks (bool): Zero every task input (one-hot and embedding).
        crosses (tuple[str]): Crossed wide blocks (see `semgrasp.features.CROSSES`).
        epochs (int): Training epochs.
        batch_size (int): Mini-batch size, `0` for full-batch updates.
        learning_rate (float): Adam step size.
        seed (int): Seed of the initialization and of the shuffling stream.
        dense_dim (int): Length of the dense passthrough appended to the deep input.
    """
    __slots__ = ()

    def validate(self):
        # type: () -> ModelConfig
        """ Return the config if it is consistent.

        Raises:
            ModelError: On an invalid combination.
        """
        if not (self.enable_wide or self.enable_deep):
            raise ModelError("At least one of the wide and deep paths must be enabled.")
        for name in ("embedding_dim", "propagation_dim", "epochs"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ModelError("'%s' must be a positive integer (got '%s' with type '%s')." % (name, value, type(value)))
        if not self.hidden_sizes or any(not isinstance(_size, int) or _size < 1 for _size in self.hidden_sizes):
            raise ModelError("Hidden sizes must be positive integers (got %r)." % (self.hidden_sizes,))
        if not isinstance(self.batch_size, int) or self.batch_size < 0:
            raise ModelError("'batch_size' must be a non-negative integer (got %r)." % (self.batch_size,))
        if not isinstance(self.dense_dim, int) or self.dense_dim < 0:
            raise ModelError("'dense_dim' must be a non-negative integer (got %r)." % (self.dense_dim,))
        if not self.learning_rate > 0:
            raise ModelError("The learning rate must be positive (got %r)." % (self.learning_rate,))
        return self

    def to_dict(self):
        # type: () -> dict
        data = OrderedDict(self._asdict())
        data["hidden_sizes"] = list(self.hidden_sizes)
        data["crosses"] = list(self.crosses)
        return data

    @classmethod
    def from_dict(cls, data):
        # type: (dict) -> ModelConfig
        fields = dict((_key, data[_key]) for _key in cls._fields if _key in data)
        for name in ("hidden_sizes", "crosses"):
            if name in fields:
                fields[name] = tuple(fields[name])
        return cls(**fields)


ABLATIONS = OrderedDict([
    ("wide-and-deep", ("Wide and Deep", {})),
    ("without-deep", ("Without Deep", {"enable_deep": False})),
    ("without-wide", ("Without Wide", {"enable_wide": False})),
    ("without-states", ("Without States", {"mask_states": True})),
    ("without-tasks", ("Without Tasks", {"mask_tasks": True})),
])
""" Ablation variants: command line name -> (report row name, config changes). """


def ablation_config(config, name):
    # type: (ModelConfig, str) -> ModelConfig
    """ The variant `name` of `config` (see `ABLATIONS`).

    Raises:
        ModelError: On an unknown variant name.
    """
    try:
        _, changes = ABLATIONS[name]
    except KeyError:
        raise ModelError("Unknown ablation '%s' (expected one of %s)." % (name, ", ".join(ABLATIONS)))
    return config._replace(**changes)


class Batch(namedtuple("Batch", [
    "wide",
    "task",
    "state",
    "grasp_affordance",
    "grasp_material",
    "part_affordances",
    "part_materials",
    "part_counts",
    "dense",
    "labels",
])):
    """ Stacked encodings of several examples.

    Attributes:
        wide (np.ndarray): `(batch, wide length)` binary matrix.
        task, state, grasp_affordance, grasp_material (np.ndarray): `(batch,)` indices.
        part_affordances, part_materials (np.ndarray): `(batch, slots)` indices, zero padded.
            The parts of every example are sorted by `(affordance, material)`.
        part_counts (np.ndarray): `(batch,)` number of parts.
        dense (np.ndarray): `(batch, dense_dim)` passthrough features.
        labels (np.ndarray|None): `(batch,)` class indices.
    """
    __slots__ = ()

    @property
    def size(self):
        # type: () -> int
        return self.task.shape[0]

    def take(self, rows):
        # type: (np.ndarray) -> Batch
        return Batch(*[None if _array is None else _array[rows] for _array in self])

    @classmethod
    def stack(cls, encodings, labels=None, dense_dim=0):
        """ Stack `(WideEncoding, DeepEncoding)` pairs.

        Raises:
            ModelError: If an encoding has no parts or a dense vector of the wrong length.
        """
        encodings = list(encodings)
        if not encodings:
            raise ModelError("Cannot build an empty batch.")
        length = encodings[0][0].length
        slots = max(len(_deep.parts) for _, _deep in encodings)
        size = len(encodings)

        wide = np.zeros((size, length), dtype=np.float64)
        singles = np.zeros((size, 4), dtype=np.int64)
        part_affordances = np.zeros((size, slots), dtype=np.int64)
        part_materials = np.zeros((size, slots), dtype=np.int64)
        part_counts = np.zeros(size, dtype=np.int64)
        dense = np.zeros((size, dense_dim), dtype=np.float64)

        for row, (x_wide, x_deep) in enumerate(encodings):
            if x_wide.length != length:
                raise ModelError("Wide encodings of one batch must share one length (got %d and %d)." % (length, x_wide.length))
            if not x_deep.parts:
                raise ModelError("An object embedding needs at least one part.")
            if len(x_deep.dense) != dense_dim:
                raise ModelError("Expected a dense passthrough of size %d (got %d)." % (dense_dim, len(x_deep.dense)))
            wide[row, list(x_wide.indices)] = 1.0
            singles[row] = (x_deep.task, x_deep.state, x_deep.grasp_affordance, x_deep.grasp_material)
            # Canonical part order: pooling is then bit-identical under any permutation
            parts = sorted(x_deep.parts)
            part_counts[row] = len(parts)
            part_affordances[row, :len(parts)] = [_part[0] for _part in parts]
            part_materials[row, :len(parts)] = [_part[1] for _part in parts]
            if dense_dim:
                dense[row] = x_deep.dense

        if labels is not None:
            labels = np.asarray([int(_label) for _label in labels], dtype=np.int64)
        return cls(wide, singles[:, 0], singles[:, 1], singles[:, 2], singles[:, 3], part_affordances, part_materials, part_counts, dense, labels)


def _uniform(rng, shape, fan_in):
    limit = 1.0 / _math.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


class CageModel:
    """ Parameters and fixed computation graph of the network.

    Args:
        config (ModelConfig): Hyperparameters.
        vocabularies (Vocabularies): Label sets the encodings are built from.
        initialize (bool): Draw the parameters from `config.seed`. Without
            it the model stays empty until parameters are loaded.

    Attributes:
        parameters (OrderedDict[str, Parameter]): Every trainable block, by name:
            `wide.weight` (wide length x 3), `embedding.{task,state,affordance,material}`,
            `propagation.{weight,bias}`, `deep.<i>.{weight,bias}`,
            `output.deep_weight` (last hidden x 3) and the shared `output.bias`.
    """
    def __init__(self, config, vocabularies, initialize=True):
        self.config = config.validate()
        self.vocabularies = vocabularies
        self.layout = wide_layout(vocabularies, tuple(config.crosses))
        self.parameters = OrderedDict()  # type: OrderedDict[str, Parameter]
        self.optimizer = None  # type: AdamState|None

        # Wide columns kept by the task/state masks
        keep = np.ones(self.layout.length, dtype=np.float64)
        if config.mask_tasks:
            keep[self.layout.columns("task")] = 0.0
        if config.mask_states:
            keep[self.layout.columns("state")] = 0.0
        self._wide_keep = keep

        if initialize:
            self._initialize(np.random.default_rng([config.seed, 0]))

    @property
    def deep_input_dim(self):
        # type: () -> int
        return 4 * self.config.embedding_dim + self.config.propagation_dim + self.config.dense_dim

    def parameter_shapes(self):
        # type: () -> OrderedDict
        """ Name and shape of every parameter block, in creation order. """
        config, vocabularies = self.config, self.vocabularies
        shapes = OrderedDict()
        if config.enable_wide:
            shapes["wide.weight"] = (self.layout.length, NUM_CLASSES)
        if config.enable_deep:
            emb = config.embedding_dim
            shapes["embedding.task"] = (vocabularies.size("tasks"), emb)
            shapes["embedding.state"] = (vocabularies.size("states"), emb)
            shapes["embedding.affordance"] = (vocabularies.size("affordances"), emb)
            shapes["embedding.material"] = (vocabularies.size("materials"), emb)
            shapes["propagation.weight"] = (2 * emb, config.propagation_dim)
            shapes["propagation.bias"] = (config.propagation_dim,)
            inputs = self.deep_input_dim
            for index, size in enumerate(config.hidden_sizes):
                shapes["deep.%d.weight" % index] = (inputs, size)
                shapes["deep.%d.bias" % index] = (size,)
                inputs = size
            shapes["output.deep_weight"] = (inputs, NUM_CLASSES)
        shapes["output.bias"] = (NUM_CLASSES,)
        return shapes

    def _initialize(self, rng):
        for name, shape in self.parameter_shapes().items():
            if name.endswith("bias"):
                value = np.zeros(shape)
            elif name.startswith("embedding."):
                value = _uniform(rng, shape, shape[1])
            else:
                value = _uniform(rng, shape, shape[0])
            self.parameters[name] = Parameter(name, value)
        self.optimizer = AdamState(self.parameters.values(), learning_rate=self.config.learning_rate)

    def load_parameters(self, parameters):
        """ Install loaded parameter blocks, checking names and shapes.

        Raises:
            ModelError: On a missing, unexpected or misshaped block.
        """
        expected = self.parameter_shapes()
        loaded = OrderedDict((_parameter.name, _parameter) for _parameter in parameters)
        if list(loaded) != list(expected):
            raise ModelError("Parameter blocks %s do not match the model (expected %s)." % (list(loaded), list(expected)))
        for name, shape in expected.items():
            if loaded[name].shape != tuple(shape):
                raise ModelError("Parameter '%s' must have shape %s (got %s)." % (name, tuple(shape), loaded[name].shape))
        self.parameters = loaded

    def _value(self, name):
        return self.parameters[name].value

    # -------------------------------------------------------------- encoding

    def encode(self, context, grasp):
        """ `(WideEncoding, DeepEncoding)` of one grasp in one context. """
        x = extract(context, grasp)
        return encode_wide(x, self.vocabularies, self.config.crosses), encode_deep(x, self.vocabularies)

    # -------------------------------------------------------------- forward

    def _check_ready(self, batch):
        if not self.parameters:
            raise ModelError("The model has not been initialized or loaded.")
        if batch.wide.shape[1] != self.layout.length:
            raise ModelError("Wide input of length %d does not match the model (%d)." % (batch.wide.shape[1], self.layout.length))
        if batch.dense.shape[1] != self.config.dense_dim:
            raise ModelError("Dense passthrough of size %d does not match the model (%d)." % (batch.dense.shape[1], self.config.dense_dim))

    def object_embeddings(self, part_affordances, part_materials, part_counts, cache=None):
        # type: (np.ndarray, np.ndarray, np.ndarray, dict|None) -> np.ndarray
        """ Object embeddings `v_o` of a batch of padded part lists. """
        part_x = np.concatenate([
            embedding_lookup(self._value("embedding.affordance"), part_affordances),
            embedding_lookup(self._value("embedding.material"), part_materials),
        ], axis=-1)
        part_pre = dense_forward(self._value("propagation.weight"), self._value("propagation.bias"), part_x)
        part_v = relu_forward(part_pre)
        pooled = masked_mean_pool(part_v, part_counts)
        if cache is not None:
            cache.update(part_x=part_x, part_pre=part_pre)
        return pooled

    def forward(self, batch):
        # type: (Batch) -> tuple
        """ Logits of a batch and the intermediate values `backward()` needs. """
        self._check_ready(batch)
        config = self.config
        cache = {"batch": batch}
        logits = np.zeros((batch.size, NUM_CLASSES)) + self._value("output.bias")

        if config.enable_wide:
            wide = batch.wide * self._wide_keep
            cache["wide"] = wide
            logits = logits + wide @ self._value("wide.weight")

        if config.enable_deep:
            task = embedding_lookup(self._value("embedding.task"), batch.task)
            state = embedding_lookup(self._value("embedding.state"), batch.state)
            if config.mask_tasks:
                task = np.zeros_like(task)
            if config.mask_states:
                state = np.zeros_like(state)
            pooled = self.object_embeddings(batch.part_affordances, batch.part_materials, batch.part_counts, cache)
            hidden = np.concatenate([
                task,
                state,
                embedding_lookup(self._value("embedding.affordance"), batch.grasp_affordance),
                embedding_lookup(self._value("embedding.material"), batch.grasp_material),
                pooled,
                batch.dense,
            ], axis=1)

            activations = [hidden]
            pre_activations = []
            for index in range(len(config.hidden_sizes)):
                pre = dense_forward(self._value("deep.%d.weight" % index), self._value("deep.%d.bias" % index), activations[-1])
                pre_activations.append(pre)
                activations.append(relu_forward(pre))
            cache.update(activations=activations, pre_activations=pre_activations)
            logits = logits + activations[-1] @ self._value("output.deep_weight")

        return logits, cache

    def backward(self, cache, grad_logits):
        # type: (dict, np.ndarray) -> None
        """ Accumulate the gradients of every parameter for `grad_logits`. """
        config = self.config
        batch = cache["batch"]
        self.parameters["output.bias"].accumulate(grad_logits.sum(axis=0))

        if config.enable_wide:
            self.parameters["wide.weight"].accumulate(cache["wide"].T @ grad_logits)

        if not config.enable_deep:
            return

        emb = config.embedding_dim
        activations, pre_activations = cache["activations"], cache["pre_activations"]
        self.parameters["output.deep_weight"].accumulate(activations[-1].T @ grad_logits)
        upstream = grad_logits @ self._value("output.deep_weight").T
        for index in reversed(range(len(config.hidden_sizes))):
            grad_pre = relu_backward(pre_activations[index], upstream)
            grad_W, grad_b, upstream = dense_backward(self._value("deep.%d.weight" % index), activations[index], grad_pre)
            self.parameters["deep.%d.weight" % index].accumulate(grad_W)
            self.parameters["deep.%d.bias" % index].accumulate(grad_b)

        grad_task = upstream[:, 0:emb]
        grad_state = upstream[:, emb:2 * emb]
        grad_affordance = upstream[:, 2 * emb:3 * emb]
        grad_material = upstream[:, 3 * emb:4 * emb]
        grad_pooled = upstream[:, 4 * emb:4 * emb + config.propagation_dim]

        affordance_table = self.parameters["embedding.affordance"]
        material_table = self.parameters["embedding.material"]
        if not config.mask_tasks:
            self.parameters["embedding.task"].accumulate(embedding_backward(self.parameters["embedding.task"].shape, batch.task, grad_task))
        if not config.mask_states:
            self.parameters["embedding.state"].accumulate(embedding_backward(self.parameters["embedding.state"].shape, batch.state, grad_state))
        affordance_table.accumulate(embedding_backward(affordance_table.shape, batch.grasp_affordance, grad_affordance))
        material_table.accumulate(embedding_backward(material_table.shape, batch.grasp_material, grad_material))

        # Padded slots get a zero gradient from the pooling mask
        grad_part_v = masked_mean_pool_backward(grad_pooled, batch.part_counts, batch.part_affordances.shape[1])
        grad_part_pre = relu_backward(cache["part_pre"], grad_part_v)
        grad_W, grad_b, grad_part_x = dense_backward(self._value("propagation.weight"), cache["part_x"], grad_part_pre)
        self.parameters["propagation.weight"].accumulate(grad_W)
        self.parameters["propagation.bias"].accumulate(grad_b)
        affordance_table.accumulate(embedding_backward(affordance_table.shape, batch.part_affordances, grad_part_x[..., :emb]))
        material_table.accumulate(embedding_backward(material_table.shape, batch.part_materials, grad_part_x[..., emb:]))

    def loss(self, batch):
        # type: (Batch) -> float
        """ Mean negative log-likelihood of the batch labels (no gradients). """
        logits, _ = self.forward(batch)
        loss, _ = softmax_cross_entropy(logits, batch.labels)
        return loss

    def predict_proba(self, batch):
        # type: (Batch) -> np.ndarray
        """ `(batch, 3)` class probabilities. """
        logits, _ = self.forward(batch)
        return softmax(logits)

    def zero_grad(self):
        for parameter in self.parameters.values():
            parameter.zero_grad()

    def __repr__(self):
        return "<%s wide=%s deep=%s parameters=%d>" % (
            self.__class__.__name__,
            self.config.enable_wide,
            self.config.enable_deep,
            sum(_parameter.value.size for _parameter in self.parameters.values()),
        )


def object_embedding(parts, model):
    # type: (tuple, CageModel) -> np.ndarray
    """ Object embedding `v_o` of a part list: every `(affordance, material)`
    index pair is embedded, sent through the propagation layer and the
    results are average pooled.

    Raises:
        ModelError: On an empty part list or a model without deep path.
    """
    if not parts:
        raise ModelError("An object embedding needs at least one part.")
    if not model.config.enable_deep:
        raise ModelError("The model has no deep path, hence no object embedding.")
    parts = sorted(parts)
    return model.object_embeddings(
        np.array([[_part[0] for _part in parts]], dtype=np.int64),
        np.array([[_part[1] for _part in parts]], dtype=np.int64),
        np.array([len(parts)], dtype=np.int64),
    )[0]


def predict(x_wide, x_deep, model):
    # type: (object, object, CageModel) -> np.ndarray
    """ Probabilities of (Suitable, Neutral, NotSuitable) for one encoded example.

    Raises:
        ModelError: On an uninitialized model or encodings that do not fit it.
    """
    batch = Batch.stack([(x_wide, x_deep)], dense_dim=len(x_deep.dense))
    return model.predict_proba(batch)[0]


def encode_examples(examples, model):
    """ Batch with labels of every grasp of `examples`, a sequence of
    `(context, grasps)` pairs. """
    encodings, labels = [], []
    for context, grasps in examples:
        for grasp in grasps:
            encodings.append(model.encode(context, grasp))
            labels.append(grasp.label)
    return Batch.stack(encodings, labels, dense_dim=model.config.dense_dim)


def train(examples, vocabularies, config=None):
    """ Train a network on `examples` (a sequence of `(context, grasps)` pairs).

    Runs exactly `config.epochs` epochs of shuffled mini-batch Adam. The
    initialization and the shuffling are drawn from two streams seeded by
    `config.seed`, so equal inputs give equal models.

    Returns:
        tuple[CageModel, list[float]]: The model and the mean training loss of every epoch.

    Raises:
        ModelError: On an empty training split.
        TrainingDivergedError: If an epoch loss is not finite.
    """
    config = (config or ModelConfig()).validate()
    examples = list(examples)
    if not examples:
        raise ModelError("Cannot train on an empty split.")

    model = CageModel(config, vocabularies)
    batch = encode_examples(examples, model)
    size = batch.size
    batch_size = config.batch_size if 0 < config.batch_size < size else size
    shuffling = np.random.default_rng([config.seed, 1])
    parameters = list(model.parameters.values())
    logger.info("Training on %d grasps of %d contexts (%d epochs, batch %d)", size, len(examples), config.epochs, batch_size)

    losses = []
    for epoch in range(1, config.epochs + 1):
        order = shuffling.permutation(size)
        total = 0.0
        for start in range(0, size, batch_size):
            rows = order[start:start + batch_size]
            chunk = batch.take(rows)
            try:
                logits, cache = model.forward(chunk)
                loss, probabilities = softmax_cross_entropy(logits, chunk.labels)
            except NonFiniteError:
                raise TrainingDivergedError(epoch, float("nan"))
            if not _math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            model.backward(cache, softmax_cross_entropy_backward(probabilities, chunk.labels))
            adam_step(parameters, model.optimizer)
            total += loss * rows.size

        mean = total / size
        if not _math.isfinite(mean):
            raise TrainingDivergedError(epoch, mean)
        losses.append(mean)
        logger.debug("Epoch %d/%d: mean loss %.6f", epoch, config.epochs, mean)

    logger.info("Final training loss %.6f", losses[-1])
    return model, losses


def score_grasp(model, context, grasp):
    # type: (CageModel, object, object) -> float
    """ Suitability score `P(Suitable | x)` of `grasp` in `context`. """
    x_wide, x_deep = model.encode(context, grasp)
    return float(predict(x_wide, x_deep, model)[0])


def score_grasps(model, context, grasps):
    # type: (CageModel, object, list) -> list[float]
    """ `score_grasp()` for several grasps of one context, in one pass. """
    batch = Batch.stack([model.encode(context, _grasp) for _grasp in grasps], dense_dim=model.config.dense_dim)
    return model.predict_proba(batch)[:, 0].tolist()


def save_model(model, path, seed=None, extra=None):
    # type: (CageModel, str, int|None, dict|None) -> None
    """ Write `model` (parameters, optimizer state, config and vocabularies) to `path`.

    The header records the config (ablation masks included), the
    vocabularies, the seed and the tool version.
    """
    header = OrderedDict([
        ("config", model.config.to_dict()),
        ("vocabularies", model.vocabularies.to_dict()),
        ("seed", model.config.seed if seed is None else seed),
        ("tool_version", __version__),
    ])
    if extra:
        header.update(extra)
    save_checkpoint(path, header, list(model.parameters.values()), model.optimizer)


def load_model(path):
    # type: (str) -> CageModel
    """ Read a model written by `save_model()`.

    Raises:
        CheckpointError: If the file is not a valid checkpoint.
        ModelError: If its parameters do not match its own config.
    """
    header, parameters, optimizer = load_checkpoint(path)
    try:
        config = ModelConfig.from_dict(header["config"])
        vocabularies = Vocabularies.from_dict(header["vocabularies"])
    except (KeyError, TypeError) as error:
        raise CheckpointError("'%s' has an incomplete header (%s)." % (path, error))
    model = CageModel(config, vocabularies, initialize=False)
    model.load_parameters(parameters)
    if optimizer is not None:
        model.optimizer = AdamState.from_dict(optimizer, parameters)
    return model
