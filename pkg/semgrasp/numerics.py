""" Minimal differentiable building blocks of the grasp network.

Every op comes as a `*_forward`/`*_backward` pair (or a function returning
what its backward needs) with hand-derived gradients; the network in
`semgrasp.model` composes them into a fixed graph. All arrays are 64-bit.

Dense layers follow the row-vector convention `y = x @ W + b`, with `W`
stored as `(inputs, outputs)`.
"""
import json as _json
import logging as _logging
import os as _os
import tempfile as _tempfile
from collections import OrderedDict

import numpy as np

from semgrasp.errors import CheckpointError, ModelError, NonFiniteError, ShapeError

__all__ = [
    "Parameter",
    "AdamState",
    "dense_forward",
    "dense_backward",
    "relu_forward",
    "relu_backward",
    "embedding_lookup",
    "embedding_backward",
    "mean_pool",
    "mean_pool_backward",
    "masked_mean_pool",
    "masked_mean_pool_backward",
    "softmax",
    "softmax_cross_entropy",
    "softmax_cross_entropy_backward",
    "adam_step",
    "numerical_gradient",
    "relative_error",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_FORMAT",
]

logger = _logging.getLogger(__name__)

CHECKPOINT_FORMAT = "cage-ckpt-1"

MAX_ADAM_STEPS = 2 ** 53
""" Past this step count `t` is no longer exact as a float and the bias correction degrades. """


def _check_finite(array, what):
    # type: (np.ndarray, str) -> np.ndarray
    if not np.all(np.isfinite(array)):
        raise NonFiniteError("%s contains non-finite values." % what)
    return array


class Parameter:
    """ A named trainable array with its gradient accumulator.

    Attributes:
        name (str): Unique name inside the model (also the checkpoint key).
        value (np.ndarray): Current values (float64).
        grad (np.ndarray): Accumulated gradient, same shape as `value`.
    """
    __slots__ = ("name", "value", "grad")

    def __init__(self, name, value):
        # type: (str, object) -> None
        self.name = name
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        # type: () -> tuple
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def accumulate(self, gradient):
        # type: (np.ndarray) -> None
        if gradient.shape != self.value.shape:
            raise ShapeError("Gradient of '%s' must have shape %s (got %s)." % (self.name, self.value.shape, gradient.shape))
        self.grad += gradient

    def __repr__(self):
        return "<%s %s %s>" % (self.__class__.__name__, self.name, self.value.shape)


# ------------------------------------------------------------------ dense


def dense_forward(W, b, x):
    # type: (np.ndarray, np.ndarray, np.ndarray) -> np.ndarray
    """ Affine map `x @ W + b` over the last axis of `x`.

    Examples:
        ```pycon
        >>> dense_forward(np.eye(2), np.zeros(2), np.array([3.0, 4.0]))
        array([3., 4.])
        ```

    Raises:
        ShapeError: If `W`, `b` and `x` do not agree.
    """
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or b.shape != (W.shape[1],):
        raise ShapeError("Expected W of shape (inputs, outputs) and b of shape (outputs,) (got %s and %s)." % (W.shape, b.shape))
    if x.shape[-1:] != (W.shape[0],):
        raise ShapeError("Input of size %d does not match a layer with %d inputs (got shape %s)." % (x.shape[-1] if x.ndim else 0, W.shape[0], x.shape))
    y = x @ W + b
    if __debug__:
        _check_finite(y, "Dense layer output")
    return y


def dense_backward(W, x, upstream):
    # type: (np.ndarray, np.ndarray, np.ndarray) -> tuple
    """ Gradients of `dense_forward()` for the upstream gradient `upstream`.

    Leading axes of `x` (batch, parts, ...) are summed over for the
    parameter gradients.

    Returns:
        tuple[np.ndarray, np.ndarray, np.ndarray]: `(grad_W, grad_b, grad_x)`.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape[:-1] != x.shape[:-1] or upstream.shape[-1:] != (W.shape[1],):
        raise ShapeError("Upstream gradient of shape %s does not match input %s and layer %s." % (upstream.shape, x.shape, W.shape))
    flat_x = x.reshape(-1, W.shape[0])
    flat_upstream = upstream.reshape(-1, W.shape[1])
    grad_W = flat_x.T @ flat_upstream
    grad_b = flat_upstream.sum(axis=0)
    grad_x = upstream @ W.T
    return grad_W, grad_b, grad_x


def relu_forward(x):
    # type: (np.ndarray) -> np.ndarray
    return np.maximum(x, 0.0)


def relu_backward(x, upstream):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    """ Gradient of ReLU at pre-activation `x` (the kink gets gradient 0). """
    return upstream * (x > 0.0)


# ------------------------------------------------------------------ embeddings


def _check_indices(table, indices):
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise ModelError("Embedding index out of range for a table of %d rows (got %s)." % (table.shape[0], indices))
    return indices


def embedding_lookup(table, indices):
    # type: (np.ndarray, object) -> np.ndarray
    """ Rows of `table` at `indices` (any shape; the row axis is appended).

    Raises:
        ModelError: On an out-of-range index.
    """
    table = np.asarray(table, dtype=np.float64)
    return table[_check_indices(table, indices)]


def embedding_backward(table_shape, indices, upstream):
    # type: (tuple, object, np.ndarray) -> np.ndarray
    """ Scatter `upstream` back onto the looked-up rows. Repeated indices accumulate. """
    grad = np.zeros(table_shape, dtype=np.float64)
    indices = np.asarray(indices, dtype=np.int64)
    np.add.at(grad, indices.reshape(-1), np.asarray(upstream, dtype=np.float64).reshape(-1, table_shape[1]))
    return grad


# ------------------------------------------------------------------ pooling


def mean_pool(vectors):
    # type: (object) -> np.ndarray
    """ Elementwise mean of equal-length vectors.

    The sum runs strictly left to right, so callers that present the
    vectors in a canonical order get bit-identical results for any
    permutation of the same set.

    Raises:
        ShapeError: On an empty input or vectors of different lengths.
    """
    vectors = [np.asarray(_vector, dtype=np.float64) for _vector in vectors]
    if not vectors:
        raise ShapeError("Cannot pool an empty set of vectors.")
    shape = vectors[0].shape
    total = np.zeros(shape, dtype=np.float64)
    for vector in vectors:
        if vector.shape != shape:
            raise ShapeError("Pooled vectors must share one shape (got %s and %s)." % (shape, vector.shape))
        total = total + vector
    return total / len(vectors)


def mean_pool_backward(upstream, count):
    # type: (np.ndarray, int) -> np.ndarray
    """ Gradient of `mean_pool()` for each of the `count` inputs, stacked. """
    return np.repeat((np.asarray(upstream, dtype=np.float64) / count)[np.newaxis], count, axis=0)


def masked_mean_pool(padded, counts):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    """ Batched `mean_pool()` over a zero-padded `(batch, slots, size)` array.

    Row `i` pools its first `counts[i]` slots, summed left to right exactly
    like `mean_pool()`.
    """
    counts = np.asarray(counts)
    if counts.size and counts.min() < 1:
        raise ShapeError("Every pooled set needs at least one vector.")
    total = np.zeros((padded.shape[0], padded.shape[2]), dtype=np.float64)
    for slot in range(padded.shape[1]):
        active = (slot < counts)[:, np.newaxis]
        total = np.where(active, total + padded[:, slot], total)
    return total / counts[:, np.newaxis]


def masked_mean_pool_backward(upstream, counts, slots):
    # type: (np.ndarray, np.ndarray, int) -> np.ndarray
    counts = np.asarray(counts)
    mask = np.arange(slots)[np.newaxis, :] < counts[:, np.newaxis]
    share = upstream / counts[:, np.newaxis]
    return share[:, np.newaxis, :] * mask[:, :, np.newaxis]


# ------------------------------------------------------------------ softmax


def softmax(logits):
    # type: (np.ndarray) -> np.ndarray
    """ Max-shifted softmax over the last axis.

    Raises:
        NonFiniteError: On NaN or infinite logits.
    """
    logits = _check_finite(np.asarray(logits, dtype=np.float64), "Logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exponentials = np.exp(shifted)
    return exponentials / exponentials.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    # type: (np.ndarray, object) -> tuple
    """ Mean negative log-likelihood of `labels` and the class probabilities.

    Accepts one example (`logits` of shape `(classes,)`, `labels` an int)
    or a batch (`(batch, classes)` and `(batch,)`).

    Examples:
        ```pycon
        >>> loss, probabilities = softmax_cross_entropy(np.zeros(3), 0)
        >>> round(loss, 4)
        1.0986
        ```

    Returns:
        tuple[float, np.ndarray]: `(loss, probabilities)`.

    Raises:
        NonFiniteError: On NaN or infinite logits.
        ModelError: On a class index outside the logits.
    """
    logits = _check_finite(np.asarray(logits, dtype=np.float64), "Logits")
    single = logits.ndim == 1
    batch = np.atleast_2d(logits)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if labels.shape != (batch.shape[0],):
        raise ShapeError("Expected %d labels (got shape %s)." % (batch.shape[0], labels.shape))
    if labels.size and (labels.min() < 0 or labels.max() >= batch.shape[1]):
        raise ModelError("Class index out of range for %d classes (got %s)." % (batch.shape[1], labels))

    shifted = batch - batch.max(axis=1, keepdims=True)
    log_normalizer = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probabilities = shifted - log_normalizer
    loss = -float(np.mean(log_probabilities[np.arange(batch.shape[0]), labels]))
    probabilities = np.exp(log_probabilities)
    return loss, (probabilities[0] if single else probabilities)


def softmax_cross_entropy_backward(probabilities, labels):
    # type: (np.ndarray, object) -> np.ndarray
    """ Gradient of the mean loss w.r.t. the logits: `(p - onehot) / batch`. """
    single = probabilities.ndim == 1
    batch = np.atleast_2d(probabilities)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    grad = batch.copy()
    grad[np.arange(batch.shape[0]), labels] -= 1.0
    grad /= batch.shape[0]
    return grad[0] if single else grad


# ------------------------------------------------------------------ Adam


class AdamState:
    """ Moment accumulators and step counter of the Adam optimizer.

    Args:
        parameters (Iterable[Parameter]): Parameters to optimize.
        learning_rate (float): Step size.
        beta1 (float): First-moment decay.
        beta2 (float): Second-moment decay.
        epsilon (float): Denominator offset.
    """
    def __init__(self, parameters, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if not learning_rate > 0:
            raise ModelError("The learning rate must be positive (got '%s')." % learning_rate)
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ModelError("Adam betas must be in [0, 1) (got '%s' and '%s')." % (beta1, beta2))
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.t = 0
        self.m = OrderedDict((_parameter.name, np.zeros_like(_parameter.value)) for _parameter in parameters)
        self.v = OrderedDict((_name, np.zeros_like(_moment)) for _name, _moment in self.m.items())

    def to_dict(self):
        # type: () -> dict
        return {
            "t": self.t,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "m": OrderedDict((_name, _moment.ravel().tolist()) for _name, _moment in self.m.items()),
            "v": OrderedDict((_name, _moment.ravel().tolist()) for _name, _moment in self.v.items()),
        }

    @classmethod
    def from_dict(cls, data, parameters):
        # type: (dict, list) -> AdamState
        state = cls(parameters, data["learning_rate"], data["beta1"], data["beta2"], data["epsilon"])
        state.t = int(data["t"])
        for parameter in parameters:
            state.m[parameter.name] = np.array(data["m"][parameter.name], dtype=np.float64).reshape(parameter.shape)
            state.v[parameter.name] = np.array(data["v"][parameter.name], dtype=np.float64).reshape(parameter.shape)
        return state


def adam_step(parameters, state):
    # type: (list, AdamState) -> None
    """ One bias-corrected Adam update of `parameters`, in place.

    Gradients are zeroed afterwards. A zero gradient leaves a parameter
    whose moments are still zero untouched.

    Raises:
        ModelError: When the step counter would overflow.
    """
    if state.t >= MAX_ADAM_STEPS:
        raise ModelError("Adam step counter overflow (t=%d)." % state.t)
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t

    for parameter in parameters:
        m = state.m[parameter.name]
        v = state.v[parameter.name]
        m *= state.beta1
        m += (1.0 - state.beta1) * parameter.grad
        v *= state.beta2
        v += (1.0 - state.beta2) * parameter.grad * parameter.grad
        parameter.value -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        parameter.zero_grad()


# ------------------------------------------------------------------ gradient checking


def numerical_gradient(function, array, h=1e-6):
    # type: (callable, np.ndarray, float) -> np.ndarray
    """ Central finite-difference gradient of the scalar `function()` w.r.t. `array`.

    `array` is perturbed in place, one entry at a time, and restored.
    """
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    flat_grad = grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + h
        plus = function()
        flat[index] = original - h
        minus = function()
        flat[index] = original
        flat_grad[index] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic, numeric, floor=1e-7):
    # type: (np.ndarray, np.ndarray, float) -> float
    """ `|a - n| / max(|a| + |n|, floor)` over whole arrays (Euclidean norms). """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), floor)
    return float(np.linalg.norm(analytic - numeric)) / scale


# ------------------------------------------------------------------ checkpoints


def save_checkpoint(path, header, parameters, state=None):
    # type: (str, dict, list, AdamState|None) -> None
    """ Write a `cage-ckpt-1` container: header, named parameter blocks
    with their shapes and the optimizer state.

    Floats are written with their shortest round-tripping representation,
    so `load_checkpoint()` restores every value exactly. The file is
    replaced atomically.

    Raises:
        CheckpointError: If a value is not finite or not serializable.
    """
    document = OrderedDict([
        ("format", CHECKPOINT_FORMAT),
        ("header", header),
        ("parameters", [
            OrderedDict([("name", _parameter.name), ("shape", list(_parameter.shape)), ("values", _parameter.value.ravel().tolist())])
            for _parameter in parameters
        ]),
        ("adam", state.to_dict() if state is not None else None),
    ])
    try:
        text = _json.dumps(document, separators=(",", ":"), allow_nan=False)
    except (TypeError, ValueError) as error:
        raise CheckpointError("Cannot serialize checkpoint (%s)." % error)

    directory = _os.path.dirname(_os.path.abspath(path))
    handle, temporary = _tempfile.mkstemp(prefix=".checkpoint-", dir=directory)
    try:
        with _os.fdopen(handle, "w", encoding="utf-8", newline="\n") as _file:
            _file.write(text + "\n")
        _os.replace(temporary, path)
    except BaseException:
        if _os.path.exists(temporary):
            _os.remove(temporary)
        raise
    logger.info("Saved checkpoint '%s' (%d parameter blocks)", path, len(document["parameters"]))


def load_checkpoint(path):
    # type: (str) -> tuple
    """ Read a checkpoint written by `save_checkpoint()`.

    Returns:
        tuple[dict, list[Parameter], dict|None]: The header, the parameters
            in file order and the raw optimizer state (see `AdamState.from_dict()`).

    Raises:
        CheckpointError: If the file is not a valid `cage-ckpt-1` container.
    """
    try:
        with open(path, "r", encoding="utf-8") as _file:
            document = _json.load(_file, object_pairs_hook=OrderedDict)
    except ValueError as error:
        raise CheckpointError("'%s' is not a valid checkpoint (%s)." % (path, error))

    if not isinstance(document, dict) or document.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("'%s' is not a '%s' checkpoint." % (path, CHECKPOINT_FORMAT))

    parameters = []
    try:
        for block in document["parameters"]:
            shape = tuple(int(_size) for _size in block["shape"])
            values = np.array(block["values"], dtype=np.float64)
            if values.size != int(np.prod(shape, dtype=np.int64)):
                raise CheckpointError("Parameter '%s' has %d values for shape %s." % (block["name"], values.size, shape))
            parameters.append(Parameter(block["name"], values.reshape(shape)))
    except (KeyError, TypeError) as error:
        raise CheckpointError("'%s' has a malformed parameter block (%s)." % (path, error))

    for parameter in parameters:
        if not np.all(np.isfinite(parameter.value)):
            raise CheckpointError("Parameter '%s' contains non-finite values." % parameter.name)

    return document.get("header", {}), parameters, document.get("adam")
