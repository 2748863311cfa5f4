""" Train/test partitions of the contexts of a dataset.

Three protocols:

  - `context_aware`: a uniform split of the contexts;
  - `instance_generalization`: for every (task, class) pair the object
    instances are split, and a context follows its object within its task
    (a test object is never seen in training for that task);
  - `class_generalization`: every context of one held-out object class goes
    to the test set.
"""
import math as _math
from collections import OrderedDict, namedtuple

import numpy as np

from semgrasp.errors import EvaluationError

__all__ = ["PROTOCOLS", "SplitSpec", "Split", "make_splits"]

PROTOCOLS = ("context_aware", "instance_generalization", "class_generalization")


class SplitSpec(namedtuple("SplitSpec", ["protocol", "train_fraction", "held_out_class", "seed", "repetitions"],
                           defaults=("context_aware", 0.7, None, 0, 10))):
    """ How to split a dataset, and how many times.

    Attributes:
        protocol (str): One of `PROTOCOLS` (dashes are accepted for underscores).
        train_fraction (float): Share of contexts (or instances) used for training.
        held_out_class (str|None): Test class of the class protocol. When `None`,
            repetition `i` holds out the `i`-th class in vocabulary order (cycling).
        seed (int): Base seed; repetition `i` uses `seed + i`.
        repetitions (int): Number of splits.
    """
    __slots__ = ()

    def __new__(cls, protocol="context_aware", train_fraction=0.7, held_out_class=None, seed=0, repetitions=10):
        protocol = str(protocol).replace("-", "_")
        if protocol not in PROTOCOLS:
            raise EvaluationError("Unknown protocol '%s' (expected one of %s)." % (protocol, ", ".join(PROTOCOLS)))
        if not 0.0 < train_fraction < 1.0:
            raise EvaluationError("The train fraction must be in (0, 1) (got %r)." % (train_fraction,))
        if int(repetitions) < 1:
            raise EvaluationError("At least one repetition is required (got %r)." % (repetitions,))
        return super(SplitSpec, cls).__new__(cls, protocol, float(train_fraction), held_out_class, int(seed), int(repetitions))


class Split(namedtuple("Split", ["repetition", "seed", "train", "test", "held_out_class"])):
    """ One train/test partition (context ids, in dataset order). """
    __slots__ = ()


def _train_count(size, fraction):
    # type: (int, float) -> int
    """ Rounded share of `size`, keeping at least one item on each side. """
    return min(max(int(_math.floor(size * fraction + 0.5)), 1), size - 1)


def _context_aware(dataset, spec, rng):
    ids = dataset.context_ids()
    if len(ids) < 2:
        raise EvaluationError("A context-aware split needs at least 2 contexts (got %d)." % len(ids))
    chosen = set(rng.permutation(len(ids))[:_train_count(len(ids), spec.train_fraction)].tolist())
    return set(_id for _index, _id in enumerate(ids) if _index in chosen), None


def _instance_generalization(dataset, spec, rng):
    groups = OrderedDict()
    for context in dataset.contexts:
        objects = groups.setdefault((context.task, context.object_class), [])
        if context.object.object_id not in objects:
            objects.append(context.object.object_id)

    train_pairs = set()
    for (task, object_class), objects in groups.items():
        if len(objects) < 2:
            raise EvaluationError("The instance protocol needs at least 2 instances of '%s' for task '%s' (got %d)." % (object_class, task, len(objects)))
        order = rng.permutation(len(objects))[:_train_count(len(objects), spec.train_fraction)]
        train_pairs.update((task, objects[_index]) for _index in order.tolist())
    return set(_context.context_id for _context in dataset.contexts if (_context.task, _context.object.object_id) in train_pairs), None


def _class_generalization(dataset, spec, repetition):
    classes = [_class for _class in dataset.vocabularies.object_classes if any(_context.object_class == _class for _context in dataset.contexts)]
    if len(classes) < 2:
        raise EvaluationError("The class protocol needs contexts of at least 2 object classes (got %d)." % len(classes))
    held_out = spec.held_out_class
    if held_out is None:
        held_out = classes[repetition % len(classes)]
    elif held_out not in classes:
        raise EvaluationError("Held-out class '%s' has no contexts (classes: %s)." % (held_out, ", ".join(classes)))
    return set(_context.context_id for _context in dataset.contexts if _context.object_class != held_out), held_out


def make_splits(dataset, spec):
    # type: (object, SplitSpec) -> list[Split]
    """ The `spec.repetitions` train/test partitions of `dataset`.

    Every split is an exact partition of the contexts, and depends only on
    the dataset, the protocol and `spec.seed + repetition`.

    Raises:
        EvaluationError: Not enough contexts, instances or classes for the protocol.
    """
    splits = []
    for repetition in range(spec.repetitions):
        seed = spec.seed + repetition
        rng = np.random.default_rng(seed)
        if spec.protocol == "context_aware":
            train, held_out = _context_aware(dataset, spec, rng)
        elif spec.protocol == "instance_generalization":
            train, held_out = _instance_generalization(dataset, spec, rng)
        else:
            train, held_out = _class_generalization(dataset, spec, repetition)

        ids = dataset.context_ids()
        splits.append(Split(
            repetition=repetition,
            seed=seed,
            train=tuple(_id for _id in ids if _id in train),
            test=tuple(_id for _id in ids if _id not in train),
            held_out_class=held_out,
        ))
    return splits
