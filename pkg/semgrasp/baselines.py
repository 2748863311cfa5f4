""" Reference ranking methods the network is compared against.

  - CA (context agnostic) ranks the grasps of a context at random.
  - FT (frequency table) ranks them by how often their grasp affordance was
    labeled suitable in similar training contexts.

Both return rankings as lists of positions into the input grasp list.
"""
import logging as _logging
from collections import namedtuple

import numpy as np

from semgrasp.errors import EvaluationError
from semgrasp.features import extract

__all__ = ["ca_rank", "FrequencyTable", "ft_train", "ft_score", "ft_rank", "BACKOFF_LEVELS", "NO_EVIDENCE"]

logger = _logging.getLogger(__name__)

BACKOFF_LEVELS = (("task", "state", "object_class"), ("task", "object_class"), ("task",), ())
""" Context keys tried in order by `ft_score()`, finest first; `()` is the global table.

The class-free levels `("task",)` and `()` are only consulted for object
classes the table was trained on. """

NO_EVIDENCE = (0, 0, 0)


def ca_rank(grasps, seed):
    # type: (list, object) -> list[int]
    """ Uniformly random ranking of `grasps`, reproducible for a given seed.

    Args:
        grasps (list): The candidates.
        seed (int|tuple[int]): Anything `numpy.random.default_rng()` accepts.

    Returns:
        list[int]: Positions into `grasps`, best first.

    Raises:
        EvaluationError: On an empty grasp list.
    """
    if not len(grasps):
        raise EvaluationError("Cannot rank an empty grasp list.")
    return np.random.default_rng(seed).permutation(len(grasps)).tolist()


def _context_key(context, level):
    # type: (object, tuple) -> tuple
    return tuple(getattr(context, _name) for _name in level)


class FrequencyTable(namedtuple("FrequencyTable", ["counts", "object_classes"])):
    """ Label counts per (context key, grasp affordance), at every backoff level.

    Attributes:
        counts (tuple[dict]): One dict per entry of `BACKOFF_LEVELS`, mapping a
            context key to `{grasp affordance: [suitable, neutral, not suitable]}`.
        object_classes (frozenset[str]): Classes seen in training.
    """
    __slots__ = ()

    def lookup(self, context, affordance):
        # type: (object, str) -> tuple
        """ Label counts of `affordance` at the finest level whose key for
        `context` has seen it, and that level.

        An object class missing from the training data has no evidence at
        any level: `(NO_EVIDENCE, None)`.
        """
        if context.object_class not in self.object_classes:
            return NO_EVIDENCE, None
        for level, counts in zip(BACKOFF_LEVELS, self.counts):
            triple = counts.get(_context_key(context, level), {}).get(affordance)
            if triple is not None:
                return tuple(triple), level
        return NO_EVIDENCE, None

    def total(self):
        # type: () -> int
        return sum(sum(_triple) for _affordances in self.counts[-1].values() for _triple in _affordances.values())


def ft_train(examples):
    """ Count the labels of every `(context key, grasp affordance)` pair.

    Args:
        examples (Iterable[tuple[Context, list[LabeledGrasp]]]): Training contexts with their grasps.

    Returns:
        FrequencyTable: Counts at every backoff level.
    """
    counts = tuple({} for _ in BACKOFF_LEVELS)
    object_classes = set()
    for context, grasps in examples:
        object_classes.add(context.object_class)
        for grasp in grasps:
            affordance = extract(context, grasp).grasp_affordance
            for level, table in zip(BACKOFF_LEVELS, counts):
                triple = table.setdefault(_context_key(context, level), {}).setdefault(affordance, [0, 0, 0])
                triple[int(grasp.label)] += 1
    table = FrequencyTable(counts, frozenset(object_classes))
    logger.debug("Frequency table of %d grasps over %d object classes", table.total(), len(object_classes))
    return table


def ft_score(table, context, grasp):
    # type: (FrequencyTable, object, object) -> float
    """ Smoothed suitability `(suitable + neutral / 2 + 1) / (total + 3)` of
    the grasp affordance, counted at the finest level that has seen it.
    Without evidence the score is `1/3`. """
    (suitable, neutral, not_suitable), _ = table.lookup(context, extract(context, grasp).grasp_affordance)
    return (suitable + 0.5 * neutral + 1.0) / (suitable + neutral + not_suitable + 3.0)


def ft_rank(table, context, grasps):
    # type: (FrequencyTable, object, list) -> list[int]
    """ Positions of `grasps` by decreasing `ft_score()`, ties in input order.

    Never fails on unseen contexts: the lookup backs off to coarser keys,
    and grasps of an unseen object class all tie.
    """
    scores = [ft_score(table, context, _grasp) for _grasp in grasps]
    return sorted(range(len(grasps)), key=lambda _index: -scores[_index])
