""" Ranking quality: average precision with the neutral fallback, and MAP.

The relevant items of a ranking are its Suitable grasps. A context without
Suitable grasps is scored on its Neutral grasps instead (are they ranked
above the NotSuitable ones?); a context with neither has no defined AP and
is left out of the mean.
"""
from collections import namedtuple

from semgrasp.dataset.records import GraspLabel
from semgrasp.errors import EvaluationError

__all__ = [
    "AP_FLAVOR",
    "RankedList",
    "rank_by_scores",
    "relevant_label",
    "average_precision",
    "mean_ap",
    "expected_random_ap",
]

AP_FLAVOR = "non-interpolated"


def rank_by_scores(scores):
    # type: (list[float]) -> list[int]
    """ Positions sorted by decreasing score; equal scores keep their input order. """
    return sorted(range(len(scores)), key=lambda _index: -scores[_index])


def relevant_label(labels):
    # type: (list) -> GraspLabel|None
    """ The label counted as relevant for `labels`: Suitable if present, else
    Neutral if present, else `None` (AP undefined). """
    labels = [GraspLabel(_label) for _label in labels]
    if GraspLabel.SUITABLE in labels:
        return GraspLabel.SUITABLE
    if GraspLabel.NEUTRAL in labels:
        return GraspLabel.NEUTRAL
    return None


def average_precision(ranked_labels):
    # type: (list) -> float|None
    """ Average precision of labels listed in ranked order.

    The mean, over the ranks `k` of relevant items, of the precision of the
    top `k`.

    Examples:
        ```pycon
        >>> S, N, X = GraspLabel.SUITABLE, GraspLabel.NEUTRAL, GraspLabel.NOT_SUITABLE
        >>> round(average_precision([S, N, S]), 4)
        0.8333
        >>> average_precision([N, X])
        1.0
        >>> average_precision([X, X]) is None
        True
        ```

    Returns:
        float|None: AP in `[0, 1]`, `None` when no label is relevant.

    Raises:
        EvaluationError: On an empty ranking.
    """
    ranked_labels = list(ranked_labels)
    if not ranked_labels:
        raise EvaluationError("Cannot compute the average precision of an empty ranking.")
    relevant = relevant_label(ranked_labels)
    if relevant is None:
        return None

    hits = 0
    total = 0.0
    for rank, label in enumerate(ranked_labels, 1):
        if label == relevant:
            hits += 1
            total += hits / rank
    return total / hits


def mean_ap(average_precisions):
    # type: (list) -> float
    """ Mean of the defined (non-`None`) APs.

    Raises:
        EvaluationError: If no AP is defined.
    """
    defined = [_ap for _ap in average_precisions if _ap is not None]
    if not defined:
        raise EvaluationError("Cannot compute a MAP: no context has a defined average precision.")
    return sum(defined) / len(defined)


def expected_random_ap(n, relevant):
    # type: (int, int) -> float|None
    """ Expected AP of a uniformly random ranking of `n` items, `relevant` of which are relevant.

        E[AP] = ((r - 1) / (n - 1) * (n - H_n) + H_n) / n

    where `H_n` is the n-th harmonic number.

    Examples:
        ```pycon
        >>> expected_random_ap(2, 1)
        0.75
        ```
    """
    if n < 1 or not 0 <= relevant <= n:
        raise EvaluationError("Expected 0 <= relevant <= n and n >= 1 (got n=%r, relevant=%r)." % (n, relevant))
    if relevant == 0:
        return None
    if n == 1:
        return 1.0
    harmonic = sum(1.0 / _k for _k in range(1, n + 1))
    return ((relevant - 1) / (n - 1) * (n - harmonic) + harmonic) / n


class RankedList(namedtuple("RankedList", ["order", "scores", "labels"])):
    """ A ranking of the grasps of one context.

    Attributes:
        order (tuple[int]): Positions into the original grasp list, best first.
        scores (tuple[float]|None): Scores in ranked order (non-increasing).
        labels (tuple[GraspLabel]): Ground-truth labels in ranked order.
    """
    __slots__ = ()

    @classmethod
    def from_order(cls, order, labels, scores=None):
        """ Build from a ranking `order` and the labels/scores in original order.

        Raises:
            EvaluationError: If `order` is not a permutation of the grasps.
        """
        order = tuple(int(_index) for _index in order)
        if sorted(order) != list(range(len(labels))):
            raise EvaluationError("A ranking must be a permutation of the %d grasps (got %r)." % (len(labels), order))
        ranked_scores = None if scores is None else tuple(float(scores[_index]) for _index in order)
        if ranked_scores is not None and any(_a < _b for _a, _b in zip(ranked_scores, ranked_scores[1:])):
            raise EvaluationError("Ranked scores must be non-increasing.")
        return cls(order, ranked_scores, tuple(GraspLabel(labels[_index]) for _index in order))

    @classmethod
    def from_scores(cls, scores, labels):
        """ Rank by decreasing score, ties in input order. """
        return cls.from_order(rank_by_scores(scores), labels, scores)

    def average_precision(self):
        # type: () -> float|None
        return average_precision(self.labels)
