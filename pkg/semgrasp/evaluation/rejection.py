""" Ranking with rejection: refuse every candidate of a context when the
network deems none of them suitable enough. """
import logging as _logging
from collections import namedtuple

import numpy as np

from semgrasp.dataset.records import GraspLabel
from semgrasp.errors import EvaluationError
from semgrasp.evaluation.metrics import rank_by_scores
from semgrasp.model import score_grasps, train

__all__ = ["DEFAULT_THRESHOLD", "RankingResult", "rank_and_filter", "RejectionTrialResult", "rejection_trial"]

logger = _logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.01


class RankingResult(namedtuple("RankingResult", ["order", "scores", "rejected", "threshold"])):
    """ Output of `rank_and_filter()`.

    Attributes:
        order (tuple[int]): Grasp positions by decreasing score (always filled,
            also for rejected contexts).
        scores (tuple[float]): Scores in original grasp order.
        rejected (bool): No score reached the threshold.
        threshold (float): The threshold that was applied.
    """
    __slots__ = ()

    @property
    def best_score(self):
        # type: () -> float
        return self.scores[self.order[0]]


def rank_and_filter(model, context, grasps, threshold=DEFAULT_THRESHOLD):
    # type: (object, object, list, float) -> RankingResult
    """ Rank `grasps` by suitability, rejecting them all when the best score is below `threshold`.

    Raises:
        EvaluationError: On an empty grasp list.
    """
    grasps = list(grasps)
    if not grasps:
        raise EvaluationError("Cannot rank an empty grasp list.")
    scores = score_grasps(model, context, grasps)
    order = rank_by_scores(scores)
    rejected = scores[order[0]] < threshold
    return RankingResult(tuple(order), tuple(scores), rejected, threshold)


class RejectionTrialResult(namedtuple("RejectionTrialResult", [
    "feasible",
    "infeasible",
    "accepted_feasible",
    "rejected_infeasible",
    "top_suitable",
    "threshold",
    "seed",
])):
    """ Counts of the withheld-context rejection experiment.

    Attributes:
        feasible (int): Withheld contexts with at least one Suitable grasp.
        infeasible (int): Withheld contexts whose grasps are all NotSuitable.
        accepted_feasible (int): Feasible contexts that were not rejected.
        rejected_infeasible (int): Infeasible contexts that were rejected.
        top_suitable (int): Accepted feasible contexts whose top-ranked grasp is Suitable.
    """
    __slots__ = ()


def rejection_trial(dataset, config, count=16, threshold=DEFAULT_THRESHOLD, seed=0):
    """ Withhold `count` feasible and `count` infeasible contexts, train on the
    others and apply `rank_and_filter()` to the withheld ones.

    A context is infeasible when every one of its grasps is NotSuitable and
    feasible when at least one is Suitable.

    Raises:
        EvaluationError: If the dataset has fewer than `count` contexts of either kind.
    """
    feasible, infeasible = [], []
    for context in dataset.contexts:
        labels = [_grasp.label for _grasp in dataset.grasps[context.context_id]]
        if all(_label == GraspLabel.NOT_SUITABLE for _label in labels):
            infeasible.append(context.context_id)
        elif GraspLabel.SUITABLE in labels:
            feasible.append(context.context_id)
    if len(feasible) < count or len(infeasible) < count:
        raise EvaluationError("A rejection trial needs %d feasible and %d infeasible contexts (got %d and %d)." % (count, count, len(feasible), len(infeasible)))

    rng = np.random.default_rng(seed)
    withheld_feasible = [feasible[_index] for _index in sorted(rng.choice(len(feasible), count, replace=False).tolist())]
    withheld_infeasible = [infeasible[_index] for _index in sorted(rng.choice(len(infeasible), count, replace=False).tolist())]
    withheld = set(withheld_feasible) | set(withheld_infeasible)

    model, _ = train(dataset.subset([_id for _id in dataset.context_ids() if _id not in withheld]), dataset.vocabularies, config)

    accepted, rejected, top_suitable = 0, 0, 0
    for context, grasps in dataset.subset(withheld):
        result = rank_and_filter(model, context, grasps, threshold)
        if context.context_id in withheld_infeasible:
            rejected += int(result.rejected)
        elif not result.rejected:
            accepted += 1
            top_suitable += int(grasps[result.order[0]].label == GraspLabel.SUITABLE)

    logger.info("Rejection trial: %d/%d infeasible rejected, %d/%d feasible accepted", rejected, count, accepted, count)
    return RejectionTrialResult(count, count, accepted, rejected, top_suitable, threshold, seed)
