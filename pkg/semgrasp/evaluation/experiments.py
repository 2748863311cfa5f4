""" Repeated train/test experiments comparing ranking methods.

Methods are named like on the command line: `cage` (the full network),
`ca`, `ft`, and the ablation variants of `semgrasp.model.ABLATIONS`
(`wide-and-deep` is the same run as `cage`).
"""
import concurrent.futures as _futures
import logging as _logging
from collections import OrderedDict, namedtuple

from semgrasp.baselines import ca_rank, ft_rank, ft_train
from semgrasp.errors import EvaluationError
from semgrasp.evaluation.metrics import average_precision, expected_random_ap, mean_ap, rank_by_scores, relevant_label
from semgrasp.evaluation.splits import make_splits
from semgrasp.model import ABLATIONS, ModelConfig, ablation_config, score_grasps, train

__all__ = ["BASE_METHODS", "normalize_methods", "RepetitionResult", "ExperimentResult", "evaluate_split", "run_experiment"]

logger = _logging.getLogger(__name__)

BASE_METHODS = ("cage", "ca", "ft")


def normalize_methods(methods):
    # type: (list[str]) -> tuple[str]
    """ Validated method names without duplicates, `wide-and-deep` folded into `cage`.

    Raises:
        EvaluationError: On an unknown name or an empty list.
    """
    names = []
    for method in methods:
        method = method.strip().lower()
        if method == "wide-and-deep":
            method = "cage"
        if method not in BASE_METHODS and method not in ABLATIONS:
            raise EvaluationError("Unknown method '%s' (expected one of %s)." % (method, ", ".join(BASE_METHODS + tuple(ABLATIONS))))
        if method not in names:
            names.append(method)
    if not names:
        raise EvaluationError("At least one method is required.")
    return tuple(names)


class RepetitionResult(namedtuple("RepetitionResult", [
    "repetition",
    "seed",
    "held_out_class",
    "train_contexts",
    "test_contexts",
    "maps",
    "excluded",
    "expected_random_map",
])):
    """ Scores of every method on one split.

    Attributes:
        maps (OrderedDict[str, float]): MAP of every method.
        excluded (int): Test contexts without Suitable or Neutral grasps (left out of every MAP).
        expected_random_map (float): Expected MAP of a uniformly random ranking on this test set.
    """
    __slots__ = ()


class ExperimentResult(namedtuple("ExperimentResult", ["spec", "methods", "model_config", "repetitions"])):
    """ All the repetitions of one protocol. """
    __slots__ = ()

    def scores(self, method):
        # type: (str) -> list[float]
        return [_repetition.maps[method] for _repetition in self.repetitions]

    def mean(self, method):
        # type: (str) -> float
        scores = self.scores(method)
        return sum(scores) / len(scores)


def _model_config(method, config, seed):
    if method == "cage":
        return config._replace(seed=seed)
    return ablation_config(config, method)._replace(seed=seed)


def evaluate_split(dataset, split, methods, config):
    # type: (object, object, tuple, ModelConfig) -> RepetitionResult
    """ Train every method on `split.train` and score its rankings of `split.test`. """
    training = dataset.subset(split.train)
    testing = dataset.subset(split.test)

    expected, excluded = [], 0
    for context, grasps in testing:
        relevant = relevant_label([_grasp.label for _grasp in grasps])
        if relevant is None:
            excluded += 1
            continue
        expected.append(expected_random_ap(len(grasps), sum(1 for _grasp in grasps if _grasp.label == relevant)))
    if not expected:
        raise EvaluationError("Split %d has no test context with a defined average precision." % split.repetition)

    maps = OrderedDict()
    for method in methods:
        if method == "ca":
            rankings = [ca_rank(_grasps, [split.seed, _position]) for _position, (_, _grasps) in enumerate(testing)]
        elif method == "ft":
            table = ft_train(training)
            rankings = [ft_rank(table, _context, _grasps) for _context, _grasps in testing]
        else:
            model, _ = train(training, dataset.vocabularies, _model_config(method, config, split.seed))
            rankings = [rank_by_scores(score_grasps(model, _context, _grasps)) for _context, _grasps in testing]

        maps[method] = mean_ap([
            average_precision([_grasps[_index].label for _index in _ranking])
            for _ranking, (_, _grasps) in zip(rankings, testing)
        ])

    logger.info(
        "Split %d (seed %d): %s",
        split.repetition, split.seed, ", ".join("%s=%.4f" % (_method, _map) for _method, _map in maps.items()),
    )
    return RepetitionResult(
        repetition=split.repetition,
        seed=split.seed,
        held_out_class=split.held_out_class,
        train_contexts=len(split.train),
        test_contexts=len(split.test),
        maps=maps,
        excluded=excluded,
        expected_random_map=sum(expected) / len(expected),
    )


def _evaluate_job(arguments):
    return evaluate_split(*arguments)


def run_experiment(dataset, spec, methods, config=None, jobs=1):
    """ Run every repetition of `spec` for `methods`.

    With `jobs > 1` the repetitions run in a process pool; results are
    collected in repetition order, so they do not depend on `jobs`.

    Returns:
        ExperimentResult: The per-split scores.
    """
    config = (config or ModelConfig()).validate()
    methods = normalize_methods(methods)
    splits = make_splits(dataset, spec)
    jobs = max(1, min(int(jobs), len(splits)))
    logger.info("Running %d %s splits of %s with %d worker(s)", len(splits), spec.protocol, ", ".join(methods), jobs)

    arguments = [(dataset, _split, methods, config) for _split in splits]
    if jobs == 1:
        repetitions = [_evaluate_job(_arguments) for _arguments in arguments]
    else:
        with _futures.ProcessPoolExecutor(max_workers=jobs) as _pool:
            repetitions = list(_pool.map(_evaluate_job, arguments))

    return ExperimentResult(spec, methods, config, repetitions)
