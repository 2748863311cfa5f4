""" Evaluation of grasp rankings: metrics, split protocols, significance
tests, ranking with rejection, experiment runner and reports. """
from semgrasp.evaluation.experiments import (
    BASE_METHODS,
    ExperimentResult,
    RepetitionResult,
    evaluate_split,
    normalize_methods,
    run_experiment,
)
from semgrasp.evaluation.metrics import (
    AP_FLAVOR,
    RankedList,
    average_precision,
    expected_random_ap,
    mean_ap,
    rank_by_scores,
    relevant_label,
)
from semgrasp.evaluation.rejection import (
    DEFAULT_THRESHOLD,
    RankingResult,
    RejectionTrialResult,
    rank_and_filter,
    rejection_trial,
)
from semgrasp.evaluation.report import build_report, load_report, render_report, report_files, report_tables, write_report
from semgrasp.evaluation.splits import PROTOCOLS, Split, SplitSpec, make_splits
from semgrasp.evaluation.stats import TTestResult, paired_t_test, significance_stars
