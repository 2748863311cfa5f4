""" Paired t-test between two methods scored on the same splits. """
import math as _math
from collections import namedtuple

from scipy import stats as _stats

from semgrasp.errors import EvaluationError

__all__ = ["TTestResult", "paired_t_test", "significance_stars", "DEGENERATE_P_VALUE"]

DEGENERATE_P_VALUE = 1e-12
""" Upper bound reported for `p` when every difference is the same non-zero value. """


class TTestResult(namedtuple("TTestResult", ["t", "p", "n", "mean_difference", "degenerate"])):
    """ Outcome of `paired_t_test()`.

    Attributes:
        t (float): The t statistic (`inf`/`-inf` when the differences are constant and non-zero).
        p (float): Two-sided p-value. In the degenerate case it is an upper bound.
        n (int): Number of pairs.
        mean_difference (float): Mean of `a - b`.
        degenerate (bool): The differences have zero variance.
    """
    __slots__ = ()

    @property
    def stars(self):
        # type: () -> str
        return significance_stars(self.p)

    def describe(self):
        # type: () -> str
        if self.degenerate and self.p <= DEGENERATE_P_VALUE:
            return "t=%s, p<%g (constant differences)" % ("+inf" if self.t > 0 else "-inf", DEGENERATE_P_VALUE)
        return "t=%.4f, p=%.4g%s" % (self.t, self.p, self.stars)


def significance_stars(p):
    # type: (float) -> str
    """ `***` below 0.001, `**` below 0.01, `*` below 0.05, empty otherwise. """
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def paired_t_test(scores_a, scores_b):
    # type: (list[float], list[float]) -> TTestResult
    """ Two-sided paired t-test of `scores_a` against `scores_b`.

    `t = mean(d) / (std(d) / sqrt(n))` with `d = a - b` and the sample
    standard deviation; `p` comes from the Student t distribution with
    `n - 1` degrees of freedom.

    Examples:
        ```pycon
        >>> paired_t_test([0.5, 0.6], [0.5, 0.6])
        TTestResult(t=0.0, p=1.0, n=2, mean_difference=0.0, degenerate=True)
        ```

    Raises:
        EvaluationError: On lists of different lengths or with fewer than 2 pairs.
    """
    scores_a = [float(_score) for _score in scores_a]
    scores_b = [float(_score) for _score in scores_b]
    if len(scores_a) != len(scores_b):
        raise EvaluationError("Paired scores must have the same length (got %d and %d)." % (len(scores_a), len(scores_b)))
    n = len(scores_a)
    if n < 2:
        raise EvaluationError("A paired t-test needs at least 2 pairs (got %d)." % n)

    differences = [_a - _b for _a, _b in zip(scores_a, scores_b)]
    mean = sum(differences) / n
    variance = sum((_d - mean) ** 2 for _d in differences) / (n - 1)

    if all(_d == differences[0] for _d in differences):
        mean = differences[0]
        if mean == 0.0:
            return TTestResult(0.0, 1.0, n, 0.0, True)
        return TTestResult(_math.copysign(_math.inf, mean), DEGENERATE_P_VALUE, n, mean, True)

    t = mean / _math.sqrt(variance / n)
    p = float(2.0 * _stats.t.sf(abs(t), n - 1))
    return TTestResult(t, min(p, 1.0), n, mean, False)
