""" Experiment reports: a JSON document, its rendered tables and one CSV per table.

The JSON document is the source of truth; `report_tables()` rebuilds the
tables from it, so a saved report can be re-rendered at any time.
"""
import json as _json
import logging as _logging
import os as _os
from collections import OrderedDict

from semgrasp import __version__
from semgrasp.components.table import Table
from semgrasp.errors import EvaluationError
from semgrasp.evaluation.metrics import AP_FLAVOR
from semgrasp.evaluation.stats import paired_t_test
from semgrasp.model import ABLATIONS

__all__ = ["REPORT_FORMAT", "build_report", "report_tables", "render_report", "write_report", "report_files", "load_report"]

logger = _logging.getLogger(__name__)

REPORT_FORMAT = "cage-report-1"

FT_NOTE = (
    "FT scores a grasp affordance by (suitable + neutral/2 + 1) / (total + 3) under the "
    "(task, state, object class) key, backing off per affordance to (task, object class), (task) and global "
    "counts; an object class missing from training has no evidence and keeps the input order."
)


def _t_test_entry(reference, other, result):
    return OrderedDict([
        ("reference", reference),
        ("method", other),
        ("t", result.t if abs(result.t) != float("inf") else ("+inf" if result.t > 0 else "-inf")),
        ("p", result.p),
        ("stars", result.stars),
        ("degenerate", result.degenerate),
        ("mean_difference", result.mean_difference),
    ])


def _experiment_entry(experiment):
    methods = list(experiment.methods)
    spec = experiment.spec
    entry = OrderedDict([
        ("protocol", spec.protocol),
        ("train_fraction", spec.train_fraction),
        ("held_out_class", spec.held_out_class),
        ("seed", spec.seed),
        ("repetitions", spec.repetitions),
        ("methods", methods),
        ("model_config", experiment.model_config.to_dict()),
        ("splits", [
            OrderedDict([
                ("repetition", _repetition.repetition),
                ("seed", _repetition.seed),
                ("held_out_class", _repetition.held_out_class),
                ("train_contexts", _repetition.train_contexts),
                ("test_contexts", _repetition.test_contexts),
                ("excluded_contexts", _repetition.excluded),
                ("expected_random_map", _repetition.expected_random_map),
                ("maps", OrderedDict(_repetition.maps)),
            ])
            for _repetition in experiment.repetitions
        ]),
        ("means", OrderedDict((_method, experiment.mean(_method)) for _method in methods)),
        ("expected_random_map", sum(_r.expected_random_map for _r in experiment.repetitions) / len(experiment.repetitions)),
        ("excluded_contexts", sum(_r.excluded for _r in experiment.repetitions)),
    ])

    reference = "cage" if "cage" in methods else methods[0]
    t_tests = []
    if len(experiment.repetitions) >= 2:
        for method in methods:
            if method != reference:
                t_tests.append(_t_test_entry(reference, method, paired_t_test(experiment.scores(reference), experiment.scores(method))))
    entry["t_tests"] = t_tests

    ablation = []
    if any(_method in ABLATIONS for _method in methods):
        for name, (row, _) in ABLATIONS.items():
            method = "cage" if name == "wide-and-deep" else name
            if method not in methods:
                continue
            test = None
            if method != "cage" and "cage" in methods and len(experiment.repetitions) >= 2:
                test = _t_test_entry("cage", method, paired_t_test(experiment.scores("cage"), experiment.scores(method)))
            ablation.append(OrderedDict([("row", row), ("method", method), ("map", experiment.mean(method)), ("t_test", test)]))
    entry["ablation"] = ablation
    return entry


def build_report(experiments, seed, rejection=None, dataset_path=None):
    """ Report document of one or more `ExperimentResult`s and an optional
    `RejectionTrialResult`.

    Returns:
        OrderedDict: JSON-serializable report.
    """
    report = OrderedDict([
        ("format", REPORT_FORMAT),
        ("tool_version", __version__),
        ("seed", seed),
        ("dataset", dataset_path),
        ("ap_flavor", AP_FLAVOR),
        ("ft_scoring", FT_NOTE),
        ("experiments", [_experiment_entry(_experiment) for _experiment in experiments]),
    ])
    if rejection is not None:
        report["rejection"] = OrderedDict(rejection._asdict())
    return report


def _label(method):
    return method.upper() if method in ("cage", "ca", "ft") else method


def _stat(value):
    return value if isinstance(value, str) else float(value)


def report_tables(report):
    # type: (dict) -> list[Table]
    """ The tables of a report document, in display order. """
    tables = []
    for entry in report["experiments"]:
        protocol = entry["protocol"]
        methods = entry["methods"]
        with_class = entry["protocol"] == "class_generalization"

        columns = ["Split", "Seed"] + (["Held-out class"] if with_class else []) + [_label(_m) for _m in methods] + ["Random (expected)", "Excluded"]
        splits = Table("%s: MAP per split" % protocol, columns)
        for split in entry["splits"]:
            row = [split["repetition"], split["seed"]] + ([split["held_out_class"]] if with_class else [])
            row += [float(split["maps"][_m]) for _m in methods]
            row += [float(split["expected_random_map"]), split["excluded_contexts"]]
            splits.add_row(*row)
        tables.append(splits)

        tests = dict((_test["method"], _test) for _test in entry["t_tests"])
        summary = Table("%s: mean MAP (%d splits, AP %s)" % (protocol, len(entry["splits"]), report.get("ap_flavor", AP_FLAVOR)), ["Method", "MAP", "t", "p", "Significance"])
        for method in methods:
            test = tests.get(method)
            summary.add_row(
                _label(method),
                float(entry["means"][method]),
                None if test is None else _stat(test["t"]),
                None if test is None else float(test["p"]),
                None if test is None else test["stars"],
            )
        summary.add_row("Random (expected)", float(entry["expected_random_map"]), None, None, None)
        tables.append(summary)

        if entry["ablation"]:
            ablation = Table("%s: ablation" % protocol, ["Model", "MAP", "t", "p", "Significance"])
            for row in entry["ablation"]:
                test = row["t_test"]
                ablation.add_row(
                    row["row"],
                    float(row["map"]),
                    None if test is None else _stat(test["t"]),
                    None if test is None else float(test["p"]),
                    None if test is None else test["stars"],
                )
            tables.append(ablation)

    if report.get("rejection"):
        rejection = report["rejection"]
        table = Table("rejection (threshold %g)" % rejection["threshold"], ["Contexts", "Count", "Rejected", "Accepted", "Top grasp suitable"])
        table.add_row("infeasible", rejection["infeasible"], rejection["rejected_infeasible"], rejection["infeasible"] - rejection["rejected_infeasible"], None)
        table.add_row("feasible", rejection["feasible"], rejection["feasible"] - rejection["accepted_feasible"], rejection["accepted_feasible"], rejection["top_suitable"])
        tables.append(table)
    return tables


def render_report(report, width=None):
    # type: (dict, int|None) -> str
    """ Plain-text rendering of a report: a short header, then every table. """
    header = [
        "semgrasp %s report (seed %s)" % (report.get("tool_version"), report.get("seed")),
        "Average precision: %s. Contexts without Suitable or Neutral grasps are excluded from MAP." % report.get("ap_flavor", AP_FLAVOR),
        report.get("ft_scoring", FT_NOTE),
    ]
    blocks = ["\n".join(header)]
    blocks.extend(_table.render(width) for _table in report_tables(report))
    return "\n\n".join(blocks) + "\n"


def _slug(name):
    # type: (str) -> str
    return "".join(_char if _char.isalnum() else "_" for _char in name.split(" (")[0]).strip("_").lower().replace("__", "_")


def report_files(report):
    # type: (dict) -> list[str]
    """ Names of the files `write_report()` creates for `report`. """
    return ["report.json", "report.txt"] + ["%s.csv" % _slug(_table.name) for _table in report_tables(report)]


def write_report(report, directory):
    # type: (dict, str) -> list[str]
    """ Write `report.json`, `report.txt` and one CSV per table into `directory`.

    Every file carries the seed and the tool version (the CSV files in a
    leading `#` comment line).

    Returns:
        list[str]: The written paths.
    """
    if not _os.path.isdir(directory):
        _os.makedirs(directory)
    paths = []

    path = _os.path.join(directory, "report.json")
    with open(path, "w", encoding="utf-8", newline="\n") as _file:
        _file.write(_json.dumps(report, indent=2, allow_nan=False) + "\n")
    paths.append(path)

    path = _os.path.join(directory, "report.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as _file:
        _file.write(render_report(report, width=120))
    paths.append(path)

    for table in report_tables(report):
        path = _os.path.join(directory, "%s.csv" % _slug(table.name))
        with open(path, "w", encoding="utf-8", newline="\n") as _file:
            _file.write("# seed=%s tool_version=%s\n" % (report.get("seed"), report.get("tool_version")))
            _file.write(table.to_csv() + "\n")
        paths.append(path)

    logger.info("Wrote %d report files to '%s'", len(paths), directory)
    return paths


def load_report(path):
    # type: (str) -> dict
    """ Read a `report.json` written by `write_report()`.

    Raises:
        EvaluationError: If the file is not a report.
    """
    try:
        with open(path, "r", encoding="utf-8") as _file:
            report = _json.load(_file, object_pairs_hook=OrderedDict)
    except ValueError as error:
        raise EvaluationError("'%s' is not a valid report (%s)." % (path, error))
    if not isinstance(report, dict) or report.get("format") != REPORT_FORMAT:
        raise EvaluationError("'%s' is not a '%s' report." % (path, REPORT_FORMAT))
    return report
