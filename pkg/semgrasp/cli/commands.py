""" The applications behind the `semgrasp` sub-commands.

Each sub-command is an `Application` built from a `RunConfig`: its
`main()` does the work, registers every file it writes (removed again if
the command fails) and prints a summary through the console.
"""
import logging as _logging
import os as _os
from collections import OrderedDict, namedtuple

from semgrasp import __version__
from semgrasp.application import Application
from semgrasp.components.table import Table
from semgrasp.dataset import (
    AFFORDANCE_RULES,
    DEFAULT_RULES,
    GeneratorConfig,
    GraspLabel,
    generate_synthetic,
    joint_task_state_rules,
    load_dataset,
    save_dataset,
)
from semgrasp.errors import SemgraspError
from semgrasp.evaluation import (
    SplitSpec,
    build_report,
    load_report,
    rank_and_filter,
    rejection_trial,
    render_report,
    report_files,
    report_tables,
    run_experiment,
    write_report,
)
from semgrasp.model import ModelConfig, load_model, save_model, train

__all__ = [
    "RunConfig",
    "RULE_TABLES",
    "PROTOCOL_NAMES",
    "GenerateApplication",
    "TrainApplication",
    "EvaluateApplication",
    "RankApplication",
    "ReportApplication",
    "COMMANDS",
]

logger = _logging.getLogger(__name__)

PROTOCOL_NAMES = OrderedDict([
    ("context-aware", "context_aware"),
    ("instance", "instance_generalization"),
    ("class", "class_generalization"),
])
""" Command line protocol names. `all` runs the three of them. """


def _joint_rules():
    config = GeneratorConfig()
    return joint_task_state_rules(config.tasks, config.states)


RULE_TABLES = OrderedDict([
    ("default", lambda: DEFAULT_RULES),
    ("affordance", lambda: AFFORDANCE_RULES),
    ("joint", _joint_rules),
])
""" Rule tables selectable with `gen --rules`. """


class RunConfig(namedtuple("RunConfig", [
    "command",
    "dataset",
    "output",
    "seed",
    "model_config",
    "split_spec",
    "generator_config",
    "protocols",
    "methods",
    "threshold",
    "jobs",
    "checkpoint",
    "context",
    "rejection",
], defaults=(None, None, 0, ModelConfig(), SplitSpec(), GeneratorConfig(), ("context_aware",), ("cage", "ca", "ft"), 0.01, 1, None, None, False))):
    """ Everything a sub-command needs, as parsed from the command line.

    Attributes:
        command (str): `gen`, `train`, `eval`, `rank` or `report`.
        dataset (str|None): Dataset file to read (all commands but `gen` and `report`).
        output (str|None): File or directory to write.
        seed (int): Seed of every random draw; recorded in every output.
        model_config (ModelConfig): Network and training settings.
        split_spec (SplitSpec): Split settings (its protocol is overridden by `protocols`).
        generator_config (GeneratorConfig): Synthetic data settings.
        protocols (tuple[str]): Protocols evaluated by `eval`.
        methods (tuple[str]): Methods compared by `eval` (ablation variants included).
        threshold (float): Rejection threshold of `rank` and of the rejection trial.
        jobs (int): Worker processes of `eval`.
        checkpoint (str|None): Model file read by `rank`.
        context (str|None): Context id ranked by `rank`.
        rejection (bool): Also run the rejection trial in `eval`.
    """
    __slots__ = ()

    def validate(self):
        # type: () -> RunConfig
        """ Check that every file the command reads exists.

        Raises:
            SemgraspError: On a missing input or output argument.
        """
        reads = []
        if self.command in ("train", "eval", "rank"):
            reads.append(("--dataset", self.dataset))
        if self.command == "rank":
            reads.append(("--checkpoint", self.checkpoint))
        if self.command == "report":
            reads.append(("--out", None if self.output is None else _os.path.join(self.output, "report.json")))
        for flag, path in reads:
            if path is None:
                raise SemgraspError("The '%s' command requires %s." % (self.command, flag))
            if not _os.path.isfile(path):
                raise SemgraspError("Input file '%s' does not exist (%s)." % (path, flag))
        if self.command in ("gen", "train", "eval") and not self.output:
            raise SemgraspError("The '%s' command requires --out." % self.command)
        if self.command == "rank" and self.context is None:
            raise SemgraspError("The 'rank' command requires --context.")
        return self


class CommandApplication(Application):
    """ Base of the sub-command applications. """

    def __init__(self, run_config, console=None):
        super(CommandApplication, self).__init__(console=console)
        self.run_config = run_config

    def on_finish(self, context):
        logger.debug("'%s' finished in %.2f seconds", self.title, context.duration)


class GenerateApplication(CommandApplication):
    """ `semgrasp gen`: write a synthetic dataset. """
    title = "semgrasp gen"

    def main(self):
        config = self.run_config
        dataset = generate_synthetic(config.generator_config, seed=config.seed)
        save_dataset(dataset, self.register_output(config.output))

        counts = OrderedDict((_label, 0) for _label in GraspLabel)
        for grasps in dataset.grasps.values():
            for grasp in grasps:
                counts[grasp.label] += 1

        table = Table("Dataset '%s' (seed %d)" % (config.output, config.seed), ["Objects", "Contexts", "Grasps"] + [_label.display_name for _label in counts])
        table.add_row(len(dataset.objects), len(dataset.contexts), dataset.num_grasps, *counts.values())
        self.console.print(table)
        return True


class TrainApplication(CommandApplication):
    """ `semgrasp train`: fit the network on a whole dataset and save it. """
    title = "semgrasp train"

    def main(self):
        config = self.run_config
        dataset = load_dataset(config.dataset)
        model_config = config.model_config._replace(seed=config.seed)

        checkpoint = self.register_output(config.output)
        losses_path = self.register_output(_os.path.splitext(config.output)[0] + "-losses.csv")

        model, losses = train(dataset.subset(dataset.context_ids()), dataset.vocabularies, model_config)
        save_model(model, checkpoint, seed=config.seed, extra={"dataset": _os.path.basename(config.dataset)})

        trace = Table("Loss trace", ["Epoch", "Loss"], digits=8)
        for epoch, loss in enumerate(losses, 1):
            trace.add_row(epoch, loss)
        with open(losses_path, "w", encoding="utf-8", newline="\n") as _file:
            _file.write("# seed=%d tool_version=%s\n" % (config.seed, __version__))
            _file.write(trace.to_csv() + "\n")

        summary = Table("Model '%s'" % checkpoint, ["Epochs", "Wide", "Deep", "Mask tasks", "Mask states", "First loss", "Last loss"])
        summary.add_row(len(losses), model_config.enable_wide, model_config.enable_deep, model_config.mask_tasks, model_config.mask_states, losses[0], losses[-1])
        self.console.print(summary)
        return True


class EvaluateApplication(CommandApplication):
    """ `semgrasp eval`: repeated splits, baselines, t-tests and the report. """
    title = "semgrasp eval"

    def main(self):
        config = self.run_config
        dataset = load_dataset(config.dataset)
        model_config = config.model_config._replace(seed=config.seed)

        experiments = []
        for protocol in config.protocols:
            spec = config.split_spec._replace(protocol=protocol, seed=config.seed)
            experiments.append(run_experiment(dataset, SplitSpec(*spec), config.methods, model_config, jobs=config.jobs))

        rejection = None
        if config.rejection:
            rejection = rejection_trial(dataset, model_config, threshold=config.threshold, seed=config.seed)

        report = build_report(experiments, config.seed, rejection, dataset_path=_os.path.basename(config.dataset))
        if not _os.path.isdir(config.output):
            _os.makedirs(config.output)
        for name in report_files(report):
            self.register_output(_os.path.join(config.output, name))
        write_report(report, config.output)

        for table in report_tables(report):
            self.console.print(table)
        return True


class RankApplication(CommandApplication):
    """ `semgrasp rank`: rank the grasps of one context with a saved model. """
    title = "semgrasp rank"

    def main(self):
        config = self.run_config
        model = load_model(config.checkpoint)
        dataset = load_dataset(config.dataset)
        try:
            context = dataset.context(config.context)
        except KeyError:
            raise SemgraspError("Unknown context id '%s' in '%s'." % (config.context, config.dataset))

        grasps = dataset.grasps[context.context_id]
        result = rank_and_filter(model, context, grasps, config.threshold)
        if result.rejected:
            self.console.print("REJECTED: no grasp above %g" % config.threshold, style="red")
            return True

        table = Table("Context '%s' (task %s, state %s, %s)" % (context.context_id, context.task, context.state, context.object_class), ["Rank", "Grasp", "Score", "Label"], digits=6)
        for rank, index in enumerate(result.order, 1):
            table.add_row(rank, index, result.scores[index], grasps[index].label.display_name)
        self.console.print(table)
        return True


class ReportApplication(CommandApplication):
    """ `semgrasp report`: re-render the tables of a saved `report.json`. """
    title = "semgrasp report"

    def main(self):
        config = self.run_config
        report = load_report(_os.path.join(config.output, "report.json"))
        self.console.print(render_report(report, width=self.console.width))
        return True


COMMANDS = OrderedDict([
    ("gen", GenerateApplication),
    ("train", TrainApplication),
    ("eval", EvaluateApplication),
    ("rank", RankApplication),
    ("report", ReportApplication),
])
