""" Command line entry point.

Usage:
    semgrasp gen    --out data.jsonl [--seed N] [--objects-per-class 8] [--grasps 20] [--rules default]
    semgrasp train  --dataset data.jsonl --out model.json [--epochs 150] [--ablate without-tasks]
    semgrasp eval   --dataset data.jsonl --out results/ [--protocol context-aware] [--reps 10]
                    [--methods cage,ca,ft] [--ablate all] [--jobs 4] [--rejection]
    semgrasp rank   --dataset data.jsonl --checkpoint model.json --context cup-00/pour/0 [--threshold 0.01]
    semgrasp report --out results/
"""
import argparse as _argparse
import logging as _logging
import sys as _sys

from semgrasp import __version__
from semgrasp.cli.commands import COMMANDS, PROTOCOL_NAMES, RULE_TABLES, RunConfig
from semgrasp.dataset import GeneratorConfig
from semgrasp.errors import SemgraspError
from semgrasp.evaluation import PROTOCOLS, SplitSpec
from semgrasp.model import ABLATIONS, ModelConfig, ablation_config

__all__ = ["main", "build_parser", "parse_run_config"]

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def _positive_int(value):
    # type: (str) -> int
    try:
        number = int(value)
    except ValueError:
        raise _argparse.ArgumentTypeError("expected an integer (got '%s')" % value)
    if number < 1:
        raise _argparse.ArgumentTypeError("expected a positive integer (got %d)" % number)
    return number


def _names(value):
    # type: (str) -> list[str]
    return [_name.strip() for _name in value.split(",") if _name.strip()]


def build_parser():
    # type: () -> _argparse.ArgumentParser
    parser = _argparse.ArgumentParser(prog="semgrasp", description="Context-aware semantic grasp ranking.")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)

    common = _argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed of every random draw (default: %(default)s)")
    common.add_argument("--out", help="output file (gen, train) or directory (eval, report)")
    common.add_argument("--verbose", "-v", action="store_true", help="log debug messages")

    training = _argparse.ArgumentParser(add_help=False)
    training.add_argument("--dataset", help="dataset file (cage-ds-1)")
    training.add_argument("--epochs", type=_positive_int, default=ModelConfig().epochs)
    training.add_argument("--batch-size", type=int, default=ModelConfig().batch_size, help="examples per Adam step (default: %(default)s, mini-batch training rather than full-batch; 0 for full-batch updates)")
    training.add_argument("--learning-rate", type=float, default=ModelConfig().learning_rate)
    training.add_argument("--crosses", type=_names, default=[], help="comma separated crossed wide features")

    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    gen = commands.add_parser("gen", parents=[common], help="generate a synthetic dataset")
    gen.add_argument("--objects-per-class", type=_positive_int, default=GeneratorConfig().objects_per_class)
    gen.add_argument("--grasps", type=_positive_int, default=GeneratorConfig().grasps_per_context, help="grasps per context")
    gen.add_argument("--states-per-task", type=_positive_int, default=GeneratorConfig().states_per_task)
    gen.add_argument("--rules", choices=list(RULE_TABLES), default="default", help="labeling rule table")
    gen.add_argument("--material-noise", type=float, default=0.0, help="probability of recording a wrong part material")

    train = commands.add_parser("train", parents=[common, training], help="train the network on a whole dataset")
    train.add_argument("--ablate", choices=list(ABLATIONS), default="wide-and-deep", help="model variant")

    evaluate = commands.add_parser("eval", parents=[common, training], help="compare methods over repeated splits")
    evaluate.add_argument("--protocol", choices=list(PROTOCOL_NAMES) + list(PROTOCOLS) + ["all"], default="context-aware")
    evaluate.add_argument("--reps", type=_positive_int, default=SplitSpec().repetitions, help="random splits per protocol")
    evaluate.add_argument("--train-fraction", type=float, default=SplitSpec().train_fraction)
    evaluate.add_argument("--held-out-class", default=None, help="test class of the class protocol (default: cycle)")
    evaluate.add_argument("--methods", type=_names, default=["cage", "ca", "ft"], help="comma separated: cage, ca, ft")
    evaluate.add_argument("--ablate", type=_names, default=[], help="comma separated ablation variants, or 'all'")
    evaluate.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    evaluate.add_argument("--rejection", action="store_true", help="also run the rejection trial")
    evaluate.add_argument("--threshold", type=float, default=0.01)

    rank = commands.add_parser("rank", parents=[common], help="rank the grasps of one context")
    rank.add_argument("--dataset", help="dataset file (cage-ds-1)")
    rank.add_argument("--checkpoint", help="model file written by 'train'")
    rank.add_argument("--context", help="context id")
    rank.add_argument("--threshold", type=float, default=0.01, help="rejection threshold (default: %(default)s)")

    commands.add_parser("report", parents=[common], help="re-render the report saved in --out")
    return parser


def parse_run_config(argv=None):
    # type: (list[str]|None) -> tuple
    """ Parse the command line into a `RunConfig` (and the raw namespace).

    Raises:
        SemgraspError: On inconsistent arguments (e.g. a missing input file).
    """
    arguments = build_parser().parse_args(argv)
    command = arguments.command

    model_config = ModelConfig(seed=arguments.seed)
    if command in ("train", "eval"):
        model_config = model_config._replace(
            epochs=arguments.epochs,
            batch_size=arguments.batch_size,
            learning_rate=arguments.learning_rate,
            crosses=tuple(arguments.crosses),
        )
    if command == "train":
        model_config = ablation_config(model_config, arguments.ablate)

    fields = dict(
        command=command,
        dataset=getattr(arguments, "dataset", None),
        output=arguments.out,
        seed=arguments.seed,
        model_config=model_config,
    )

    if command == "gen":
        fields["generator_config"] = GeneratorConfig(
            objects_per_class=arguments.objects_per_class,
            grasps_per_context=arguments.grasps,
            states_per_task=arguments.states_per_task,
            rule_table=RULE_TABLES[arguments.rules](),
            material_noise=arguments.material_noise,
        )

    if command == "eval":
        if arguments.protocol == "all":
            protocols = PROTOCOLS
        else:
            protocols = (PROTOCOL_NAMES.get(arguments.protocol, arguments.protocol),)
        ablations = list(ABLATIONS) if arguments.ablate == ["all"] else arguments.ablate
        fields.update(
            protocols=tuple(protocols),
            methods=tuple(arguments.methods) + tuple(ablations),
            split_spec=SplitSpec(
                train_fraction=arguments.train_fraction,
                held_out_class=arguments.held_out_class,
                seed=arguments.seed,
                repetitions=arguments.reps,
            ),
            jobs=arguments.jobs,
            rejection=arguments.rejection,
            threshold=arguments.threshold,
        )

    if command == "rank":
        fields.update(checkpoint=arguments.checkpoint, context=arguments.context, threshold=arguments.threshold)

    return RunConfig(**fields).validate(), arguments


def _setup_logging(verbose):
    handler = _logging.StreamHandler(_sys.stderr)
    handler.setFormatter(_logging.Formatter(LOG_FORMAT))
    root = _logging.getLogger("semgrasp")
    root.handlers[:] = [handler]
    root.setLevel(_logging.DEBUG if verbose else _logging.INFO)


def main(argv=None, exit=True):
    # type: (list[str]|None, bool) -> int
    """ Run one sub-command and return (or exit with) its status. """
    if argv is None:
        argv = _sys.argv[1:]
    _setup_logging("--verbose" in argv or "-v" in argv)

    try:
        run_config, _ = parse_run_config(argv)
    except SemgraspError as error:
        _sys.stderr.write("semgrasp: error: %s\n" % error)
        if exit:
            _sys.exit(2)
        return 2

    return COMMANDS[run_config.command](run_config).run(exit=exit)
