import io
import json
import os
import shutil
import tempfile
import unittest
from unittest import mock

from semgrasp import __version__
from semgrasp.cli import build_parser, main, parse_run_config
from semgrasp.dataset import load_dataset
from semgrasp.errors import SemgraspError
from semgrasp.evaluation import PROTOCOLS
from semgrasp.model import ModelConfig, load_model


def run(argv):
    with mock.patch("sys.stdout", new_callable=io.StringIO) as stdout:
        status = main(argv, exit=False)
    return status, stdout.getvalue()


class ParseRunConfigTestCase(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp()
        self.dataset = os.path.join(self.directory, "data.jsonl")
        open(self.dataset, "w").close()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_eval_options(self):
        config, _ = parse_run_config([
            "eval", "--dataset", self.dataset, "--out", self.directory, "--seed", "3",
            "--protocol", "all", "--reps", "4", "--methods", "cage,ft", "--ablate", "all",
            "--epochs", "7", "--batch-size", "0", "--crosses", "task_x_affordance",
        ])
        self.assertEqual(config.protocols, PROTOCOLS)
        self.assertEqual(config.methods, ("cage", "ft", "wide-and-deep", "without-deep", "without-wide", "without-states", "without-tasks"))
        self.assertEqual(config.split_spec.repetitions, 4)
        self.assertEqual(config.split_spec.seed, 3)
        self.assertEqual((config.model_config.epochs, config.model_config.batch_size, config.model_config.seed), (7, 0, 3))
        self.assertEqual(config.model_config.crosses, ("task_x_affordance",))

    def test_dashed_protocol(self):
        config, _ = parse_run_config(["eval", "--dataset", self.dataset, "--out", self.directory, "--protocol", "class"])
        self.assertEqual(config.protocols, ("class_generalization",))

    def test_train_ablation(self):
        config, _ = parse_run_config(["train", "--dataset", self.dataset, "--out", "m.json", "--ablate", "without-states"])
        self.assertTrue(config.model_config.mask_states)

    def test_missing_inputs(self):
        with self.assertRaises(SemgraspError):
            parse_run_config(["train", "--out", "m.json"])
        with self.assertRaises(SemgraspError):
            parse_run_config(["train", "--dataset", os.path.join(self.directory, "missing.jsonl"), "--out", "m.json"])
        with self.assertRaises(SemgraspError):
            parse_run_config(["rank", "--dataset", self.dataset, "--checkpoint", self.dataset])
        with self.assertRaises(SemgraspError):
            parse_run_config(["gen"])

    def test_batch_size_help_names_the_default(self):
        with mock.patch.dict(os.environ, {"COLUMNS": "1000"}), mock.patch("sys.stdout", new_callable=io.StringIO) as stdout:
            with self.assertRaises(SystemExit):
                build_parser().parse_args(["train", "--help"])
        self.assertIn("default: %d, mini-batch training rather than full-batch" % ModelConfig().batch_size, stdout.getvalue())

    def test_missing_dataset_exit_code(self):
        missing = os.path.join(self.directory, "missing.jsonl")
        with mock.patch("sys.stderr", new_callable=io.StringIO) as stderr:
            self.assertEqual(main(["train", "--dataset", missing, "--out", "m.json"], exit=False), 2)
        self.assertIn("does not exist", stderr.getvalue())


class CommandsTestCase(unittest.TestCase):
    """ The sub-commands chained on a small generated dataset. """

    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.mkdtemp()
        cls.dataset = os.path.join(cls.directory, "data.jsonl")
        cls.status, cls.output = run(["gen", "--out", cls.dataset, "--seed", "1", "--objects-per-class", "1", "--grasps", "4"])

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.directory)

    def path(self, name):
        return os.path.join(self.directory, name)

    def test_gen(self):
        self.assertEqual(self.status, 0)
        dataset = load_dataset(self.dataset)
        self.assertEqual(len(dataset.objects), 5)
        self.assertEqual(dataset.num_grasps, 4 * len(dataset.contexts))
        self.assertIn("Dataset '%s' (seed 1)" % self.dataset, self.output)

    def test_gen_is_reproducible(self):
        other = self.path("again.jsonl")
        self.assertEqual(run(["gen", "--out", other, "--seed", "1", "--objects-per-class", "1", "--grasps", "4"])[0], 0)
        with open(self.dataset, "rb") as _first, open(other, "rb") as _second:
            self.assertEqual(_first.read(), _second.read())

    def test_train_and_rank(self):
        checkpoint = self.path("model.json")
        status, output = run(["train", "--dataset", self.dataset, "--out", checkpoint, "--epochs", "2", "--seed", "3"])
        self.assertEqual(status, 0)
        self.assertIn("Model '%s'" % checkpoint, output)

        model = load_model(checkpoint)
        self.assertEqual(model.config.seed, 3)
        with open(self.path("model-losses.csv"), encoding="utf-8") as _file:
            lines = _file.read().splitlines()
        self.assertEqual(lines[0], "# seed=3 tool_version=%s" % __version__)
        self.assertEqual(lines[1], "Epoch,Loss")
        self.assertEqual(len(lines), 4)

        status, output = run(["rank", "--dataset", self.dataset, "--checkpoint", checkpoint, "--context", "cup-00/pour/0", "--threshold", "0"])
        self.assertEqual(status, 0)
        self.assertIn("Context 'cup-00/pour/0'", output)
        self.assertIn("| Rank | Grasp | Score", output)

        status, output = run(["rank", "--dataset", self.dataset, "--checkpoint", checkpoint, "--context", "cup-00/pour/0", "--threshold", "1.5"])
        self.assertEqual(status, 0)
        self.assertIn("REJECTED", output)

        status, output = run(["rank", "--dataset", self.dataset, "--checkpoint", checkpoint, "--context", "kettle-00/pour/0"])
        self.assertEqual(status, 1)
        self.assertIn("Unknown context id", output)

    def test_eval_and_report(self):
        results = self.path("results")
        status, output = run([
            "eval", "--dataset", self.dataset, "--out", results, "--seed", "2",
            "--reps", "2", "--methods", "ca,ft", "--epochs", "1",
        ])
        self.assertEqual(status, 0)
        self.assertIn("context_aware: mean MAP", output)
        for name in ("report.json", "report.txt", "context_aware_map_per_split.csv", "context_aware_mean_map.csv"):
            self.assertTrue(os.path.isfile(os.path.join(results, name)), name)
        with open(os.path.join(results, "report.json"), encoding="utf-8") as _file:
            report = json.load(_file)
        self.assertEqual(report["seed"], 2)
        self.assertEqual(report["dataset"], "data.jsonl")
        self.assertEqual([_split["seed"] for _split in report["experiments"][0]["splits"]], [2, 3])

        status, output = run(["report", "--out", results])
        self.assertEqual(status, 0)
        self.assertIn("semgrasp %s report (seed 2)" % __version__, output)

    def test_failed_eval_leaves_no_report(self):
        results = self.path("failed")
        status, output = run([
            "eval", "--dataset", self.dataset, "--out", results,
            "--protocol", "class", "--held-out-class", "kettle", "--methods", "ca",
        ])
        self.assertEqual(status, 1)
        self.assertIn("Application Error", output)
        self.assertFalse(os.path.exists(os.path.join(results, "report.json")))


if __name__ == "__main__":
    unittest.main()
