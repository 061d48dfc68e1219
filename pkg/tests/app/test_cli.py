import contextlib
import io
import os
import unittest
from tempfile import TemporaryDirectory

import pandas as pd

from app.cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_IO, build_parser, exit_code, main
from src.evaluation.dataset_io import list_frames, load_meshes
from src.evaluation.pipeline import DETECTION_COLUMNS
from src.evaluation.sweep import SWEEP_COLUMNS
from src.utils.exceptions import ConfigError, DatasetIOError, FormatError, ParameterError

SMALL_CONFIG = """
[render]
subdivisions = 0
inplane_steps = 2

[regressor]
dimension = 8

[index]
exact = true
"""


def run(*argv: str) -> int:
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return main(list(argv))


class TestParser(unittest.TestCase):
    def test_flags(self):
        args = build_parser().parse_args(["detect", "-d", "data", "-r", "model.pvrg", "-c",
                                          "book.pvcb", "-o", "out", "--tau", "2.5", "--knn", "5",
                                          "--protocol", "original", "--exact-nn", "-vv"])
        self.assertEqual((args.tau, args.knn, args.protocol, args.exact_nn), (2.5, 5, "original",
                                                                              True))
        self.assertEqual(args.verbose, 2)
        self.assertIsNone(args.step)
        self.assertEqual(args.workers, 1)

    def test_exact_nn_unset(self):
        args = build_parser().parse_args(["selftest"])
        self.assertIsNone(args.exact_nn)
        self.assertEqual(args.scenes, 20)

    def test_invalid_choice(self):
        with contextlib.redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as context:
            build_parser().parse_args(["detect", "--protocol", "best"])
        self.assertEqual(context.exception.code, 2)


class TestExitCodes(unittest.TestCase):
    def test_mapping(self):
        self.assertEqual(exit_code(ConfigError("bad")), EXIT_CONFIG)
        self.assertEqual(exit_code(ParameterError("bad")), EXIT_CONFIG)
        self.assertEqual(exit_code(DatasetIOError("missing")), EXIT_IO)
        self.assertEqual(exit_code(FormatError("truncated", 12)), EXIT_IO)
        self.assertEqual(exit_code(FileNotFoundError("missing")), EXIT_IO)
        self.assertEqual(exit_code(RuntimeError("unexpected")), EXIT_FAILURE)

    def test_missing_config_file(self):
        with TemporaryDirectory() as root:
            code = run("render", "-o", os.path.join(root, "data"), "--scenes", "1", "--config",
                       os.path.join(root, "missing.cfg"))
        self.assertEqual(code, EXIT_CONFIG)

    def test_invalid_flag_value(self):
        with TemporaryDirectory() as root:
            code = run("render", "-o", os.path.join(root, "data"), "--scenes", "1", "--tau", "-1")
        self.assertEqual(code, EXIT_CONFIG)

    def test_missing_data_set(self):
        with TemporaryDirectory() as root:
            code = run("detect", "-d", os.path.join(root, "missing"), "-r", "model.pvrg", "-c",
                       "book.pvcb", "-o", os.path.join(root, "out"))
        self.assertEqual(code, EXIT_IO)


class TestWorkflow(unittest.TestCase):
    def test_commands(self):
        with TemporaryDirectory() as root:
            config = os.path.join(root, "small.cfg")
            with open(config, "w", encoding="utf-8") as config_file:
                config_file.write(SMALL_CONFIG)
            data, run_dir = os.path.join(root, "data"), os.path.join(root, "run")
            model, book = os.path.join(run_dir, "model.pvrg"), os.path.join(root, "book.pvcb")
            common = ["--config", config, "--seed", "1"]

            self.assertEqual(run("render", "-o", data, "--scenes", "2", *common), 0)
            self.assertEqual(list_frames(data), ["000001", "000002"])
            self.assertEqual(sorted(load_meshes(data)), [1, 2, 3])

            self.assertEqual(run("train", "-o", run_dir, "--limit", "600", *common), 0)
            self.assertTrue(os.path.exists(model))
            self.assertTrue(os.path.exists(os.path.join(run_dir, "reconstruction.csv")))
            self.assertTrue(os.path.exists(os.path.join(run_dir, "pipeline.cfg")))

            self.assertEqual(run("build-codebook", "-r", model, "-o", book, *common), 0)
            self.assertTrue(os.path.exists(book))

            inputs = ["-d", data, "-r", model, "-c", book]
            detected = os.path.join(root, "detect")
            self.assertEqual(run("detect", *inputs, "-o", detected, "--debug", *common), 0)
            detections = pd.read_csv(os.path.join(detected, "detections.csv"))
            self.assertEqual(list(detections.columns), DETECTION_COLUMNS)
            self.assertTrue(os.path.exists(os.path.join(detected, "debug", "votes_000001.png")))

            evaluated = os.path.join(root, "evaluate")
            self.assertEqual(run("evaluate", *inputs, "-o", evaluated, *common), 0)
            table = pd.read_csv(os.path.join(evaluated, "evaluation.csv"), dtype={"object_id": str})
            total = table.set_index("object_id").loc["total"]
            self.assertEqual(total["tp"] + total["fn"], 6)

            swept = os.path.join(root, "sweep")
            self.assertEqual(run("sweep", *inputs, "-o", swept, "-p", "tau", "--values", "0",
                                 *common), 0)
            table = pd.read_csv(os.path.join(swept, "sweep_tau.csv"))
            self.assertEqual(list(table.columns), SWEEP_COLUMNS)
            self.assertEqual(table["f1"].iloc[0], 0.0)


if __name__ == '__main__':
    unittest.main()
