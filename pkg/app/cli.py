"""
Command line of the pose voting pipeline:

    python -m app.cli <command> [options]

Every command reads the pipeline configuration (--config, the bundled resources/default.cfg
otherwise) and applies the parameter flags on top of it. Exit codes: 0 success, 1 unexpected
failure or failed self test, 2 configuration or parameter error, 3 I/O or file format error.
"""
import argparse
import sys

from app.commands import run_command
from src.descriptors.base_regressor import RegressorKind
from src.evaluation.sweep import SWEEP_PARAMETERS
from src.utils.exceptions import ConfigError, DatasetIOError, DimensionMismatchError, \
    FormatError, ParameterError
from src.utils.logging import get_default_logger, set_log_level

logger = get_default_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v logs progress, -vv logs details")
    common.add_argument("--config", type=str, help="pipeline configuration file")
    common.add_argument("--tau", type=float, help="feature distance threshold of the votes")
    common.add_argument("--knn", type=int, help="nearest neighbors per scene patch")
    common.add_argument("--step", type=int, help="scene sampling step in pixels")
    common.add_argument("--protocol", choices=["original", "modes"], help="detection protocol")
    common.add_argument("--exact-nn", action="store_true", default=None,
                        help="brute-force retrieval instead of the tree forest")
    common.add_argument("--n", type=int, help="number of hypotheses, protocol default if unset")
    common.add_argument("--seed", type=int, help="seed of training, index and scenes")
    return common


def _detection_inputs(parser: argparse.ArgumentParser, restrict: bool = True):
    parser.add_argument("--data", "-d", type=str, required=True, help="data set directory")
    parser.add_argument("--regressor", "-r", type=str, required=True, help="model file")
    parser.add_argument("--codebook", "-c", type=str, required=True, help="codebook file")
    parser.add_argument("--out", "-o", type=str, required=True, help="output directory")
    parser.add_argument("--frames", type=str, nargs="+", help="frame ids, all frames if unset")
    if not restrict:
        return
    parser.add_argument("--objects", type=int, nargs="+",
                        help="restrict the retrieval to the codebooks of these objects")
    parser.add_argument("--workers", type=int, default=1,
                        help="frames detected in parallel, stage times become overlapping")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="pvote", description="6D object pose estimation by "
                                     "voting of learned RGB-D patch descriptors.")
    commands = parser.add_subparsers(dest="command", required=True)

    render = commands.add_parser("render", parents=[common],
                                 help="render codebook views or synthetic test scenes")
    render.add_argument("--out", "-o", type=str, required=True, help="data set directory")
    render.add_argument("--models", "-m", type=str,
                        help="data set with a models directory, procedural objects if unset")
    render.add_argument("--scenes", type=int,
                        help="compose this many seeded test scenes instead of the view set")

    train = commands.add_parser("train", parents=[common], help="fit a descriptor regressor")
    train.add_argument("--out", "-o", type=str, required=True, help="run directory")
    train.add_argument("--models", "-m", type=str,
                       help="data set with a models directory, procedural objects if unset")
    train.add_argument("--kind", choices=RegressorKind.ALL, help="regressor kind")
    train.add_argument("--dimension", type=int, help="descriptor dimension")
    train.add_argument("--limit", type=int, default=20000, help="number of training patches")
    train.add_argument("--report", type=int, default=8,
                       help="patches in the reconstruction report, 0 disables it")

    build = commands.add_parser("build-codebook", parents=[common],
                                help="render the view set and store the votes of all patches")
    build.add_argument("--regressor", "-r", type=str, required=True, help="model file")
    build.add_argument("--out", "-o", type=str, required=True, help="codebook file")
    build.add_argument("--models", "-m", type=str,
                       help="data set with a models directory, procedural objects if unset")
    build.add_argument("--objects", type=int, nargs="+", help="object ids, all if unset")

    detect = commands.add_parser("detect", parents=[common], help="detect objects in frames")
    _detection_inputs(detect)
    detect.add_argument("--debug", action="store_true",
                        help="write vote maps, cell weights and segmentation maps")

    evaluate = commands.add_parser("evaluate", parents=[common],
                                   help="detect and score against the ground truth")
    _detection_inputs(evaluate)

    sweep = commands.add_parser("sweep", parents=[common], help="score a range of values")
    _detection_inputs(sweep, restrict=False)
    sweep.add_argument("--parameter", "-p", choices=SWEEP_PARAMETERS, required=True)
    sweep.add_argument("--values", type=float, nargs="+", required=True)

    selftest = commands.add_parser("selftest", parents=[common],
                                   help="closed-loop benchmark on synthetic scenes")
    selftest.add_argument("--out", "-o", type=str, help="output directory")
    selftest.add_argument("--scenes", type=int, default=20, help="number of test scenes")
    selftest.add_argument("--limit", type=int, default=20000, help="number of training patches")
    selftest.add_argument("--no-calibrate", action="store_true",
                          help="use the configured tau instead of calibrating it")
    return parser


def exit_code(error: BaseException) -> int:
    """exit code of a failed command"""
    if isinstance(error, (ConfigError, ParameterError, DimensionMismatchError)):
        return EXIT_CONFIG
    if isinstance(error, (DatasetIOError, FormatError, OSError)):
        return EXIT_IO
    return EXIT_FAILURE


def main(argv: list[str] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_log_level("DEBUG" if args.verbose > 1 else "INFO")

    try:
        return run_command(args)
    except Exception as e:  # pylint: disable=broad-except
        code = exit_code(e)
        if code == EXIT_FAILURE:
            logger.exception(f"{args.command} failed")
        else:
            logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
