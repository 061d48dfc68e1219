"""
The commands of the command line. Every command receives the parsed arguments, reads the
configuration and returns the exit code.
"""
import os
from argparse import Namespace
from dataclasses import replace

from src.codebook.codebook import merge
from src.codebook.codebook_file import load_codebook, save_codebook
from src.descriptors.model_file import load_regressor
from src.descriptors.report import reconstruction_report
from src.descriptors.training import fit_regressor
from src.evaluation.benchmark import closed_loop_benchmark, object_codebooks, view_patches
from src.evaluation.dataset_io import INTRINSICS_FILE, list_frames, load_intrinsics, \
    load_meshes, load_scene, save_meshes, save_scene
from src.evaluation.matching import GroundTruth, evaluation_table, matched_errors, match_frame
from src.evaluation.pipeline import run_detect, write_detections, write_timings
from src.evaluation.sweep import sweep
from src.evaluation.synthetic import make_scenes
from src.rendering.mesh import Mesh
from src.rendering.procedural import default_objects
from src.rendering.rasterizer import render
from src.utils.config import PipelineConfig, load_config
from src.utils.exceptions import ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

# closed-loop acceptance thresholds
SELFTEST_MIN_RECALL = 0.9
SELFTEST_MIN_PRECISION = 0.8


def pipeline_config(args: Namespace) -> PipelineConfig:
    """configuration file with the parameter flags applied"""
    return load_config(args.config).with_overrides(
        tau=args.tau, knn=args.knn, step=args.step, protocol=args.protocol,
        exact_nn=args.exact_nn, n=args.n, seed=args.seed)


def _meshes(models: str | None, object_ids: list[int] = None) -> dict[int, Mesh]:
    meshes = load_meshes(models) if models else default_objects()
    if object_ids:
        missing = set(object_ids).difference(meshes)
        if missing:
            raise ParameterError(f"Unknown object ids {sorted(missing)}", "commands")
        meshes = {object_id: meshes[object_id] for object_id in object_ids}
    return meshes


def _dataset_config(config: PipelineConfig, data: str) -> PipelineConfig:
    """the configuration with the camera of the data set"""
    intrinsics = load_intrinsics(os.path.join(data, INTRINSICS_FILE))
    if intrinsics != config.camera:
        logger.info(f"Using the camera of {data}: {intrinsics}")
    return replace(config, camera=intrinsics)


def _scenes(data: str, frame_ids: list[str] | None, config: PipelineConfig):
    frame_ids = frame_ids or list_frames(data)
    if not frame_ids:
        logger.warning(f"No frames in {data}")
    return [load_scene(data, frame_id, config.camera) for frame_id in frame_ids]


def render_command(args: Namespace) -> int:
    """writes the view set of every mesh or seeded test scenes as a data set"""
    config = pipeline_config(args)
    meshes = _meshes(args.models)
    save_meshes(args.out, meshes)
    if args.scenes is not None:
        scenes = make_scenes(meshes, args.scenes, args.seed or 0, config.camera, config.scene)
        for scene in scenes:
            save_scene(args.out, scene.ground_truth.frame, scene.frame, scene.ground_truth)
        print(f"Wrote {len(scenes)} scenes to {args.out}")
        return 0

    views = config.render.views()
    for object_id, mesh in sorted(meshes.items()):
        for index, pose in enumerate(views):
            frame_id = f"{object_id}_{index:05d}"
            view = render(mesh, pose, config.camera)
            save_scene(args.out, frame_id, view.to_frame(),
                       GroundTruth(frame_id, ((object_id, pose),)))
        logger.info(f"Wrote {len(views)} views of {mesh.name}")
    print(f"Wrote {len(views) * len(meshes)} views to {args.out}")
    return 0


def train_command(args: Namespace) -> int:
    """fits the configured regressor on patches of the rendered view sets"""
    config = pipeline_config(args)
    regressor_cfg = config.regressor
    if args.kind is not None:
        regressor_cfg = replace(regressor_cfg, kind=args.kind)
    if args.dimension is not None:
        regressor_cfg = replace(regressor_cfg, dimension=args.dimension)
    config = replace(config, regressor=regressor_cfg)

    patches = view_patches(_meshes(args.models), config.render.views(), config, args.limit,
                           args.seed or 0)
    regressor, run = fit_regressor(config.regressor, patches, config.train, args.out)
    if args.report > 0:
        name = f"{regressor.kind.upper()}-{regressor.dimension}"
        reconstruction_report({name: regressor}, patches[:args.report], args.out)
    config.save(os.path.join(args.out, "pipeline.cfg"))

    summary = f", final loss {run.loss:.5f}" if run is not None else ""
    print(f"Wrote {os.path.join(args.out, 'model.pvrg')}{summary}")
    return 0


def build_codebook_command(args: Namespace) -> int:
    """renders the view set of the selected meshes and writes their joint codebook file"""
    config = pipeline_config(args)
    regressor = load_regressor(args.regressor)
    meshes = _meshes(args.models, args.objects)
    codebook = merge(list(object_codebooks(meshes, regressor, config).values()))
    save_codebook(codebook, args.out)
    print(f"Wrote {len(codebook)} entries of {len(meshes)} objects to {args.out}")
    return 0


def detect_command(args: Namespace) -> int:
    """detections.csv and timings.csv of the frames of a data set"""
    config = _dataset_config(pipeline_config(args), args.data)
    frames = [(gt.frame, frame) for frame, gt in _scenes(args.data, args.frames, config)]
    run = run_detect(frames, load_codebook(args.codebook, config.index),
                     load_regressor(args.regressor), load_meshes(args.data), config,
                     args.objects, os.path.join(args.out, "debug") if args.debug else None,
                     args.workers)
    write_detections(os.path.join(args.out, "detections.csv"), run.results)
    write_timings(os.path.join(args.out, "timings.csv"), run.timings)
    print(f"{sum(len(d) for d in run.detections.values())} detections in {len(frames)} frames, "
          f"{run.timings.per_frame().total:.0f} ms per frame")
    return 0


def evaluate_command(args: Namespace) -> int:
    """detects and writes evaluation.csv next to the detections and timings"""
    config = _dataset_config(pipeline_config(args), args.data)
    scenes = _scenes(args.data, args.frames, config)
    meshes = load_meshes(args.data)
    run = run_detect([(gt.frame, frame) for frame, gt in scenes],
                     load_codebook(args.codebook, config.index), load_regressor(args.regressor),
                     meshes, config, args.objects, workers=args.workers)
    matchings = [match_frame(result.detections, gt, meshes, config.metric)
                 for result, (_, gt) in zip(run.results, scenes)]
    table = evaluation_table(matchings)

    os.makedirs(args.out, exist_ok=True)
    write_detections(os.path.join(args.out, "detections.csv"), run.results)
    write_timings(os.path.join(args.out, "timings.csv"), run.timings)
    table.to_csv(os.path.join(args.out, "evaluation.csv"), index=False, float_format="%.6g")
    errors = matched_errors(matchings)
    if len(errors):
        logger.info(f"Mean pose error of the true positives {errors.mean() * 1000:.1f} mm")
    print(table.to_string(index=False))
    return 0


def sweep_command(args: Namespace) -> int:
    """scores the detection for every value of the swept parameter, writes table and plot"""
    config = _dataset_config(pipeline_config(args), args.data)
    scenes = _scenes(args.data, args.frames, config)
    table = sweep(args.parameter, args.values, config, scenes,
                  load_codebook(args.codebook, config.index), load_regressor(args.regressor),
                  load_meshes(args.data), args.out)
    print(table.to_string(index=False))
    return 0


def selftest_command(args: Namespace) -> int:
    """runs the closed-loop benchmark, fails if recall or precision are below the thresholds"""
    config = pipeline_config(args)
    result = closed_loop_benchmark(config, args.scenes, args.seed or 0, train_limit=args.limit,
                                   calibrate=not args.no_calibrate, out_dir=args.out)
    print(result.table.to_string(index=False))
    total = result.total
    if total["recall"] < SELFTEST_MIN_RECALL or total["precision"] < SELFTEST_MIN_PRECISION:
        logger.error(f"Self test failed: recall {total['recall']:.3f} (>= "
                     f"{SELFTEST_MIN_RECALL}), precision {total['precision']:.3f} (>= "
                     f"{SELFTEST_MIN_PRECISION})")
        return 1
    return 0


COMMANDS = {
    "render": render_command,
    "train": train_command,
    "build-codebook": build_codebook_command,
    "detect": detect_command,
    "evaluate": evaluate_command,
    "sweep": sweep_command,
    "selftest": selftest_command,
}


def run_command(args: Namespace) -> int:
    return COMMANDS[args.command](args)
