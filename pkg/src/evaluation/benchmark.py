"""
Closed-loop synthetic benchmark: the regressor and the codebooks are learned from renders of the
meshes, the detector runs on seeded synthetic scenes of the same meshes and is scored against
their known poses.
"""
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.codebook.codebook import Codebook, build_codebook, merge
from src.descriptors.base_regressor import BaseRegressor
from src.descriptors.training import fit_regressor
from src.evaluation.matching import FrameMatching, evaluation_table, match_frame
from src.evaluation.pipeline import DetectionRun, calibrate_tau, run_detect, write_detections, \
    write_timings
from src.evaluation.synthetic import SyntheticScene, make_scenes
from src.geometry.viewpoints import ViewpointSet, sample_icosahedron_views
from src.patches.sampling import Patch, sample_view_patches
from src.rendering.mesh import Mesh
from src.rendering.procedural import default_objects
from src.rendering.rasterizer import render
from src.utils.config import PipelineConfig
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)


@dataclass(eq=False)
class BenchmarkResult:
    """
    :param run: detections and timings
    :param matchings: matching of every scene
    :param table: per object evaluation table with total row
    :param tau: vote threshold the detector ran with
    :param scenes: the synthetic scenes
    """
    run: DetectionRun
    matchings: list[FrameMatching]
    table: pd.DataFrame
    tau: float
    scenes: list[SyntheticScene]

    @property
    def total(self) -> pd.Series:
        """the total row of the evaluation table"""
        return self.table.set_index("object_id").loc["total"]


def view_patches(meshes: dict[int, Mesh], views: ViewpointSet, config: PipelineConfig,
                 limit: int = None, seed: int = 0) -> list[Patch]:
    """
    Foreground patches of rendered views of every mesh.
    :param meshes: object id -> mesh
    :param views: viewpoint set
    :param config: pipeline configuration, camera and patch blocks are used
    :param limit: keeps about limit patches, drawn evenly over the views, all if None
    :param seed: seed of the subsampling
    """
    rng = np.random.default_rng(seed)
    per_view = None if limit is None else max(1, int(np.ceil(limit / (len(views) * len(meshes)))))
    patches = []
    for mesh in meshes.values():
        for pose in views:
            samples = [patch for patch, _ in
                       sample_view_patches(render(mesh, pose, config.camera), config.patch)]
            if per_view is not None and len(samples) > per_view:
                samples = [samples[i] for i in np.sort(rng.choice(len(samples), per_view,
                                                                  replace=False))]
            patches.extend(samples)
    logger.info(f"Sampled {len(patches)} patches from {len(views)} views of {len(meshes)} meshes")
    return patches


def heldout_views(config: PipelineConfig) -> ViewpointSet:
    """views between the codebook views, used for threshold calibration"""
    return sample_icosahedron_views(max(config.render.subdivisions - 1, 0),
                                    config.render.radius * 1.15, 5)


def object_codebooks(meshes: dict[int, Mesh], regressor: BaseRegressor,
                     config: PipelineConfig) -> dict[int, Codebook]:
    """codebook of every mesh from the configured viewpoint set"""
    views = config.render.views()
    return {object_id: build_codebook(mesh, views, regressor, config.patch, config.camera,
                                      object_id, config.index)
            for object_id, mesh in sorted(meshes.items())}


def closed_loop_benchmark(config: PipelineConfig, scene_count: int = 20, seed: int = 0,
                          meshes: dict[int, Mesh] = None, train_limit: int = 20000,
                          tau_quantile: float = 0.9, calibrate: bool = True,
                          out_dir: str = None) -> BenchmarkResult:
    """
    Learns regressor and codebooks from renders of the meshes and evaluates the detector on
    seeded synthetic scenes.
    :param config: pipeline configuration
    :param scene_count: number of test scenes
    :param seed: seed of the scenes and the patch subsampling
    :param meshes: object id -> mesh, the procedural test objects if None
    :param train_limit: number of regressor training patches
    :param tau_quantile: quantile of the threshold calibration
    :param calibrate: calibrate tau on held-out views, the configured tau is used otherwise
    :param out_dir: if set, detections.csv, timings.csv, evaluation.csv and pipeline.cfg are
        written
    :return: BenchmarkResult
    """
    meshes = meshes or default_objects()
    training = view_patches(meshes, config.render.views(), config, train_limit, seed)
    regressor, _ = fit_regressor(config.regressor, training, config.train)
    codebook = merge(list(object_codebooks(meshes, regressor, config).values()))

    if calibrate:
        heldout = view_patches(meshes, heldout_views(config), config, 3000, seed + 1)
        config = config.with_overrides(tau=calibrate_tau(regressor, codebook, heldout,
                                                         tau_quantile))

    scenes = make_scenes(meshes, scene_count, seed, config.camera, config.scene)
    run = run_detect([(s.ground_truth.frame, s.frame) for s in scenes], codebook, regressor,
                     meshes, config)
    matchings = [match_frame(result.detections, scene.ground_truth, meshes, config.metric)
                 for result, scene in zip(run.results, scenes)]
    table = evaluation_table(matchings)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_detections(os.path.join(out_dir, "detections.csv"), run.results)
        write_timings(os.path.join(out_dir, "timings.csv"), run.timings)
        table.to_csv(os.path.join(out_dir, "evaluation.csv"), index=False, float_format="%.6g")
        config.save(os.path.join(out_dir, "pipeline.cfg"))
    return BenchmarkResult(run, matchings, table, config.vote.tau, scenes)
