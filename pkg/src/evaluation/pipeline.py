"""
The detection pipeline: scene sampling, descriptor regression, k-NN retrieval with constrained
voting, vote filtering and verification of the hypotheses, timed per stage.
"""
import os
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.codebook.codebook import Codebook, merge
from src.descriptors.base_regressor import BaseRegressor
from src.geometry.frame import RgbdFrame
from src.patches.sampling import Patch, sample_scene
from src.rendering.mesh import Mesh
from src.utils.config import PipelineConfig
from src.utils.exceptions import ConfigError, ParameterError
from src.utils.general import plot_label_map, plot_vote_map
from src.utils.logging import get_default_logger
from src.utils.static import STAGE_LABELS
from src.verification.checks import refine_and_verify
from src.verification.detections import VerifiedDetection
from src.verification.icp import SceneGeometry
from src.verification.selection import Protocol, select_detections
from src.voting.casting import cast_from_descriptors, encode_scene
from src.voting.filtering import cell_weight_table, filter_votes, top_n_votes, vote_pixels
from src.voting.segmentation import segmentation_map
from src.voting.votes import Hypothesis, VoteInstance

logger = get_default_logger(__name__)

DETECTION_COLUMNS = ["frame", "object_id", "score", "depth_inlier_frac", "mean_normal_angle",
                     "qw", "qx", "qy", "qz", "tx", "ty", "tz"]


@dataclass
class StageTimings:
    """
    Accumulated wall clock time per stage.
    :param milliseconds: stage label -> milliseconds
    :param frames: number of frames the times were accumulated over
    """
    milliseconds: dict[str, float] = field(
        default_factory=lambda: {label: 0.0 for label in STAGE_LABELS})
    frames: int = 0

    @contextmanager
    def measure(self, stage: str):
        """adds the time spent in the with block to the stage"""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.milliseconds[stage] += (time.perf_counter() - start) * 1000.0

    @property
    def total(self) -> float:
        """sum over the stages in milliseconds"""
        return sum(self.milliseconds.values())

    def __add__(self, other: "StageTimings") -> "StageTimings":
        return StageTimings({label: self.milliseconds[label] + other.milliseconds[label]
                             for label in STAGE_LABELS}, self.frames + other.frames)

    def per_frame(self) -> "StageTimings":
        """mean times of one frame"""
        frames = max(self.frames, 1)
        return StageTimings({label: value / frames for label, value in self.milliseconds.items()},
                            1)

    def to_frame(self) -> pd.DataFrame:
        """DataFrame with the columns stage and milliseconds, the stages followed by total"""
        rows = [(label, self.milliseconds[label]) for label in STAGE_LABELS]
        rows.append(("total", self.total))
        return pd.DataFrame(rows, columns=["stage", "milliseconds"])


@dataclass(eq=False)
class FrameResult:
    """
    Outcome of the detection on one frame.
    :param frame_id: id of the frame
    :param detections: final detections, best first
    :param hypotheses: hypotheses passed to the verification
    :param verified: all verified hypotheses
    :param votes: cast votes
    :param timings: stage times of the frame
    """
    frame_id: str
    detections: list[VerifiedDetection]
    hypotheses: list[Hypothesis] = field(default_factory=list)
    verified: list[VerifiedDetection] = field(default_factory=list)
    votes: list[VoteInstance] = field(default_factory=list, repr=False)
    timings: StageTimings = field(default_factory=StageTimings)


@dataclass(eq=False)
class DetectionRun:
    """
    Detections of several frames.
    :param results: FrameResult per frame in input order
    :param timings: stage times summed over the frames
    """
    results: list[FrameResult]
    timings: StageTimings

    @property
    def detections(self) -> dict[str, list[VerifiedDetection]]:
        """frame id -> final detections"""
        return {result.frame_id: result.detections for result in self.results}


def strongest_per_object(hypotheses: list[Hypothesis], n: int) -> list[Hypothesis]:
    """the first n hypotheses of every object, in input order"""
    counts = {}
    kept = []
    for hypothesis in hypotheses:
        if counts.get(hypothesis.object_id, 0) < n:
            counts[hypothesis.object_id] = counts.get(hypothesis.object_id, 0) + 1
            kept.append(hypothesis)
    return kept


class Detector:
    """
    Detects the codebook objects in RGB-D frames.
    :param codebook: joint codebook of the objects
    :param regressor: regressor the codebook was built with
    :param meshes: object id -> mesh, needed for every object of the codebook
    :param config: pipeline configuration
    :param object_ids: restricts the retrieval to the codebooks of these objects
    :raises ConfigError: if regressor and codebook dimensions differ, a mesh is missing or the
        restriction leaves no entries
    """

    def __init__(self, codebook: Codebook, regressor: BaseRegressor, meshes: dict[int, Mesh],
                 config: PipelineConfig, object_ids: list[int] = None):
        if regressor.dimension != codebook.dimension:
            raise ConfigError(f"The regressor produces {regressor.dimension} dimensional "
                              f"descriptors but the codebook holds {codebook.dimension} "
                              f"dimensional ones", "Detector")
        missing = set(codebook.objects).difference(meshes)
        if missing:
            raise ConfigError(f"No meshes for the codebook objects {sorted(missing)}", "Detector")
        if object_ids is not None:
            codebook = codebook.restrict(object_ids)
            if len(codebook) == 0:
                raise ConfigError(f"The codebook has no entries of the objects {object_ids}",
                                  "Detector")
        if codebook.index_params != config.index:
            codebook = codebook.with_index_params(config.index)
        self.codebook = codebook
        self.regressor = regressor
        self.meshes = meshes
        self.config = config
        self.object_centroids = {object_id: mesh.centroid for object_id, mesh in meshes.items()}

    def hypotheses(self, votes: list[VoteInstance], frame: RgbdFrame) -> list[Hypothesis]:
        """hypotheses of the configured protocol"""
        detect = self.config.detect
        if detect.protocol is Protocol.ORIGINAL:
            if not votes:
                return []
            return top_n_votes(votes, detect.n, self.object_centroids)
        modes = filter_votes(votes, frame.intrinsics, self.config.vote, self.object_centroids)
        return strongest_per_object(modes, detect.n)

    def detect(self, frame: RgbdFrame, frame_id: str = "0") -> FrameResult:
        """
        Runs the pipeline on one frame.
        :raises ConfigError: if the frame camera differs from the configured camera
        """
        if frame.intrinsics != self.config.camera:
            raise ConfigError(f"Frame {frame_id} was taken with {frame.intrinsics}, the "
                              f"configuration expects {self.config.camera}", "Detector")
        timings = StageTimings(frames=1)
        with timings.measure("scene sampling"):
            patches: list[Patch] = sample_scene(frame, self.config.patch)
        with timings.measure("descriptor regression"):
            descriptors = encode_scene(patches, self.regressor)
        with timings.measure("k-NN & voting"):
            votes = cast_from_descriptors(patches, descriptors, self.codebook, self.config.vote)
        with timings.measure("vote filtering"):
            hypotheses = self.hypotheses(votes, frame)
        with timings.measure("verification"):
            scene = SceneGeometry(frame)
            verified = [refine_and_verify(hypothesis, self.meshes[hypothesis.object_id], frame,
                                          self.config.verify, scene)
                        for hypothesis in hypotheses]
            detections = select_detections(verified, self.config.detect.protocol,
                                           self.config.detect.nms_radius)

        failed = sum(detection.refinement_failed for detection in verified)
        if failed:
            logger.warning(f"Frame {frame_id}: refinement failed for {failed} of {len(verified)} "
                           f"hypotheses")
        logger.info(f"Frame {frame_id}: {len(patches)} patches, {len(votes)} votes, "
                    f"{len(hypotheses)} hypotheses, {len(detections)} detections in "
                    f"{timings.total:.0f} ms")
        return FrameResult(frame_id, detections, hypotheses, verified, votes, timings)


def run_detect(frames: list[tuple[str, RgbdFrame]], codebook: Codebook,
               regressor: BaseRegressor, meshes: dict[int, Mesh], config: PipelineConfig,
               object_ids: list[int] = None, debug_dir: str = None,
               workers: int = 1) -> DetectionRun:
    """
    Runs the detection on every frame.
    :param frames: (frame id, frame) pairs
    :param codebook: joint codebook
    :param regressor: regressor the codebook was built with
    :param meshes: object id -> mesh
    :param config: pipeline configuration
    :param object_ids: optional restriction of the retrieval to these objects
    :param debug_dir: if set, vote maps, cell weights and segmentation maps are written per frame
    :param workers: frames processed in parallel threads. The detections do not depend on it,
        the stage times of parallel frames overlap and are not comparable to sequential ones.
    :return: DetectionRun with the results in input order
    :raises ConfigError: for mismatching dimensions or cameras
    """
    if workers < 1:
        raise ParameterError(f"workers has to be >= 1, got {workers}", "run_detect")
    detector = Detector(codebook, regressor, meshes, config, object_ids)

    def detect(item: tuple[str, RgbdFrame]) -> FrameResult:
        frame_id, frame = item
        result = detector.detect(frame, frame_id)
        if debug_dir is not None:
            write_debug_output(debug_dir, result, frame, config)
        return result

    if workers == 1:
        results = [detect(item) for item in frames]
    else:
        logger.warning(f"Detecting on {workers} threads, stage times are not per frame times")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(detect, frames))
    timings = sum((result.timings for result in results), StageTimings())
    logger.info(f"Detected {sum(len(r.detections) for r in results)} objects in {len(results)} "
                f"frames, {timings.per_frame().total:.0f} ms per frame")
    return DetectionRun(results, timings)


def detections_table(results: list[FrameResult]) -> pd.DataFrame:
    """one row per final detection with the columns of DETECTION_COLUMNS"""
    rows = []
    for result in results:
        for detection in result.detections:
            rows.append([result.frame_id, detection.object_id, detection.score,
                         detection.depth_inlier_frac, detection.mean_normal_angle,
                         *detection.pose.rotation, *detection.pose.translation])
    return pd.DataFrame(rows, columns=DETECTION_COLUMNS)


def write_detections(path: str, results: list[FrameResult]):
    """
    Writes detections.csv in frame order, best detection first within a frame.
    :param path: CSV file, parent directories are created
    :param results: frame results of a detection run
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    detections_table(results).to_csv(path, index=False, float_format="%.9g")


def write_timings(path: str, timings: StageTimings):
    """writes the mean time per frame of every stage"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    timings.per_frame().to_frame().to_csv(path, index=False, float_format="%.3f")


def write_debug_output(debug_dir: str, result: FrameResult, frame: RgbdFrame,
                       config: PipelineConfig):
    """
    Writes votes_<frame>.png (projected votes colored by weight), cells_<frame>.csv (accumulated
    cell weights) and segmentation_<frame>.png (masks of the votes supporting the detections).
    """
    os.makedirs(debug_dir, exist_ok=True)
    pixels, weights = vote_pixels(result.votes, frame.intrinsics)
    plot_vote_map(frame.color, pixels, weights,
                  os.path.join(debug_dir, f"votes_{result.frame_id}.png"),
                  title=f"{len(result.votes)} votes, tau = {config.vote.tau}")
    cell_weight_table(result.votes, frame.intrinsics, config.vote).to_csv(
        os.path.join(debug_dir, f"cells_{result.frame_id}.csv"), index=False)
    supported = [d.hypothesis for d in result.detections if d.hypothesis is not None]
    plot_label_map(segmentation_map(supported, frame.shape),
                   os.path.join(debug_dir, f"segmentation_{result.frame_id}.png"))


def calibrate_tau(regressor: BaseRegressor, codebook: Codebook, patches: list[Patch],
                  quantile: float = 0.9) -> float:
    """
    Distance threshold from held-out patches: the quantile of the distances of their descriptors
    to the nearest codebook entry. Thresholds have to follow the descriptor dimension, this
    gives a comparable threshold for every regressor.
    :param regressor: regressor the codebook was built with
    :param codebook: codebook
    :param patches: patches that are not part of the codebook
    :param quantile: quantile in (0, 1]
    :return: threshold
    """
    if not 0 < quantile <= 1:
        raise ParameterError(f"quantile has to be in (0, 1], got {quantile}", "calibrate_tau")
    if not patches or len(codebook) == 0:
        raise ParameterError("Calibration needs patches and a non-empty codebook",
                             "calibrate_tau")
    _, distances = codebook.query(encode_scene(patches, regressor), 1, exact=True)
    tau = float(np.quantile(distances[:, 0], quantile))
    logger.info(f"Calibrated tau = {tau:.4f} ({quantile:.0%} quantile of {len(patches)} "
                f"nearest neighbor distances)")
    return tau


def scaling_run(frames: list[tuple[str, RgbdFrame]], codebooks: dict[int, Codebook],
                regressor: BaseRegressor, meshes: dict[int, Mesh], config: PipelineConfig,
                counts: list[int] = None) -> pd.DataFrame:
    """
    Mean time per frame against the number of objects in the joint codebook.
    :param frames: (frame id, frame) pairs
    :param codebooks: object id -> codebook of the object, joined in id order
    :param regressor: regressor of the codebooks
    :param meshes: object id -> mesh
    :param config: pipeline configuration
    :param counts: object counts to measure, 1 to len(codebooks) if None
    :return: DataFrame with the columns objects, entries, milliseconds and one column per stage
    """
    object_ids = sorted(codebooks)
    counts = counts or list(range(1, len(object_ids) + 1))
    if any(not 1 <= count <= len(object_ids) for count in counts):
        raise ParameterError(f"Object counts have to be in [1, {len(object_ids)}]",
                             "scaling_run")
    rows = []
    for count in counts:
        joint = merge([codebooks[object_id] for object_id in object_ids[:count]])
        timings = run_detect(frames, joint, regressor, meshes, config).timings.per_frame()
        rows.append({"objects": count, "entries": len(joint), "milliseconds": timings.total,
                     **timings.milliseconds})
        logger.info(f"{count} objects ({len(joint)} entries): {timings.total:.0f} ms per frame")
    return pd.DataFrame(rows)
