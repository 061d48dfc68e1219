"""
Matching of detections against ground truth annotations and the precision / recall / F1 tables of
an evaluation.
"""
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.evaluation.metrics import MetricConfig, pose_error
from src.geometry.pose import Pose
from src.rendering.mesh import Mesh
from src.utils.exceptions import ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)


@dataclass(frozen=True)
class GroundTruth:
    """
    Annotated object instances of one frame.
    :param frame: frame id
    :param annotations: (object_id, Pose) per instance
    """
    frame: str
    annotations: tuple[tuple[int, Pose], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "annotations",
                           tuple((int(object_id), pose) for object_id, pose in self.annotations))

    def __len__(self):
        return len(self.annotations)

    @property
    def object_ids(self) -> list[int]:
        """object id of every instance"""
        return [object_id for object_id, _ in self.annotations]


@dataclass(frozen=True)
class PRF:
    """
    Detection counts with the derived scores. Precision is 0 without detections, recall is 0
    without annotations.
    """
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class Match:
    """
    A true positive.
    :param detection: index of the detection
    :param annotation: index of the matched annotation
    :param error: pose error of the pair in meters
    """
    detection: int
    annotation: int
    error: float


@dataclass
class FrameMatching:
    """Result of matching the detections of one frame"""
    matches: list[Match] = field(default_factory=list)
    detection_objects: list[int] = field(default_factory=list)
    annotation_objects: list[int] = field(default_factory=list)

    def prf(self, object_id: int = None) -> PRF:
        """counts over all objects or of a single object"""
        matched = [m for m in self.matches
                   if object_id is None or self.detection_objects[m.detection] == object_id]
        detections = sum(object_id is None or o == object_id for o in self.detection_objects)
        annotations = sum(object_id is None or o == object_id for o in self.annotation_objects)
        return PRF(len(matched), detections - len(matched), annotations - len(matched))


def match_frame(detections: list, gt: GroundTruth, meshes: dict[int, Mesh],
                metric: MetricConfig) -> FrameMatching:
    """
    Greedy matching by ascending pose error: a detection is a true positive if an unmatched
    annotation of the same object lies closer than k_m times the object diameter.
    :param detections: objects with object_id and pose, e.g. VerifiedDetection
    :param gt: annotations of the frame
    :param meshes: mesh of every object id
    :param metric: metric configuration
    :return: FrameMatching
    :raises ParameterError: for object ids without a mesh
    """
    unknown = {d.object_id for d in detections}.union(gt.object_ids).difference(meshes)
    if unknown:
        raise ParameterError(f"No mesh for the object ids {sorted(unknown)}", "match_frame")

    candidates = []
    for i, detection in enumerate(detections):
        mesh = meshes[detection.object_id]
        symmetric = metric.is_symmetric(detection.object_id, mesh)
        for j, (object_id, pose) in enumerate(gt.annotations):
            if object_id != detection.object_id:
                continue
            error = pose_error(mesh, pose, detection.pose, symmetric)
            if error < metric.threshold(mesh):
                candidates.append((error, i, j))

    result = FrameMatching(detection_objects=[d.object_id for d in detections],
                           annotation_objects=gt.object_ids)
    used_detections, used_annotations = set(), set()
    for error, i, j in sorted(candidates):
        if i in used_detections or j in used_annotations:
            continue
        used_detections.add(i)
        used_annotations.add(j)
        result.matches.append(Match(i, j, error))
    return result


def match_detections(detections: list, gt: GroundTruth, meshes: dict[int, Mesh],
                     metric: MetricConfig) -> PRF:
    """
    Scores the detections of one frame.
    :return: PRF with tp + fn = len(gt) and tp + fp = len(detections)
    """
    return match_frame(detections, gt, meshes, metric).prf()


def evaluation_table(matchings: list[FrameMatching]) -> pd.DataFrame:
    """
    Per object scores summed over frames with a total row.
    :param matchings: matchings of the evaluated frames
    :return: DataFrame with the columns object_id, tp, fp, fn, precision, recall, f1
    """
    object_ids = sorted({o for m in matchings for o in m.detection_objects + m.annotation_objects})
    rows = []
    for object_id in object_ids:
        prf = sum((m.prf(object_id) for m in matchings), PRF())
        rows.append({"object_id": str(object_id), **prf.as_dict()})
    total = sum((m.prf() for m in matchings), PRF())
    rows.append({"object_id": "total", **total.as_dict()})
    logger.info(f"Evaluated {len(matchings)} frames: precision {total.precision:.3f}, recall "
                f"{total.recall:.3f}, F1 {total.f1:.3f}")
    return pd.DataFrame(rows, columns=["object_id", "tp", "fp", "fn", "precision", "recall",
                                       "f1"])


def matched_errors(matchings: list[FrameMatching]) -> np.ndarray:
    """pose errors of all true positives"""
    return np.array([m.error for matching in matchings for m in matching.matches])
