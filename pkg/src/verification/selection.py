"""
Detection protocols and the final selection of verified detections.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.utils.exceptions import ParameterError
from src.utils.logging import get_default_logger
from src.verification.detections import VerifiedDetection

logger = get_default_logger(__name__)


class Protocol(Enum):
    """
    ORIGINAL: the N strongest single votes become hypotheses, the best verified one per object
    is kept. MODES: the N strongest modes of every object become hypotheses, all verified ones
    survive the non-maximum suppression.
    """
    ORIGINAL = "original"
    MODES = "modes"

    @property
    def default_n(self) -> int:
        """number of hypotheses of the protocol"""
        return 100 if self is Protocol.ORIGINAL else 5


@dataclass(frozen=True)
class DetectionConfig:
    """
    :param protocol: detection protocol
    :param n: hypotheses per frame (ORIGINAL) or per object (MODES), the protocol default if None
    :param nms_radius: detections of one object with closer centroids compete, meters
    """
    protocol: Protocol = Protocol.MODES
    n: int = None
    nms_radius: float = 0.05

    def __post_init__(self):
        if isinstance(self.protocol, str):
            try:
                object.__setattr__(self, "protocol", Protocol(self.protocol))
            except ValueError as ex:
                raise ParameterError(f"Unknown protocol {self.protocol}",
                                     "DetectionConfig") from ex
        if self.n is None:
            object.__setattr__(self, "n", self.protocol.default_n)
        if self.n <= 0:
            raise ParameterError(f"N has to be positive, got {self.n}", "DetectionConfig")
        if not self.nms_radius > 0:
            raise ParameterError("nms_radius has to be positive", "DetectionConfig")


def _ranking_key(detection: VerifiedDetection) -> tuple[float, float]:
    return -detection.depth_inlier_frac, -detection.score


def select_detections(verified: list[VerifiedDetection], protocol: Protocol = Protocol.MODES,
                      nms_radius: float = 0.05) -> list[VerifiedDetection]:
    """
    Keeps the accepted detections. Among accepted detections of the same object whose centroids
    are closer than nms_radius only the one with the best depth inlier fraction survives, equal
    fractions are decided by the vote score and then by input order. Under the ORIGINAL protocol
    only the best detection per object is kept.
    :param verified: verified detections of a frame
    :param protocol: detection protocol
    :param nms_radius: suppression radius in meters
    :return: final detections, best first
    """
    accepted = sorted((d for d in verified if d.accepted), key=_ranking_key)
    kept = []
    for detection in accepted:
        suppressed = any(
            other.object_id == detection.object_id
            and (protocol is Protocol.ORIGINAL
                 or np.linalg.norm(other.centroid - detection.centroid) < nms_radius)
            for other in kept)
        if not suppressed:
            kept.append(detection)
    logger.debug(f"Selected {len(kept)} of {len(accepted)} accepted detections "
                 f"({len(verified)} verified)")
    return kept
