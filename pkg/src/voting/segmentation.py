"""
Segmentation maps from the supporting votes of hypotheses: the codebook foreground mask of every
supporting vote is painted over the footprint of its scene patch.
"""
import numpy as np

from src.utils.logging import get_default_logger
from src.utils.static import PATCH_SIZE
from src.voting.votes import Hypothesis, VoteInstance

logger = get_default_logger(__name__)


def paint_mask(accumulator: np.ndarray, vote: VoteInstance):
    """
    Adds the vote weight to the accumulator pixels covered by the foreground of the vote mask.
    Mask sample i of a patch centered at u lies at u + (i - 16) * width / 32, every pixel takes
    the nearest sample.
    """
    if vote.mask is None or not vote.footprint[0] > 0 or not vote.footprint[1] > 0:
        return
    height, width = accumulator.shape
    u, v = vote.source_pixel
    size_x, size_y = vote.footprint
    half = PATCH_SIZE // 2

    xs = np.arange(max(0, int(np.floor(u - size_x / 2))),
                   min(width, int(np.ceil(u + size_x / 2)) + 1))
    ys = np.arange(max(0, int(np.floor(v - size_y / 2))),
                   min(height, int(np.ceil(v + size_y / 2)) + 1))
    ix = np.rint((xs - u) * PATCH_SIZE / size_x + half).astype(np.int64)
    iy = np.rint((ys - v) * PATCH_SIZE / size_y + half).astype(np.int64)
    keep_x = (ix >= 0) & (ix < PATCH_SIZE)
    keep_y = (iy >= 0) & (iy < PATCH_SIZE)
    xs, ix, ys, iy = xs[keep_x], ix[keep_x], ys[keep_y], iy[keep_y]
    if not len(xs) or not len(ys):
        return
    window = np.asarray(vote.mask, dtype=bool)[np.ix_(iy, ix)]
    accumulator[np.ix_(ys, xs)] += window * vote.weight


def segmentation_map(hypotheses: list[Hypothesis], shape: tuple[int, int]) -> np.ndarray:
    """
    Label image of the hypotheses.
    :param hypotheses: hypotheses with their supporting votes
    :param shape: (height, width) of the frame
    :return: (H, W) int32 image, the object id with the largest accumulated weight per pixel and
        0 where no vote painted
    """
    accumulators = {}
    for hypothesis in hypotheses:
        accumulator = accumulators.setdefault(hypothesis.object_id, np.zeros(shape))
        for vote in hypothesis.support:
            paint_mask(accumulator, vote)

    labels = np.zeros(shape, dtype=np.int32)
    if not accumulators:
        return labels
    object_ids = sorted(accumulators)
    stacked = np.stack([accumulators[object_id] for object_id in object_ids])
    painted = stacked.sum(axis=0) > 0
    labels[painted] = np.asarray(object_ids, dtype=np.int32)[np.argmax(stacked, axis=0)[painted]]
    logger.debug(f"Segmented {np.count_nonzero(painted)} pixels of {len(object_ids)} objects")
    return labels
