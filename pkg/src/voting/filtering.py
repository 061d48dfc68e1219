"""
Vote filtering in three stages:

1. the voted centroids are projected into the image and their weights accumulated on a grid of
   cell_px x cell_px cells, cells with fewer than min_cell_votes votes are suppressed,
2. the cell weights are smoothed with a separable [1, 2, 1] / 4 kernel and strict local maxima
   over the 8-neighborhood are extracted,
3. the votes of the 3x3 cells around each maximum are refined by a flat kernel mean shift, first
   over the centroids and then over the orientations.

Every object is filtered separately.
"""
from dataclasses import dataclass

import cv2
import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from src.geometry.camera import CameraIntrinsics
from src.geometry.pose import canonicalize_quaternion, normalize_quaternion, quat_geodesic_deg
from src.utils.exceptions import ParameterError
from src.utils.logging import get_default_logger
from src.voting.votes import Hypothesis, VoteArrays, VoteInstance, VoteParams, object_pose

logger = get_default_logger(__name__)

_SMOOTHING = np.array([0.25, 0.5, 0.25])


@dataclass(frozen=True, eq=False)
class CellGrid:
    """
    Accumulated votes of one object.
    :param cells: (N, 2) (cell_x, cell_y) of every vote, -1 for votes outside the image
    :param counts: (rows, cols) number of votes per cell
    :param weights: (rows, cols) accumulated weight per cell after suppression
    :param smoothed: (rows, cols) smoothed weights
    """
    cells: np.ndarray
    counts: np.ndarray
    weights: np.ndarray
    smoothed: np.ndarray

    def maxima(self) -> list[tuple[int, int]]:
        """strict 8-neighborhood maxima of the smoothed weights as (cell_x, cell_y)"""
        padded = np.pad(self.smoothed, 1, constant_values=-np.inf)
        rows, cols = self.smoothed.shape
        is_max = self.smoothed > 0
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx or dy:
                    is_max &= self.smoothed > padded[1 + dy:1 + dy + rows, 1 + dx:1 + dx + cols]
        ys, xs = np.nonzero(is_max)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]


def project_cells(centroids: np.ndarray, intrinsics: CameraIntrinsics,
                  cell_px: int) -> np.ndarray:
    """
    Cell of every projected centroid.
    :return: (N, 2) int array of (cell_x, cell_y), -1 for centroids behind the camera or outside
        the image
    """
    cells = np.full((len(centroids), 2), -1, dtype=np.int64)
    if not len(centroids):
        return cells
    z = centroids[:, 2]
    in_front = z > 0
    safe_z = np.where(in_front, z, 1.0)
    u = centroids[:, 0] * intrinsics.fx / safe_z + intrinsics.cx
    v = centroids[:, 1] * intrinsics.fy / safe_z + intrinsics.cy
    inside = in_front & (u >= 0) & (u < intrinsics.width) & (v >= 0) & (v < intrinsics.height)
    cells[inside, 0] = np.floor(u[inside] / cell_px).astype(np.int64)
    cells[inside, 1] = np.floor(v[inside] / cell_px).astype(np.int64)
    return cells


def accumulate(arrays: VoteArrays, intrinsics: CameraIntrinsics, params: VoteParams) -> CellGrid:
    """
    Accumulates, suppresses and smooths the vote weights on the cell grid.
    :param arrays: votes of a single object
    :param intrinsics: camera of the scene
    :param params: vote parameters
    :return: CellGrid
    """
    rows = -(-intrinsics.height // params.cell_px)
    cols = -(-intrinsics.width // params.cell_px)
    cells = project_cells(arrays.centroids, intrinsics, params.cell_px)
    inside = cells[:, 0] >= 0

    counts = np.zeros((rows, cols), dtype=np.int64)
    weights = np.zeros((rows, cols), dtype=np.float64)
    np.add.at(counts, (cells[inside, 1], cells[inside, 0]), 1)
    np.add.at(weights, (cells[inside, 1], cells[inside, 0]), arrays.weights[inside])
    weights[counts < params.min_cell_votes] = 0.0

    smoothed = cv2.sepFilter2D(weights, cv2.CV_64F, _SMOOTHING, _SMOOTHING,
                               borderType=cv2.BORDER_CONSTANT)
    return CellGrid(cells=cells, counts=counts, weights=weights, smoothed=smoothed)


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.sum(values * weights[:, None], axis=0) / np.sum(weights)


def _align(quaternions: np.ndarray, reference: np.ndarray) -> np.ndarray:
    signs = np.where(quaternions @ reference < 0, -1.0, 1.0)
    return quaternions * signs[:, None]


def _densest(centroids: np.ndarray, weights: np.ndarray, radius: float) -> np.ndarray:
    """the centroid with the largest vote weight within radius"""
    neighbors = cdist(centroids, centroids) <= radius
    return centroids[int(np.argmax(neighbors.astype(np.float64) @ weights))]


def translational_mean_shift(centroids: np.ndarray, weights: np.ndarray,
                             params: VoteParams) -> tuple[np.ndarray, np.ndarray] | None:
    """
    Flat kernel mean shift over the centroids, seeded at their weighted mean. If no centroid lies
    within the kernel of the weighted mean, the seed is the centroid with the largest vote weight
    in its kernel.
    :return: (mode, boolean kernel membership) or None if the kernel runs empty
    """
    mode = _weighted_mean(centroids, weights)
    if not np.any(np.linalg.norm(centroids - mode, axis=1) <= params.ms_trans_radius):
        mode = _densest(centroids, weights, params.ms_trans_radius)
    inside = None
    for _ in range(params.ms_max_iters):
        inside = np.linalg.norm(centroids - mode, axis=1) <= params.ms_trans_radius
        if not inside.any():
            return None
        shifted = _weighted_mean(centroids[inside], weights[inside])
        step = np.linalg.norm(shifted - mode)
        mode = shifted
        if step < params.ms_eps_trans:
            break
    inside = np.linalg.norm(centroids - mode, axis=1) <= params.ms_trans_radius
    if not inside.any():
        return None
    return mode, inside


def quaternion_mean_shift(quaternions: np.ndarray, weights: np.ndarray,
                          params: VoteParams) -> tuple[np.ndarray, np.ndarray]:
    """
    Flat kernel mean shift over unit quaternions. The quaternions in the kernel are sign aligned
    to the current estimate, averaged and renormalized. The seed is the weighted mean of all
    quaternions aligned to the strongest one; if no quaternion lies within the kernel of the
    seed, the strongest quaternion is used instead.
    :return: (canonical mode, boolean kernel membership)
    """
    strongest = quaternions[int(np.argmax(weights))]
    mode = normalize_quaternion(_weighted_mean(_align(quaternions, strongest), weights))
    if not np.any(quat_geodesic_deg(quaternions, mode) <= params.ms_rot_radius):
        mode = strongest
    for _ in range(params.ms_max_iters):
        inside = np.atleast_1d(quat_geodesic_deg(quaternions, mode)) <= params.ms_rot_radius
        aligned = _align(quaternions[inside], mode)
        shifted = normalize_quaternion(_weighted_mean(aligned, weights[inside]))
        step = quat_geodesic_deg(shifted, mode)
        mode = shifted
        if step < params.ms_eps_rot:
            break
    inside = np.atleast_1d(quat_geodesic_deg(quaternions, mode)) <= params.ms_rot_radius
    return canonicalize_quaternion(mode), inside


def _neighborhood(cells: np.ndarray, cell: tuple[int, int]) -> np.ndarray:
    return (np.abs(cells[:, 0] - cell[0]) <= 1) & (np.abs(cells[:, 1] - cell[1]) <= 1) & \
        (cells[:, 0] >= 0)


def _is_duplicate(hypothesis: Hypothesis, kept: list[Hypothesis], params: VoteParams) -> bool:
    pose = hypothesis.pose
    for other in kept:
        if (other.object_id == hypothesis.object_id
                and pose.translation_distance_to(other.pose) < params.ms_trans_radius / 2
                and pose.rotation_angle_to(other.pose) < params.ms_rot_radius / 2):
            return True
    return False


def _object_modes(arrays: VoteArrays, object_id: int, intrinsics: CameraIntrinsics,
                  params: VoteParams, object_centroid: np.ndarray = None) -> list[Hypothesis]:
    grid = accumulate(arrays, intrinsics, params)
    # suppressed cells do not contribute votes
    counted = grid.cells[:, 0] >= 0
    counted[counted] = grid.counts[grid.cells[counted, 1], grid.cells[counted, 0]] >= \
        params.min_cell_votes

    modes = []
    for cell in grid.maxima():
        rows = np.flatnonzero(_neighborhood(grid.cells, cell) & counted)
        if len(rows) < params.min_cell_votes:
            continue
        translational = translational_mean_shift(arrays.centroids[rows], arrays.weights[rows],
                                                 params)
        if translational is None:
            continue
        centroid, inside = translational
        rows = rows[inside]
        orientation, inside = quaternion_mean_shift(arrays.orientations[rows],
                                                    arrays.weights[rows], params)
        rows = rows[inside]
        if len(rows) < params.min_cell_votes:
            continue
        modes.append(Hypothesis(object_id=object_id,
                                pose=object_pose(centroid, orientation, object_centroid),
                                score=float(np.sum(arrays.weights[rows])),
                                support=tuple(arrays.votes[i] for i in rows)))
    logger.debug(f"Object {object_id}: {len(arrays)} votes, {len(modes)} modes")
    return modes


def filter_votes(votes: list[VoteInstance], intrinsics: CameraIntrinsics, params: VoteParams,
                 object_centroids: dict[int, np.ndarray] = None) -> list[Hypothesis]:
    """
    Extracts pose hypotheses from the votes of a frame.
    :param votes: votes of the frame
    :param intrinsics: camera of the frame
    :param params: vote parameters
    :param object_centroids: centroid of each object in its object frame, used to turn the voted
        centroid into the pose translation; the origin for objects not listed
    :return: hypotheses by descending score, modes closer than half the kernel radii merged into
        the stronger one
    """
    object_centroids = object_centroids or {}
    arrays = VoteArrays(votes)
    modes = []
    for object_id in np.unique(arrays.object_ids):
        rows = np.flatnonzero(arrays.object_ids == object_id)
        modes.extend(_object_modes(VoteArrays([votes[i] for i in rows]), int(object_id),
                                   intrinsics, params, object_centroids.get(int(object_id))))

    kept = []
    for mode in sorted(modes, key=lambda h: -h.score):
        if not _is_duplicate(mode, kept, params):
            kept.append(mode)
    logger.info(f"Filtered {len(votes)} votes into {len(kept)} modes")
    return kept


def top_n_votes(votes: list[VoteInstance], n: int,
                object_centroids: dict[int, np.ndarray] = None) -> list[Hypothesis]:
    """
    Promotes the n strongest votes to single vote hypotheses, bypassing the filter.
    :param votes: votes of the frame
    :param n: number of hypotheses
    :param object_centroids: see filter_votes
    :return: hypotheses by descending weight, equal weights in vote order
    """
    if n <= 0:
        raise ParameterError(f"N has to be positive, got {n}", "top_n_votes")
    object_centroids = object_centroids or {}
    weights = np.array([vote.weight for vote in votes], dtype=np.float64)
    order = np.argsort(-weights, kind="stable")[:n]
    return [Hypothesis(object_id=votes[i].object_id,
                       pose=object_pose(votes[i].centroid, votes[i].orientation,
                                        object_centroids.get(votes[i].object_id)),
                       score=votes[i].weight, support=(votes[i],))
            for i in order]


def cell_weight_table(votes: list[VoteInstance], intrinsics: CameraIntrinsics,
                      params: VoteParams) -> pd.DataFrame:
    """
    Non-empty cells of every object for debugging.
    :return: DataFrame with columns object_id, cell_x, cell_y, votes, weight, smoothed
    """
    arrays = VoteArrays(votes)
    tables = []
    for object_id in np.unique(arrays.object_ids):
        rows = np.flatnonzero(arrays.object_ids == object_id)
        grid = accumulate(VoteArrays([votes[i] for i in rows]), intrinsics, params)
        ys, xs = np.nonzero(grid.counts)
        tables.append(pd.DataFrame({"object_id": int(object_id), "cell_x": xs, "cell_y": ys,
                                    "votes": grid.counts[ys, xs], "weight": grid.weights[ys, xs],
                                    "smoothed": grid.smoothed[ys, xs]}))
    if not tables:
        return pd.DataFrame(columns=["object_id", "cell_x", "cell_y", "votes", "weight",
                                     "smoothed"])
    return pd.concat(tables, ignore_index=True)


def vote_pixels(votes: list[VoteInstance],
                intrinsics: CameraIntrinsics) -> tuple[np.ndarray, np.ndarray]:
    """(N, 2) projected centroids and (N,) weights of the votes in front of the camera"""
    arrays = VoteArrays(votes)
    front = arrays.centroids[:, 2] > 0
    centroids = arrays.centroids[front]
    pixels = np.stack([centroids[:, 0] * intrinsics.fx / centroids[:, 2] + intrinsics.cx,
                       centroids[:, 1] * intrinsics.fy / centroids[:, 2] + intrinsics.cy], axis=-1)
    return pixels, arrays.weights[front]
