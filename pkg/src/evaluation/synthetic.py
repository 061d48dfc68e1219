"""
Seeded synthetic test scenes: the objects at random poses in front of a background plane, one of
them partly hidden by a planar occluder.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from src.evaluation.matching import GroundTruth
from src.geometry.camera import CameraIntrinsics
from src.geometry.frame import RgbdFrame
from src.geometry.pose import Pose, scipy_to_quat
from src.rendering.mesh import Mesh
from src.rendering.procedural import make_plane
from src.rendering.rasterizer import render_scene
from src.utils.exceptions import ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

_MAX_PLACEMENT_TRIES = 1000


@dataclass(frozen=True)
class SceneConfig:
    """
    :param min_depth: nearest object distance in meters
    :param max_depth: farthest object distance in meters
    :param occluded_fraction: (low, high) range of the hidden fraction of the occluded object,
        (0, 0) disables the occluder
    :param occluder_gap: distance of the occluder in front of the occluded object in meters
    :param background_depth: distance of the background plane, None for no background
    :param depth_noise: standard deviation of gaussian depth noise in meters
    """
    min_depth: float = 0.4
    max_depth: float = 1.0
    occluded_fraction: tuple[float, float] = (0.2, 0.3)
    occluder_gap: float = 0.1
    background_depth: float = 1.4
    depth_noise: float = 0.0

    def __post_init__(self):
        low, high = self.occluded_fraction
        if not 0 < self.min_depth <= self.max_depth:
            raise ParameterError("Depth range has to be positive and ordered", "SceneConfig")
        if not 0 <= low <= high < 1:
            raise ParameterError("occluded_fraction has to be an ordered range in [0, 1)",
                                 "SceneConfig")
        if self.depth_noise < 0 or self.occluder_gap <= 0:
            raise ParameterError("Invalid noise or occluder gap", "SceneConfig")
        if self.background_depth is not None and self.background_depth <= self.max_depth:
            raise ParameterError("The background has to lie behind the objects", "SceneConfig")


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    """
    :param frame: rendered frame
    :param ground_truth: poses of all objects
    :param occluded_object: id of the object behind the occluder, None without occluder
    :param occluded_fraction: hidden fraction of the pixels of the occluded object
    """
    frame: RgbdFrame
    ground_truth: GroundTruth
    occluded_object: int = None
    occluded_fraction: float = 0.0


def _place_objects(meshes: dict[int, Mesh], rng: np.random.Generator,
                   intrinsics: CameraIntrinsics, cfg: SceneConfig) -> dict[int, Pose]:
    """
    Random poses whose projected bounding circles lie in the image and do not overlap.
    """
    for _ in range(_MAX_PLACEMENT_TRIES):
        poses, circles = {}, []
        for object_id, mesh in meshes.items():
            z = rng.uniform(cfg.min_depth, cfg.max_depth)
            radius = mesh.diameter / 2.0 * intrinsics.fx / z
            if 2 * radius >= min(intrinsics.width, intrinsics.height):
                break
            u = rng.uniform(radius, intrinsics.width - radius)
            v = rng.uniform(radius, intrinsics.height - radius)
            if any(np.hypot(u - cu, v - cv) < radius + cr for cu, cv, cr in circles):
                break
            circles.append((u, v, radius))
            centroid = np.array([(u - intrinsics.cx) * z / intrinsics.fx,
                                 (v - intrinsics.cy) * z / intrinsics.fy, z])
            rotation = scipy_to_quat(Rotation.random(random_state=rng))
            pose = Pose(rotation)
            poses[object_id] = Pose(rotation, centroid - pose.apply(mesh.centroid))
        else:
            return poses
    raise ParameterError(f"Could not place {len(meshes)} objects without overlap",
                         "make_scene")


def _occluder(mask: np.ndarray, fraction: float, side: int, depth: float,
              intrinsics: CameraIntrinsics) -> tuple[Mesh, Pose]:
    """
    Plane at the given depth covering the fraction of the mask pixels from one side
    (0 left, 1 right, 2 top, 3 bottom), spanning the mask extent along the other axis.
    Pixel centers lie on integer coordinates, so plane edges are placed on half pixels.
    """
    horizontal = side in (0, 1)
    counts = mask.sum(axis=0 if horizontal else 1)
    used = np.flatnonzero(counts)
    if side in (0, 2):
        cut = int(np.searchsorted(np.cumsum(counts) / counts.sum(), fraction))
        low, high = used[0] - 2.5, cut - 0.5
    else:
        cut = int(np.searchsorted(np.cumsum(counts[::-1]) / counts.sum(), fraction))
        low, high = len(counts) - cut - 0.5, used[-1] + 2.5
    across = np.flatnonzero(mask.any(axis=1 if horizontal else 0))
    across_low, across_high = across[0] - 2.5, across[-1] + 2.5

    (u0, u1), (v0, v1) = ((low, high), (across_low, across_high)) if horizontal else \
        ((across_low, across_high), (low, high))
    x0, x1 = ((u - intrinsics.cx) * depth / intrinsics.fx for u in (u0, u1))
    y0, y1 = ((v - intrinsics.cy) * depth / intrinsics.fy for v in (v0, v1))
    plane = make_plane(x1 - x0, y1 - y0, color=(90, 90, 95), name="occluder")
    return plane, Pose(translation=[(x0 + x1) / 2, (y0 + y1) / 2, depth])


def make_scene(meshes: dict[int, Mesh], seed: int, intrinsics: CameraIntrinsics = None,
               cfg: SceneConfig = None, frame_id: str = None) -> SyntheticScene:
    """
    Composes a scene with every mesh at a random pose. One random object is partly hidden by an
    occluder in front of it, the hidden fraction is drawn from cfg.occluded_fraction.
    :param meshes: object id -> mesh
    :param seed: scene seed
    :param intrinsics: camera, default camera if None
    :param cfg: scene parameters
    :param frame_id: id of the frame in the ground truth, the zero padded seed if None
    :return: SyntheticScene
    """
    intrinsics = intrinsics or CameraIntrinsics()
    cfg = cfg or SceneConfig()
    rng = np.random.default_rng(seed)
    poses = _place_objects(meshes, rng, intrinsics, cfg)
    objects = [(meshes[object_id], pose, object_id) for object_id, pose in poses.items()]
    if cfg.background_depth is not None:
        extent = 2.5 * cfg.background_depth * max(intrinsics.width / intrinsics.fx,
                                                  intrinsics.height / intrinsics.fy)
        objects.append((make_plane(extent, extent), Pose(translation=[0, 0, cfg.background_depth]),
                        0))

    occluded, covered = None, 0.0
    if cfg.occluded_fraction[1] > 0 and meshes:
        occluded = int(rng.choice(sorted(poses)))
        mask = render_scene(objects, intrinsics).labels == occluded
        depth = poses[occluded].apply(meshes[occluded].centroid)[2] - \
            meshes[occluded].diameter / 2.0 - cfg.occluder_gap
        if np.any(mask) and depth > 0.05:
            fraction = rng.uniform(*cfg.occluded_fraction)
            plane, pose = _occluder(mask, fraction, int(rng.integers(4)), depth, intrinsics)
            objects.append((plane, pose, 0))
            labels = render_scene(objects, intrinsics).labels
            covered = 1.0 - np.count_nonzero(labels == occluded) / np.count_nonzero(mask)
        else:
            occluded = None

    view = render_scene(objects, intrinsics)
    depth = view.depth
    if cfg.depth_noise > 0:
        noise = rng.normal(0.0, cfg.depth_noise, depth.shape)
        depth = np.where(depth > 0, np.maximum(depth + noise, 1e-3), 0.0)

    frame_id = frame_id or f"{seed:06d}"
    gt = GroundTruth(frame_id, tuple((object_id, pose) for object_id, pose in poses.items()))
    logger.debug(f"Scene {frame_id}: {len(poses)} objects, object {occluded} {covered:.0%} "
                 f"occluded")
    return SyntheticScene(RgbdFrame(view.color, depth, intrinsics), gt, occluded, covered)


def make_scenes(meshes: dict[int, Mesh], count: int, seed: int = 0,
                intrinsics: CameraIntrinsics = None, cfg: SceneConfig = None) \
        -> list[SyntheticScene]:
    """count scenes with the seeds seed, seed + 1, ..."""
    if count < 0:
        raise ParameterError("Scene count has to be >= 0", "make_scenes")
    scenes = [make_scene(meshes, seed + i, intrinsics, cfg) for i in range(count)]
    logger.info(f"Synthesized {count} scenes of {len(meshes)} objects")
    return scenes
