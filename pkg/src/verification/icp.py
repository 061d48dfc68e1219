"""
Projective ICP: the model is rendered at the current pose and every rendered foreground pixel is
associated with the scene point at the same pixel. The small-angle point-to-plane (or
point-to-point) update is accepted only if it does not increase the residual, otherwise the step
is halved.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from src.geometry.camera import backproject_depth
from src.geometry.frame import RgbdFrame
from src.geometry.pose import Pose, scipy_to_quat
from src.rendering.mesh import Mesh
from src.rendering.rasterizer import render
from src.utils.logging import get_default_logger
from src.verification.detections import VerifyParams
from src.verification.normals import depth_normals

logger = get_default_logger(__name__)

_MIN_PAIRS = 6


@dataclass(frozen=True)
class IcpResult:
    """
    :param pose: refined pose, the initial pose if the refinement failed
    :param residual: RMS residual at the returned pose in meters, inf if the refinement failed
    :param iterations: accepted iterations
    :param converged: the last update was below the convergence thresholds or no step
        decreased the residual any more
    :param refinement_failed: fewer than min_valid_frac of the rendered pixels were associated
    :param valid_fraction: associated fraction of the rendered pixels at the returned pose
    """
    pose: Pose
    residual: float
    iterations: int
    converged: bool
    refinement_failed: bool
    valid_fraction: float


class SceneGeometry:
    """Backprojected scene points and normals, computed once per frame"""

    def __init__(self, frame: RgbdFrame):
        self.frame = frame
        self.points = backproject_depth(frame.depth, frame.intrinsics)
        self.valid = frame.valid
        self.normals, self.normals_valid = depth_normals(frame.depth, frame.intrinsics)


@dataclass(frozen=True, eq=False)
class _Pairs:
    model: np.ndarray
    scene: np.ndarray
    normals: np.ndarray
    fraction: float
    residual: float


def _associate(mesh: Mesh, pose: Pose, scene: SceneGeometry, params: VerifyParams) -> _Pairs:
    intrinsics = scene.frame.intrinsics
    view = render(mesh, pose, intrinsics)
    rendered = backproject_depth(view.depth, intrinsics)
    distance = np.linalg.norm(rendered - scene.points, axis=-1)
    associated = view.mask & scene.valid & (distance < params.assoc_max_dist)
    foreground = np.count_nonzero(view.mask)
    fraction = np.count_nonzero(associated) / foreground if foreground else 0.0
    if params.icp_point_plane:
        associated &= scene.normals_valid

    model, target = rendered[associated], scene.points[associated]
    normals = scene.normals[associated]
    if len(model) < _MIN_PAIRS:
        residual = np.inf
    elif params.icp_point_plane:
        residual = float(np.sqrt(np.mean(np.einsum("ij,ij->i", model - target, normals) ** 2)))
    else:
        residual = float(np.sqrt(np.mean(np.sum((model - target) ** 2, axis=1))))
    return _Pairs(model, target, normals, fraction, residual)


def _point_to_plane_step(pairs: _Pairs) -> tuple[np.ndarray, np.ndarray]:
    """small-angle solution (rotation vector, translation) of the linearized objective"""
    design = np.concatenate([np.cross(pairs.model, pairs.normals), pairs.normals], axis=1)
    target = -np.einsum("ij,ij->i", pairs.model - pairs.scene, pairs.normals)
    solution, *_ = np.linalg.lstsq(design, target, rcond=None)
    return solution[:3], solution[3:]


def _point_to_point_step(pairs: _Pairs) -> tuple[np.ndarray, np.ndarray]:
    """closed form rigid alignment of the pairs"""
    model_mean, scene_mean = pairs.model.mean(axis=0), pairs.scene.mean(axis=0)
    rotation, _ = Rotation.align_vectors(pairs.scene - scene_mean, pairs.model - model_mean)
    return rotation.as_rotvec(), scene_mean - rotation.apply(model_mean)


def _update(rotvec: np.ndarray, translation: np.ndarray, scale: float) -> Pose:
    return Pose(scipy_to_quat(Rotation.from_rotvec(rotvec * scale)), translation * scale)


def icp_refine(mesh: Mesh, pose0: Pose, frame: RgbdFrame, params: VerifyParams,
               scene: SceneGeometry = None) -> IcpResult:
    """
    Refines a pose against the depth of a frame.
    :param mesh: object mesh
    :param pose0: initial object -> camera pose
    :param frame: scene frame
    :param params: verification parameters
    :param scene: precomputed geometry of the frame, computed if None
    :return: IcpResult
    """
    scene = scene or SceneGeometry(frame)
    current = _associate(mesh, pose0, scene, params)
    if current.fraction < params.min_valid_frac or not np.isfinite(current.residual):
        logger.debug(f"ICP refinement failed, {current.fraction:.1%} of the rendered pixels "
                     f"associated")
        return IcpResult(pose0, np.inf, 0, False, True, current.fraction)

    pose, iterations, converged = pose0, 0, False
    solve = _point_to_plane_step if params.icp_point_plane else _point_to_point_step
    for _ in range(params.icp_max_iters):
        rotvec, translation = solve(current)
        scale, candidate, candidate_pose = 1.0, None, None
        for _ in range(params.max_step_halvings + 1):
            candidate_pose = _update(rotvec, translation, scale) @ pose
            candidate = _associate(mesh, candidate_pose, scene, params)
            if candidate.residual <= current.residual:
                break
            scale *= 0.5
        else:
            converged = True
            break

        pose, current, iterations = candidate_pose, candidate, iterations + 1
        if (np.linalg.norm(translation) * scale < params.icp_eps_trans
                and np.degrees(np.linalg.norm(rotvec)) * scale < params.icp_eps_rot):
            converged = True
            break

    logger.debug(f"ICP: {iterations} iterations, residual {current.residual:.2e} m, "
                 f"converged {converged}")
    return IcpResult(pose, current.residual, iterations, converged, False, current.fraction)
