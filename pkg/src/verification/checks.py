"""
Depth and normal checks of a pose against the scene, and the refine-then-verify step of a
hypothesis.
"""
import numpy as np

from src.geometry.frame import RgbdFrame
from src.geometry.pose import Pose
from src.rendering.mesh import Mesh
from src.rendering.rasterizer import render
from src.utils.logging import get_default_logger
from src.verification.detections import VerifiedDetection, VerifyParams
from src.verification.icp import SceneGeometry, icp_refine
from src.verification.normals import depth_normals
from src.voting.votes import Hypothesis

logger = get_default_logger(__name__)


def verify(mesh: Mesh, pose: Pose, frame: RgbdFrame, params: VerifyParams,
           object_id: int = 0, scene: SceneGeometry = None) -> VerifiedDetection:
    """
    Renders the mesh at the pose and compares it with the scene. The depth check requires
    min_depth_inlier_frac of the rendered pixels to have a scene depth within depth_inlier_tol,
    the normal check requires the mean angle between rendered and scene normals over the inliers
    to stay below normal_max_angle.
    :param mesh: object mesh
    :param pose: object -> camera pose
    :param frame: scene frame
    :param params: verification parameters
    :param object_id: id stored in the result
    :param scene: precomputed geometry of the frame
    :return: VerifiedDetection without hypothesis
    """
    scene = scene or SceneGeometry(frame)
    view = render(mesh, pose, frame.intrinsics)
    foreground = np.count_nonzero(view.mask)
    centroid = pose.apply(mesh.centroid)

    agrees = np.abs(view.depth - frame.depth) <= params.depth_inlier_tol
    inliers = view.mask & scene.valid & agrees
    inlier_frac = np.count_nonzero(inliers) / foreground if foreground else 0.0

    rendered_normals, rendered_valid = depth_normals(view.depth, frame.intrinsics)
    compared = inliers & rendered_valid & scene.normals_valid
    if np.any(compared):
        cosines = np.einsum("ij,ij->i", rendered_normals[compared], scene.normals[compared])
        mean_angle = float(np.degrees(np.mean(np.arccos(np.clip(cosines, -1.0, 1.0)))))
    else:
        mean_angle = float("nan")

    accepted = bool(inlier_frac >= params.min_depth_inlier_frac
                    and mean_angle <= params.normal_max_angle)
    logger.debug(f"Verified object {object_id}: inliers {inlier_frac:.3f}, normal angle "
                 f"{mean_angle:.1f} deg, accepted {accepted}")
    return VerifiedDetection(object_id=object_id, pose=pose, centroid=centroid,
                             depth_inlier_frac=float(inlier_frac), mean_normal_angle=mean_angle,
                             accepted=accepted)


def refine_and_verify(hypothesis: Hypothesis, mesh: Mesh, frame: RgbdFrame, params: VerifyParams,
                      scene: SceneGeometry = None) -> VerifiedDetection:
    """
    Refines a hypothesis with projective ICP and verifies the refined pose. Hypotheses whose
    refinement failed are passed through unrefined and rejected.
    """
    scene = scene or SceneGeometry(frame)
    result = icp_refine(mesh, hypothesis.pose, frame, params, scene)
    detection = verify(mesh, result.pose, frame, params, hypothesis.object_id, scene)
    if result.refinement_failed:
        logger.debug(f"Refinement of a hypothesis of object {hypothesis.object_id} failed "
                     f"({result.valid_fraction:.1%} associated), rejected")
    return VerifiedDetection(object_id=hypothesis.object_id, pose=result.pose,
                             centroid=detection.centroid,
                             depth_inlier_frac=detection.depth_inlier_frac,
                             mean_normal_angle=detection.mean_normal_angle,
                             accepted=detection.accepted and not result.refinement_failed,
                             hypothesis=hypothesis.with_pose(result.pose),
                             refinement_failed=result.refinement_failed)
