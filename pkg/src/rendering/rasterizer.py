"""
Minimal software rasterizer producing unlit RGB-D views and foreground masks of colored triangle
meshes. Triangles are rasterized at integer pixel centers with a top-left fill rule, depth and
color are interpolated perspective correctly and resolved with a z-buffer. Triangles are drawn in
index order and only replace a pixel if strictly closer, which makes the output deterministic.
"""
from dataclasses import dataclass

import numpy as np

from src.geometry.camera import CameraIntrinsics
from src.geometry.frame import RgbdFrame
from src.geometry.pose import Pose
from src.geometry.viewpoints import ViewpointSet
from src.rendering.mesh import Mesh
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

NEAR_PLANE = 1e-4


@dataclass(frozen=True, eq=False)
class RenderedView:
    """
    Synthetic RGB-D view of a mesh.
    :param color: (H, W, 3) uint8 image
    :param depth: (H, W) metric depth, 0 is background
    :param mask: (H, W) foreground mask, equal to depth > 0
    :param pose: object -> camera transform used for rendering
    :param intrinsics: camera intrinsics
    :param labels: (H, W) int32 label image (0 background), only set for composed scenes
    """
    color: np.ndarray
    depth: np.ndarray
    mask: np.ndarray
    pose: Pose
    intrinsics: CameraIntrinsics
    labels: np.ndarray = None

    def to_frame(self) -> RgbdFrame:
        """the view as detector input"""
        return RgbdFrame(self.color, self.depth, self.intrinsics)


class _Buffers:
    """z-buffer and color accumulation of one render call"""

    def __init__(self, intrinsics: CameraIntrinsics):
        self.depth = np.full(intrinsics.shape, np.inf)
        self.color = np.zeros((*intrinsics.shape, 3))


def _is_top_left(dx: float, dy: float) -> bool:
    return dy < 0 or (dy == 0 and dx > 0)


def _rasterize_triangle(buffers: _Buffers, screen: np.ndarray, inv_z: np.ndarray,
                        colors: np.ndarray, width: int, height: int):
    """
    Rasterizes one triangle into the buffers.
    :param screen: (3, 2) pixel coordinates of the vertices
    :param inv_z: (3,) inverse vertex depths
    :param colors: (3, 3) vertex colors
    """
    x, y = screen[:, 0], screen[:, 1]
    area = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0])
    if area == 0:
        return
    if area < 0:
        order = [0, 2, 1]
        x, y, inv_z, colors, area = x[order], y[order], inv_z[order], colors[order], -area

    u_min = max(int(np.ceil(x.min())), 0)
    u_max = min(int(np.floor(x.max())), width - 1)
    v_min = max(int(np.ceil(y.min())), 0)
    v_max = min(int(np.floor(y.max())), height - 1)
    if u_min > u_max or v_min > v_max:
        return

    pv, pu = np.mgrid[v_min:v_max + 1, u_min:u_max + 1].astype(np.float64)

    inside = np.ones(pu.shape, dtype=bool)
    weights = []
    # edge i is opposite to vertex i
    for i in range(3):
        a, b = (i + 1) % 3, (i + 2) % 3
        dx, dy = x[b] - x[a], y[b] - y[a]
        edge = dx * (pv - y[a]) - dy * (pu - x[a])
        if _is_top_left(dx, dy):
            inside &= edge >= 0
        else:
            inside &= edge > 0
        weights.append(edge / area)

    if not inside.any():
        return

    lambdas = np.stack([w[inside] for w in weights], axis=-1)
    pixel_inv_z = lambdas @ inv_z
    z = 1.0 / pixel_inv_z

    rows = pv[inside].astype(np.int64)
    cols = pu[inside].astype(np.int64)
    closer = z < buffers.depth[rows, cols]
    if not closer.any():
        return

    rows, cols, z = rows[closer], cols[closer], z[closer]
    perspective = lambdas[closer] * inv_z / pixel_inv_z[closer, None]
    buffers.depth[rows, cols] = z
    buffers.color[rows, cols] = perspective @ colors


def render(mesh: Mesh, pose: Pose, intrinsics: CameraIntrinsics) -> RenderedView:
    """
    Renders a mesh seen through a pinhole camera. Back faces and triangles crossing the near
    plane are skipped, a mesh behind the camera results in an empty view.
    :param mesh: colored mesh in the object frame
    :param pose: object -> camera transform
    :param intrinsics: camera intrinsics
    :return: RenderedView
    """
    buffers = _Buffers(intrinsics)

    vertices = pose.apply(mesh.vertices)
    triangles = vertices[mesh.triangles]  # (T, 3, 3)
    normals = np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0])
    front_facing = np.einsum("ij,ij->i", normals, triangles[:, 0]) < 0
    in_front = triangles[:, :, 2].min(axis=1) > NEAR_PLANE
    visible = np.nonzero(front_facing & in_front)[0]

    if len(visible):
        z = vertices[:, 2]
        safe_z = np.where(z > NEAR_PLANE, z, 1.0)
        screen = np.stack([vertices[:, 0] * intrinsics.fx / safe_z + intrinsics.cx,
                           vertices[:, 1] * intrinsics.fy / safe_z + intrinsics.cy], axis=-1)
        colors = mesh.colors.astype(np.float64)

        for index in visible:
            triangle = mesh.triangles[index]
            _rasterize_triangle(buffers, screen[triangle], 1.0 / z[triangle], colors[triangle],
                                intrinsics.width, intrinsics.height)

    mask = np.isfinite(buffers.depth)
    depth = np.where(mask, buffers.depth, 0.0)
    color = np.clip(np.rint(buffers.color), 0, 255).astype(np.uint8)
    color[~mask] = 0

    return RenderedView(color=color, depth=depth, mask=mask, pose=pose, intrinsics=intrinsics)


def render_viewset(mesh: Mesh, views: ViewpointSet,
                   intrinsics: CameraIntrinsics) -> list[RenderedView]:
    """
    Renders a mesh from every pose of a viewpoint set, in the order of the set.
    :param mesh: colored mesh
    :param views: viewpoint set
    :param intrinsics: camera intrinsics
    :return: list of RenderedView
    """
    rendered = [render(mesh, pose, intrinsics) for pose in views]
    logger.info(f"Rendered {len(rendered)} views of {mesh.name}")
    return rendered


def render_scene(objects: list[tuple[Mesh, Pose, int]],
                 intrinsics: CameraIntrinsics) -> RenderedView:
    """
    Composes several meshes into one view with a shared z-buffer and a label image.
    :param objects: list of (mesh, object -> camera pose, label); label 0 marks geometry that is
        not an object of interest (occluders, background)
    :param intrinsics: camera intrinsics
    :return: RenderedView with labels, pose is the identity
    """
    depth = np.zeros(intrinsics.shape)
    color = np.zeros((*intrinsics.shape, 3), dtype=np.uint8)
    labels = np.zeros(intrinsics.shape, dtype=np.int32)
    for mesh, pose, label in objects:
        view = render(mesh, pose, intrinsics)
        closer = view.mask & ((depth == 0) | (view.depth < depth))
        depth[closer] = view.depth[closer]
        color[closer] = view.color[closer]
        labels[closer] = label

    return RenderedView(color=color, depth=depth, mask=depth > 0, pose=Pose.identity(),
                        intrinsics=intrinsics, labels=labels)
