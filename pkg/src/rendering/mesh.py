"""
Colored triangle meshes and their ASCII PLY input/output.
"""
import os
from dataclasses import dataclass, field

import numpy as np
import trimesh
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from src.utils.exceptions import DatasetIOError, FormatError, ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)


def mesh_diameter(vertices: np.ndarray) -> float:
    """
    Maximum pairwise distance between vertices. Only convex hull vertices can realize the
    maximum, so large meshes are reduced to their hull first.
    :param vertices: (V, 3) vertices
    :return: diameter in meters
    """
    points = np.unique(np.asarray(vertices, dtype=np.float64), axis=0)
    if len(points) > 2000:
        points = points[ConvexHull(points).vertices]
    if len(points) < 2:
        return 0.0
    return float(pdist(points).max())


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Triangle mesh with per-vertex colors in the object frame.
    :param vertices: (V, 3) vertex positions in meters
    :param colors: (V, 3) uint8 RGB vertex colors
    :param triangles: (T, 3) vertex indices, counter-clockwise seen from outside
    :param name: optional name of the object
    """
    vertices: np.ndarray
    colors: np.ndarray
    triangles: np.ndarray
    name: str = "object"
    diameter: float = field(init=False)

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        colors = np.asarray(self.colors).reshape(-1, 3)
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

        if len(triangles) == 0:
            raise ParameterError("A mesh needs at least one triangle", "Mesh")
        if len(colors) != len(vertices):
            raise ParameterError("Every vertex needs a color", "Mesh")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise ParameterError("Triangle indices out of range", "Mesh")
        if colors.min() < 0 or colors.max() > 255:
            raise ParameterError("Vertex colors have to be in [0, 255]", "Mesh")

        diameter = mesh_diameter(vertices[np.unique(triangles)])
        if diameter <= 0:
            raise ParameterError("Mesh diameter has to be positive", "Mesh")

        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "colors", colors.astype(np.uint8))
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "diameter", diameter)

    @property
    def centroid(self) -> np.ndarray:
        """mean of the vertices, used as the voting target of the object"""
        return self.vertices.mean(axis=0)

    def centered(self) -> "Mesh":
        """copy of the mesh translated so that the centroid is the origin"""
        return Mesh(self.vertices - self.centroid, self.colors, self.triangles, self.name)


def load_ply(path: str, name: str = None) -> Mesh:
    """
    Loads an ASCII (or binary) PLY file with per-vertex colors. Units are meters.
    :param path: path to the PLY file
    :param name: name of the object, defaults to the file name
    :return: Mesh
    :raises DatasetIOError: if the file does not exist
    :raises FormatError: if the file is not a colored triangle mesh
    """
    if not os.path.exists(path):
        raise DatasetIOError(f"Mesh file {path} not found", "load_ply")

    try:
        loaded = trimesh.load(path, file_type="ply", process=False, force="mesh")
    except Exception as e:  # pylint: disable=broad-except
        raise FormatError(f"Could not parse PLY file {path}: {e}", component="load_ply") from e

    if not isinstance(loaded, trimesh.Trimesh) or len(loaded.faces) == 0:
        raise FormatError(f"PLY file {path} does not contain a triangle mesh",
                          component="load_ply")

    colors = np.asarray(loaded.visual.vertex_colors)[:, :3]
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    logger.debug(f"Loaded mesh {name} with {len(loaded.vertices)} vertices and "
                 f"{len(loaded.faces)} triangles")
    return Mesh(np.asarray(loaded.vertices), colors, np.asarray(loaded.faces), name)


def save_ply(mesh: Mesh, path: str):
    """
    Writes a mesh as ASCII PLY (x, y, z, red, green, blue and a face element).
    :param mesh: mesh to write
    :param path: output path
    """
    alpha = np.full((len(mesh.colors), 1), 255, dtype=np.uint8)
    export = trimesh.Trimesh(vertices=mesh.vertices, faces=mesh.triangles,
                             vertex_colors=np.hstack([mesh.colors, alpha]), process=False)
    data = export.export(file_type="ply", encoding="ascii")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb" if isinstance(data, bytes) else "w") as ply_file:
        ply_file.write(data)
