"""
Procedural test objects with distinct per-face colors: a cube, an icosphere and an L-shaped prism,
and flat rectangles for backgrounds and occluders.
Faces do not share vertices so every face keeps its own flat color. All meshes are centered on
their vertex mean and their triangles are counter-clockwise seen from outside.
"""
import numpy as np
import trimesh

from src.rendering.mesh import Mesh

FACE_PALETTE = np.array([
    [220, 40, 40],
    [40, 180, 60],
    [40, 80, 220],
    [230, 200, 30],
    [200, 60, 200],
    [40, 200, 210],
    [240, 130, 30],
    [120, 120, 120],
], dtype=np.uint8)


def _prism(polygon: np.ndarray, height: float, name: str) -> Mesh:
    """
    Extrudes a simple counter-clockwise polygon along z. The caps are triangulated as a fan from
    the first polygon vertex, so the polygon has to be star-shaped with respect to it.
    """
    polygon = np.asarray(polygon, dtype=np.float64)
    count = len(polygon)
    z0, z1 = -height / 2.0, height / 2.0

    vertices, colors, triangles = [], [], []

    def add_face(corners: list, color: np.ndarray, fan: bool):
        start = len(vertices)
        vertices.extend(corners)
        colors.extend([color] * len(corners))
        if fan:
            for i in range(1, len(corners) - 1):
                triangles.append([start, start + i, start + i + 1])

    for i in range(count):
        a, b = polygon[i], polygon[(i + 1) % count]
        add_face([[a[0], a[1], z0], [b[0], b[1], z0], [b[0], b[1], z1], [a[0], a[1], z1]],
                 FACE_PALETTE[i % len(FACE_PALETTE)], True)

    top = [[x, y, z1] for x, y in polygon]
    bottom = [[x, y, z0] for x, y in polygon[::-1]]
    add_face(top, FACE_PALETTE[count % len(FACE_PALETTE)], True)
    add_face(bottom, FACE_PALETTE[(count + 1) % len(FACE_PALETTE)], True)

    return Mesh(np.array(vertices), np.array(colors), np.array(triangles), name).centered()


def make_cube(edge: float = 0.08) -> Mesh:
    """
    Axis aligned cube with six differently colored faces.
    :param edge: edge length in meters
    :return: Mesh centered at the origin
    """
    half = edge / 2.0
    square = [[-half, -half], [half, -half], [half, half], [-half, half]]
    return _prism(square, edge, "cube")


def make_l_prism(unit: float = 0.03, height: float = 0.04) -> Mesh:
    """
    L-shaped prism, 2 x 3 units with a 1 x 2 unit notch, extruded by height.
    :param unit: size of one unit of the L outline in meters
    :param height: extrusion depth in meters
    :return: Mesh centered at its vertex mean
    """
    outline = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 3], [0, 3]], dtype=np.float64)
    return _prism(outline * unit, height, "l_prism")


def make_icosphere(radius: float = 0.05, subdivisions: int = 2) -> Mesh:
    """
    Icosphere whose faces are colored by the direction of their normal.
    :param radius: radius in meters
    :param subdivisions: subdivision level of the icosahedron
    :return: Mesh centered at the origin
    """
    sphere = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    faces = np.asarray(sphere.faces)
    corners = np.asarray(sphere.vertices)[faces]  # (T, 3, 3)

    normals = np.asarray(sphere.face_normals)
    face_colors = np.rint((normals + 1.0) * 0.5 * 200 + 30).astype(np.uint8)

    vertices = corners.reshape(-1, 3)
    colors = np.repeat(face_colors, 3, axis=0)
    triangles = np.arange(len(vertices)).reshape(-1, 3)
    return Mesh(vertices, colors, triangles, "icosphere").centered()


def make_plane(width: float = 1.0, height: float = 1.0,
               color: tuple[int, int, int] = (150, 140, 120), name: str = "plane") -> Mesh:
    """
    Rectangle in the z = 0 plane whose front side faces -z, i.e. a camera looking along +z sees it
    with the identity rotation. Used as background and occluder of synthetic scenes.
    :param width: extent along x in meters
    :param height: extent along y in meters
    :param color: RGB color
    :param name: mesh name
    """
    w, h = width / 2.0, height / 2.0
    vertices = [[-w, -h, 0.0], [-w, h, 0.0], [w, h, 0.0], [w, -h, 0.0]]
    return Mesh(np.array(vertices), np.array([color] * 4, dtype=np.uint8),
                np.array([[0, 1, 2], [0, 2, 3]]), name)


def default_objects() -> dict[int, Mesh]:
    """
    The three test objects keyed by object id: 1 cube, 2 icosphere, 3 L-prism.
    """
    return {1: make_cube(), 2: make_icosphere(), 3: make_l_prism()}


# rotationally symmetric objects are scored with the closest point error
SYMMETRIC_OBJECTS = {"icosphere"}
