import unittest

import numpy as np

from src.geometry.camera import CameraIntrinsics
from src.verification.normals import depth_normals

K = CameraIntrinsics()


def plane_depth(normal: np.ndarray, offset: float) -> np.ndarray:
    """depth of the plane n . x = offset seen through K"""
    vs, us = np.mgrid[0:K.height, 0:K.width].astype(np.float64)
    rays = np.stack([(us - K.cx) / K.fx, (vs - K.cy) / K.fy, np.ones_like(us)], axis=-1)
    return offset / (rays @ normal)


class TestDepthNormals(unittest.TestCase):
    def test_fronto_parallel(self):
        normals, valid = depth_normals(np.full(K.shape, 0.8), K)
        self.assertFalse(valid[0].any() or valid[-1].any() or valid[:, 0].any())
        self.assertTrue(valid[1:-1, 1:-1].all())
        np.testing.assert_allclose(normals[valid], [0.0, 0.0, -1.0], atol=1e-12)

    def test_tilted_plane(self):
        normal = np.array([0.3, -0.2, -1.0])
        normal /= np.linalg.norm(normal)
        depth = plane_depth(normal, -0.7 * 0.95)
        normals, valid = depth_normals(depth, K)
        self.assertTrue(valid[1:-1, 1:-1].all())
        np.testing.assert_allclose(normals[valid], np.broadcast_to(normal, normals[valid].shape),
                                   atol=1e-6)

    def test_oriented_towards_camera(self):
        normal = np.array([-0.5, 0.0, -1.0])
        normal /= np.linalg.norm(normal)
        normals, valid = depth_normals(plane_depth(normal, -0.6), K)
        points_z = normals[valid][:, 2]
        self.assertTrue(np.all(points_z < 0))

    def test_invalid_neighbors(self):
        depth = np.full(K.shape, 0.8)
        depth[100, 100] = 0.0
        depth[200:, 300:] = 1.2
        _, valid = depth_normals(depth, K)
        for v, u in ((100, 100), (99, 100), (101, 100), (100, 99), (100, 101)):
            self.assertFalse(valid[v, u])
        self.assertTrue(valid[99, 99])
        self.assertFalse(valid[199, 350])
        self.assertFalse(valid[250, 299])
        self.assertTrue(valid[250, 350])

    def test_tiny_image(self):
        small = CameraIntrinsics(100, 100, 1, 1, 2, 2)
        normals, valid = depth_normals(np.ones((2, 2)), small)
        self.assertFalse(valid.any())
        self.assertEqual(normals.shape, (2, 2, 3))


if __name__ == '__main__':
    unittest.main()
