import unittest

import numpy as np

from src.codebook.codebook import Codebook, build_codebook, knn, merge
from src.codebook.index import IndexParams
from src.descriptors.pca_regressor import pca_fit
from src.geometry.camera import CameraIntrinsics
from src.geometry.pose import Pose
from src.geometry.viewpoints import ViewpointSet, sample_icosahedron_views
from src.patches.sampling import PatchConfig, sample_view_patches, stack_patches
from src.rendering.procedural import make_cube, make_icosphere
from src.rendering.rasterizer import render
from src.utils.exceptions import CodebookBuildError, DimensionMismatchError, ParameterError

K = CameraIntrinsics()
CFG = PatchConfig()


def random_codebook(count: int, dimension: int, object_id: int = 1, seed: int = 0) -> Codebook:
    rng = np.random.default_rng(seed)
    orientations = rng.normal(size=(count, 4))
    orientations /= np.linalg.norm(orientations, axis=1, keepdims=True)
    return Codebook(rng.normal(size=(count, dimension)), rng.normal(size=(count, 3)) * 0.05,
                    orientations, rng.random((count, 32, 32)) < 0.5, np.full(count, object_id),
                    IndexParams(exact=True))


class TestBuildCodebook(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cube = make_cube()
        cls.views = sample_icosahedron_views(0, 0.6, 1)
        patches = [patch for pose in cls.views
                   for patch, _ in sample_view_patches(render(cls.cube, pose, K), CFG)]
        cls.regressor = pca_fit(stack_patches(patches), 16)
        cls.codebook = build_codebook(cls.cube, cls.views, cls.regressor, CFG, object_id=4)

    def test_entry_count(self):
        expected = sum(len(sample_view_patches(render(self.cube, pose, K), CFG))
                       for pose in self.views)
        self.assertEqual(len(self.codebook), expected)
        self.assertEqual(self.codebook.dimension, 16)
        self.assertEqual(self.codebook.objects, [4])

    def test_single_view_votes(self):
        pose = self.views[0]
        single = ViewpointSet(radius=0.6, inplane_steps=1, vertices=self.views.vertices[:1],
                              poses=(pose,))
        codebook = build_codebook(self.cube, single, self.regressor, CFG)
        samples = sample_view_patches(render(self.cube, pose, K), CFG)
        self.assertEqual(len(codebook), len(samples))

        centroid = pose.apply(self.cube.centroid)
        for (patch, mask), row in zip(samples, range(len(codebook))):
            entry = codebook.entry(row)
            np.testing.assert_allclose(patch.center_point + entry.offset, centroid, atol=1e-6)
            np.testing.assert_array_equal(entry.mask, mask)
            self.assertAlmostEqual(abs(np.dot(entry.orientation, pose.rotation)), 1.0, places=6)
        np.testing.assert_allclose(codebook.descriptors,
                                   self.regressor.encode(stack_patches([p for p, _ in samples])),
                                   rtol=1e-5, atol=1e-5)

    def test_orientations_canonical(self):
        norms = np.linalg.norm(self.codebook.orientations, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)
        self.assertTrue(np.all(self.codebook.orientations[:, 0] >= 0))

    def test_entry_descriptor_is_own_neighbor(self):
        row = len(self.codebook) // 2
        neighbors = knn(self.codebook, self.codebook.descriptors[row], 3)
        self.assertEqual(len(neighbors), 3)
        self.assertAlmostEqual(neighbors[0][1], 0.0, places=5)
        distances = [distance for _, distance in neighbors]
        self.assertEqual(distances, sorted(distances))

    def test_empty_views(self):
        empty = ViewpointSet(radius=0.6, inplane_steps=1, vertices=np.zeros((0, 3)), poses=())
        with self.assertRaises(CodebookBuildError):
            build_codebook(self.cube, empty, self.regressor, CFG)

    def test_mesh_behind_camera(self):
        behind = ViewpointSet(radius=0.6, inplane_steps=1, vertices=np.zeros((1, 3)),
                              poses=(Pose(translation=[0.0, 0.0, -0.6]),))
        with self.assertRaises(CodebookBuildError):
            build_codebook(self.cube, behind, self.regressor, CFG)


class TestCodebook(unittest.TestCase):
    def test_invalid_orientation(self):
        with self.assertRaises(ParameterError):
            Codebook(np.zeros((1, 4)), np.zeros((1, 3)), [[2.0, 0, 0, 0]], np.zeros((1, 32, 32)),
                     [1])

    def test_sign_canonicalization(self):
        codebook = Codebook(np.zeros((1, 4)), np.zeros((1, 3)), [[-1.0, 0, 0, 0]],
                            np.zeros((1, 32, 32)), [1])
        np.testing.assert_array_equal(codebook.orientations[0], [1.0, 0, 0, 0])

    def test_restrict(self):
        merged = merge([random_codebook(20, 8, 1), random_codebook(30, 8, 2, seed=1)])
        restricted = merged.restrict([2])
        self.assertEqual(len(restricted), 30)
        self.assertEqual(restricted.objects, [2])
        np.testing.assert_array_equal(restricted.descriptors, merged.descriptors[20:])
        self.assertEqual(len(merged.restrict([7])), 0)

    def test_knn_empty_codebook(self):
        self.assertEqual(knn(random_codebook(10, 8).restrict([5]), np.zeros(8), 3), [])

    def test_knn_invalid(self):
        codebook = random_codebook(10, 8)
        with self.assertRaises(ParameterError):
            knn(codebook, np.zeros(8), 3, mode="fuzzy")
        with self.assertRaises(ParameterError):
            knn(codebook, np.zeros(8), 0)
        with self.assertRaises(ParameterError):
            knn(codebook, np.zeros(9), 1)

    def test_knn_modes_agree_on_small_codebook(self):
        codebook = random_codebook(50, 8).with_index_params(IndexParams(search_k=5000))
        query = np.random.default_rng(9).normal(size=8)
        exact = knn(codebook, query, 4, mode="exact")
        approx = knn(codebook, query, 4, mode="approx")
        self.assertEqual([entry.index for entry, _ in exact], [entry.index for entry, _ in approx])


class TestMerge(unittest.TestCase):
    def test_single(self):
        codebook = random_codebook(15, 6)
        merged = merge([codebook])
        np.testing.assert_array_equal(merged.descriptors, codebook.descriptors)
        np.testing.assert_array_equal(merged.masks, codebook.masks)

    def test_concatenation(self):
        a, b = random_codebook(15, 6, 1), random_codebook(25, 6, 2, seed=3)
        merged = merge([a, b])
        self.assertEqual(len(merged), 40)
        self.assertEqual(merged.objects, [1, 2])
        np.testing.assert_array_equal(merged.offsets[15:], b.offsets)
        np.testing.assert_array_equal(merged.orientations[:15], a.orientations)

    def test_merged_neighbors_are_not_farther(self):
        a, b = random_codebook(40, 6, 1), random_codebook(40, 6, 2, seed=5)
        merged = merge([a, b])
        queries = np.random.default_rng(6).normal(size=(10, 6))
        k = 3
        _, d_merged = merged.query(queries, k, exact=True)
        for part in (a, b):
            _, d_part = part.query(queries, k, exact=True)
            self.assertTrue(np.all(d_merged <= d_part + 1e-12))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            merge([random_codebook(5, 6), random_codebook(5, 7)])

    def test_nothing_to_merge(self):
        with self.assertRaises(CodebookBuildError):
            merge([])


class TestSymmetricObject(unittest.TestCase):
    def test_sphere_codebook(self):
        sphere = make_icosphere()
        views = sample_icosahedron_views(0, 0.6, 1)
        patches = [patch for patch, _ in sample_view_patches(render(sphere, views[0], K), CFG)]
        codebook = build_codebook(sphere, views, pca_fit(stack_patches(patches), 8), CFG,
                                  object_id=2)
        self.assertGreater(len(codebook), len(views))
        # every vote points at the sphere center from a patch on its surface
        lengths = np.linalg.norm(codebook.offsets, axis=1)
        self.assertTrue(np.all(lengths < 0.06))


if __name__ == '__main__':
    unittest.main()
