import filecmp
import os
import unittest
from dataclasses import replace
from tempfile import TemporaryDirectory

from src.descriptors.training import RegressorConfig
from src.evaluation.benchmark import closed_loop_benchmark, heldout_views, view_patches
from src.evaluation.matching import matched_errors
from src.geometry.viewpoints import RenderConfig
from src.rendering.procedural import default_objects
from src.utils.config import PipelineConfig

SLOW = os.environ.get("PVOTE_SLOW_TESTS", "") not in ("", "0")

SMALL = replace(PipelineConfig(), render=RenderConfig(subdivisions=0, radius=0.6, inplane_steps=4),
                regressor=RegressorConfig(dimension=16))


class TestSmallBenchmark(unittest.TestCase):
    def test_view_patches_limit(self):
        meshes = default_objects()
        views = SMALL.render.views()
        everything = view_patches(meshes, views, SMALL)
        limited = view_patches(meshes, views, SMALL, limit=200)
        self.assertLess(len(limited), len(everything))
        self.assertLessEqual(len(limited), 200 + len(views) * len(meshes))

    def test_heldout_views(self):
        views = heldout_views(PipelineConfig())
        self.assertEqual(views.inplane_steps, 5)
        self.assertAlmostEqual(views.radius, 0.6 * 1.15)

    def test_deterministic_files(self):
        with TemporaryDirectory() as root:
            first = closed_loop_benchmark(SMALL, scene_count=2, train_limit=3000,
                                          out_dir=os.path.join(root, "first"))
            closed_loop_benchmark(SMALL, scene_count=2, train_limit=3000,
                                  out_dir=os.path.join(root, "second"))
            for name in ("detections.csv", "evaluation.csv", "pipeline.cfg"):
                self.assertTrue(filecmp.cmp(os.path.join(root, "first", name),
                                            os.path.join(root, "second", name), shallow=False),
                                name)
            self.assertTrue(os.path.exists(os.path.join(root, "first", "timings.csv")))
        total = first.total
        self.assertEqual(total["tp"] + total["fn"], 2 * 3)
        self.assertEqual(total["tp"] + total["fp"], len(first.run.results[0].detections)
                         + len(first.run.results[1].detections))
        self.assertGreater(first.tau, 0.0)


@unittest.skipUnless(SLOW, "set PVOTE_SLOW_TESTS=1 to run the closed-loop acceptance benchmark")
class TestClosedLoopAcceptance(unittest.TestCase):
    def test_detection_quality(self):
        result = closed_loop_benchmark(PipelineConfig(), scene_count=20)
        self.assertGreaterEqual(result.total["recall"], 0.9)
        self.assertGreaterEqual(result.total["precision"], 0.8)
        diameter = min(mesh.diameter for mesh in default_objects().values())
        self.assertTrue(all(error < 0.1 * diameter for error in matched_errors(result.matchings)))

    def test_denser_sampling_not_worse(self):
        dense = closed_loop_benchmark(PipelineConfig().with_overrides(step=4), scene_count=20)
        sparse = closed_loop_benchmark(PipelineConfig().with_overrides(step=16), scene_count=20)
        self.assertGreaterEqual(dense.total["f1"], sparse.total["f1"])


if __name__ == '__main__':
    unittest.main()
