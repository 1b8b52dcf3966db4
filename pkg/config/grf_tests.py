import os
import tempfile
import threading
import unittest

import numpy as np
import pandas as pd

import grf
from helpers import ConfigError, StructuralError


class GrfTest(unittest.TestCase):

    def setUp(self):
        self.spec = grf.GrfSpec((np.linspace(0.0, 1.0, 50),), 0.2)

    def test_kernel(self):
        K = self.spec.covariance
        self.assertEqual((50, 50), K.shape)
        np.testing.assert_allclose(np.diag(K), 1.0)
        np.testing.assert_allclose(K, K.T)
        x = self.spec.sensor_grid[:, 0]
        self.assertAlmostEqual(np.exp(-(x[3] - x[7]) ** 2 / (2 * 0.04)), K[3, 7])

    def test_factor_reproduces_covariance(self):
        L = self.spec.factor
        np.testing.assert_allclose(L @ L.T, self.spec.covariance, atol=1e-4)

    def test_deterministic_draws(self):
        a = grf.sample_grf(self.spec, 4, 12)
        b = grf.sample_grf(self.spec, 4, 12)
        np.testing.assert_array_equal(a, b)
        self.assertEqual((4, 50), a.shape)

    @unittest.skipUnless(os.environ.get('RAMS_SLOW'), 'statistical check')
    def test_empirical_covariance(self):
        f = grf.sample_grf(self.spec, 20000, 0)
        np.testing.assert_allclose(np.cov(f.T), self.spec.covariance, atol=0.05)

    def test_near_constant_field(self):
        spec = grf.GrfSpec(self.spec.axes, 1e3)
        f = grf.sample_grf(spec, 200, 4)
        spread = f.max(axis=1) - f.min(axis=1)
        self.assertGreaterEqual(np.mean(spread < 0.05), 0.95)

    def test_smoothing_properties(self):
        # shift equivariance and the one-sensor grid
        f = np.random.default_rng(1).standard_normal((3, 50))
        np.testing.assert_allclose(grf.kernel_smooth(f + 3.7, self.spec), grf.kernel_smooth(f, self.spec) + 3.7,
                                   rtol=0.0, atol=1e-12)
        single = grf.GrfSpec((np.array([0.5]),), 0.2)
        np.testing.assert_array_equal([2.5], grf.kernel_smooth(np.array([2.5]), single))

        draws = grf.sample_grf(grf.GrfSpec(self.spec.axes, 0.05), 1000, 6)
        smoothed = grf.kernel_smooth(draws, self.spec)
        self.assertTrue(np.all(grf.roughness(smoothed) <= grf.roughness(draws)))

    def test_bad_length(self):
        self.assertRaises(ConfigError, grf.GrfSpec, (np.linspace(0, 1, 5),), 0.0)

    def test_kernel_smoothing(self):
        # constants are fixed points of the row-normalized average
        f = np.full((2, 50), 3.0)
        np.testing.assert_allclose(grf.kernel_smooth(f, self.spec), f)
        rough = np.random.default_rng(0).standard_normal(50)
        smooth = grf.kernel_smooth(rough, self.spec)
        self.assertLess(grf.roughness(smooth), grf.roughness(rough))
        self.assertRaises(StructuralError, grf.kernel_smooth, np.ones(49), self.spec)

    def test_roughness(self):
        x = np.linspace(0.0, 1.0, 11)
        self.assertAlmostEqual(0.0, float(grf.roughness(2.0 * x + 1.0)))
        self.assertAlmostEqual(4 * 0.1 ** 4, float(grf.roughness(x * x)))
        self.assertRaises(ConfigError, grf.roughness, np.ones(2))
        self.assertRaises(ConfigError, grf.roughness, np.ones(3), (np.array([0.0, 0.1, 0.5]),))

    def test_alternating_roughness(self):
        self.assertEqual(16.0, float(grf.roughness(np.array([1.0, -1.0, 1.0, -1.0, 1.0]))))

    def test_interpolation_matrix(self):
        axes = (np.linspace(0.0, 1.0, 5),)
        S = grf.interpolation_matrix(axes, np.array([[0.0], [0.125], [1.0]]))
        f = np.array([0.0, 1.0, 4.0, 9.0, 16.0])
        np.testing.assert_allclose(S @ f, [0.0, 0.5, 16.0])

    def test_interpolation_space_time(self):
        # trailing time coordinates do not take part
        axes = (np.linspace(0.0, 1.0, 5),)
        f = np.array([0.0, 1.0, 4.0, 9.0, 16.0])
        S = grf.interpolation_matrix(axes, np.array([[0.125, 0.9], [0.5, 0.0], [1.0, 0.3]]))
        self.assertEqual((3, 5), S.shape)
        np.testing.assert_allclose(S @ f, [0.5, 4.0, 16.0])

        plane = (np.linspace(-1.0, 1.0, 3),) * 2
        S = grf.interpolation_matrix(plane, np.array([[0.0, 0.0, 0.7], [-1.0, 1.0, 0.2]]))
        np.testing.assert_allclose(S @ np.arange(9.0), [4.0, 2.0])
        self.assertRaises(StructuralError, grf.interpolation_matrix, plane, np.array([[0.0]]))

    def test_export_csv(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'f.csv')
            grf.export_functions_csv(path, self.spec.sensor_grid, np.ones((2, 50)))
            frame = pd.read_csv(path)
        self.assertEqual(['x', 'f0', 'f1'], list(frame.columns))
        self.assertEqual(50, len(frame))


class FunctionSpaceTest(unittest.TestCase):

    def test_transforms(self):
        axes = (np.linspace(0.0, 1.0, 30),)
        rng = np.random.default_rng(2)

        positive = grf.FunctionSpace(axes, 0.2, 0.2, transform='shift_positive')
        f = positive.sample(5, rng)
        np.testing.assert_allclose(f.min(axis=1), 1.0)

        envelope = grf.FunctionSpace(axes, 0.2, 0.2, transform='envelope')
        f = envelope.sample(5, rng)
        np.testing.assert_allclose(f[:, [0, -1]], 0.0, atol=1e-14)

        normalized = grf.FunctionSpace(axes, 0.2, 0.2, transform='normalize')
        np.testing.assert_allclose(normalized.l2_norm(normalized.sample(5, rng)), 1.0)

        self.assertRaises(ConfigError, grf.FunctionSpace(axes, 0.2, 0.2, transform='log').sample, 1, rng)

    def test_length_range(self):
        space = grf.FunctionSpace((np.linspace(0.0, 1.0, 20),), (0.1, 0.8), 0.1)
        f = space.sample(12, np.random.default_rng(0))
        self.assertEqual((12, 20), f.shape)
        self.assertTrue(all(0.1 <= l <= 0.8 for l in space._specs))

    def test_spec_cache_threads(self):
        space = grf.FunctionSpace((np.linspace(0.0, 1.0, 20),), 0.3, 0.3)
        found = []
        threads = [threading.Thread(target=lambda: found.append(space.spec(0.3))) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        self.assertEqual(8, len(found))
        self.assertTrue(all(s is found[0] for s in found))
        self.assertEqual([0.3], list(space._specs))

    def test_coefficients(self):
        space = grf.CoefficientSpace(4)
        xi = space.sample(100, np.random.default_rng(0))
        self.assertTrue(np.all((xi >= -1.0) & (xi <= 1.0)))
        S = space.source_matrix(np.array([[0.5]]))
        np.testing.assert_allclose(S, [[1.0, 0.5, -0.5, -1.0]])


if __name__ == '__main__':
    unittest.main()
