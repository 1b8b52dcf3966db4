import os
import tempfile
import unittest

import numpy as np
from scipy import stats

import oracles
from constants import BURGERS_NU
from helpers import ConfigError, MetricError, SolverError, StructuralError
from problems import make_problem


class MetricTest(unittest.TestCase):

    def test_relative_l2(self):
        u = np.array([1.0, -2.0, 2.0])
        self.assertEqual(0.0, oracles.relative_l2(u, u))
        self.assertAlmostEqual(1.0, oracles.relative_l2(2.0 * u, u))
        self.assertAlmostEqual(1.0, oracles.relative_l2(np.zeros(3), u))
        self.assertAlmostEqual(1.0 / 3.0, oracles.relative_l2(u + np.array([1.0, 0.0, 0.0]), u))
        self.assertRaises(StructuralError, oracles.relative_l2, u, u[:2])
        self.assertRaises(MetricError, oracles.relative_l2, u, np.zeros(3))

    def test_rmse_two_set(self):
        ball, cube = np.zeros((3, 2)), np.ones((2, 2))
        truth = lambda p: np.ones(len(p))
        self.assertAlmostEqual(1.0, oracles.rmse_two_set(lambda p: np.full(len(p), 2.0), truth, ball, cube))
        self.assertAlmostEqual(0.01, oracles.rmse_two_set(lambda p: np.full(len(p), 1.1), truth, ball, cube))

        # errors only on the cube: 2 * 0.5^2 / (3 + 2)
        pred = lambda p: np.where(p[:, 0] > 0.5, 1.5, 1.0)
        self.assertAlmostEqual(0.1, oracles.rmse_two_set(pred, truth, ball, cube))
        self.assertRaises(MetricError, oracles.rmse_two_set, truth, lambda p: np.zeros(len(p)), ball, cube)

    def test_hyperspherical_radii(self):
        pts = oracles.hyperspherical_points(2000, 7, np.random.default_rng(0))
        _, p = stats.kstest(np.linalg.norm(pts, axis=1), 'uniform')
        self.assertGreater(p, 0.01)

    def test_ball_uniform(self):
        d = 8
        pts = oracles.ball_uniform(2000, d, np.random.default_rng(1))
        r = np.linalg.norm(pts - 0.5, axis=1) / 0.5
        self.assertTrue(np.all(r <= 1.0))
        _, p = stats.kstest(r ** d, 'uniform')
        self.assertGreater(p, 0.01)


class BurgersReferenceTest(unittest.TestCase):

    def test_cole_hopf_initial_and_symmetry(self):
        x = np.linspace(-1.0, 1.0, 21)
        np.testing.assert_allclose(oracles.burgers_cole_hopf(x, 0.0, BURGERS_NU), -np.sin(np.pi * x))
        u = oracles.burgers_cole_hopf(x, 0.3, BURGERS_NU)
        np.testing.assert_allclose(u, -u[::-1], atol=1e-10)

    def test_fd_against_cole_hopf(self):
        problem = make_problem('burgers1d')
        grid = oracles.solve_reference(problem, nx=512, nt=512)
        x = np.array([-0.8, -0.5, -0.3, 0.3, 0.5, 0.8])
        pts = np.stack([x, np.full_like(x, 0.25)], axis=1)
        np.testing.assert_allclose(grid.at(pts), oracles.burgers_cole_hopf(x, 0.25, BURGERS_NU), atol=2e-2)
        np.testing.assert_array_equal(grid.values[[0, -1], :], 0.0)


class OperatorReferenceTest(unittest.TestCase):

    def test_wave_constant_speed(self):
        problem = make_problem('wave_discontinuous')
        grid = oracles.solve_wave_discontinuous(problem, None, nx=256, nt_out=11, c_override=1.0,
                                                initial=lambda x: np.sin(np.pi * x))
        x, t = grid.axes
        exact = np.sin(np.pi * x)[:, None] * np.cos(np.pi * t)[None, :]
        np.testing.assert_allclose(grid.values, exact, atol=1e-3)
        self.assertLessEqual(grid.metadata['cfl'], 0.5 + 1e-12)

    def test_wave_cfl(self):
        problem = make_problem('wave_discontinuous')
        with self.assertRaises(SolverError) as ctx:
            oracles.solve_wave_discontinuous(problem, np.zeros(100), cfl=0.6)
        self.assertEqual(0.6, ctx.exception.diagnostics['cfl'])

    def test_dynamic_system(self):
        problem = make_problem('dynamic_system')
        grid = oracles.solve_dynamic_system(problem, np.full(8, 0.5), source=np.ones_like)
        np.testing.assert_allclose(grid.values, grid.axes[0], atol=1e-12)

        xi = problem.function_space.sample(3, np.random.default_rng(0))
        x = np.linspace(0.0, 1.0, 11)[:, None]
        labels = oracles.make_labeler(problem, x)(xi)
        np.testing.assert_allclose(labels, oracles.exact(problem, x, xi), atol=1e-7)

        self.assertRaises(StructuralError, oracles.solve_dynamic_system, problem, np.zeros(3))
        self.assertRaises(SolverError, oracles.solve_dynamic_system, problem, xi[0], nx=3, tol=0.0)

    def test_diffusion_zero_source(self):
        problem = make_problem('diffusion_reaction')
        grid = oracles.solve_reference(problem, np.zeros(100), nx=64, nt=64)
        np.testing.assert_array_equal(grid.values, 0.0)

        grid = oracles.solve_reference(problem, np.ones(100), nx=64, nt=64)
        self.assertTrue(np.all(grid.values[1:-1, 1:] > 0.0))
        self.assertRaises(StructuralError, oracles.solve_reference, problem, np.ones(50))

    def test_advection(self):
        problem = make_problem('advection')
        self.assertRaises(SolverError, oracles.solve_reference, problem, -np.ones(100), nx=64, nt=64)

        # unit speed carries the initial profile to the right
        grid = oracles.solve_reference(problem, np.ones(100), nx=1024, nt=1024)
        self.assertAlmostEqual(np.sin(np.pi * 0.25), float(grid.at([[0.75, 0.5]])[0]), delta=2e-2)

    def test_poisson_piecewise(self):
        problem = make_problem('poisson_piecewise')
        grid = oracles.solve_reference(problem, np.ones(31 * 31), n=33)
        u = grid.values
        self.assertTrue(np.all(u[1:-1, 1:-1] < 0.0))
        np.testing.assert_allclose(u, u.T, atol=1e-12)
        np.testing.assert_array_equal(u[0, :], 0.0)

    def test_burgers2d_decays(self):
        problem = make_problem('burgers2d')
        zero = oracles.solve_reference(problem, np.zeros(31 * 31), n=17, nt=4)
        np.testing.assert_array_equal(zero.values, 0.0)

        v = problem.function_space.sample(1, np.random.default_rng(0))[0]
        grid = oracles.solve_reference(problem, v, n=33, nt=8)
        peaks = np.abs(grid.values).max(axis=(0, 1))
        self.assertTrue(np.all(np.diff(peaks) <= 1e-12))

    def test_no_solver(self):
        self.assertRaises(ConfigError, oracles.solve_reference, make_problem('wave1d'))
        self.assertRaises(ConfigError, oracles.exact, make_problem('burgers1d'), [[0.0, 0.0]])

    def test_solution_grid(self):
        x = np.linspace(0.0, 1.0, 3)
        grid = oracles.SolutionGrid((x, x), np.add.outer(x, 2.0 * x))
        np.testing.assert_allclose(grid.at([[0.25, 0.75], [1.0, 0.0]]), [1.75, 1.0])


class DatasetTest(unittest.TestCase):

    def test_save_load(self):
        data = oracles.Dataset(np.ones((2, 4)), np.zeros((3, 2)), np.arange(6.0).reshape(2, 3), 7,
                               {'problem': 'wave_discontinuous'})
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'data.npz')
            oracles.save_dataset(path, data)
            loaded = oracles.load_dataset(path)

            np.savez(path, schema_version=np.array(99), seed=np.array(0), functions=data.functions,
                     points=data.points, labels=data.labels, metadata=np.array('{}'))
            self.assertRaises(ConfigError, oracles.load_dataset, path)

        np.testing.assert_array_equal(data.labels, loaded.labels)
        self.assertEqual(7, loaded.seed)
        self.assertEqual({'problem': 'wave_discontinuous'}, loaded.metadata)

    def test_extend(self):
        data = oracles.Dataset(np.ones((2, 4)), np.zeros((3, 2)), np.zeros((2, 3)))
        bigger = data.extend(np.full((1, 4), 2.0), np.ones((1, 3)))
        self.assertEqual(3, len(bigger))
        self.assertEqual(2, len(data))
        np.testing.assert_array_equal(bigger.labels[-1], 1.0)


if __name__ == '__main__':
    unittest.main()
