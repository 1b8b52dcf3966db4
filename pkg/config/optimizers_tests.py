import unittest

import numpy as np

from helpers import StructuralError
from optimizers import AdamState, LbfgsState, adam_step, lbfgs_minimize


def rosenbrock(x):
    f = (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2
    g = np.array([-2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
                  200.0 * (x[1] - x[0] ** 2)])
    return f, g


class AdamTest(unittest.TestCase):

    def test_first_step(self):
        # bias correction makes the first step lr * sign(g)
        state = AdamState.zeros(3, lr=0.1)
        x, state = adam_step(state, np.zeros(3), np.array([2.0, -0.5, 1e-3]))
        np.testing.assert_allclose(x, [-0.1, 0.1, -0.1], rtol=1e-4)
        self.assertEqual(1, state.step_count)

    def test_quadratic(self):
        target = np.array([1.0, -2.0, 0.5])
        state = AdamState.zeros(3, lr=0.05)
        x = np.zeros(3)
        for _ in range(2000):
            x, state = adam_step(state, x, 2.0 * (x - target))
        np.testing.assert_allclose(x, target, atol=1e-2)

    def test_non_finite_gradient(self):
        state = AdamState.zeros(2)
        x, state = adam_step(state, np.ones(2), np.array([np.nan, 1.0]))
        np.testing.assert_array_equal(x, np.ones(2))
        self.assertEqual(0, state.step_count)
        self.assertEqual(1, state.aborted)

    def test_shape_mismatch(self):
        self.assertRaises(StructuralError, adam_step, AdamState.zeros(2), np.ones(2), np.ones(3))


class LbfgsTest(unittest.TestCase):

    def test_quadratic(self):
        A = np.diag([1.0, 10.0, 100.0])
        b = np.array([1.0, 1.0, 1.0])
        fg = lambda x: (0.5 * x @ A @ x - b @ x, A @ x - b)
        x, state = lbfgs_minimize(fg, np.zeros(3), 100)
        np.testing.assert_allclose(x, np.linalg.solve(A, b), atol=1e-6)

    def test_rosenbrock(self):
        x, state = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), 200)
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-5)
        self.assertLess(state.loss, 1e-10)

    def test_monotone_loss(self):
        x0 = np.array([-1.2, 1.0])
        x, state = lbfgs_minimize(rosenbrock, x0, 10)
        self.assertLessEqual(state.loss, rosenbrock(x0)[0])
        self.assertAlmostEqual(rosenbrock(x)[0], state.loss)

    def test_zero_iterations(self):
        x0 = np.array([0.5, 0.5])
        x, state = lbfgs_minimize(rosenbrock, x0, 0)
        np.testing.assert_array_equal(x, x0)
        self.assertEqual(0, state.iterations)

    def test_history_zero_is_gradient_descent(self):
        state = LbfgsState(history=0)
        state.push(np.ones(2), np.ones(2))
        self.assertEqual(0, len(state.pairs))
        np.testing.assert_array_equal(state.direction(np.array([1.0, -2.0])), [-1.0, 2.0])

    def test_curvature_pairs_discarded(self):
        state = LbfgsState()
        state.push(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
        self.assertEqual(1, state.discarded)
        self.assertEqual(0, len(state.pairs))


if __name__ == '__main__':
    unittest.main()
