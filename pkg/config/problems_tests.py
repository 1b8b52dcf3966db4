import math
import unittest

import numpy as np

import networks
import oracles
import problems
from autodiff import Tape, grad
from helpers import ConfigError, DomainError, StructuralError
from losses import (CollocationSets, OperatorPoints, assemble_pinn_loss, assemble_pi_operator_loss,
                    assemble_data_loss, residual_for_function_sample)
from problems import make_problem, residual


def interior(problem, n, seed):
    return problem.domain.uniform(n, np.random.default_rng(seed))


class ExactSolutionTest(unittest.TestCase):

    def test_pinn_residuals_vanish(self):
        for name, options in (('wave1d', {}), ('poisson_peak2d', {}), ('poisson_hd', {'d': 5})):
            problem = make_problem(name, **options)
            r = residual(problem, problem.closed_form, interior(problem, 1000, 0))
            self.assertEqual((1000,), r.shape)
            self.assertLess(np.max(np.abs(r)), 1e-6, name)

    def test_dynamic_system_residual_vanishes(self):
        problem = make_problem('dynamic_system')
        xi = problem.function_space.sample(20, np.random.default_rng(1))
        x = interior(problem, 1000, 2)
        r = residual(problem, problem.closed_form, x, functions=xi)
        self.assertEqual((20, 1000), r.shape)
        self.assertLess(np.max(np.abs(r)), 1e-6)

    def test_point_values(self):
        wave = make_problem('wave1d')
        self.assertAlmostEqual(1.0, float(oracles.exact(wave, [0.5, 0.0])[0]))
        self.assertAlmostEqual(1.0, float(oracles.exact(make_problem('poisson_peak2d'), [0.5, 0.5])[0]))
        self.assertAlmostEqual(1.0, float(oracles.exact(make_problem('poisson_hd', d=7), np.zeros(7))[0]))

    def test_dynamic_closed_form(self):
        # xi = e_0 is f = T_0 = 1, so u(x) = exp(-D |xi - 0.5|^2) x
        problem = make_problem('dynamic_system')
        xi = np.zeros((1, 8))
        xi[0, 0] = 1.0
        x = np.linspace(0.0, 1.0, 5)[:, None]
        u = oracles.exact(problem, x, xi)
        np.testing.assert_allclose(u[0], math.exp(-6.0 * 2.0) * x[:, 0], atol=1e-15)

    def test_constraints_vanish(self):
        problem = make_problem('wave1d')
        rng = np.random.default_rng(3)
        for c in problem.constraints:
            field = problems.PinnField(problem.closed_form, c.sample(100, rng))
            for r in c.residuals(field):
                self.assertLess(np.max(np.abs(r)), 1e-12)


class ProblemTest(unittest.TestCase):

    def test_registry(self):
        self.assertEqual(10, len(problems.problems.names()))
        self.assertEqual('pi_operator', problems.problem_kind('advection'))
        self.assertRaises(ConfigError, make_problem, 'heat')
        self.assertRaises(ConfigError, make_problem, 'burgers2d', case=3)
        self.assertRaises(ConfigError, make_problem, 'poisson_hd', d=0)

    def test_domain_check(self):
        problem = make_problem('wave1d')
        self.assertRaises(DomainError, residual, problem, problem.closed_form, np.array([[2.0, 0.5]]))
        r = residual(problem, problem.closed_form, np.array([[2.0, 0.5]]), check_domain=False)
        self.assertEqual((1,), r.shape)

    def test_operator_needs_functions(self):
        problem = make_problem('dynamic_system')
        self.assertRaises(StructuralError, residual, problem, problem.closed_form, np.array([[0.5]]))

    def test_piecewise_interface(self):
        self.assertAlmostEqual(0.3, float(problems.interface_distance([[0.0, 0.0]])[0]))
        self.assertAlmostEqual(0.0, float(problems.interface_distance([[0.3, 0.1]])[0]))
        self.assertAlmostEqual(math.hypot(0.7, 0.7), float(problems.interface_distance([[1.0, -1.0]])[0]))
        np.testing.assert_array_equal(problems.piecewise_conductivity([[0.0, 0.0], [0.9, 0.0]]), [0.5, 1.0])

        problem = make_problem('poisson_piecewise')
        pts = interior(problem, 500, 0)
        self.assertTrue(np.all(problems.off_interface(pts)))

    def test_box(self):
        box = problems.Box([0.0, -1.0], [1.0, 1.0])
        rng = np.random.default_rng(0)
        face = box.face(10, rng, axis=1, side=0)
        self.assertTrue(np.all(face[:, 1] == -1.0))
        faces = box.faces(100, rng, axes=[0])
        self.assertTrue(np.all((faces[:, 0] == 0.0) | (faces[:, 0] == 1.0)))
        self.assertEqual((6, 2), box.grid((3, 2)).shape)
        self.assertRaises(ConfigError, problems.Box, [0.0], [0.0])

    def test_advection_speed_positive(self):
        problem = make_problem('advection')
        f = problem.function_space.sample(10, np.random.default_rng(0))
        self.assertTrue(np.all(f >= 1.0 - 1e-12))


class LossTest(unittest.TestCase):

    def test_closed_form_pinn_loss(self):
        problem = make_problem('wave1d')
        rng = np.random.default_rng(0)
        sets = CollocationSets(interior(problem, 200, 1), problem.constraint('bc').sample(50, rng),
                               problem.constraint('ic').sample(50, rng))
        loss = assemble_pinn_loss(problem, problem.closed_form, sets)
        self.assertEqual({'phy', 'bc', 'ic', 'total'}, set(loss.values()))
        self.assertLess(loss.values()['total'], 1e-12)
        self.assertRaises(ConfigError, assemble_pinn_loss, problem, problem.closed_form,
                          CollocationSets(np.zeros((0, 2)), sets.bc, sets.ic))

    def test_parameter_gradient(self):
        problem = make_problem('burgers1d')
        net = networks.init_network(networks.MlpSpec.from_shape(2, 2, 5, 1), 4)
        rng = np.random.default_rng(5)
        sets = CollocationSets(interior(problem, 30, 6), problem.constraint('bc').sample(10, rng),
                               problem.constraint('ic').sample(10, rng))
        total = lambda p: assemble_pinn_loss(problem, net, sets, p).values()['total']

        tape = Tape()
        p = tape.leaf(net.params)
        g = grad(assemble_pinn_loss(problem, net, sets, p).total.reshape(()), [p])[0]

        h = 1e-6
        for i in np.random.default_rng(7).choice(len(net.params), 12, replace=False):
            e = np.zeros_like(net.params)
            e[i] = h
            fd = (total(net.params + e) - total(net.params - e)) / (2 * h)
            self.assertAlmostEqual(0.0, (g[i] - fd) / max(abs(fd), 1e-3), places=4)

    def test_operator_losses(self):
        problem = make_problem('dynamic_system')
        net = problem.closed_form
        rng = np.random.default_rng(0)
        xi = problem.function_space.sample(6, rng)
        pts = OperatorPoints.build(problem, interior(problem, 50, 1), {'bc': np.zeros((1, 1))})
        loss = assemble_pi_operator_loss(problem, net, xi, pts)
        self.assertLess(loss.values()['total'], 1e-20)

        scores = residual_for_function_sample(problem, net, xi, pts.collocation)
        self.assertEqual((6,), scores.shape)
        single = residual_for_function_sample(problem, net, xi[0], pts.collocation)
        self.assertEqual((), np.shape(single))

        self.assertRaises(StructuralError, assemble_pi_operator_loss, problem, net, np.zeros((2, 5)), pts)

    def test_data_loss(self):
        problem = make_problem('dynamic_system')
        net = problem.closed_form
        xi = problem.function_space.sample(4, np.random.default_rng(0))
        x = np.linspace(0.0, 1.0, 7)[:, None]
        data = oracles.Dataset(xi, x, oracles.exact(problem, x, xi))
        self.assertLess(assemble_data_loss(net, data).values()['data'], 1e-28)

        shifted = oracles.Dataset(xi, x, data.labels + 0.5)
        self.assertAlmostEqual(0.25, assemble_data_loss(net, shifted).values()['total'])
        self.assertRaises(StructuralError, assemble_data_loss, net, oracles.Dataset(xi, x, data.labels[:, :3]))


if __name__ == '__main__':
    unittest.main()
