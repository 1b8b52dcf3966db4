import unittest

import numpy as np

import jet
import networks
from autodiff import Tape, grad
from helpers import StructuralError
from jet import Jet2


class Jet2Test(unittest.TestCase):

    def test_polynomial(self):
        # f(x) = x^3 + 2x at x = 1.5
        x = Jet2(1.5, 1.0, 0.0)
        f = x ** 3 + 2.0 * x
        self.assertAlmostEqual(1.5 ** 3 + 3.0, f.value)
        self.assertAlmostEqual(3 * 1.5 ** 2 + 2.0, f.d1)
        self.assertAlmostEqual(6 * 1.5, f.d2)

    def test_elementary_functions(self):
        x0 = 0.7
        x = Jet2(x0, 1.0, 0.0)
        cases = [
            (jet.sin(x), np.sin(x0), np.cos(x0), -np.sin(x0)),
            (jet.cos(x), np.cos(x0), -np.sin(x0), -np.cos(x0)),
            (jet.exp(x), np.exp(x0), np.exp(x0), np.exp(x0)),
            (jet.tanh(x), np.tanh(x0), 1 - np.tanh(x0) ** 2,
             -2 * np.tanh(x0) * (1 - np.tanh(x0) ** 2)),
            (1.0 / x, 1 / x0, -1 / x0 ** 2, 2 / x0 ** 3),
        ]
        for f, v, d1, d2 in cases:
            self.assertAlmostEqual(v, f.value)
            self.assertAlmostEqual(d1, f.d1)
            self.assertAlmostEqual(d2, f.d2)

    def test_chain(self):
        # g(x) = exp(sin(x)) against central differences
        g = lambda v: np.exp(np.sin(v))
        x0, h = 0.4, 1e-4
        out = jet.exp(jet.sin(Jet2(x0, 1.0, 0.0)))
        self.assertAlmostEqual((g(x0 + h) - g(x0 - h)) / (2 * h), out.d1, places=6)
        self.assertAlmostEqual((g(x0 + h) - 2 * g(x0) + g(x0 - h)) / h ** 2, out.d2, places=5)

    def test_negative_power(self):
        self.assertRaises(StructuralError, lambda: Jet2(1.0, 1.0) ** -1)

    def test_seeded_direction(self):
        pts = np.array([[0.1, 0.2], [0.3, 0.4]])
        j = Jet2.seeded(pts, 1)
        np.testing.assert_array_equal(j.d1, [[0.0, 1.0], [0.0, 1.0]])
        self.assertRaises(StructuralError, Jet2.seeded, pts, 2)


class InputJetTest(unittest.TestCase):

    def setUp(self):
        self.net = networks.init_network(networks.MlpSpec.from_shape(2, 2, 8, 1), 11)

    def test_against_finite_differences(self):
        u = lambda p: float(networks.evaluate(self.net, np.array([p]))[0])
        p, h = np.array([0.3, -0.2]), 1e-4
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            j = jet.input_jet(self.net, p, k)
            self.assertAlmostEqual(u(p), j.value)
            self.assertAlmostEqual((u(p + e) - u(p - e)) / (2 * h), j.d1, places=6)
            self.assertAlmostEqual((u(p + e) - 2 * u(p) + u(p - e)) / h ** 2, j.d2, places=4)

    def test_batched(self):
        pts = np.array([[0.1, 0.2], [0.5, -0.5], [0.0, 0.9]])
        batch = jet.input_jet(self.net, pts, 0)
        for i, p in enumerate(pts):
            single = jet.input_jet(self.net, p, 0)
            self.assertAlmostEqual(single.d2, batch.d2[i])

    def test_reverse_over_forward(self):
        # d/dp of u_xx at p, with p recorded on a tape
        p0 = np.array([[0.3, -0.2]])

        def uxx(p):
            return float(jet.input_jet(self.net, p, 0).d2)

        tape = Tape()
        p = tape.leaf(p0)
        out = networks.evaluate(self.net, Jet2.seeded(p, 0))
        g = grad(out.d2.sum(), [p])[0]

        h = 1e-4
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (uxx(p0[0] + e) - uxx(p0[0] - e)) / (2 * h)
            self.assertAlmostEqual(fd, g[0, k], places=4)


if __name__ == '__main__':
    unittest.main()
