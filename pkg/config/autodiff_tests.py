import unittest

import numpy as np

import autodiff
from autodiff import Tape, GradientRequest, backward, grad, record_scalar_graph, sample_gradient
from helpers import StructuralError, ContractError, EmptyGradientError, NumericError


def central_difference(f, x, h=1e-6):
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


class ScalarProgramTest(unittest.TestCase):

    def test_product_rule(self):
        # f(a, b) = a * b + sin(a)
        program = [('mul', (0, 1)), ('sin', (0,)), ('add', (2, 3))]
        tape = record_scalar_graph(program, [2.0, 3.0])
        self.assertAlmostEqual(6.0 + np.sin(2.0), float(tape.outputs[0].value))

        da, db = backward(tape)
        self.assertAlmostEqual(3.0 + np.cos(2.0), float(da))
        self.assertAlmostEqual(2.0, float(db))

    def test_against_finite_differences(self):
        # f(x, y) = tanh(x * y) / exp(x) - y^2 + 0.5
        program = [('mul', (0, 1)), ('tanh', (2,)), ('exp', (0,)), ('div', (3, 4)),
                   ('square', (1,)), ('sub', (5, 6)), ('const', 0.5), ('add', (7, 8))]

        def f(v):
            return float(record_scalar_graph(program, v).outputs[0].value)

        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.uniform(-1.5, 1.5, size=2)
            adjoints = backward(record_scalar_graph(program, x))
            fd = central_difference(f, x)
            np.testing.assert_allclose(np.array(adjoints, dtype=float), fd, rtol=1e-4, atol=1e-7)

    def test_fanout_accumulates(self):
        # f(x) = x * x * x uses x three times
        tape = record_scalar_graph([('mul', (0, 0)), ('mul', (1, 0))], [1.5])
        self.assertAlmostEqual(3 * 1.5 ** 2, float(backward(tape)[0]))

    def test_malformed_programs(self):
        self.assertRaises(StructuralError, record_scalar_graph, [('log', (0,))], [1.0])
        self.assertRaises(StructuralError, record_scalar_graph, [('add', (0,))], [1.0])
        self.assertRaises(StructuralError, record_scalar_graph, [('add', (0, 4))], [1.0])

    def test_non_finite_values(self):
        with self.assertRaises(NumericError) as ctx:
            record_scalar_graph([('const', 0.0), ('div', (0, 1))], [1.0])
        self.assertEqual(2, ctx.exception.node)

    def test_seeded_outputs(self):
        tape = record_scalar_graph([('sin', (0,))], [0.3])
        tape.mark_output(tape.outputs[0])
        self.assertRaises(ContractError, backward, tape)

    def test_tape_consumed_once(self):
        tape = record_scalar_graph([('exp', (0,))], [0.3])
        backward(tape)
        self.assertRaises(ContractError, backward, tape)
        self.assertRaises(ContractError, tape.leaf, 1.0)


class VectorTapeTest(unittest.TestCase):

    def test_matmul_and_broadcast(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((4, 3))
        w0 = rng.standard_normal((3, 2))
        b0 = rng.standard_normal(2)

        def loss(w, b):
            return float(np.sum(np.tanh(A @ w + b) ** 2))

        tape = Tape()
        w, b = tape.leaf(w0), tape.leaf(b0)
        h = autodiff.tanh(A @ w + b)
        gw, gb = grad((h * h).sum(), [w, b])

        np.testing.assert_allclose(gw, central_difference(lambda v: loss(v, b0), w0), rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(gb, central_difference(lambda v: loss(w0, v), b0), rtol=1e-5, atol=1e-8)

    def test_getitem_and_mean(self):
        x0 = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        tape = Tape()
        x = tape.leaf(x0)
        out = (x[:, 1] * x[:, 0]).mean()
        g = grad(out, [x])[0]
        np.testing.assert_allclose(g, np.array([[2.0, 1.0], [4.0, 3.0], [6.0, 5.0]]) / 3.0)

    def test_mixed_tapes(self):
        a, b = Tape().leaf(1.0), Tape().leaf(2.0)
        self.assertRaises(ContractError, lambda: a + b)

    def test_matmul_width_mismatch(self):
        tape = Tape()
        self.assertRaises(StructuralError, autodiff.matmul, tape.leaf(np.ones((2, 3))), np.ones((2, 2)))

    def test_vector_output_needs_seed(self):
        tape = Tape()
        x = tape.leaf(np.ones(3))
        self.assertRaises(ContractError, backward, tape, output=x * 2.0)


class SampleGradientTest(unittest.TestCase):

    def test_rows_independent(self):
        # r^2 = (x0^2 + 3 x1)^2 per row
        def residual_sq(x):
            r = x[:, 0] * x[:, 0] + 3.0 * x[:, 1]
            return r * r

        pts = np.array([[0.5, 0.1], [-1.0, 2.0], [0.2, -0.4]])
        g = sample_gradient(residual_sq, pts)
        r = pts[:, 0] ** 2 + 3.0 * pts[:, 1]
        expected = np.stack([4.0 * r * pts[:, 0], 6.0 * r], axis=1)
        np.testing.assert_allclose(g, expected)

    def test_frozen_coordinates(self):
        residual_sq = lambda x: (x * x).sum(axis=1)
        pts = np.array([[1.0, 2.0, 3.0]])
        request = GradientRequest.samples(3, selected=[0, 2])
        g = sample_gradient(residual_sq, pts, request.mask)
        np.testing.assert_allclose(g, [[2.0, 0.0, 6.0]])

    def test_mask_errors(self):
        residual_sq = lambda x: (x * x).sum(axis=1)
        request = GradientRequest.samples(2, selected=[])
        self.assertRaises(EmptyGradientError, sample_gradient, residual_sq, np.ones((1, 2)), request.mask)
        self.assertRaises(StructuralError, sample_gradient, residual_sq, np.ones((1, 3)),
                          GradientRequest.samples(2).mask)
        self.assertRaises(ContractError, GradientRequest.samples, 3, [0, 1], (1,))


if __name__ == '__main__':
    unittest.main()
