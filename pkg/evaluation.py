'''
Test sets and error reports of trained networks.

PINN problems are scored on a grid (closed form or FD reference), the
high-dimensional Poisson problem with the two-set RMSE, operator problems
with the mean relative L2 error over held-out functions, grouped by
correlation length where the problem samples several.
'''

import threading
from dataclasses import dataclass, field

import numpy as np

import networks
import oracles
from framework import Register
from helpers import ConfigError, canonical_json, printDebug, printInfo


@dataclass
class ErrorReport:
    relative_l2: float
    rmse_two_set: float = None
    by_length: dict = field(default_factory=dict)
    pointwise: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        out = {'relative_l2': self.relative_l2}
        if self.rmse_two_set is not None:
            out['rmse_two_set'] = self.rmse_two_set
        if self.by_length:
            out['by_length'] = {'%g' % l: v for l, v in sorted(self.by_length.items())}
        return out


@dataclass
class TestSet:
    points: np.ndarray
    truth: np.ndarray                 # (P,) for PINN grids, (F, P) for operators
    functions: np.ndarray = None
    lengths: np.ndarray = None        # correlation length of every test function
    ball: np.ndarray = None           # two-set RMSE sets
    cube: np.ndarray = None


test_sets = Register('test set')

_cache = {}
_cache_lock = threading.Lock()

def make_test_set(problem, **options):
    """Test set of the problem, built once per (problem options, test options)"""

    key = (problem.name, canonical_json(problem.options), canonical_json(options))
    with _cache_lock:
        if key not in _cache:
            printDebug(1, 'evaluation: building %s test set' % problem.name)
            _cache[key] = test_sets.run(problem.name, problem, **options)
        return _cache[key]


def _grid(problem, counts):
    return problem.domain.grid(counts)


@test_sets('burgers1d')
def _burgers_test_set(problem, nx=2048, nt=2048, stride=8):
    ref = oracles.solve_reference(problem, nx=nx, nt=nt)
    x, t = ref.axes
    X, T = np.meshgrid(x[::stride], t[::stride], indexing='ij')
    return TestSet(np.stack([X.ravel(), T.ravel()], axis=1), ref.values[::stride, ::stride].ravel())

def _closed_form_grid(problem, counts=(101, 101)):
    points = _grid(problem, counts)
    return TestSet(points, np.asarray(oracles.exact(problem, points), dtype=np.float64))

test_sets('wave1d')(_closed_form_grid)
test_sets('poisson_peak2d')(_closed_form_grid)


@test_sets('poisson_hd')
def _two_set_test_set(problem, n=1000, seed=1234):
    rng = np.random.default_rng(seed)
    d = problem.options['d']
    ball = oracles.hyperspherical_points(n, d, rng)
    cube = problem.domain.uniform(n, rng)
    points = np.concatenate([ball, cube])
    return TestSet(points, oracles.exact(problem, points), ball=ball, cube=cube)


def _operator_test_set(problem, lengths, n_functions, counts, seed, solver_options=None):
    rng = np.random.default_rng(seed)
    points = _grid(problem, counts)
    space = problem.function_space
    functions, tags = [], []
    for l in lengths:
        functions.append(space.sample(n_functions, rng, length=l))
        tags.append(np.full(n_functions, float(l)))
    functions = np.concatenate(functions)
    labeler = oracles.make_labeler(problem, points, **(solver_options or {}))
    return TestSet(points, labeler(functions), functions, np.concatenate(tags))

@test_sets('diffusion_reaction')
def _diffusion_test_set(problem, lengths=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8), n_functions=100,
                        counts=(101, 101), seed=1234, solver=None):
    return _operator_test_set(problem, lengths, n_functions, counts, seed, solver)

@test_sets('advection')
def _advection_test_set(problem, lengths=(0.2,), n_functions=100, counts=(101, 101), seed=1234, solver=None):
    return _operator_test_set(problem, lengths, n_functions, counts, seed, solver)

@test_sets('poisson_piecewise')
def _piecewise_test_set(problem, lengths=(0.3,), n_functions=100, counts=(65, 65), seed=1234, solver=None):
    return _operator_test_set(problem, lengths, n_functions, counts, seed, solver)

@test_sets('wave_discontinuous')
def _wave_test_set(problem, lengths=None, n_functions=100, counts=(101, 101), seed=1234, solver=None):
    return _operator_test_set(problem, lengths or (problem.options['l'],), n_functions, counts, seed, solver)

@test_sets('burgers2d')
def _burgers2d_test_set(problem, lengths=None, n_functions=100, counts=(33, 33, 33), seed=1234, solver=None):
    return _operator_test_set(problem, lengths or (problem.options['l'],), n_functions, counts, seed, solver)

@test_sets('dynamic_system')
def _ball_test_set(problem, n_functions=1000, n_points=101, seed=1234, radius=0.5, center=0.5):
    rng = np.random.default_rng(seed)
    xi = oracles.ball_uniform(n_functions, problem.options['d'], rng, radius=radius, center=center)
    points = np.linspace(0.0, 1.0, n_points)[:, None]
    return TestSet(points, oracles.exact(problem, points, xi), xi)


def _mean_relative_l2(pred, truth, lengths=None):
    errors = np.array([oracles.relative_l2(p, u) for p, u in zip(pred, truth)])
    by_length = {}
    if lengths is not None:
        for l in np.unique(lengths):
            by_length[float(l)] = float(np.mean(errors[lengths == l]))
    return float(np.mean(errors)), by_length


def evaluate(problem, net, test_set):
    if problem.is_operator:
        pred = np.asarray(networks.deeponet_forward(net, test_set.functions, test_set.points))
        rel, by_length = _mean_relative_l2(pred, test_set.truth, test_set.lengths)
        return ErrorReport(rel, by_length=by_length if len(by_length) > 1 else {}, pointwise=pred - test_set.truth)

    predict = lambda p: np.asarray(networks.evaluate(net, p), dtype=np.float64)
    pred = predict(test_set.points)
    report = ErrorReport(oracles.relative_l2(pred, test_set.truth), pointwise=pred - test_set.truth)
    if test_set.ball is not None:
        report.rmse_two_set = oracles.rmse_two_set(predict, lambda p: oracles.exact(problem, p),
                                                   test_set.ball, test_set.cube)
    return report


def evaluate_run(problem, net, options=None):
    options = dict(options or {})
    if problem.name not in test_sets:
        raise ConfigError('no test set for %s' % problem.name)
    report = evaluate(problem, net, make_test_set(problem, **options))
    printInfo('%s: relative L2 %.4e%s' % (problem.name, report.relative_l2,
              '' if report.rmse_two_set is None else ', two-set RMSE %.4e' % report.rmse_two_set))
    return report
