'''
*********************************************************************
LEARNING TASKS
*********************************************************************

A task binds a problem to a trainable network and gives the sampling
algorithms one interface, whatever the samples are:

    PinnTask           samples are collocation points of the domain box
    PiOperatorTask     samples are input functions; trunk points are fixed
    DataOperatorTask   samples are input functions; training uses labels

    loss(samples, params)    LossBreakdown
    train(samples, epochs)   Adam epochs, state kept across calls
    lbfgs(samples, iters)    L-BFGS polish
    score(samples)           squared residual per sample (floats)
    residual_sq(x)           same on a tape Var, for RAMS
    generate(kind, n, rng)   fresh samples
'''

from dataclasses import dataclass

import numpy as np

import networks
import sampling
from autodiff import Tape, GradientRequest, grad, value_of
from constants import NETWORK_LR
from helpers import ConfigError, printDebug
from losses import (CollocationSets, OperatorPoints, assemble_pinn_loss, assemble_pi_operator_loss,
                    assemble_data_loss, residual_for_function_sample)
from optimizers import AdamState, adam_step, lbfgs_minimize
from problems import residual


@dataclass
class TaskOptions:
    n_bc: int = 200           # boundary points per face family
    n_ic: int = 200           # initial-condition points
    n_points: int = 200       # trunk points (operators) or label points (data-driven)
    n_scoring: int = 200      # points scoring a function sample
    lr: float = NETWORK_LR

    def __post_init__(self):
        if min(self.n_bc, self.n_ic, self.n_points, self.n_scoring) < 1:
            raise ConfigError('task point counts must be >= 1')


class _Task:

    def __init__(self, problem, net, options):
        if not isinstance(net, networks.Network):
            raise ConfigError('tasks train a parametrized network, got %s' % type(net).__name__)
        self.problem = problem
        self.net = net
        self.options = options
        self.adam = AdamState.zeros(net.params.shape, lr=options.lr)
        self.epochs = 0
        self.last_loss = {}

    def loss(self, samples, params=None):
        raise NotImplementedError

    def loss_and_grad(self, samples, params):
        tape = Tape()
        p = tape.leaf(params)
        loss = self.loss(samples, p)
        g = grad(loss.total.reshape(()), [p])[0]
        return loss.values(), g

    def train(self, samples, epochs):
        for _ in range(epochs):
            self.last_loss, g = self.loss_and_grad(samples, self.net.params)
            self.net.params, self.adam = adam_step(self.adam, self.net.params, g)
        self.epochs += epochs
        if epochs:
            printDebug(2, '%s: %d epochs, loss %.4e' % (self.problem.name, self.epochs, self.last_loss['total']))
        return self.last_loss

    def lbfgs(self, samples, iters):
        if iters == 0:
            return None

        def evaluate(x):
            values, g = self.loss_and_grad(samples, x)
            return values['total'], g

        x, state = lbfgs_minimize(evaluate, self.net.params, iters)
        self.net.params = x
        self.last_loss = self.loss(samples).values()
        return state

    def score(self, samples):
        return np.asarray(value_of(self.residual_sq(np.asarray(samples, dtype=np.float64))), dtype=np.float64)

    @property
    def projector(self):
        return sampling.make_projector(self.domain)


class PinnTask(_Task):
    """Collocation samples for an MLP; boundary and initial sets stay fixed"""

    sample_kind = 'collocation'

    def __init__(self, problem, net, rng, options=None):
        super().__init__(problem, net, options or TaskOptions())
        self.domain = problem.domain
        sizes = {'bc': self.options.n_bc, 'ic': self.options.n_ic}
        self.fixed_sets = {c.kind: c.sample(sizes[c.kind], rng) for c in problem.constraints}
        self.request = GradientRequest.samples(problem.dim)

    def loss(self, samples, params=None):
        sets = CollocationSets(samples, self.fixed_sets.get('bc'), self.fixed_sets.get('ic'))
        return assemble_pinn_loss(self.problem, self.net, sets, params)

    def residual_sq(self, x):
        # samples in flight may leave the box before the final clamp
        r = residual(self.problem, self.net, x, check_domain=False)
        return r * r

    def generate(self, kind, n, rng):
        return sampling.generate(kind, n, self.domain, rng, admissible=self.domain.admissible)


class _FunctionTask(_Task):

    sample_kind = 'function'

    def __init__(self, problem, net, rng, options):
        super().__init__(problem, net, options or TaskOptions())
        self.domain = problem.function_space
        self.request = GradientRequest.samples(self.domain.dim)

    def residual_sq(self, functions):
        return residual_for_function_sample(self.problem, self.net, functions, self.scoring_points,
                                            source_matrix=self.scoring_matrix)

    def generate(self, kind, n, rng):
        if kind == 'random':
            return self.domain.sample(n, rng)
        if hasattr(self.domain, 'lows'):
            return sampling.generate(kind, n, self.domain, rng)
        raise ConfigError('%s function samples only support the random generator, got %r'
                          % (self.problem.name, kind))


class PiOperatorTask(_FunctionTask):
    """Input-function samples for a physics-informed DeepONet"""

    def __init__(self, problem, net, rng, options=None):
        super().__init__(problem, net, rng, options)
        collocation = problem.domain.uniform(self.options.n_points, rng)
        sizes = {'bc': self.options.n_bc, 'ic': self.options.n_ic}
        constraints = {c.kind: c.sample(sizes[c.kind], rng) for c in problem.constraints}
        self.points = OperatorPoints.build(problem, collocation, constraints)
        self.scoring_points = self.points.collocation
        self.scoring_matrix = self.points.matrices['phy']

    def loss(self, samples, params=None):
        return assemble_pi_operator_loss(self.problem, self.net, samples, self.points, params)


class DataOperatorTask(_FunctionTask):
    """Labelled input functions for a data-driven DeepONet; the residual only scores candidates"""

    def __init__(self, problem, net, rng, options=None):
        super().__init__(problem, net, rng, options)
        self.points = problem.domain.uniform(self.options.n_points, rng)
        self.scoring_points = problem.domain.uniform(self.options.n_scoring, rng)
        self.scoring_matrix = self.domain.source_matrix(self.scoring_points)

    def loss(self, dataset, params=None):
        return assemble_data_loss(self.net, dataset, params)


TASKS = {
    'pinn': PinnTask,
    'pi_operator': PiOperatorTask,
    'data_operator': DataOperatorTask,
}

def make_task(problem, net, rng, options=None):
    return TASKS[problem.kind](problem, net, rng, options)
