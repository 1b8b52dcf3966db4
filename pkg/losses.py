'''
Loss assembly. Every term is the mean of squared operator values over its
point set; terms are summed with unit weights. Terms are plain floats for
array inputs and autodiff Vars when parameters or samples are on a tape.
'''

from dataclasses import dataclass, field

import numpy as np

import networks
from autodiff import value_of
from helpers import ConfigError, StructuralError
from problems import PinnField, OperatorField


@dataclass
class LossBreakdown:
    phy: object = None
    bc: object = None
    ic: object = None
    data: object = None
    total: object = field(init=False)

    def __post_init__(self):
        total = 0.0
        for term in self.present().values():
            total = total + term
        self.total = total

    def present(self):
        return {k: v for k, v in (('phy', self.phy), ('bc', self.bc), ('ic', self.ic), ('data', self.data))
                if v is not None}

    def values(self):
        out = {k: float(np.asarray(value_of(v))) for k, v in self.present().items()}
        out['total'] = float(np.asarray(value_of(self.total)))
        return out


def _mean_sq(r):
    return (r * r).mean()

def _terms(residuals):
    total = 0.0
    for r in residuals:
        total = total + _mean_sq(r)
    return total


@dataclass
class CollocationSets:
    phy: np.ndarray
    bc: np.ndarray = None
    ic: np.ndarray = None


def assemble_pinn_loss(problem, net, sample_sets, params=None):
    if sample_sets.phy is None or len(value_of(sample_sets.phy)) == 0:
        raise ConfigError('%s: empty physics sample set' % problem.name)
    terms = {'phy': _mean_sq(problem.pde(PinnField(net, sample_sets.phy, params)))}

    for constraint in problem.constraints:
        points = getattr(sample_sets, constraint.kind)
        if points is None or len(points) == 0:
            raise ConfigError('%s: empty %s sample set' % (problem.name, constraint.kind))
        terms[constraint.kind] = _terms(constraint.residuals(PinnField(net, points, params)))
    return LossBreakdown(**terms)


def _check_sensors(problem, net, functions):
    width = np.shape(value_of(functions))[-1]
    if width != problem.function_space.dim:
        raise StructuralError('function samples of width %d, %s has %d sensors'
                              % (width, problem.name, problem.function_space.dim))
    expected = net.sensors if isinstance(net, networks.ClosedFormOperator) else net.spec.branch.in_dim
    if width != expected:
        raise StructuralError('function samples of width %d, branch expects %d' % (width, expected))


@dataclass
class OperatorPoints:
    """Trunk points shared by every function sample, with their source interpolation matrices"""

    collocation: np.ndarray
    constraints: dict = field(default_factory=dict)   # kind -> points
    matrices: dict = field(default_factory=dict)      # 'phy' or constraint kind -> S

    @classmethod
    def build(cls, problem, collocation, constraints=None):
        pts = cls(np.asarray(collocation, dtype=np.float64), dict(constraints or {}))
        space = problem.function_space
        pts.matrices['phy'] = space.source_matrix(pts.collocation)
        for kind, p in pts.constraints.items():
            pts.matrices[kind] = space.source_matrix(p)
        return pts


def assemble_pi_operator_loss(problem, deeponet, function_samples, collocation_points, params=None):
    """collocation_points is an OperatorPoints (or a bare point array without constraint sets)"""

    if not isinstance(collocation_points, OperatorPoints):
        collocation_points = OperatorPoints.build(problem, collocation_points)
    _check_sensors(problem, deeponet, function_samples)

    pts = collocation_points
    B = networks.deeponet_branch(deeponet, function_samples, params)
    field_ = OperatorField(deeponet, function_samples, pts.collocation, params,
                           pts.matrices['phy'], branch=B)
    terms = {'phy': _mean_sq(problem.pde(field_))}
    for constraint in problem.constraints:
        points = pts.constraints.get(constraint.kind)
        if points is None:
            continue
        cfield = OperatorField(deeponet, function_samples, points, params, pts.matrices[constraint.kind], branch=B)
        terms[constraint.kind] = _terms(constraint.residuals(cfield))
    return LossBreakdown(**terms)


def residual_for_function_sample(problem, deeponet, functions, scoring_points, params=None, source_matrix=None):
    """Mean squared residual over the scoring points, one value per function sample"""

    single = np.ndim(value_of(functions)) == 1
    if single:
        functions = functions.reshape(1, -1)
    _check_sensors(problem, deeponet, functions)
    if source_matrix is None:
        source_matrix = problem.function_space.source_matrix(scoring_points)
    r = problem.pde(OperatorField(deeponet, functions, scoring_points, params, source_matrix))
    score = (r * r).mean(axis=1)
    return score[0] if single else score


def assemble_data_loss(deeponet, dataset, params=None):
    pred = networks.deeponet_forward(deeponet, dataset.functions, dataset.points, params)
    labels = np.asarray(dataset.labels, dtype=np.float64)
    if np.shape(value_of(pred)) != labels.shape:
        raise StructuralError('predictions %s do not match labels %s' % (np.shape(value_of(pred)), labels.shape))
    return LossBreakdown(data=_mean_sq(pred - labels))
