'''
*********************************************************************
PDE PROBLEMS
*********************************************************************

A problem is a residual operator, boundary/initial operators and a domain
box. Residuals are written against a field: an object exposing

    coord(k)   k-th coordinate of the evaluation points
    value()    network output u at the points
    jet(k)     Jet2 of u along coordinate k (u, du/dx_k, d2u/dx_k2)
    source()   input function values at the points (operator problems)

PinnField evaluates an MLP at N points (shape (N,)), OperatorField a
DeepONet for F input functions at P trunk points (shape (F, P)).
Coordinates of an OperatorField are shaped (1, P) so formulas broadcast.
'''

import math
from dataclasses import dataclass, field

import numpy as np

import grf
import jet
import networks
from autodiff import value_of
from constants import *
from framework import Register
from helpers import ConfigError, DomainError, StructuralError
from jet import Jet2, column


class Box:

    def __init__(self, lows, highs, admissible=None):
        self.lows = np.asarray(lows, dtype=np.float64)
        self.highs = np.asarray(highs, dtype=np.float64)
        if self.lows.shape != self.highs.shape or np.any(self.highs <= self.lows):
            raise ConfigError('invalid box %s .. %s' % (self.lows, self.highs))
        self.admissible = admissible

    def __repr__(self):
        return 'Box(%s, %s)' % (self.lows.tolist(), self.highs.tolist())

    @property
    def dim(self):
        return len(self.lows)

    def contains(self, points, tol=0.0):
        points = np.atleast_2d(points)
        return np.all((points >= self.lows - tol) & (points <= self.highs + tol), axis=1)

    def clamp(self, points):
        return np.clip(points, self.lows, self.highs)

    def uniform(self, n, rng):
        points = self.lows + (self.highs - self.lows) * rng.random((n, self.dim))
        if self.admissible is None:
            return points
        points = points[self.admissible(points)]
        while len(points) < n:
            extra = self.lows + (self.highs - self.lows) * rng.random((n - len(points), self.dim))
            points = np.concatenate([points, extra[self.admissible(extra)]])
        return points

    def face(self, n, rng, axis, side):
        points = self.lows + (self.highs - self.lows) * rng.random((n, self.dim))
        points[:, axis] = self.lows[axis] if side == 0 else self.highs[axis]
        return points

    def faces(self, n, rng, axes=None):
        """n points spread uniformly over the faces normal to 'axes'"""
        axes = list(range(self.dim)) if axes is None else list(axes)
        points = self.lows + (self.highs - self.lows) * rng.random((n, self.dim))
        which = rng.integers(0, 2 * len(axes), size=n)
        for j, axis in enumerate(axes):
            points[which == 2 * j, axis] = self.lows[axis]
            points[which == 2 * j + 1, axis] = self.highs[axis]
        return points

    def grid(self, counts):
        axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(self.lows, self.highs, counts)]
        return grf.uniform_grid(axes)


'''
*********************************************************************
FIELDS
*********************************************************************
'''

class PinnField:

    functions = None

    def __init__(self, net, points, params=None):
        self.net = net
        self.points = points
        self.params = params
        self._jets = {}
        self._value = None

    def coord(self, k):
        return column(self.points, k)

    def jet(self, k):
        if k not in self._jets:
            self._jets[k] = networks.evaluate(self.net, Jet2.seeded(self.points, k), self.params)
        return self._jets[k]

    def value(self):
        if self._jets:
            return next(iter(self._jets.values())).value
        if self._value is None:
            self._value = networks.evaluate(self.net, self.points, self.params)
        return self._value

    def source(self):
        raise StructuralError('PINN problems carry no input function')


class OperatorField:

    def __init__(self, net, functions, points, params=None, source_matrix=None, branch=None):
        self.net = net
        self.functions = functions
        self.points = np.asarray(points, dtype=np.float64)
        self.params = params
        self.source_matrix = source_matrix
        self._branch = branch
        self._jets = {}
        self._value = None

    @property
    def branch(self):
        if self._branch is None:
            self._branch = networks.deeponet_branch(self.net, self.functions, self.params)
        return self._branch

    def coord(self, k):
        return self.points[:, k][None, :]

    def jet(self, k):
        if k not in self._jets:
            T = networks.deeponet_trunk(self.net, Jet2.seeded(self.points, k), self.params)
            self._jets[k] = networks.deeponet_combine(self.net, self.branch, T, self.params)
        return self._jets[k]

    def value(self):
        if self._jets:
            return next(iter(self._jets.values())).value
        if self._value is None:
            T = networks.deeponet_trunk(self.net, self.points, self.params)
            self._value = networks.deeponet_combine(self.net, self.branch, T, self.params)
        return self._value

    def source(self):
        if self.source_matrix is None:
            raise StructuralError('no source interpolation matrix for these points')
        return self.functions @ self.source_matrix.T


'''
*********************************************************************
PROBLEM DESCRIPTION
*********************************************************************
'''

@dataclass
class Constraint:
    kind: str             # 'bc' or 'ic'
    sample: object        # (n, rng) -> points
    residuals: object     # field -> list of residual arrays


@dataclass(eq=False)
class PdeProblem:
    name: str
    kind: str             # pinn | pi_operator | data_operator
    domain: Box
    pde: object           # field -> residual
    constraints: list = field(default_factory=list)
    exact_fn: object = None
    function_space: object = None
    reference: str = 'closed_form'   # closed_form | fd | quadrature
    closed_form: object = None       # bypass network realizing exact_fn
    options: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.domain.dim

    @property
    def is_operator(self):
        return self.kind != 'pinn'

    def constraint(self, kind):
        for c in self.constraints:
            if c.kind == kind:
                return c
        return None

    def describe(self):
        return {'name': self.name, 'kind': self.kind, 'options': dict(self.options)}


problems = Register('problem')

def make_problem(name, **options):
    return problems.get(name)['exec'](**options)

def problem_kind(name):
    return problems.get(name)['kind']


def residual(problem, net, xi, functions=None, params=None, check_domain=True):
    """PDE residual of the network at the points xi (PINN) or for 'functions' at xi (operators)"""

    points = np.atleast_2d(value_of(xi))
    if check_domain:
        inside = problem.domain.contains(points, tol=1e-12)
        if not np.all(inside):
            raise DomainError('%d of %d points outside %r' % (np.count_nonzero(~inside), len(points), problem.domain))
    if problem.is_operator:
        if functions is None:
            raise StructuralError('operator residual needs input functions')
        S = problem.function_space.source_matrix(points)
        return problem.pde(OperatorField(net, functions, points, params, S))
    return problem.pde(PinnField(net, xi if np.ndim(value_of(xi)) == 2 else points, params))


'''
*********************************************************************
PINN PROBLEMS
*********************************************************************
'''

@problems('burgers1d', kind='pinn')
def burgers1d(nu=BURGERS_NU):
    box = Box([-1.0, 0.0], [1.0, 1.0])

    def pde(f):
        jx, jt = f.jet(0), f.jet(1)
        return jt.d1 + jx.value * jx.d1 - nu * jx.d2

    return PdeProblem('burgers1d', 'pinn', box, pde, [
        Constraint('bc', lambda n, rng: box.faces(n, rng, axes=[0]), lambda f: [f.value()]),
        Constraint('ic', lambda n, rng: box.face(n, rng, axis=1, side=0),
                   lambda f: [f.value() + jet.sin(math.pi * f.coord(0))]),
    ], reference='fd', options={'nu': nu})


def wave_exact(X):
    x, t = column(X, 0), column(X, 1)
    return (jet.sin(math.pi * x) * jet.cos(2 * math.pi * t)
            + 0.5 * jet.sin(4 * math.pi * x) * jet.cos(8 * math.pi * t))

@problems('wave1d', kind='pinn')
def wave1d():
    box = Box([0.0, 0.0], [1.0, 1.0])

    def pde(f):
        return f.jet(1).d2 - WAVE_SPEED_SQ * f.jet(0).d2

    def u0(f):
        x = f.coord(0)
        return jet.sin(math.pi * x) + 0.5 * jet.sin(4 * math.pi * x)

    return PdeProblem('wave1d', 'pinn', box, pde, [
        Constraint('bc', lambda n, rng: box.faces(n, rng, axes=[0]), lambda f: [f.value()]),
        Constraint('ic', lambda n, rng: box.face(n, rng, axis=1, side=0),
                   lambda f: [f.value() - u0(f), f.jet(1).d1]),
    ], exact_fn=wave_exact, closed_form=networks.ClosedFormNet(wave_exact, 2))


def _peak_problem(name, dim, sharpness, center, lo, hi):
    box = Box([lo] * dim, [hi] * dim)

    def q_of(cols):
        q = 0.0
        for c in cols:
            q = q + (c - center) * (c - center)
        return q

    def exact_fn(X):
        return jet.exp(-sharpness * q_of([column(X, k) for k in range(dim)]))

    def pde(f):
        q = q_of([f.coord(k) for k in range(dim)])
        source = (2.0 * sharpness * dim - 4.0 * sharpness ** 2 * q) * jet.exp(-sharpness * q)
        lap = 0.0
        for k in range(dim):
            lap = lap + f.jet(k).d2
        return -lap - source

    return PdeProblem(name, 'pinn', box, pde, [
        Constraint('bc', lambda n, rng: box.faces(n, rng),
                   lambda f: [f.value() - exact_fn(f.points)]),
    ], exact_fn=exact_fn, closed_form=networks.ClosedFormNet(exact_fn, dim),
       options={'d': dim, 'sharpness': sharpness})

@problems('poisson_peak2d', kind='pinn')
def poisson_peak2d(sharpness=POISSON_PEAK_SHARPNESS):
    return _peak_problem('poisson_peak2d', 2, sharpness, POISSON_PEAK_CENTER, -1.0, 1.0)

@problems('poisson_hd', kind='pinn')
def poisson_hd(d=7, sharpness=POISSON_HD_SHARPNESS):
    if d < 1:
        raise ConfigError('poisson_hd needs d >= 1')
    return _peak_problem('poisson_hd', d, sharpness, 0.0, -1.0, 1.0)


'''
*********************************************************************
PHYSICS-INFORMED OPERATOR PROBLEMS
*********************************************************************
'''

def _grid_1d(sensors=SENSORS_1D):
    return (np.linspace(0.0, 1.0, sensors),)

@problems('diffusion_reaction', kind='pi_operator')
def diffusion_reaction(D=DIFFUSION_D, k=REACTION_K, l_train=(0.1, 0.8), smooth_length=None,
                       sensors=SENSORS_1D):
    box = Box([0.0, 0.0], [1.0, 1.0])
    if isinstance(l_train, list):
        l_train = tuple(l_train)
    if smooth_length is None:
        smooth_length = min(l_train) if isinstance(l_train, tuple) else l_train
    space = grf.FunctionSpace(_grid_1d(sensors), l_train, smooth_length)

    def pde(f):
        jx, jt = f.jet(0), f.jet(1)
        u = jx.value
        return jt.d1 - D * jx.d2 - k * u * u - f.source()

    return PdeProblem('diffusion_reaction', 'pi_operator', box, pde, [
        Constraint('bc', lambda n, rng: box.faces(n, rng, axes=[0]), lambda f: [f.value()]),
        Constraint('ic', lambda n, rng: box.face(n, rng, axis=1, side=0), lambda f: [f.value()]),
    ], function_space=space, reference='fd',
       options={'D': D, 'k': k, 'l_train': l_train, 'smooth_length': smooth_length, 'sensors': sensors})


@problems('advection', kind='pi_operator')
def advection(l_train=0.2, sensors=SENSORS_1D):
    box = Box([0.0, 0.0], [1.0, 1.0])
    space = grf.FunctionSpace(_grid_1d(sensors), l_train, l_train, transform='shift_positive',
                              floor=ADVECTION_MIN_SPEED)

    def pde(f):
        return f.jet(1).d1 + f.source() * f.jet(0).d1

    return PdeProblem('advection', 'pi_operator', box, pde, [
        Constraint('bc', lambda n, rng: box.face(n, rng, axis=0, side=0),
                   lambda f: [f.value() - jet.sin(0.5 * math.pi * f.coord(1))]),
        Constraint('ic', lambda n, rng: box.face(n, rng, axis=1, side=0),
                   lambda f: [f.value() - jet.sin(math.pi * f.coord(0))]),
    ], function_space=space, reference='fd', options={'l_train': l_train, 'sensors': sensors})


def piecewise_conductivity(points):
    points = np.atleast_2d(points)
    inner = np.all(np.abs(points[:, :2]) <= PIECEWISE_INNER_HALF, axis=1)
    return np.where(inner, PIECEWISE_K_INNER, PIECEWISE_K_OUTER)

def interface_distance(points):
    """Distance to the boundary of the inner square [-a, a]^2"""
    points = np.atleast_2d(points)
    a = PIECEWISE_INNER_HALF
    ax, ay = np.abs(points[:, 0]), np.abs(points[:, 1])
    inside = a - np.maximum(ax, ay)
    outside = np.hypot(np.maximum(ax - a, 0.0), np.maximum(ay - a, 0.0))
    return np.where(np.maximum(ax, ay) <= a, inside, outside)

def off_interface(points):
    return interface_distance(points) > INTERFACE_TOL

@problems('poisson_piecewise', kind='pi_operator')
def poisson_piecewise(l=0.3, sensors=SENSORS_2D):
    box = Box([-1.0, -1.0], [1.0, 1.0], admissible=off_interface)
    axes = (np.linspace(-1.0, 1.0, sensors),) * 2
    space = grf.FunctionSpace(axes, l, l, transform='normalize')

    def pde(f):
        k = piecewise_conductivity(f.points)
        return k * (f.jet(0).d2 + f.jet(1).d2) - f.source()

    return PdeProblem('poisson_piecewise', 'pi_operator', box, pde, [
        Constraint('bc', lambda n, rng: box.faces(n, rng), lambda f: [f.value()]),
    ], function_space=space, reference='fd', options={'l': l, 'sensors': sensors})


def chebyshev_antiderivatives(dim):
    """Power-series coefficients of I_i(x) = int_0^x T_i(s) ds, i < dim"""
    from numpy.polynomial import chebyshev
    out = []
    for i in range(dim):
        c = np.zeros(i + 1)
        c[i] = 1.0
        out.append(chebyshev.cheb2poly(chebyshev.chebint(c, lbnd=0.0)))
    return out

def _horner(coeffs, x):
    p = float(coeffs[-1])
    for c in coeffs[-2::-1]:
        p = p * x + float(c)
    return p

def dynamic_amplitude(xi, D=DYNAMIC_D):
    d = xi - 0.5
    return jet.exp(-D * jet.total(d * d, axis=-1))

@problems('dynamic_system', kind='pi_operator')
def dynamic_system(d=DYNAMIC_DIM, D=DYNAMIC_D):
    box = Box([0.0], [1.0])
    space = grf.CoefficientSpace(d)
    integrals = chebyshev_antiderivatives(d)

    def pde(f):
        amp = dynamic_amplitude(f.functions, D)
        return f.jet(0).d1 - amp.reshape(-1, 1) * f.source()

    def trunk_basis(X):
        x = column(X, 0)
        cols = [_horner(c, x) for c in integrals]
        if isinstance(x, Jet2):
            return Jet2(*[_stack_columns([getattr(c, ch) for c in cols], x.value)
                          for ch in ('value', 'd1', 'd2')])
        return _stack_columns(cols, x)

    def exact_fn(X, functions):
        xi = np.atleast_2d(functions)
        return (dynamic_amplitude(xi, D)[:, None] * xi) @ trunk_basis(np.atleast_2d(X)).T

    problem = PdeProblem('dynamic_system', 'pi_operator', box, pde, [
        Constraint('bc', lambda n, rng: np.zeros((max(n, 1), 1)), lambda f: [f.value()]),
    ], exact_fn=exact_fn, function_space=space, reference='quadrature', options={'d': d, 'D': D})
    problem.closed_form = networks.ClosedFormOperator(
        branch_fn=lambda V: _dynamic_branch(V, D), trunk_fn=trunk_basis, sensors=d, in_dim=1)
    return problem

def _stack_columns(cols, like):
    ones = np.ones_like(np.asarray(value_of(like), dtype=np.float64))
    return np.stack([c * ones for c in cols], axis=-1)

def _dynamic_branch(V, D):
    amp = dynamic_amplitude(V, D)
    if np.ndim(value_of(V)) == 1:
        return amp * V
    return amp.reshape(-1, 1) * V


'''
*********************************************************************
DATA-DRIVEN OPERATOR PROBLEMS
*********************************************************************
The residual of these problems only scores candidate functions; training
uses labelled data.
'''

def wave_speed(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < WAVE_DISC_INTERFACE, WAVE_DISC_C_LEFT, WAVE_DISC_C_RIGHT)

@problems('wave_discontinuous', kind='data_operator')
def wave_discontinuous(l=0.3, sensors=SENSORS_1D, T=4.0):
    box = Box([0.0, 0.0], [1.0, T])
    space = grf.FunctionSpace(_grid_1d(sensors), l, l, transform='envelope')

    def pde(f):
        c = wave_speed(f.points[:, 0])
        return f.jet(1).d2 - c * c * f.jet(0).d2

    return PdeProblem('wave_discontinuous', 'data_operator', box, pde, [
        Constraint('bc', lambda n, rng: box.faces(n, rng, axes=[0]), lambda f: [f.value()]),
        Constraint('ic', lambda n, rng: box.face(n, rng, axis=1, side=0),
                   lambda f: [f.value() - f.source(), f.jet(1).d1]),
    ], function_space=space, reference='fd', options={'l': l, 'sensors': sensors, 'T': T})


BURGERS2D_CASES = {
    1: {'nu': 0.02, 'l': 0.3},
    2: {'nu': 0.1, 'l': 0.5},
}

@problems('burgers2d', kind='data_operator')
def burgers2d(case=1, nu=None, l=None, sensors=SENSORS_2D):
    if case not in BURGERS2D_CASES:
        raise ConfigError('burgers2d case must be one of %s' % sorted(BURGERS2D_CASES))
    nu = BURGERS2D_CASES[case]['nu'] if nu is None else nu
    l = BURGERS2D_CASES[case]['l'] if l is None else l
    box = Box([-1.0, -1.0, 0.0], [1.0, 1.0, 1.0])
    axes = (np.linspace(-1.0, 1.0, sensors),) * 2
    space = grf.FunctionSpace(axes, l, l, transform='envelope')

    def pde(f):
        j1, j2, jt = f.jet(0), f.jet(1), f.jet(2)
        return jt.d1 + j1.value * (j1.d1 + j2.d1) - nu * (j1.d2 + j2.d2)

    return PdeProblem('burgers2d', 'data_operator', box, pde, [
        Constraint('bc', lambda n, rng: box.faces(n, rng, axes=[0, 1]), lambda f: [f.value()]),
    ], function_space=space, reference='fd', options={'case': case, 'nu': nu, 'l': l, 'sensors': sensors})
