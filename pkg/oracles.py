'''
*********************************************************************
REFERENCE SOLUTIONS & METRICS
*********************************************************************

solve_reference(problem, inputs, **options) returns a SolutionGrid for
the problem's input function (sensor vector) or coefficient vector:

    burgers1d            | linearized implicit FD, 2048 x 2048
    diffusion_reaction   | Crank-Nicolson diffusion, explicit reaction, 512 x 512
    advection            | first-order upwind with CFL sub-stepping, 2048 x 2048
    poisson_piecewise    | 5-point stencil, harmonic-mean face conductivity, 257 x 257
    wave_discontinuous   | leapfrog, CFL <= 0.5, 1024 cells
    burgers2d            | semi-implicit (implicit diffusion, upwind advection), 129 x 129 x 257
    dynamic_system       | composite Simpson quadrature refined to 1e-8
'''

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import chebyshev
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import simpson
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve, splu

import problems as pde
from constants import DATASET_SCHEMA_VERSION
from framework import Register
from helpers import ConfigError, MetricError, SolverError, StructuralError, printDebug


def exact(problem, xi, functions=None):
    if problem.exact_fn is None:
        raise ConfigError('%s has no closed-form solution' % problem.name)
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    if problem.is_operator:
        if functions is None:
            raise StructuralError('%s: exact solution needs input functions' % problem.name)
        return problem.exact_fn(xi, functions)
    return problem.exact_fn(xi)


@dataclass
class SolutionGrid:
    axes: tuple
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def at(self, points):
        interp = RegularGridInterpolator(self.axes, self.values, method='linear',
                                         bounds_error=False, fill_value=None)
        return interp(np.atleast_2d(points))


solvers = Register('reference solver')

def solve_reference(problem, inputs=None, **options):
    return solvers.run(problem.name, problem, inputs, **options)


def _check_finite(u, name, step):
    if not np.all(np.isfinite(u)):
        raise SolverError('%s diverged at step %d' % (name, step), {'step': step})


def _sensor_values_1d(problem, v, x):
    axes = problem.function_space.axes
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (len(axes[0]),):
        raise StructuralError('%s expects %d sensor values, got %s' % (problem.name, len(axes[0]), v.shape))
    return np.interp(x, axes[0], v)

def _sensor_values_2d(problem, v, X, Y):
    axes = problem.function_space.axes
    v = np.asarray(v, dtype=np.float64)
    shape = tuple(len(a) for a in axes)
    if v.size != np.prod(shape):
        raise StructuralError('%s expects %d sensor values, got %d' % (problem.name, np.prod(shape), v.size))
    interp = RegularGridInterpolator(axes, v.reshape(shape), method='linear')
    return interp(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(X.shape)


def _tridiagonal(lower, diag, upper):
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return ab


'''
*********************************************************************
BURGERS 1D
*********************************************************************
'''

def burgers_cole_hopf(x, t, nu, order=128):
    """Viscous Burgers solution with u(x, 0) = -sin(pi x) by Gauss-Hermite quadrature"""

    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), x.shape)
    qx, qw = hermgauss(order)
    c = 2.0 * np.sqrt(nu * t)[..., None]
    y = x[..., None] - c * qx
    expo = -np.cos(np.pi * y) / (2.0 * np.pi * nu)
    expo -= expo.max(axis=-1, keepdims=True)
    weight = qw * np.exp(expo)
    u = -np.sum(weight * np.sin(np.pi * y), axis=-1) / np.sum(weight, axis=-1)
    return np.where(t == 0.0, -np.sin(np.pi * x), u)


@solvers('burgers1d')
def solve_burgers1d(problem, inputs=None, nx=2048, nt=2048):
    nu = problem.options['nu']
    x = np.linspace(-1.0, 1.0, nx + 1)
    t = np.linspace(0.0, 1.0, nt + 1)
    h, dt = x[1] - x[0], t[1] - t[0]

    u = -np.sin(np.pi * x)
    u[0] = u[-1] = 0.0
    values = np.empty((nx + 1, nt + 1))
    values[:, 0] = u

    diff = nu * dt / h ** 2
    for n in range(1, nt + 1):
        adv = u[1:-1] * dt / (2.0 * h)
        ab = _tridiagonal(-adv - diff, 1.0 + 2.0 * diff * np.ones(nx - 1), adv - diff)
        u = np.concatenate([[0.0], solve_banded((1, 1), ab, u[1:-1]), [0.0]])
        _check_finite(u, 'burgers1d', n)
        values[:, n] = u

    return SolutionGrid((x, t), values, {'solver': 'implicit-fd', 'nx': nx, 'nt': nt, 'nu': nu})


'''
*********************************************************************
PHYSICS-INFORMED OPERATOR PROBLEMS
*********************************************************************
'''

@solvers('diffusion_reaction')
def solve_diffusion_reaction(problem, inputs, nx=512, nt=512):
    D, k = problem.options['D'], problem.options['k']
    x = np.linspace(0.0, 1.0, nx + 1)
    t = np.linspace(0.0, 1.0, nt + 1)
    h, dt = x[1] - x[0], t[1] - t[0]
    source = _sensor_values_1d(problem, inputs, x)[1:-1]

    r = D * dt / (2.0 * h ** 2)
    m = nx - 1
    ab = _tridiagonal(-r * np.ones(m), (1.0 + 2.0 * r) * np.ones(m), -r * np.ones(m))

    u = np.zeros(nx + 1)
    values = np.zeros((nx + 1, nt + 1))
    for n in range(1, nt + 1):
        inner = u[1:-1]
        rhs = inner + r * (u[2:] - 2.0 * inner + u[:-2]) + dt * (k * inner * inner + source)
        u[1:-1] = solve_banded((1, 1), ab, rhs)
        _check_finite(u, 'diffusion_reaction', n)
        values[:, n] = u

    return SolutionGrid((x, t), values, {'solver': 'crank-nicolson', 'nx': nx, 'nt': nt})


@solvers('advection')
def solve_advection(problem, inputs, nx=2048, nt=2048, cfl=0.9):
    x = np.linspace(0.0, 1.0, nx + 1)
    t = np.linspace(0.0, 1.0, nt + 1)
    h, dt = x[1] - x[0], t[1] - t[0]
    speed = _sensor_values_1d(problem, inputs, x)
    if np.any(speed <= 0):
        raise SolverError('advection speed must be positive for inflow at x=0', {'min_speed': float(speed.min())})

    substeps = max(1, int(np.ceil(speed.max() * dt / (cfl * h))))
    tau = dt / substeps
    if speed.max() * tau / h > 1.0:
        raise SolverError('upwind CFL violated', {'cfl': float(speed.max() * tau / h)})

    s = np.sin(np.pi * x)
    values = np.empty((nx + 1, nt + 1))
    values[:, 0] = s
    c = speed[1:] * tau / h
    time = 0.0
    for n in range(1, nt + 1):
        for _ in range(substeps):
            time += tau
            s[1:] = s[1:] - c * (s[1:] - s[:-1])
            s[0] = np.sin(0.5 * np.pi * time)
        _check_finite(s, 'advection', n)
        values[:, n] = s

    return SolutionGrid((x, t), values, {'solver': 'upwind', 'nx': nx, 'nt': nt, 'substeps': substeps})


@solvers('poisson_piecewise')
def solve_poisson_piecewise(problem, inputs, n=257):
    x = np.linspace(-1.0, 1.0, n)
    h = x[1] - x[0]
    X, Y = np.meshgrid(x, x, indexing='ij')
    f = _sensor_values_2d(problem, inputs, X, Y)
    k = pde.piecewise_conductivity(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(X.shape)

    m = n - 2
    index = np.arange(m * m).reshape(m, m)
    kc = k[1:-1, 1:-1]
    rows, cols, vals = [], [], []
    diag = np.zeros((m, m))
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        kn = k[1 + di:n - 1 + di, 1 + dj:n - 1 + dj]
        kf = 2.0 * kc * kn / (kc + kn)
        diag -= kf
        ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing='ij')
        ni, nj = ii + di, jj + dj
        inside = (ni >= 0) & (ni < m) & (nj >= 0) & (nj < m)
        rows.append(index[inside])
        cols.append(index[ni[inside], nj[inside]])
        vals.append(kf[inside])
    rows.append(index.ravel())
    cols.append(index.ravel())
    vals.append(diag.ravel())

    A = sp.csr_matrix((np.concatenate(vals) / h ** 2, (np.concatenate(rows), np.concatenate(cols))),
                      shape=(m * m, m * m))
    u = np.zeros((n, n))
    u[1:-1, 1:-1] = spsolve(A, f[1:-1, 1:-1].ravel()).reshape(m, m)
    _check_finite(u, 'poisson_piecewise', 0)
    return SolutionGrid((x, x), u, {'solver': 'fd-5point-harmonic', 'n': n})


def _dynamic_quadrature(fnc, x, tol, max_panels=1 << 16):
    # int_0^x f = x * int_0^1 f(x tau) dtau
    panels = 16
    prev = None
    while panels <= max_panels:
        tau = np.linspace(0.0, 1.0, panels + 1)
        vals = fnc(x[:, None] * tau[None, :])
        cur = x * simpson(vals, x=tau, axis=1)
        if prev is not None and np.max(np.abs(cur - prev)) < tol:
            return cur, panels
        prev = cur
        panels *= 2
    raise SolverError('Simpson quadrature did not reach tolerance %g' % tol, {'panels': panels // 2})

@solvers('dynamic_system')
def solve_dynamic_system(problem, inputs, nx=101, tol=1e-8, source=None):
    xi = np.asarray(inputs, dtype=np.float64)
    D = problem.options['D']
    if xi.shape != (problem.options['d'],):
        raise StructuralError('dynamic system expects %d coefficients, got %s' % (problem.options['d'], xi.shape))
    if source is None:
        source = lambda s: chebyshev.chebval(s, xi)
    x = np.linspace(0.0, 1.0, nx)
    integral, panels = _dynamic_quadrature(source, x, tol)
    amp = np.exp(-D * np.sum((xi - 0.5) ** 2))
    return SolutionGrid((x,), amp * integral, {'solver': 'simpson', 'panels': panels, 'tol': tol})


'''
*********************************************************************
DATA-DRIVEN OPERATOR PROBLEMS
*********************************************************************
'''

@solvers('wave_discontinuous')
def solve_wave_discontinuous(problem, inputs, nx=1024, nt_out=201, cfl=0.5, c_override=None, initial=None):
    if cfl > 0.5:
        raise SolverError('leapfrog CFL %g exceeds 0.5' % cfl, {'cfl': cfl})
    T = problem.options['T']
    x = np.linspace(0.0, 1.0, nx + 1)
    h = x[1] - x[0]
    c = pde.wave_speed(x) if c_override is None else np.full_like(x, float(c_override))

    # equal steps that land on every output time
    per_output = int(np.ceil(T / (nt_out - 1) / (cfl * h / c.max())))
    steps = per_output * (nt_out - 1)
    dt = T / steps
    lam = (c * dt / h) ** 2

    u0 = initial(x) if initial is not None else _sensor_values_1d(problem, inputs, x)
    u0 = np.asarray(u0, dtype=np.float64).copy()
    u0[0] = u0[-1] = 0.0

    def lap(u):
        out = np.zeros_like(u)
        out[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
        return out

    values = np.empty((nx + 1, nt_out))
    values[:, 0] = u0
    prev, cur = u0, u0 + 0.5 * lam * lap(u0)
    for step in range(1, steps + 1):
        if step % per_output == 0:
            values[:, step // per_output] = cur
        if step == steps:
            break
        prev, cur = cur, 2.0 * cur - prev + lam * lap(cur)
        cur[0] = cur[-1] = 0.0
        _check_finite(cur, 'wave_discontinuous', step)

    t = np.linspace(0.0, T, nt_out)
    return SolutionGrid((x, t), values, {'solver': 'leapfrog', 'nx': nx, 'steps': steps,
                                         'cfl': float(c.max() * dt / h)})


def _laplacian_2d(m, h):
    e = np.ones(m)
    L1 = sp.diags([e[:-1], -2.0 * e, e[:-1]], [-1, 0, 1]) / h ** 2
    I = sp.identity(m)
    return (sp.kron(L1, I) + sp.kron(I, L1)).tocsc()

def _upwind_sum(u, h):
    # du/dx1 + du/dx2 with upwinding by the sign of u; u has zero boundary rows
    inner = u[1:-1, 1:-1]
    pos = inner > 0
    dx1 = np.where(pos, inner - u[:-2, 1:-1], u[2:, 1:-1] - inner) / h
    dx2 = np.where(pos, inner - u[1:-1, :-2], u[1:-1, 2:] - inner) / h
    return dx1 + dx2

@solvers('burgers2d')
def solve_burgers2d(problem, inputs, n=129, nt=256, cfl=0.5):
    nu = problem.options['nu']
    x = np.linspace(-1.0, 1.0, n)
    t = np.linspace(0.0, 1.0, nt + 1)
    h, dt = x[1] - x[0], t[1] - t[0]
    X, Y = np.meshgrid(x, x, indexing='ij')

    u = _sensor_values_2d(problem, inputs, X, Y)
    u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = 0.0

    # |u| does not grow for viscous Burgers, so the initial maximum bounds the CFL
    umax = max(np.abs(u).max(), 1e-12)
    substeps = max(1, int(np.ceil(2.0 * umax * dt / (cfl * h))))
    tau = dt / substeps

    m = n - 2
    lu = splu((sp.identity(m * m, format='csc') - tau * nu * _laplacian_2d(m, h)).tocsc())

    values = np.empty((n, n, nt + 1))
    values[:, :, 0] = u
    for step in range(1, nt + 1):
        for _ in range(substeps):
            courant = 2.0 * np.abs(u).max() * tau / h
            if courant > 1.0:
                raise SolverError('burgers2d CFL violated', {'step': step, 'courant': float(courant)})
            rhs = u[1:-1, 1:-1] - tau * u[1:-1, 1:-1] * _upwind_sum(u, h)
            u = np.zeros_like(u)
            u[1:-1, 1:-1] = lu.solve(rhs.ravel()).reshape(m, m)
        _check_finite(u, 'burgers2d', step)
        values[:, :, step] = u

    return SolutionGrid((x, x, t), values, {'solver': 'semi-implicit-fd', 'n': n, 'nt': nt,
                                            'substeps': substeps, 'nu': nu})


'''
*********************************************************************
LABELS & DATASETS
*********************************************************************
'''

@dataclass
class Dataset:
    functions: np.ndarray     # (F, sensors)
    points: np.ndarray        # (P, coord dim)
    labels: np.ndarray        # (F, P)
    seed: int = None
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.functions)

    def extend(self, functions, labels):
        return Dataset(np.concatenate([self.functions, functions]), self.points,
                       np.concatenate([self.labels, labels]), self.seed, dict(self.metadata))


def make_labeler(problem, points, **solver_options):
    """Callable mapping function samples (F, sensors) to labels (F, P) at the given points"""

    points = np.asarray(points, dtype=np.float64)

    def label(functions):
        out = np.empty((len(functions), len(points)))
        for i, v in enumerate(np.atleast_2d(functions)):
            out[i] = solve_reference(problem, v, **solver_options).at(points)
        printDebug(2, 'oracle: labelled %d %s functions' % (len(out), problem.name))
        return out
    return label


def save_dataset(path, dataset):
    meta = dict(dataset.metadata)
    np.savez(path, schema_version=np.array(DATASET_SCHEMA_VERSION),
             seed=np.array(-1 if dataset.seed is None else dataset.seed),
             functions=dataset.functions, points=dataset.points, labels=dataset.labels,
             metadata=np.array(json.dumps(meta, sort_keys=True)))

def load_dataset(path):
    with np.load(path, allow_pickle=False) as data:
        version = int(data['schema_version'])
        if version != DATASET_SCHEMA_VERSION:
            raise ConfigError('%s: dataset schema %d, expected %d' % (path, version, DATASET_SCHEMA_VERSION))
        seed = int(data['seed'])
        return Dataset(data['functions'], data['points'], data['labels'],
                       None if seed < 0 else seed, json.loads(str(data['metadata'])))


'''
*********************************************************************
METRICS & TEST SETS
*********************************************************************
'''

def relative_l2(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise StructuralError('prediction %s and truth %s differ in shape' % (pred.shape, truth.shape))
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise MetricError('relative L2 error undefined for zero truth')
    return float(np.linalg.norm(pred - truth) / denom)


def rmse_two_set(pred, truth, ball_set, cube_set):
    """Summed squared error over both sets divided by summed squared truth.

    'pred' and 'truth' are callables on point arrays.
    """

    num, den = 0.0, 0.0
    for points in (ball_set, cube_set):
        p = np.asarray(pred(points), dtype=np.float64)
        u = np.asarray(truth(points), dtype=np.float64)
        num += float(np.sum((p - u) ** 2))
        den += float(np.sum(u ** 2))
    if den == 0:
        raise MetricError('two-set RMSE undefined for zero truth')
    return num / den


def hyperspherical_points(n, dim, rng, radius=1.0, center=0.0):
    """Normalized Gaussian directions with radius r ~ U(0, radius)"""

    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return center + direction * (radius * rng.random(n))[:, None]


def ball_uniform(n, dim, rng, radius=0.5, center=0.5):
    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return center + direction * r[:, None]
