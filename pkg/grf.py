'''
*********************************************************************
FUNCTION SPACES
*********************************************************************

Input functions of the operator problems are vectors of values at fixed
sensor locations. Training functions are zero-mean Gaussian random field
draws with the Gaussian kernel k(x, y) = exp(-|x - y|^2 / (2 l^2)),
optionally passed through a pointwise transform (positivity shift, zero
boundary envelope, normalization).
'''

import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd
from numpy.polynomial import chebyshev
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import cholesky, LinAlgError
from scipy.spatial.distance import cdist

from constants import GRF_JITTER_START, GRF_JITTER_MAX
from helpers import NumericError, StructuralError, ConfigError, printDebug


def gaussian_kernel(points_a, points_b, length):
    d2 = cdist(np.atleast_2d(points_a), np.atleast_2d(points_b), 'sqeuclidean')
    return np.exp(-d2 / (2.0 * length ** 2))


def uniform_grid(axes):
    """Sensor points of a tensor grid, first axis slowest"""
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True, eq=False)
class GrfSpec:
    axes: tuple               # 1-D arrays of sensor coordinates per axis
    length: float

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigError('correlation length must be positive, got %g' % self.length)

    @cached_property
    def sensor_grid(self):
        return uniform_grid(self.axes)

    @property
    def sensors(self):
        return len(self.sensor_grid)

    @cached_property
    def covariance(self):
        return gaussian_kernel(self.sensor_grid, self.sensor_grid, self.length)

    @cached_property
    def factor(self):
        return cholesky_factor(self.covariance)

    @cached_property
    def row_sums(self):
        return self.covariance.sum(axis=1)


def cholesky_factor(K):
    jitter = GRF_JITTER_START
    eye = np.eye(len(K))
    while jitter <= GRF_JITTER_MAX * (1 + 1e-9):
        try:
            L = cholesky(K + jitter * eye, lower=True)
            printDebug(2, 'grf: cholesky succeeded with jitter %g' % jitter)
            return L
        except LinAlgError:
            jitter *= 10.0
    raise NumericError('Cholesky factorization failed up to jitter %g' % GRF_JITTER_MAX)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_grf(spec, n, seed):
    """n GRF draws on the sensor grid, shape (n, sensors)"""

    z = _rng(seed).standard_normal((n, spec.sensors))
    return z @ spec.factor.T


def kernel_smooth(f, spec):
    """Row-normalized kernel average K f / (K 1) of one or several sensor functions"""

    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != spec.sensors:
        raise StructuralError('function of width %d, sensor grid has %d' % (f.shape[-1], spec.sensors))
    return (f @ spec.covariance.T) / spec.row_sums


def roughness(f, axes=None):
    """Mean squared second difference along the sensor axis (1-D grids)"""

    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] < 3:
        raise ConfigError('roughness needs at least 3 sensors')
    if axes is not None:
        steps = np.diff(np.asarray(axes[0], dtype=np.float64))
        if len(axes) != 1 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ConfigError('roughness needs a uniform 1-D sensor grid')
    second = f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]
    return np.mean(second * second, axis=-1)


def export_functions_csv(path, sensor_grid, functions):
    sensor_grid = np.atleast_2d(np.asarray(sensor_grid, dtype=np.float64))
    if sensor_grid.shape[0] == 1 and sensor_grid.shape[1] > 1:
        sensor_grid = sensor_grid.T
    functions = np.atleast_2d(functions)
    names = ['x', 'y', 'z'][:sensor_grid.shape[1]]
    frame = pd.DataFrame(sensor_grid, columns=names)
    for i, f in enumerate(functions):
        frame['f%d' % i] = f
    frame.to_csv(path, index=False, float_format='%.17g')
    return frame


def interpolation_matrix(axes, points):
    """Matrix S with S @ f = piecewise (bi)linear interpolant of sensor values f at points"""

    shape = tuple(len(a) for a in axes)
    n = int(np.prod(shape))
    basis = np.eye(n).reshape(shape + (n,))
    interp = RegularGridInterpolator(tuple(axes), basis, method='linear', bounds_error=False, fill_value=None)
    # space-time points interpolate on their leading (spatial) coordinates
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] < len(axes):
        raise StructuralError('points of width %d, sensor grid has %d axes' % (pts.shape[1], len(axes)))
    return interp(pts[:, :len(axes)])


'''
*********************************************************************
SPACES OF INPUT FUNCTIONS
*********************************************************************
'''

@dataclass(eq=False)
class FunctionSpace:
    """GRF draws on a sensor grid followed by a pointwise transform.

    'length' is either a fixed correlation length or a (low, high) range
    from which every training function draws its own length.
    """

    axes: tuple
    length: object
    smooth_length: float
    transform: str = 'none'   # none | shift_positive | envelope | normalize
    floor: float = None
    projector_kind: str = 'kernel'
    _specs: dict = field(default_factory=dict, repr=False)
    _specs_lock: object = field(default_factory=threading.Lock, repr=False)

    @property
    def sensor_grid(self):
        return uniform_grid(self.axes)

    @property
    def dim(self):
        return int(np.prod([len(a) for a in self.axes]))

    def spec(self, length):
        length = float(length)
        with self._specs_lock:
            if length not in self._specs:
                self._specs[length] = GrfSpec(self.axes, length)
            return self._specs[length]

    @property
    def smoothing_spec(self):
        return self.spec(self.smooth_length)

    def sample(self, n, rng, length=None):
        rng = _rng(rng)
        if length is None:
            length = self.length
        if isinstance(length, (tuple, list)):
            lo, hi = length
            # one length per function, quantized so factors are shared
            lengths = np.round(rng.uniform(lo, hi, size=n), 2)
            raw = np.empty((n, self.dim))
            for l in np.unique(lengths):
                idx = np.flatnonzero(lengths == l)
                raw[idx] = sample_grf(self.spec(l), len(idx), rng)
        else:
            raw = sample_grf(self.spec(length), n, rng)
        return self.apply_transform(raw)

    uniform = sample

    def apply_transform(self, raw):
        if self.transform == 'none':
            return raw
        if self.transform == 'shift_positive':
            return raw - raw.min(axis=-1, keepdims=True) + 1.0
        if self.transform == 'envelope':
            grid = self.sensor_grid
            if len(self.axes) == 1:
                x = grid[:, 0]
                env = x * (1.0 - x)
            else:
                env = np.prod(1.0 - grid * grid, axis=1)
            return raw * env
        if self.transform == 'normalize':
            return raw / self.l2_norm(raw)[..., None]
        raise ConfigError('unknown function transform %r' % self.transform)

    def l2_norm(self, f):
        # discrete L2 norm with the sensor cell area as weight
        cell = np.prod([(a[-1] - a[0]) / (len(a) - 1) for a in self.axes])
        return np.sqrt(np.sum(np.asarray(f) ** 2, axis=-1) * cell)

    def source_matrix(self, points):
        return interpolation_matrix(self.axes, points)


@dataclass(eq=False)
class CoefficientSpace:
    """Coefficient vectors xi uniform on [low, high]^d, mapped to functions by a Chebyshev basis"""

    dim: int
    low: float = -1.0
    high: float = 1.0
    projector_kind: str = 'clamp'

    def sample(self, n, rng):
        return _rng(rng).uniform(self.low, self.high, size=(n, self.dim))

    uniform = sample

    @property
    def lows(self):
        return np.full(self.dim, self.low)

    @property
    def highs(self):
        return np.full(self.dim, self.high)

    def source_matrix(self, points):
        x = np.asarray(points, dtype=np.float64).reshape(len(points), -1)[:, 0]
        return chebyshev.chebvander(x, self.dim - 1)
