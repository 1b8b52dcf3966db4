'''
*********************************************************************
NETWORKS
*********************************************************************

Parameter layout (flat float64 vector, layer-major):

    MLP       | for each layer i: W_i (fan_in x fan_out, row-major), b_i (fan_out)
    DeepONet  | branch MLP, trunk MLP, b0 (one scalar)

Forward passes accept ndarrays, autodiff Vars and Jet2 values for both the
inputs and the parameters, which is how the same code serves training,
residuals and sample gradients.
'''

from dataclasses import dataclass, field

import numpy as np

import jet
from autodiff import Var, value_of
from helpers import StructuralError, ConfigError


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple
    activation: str = 'tanh'

    def __post_init__(self):
        object.__setattr__(self, 'layer_widths', tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 3:
            raise StructuralError('MLP needs input, at least one hidden layer and output widths')
        if min(self.layer_widths) < 1:
            raise StructuralError('MLP widths must be >= 1, got %s' % (self.layer_widths,))
        if self.activation != 'tanh':
            raise StructuralError('unsupported activation %r' % self.activation)

    @classmethod
    def from_shape(cls, in_dim, hidden_layers, width, out_dim):
        return cls((in_dim,) + (width,) * hidden_layers + (out_dim,))

    @property
    def in_dim(self):
        return self.layer_widths[0]

    @property
    def out_dim(self):
        return self.layer_widths[-1]

    def layer_shapes(self):
        w = self.layer_widths
        return [(w[i], w[i + 1]) for i in range(len(w) - 1)]

    def param_count(self):
        return sum(a * b + b for a, b in self.layer_shapes())

    def describe(self):
        return {'kind': 'mlp', 'layer_widths': list(self.layer_widths), 'activation': self.activation}


@dataclass(frozen=True)
class DeepOnetSpec:
    branch: MlpSpec
    trunk: MlpSpec

    def __post_init__(self):
        if self.branch.out_dim != self.trunk.out_dim:
            raise StructuralError('branch width %d != trunk width %d'
                                  % (self.branch.out_dim, self.trunk.out_dim))

    @classmethod
    def from_shape(cls, sensors, coord_dim, branch, trunk):
        """'branch' / 'trunk' are (hidden_layers, width); the latent width is the hidden width"""
        bl, bw = branch
        tl, tw = trunk
        return cls(MlpSpec.from_shape(sensors, bl, bw, bw), MlpSpec.from_shape(coord_dim, tl, tw, tw))

    @property
    def latent_dim(self):
        return self.branch.out_dim

    @property
    def in_dim(self):
        return self.trunk.in_dim

    def param_count(self):
        return self.branch.param_count() + self.trunk.param_count() + 1

    def describe(self):
        return {'kind': 'deeponet', 'branch': self.branch.describe(), 'trunk': self.trunk.describe()}


def spec_from_description(desc):
    if desc.get('kind') == 'mlp':
        return MlpSpec(tuple(desc['layer_widths']), desc.get('activation', 'tanh'))
    if desc.get('kind') == 'deeponet':
        return DeepOnetSpec(spec_from_description(desc['branch']), spec_from_description(desc['trunk']))
    raise ConfigError('unknown network description %r' % desc.get('kind'))


@dataclass
class Network:
    spec: object
    params: np.ndarray

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.shape != (self.spec.param_count(),):
            raise StructuralError('parameter vector of length %d, spec needs %d'
                                  % (self.params.size, self.spec.param_count()))


@dataclass
class ClosedFormNet:
    """Bypass network u = fn(points), fn written with the jet elementary functions"""

    fn: object
    in_dim: int
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class ClosedFormOperator:
    """Bypass operator: G[v](x) = sum_i branch_fn(v)_i * trunk_fn(x)_i + bias"""

    branch_fn: object
    trunk_fn: object
    sensors: int
    in_dim: int
    bias: float = 0.0
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))


'''
*********************************************************************
FLATTENING
*********************************************************************
'''

def _take(params, start, shape):
    size = int(np.prod(shape))
    chunk = params[start:start + size]
    return chunk.reshape(shape), start + size

def _unflatten_mlp(spec, params, start=0):
    layers = []
    for shape in spec.layer_shapes():
        W, start = _take(params, start, shape)
        b, start = _take(params, start, (shape[1],))
        layers.append((W, b))
    return layers, start

def unflatten(spec, params):
    """MLP -> [(W, b), ...]; DeepONet -> (branch layers, trunk layers, b0)"""

    if np.shape(value_of(params)) != (spec.param_count(),):
        raise StructuralError('parameter vector does not match spec')
    if isinstance(spec, MlpSpec):
        return _unflatten_mlp(spec, params)[0]
    branch, start = _unflatten_mlp(spec.branch, params)
    trunk, start = _unflatten_mlp(spec.trunk, params, start)
    return branch, trunk, params[start]

def flatten(spec, layers):
    if isinstance(spec, MlpSpec):
        return np.concatenate([np.concatenate([np.ravel(W), np.ravel(b)]) for W, b in layers])
    branch, trunk, b0 = layers
    return np.concatenate([flatten(spec.branch, branch), flatten(spec.trunk, trunk),
                           np.atleast_1d(np.asarray(b0, dtype=np.float64))])


'''
*********************************************************************
INITIALIZATION
*********************************************************************
'''

def _glorot(spec, rng):
    layers = []
    for fan_in, fan_out in spec.layer_shapes():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return layers

def init_network(spec, seed):
    rng = np.random.default_rng(seed)
    if isinstance(spec, MlpSpec):
        return Network(spec, flatten(spec, _glorot(spec, rng)))
    branch = _glorot(spec.branch, rng)
    trunk = _glorot(spec.trunk, rng)
    return Network(spec, flatten(spec, (branch, trunk, 0.0)))


'''
*********************************************************************
FORWARD PASSES
*********************************************************************
'''

def _width(x):
    shape = np.shape(value_of(x.value if isinstance(x, jet.Jet2) else x))
    return shape[-1] if len(shape) > 0 else 1

def _apply_layers(layers, h, trace=None):
    last = len(layers) - 1
    for i, (W, b) in enumerate(layers):
        h = h @ W + b
        if i < last:
            h = jet.tanh(h)
        if trace is not None:
            trace.append(h)
    return h

def mlp_forward(net, inp, params=None, trace=None):
    spec = net.spec
    if not isinstance(spec, MlpSpec):
        raise StructuralError('mlp_forward needs an MLP network')
    if _width(inp) != spec.in_dim:
        raise StructuralError('input width %d, network expects %d' % (_width(inp), spec.in_dim))
    layers = unflatten(spec, net.params if params is None else params)
    return _apply_layers(layers, inp, trace)

def evaluate(net, inp, params=None, trace=None):
    """Scalar network output u at every input row"""

    if isinstance(net, ClosedFormNet):
        if _width(inp) != net.in_dim:
            raise StructuralError('input width %d, network expects %d' % (_width(inp), net.in_dim))
        return net.fn(inp)
    return jet.column(mlp_forward(net, inp, params, trace), 0)


def deeponet_branch(net, sensor_values, params=None):
    if isinstance(net, ClosedFormOperator):
        width = net.sensors
    else:
        width = net.spec.branch.in_dim
    if _width(sensor_values) != width:
        raise StructuralError('sensor vector of width %d, branch expects %d' % (_width(sensor_values), width))
    if isinstance(net, ClosedFormOperator):
        return net.branch_fn(sensor_values)
    branch, _, _ = unflatten(net.spec, net.params if params is None else params)
    return _apply_layers(branch, sensor_values)

def deeponet_trunk(net, coord, params=None, trace=None):
    width = net.in_dim if isinstance(net, ClosedFormOperator) else net.spec.trunk.in_dim
    if _width(coord) != width:
        raise StructuralError('coordinate of width %d, trunk expects %d' % (_width(coord), width))
    if isinstance(net, ClosedFormOperator):
        return net.trunk_fn(coord)
    _, trunk, _ = unflatten(net.spec, net.params if params is None else params)
    return _apply_layers(trunk, coord, trace)

def _contract(B, T):
    bd, td = np.ndim(value_of(B)), np.ndim(value_of(T))
    if bd == 2 and td == 2:
        return B @ T.T
    if bd == 1 and td == 2:
        return T @ B
    if bd == 2 and td == 1:
        return B @ T
    return jet.total(B * T)

def deeponet_combine(net, B, T, params=None):
    """Branch outputs (F x n) against trunk outputs (P x n) -> (F x P) plus b0"""

    if isinstance(net, ClosedFormOperator):
        b0 = net.bias
    else:
        b0 = unflatten(net.spec, net.params if params is None else params)[2]
    if isinstance(T, jet.Jet2):
        return jet.Jet2(_contract(B, T.value) + b0, _contract(B, T.d1), _contract(B, T.d2))
    return _contract(B, T) + b0

def deeponet_forward(net, sensor_values, coord, params=None):
    B = deeponet_branch(net, sensor_values, params)
    T = deeponet_trunk(net, coord, params)
    return deeponet_combine(net, B, T, params)
