'''
*********************************************************************
SECOND-ORDER FORWARD MODE
*********************************************************************

Jet2 carries (value, d1, d2) along one input direction. Each channel may
be a float, an ndarray or an autodiff Var; recording the jet forward pass
on a tape gives reverse-over-forward gradients of residuals.

Elementary functions below dispatch on their argument, so network and
residual code is written once for plain arrays, Vars and Jet2s.
'''

import numpy as np

import autodiff
from autodiff import Var
from helpers import StructuralError, NumericError


def _zero(x):
    return isinstance(x, (int, float)) and x == 0


class Jet2:
    __array_ufunc__ = None
    __slots__ = ('value', 'd1', 'd2')

    def __init__(self, value, d1=0.0, d2=0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @staticmethod
    def lift(x):
        return x if isinstance(x, Jet2) else Jet2(x, 0.0, 0.0)

    @classmethod
    def seeded(cls, points, k):
        """Jet of the input points with direction k seeded (d1 = e_k, d2 = 0)"""

        shape = np.shape(autodiff.value_of(points))
        width = shape[-1] if len(shape) > 0 else 1
        if not 0 <= k < width:
            raise StructuralError('direction %d outside input width %d' % (k, width))
        d1 = np.zeros(shape, dtype=np.float64)
        d1[..., k] = 1.0
        return cls(points, d1, np.zeros(shape, dtype=np.float64))

    def __repr__(self):
        return 'Jet2(%s, %s, %s)' % (self.value, self.d1, self.d2)

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)
        return Jet2(self.value + other, self.d1, self.d2)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value - other.value, self.d1 - other.d1, self.d2 - other.d2)
        return Jet2(self.value - other, self.d1, self.d2)

    def __rsub__(self, other):
        return Jet2(other - self.value, -self.d1, -self.d2)

    def __neg__(self):
        return Jet2(-self.value, -self.d1, -self.d2)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value * other.value,
                        self.d1 * other.value + self.value * other.d1,
                        self.d2 * other.value + 2.0 * self.d1 * other.d1 + self.value * other.d2)
        return Jet2(self.value * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * reciprocal(other)
        return Jet2(self.value / other, self.d1 / other, self.d2 / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise StructuralError('Jet2 supports non-negative integer powers only')
        out = Jet2(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __matmul__(self, w):
        # jets multiplied by a matrix that does not depend on the seeded input
        return Jet2(self.value @ w, _mm(self.d1, w), _mm(self.d2, w))

    def __rmatmul__(self, w):
        return Jet2(w @ self.value, _rmm(w, self.d1), _rmm(w, self.d2))

    @property
    def T(self):
        return Jet2(_t(self.value), _t(self.d1), _t(self.d2))

    def column(self, k):
        return Jet2(column(self.value, k), column(self.d1, k), column(self.d2, k))

    def reshape(self, *shape):
        return Jet2(_reshape(self.value, shape), _reshape(self.d1, shape), _reshape(self.d2, shape))


def _mm(d, w):
    return 0.0 if _zero(d) else d @ w

def _rmm(w, d):
    return 0.0 if _zero(d) else w @ d

def _t(x):
    return x if _zero(x) else x.T

def _reshape(x, shape):
    return x if _zero(x) else x.reshape(*shape)


def column(x, k):
    """Column k of a 2-D value, or element k of a 1-D value"""

    if isinstance(x, Jet2):
        return x.column(k)
    if _zero(x):
        return x
    if np.ndim(autodiff.value_of(x)) == 1:
        return x[k]
    return x[:, k]


'''
*********************************************************************
ELEMENTARY FUNCTIONS
*********************************************************************
'''

def tanh(x):
    if isinstance(x, Jet2):
        t = tanh(x.value)
        s = 1.0 - t * t
        return Jet2(t, s * x.d1, s * x.d2 - 2.0 * t * s * x.d1 * x.d1)
    if isinstance(x, Var):
        return autodiff.tanh(x)
    return np.tanh(x)

def exp(x):
    if isinstance(x, Jet2):
        e = exp(x.value)
        return Jet2(e, e * x.d1, e * (x.d2 + x.d1 * x.d1))
    if isinstance(x, Var):
        return autodiff.exp(x)
    return np.exp(x)

def sin(x):
    if isinstance(x, Jet2):
        s, c = sin(x.value), cos(x.value)
        return Jet2(s, c * x.d1, c * x.d2 - s * x.d1 * x.d1)
    if isinstance(x, Var):
        return autodiff.sin(x)
    return np.sin(x)

def cos(x):
    if isinstance(x, Jet2):
        s, c = sin(x.value), cos(x.value)
        return Jet2(c, -s * x.d1, -s * x.d2 - c * x.d1 * x.d1)
    if isinstance(x, Var):
        return autodiff.cos(x)
    return np.cos(x)

def square(x):
    return x * x

def reciprocal(x):
    if isinstance(x, Jet2):
        r = reciprocal(x.value)
        return Jet2(r, -r * r * x.d1, -r * r * x.d2 + 2.0 * r * r * r * x.d1 * x.d1)
    return 1.0 / x

def total(x, axis=None):
    if isinstance(x, Jet2):
        return Jet2(total(x.value, axis), 0.0 if _zero(x.d1) else total(x.d1, axis),
                    0.0 if _zero(x.d2) else total(x.d2, axis))
    if isinstance(x, Var):
        return x.sum(axis)
    return np.sum(x, axis=axis)


'''
*********************************************************************
INPUT JETS
*********************************************************************
'''

def input_jet(network, point, direction_index):
    """(u, du/dx_k, d2u/dx_k2) of a scalar-output network at the point(s)"""

    import networks

    pts = np.array(point, dtype=np.float64)
    single = pts.ndim <= 1
    pts = np.atleast_2d(pts.reshape(1, -1) if single else pts)

    trace = []
    out = networks.evaluate(network, Jet2.seeded(pts, direction_index), trace=trace)

    for layer, h in enumerate(trace):
        channels = [autodiff.value_of(c) for c in (h.value, h.d1, h.d2)]
        if not all(np.all(np.isfinite(c)) for c in channels):
            raise NumericError('non-finite jet at layer %d' % layer, node=layer)
    channels = [np.asarray(autodiff.value_of(c)) for c in (out.value, out.d1, out.d2)]
    if not all(np.all(np.isfinite(c)) for c in channels):
        raise NumericError('non-finite jet at network output', node=len(trace))

    if single:
        return Jet2(*[float(c.reshape(-1)[0]) for c in channels])
    return Jet2(*channels)
