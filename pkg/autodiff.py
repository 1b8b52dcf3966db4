'''
*********************************************************************
REVERSE-MODE AUTOMATIC DIFFERENTIATION
*********************************************************************

A Tape is an append-only list of nodes. Every node is one primitive
applied to float64 arrays and keeps the indices of its parents together
with one vector-Jacobian closure per parent. Append order is a
topological order, so the backward pass simply walks the tape from the
seeded output down to index 0.

Var is the handle user code computes with. ndarray defers to Var
(__array_ufunc__ = None), so mixing plain arrays and Vars in an
expression always records on the tape.
'''

from dataclasses import dataclass

import numpy as np

from coord_mask import CoordMask
from helpers import StructuralError, ContractError, EmptyGradientError, NumericError


class Node:
    __slots__ = ('op', 'value', 'parents', 'vjps')

    def __init__(self, op, value, parents, vjps):
        self.op = op
        self.value = value
        self.parents = parents
        self.vjps = vjps


class Tape:

    def __init__(self):
        self.nodes = []
        self.outputs = []
        self.consumed = False

    def __len__(self):
        return len(self.nodes)

    def leaf(self, value):
        return self._append('leaf', np.array(value, dtype=np.float64), (), ())

    def constant(self, value):
        return self._append('const', np.array(value, dtype=np.float64), (), ())

    def mark_output(self, var):
        if var.tape is not self:
            raise ContractError('output recorded on a different tape')
        self.outputs.append(var)

    def value(self, index):
        return self.nodes[index].value

    def leaf_indices(self):
        return [i for i, node in enumerate(self.nodes) if node.op == 'leaf']

    def _append(self, op, value, parents, vjps):
        if self.consumed:
            raise ContractError('tape already consumed by a backward pass')
        self.nodes.append(Node(op, value, parents, vjps))
        return Var(self, len(self.nodes) - 1)


class Var:
    __array_ufunc__ = None
    __slots__ = ('tape', 'index')

    def __init__(self, tape, index):
        self.tape = tape
        self.index = index

    @property
    def value(self):
        return self.tape.nodes[self.index].value

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def size(self):
        return self.value.size

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return 'Var(#%d, %s)' % (self.index, self.value)

    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __matmul__(self, other): return matmul(self, other)
    def __rmatmul__(self, other): return matmul(other, self)
    def __neg__(self): return neg(self)
    def __getitem__(self, idx): return getitem(self, idx)

    def __pow__(self, exponent):
        if isinstance(exponent, Var):
            raise StructuralError('only constant exponents are supported')
        return power(self, exponent)

    def sum(self, axis=None):
        return vsum(self, axis)

    def mean(self, axis=None):
        return vmean(self, axis)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self):
        return transpose(self)


def value_of(x):
    return x.value if isinstance(x, Var) else x


def _unbroadcast(g, shape):
    g = np.asarray(g)
    shape = tuple(shape)
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _record(op, value, operands):
    # operands: (operand, vjp) pairs; only Vars become parents
    tape = None
    parents = []
    vjps = []
    for x, vjp in operands:
        if not isinstance(x, Var):
            continue
        if tape is None:
            tape = x.tape
        elif x.tape is not tape:
            raise ContractError('operands recorded on different tapes')
        parents.append(x.index)
        vjps.append(vjp)
    return tape._append(op, np.asarray(value, dtype=np.float64), tuple(parents), tuple(vjps))


'''
*********************************************************************
PRIMITIVES
*********************************************************************
'''

def add(a, b):
    av, bv = value_of(a), value_of(b)
    sa, sb = np.shape(av), np.shape(bv)
    return _record('add', av + bv, [(a, lambda g: _unbroadcast(g, sa)),
                                    (b, lambda g: _unbroadcast(g, sb))])

def sub(a, b):
    av, bv = value_of(a), value_of(b)
    sa, sb = np.shape(av), np.shape(bv)
    return _record('sub', av - bv, [(a, lambda g: _unbroadcast(g, sa)),
                                    (b, lambda g: _unbroadcast(-g, sb))])

def mul(a, b):
    av, bv = value_of(a), value_of(b)
    sa, sb = np.shape(av), np.shape(bv)
    return _record('mul', av * bv, [(a, lambda g: _unbroadcast(g * bv, sa)),
                                    (b, lambda g: _unbroadcast(g * av, sb))])

def div(a, b):
    av, bv = value_of(a), value_of(b)
    sa, sb = np.shape(av), np.shape(bv)
    return _record('div', av / bv, [(a, lambda g: _unbroadcast(g / bv, sa)),
                                    (b, lambda g: _unbroadcast(-g * av / (bv * bv), sb))])

def neg(a):
    return _record('neg', -value_of(a), [(a, lambda g: -g)])

def power(a, p):
    av = value_of(a)
    return _record('pow', av ** p, [(a, lambda g: g * p * av ** (p - 1))])

def square(a):
    av = value_of(a)
    return _record('square', av * av, [(a, lambda g: 2.0 * g * av)])

def tanh(a):
    y = np.tanh(value_of(a))
    return _record('tanh', y, [(a, lambda g: g * (1.0 - y * y))])

def exp(a):
    y = np.exp(value_of(a))
    return _record('exp', y, [(a, lambda g: g * y)])

def sin(a):
    av = value_of(a)
    return _record('sin', np.sin(av), [(a, lambda g: g * np.cos(av))])

def cos(a):
    av = value_of(a)
    return _record('cos', np.cos(av), [(a, lambda g: -g * np.sin(av))])

def matmul(a, b):
    av, bv = np.asarray(value_of(a)), np.asarray(value_of(b))
    if av.ndim == 0 or bv.ndim == 0 or av.ndim > 2 or bv.ndim > 2:
        raise StructuralError('matmul supports 1-D and 2-D operands, got %s @ %s' % (av.shape, bv.shape))
    if av.shape[-1] != bv.shape[0]:
        raise StructuralError('matmul width mismatch %s @ %s' % (av.shape, bv.shape))

    if av.ndim == 2 and bv.ndim == 2:
        vjp_a = lambda g: g @ bv.T
        vjp_b = lambda g: av.T @ g
    elif av.ndim == 1 and bv.ndim == 2:
        vjp_a = lambda g: bv @ g
        vjp_b = lambda g: np.outer(av, g)
    elif av.ndim == 2:
        vjp_a = lambda g: np.outer(g, bv)
        vjp_b = lambda g: av.T @ g
    else:
        vjp_a = lambda g: g * bv
        vjp_b = lambda g: g * av
    return _record('matmul', av @ bv, [(a, vjp_a), (b, vjp_b)])

def vsum(a, axis=None):
    av = value_of(a)
    shape = np.shape(av)

    def vjp(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, shape).copy()
    return _record('sum', np.sum(av, axis=axis), [(a, vjp)])

def vmean(a, axis=None):
    av = value_of(a)
    n = np.size(av) if axis is None else np.shape(av)[axis]
    return vsum(a, axis) / float(n)

def getitem(a, idx):
    av = value_of(a)

    def vjp(g):
        z = np.zeros_like(av)
        np.add.at(z, idx, g)
        return z
    return _record('getitem', av[idx], [(a, vjp)])

def reshape(a, shape):
    av = value_of(a)
    return _record('reshape', np.reshape(av, shape), [(a, lambda g: np.reshape(g, np.shape(av)))])

def transpose(a):
    return _record('transpose', np.transpose(value_of(a)), [(a, lambda g: np.transpose(g))])


'''
*********************************************************************
SCALAR PROGRAMS
*********************************************************************

A program is a straight-line list of steps (op, args). Inputs occupy
node indices 0..n-1 and step j produces node n+j. 'const' steps carry
their value in args; every other op lists parent node indices.
'''

SCALAR_OPS = {
    'add':    (2, add),
    'sub':    (2, sub),
    'mul':    (2, mul),
    'div':    (2, div),
    'neg':    (1, neg),
    'square': (1, square),
    'tanh':   (1, tanh),
    'exp':    (1, exp),
    'sin':    (1, sin),
    'cos':    (1, cos),
}

def record_scalar_graph(program, inputs):
    tape = Tape()
    handles = [tape.leaf(float(x)) for x in inputs]

    for step, (op, args) in enumerate(program):
        if op == 'const':
            handles.append(tape.constant(float(args)))
            continue
        if op not in SCALAR_OPS:
            raise StructuralError('unknown primitive %r at step %d' % (op, step))
        arity, fnc = SCALAR_OPS[op]
        args = tuple(args)
        if len(args) != arity:
            raise StructuralError('%s expects %d parents at step %d, got %d' % (op, arity, step, len(args)))
        for a in args:
            if not 0 <= a < len(handles):
                raise StructuralError('dangling parent index %d at step %d' % (a, step))

        out = fnc(*[handles[a] for a in args])
        if not np.all(np.isfinite(out.value)):
            raise NumericError('non-finite value at step %d (%s)' % (step, op), node=out.index)
        handles.append(out)

    if len(handles) > 0:
        tape.mark_output(handles[-1])
    return tape


def backward(tape, seed=1.0, output=None):
    """Adjoints of every leaf of the tape, in leaf append order"""

    if tape.consumed:
        raise ContractError('tape already consumed by a backward pass')
    outputs = [output] if output is not None else tape.outputs
    if len(outputs) != 1:
        raise ContractError('exactly one output must be seeded, got %d' % len(outputs))
    out = outputs[0]
    if out.tape is not tape:
        raise ContractError('output recorded on a different tape')
    if np.size(out.value) != 1:
        raise ContractError('backward needs a scalar output, got shape %s' % (out.shape,))

    nodes = tape.nodes
    adj = [None] * len(nodes)
    adj[out.index] = np.full(np.shape(out.value), seed, dtype=np.float64)

    for i in range(out.index, -1, -1):
        g = adj[i]
        if g is None:
            continue
        node = nodes[i]
        for parent, vjp in zip(node.parents, node.vjps):
            contrib = vjp(g)
            adj[parent] = contrib if adj[parent] is None else adj[parent] + contrib

    tape.consumed = True
    return [adj[i] if adj[i] is not None else np.zeros_like(nodes[i].value)
            for i in tape.leaf_indices()]


def grad(output, wrt):
    """Adjoints of the leaves 'wrt' (list of Vars) for a scalar Var 'output'"""

    adjoints = backward(output.tape, output=output)
    position = {index: k for k, index in enumerate(output.tape.leaf_indices())}
    return [adjoints[position[v.index]] for v in wrt]


'''
*********************************************************************
SAMPLE GRADIENTS
*********************************************************************
'''

@dataclass(frozen=True)
class GradientRequest:
    wrt: str                  # 'params' or 'samples'
    mask: CoordMask = None

    @classmethod
    def params(cls):
        return cls('params')

    @classmethod
    def samples(cls, width, selected=None, frozen=()):
        mask = CoordMask(width) if selected is None else CoordMask.from_indices(width, selected)
        clash = [i for i in frozen if mask[i]]
        if clash:
            raise ContractError('coordinate mask includes frozen coordinates %s' % clash)
        return cls('samples', mask)


def sample_gradient(residual_sq, sample, mask=None):
    """Gradient of the summed squared residual with respect to the sample coordinates.

    'residual_sq' receives the samples as a tape Var and returns the squared
    residual per sample. Rows are independent, so summing first gives every
    row its own gradient. Masked-out coordinates come back as 0.
    """

    sample = np.array(sample, dtype=np.float64)
    width = sample.shape[-1] if sample.ndim > 0 else 1
    if mask is None:
        mask = CoordMask(width)
    if len(mask) != width:
        raise StructuralError('mask width %d does not match sample width %d' % (len(mask), width))
    if not mask.any():
        raise EmptyGradientError('coordinate mask selects no coordinates')

    tape = Tape()
    x = tape.leaf(sample)
    r2 = residual_sq(x)
    if not isinstance(r2, Var):
        return np.zeros_like(sample)

    total = r2 if r2.size == 1 else r2.sum()
    g = grad(total.reshape(()), [x])[0]
    return g * mask.as_array()
