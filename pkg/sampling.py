'''
*********************************************************************
SAMPLING
*********************************************************************

Samples are rows of a float64 array: collocation points (one column per
space/time coordinate) or input functions (one column per sensor).
'''

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import qmc

import grf
from autodiff import sample_gradient, value_of
from constants import SAMPLE_LR, HALTON_MAX_DIM
from helpers import ConfigError, ContractError, printDebug, printWarning
from optimizers import AdamState, adam_step


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _scale(unit, box):
    lows = np.asarray(box.lows, dtype=np.float64)
    highs = np.asarray(box.highs, dtype=np.float64)
    return lows + (highs - lows) * unit


def generate(kind, n, box, seed, scramble=True, admissible=None):
    """n points in the box drawn by 'random', 'lhs' or 'halton'.

    Points rejected by 'admissible' are replaced by further draws of the
    same generator.
    """

    if n < 1:
        raise ConfigError('generate needs n >= 1, got %d' % n)
    rng = _rng(seed)
    dim = len(box.lows)

    if kind == 'random':
        draw = lambda k: rng.random((k, dim))
    elif kind == 'lhs':
        engine = qmc.LatinHypercube(d=dim, seed=rng)
        draw = engine.random
    elif kind == 'halton':
        if dim > HALTON_MAX_DIM:
            raise ConfigError('Halton sequence supports up to %d dimensions, got %d' % (HALTON_MAX_DIM, dim))
        engine = qmc.Halton(d=dim, scramble=scramble, seed=rng)
        if not scramble:
            # skip the origin so the sequence starts at 1/2
            engine.fast_forward(1)
        draw = engine.random
    else:
        raise ConfigError('unknown sample generator %r' % kind)

    points = _scale(draw(n), box)
    if admissible is None:
        return points
    points = points[admissible(points)]
    while len(points) < n:
        extra = _scale(draw(n - len(points)), box)
        points = np.concatenate([points, extra[admissible(extra)]])
    return points[:n]


'''
*********************************************************************
PROJECTORS
*********************************************************************

'cadence' says whether the projector runs after every ascent step
('step') or once after the last one ('final').
'''

class BoxClamp:
    cadence = 'final'

    def __init__(self, box):
        self.lows = np.asarray(box.lows, dtype=np.float64)
        self.highs = np.asarray(box.highs, dtype=np.float64)

    def __call__(self, samples):
        return np.clip(samples, self.lows, self.highs)


class KernelSmoother:
    cadence = 'step'

    def __init__(self, spec, floor=None):
        self.spec = spec
        self.floor = floor

    def __call__(self, samples):
        out = grf.kernel_smooth(samples, self.spec)
        if self.floor is not None:
            out = np.maximum(out, self.floor)
        return out


class NoProjection:
    cadence = 'final'

    def __call__(self, samples):
        return samples


def make_projector(space, kind='auto'):
    """Projector for samples living in 'space' (a Box, FunctionSpace or CoefficientSpace)"""

    if kind == 'none':
        return NoProjection()
    if kind == 'auto':
        kind = getattr(space, 'projector_kind', 'clamp')
    if kind == 'clamp':
        return BoxClamp(space)
    if kind == 'kernel':
        return KernelSmoother(space.smoothing_spec, space.floor)
    raise ConfigError('unknown projector %r' % kind)


'''
*********************************************************************
SAMPLE SETS & SETTINGS
*********************************************************************
'''

@dataclass
class SampleSet:
    points: np.ndarray
    trainable: np.ndarray     # bool flag per row
    kind: str = 'collocation' # collocation | function

    @classmethod
    def partition(cls, points, n_fixed, rng, kind='collocation'):
        points = np.array(points, dtype=np.float64, copy=True)
        if not 0 <= n_fixed <= len(points):
            raise ConfigError('fixed set of %d samples out of %d' % (n_fixed, len(points)))
        flags = np.zeros(len(points), dtype=bool)
        flags[rng.permutation(len(points))[n_fixed:]] = True
        return cls(points, flags, kind)

    @property
    def trainable_index(self):
        return np.flatnonzero(self.trainable)

    @property
    def fixed(self):
        return self.points[~self.trainable]

    @property
    def trainable_points(self):
        return self.points[self.trainable]

    def __len__(self):
        return len(self.points)


@dataclass
class RamsConfig:
    n_rams: int = 10
    lr: float = SAMPLE_LR
    subset: int = 50
    projector: str = 'auto'   # auto | none

    def __post_init__(self):
        if self.n_rams < 0 or self.subset < 0:
            raise ConfigError('n_rams and subset must be >= 0')
        if self.projector not in ('auto', 'none'):
            raise ConfigError('rams projector must be auto or none, got %r' % self.projector)


@dataclass
class ResampleSchedule:
    """t_r stages of n_train epochs each.

    initial_epochs trains before stage 0. Left unset it is n_train for the
    non-adaptive and data-driven runs and 0 for RAR and R3.
    """

    t_r: int
    n_train: int
    initial_epochs: int = None
    post_adam: int = 0
    post_lbfgs: int = 0

    def __post_init__(self):
        if min(self.t_r, self.n_train, self.warmup(), self.post_adam, self.post_lbfgs) < 0:
            raise ConfigError('schedule entries must be >= 0')

    def warmup(self, adaptive=False):
        if self.initial_epochs is not None:
            return self.initial_epochs
        return 0 if adaptive else self.n_train

    def adam_epochs(self, adaptive=False):
        return self.warmup(adaptive) + self.t_r * self.n_train + self.post_adam


'''
*********************************************************************
RAMS
*********************************************************************
'''

@dataclass
class RamsDiagnostics:
    samples: int = 0
    steps: int = 0
    nonfinite: int = 0
    residual_before: float = float('nan')
    residual_after: float = float('nan')


def _mean_score(residual_sq, samples):
    return float(np.mean(value_of(residual_sq(samples))))


def rams_update(samples, residual_sq, config, projector=None, request=None):
    """Move samples by n_rams Adam steps of gradient ascent on their squared residual.

    Returns (moved samples, RamsDiagnostics). Rows whose gradient ever turns
    non-finite are returned at their starting position.
    """

    moved = np.array(samples, dtype=np.float64, copy=True)
    diag = RamsDiagnostics(samples=len(moved))
    if config.n_rams == 0 or len(moved) == 0:
        return moved, diag

    projector = projector or NoProjection()
    mask = request.mask if request is not None else None
    if request is not None and request.wrt != 'samples':
        raise ContractError('rams_update needs a sample gradient request')

    start = moved.copy()
    state = AdamState.zeros(moved.shape, lr=config.lr)
    bad = np.zeros(len(moved), dtype=bool)
    diag.residual_before = _mean_score(residual_sq, moved)

    for _ in range(config.n_rams):
        g = sample_gradient(residual_sq, moved, mask)
        bad |= ~np.all(np.isfinite(g.reshape(len(moved), -1)), axis=1)
        g[bad] = 0.0
        moved, state = adam_step(state, moved, -g)
        moved[bad] = start[bad]
        if projector.cadence == 'step':
            moved = projector(moved)
        diag.steps += 1

    if projector.cadence == 'final':
        moved = projector(moved)
    moved[bad] = start[bad]

    diag.nonfinite = int(bad.sum())
    if diag.nonfinite:
        printWarning('rams: %d of %d samples left unmoved (non-finite gradient)' % (diag.nonfinite, len(moved)))
    diag.residual_after = _mean_score(residual_sq, moved)
    printDebug(2, 'rams: mean residual^2 %.4e -> %.4e' % (diag.residual_before, diag.residual_after))
    return moved, diag


'''
*********************************************************************
SELECTION RULES
*********************************************************************
'''

def rar_g_select(values, m):
    """Indices of the m largest values, ties to the lower index"""

    values = np.asarray(values, dtype=np.float64)
    if m > len(values):
        raise ConfigError('cannot select %d of %d candidates' % (m, len(values)))
    return np.argsort(-values, kind='stable')[:m]


def rar_d_select(values, m, seed):
    """m indices drawn without replacement with probability proportional to values.

    Returns (indices, uniform_fallback).
    """

    rng = _rng(seed)
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if m > n:
        raise ConfigError('cannot select %d of %d candidates' % (m, n))
    total = values.sum()
    if not np.isfinite(total) or total <= 0 or np.any(values < 0):
        printWarning('rar_d: residuals sum to %g, selecting uniformly' % total)
        return rng.choice(n, size=m, replace=False), True

    positive = np.count_nonzero(values)
    if positive >= m:
        return rng.choice(n, size=m, replace=False, p=values / total), False
    # fewer positive candidates than requested: take them all, fill uniformly
    chosen = np.flatnonzero(values)
    rest = np.flatnonzero(values == 0)
    return np.concatenate([chosen, rng.choice(rest, size=m - positive, replace=False)]), False


def r3_stage(samples, values, domain, seed):
    """(retained samples with value strictly above the mean, fresh uniform replacements)"""

    samples = np.asarray(samples, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if len(samples) == 0:
        raise ConfigError('r3_stage needs a non-empty sample set')
    keep = values > values.mean()
    retained = samples[keep]
    fresh = domain.uniform(len(samples) - len(retained), _rng(seed))
    return retained, fresh


'''
*********************************************************************
SNAPSHOTS
*********************************************************************
'''

def snapshots_frame(snapshots):
    """Long-format frame of (stage, sample, c0..) rows from [(stage, samples), ...]"""

    frames = []
    for stage, samples in snapshots:
        samples = np.atleast_2d(samples)
        frame = pd.DataFrame(samples, columns=['c%d' % i for i in range(samples.shape[1])])
        frame.insert(0, 'sample', np.arange(len(samples)))
        frame.insert(0, 'stage', stage)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=['stage', 'sample'])
    return pd.concat(frames, ignore_index=True)


def export_snapshots_csv(path, snapshots):
    snapshots_frame(snapshots).to_csv(path, index=False, float_format='%.17g')
