'''
*********************************************************************
SAMPLING ALGORITHMS WITH RAMS
*********************************************************************

Every algorithm runs on a task (see tasks.py) and follows the same outer
loop: initial training, then t_r resampling stages of n_train epochs
followed by a sample update, then the post-loop Adam and L-BFGS epochs.

    run_nonadaptive_with_rams   fixed + trainable split, RAMS on a random subset
    run_rar_with_rams           greedy (G) or residual-proportional (D) refinement
    run_r3_with_rams            retain / resample / release, constant population
    run_datadriven_rar_rams     residual-scored labelled functions
    run_datadriven_random       random labelled functions, same epoch budget

After every stage the algorithm calls on_stage_end(state); passing that
state back as 'resume' continues at the following stage.
'''

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

import oracles
import sampling
from constants import PHASES
from helpers import ConfigError, SolverError, printDebug, printInfo, printWarning, to_jsonable
from optimizers import AdamState
from sampling import SampleSet, rams_update, rar_g_select, rar_d_select, r3_stage


'''
*********************************************************************
RUN HISTORY
*********************************************************************
'''

@dataclass
class StageRecord:
    stage: int
    losses: dict
    samples: int
    moved: int = 0
    nonfinite: int = 0
    residual_before: float = float('nan')
    residual_after: float = float('nan')
    selected_mean: float = float('nan')     # mean residual^2 of the selected candidates
    pool_mean: float = float('nan')         # mean residual^2 of the candidate pool
    retained: int = 0


@dataclass
class History:
    stages: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)     # [(stage, samples), ...]
    timers: dict = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    final_loss: dict = field(default_factory=dict)
    invalid: bool = False
    notes: list = field(default_factory=list)

    @contextmanager
    def timer(self, phase):
        if phase not in self.timers:
            raise ConfigError('unknown phase %r' % phase)
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timers[phase] += time.perf_counter() - start

    def snapshot(self, stage, samples):
        self.snapshots.append((stage, np.array(samples, dtype=np.float64, copy=True)))

    def to_dict(self, timers=True):
        out = {'stages': [to_jsonable(vars(s)) for s in self.stages],
               'snapshots': [[stage, s.tolist()] for stage, s in self.snapshots],
               'final_loss': to_jsonable(self.final_loss),
               'invalid': self.invalid, 'notes': list(self.notes)}
        if timers:
            out['timers'] = dict(self.timers)
        return out

    @classmethod
    def from_dict(cls, d):
        h = cls([StageRecord(**s) for s in d['stages']],
                [(stage, np.asarray(s, dtype=np.float64)) for stage, s in d['snapshots']],
                final_loss=dict(d.get('final_loss', {})), invalid=d.get('invalid', False),
                notes=list(d.get('notes', [])))
        h.timers.update(d.get('timers', {}))
        return h


@dataclass
class Sizes:
    n_total: int = 1000       # |T|
    n_fixed: int = 900        # |T1|
    n_ini: int = 500          # initial samples of RAR
    n_candidates: int = 1000  # M
    m: int = 10               # samples added per stage
    n_sam: int = 100          # labelled functions of the random data-driven baseline

    def __post_init__(self):
        if min(vars(self).values()) < 0:
            raise ConfigError('sizes must be >= 0')
        if self.n_fixed > self.n_total:
            raise ConfigError('|T1| = %d exceeds |T| = %d' % (self.n_fixed, self.n_total))
        if self.m > self.n_candidates:
            raise ConfigError('m = %d exceeds M = %d' % (self.m, self.n_candidates))


@dataclass
class RunResult:
    net: object
    history: History
    samples: np.ndarray = None
    dataset: object = None


def _check_subset(rams, trainable):
    if rams.subset > trainable:
        raise ConfigError('|T^| = %d exceeds |T2| = %d' % (rams.subset, trainable))


'''
*********************************************************************
RESUME STATE
*********************************************************************
'''

def _state(stage, task, rng, history, samples=None, trainable=None, dataset=None):
    return {
        'stage': stage,
        'params': task.net.params.copy(),
        'adam': {'m': task.adam.m.copy(), 'v': task.adam.v.copy(),
                 'step_count': task.adam.step_count, 'aborted': task.adam.aborted},
        'epochs': task.epochs,
        'samples': None if samples is None else np.array(samples, copy=True),
        'trainable': None if trainable is None else np.array(trainable, copy=True),
        'dataset': dataset,
        'rng': rng.bit_generator.state,
        'history': history.to_dict(),
    }

def _restore(state, task, rng):
    task.net.params = np.array(state['params'], dtype=np.float64)
    adam = state['adam']
    task.adam = AdamState(np.array(adam['m']), np.array(adam['v']), adam['step_count'],
                          lr=task.adam.lr, aborted=adam['aborted'])
    task.epochs = state['epochs']
    rng.bit_generator.state = state['rng']
    printInfo('RESUME %s after stage %d' % (task.problem.name, state['stage']))
    return History.from_dict(state['history'])

def _stage_done(on_stage_end, *args, **kwargs):
    if on_stage_end is not None:
        on_stage_end(_state(*args, **kwargs))


def _finish(task, schedule, samples, history):
    with history.timer('train'):
        task.train(samples, schedule.post_adam)
    with history.timer('lbfgs'):
        state = task.lbfgs(samples, schedule.post_lbfgs)
    if state is not None and state.line_search_failed:
        history.notes.append('lbfgs stopped early after %d iterations' % state.iterations)
    history.final_loss = dict(task.last_loss)


def _move(task, samples, rams, history):
    with history.timer('rams'):
        # collocation samples are always clamped back into the box
        if rams.projector == 'none' and task.sample_kind == 'function':
            projector = sampling.NoProjection()
        else:
            projector = task.projector
        return rams_update(samples, task.residual_sq, rams, projector, task.request)


def _log_stage(task, record):
    printDebug(1, '%s stage %d: loss %.4e, %d samples, %d moved, %d non-finite'
               % (task.problem.name, record.stage, record.losses.get('total', float('nan')),
                  record.samples, record.moved, record.nonfinite))


'''
*********************************************************************
NON-ADAPTIVE SAMPLING
*********************************************************************
'''

def run_nonadaptive_with_rams(task, schedule, rams, sizes, rng, kind='random', resume=None, on_stage_end=None):
    """Random / LHS / Halton samples; RAMS moves a random subset of the trainable part each stage"""

    if resume is None:
        history = History()
        points = task.generate(kind, sizes.n_total, rng)
        with history.timer('train'):
            task.train(points, schedule.warmup())
        samples = SampleSet.partition(points, sizes.n_fixed, rng, task.sample_kind)
        history.snapshot(-1, samples.points)
        first = 0
    else:
        history = _restore(resume, task, rng)
        samples = SampleSet(np.array(resume['samples']), np.array(resume['trainable']), task.sample_kind)
        first = resume['stage'] + 1

    _check_subset(rams, int(samples.trainable.sum()))
    for stage in range(first, schedule.t_r):
        with history.timer('train'):
            losses = task.train(samples.points, schedule.n_train)

        with history.timer('select'):
            chosen = rng.choice(samples.trainable_index, size=rams.subset, replace=False)
        moved, diag = _move(task, samples.points[chosen], rams, history)
        samples.points[chosen] = moved

        record = StageRecord(stage, dict(losses), len(samples), diag.samples, diag.nonfinite,
                             diag.residual_before, diag.residual_after)
        history.stages.append(record)
        history.snapshot(stage, samples.points)
        _log_stage(task, record)
        _stage_done(on_stage_end, stage, task, rng, history, samples.points, samples.trainable)

    _finish(task, schedule, samples.points, history)
    return RunResult(task.net, history, samples.points)


'''
*********************************************************************
RESIDUAL-BASED ADAPTIVE REFINEMENT
*********************************************************************
'''

def run_rar_with_rams(task, schedule, rams, sizes, rng, variant='G', kind='random', resume=None,
                      on_stage_end=None):
    """n_ini samples grown by m residual-selected candidates (out of M) per stage"""

    if variant not in ('G', 'D'):
        raise ConfigError('RAR variant must be G or D, got %r' % variant)

    if resume is None:
        history = History()
        samples = task.generate(kind, sizes.n_ini, rng)
        with history.timer('train'):
            task.train(samples, schedule.warmup(adaptive=True))
        history.snapshot(-1, samples)
        first = 0
    else:
        history = _restore(resume, task, rng)
        samples = np.array(resume['samples'])
        first = resume['stage'] + 1

    for stage in range(first, schedule.t_r):
        with history.timer('train'):
            losses = task.train(samples, schedule.n_train)

        record = StageRecord(stage, dict(losses), len(samples))
        if sizes.m > 0:
            with history.timer('select'):
                candidates = task.generate('random', sizes.n_candidates, rng)
                values = task.score(candidates)
                if variant == 'G':
                    chosen = rar_g_select(values, sizes.m)
                else:
                    chosen, fallback = rar_d_select(values, sizes.m, rng)
                    if fallback:
                        history.notes.append('stage %d: uniform fallback selection' % stage)
            record.pool_mean = float(np.mean(values))
            record.selected_mean = float(np.mean(values[chosen]))
            moved, diag = _move(task, candidates[chosen], rams, history)
            samples = np.concatenate([samples, moved])
            record.moved, record.nonfinite = diag.samples, diag.nonfinite
            record.residual_before, record.residual_after = diag.residual_before, diag.residual_after

        record.samples = len(samples)
        history.stages.append(record)
        history.snapshot(stage, samples)
        _log_stage(task, record)
        _stage_done(on_stage_end, stage, task, rng, history, samples)

    _finish(task, schedule, samples, history)
    return RunResult(task.net, history, samples)


'''
*********************************************************************
RETAIN - RESAMPLE - RELEASE
*********************************************************************
'''

def run_r3_with_rams(task, schedule, rams, sizes, rng, kind='random', resume=None, on_stage_end=None):
    """Keep samples above the mean squared residual, move them, refill uniformly"""

    if resume is None:
        history = History()
        samples = task.generate(kind, sizes.n_total, rng)
        with history.timer('train'):
            task.train(samples, schedule.warmup(adaptive=True))
        history.snapshot(-1, samples)
        first = 0
    else:
        history = _restore(resume, task, rng)
        samples = np.array(resume['samples'])
        first = resume['stage'] + 1

    for stage in range(first, schedule.t_r):
        with history.timer('train'):
            losses = task.train(samples, schedule.n_train)

        with history.timer('select'):
            values = task.score(samples)
            retained, fresh = r3_stage(samples, values, task.domain, rng)
        moved, diag = _move(task, retained, rams, history)
        samples = np.concatenate([moved, fresh])

        record = StageRecord(stage, dict(losses), len(samples), diag.samples, diag.nonfinite,
                             diag.residual_before, diag.residual_after, retained=len(retained))
        history.stages.append(record)
        history.snapshot(stage, samples)
        _log_stage(task, record)
        _stage_done(on_stage_end, stage, task, rng, history, samples)

    _finish(task, schedule, samples, history)
    return RunResult(task.net, history, samples)


'''
*********************************************************************
DATA-DRIVEN OPERATOR LEARNING
*********************************************************************
'''

def _label(task, labeler, functions, history):
    with history.timer('label'):
        labels = labeler(functions)
    return labels


def run_datadriven_rar_rams(task, labeler, schedule, rams, sizes, rng, resume=None, on_stage_end=None):
    """Start from n_ini labelled functions, add the m best-scored (and moved) candidates per stage.

    A solver failure stops the run; the returned history is marked invalid.
    """

    if resume is None:
        history = History()
        try:
            functions = task.generate('random', sizes.n_ini, rng)
            dataset = oracles.Dataset(functions, task.points, _label(task, labeler, functions, history))
        except SolverError as err:
            return _invalid(task, history, err, -1)
        with history.timer('train'):
            task.train(dataset, schedule.warmup())
        first = 0
    else:
        history = _restore(resume, task, rng)
        dataset = resume['dataset']
        first = resume['stage'] + 1

    for stage in range(first, schedule.t_r):
        record = StageRecord(stage, {}, len(dataset))
        if sizes.m > 0:
            with history.timer('select'):
                candidates = task.generate('random', sizes.n_candidates, rng)
                values = task.score(candidates)
                chosen = rar_g_select(values, sizes.m)
            record.pool_mean = float(np.mean(values))
            record.selected_mean = float(np.mean(values[chosen]))
            moved, diag = _move(task, candidates[chosen], rams, history)
            try:
                labels = _label(task, labeler, moved, history)
            except SolverError as err:
                return _invalid(task, history, err, stage, dataset)
            dataset = dataset.extend(moved, labels)
            record.moved, record.nonfinite = diag.samples, diag.nonfinite
            record.residual_before, record.residual_after = diag.residual_before, diag.residual_after

        with history.timer('train'):
            record.losses = dict(task.train(dataset, schedule.n_train))
        record.samples = len(dataset)
        history.stages.append(record)
        _log_stage(task, record)
        _stage_done(on_stage_end, stage, task, rng, history, dataset=dataset)

    _finish(task, schedule, dataset, history)
    return RunResult(task.net, history, dataset.functions, dataset)


def run_datadriven_random(task, labeler, schedule, sizes, rng):
    """n_sam random labelled functions trained for the same number of epochs as the RAR arm"""

    history = History()
    try:
        functions = task.generate('random', sizes.n_sam, rng)
        dataset = oracles.Dataset(functions, task.points, _label(task, labeler, functions, history))
    except SolverError as err:
        return _invalid(task, history, err, -1)
    with history.timer('train'):
        task.train(dataset, schedule.warmup() + schedule.t_r * schedule.n_train)
    _finish(task, schedule, dataset, history)
    return RunResult(task.net, history, dataset.functions, dataset)


def _invalid(task, history, err, stage, dataset=None):
    printWarning('%s: solver failed at stage %d: %s' % (task.problem.name, stage, err))
    history.invalid = True
    history.notes.append('solver failure at stage %d: %s %s' % (stage, err, to_jsonable(err.diagnostics)))
    return RunResult(task.net, history, None if dataset is None else dataset.functions, dataset)


'''
*********************************************************************
SAMPLER TABLE
*********************************************************************
'''

def run_sampler(sampler, task, schedule, rams, sizes, rng, labeler=None, resume=None, on_stage_end=None):
    if sampler in ('random', 'lhs', 'halton'):
        return run_nonadaptive_with_rams(task, schedule, rams, sizes, rng, sampler, resume, on_stage_end)
    if sampler in ('rar_g', 'rar_d'):
        return run_rar_with_rams(task, schedule, rams, sizes, rng, sampler[-1].upper(),
                                 resume=resume, on_stage_end=on_stage_end)
    if sampler == 'r3':
        return run_r3_with_rams(task, schedule, rams, sizes, rng, resume=resume, on_stage_end=on_stage_end)
    if sampler == 'datadriven_rar_g':
        return run_datadriven_rar_rams(task, labeler, schedule, rams, sizes, rng, resume, on_stage_end)
    if sampler == 'datadriven_random':
        return run_datadriven_random(task, labeler, schedule, sizes, rng)
    raise ConfigError('unknown sampler %r' % sampler)
