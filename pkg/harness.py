'''
*********************************************************************
EXPERIMENT HARNESS
*********************************************************************

An experiment config names a problem, a sampler, RAMS settings, a schedule,
set sizes and seeds. Every (config, seed) pair is a cell; a cell writes

    <root>/<name>/<hash[:12]>/seed_<seed>/
        record.json      RunRecord (written last, marks the cell complete)
        checkpoint.bin   final network
        snapshots.csv    sample snapshots per stage
        state.json       resume state after the last finished stage
        state.npz        arrays of the resume state

A cell whose record.json carries the current config hash is skipped.
'''

import copy
import json
import os
import threading
import traceback
from dataclasses import dataclass, field, fields

import numpy as np
import pandas as pd
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

import evaluation
import grf
import networks
import oracles
from algorithms import Sizes, run_sampler
from checkpoint import save_checkpoint, load_checkpoint
from constants import *
from framework import Register
from helpers import (ConfigError, RamsError, config_hash, mean_std, printDebug,
                     printInfo, printWarning, to_jsonable)
from problems import make_problem, problems
from sampling import RamsConfig, ResampleSchedule, export_snapshots_csv
from tasks import TaskOptions, make_task


'''
*********************************************************************
CONFIGURATION
*********************************************************************
'''

def _build(cls, values, where):
    values = dict(values or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError('%s: unknown fields %s' % (where, ', '.join(unknown)))
    try:
        return cls(**values)
    except TypeError as err:
        raise ConfigError('%s: %s' % (where, err))


@dataclass
class ExperimentConfig:
    name: str
    problem: str
    sampler: str
    problem_options: dict = field(default_factory=dict)
    network: dict = field(default_factory=dict)   # {'hidden_layers', 'width'} or {'branch', 'trunk'}
    rams: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)
    task: dict = field(default_factory=dict)
    evaluation: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: [0])
    output: str = None
    labels: dict = field(default_factory=dict)    # grouping values set by sweeps

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop('sweep', None)
        cfg = _build(cls, d, d.get('name', '<unnamed>'))
        if cfg.problem not in problems:
            raise ConfigError('%s: unknown problem %r' % (cfg.name, cfg.problem))
        if cfg.sampler not in SAMPLERS:
            raise ConfigError('%s: unknown sampler %r' % (cfg.name, cfg.sampler))
        # parse once so that bad values fail before any cell runs
        cfg.rams_config(), cfg.resample_schedule(), cfg.set_sizes(), cfg.task_options()
        return cfg

    def rams_config(self):
        return _build(RamsConfig, self.rams, self.name + '.rams')

    def resample_schedule(self):
        return _build(ResampleSchedule, self.schedule, self.name + '.schedule')

    def set_sizes(self):
        return _build(Sizes, self.sizes, self.name + '.sizes')

    def task_options(self):
        return _build(TaskOptions, self.task, self.name + '.task')

    def canonical(self):
        """Everything that determines the results; seeds and output live outside the hash"""
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        for key in ('seeds', 'output', 'labels'):
            d.pop(key)
        return to_jsonable(d)

    @property
    def hash(self):
        return config_hash(self.canonical())


def expand_sweep(d):
    """Configs for every combination of a 'sweep' entry {'dotted.key': [values], ...}"""

    sweep = d.get('sweep')
    if not sweep:
        return [d]
    out = [copy.deepcopy(d)]
    for key, values in sorted(sweep.items()):
        if not isinstance(values, list) or len(values) == 0:
            raise ConfigError('%s: sweep %s needs a non-empty list' % (d.get('name'), key))
        expanded = []
        for base in out:
            for v in values:
                c = copy.deepcopy(base)
                target = c
                parts = key.split('.')
                for p in parts[:-1]:
                    target = target.setdefault(p, {})
                target[parts[-1]] = v
                c.setdefault('labels', {})[key] = v
                c['name'] = '%s_%s%s' % (c['name'], parts[-1], v)
                expanded.append(c)
        out = expanded
    for c in out:
        c.pop('sweep', None)
    return out


def build_network(problem, desc, seed):
    if problem.is_operator:
        branch = tuple(desc.get('branch', (3, 100)))
        trunk = tuple(desc.get('trunk', (3, 100)))
        spec = networks.DeepOnetSpec.from_shape(problem.function_space.dim, problem.dim, branch, trunk)
    else:
        spec = networks.MlpSpec.from_shape(problem.dim, desc.get('hidden_layers', 3), desc.get('width', 100), 1)
    return networks.init_network(spec, seed)


'''
*********************************************************************
RUN RECORDS
*********************************************************************
'''

@dataclass
class RunRecord:
    name: str
    config_hash: str
    seed: int
    problem: str
    sampler: str
    group: dict = field(default_factory=dict)
    status: str = 'ok'            # ok | invalid | failed
    stages: list = field(default_factory=list)
    final_loss: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    timers: dict = field(default_factory=dict)
    snapshots: str = None
    checkpoint: str = None
    notes: list = field(default_factory=list)
    error: str = None
    version: int = RECORD_VERSION

    def to_dict(self):
        return to_jsonable({f.name: getattr(self, f.name) for f in fields(self)})

    @classmethod
    def from_dict(cls, d):
        return _build(cls, d, 'record')

    def save(self, path):
        _write_atomic(path, json.dumps(self.to_dict(), sort_keys=True, indent=1))

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _write_atomic(path, text):
    tmp = path + '.tmp'
    with open(tmp, 'w') as f:
        f.write(text)
    os.replace(tmp, path)


def output_root(cfg=None, override=None):
    if override:
        return override
    if cfg is not None and cfg.output:
        return cfg.output
    return os.environ.get(RAMS_OUTPUT_ROOT_ENV, RAMS_DEFAULT_OUTPUT_ROOT)

def cell_dir(cfg, seed, root):
    return os.path.join(root, cfg.name, cfg.hash[:12], 'seed_%d' % seed)


'''
*********************************************************************
STAGE STATE
*********************************************************************
'''

def save_state(directory, state):
    arrays = {'params': state['params'], 'adam_m': state['adam']['m'], 'adam_v': state['adam']['v']}
    for key in ('samples', 'trainable'):
        if state[key] is not None:
            arrays[key] = state[key]
    dataset = state['dataset']
    if dataset is not None:
        arrays.update(dataset_functions=dataset.functions, dataset_points=dataset.points,
                      dataset_labels=dataset.labels)
    meta = {'stage': state['stage'], 'epochs': state['epochs'], 'rng': state['rng'],
            'history': state['history'],
            'adam': {'step_count': state['adam']['step_count'], 'aborted': state['adam']['aborted']}}

    tmp = os.path.join(directory, 'state.tmp.npz')
    np.savez(tmp, **arrays)
    os.replace(tmp, os.path.join(directory, 'state.npz'))
    _write_atomic(os.path.join(directory, 'state.json'), json.dumps(to_jsonable(meta)))


def load_state(directory):
    meta_path = os.path.join(directory, 'state.json')
    if not os.path.exists(meta_path):
        return None
    with open(meta_path) as f:
        meta = json.load(f)
    with np.load(os.path.join(directory, 'state.npz')) as data:
        arrays = {k: data[k] for k in data.files}
    dataset = None
    if 'dataset_functions' in arrays:
        dataset = oracles.Dataset(arrays['dataset_functions'], arrays['dataset_points'], arrays['dataset_labels'])
    return {
        'stage': meta['stage'], 'epochs': meta['epochs'], 'rng': meta['rng'], 'history': meta['history'],
        'params': arrays['params'],
        'adam': dict(meta['adam'], m=arrays['adam_m'], v=arrays['adam_v']),
        'samples': arrays.get('samples'), 'trainable': arrays.get('trainable'), 'dataset': dataset,
    }


'''
*********************************************************************
CELLS
*********************************************************************
'''

def _group(cfg, rams, sizes, dataset):
    group = {'problem': cfg.problem, 'sampler': cfg.sampler, 'rams': rams.n_rams > 0,
             'n_rams': rams.n_rams}
    group.update(cfg.labels)
    if 'd' in cfg.problem_options:
        group['d'] = cfg.problem_options['d']
    if dataset is not None:
        group['n_functions'] = len(dataset)
    return group


def _median_roughness(problem, samples):
    space = problem.function_space
    if samples is None or not isinstance(space, grf.FunctionSpace) or len(space.axes) != 1:
        return None
    return float(np.median(grf.roughness(samples, space.axes)))


def run_cell(cfg, seed, root):
    directory = cell_dir(cfg, seed, root)
    os.makedirs(directory, exist_ok=True)
    record_path = os.path.join(directory, 'record.json')
    if os.path.exists(record_path):
        done = RunRecord.load(record_path)
        if done.config_hash == cfg.hash and done.status == 'ok':
            printInfo('SKIP cell %s seed %d (complete)' % (cfg.name, seed))
            return done

    printInfo('RUN cell %s seed %d {' % (cfg.name, seed))
    net_seed, task_seed, run_seed = np.random.SeedSequence(seed).spawn(3)
    problem = make_problem(cfg.problem, **cfg.problem_options)
    net = build_network(problem, cfg.network, net_seed)
    task = make_task(problem, net, np.random.default_rng(task_seed), cfg.task_options())
    rng = np.random.default_rng(run_seed)
    rams, schedule, sizes = cfg.rams_config(), cfg.resample_schedule(), cfg.set_sizes()

    labeler = None
    if problem.kind == 'data_operator':
        labeler = oracles.make_labeler(problem, task.points, **cfg.solver)

    result = run_sampler(cfg.sampler, task, schedule, rams, sizes, rng, labeler,
                         resume=load_state(directory),
                         on_stage_end=lambda state: save_state(directory, state))
    history = result.history

    record = RunRecord(cfg.name, cfg.hash, seed, cfg.problem, cfg.sampler,
                       group=_group(cfg, rams, sizes, result.dataset),
                       stages=[to_jsonable(vars(s)) for s in history.stages],
                       final_loss=history.final_loss, notes=list(history.notes))
    if history.invalid:
        record.status = 'invalid'
    else:
        with history.timer('evaluate'):
            report = evaluation.evaluate_run(problem, net, cfg.evaluation)
        record.metrics = report.to_dict()
        roughness = _median_roughness(problem, result.samples if task.sample_kind == 'function' else None)
        if roughness is not None:
            record.metrics['median_roughness'] = roughness

    record.timers = dict(history.timers)
    record.checkpoint = os.path.join(directory, 'checkpoint.bin')
    save_checkpoint(record.checkpoint, net, rng.bit_generator.state)
    if history.snapshots:
        record.snapshots = os.path.join(directory, 'snapshots.csv')
        export_snapshots_csv(record.snapshots, history.snapshots)
    record.save(record_path)
    printInfo('}')
    return record


def verify_checkpoint(record, cfg, tol=1e-12):
    """Reload a record's checkpoint and recompute its test metric"""

    net, _ = load_checkpoint(record.checkpoint)
    problem = make_problem(cfg.problem, **cfg.problem_options)
    metric = evaluation.evaluate_run(problem, net, cfg.evaluation).relative_l2
    return abs(metric - record.metrics['relative_l2']) <= tol, metric


class CellThread(threading.Thread):

    def __init__(self, fnc, *args, **kwargs):
        threading.Thread.__init__(self, daemon=False)
        self.fnc = fnc
        self.cfg = kwargs['cfg']
        self.seed = kwargs['seed']
        self.root = kwargs['root']
        self.gate = kwargs['gate']
        self.record = None

    def run(self):
        with self.gate:
            try:
                self.record = self.fnc(self.cfg, self.seed, self.root)
            except Exception as err:
                # a failed cell never stops the matrix
                traceback.print_exc()
                self.record = RunRecord(self.cfg.name, self.cfg.hash, self.seed, self.cfg.problem,
                                        self.cfg.sampler, status='failed',
                                        error='%s: %s' % (type(err).__name__, err))
                try:
                    directory = cell_dir(self.cfg, self.seed, self.root)
                    os.makedirs(directory, exist_ok=True)
                    self.record.save(os.path.join(directory, 'record.json'))
                except OSError:
                    pass


def run_matrix(configs, parallelism=1, root=None, seeds=None):
    """Run every (config, seed) cell, at most 'parallelism' at a time"""

    if parallelism < 1:
        raise ConfigError('parallelism must be >= 1')
    gate = threading.BoundedSemaphore(parallelism)
    threads = []
    for cfg in configs:
        for seed in (seeds if seeds is not None else cfg.seeds):
            threads.append(CellThread(run_cell, cfg=cfg, seed=seed, root=output_root(cfg, root), gate=gate))

    for t in threads:
        t.start()
    for t in threads:
        t.join()

    records = [t.record for t in threads]
    summarize(records)
    return records


def summarize(records):
    groups = {}
    for r in records:
        if r.status == 'ok':
            groups.setdefault((r.name, r.config_hash), []).append(r.metrics['relative_l2'])
    for (name, _), values in sorted(groups.items()):
        mean, std = mean_std(values)
        printInfo('%-40s relative L2 %.4e +- %.4e (n=%d)' % (name, mean, std, len(values)))
    failed = [r for r in records if r.status != 'ok']
    if failed:
        printWarning('%d of %d cells failed or are invalid' % (len(failed), len(records)))
    return groups


def load_records(directory):
    records = []
    for dirpath, _, filenames in sorted(os.walk(directory)):
        if 'record.json' in filenames:
            records.append(RunRecord.load(os.path.join(dirpath, 'record.json')))
    return records


'''
*********************************************************************
REPORTS
*********************************************************************

Every report kind maps a record to rows (series, x, value). Groups are
(series, x); the expected groups are all series crossed with all x.
'''

reports = Register('report')

def _series(r):
    return r.sampler + ('+RAMS' if r.group.get('rams') else '')

@reports('bar', xlabel='sampler', ylabel='relative L2 error')
def _bar_rows(r):
    yield r.problem, _series(r), r.metrics['relative_l2']

@reports('dim', xlabel='dimension d', ylabel='two-set RMSE')
def _dim_rows(r):
    yield _series(r), r.group.get('d'), r.metrics.get('rmse_two_set', r.metrics['relative_l2'])

@reports('length', xlabel='l_test', ylabel='relative L2 error')
def _length_rows(r):
    for l, v in r.metrics.get('by_length', {}).items():
        yield _series(r), float(l), v

@reports('iter', xlabel='n_RAMS', ylabel='relative L2 error')
def _iter_rows(r):
    yield r.sampler, r.group.get('n_rams'), r.metrics['relative_l2']

@reports('sample', xlabel='labelled functions', ylabel='relative L2 error')
def _sample_rows(r):
    yield _series(r), r.group.get('n_functions'), r.metrics['relative_l2']


def report_frame(records, kind):
    rows_of = reports.get(kind)['exec']
    rows = []
    for r in records:
        if r.status != 'ok':
            continue
        for series, x, value in rows_of(r):
            rows.append((series, x, float(value)))

    series_all = sorted({s for s, _, _ in rows}, key=str)
    xs_all = sorted({x for _, x, _ in rows}, key=lambda v: (isinstance(v, str), v))
    out = []
    for s in series_all:
        for x in xs_all:
            values = [v for s2, x2, v in rows if s2 == s and x2 == x]
            mean, std = mean_std(values)
            out.append({'series': s, 'group': x, 'mean': mean, 'std': std, 'n': len(values),
                        'missing': len(values) == 0})
    frame = pd.DataFrame(out, columns=['series', 'group', 'mean', 'std', 'n', 'missing'])
    frame['missing'] = frame['missing'].astype(bool)
    missing = frame[frame['missing']]
    for _, row in missing.iterrows():
        printWarning('report %s: no records for %s / %s' % (kind, row['series'], row['group']))
    return frame


def _plot(frame, kind, path):
    meta = reports.get(kind)
    plt.rcParams.update({'svg.hashsalt': 'rams', 'font.size': 10, 'figure.figsize': (6.0, 4.0)})
    fig, ax = plt.subplots()
    present = frame[~frame['missing']]
    if kind == 'bar':
        labels = list(dict.fromkeys(present['group']))
        series = list(dict.fromkeys(present['series']))
        width = 0.8 / max(len(series), 1)
        for i, s in enumerate(series):
            part = present[present['series'] == s].set_index('group').reindex(labels)
            pos = np.arange(len(labels)) + i * width
            ax.bar(pos, part['mean'], width, yerr=part['std'], capsize=3, label=str(s))
        ax.set_xticks(np.arange(len(labels)) + 0.4 - width / 2)
        ax.set_xticklabels(labels, rotation=30, ha='right')
    else:
        for s, part in present.groupby('series', sort=True):
            ax.errorbar(part['group'], part['mean'], yerr=part['std'], marker='o', capsize=3, label=str(s))
    ax.set_yscale('log')
    ax.set_xlabel(meta['xlabel'])
    ax.set_ylabel(meta['ylabel'])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


def emit_report(records, kind, out_dir):
    """Writes <kind>.csv and <kind>.svg; returns the aggregated frame"""

    reports.get(kind)
    os.makedirs(out_dir, exist_ok=True)
    frame = report_frame(records, kind)
    frame.to_csv(os.path.join(out_dir, '%s.csv' % kind), index=False, float_format='%.10g')
    if len(frame[~frame['missing']]):
        _plot(frame, kind, os.path.join(out_dir, '%s.svg' % kind))
    else:
        printWarning('report %s: nothing to plot' % kind)
    return frame


'''
*********************************************************************
RAMS OVERHEAD
*********************************************************************
'''

TIMER_RESOLUTION = 1e-3

def measure_overhead(cfg, seed=0, root=None):
    """(time_with - time_without) / time_without over the training and RAMS phases"""

    base = ExperimentConfig.from_dict(dict(cfg.__dict__, name=cfg.name + '_no_rams',
                                           rams=dict(cfg.rams, n_rams=0)))
    root = output_root(cfg, root)
    timed = []
    for c in (base, cfg):
        record = run_cell(c, seed, root)
        if record.status != 'ok':
            raise RamsError('%s: overhead run %s' % (c.name, record.status))
        timed.append(sum(record.timers.get(p, 0.0) for p in ('train', 'rams', 'select', 'lbfgs')))
    without, with_ = timed
    if min(without, with_) < TIMER_RESOLUTION:
        printWarning('overhead: run times below timer resolution of %g s' % TIMER_RESOLUTION)
    if without == 0:
        raise RamsError('overhead: baseline run took no measurable time')
    overhead = (with_ - without) / without
    printDebug(1, 'overhead of %s: %.2f%%' % (cfg.name, 100.0 * overhead))
    return overhead
