#!/usr/bin/python3

import os
import sys
import unittest

import numpy as np

import argparser
import config_file_reader
import harness
import oracles
from constants import EXIT_OK, EXIT_CELL_FAILED, EXIT_CONFIG_ERROR
from helpers import ConfigError, RamsError, print_err, printInfo, printWarning
from problems import make_problem


def do_run(parser):
    conf_reader = config_file_reader.ConfigFileReader(parser.config_file)
    conf_reader.read_and_check_args()

    if conf_reader.rejected:
        printWarning('rejected experiments: %s' % ', '.join(map(str, conf_reader.rejected)))
        return EXIT_CONFIG_ERROR
    if len(conf_reader.experiments) == 0:
        printInfo('nothing to run')
        return EXIT_OK

    seeds = None if parser.seed is None else [parser.seed]
    records = harness.run_matrix(conf_reader.experiments, parser.parallelism, parser.output, seeds)
    return EXIT_OK if all(r.status == 'ok' for r in records) else EXIT_CELL_FAILED


def do_report(parser):
    records = harness.load_records(parser.records)
    harness.emit_report(records, parser.kind, parser.output)
    return EXIT_OK


def do_oracle(parser):
    problem = make_problem(parser.problem)
    rng = np.random.default_rng(parser.seed)
    points = problem.domain.uniform(parser.points, rng)

    if problem.is_operator:
        functions = problem.function_space.uniform(parser.functions, rng)
        labels = oracles.make_labeler(problem, points)(functions)
    else:
        functions = np.zeros((1, 0))
        if problem.exact_fn is not None:
            labels = oracles.exact(problem, points)[None, :]
        else:
            labels = oracles.solve_reference(problem).at(points)[None, :]

    dataset = oracles.Dataset(functions, points, labels, parser.seed,
                              {'problem': problem.describe(), 'reference': problem.reference})
    path = parser.output or '%s_seed%d.npz' % (problem.name, parser.seed)
    oracles.save_dataset(path, dataset)
    printInfo('%s: %d functions x %d points written to %s' % (problem.name, len(functions), len(points), path))
    return EXIT_OK


def do_verify(parser):
    root = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, root)
    config_dir = os.path.join(root, 'config')
    suite = unittest.TestLoader().discover(config_dir, pattern=parser.pattern, top_level_dir=config_dir)
    result = unittest.TextTestRunner(verbosity=1).run(suite)
    return EXIT_OK if result.wasSuccessful() else EXIT_CELL_FAILED


COMMANDS = {
    'run': do_run,
    'report': do_report,
    'oracle': do_oracle,
    'verify': do_verify,
}


def main(argv=None):

    parser = argparser.Parser(argv)
    try:
        return COMMANDS[parser.command](parser)
    except ConfigError as err:
        print_err(err)
        return EXIT_CONFIG_ERROR
    except RamsError as err:
        print_err(err)
        return EXIT_CELL_FAILED


if __name__ == "__main__":
    sys.exit(main())
