import argparse

from constants import RAMS_OUTPUT_ROOT_ENV
from harness import reports
from problems import problems


class Parser:
    _instance = None

    def __init__(self, argv=None):
        if self._initialized is True:
            return

        self._parser = argparse.ArgumentParser(prog='rams.py',
                                               description='RAMS sampling experiments')

        #here command line arguments should be specified
        self._add_commandline_argument()

        self._handle_arguments(argv)
        self._initialized = True

    def __new__(cls, *args, **kwargs):
        if Parser._instance is None:
            Parser._instance = object.__new__(cls)
            Parser._instance._initialized = False

        return Parser._instance

    @classmethod
    def reset(cls):
        cls._instance = None

    def _add_commandline_argument(self):
        'Here should be specified arguments from commandline we want to work with'
        sub = self._parser.add_subparsers(dest='command', metavar='<command>')
        sub.required = True

        run = sub.add_parser('run', help='run the experiment matrix of a config file')
        run.add_argument("-c", "--config",
                         metavar="<filename>",
                         dest="config_file",
                         required=True,
                         type=argparse.FileType('r'),
                         help="sets path to experiment configuration file")
        run.add_argument("--seed", dest="seed", type=int, default=None,
                         help="run this seed instead of the configured ones")
        run.add_argument("-j", "--parallel", dest="parallelism", type=int, default=1,
                         help="number of cells run at the same time")
        run.add_argument("-o", "--output", dest="output", default=None,
                         help="output root (default: $%s or ./runs)" % RAMS_OUTPUT_ROOT_ENV)

        report = sub.add_parser('report', help='aggregate run records into CSV and SVG')
        report.add_argument("-r", "--records", dest="records", required=True,
                            help="directory searched for record.json files")
        report.add_argument("-k", "--kind", dest="kind", required=True, choices=reports.names())
        report.add_argument("-o", "--output", dest="output", default='reports')

        oracle = sub.add_parser('oracle', help='regenerate a reference dataset')
        oracle.add_argument("-p", "--problem", dest="problem", required=True, choices=problems.names())
        oracle.add_argument("-n", "--functions", dest="functions", type=int, default=100)
        oracle.add_argument("--points", dest="points", type=int, default=1000)
        oracle.add_argument("--seed", dest="seed", type=int, default=0)
        oracle.add_argument("-o", "--output", dest="output", default=None,
                            help="dataset file (default: <problem>_seed<seed>.npz)")

        verify = sub.add_parser('verify', help='run the invariant suite')
        verify.add_argument("-k", "--pattern", dest="pattern", default='*_tests.py',
                            help="test file pattern")

    def _handle_arguments(self, argv):

        arguments = self._parser.parse_args(argv)
        attributes = arguments.__dict__

        for arg, value in attributes.items(): #loop in given arguments from command line and set attributes equal
            setattr(self, arg, value)         #to them
