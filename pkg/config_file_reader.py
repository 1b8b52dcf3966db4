import json

from framework import satisfies, And, IsInt, IsNumber, Ge, Gt, Between
from harness import ExperimentConfig, expand_sweep
from helpers import ConfigError, RamsError


# field -> predicate every configured value must satisfy
SIZE_RULES = {
    'n_total': And(IsInt(), Ge(1)),
    'n_fixed': And(IsInt(), Ge(0)),
    'n_ini': And(IsInt(), Ge(1)),
    'n_candidates': And(IsInt(), Ge(1)),
    'm': And(IsInt(), Ge(0)),
    'n_sam': And(IsInt(), Ge(1)),
}
RAMS_RULES = {
    'n_rams': And(IsInt(), Ge(0)),
    'lr': And(IsNumber(), Gt(0)),
    'subset': And(IsInt(), Ge(0)),
    'projector': ['auto', 'none'],
}
SCHEDULE_RULES = {
    't_r': And(IsInt(), Ge(0)),
    'n_train': And(IsInt(), Ge(0)),
    'initial_epochs': And(IsInt(), Ge(0)),
    'post_adam': And(IsInt(), Ge(0)),
    'post_lbfgs': And(IsInt(), Ge(0)),
}


class ConfigFileReader:
    """Class reading experiment settings from JSON file"""

    def __init__(self, config_file):
        self.config_file = config_file
        self.entries = []
        self.experiments = []
        self.rejected = []

    def _check_names(self):

        by_name = dict()
        for entry in self.entries:
            by_name.setdefault(entry.get('name'), []).append(entry)
        for name, values in by_name.items():
            if name is None or len(values) > 1:
                print('%s: experiment name missing or used %d times' % (name, len(values)))
                self._delete_entries(values)

    def _check_rules(self, section, rules):

        to_del = []
        for entry in self.entries:
            for key, rule in rules.items():
                value = entry.get(section, {}).get(key)
                if value is None:
                    continue
                if not satisfies(rule, value):
                    print('%s %s.%s: %r is not %s' % (entry['name'], section, key, value,
                                                      ' or '.join(map(str, rule)) if isinstance(rule, list) else rule))
                    to_del.append(entry)
                    break

        self._delete_entries(to_del)

    def _check_sizes(self):

        to_del = []
        for entry in self.entries:
            sizes = entry.get('sizes', {})
            rams = entry.get('rams', {})
            n_total, n_fixed = sizes.get('n_total'), sizes.get('n_fixed')
            if n_total is not None and n_fixed is not None and rams.get('subset') is not None:
                # |T^| is drawn from T2
                if not satisfies(Between(0, n_total - n_fixed), rams['subset']):
                    print('%s: |T^| = %s exceeds |T2| = %s' % (entry['name'], rams['subset'], n_total - n_fixed))
                    to_del.append(entry)

        self._delete_entries(to_del)

    def _check_experiments(self):

        to_del = []
        for entry in self.entries:
            try:
                self.experiments.append(ExperimentConfig.from_dict(entry))
            except RamsError as err:
                print(err)
                to_del.append(entry)

        self._delete_entries(to_del)

    def _delete_entries(self, entries_to_delete):

        for entry in entries_to_delete:
            try:
                self.entries.remove(entry)
                self.rejected.append(entry.get('name'))
            except ValueError:
                pass # NOT AN ERROR - one entry can fail several checks

    def read_and_check_args(self):

        try:
            loaded = json.load(self.config_file)
        except json.JSONDecodeError as err:
            raise ConfigError('%s: %s' % (getattr(self.config_file, 'name', 'config'), err))
        if isinstance(loaded, dict):
            loaded = [loaded]
        if not isinstance(loaded, list):
            raise ConfigError('config must hold an experiment object or a list of them')

        self.entries = []
        for entry in loaded:
            if not isinstance(entry, dict):
                raise ConfigError('experiment entries must be objects, got %r' % (entry,))
            self.entries.extend(expand_sweep(entry))

        self._check_names() # remove experiments with duplicate names

        self._check_rules('sizes', SIZE_RULES)
        self._check_rules('rams', RAMS_RULES)
        self._check_rules('schedule', SCHEDULE_RULES)

        self._check_sizes() # |T1| + |T2| = |T|, |T^| <= |T2|

        self._check_experiments() # unknown fields, problems and samplers
