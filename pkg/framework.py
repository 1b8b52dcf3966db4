from helpers import ConfigError


class Register():
    """Decorator registry: name -> {'exec': func, **attributes}"""

    def __init__(self, what='entry'):
        self.what = what
        self.hooks = {}

    def __call__(self, name, **kwargs):
        def register_decorator(func):
            if name in self.hooks:
                raise ConfigError('%s %r registered twice' % (self.what, name))
            self.hooks[name] = dict(kwargs, exec=func)
            return func
        return register_decorator

    def __contains__(self, name):
        return name in self.hooks

    def names(self):
        return sorted(self.hooks)

    def get(self, name):
        try:
            return self.hooks[name]
        except KeyError:
            raise ConfigError('unknown %s %r (known: %s)' % (self.what, name, ', '.join(self.names())))

    def run(self, name, *args, **kwargs):
        return self.get(name)['exec'](*args, **kwargs)


def satisfies(cmd, obj):
    # execute predicate
    if callable(cmd):
        return cmd(obj)
    if isinstance(cmd, list):
        # this is OR
        for i in cmd:
            if satisfies(i, obj):
                return True
        return False
    # and compare
    return cmd == obj

class And:
    def __init__(self, *args):
        self.args = args
    def __call__(self, obj):
        for i in self.args:
            if not satisfies(i, obj): return False
        return True
    def __str__(self):
        return ' and '.join(str(a) for a in self.args)

class IsInt:
    def __call__(self, val):
        return isinstance(val, int) and not isinstance(val, bool)
    def __str__(self):
        return 'an integer'

class IsNumber:
    def __call__(self, val):
        return isinstance(val, (int, float)) and not isinstance(val, bool)
    def __str__(self):
        return 'a number'

class Ge:
    def __init__(self, val):
        self.val = val
    def __call__(self, val):
        return self.val <= val
    def __str__(self):
        return '>= %s' % self.val

class Gt:
    def __init__(self, val):
        self.val = val
    def __call__(self, val):
        return self.val < val
    def __str__(self):
        return '> %s' % self.val

class Between:
    def __init__(self, a, b):
        self.a = a
        self.b = b
    def __call__(self, val):
        return self.a <= val and val <= self.b
    def __str__(self):
        return 'in [%s, %s]' % (self.a, self.b)
