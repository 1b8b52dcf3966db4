'''
*********************************************************************
HELPER METHODS
*********************************************************************
'''

import hashlib
import json
import math

import numpy as np

import constants


def printDebug(level, msg):
    if constants.DEBUG >= level:
        print('DEBUG: %s' % msg)

def printWarning(msg):
    print('WARNING: %s' % msg)

def printInfo(msg):
    if constants.DEBUG >= 0:
        print(msg)

def print_err(err):
    for arg in err.args:
        print(arg)


'''
*********************************************************************
EXCEPTIONS
*********************************************************************
'''

class RamsError(RuntimeError): pass

# malformed programs, width mismatches, sensor grid mismatches
class StructuralError(RamsError): pass

# API misuse: several seeded outputs, tape consumed twice
class ContractError(RamsError): pass

class EmptyGradientError(RamsError): pass

class DomainError(RamsError): pass

class ConfigError(RamsError): pass

class MetricError(RamsError): pass

class NumericError(RamsError):
    def __init__(self, msg, node=None):
        super().__init__(msg)
        self.node = node

class SolverError(RamsError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


'''
*********************************************************************
SERIALIZATION & STATISTICS
*********************************************************************
'''

def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))

def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()

def to_jsonable(obj):
    """Convert numpy scalars/arrays nested in dicts and lists into plain python values"""

    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj

def mean_std(values):
    """Mean and sample standard deviation; a single value has std 0"""

    values = [float(v) for v in values]
    if len(values) == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)
