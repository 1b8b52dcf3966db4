'''
Network checkpoints

checkpoint file format (all integers little endian):
    size |  type   | content
    -----------------------------------------
      8  |  const  | CHECKPOINT_MAGIC
      4  |  u32    | format version
      4  |  u32    | length S of the spec descriptor
      8  |  u64    | parameter count P
      4  |  u32    | length R of the rng state
      S  |  utf-8  | spec descriptor (canonical JSON)
    8*P  |  f64    | flat parameter vector
      R  |  utf-8  | rng bit-generator state (canonical JSON, may be empty)
'''

import json
import struct

import numpy as np

import networks
from constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from helpers import ConfigError, canonical_json, to_jsonable

ENDIAN = '<'
HEADER = ENDIAN + 'QIIQI'


def save_checkpoint(path, net, rng_state=None):
    spec = canonical_json(net.spec.describe()).encode('utf-8')
    rng = b'' if rng_state is None else canonical_json(to_jsonable(rng_state)).encode('utf-8')
    params = np.ascontiguousarray(net.params, dtype=ENDIAN + 'f8')

    head = struct.pack(HEADER, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(spec), params.size, len(rng))
    with open(path, 'wb') as f:
        f.write(head + spec + params.tobytes() + rng)


def load_checkpoint(path):
    """Returns (Network, rng state or None)"""

    with open(path, 'rb') as f:
        data = f.read()

    size = struct.calcsize(HEADER)
    if len(data) < size:
        raise ConfigError('%s: truncated checkpoint header' % path)
    magic, version, spec_len, count, rng_len = struct.unpack(HEADER, data[:size])
    if magic != CHECKPOINT_MAGIC:
        raise ConfigError('%s: not a checkpoint (magic %016x)' % (path, magic))
    if version != CHECKPOINT_VERSION:
        raise ConfigError('%s: unsupported checkpoint version %d' % (path, version))
    if len(data) != size + spec_len + 8 * count + rng_len:
        raise ConfigError('%s: checkpoint length does not match its header' % path)

    pos = size
    spec = networks.spec_from_description(json.loads(data[pos:pos + spec_len].decode('utf-8')))
    pos += spec_len
    params = np.frombuffer(data[pos:pos + 8 * count], dtype=ENDIAN + 'f8').astype(np.float64)
    pos += 8 * count
    rng_state = json.loads(data[pos:pos + rng_len].decode('utf-8')) if rng_len else None

    return networks.Network(spec, params), rng_state
