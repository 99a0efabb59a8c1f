""" File, JSON and tensor-bundle helpers shared by the lenslesspy modules. """

import errno
import hashlib
import json
import os
import struct
from datetime import datetime, timezone

import numpy as np

from lenslesspy.exceptions import InvariantError

# Tensor bundles: magic, little-endian uint64 header length, UTF-8 JSON
# header, then each tensor as contiguous float64 little-endian data in
# header order.
BUNDLE_MAGIC = b'LLPY'
F64_LE = np.dtype('<f8')

# File utils

def mkdir_p(path):
    if not path:
        return
    try:
        os.makedirs(path)
    except OSError as exc:
        if exc.errno == errno.EEXIST and os.path.isdir(path):
            pass
        else:
            raise

def open_for_write(path, mode='w'):
    """ Opens path for writing, creating parent directories first. """
    mkdir_p(os.path.dirname(path))
    return open(path, mode)

def sha256_file(path, buffer_bytes=65536):
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(buffer_bytes), b''):
            h.update(chunk)
    return h.hexdigest()

# JSON utils

def json_load(fl):
    """ Returns the decoded JSON in fl, or None when fl does not exist. """
    if not os.path.isfile(fl):
        return None
    with open(fl) as f:
        return json.load(f)

def json_dump(obj, fl):
    with open_for_write(fl) as f:
        json.dump(obj, f, indent=2, sort_keys=True, default=_json_default)
        f.write('\n')

def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError('Object of type %s is not JSON serializable' % type(obj).__name__)

# Tensor bundles

def write_bundle(path, header, tensors):
    """
        Writes a JSON header followed by float64 little-endian tensors.

        Tensors is an ordered list of (name, array) pairs. Their names and
        shapes are recorded in header['tensors'].
    """
    header = dict(header)
    header['tensors'] = [{'name': name, 'shape': list(np.shape(arr))} for name, arr in tensors]
    raw_header = json.dumps(header, sort_keys=True, default=_json_default).encode('utf-8')
    with open_for_write(path, 'wb') as f:
        f.write(BUNDLE_MAGIC)
        f.write(struct.pack('<Q', len(raw_header)))
        f.write(raw_header)
        for _, arr in tensors:
            f.write(np.ascontiguousarray(arr, dtype=F64_LE).tobytes())

def read_bundle(path):
    """ Returns (header, tensors) where tensors is a dict of name -> float64 array. """
    with open(path, 'rb') as f:
        data = f.read()
    if data[0:4] != BUNDLE_MAGIC:
        raise InvariantError('%s is not a tensor bundle' % path)
    header_len = struct.unpack('<Q', data[4:12])[0]
    header = json.loads(data[12:12 + header_len].decode('utf-8'))
    offset = 12 + header_len
    tensors = {}
    for spec in header['tensors']:
        count = int(np.prod(spec['shape'])) if spec['shape'] else 1
        arr = np.frombuffer(data, dtype=F64_LE, count=count, offset=offset)
        tensors[spec['name']] = arr.reshape(spec['shape']).astype(np.float64)
        offset += count * F64_LE.itemsize
    return header, tensors

def write_f64(path, arr, **meta):
    """ Writes a single array as a tensor bundle with a small JSON header, e.g. {"n": 24}. """
    write_bundle(path, meta, [('data', arr)])

def read_f64(path):
    """ Returns (header, array) from a file written by write_f64. """
    header, tensors = read_bundle(path)
    return header, tensors['data']

# Time utils

def utc_timestamp():
    return datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')
