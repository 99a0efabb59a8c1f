"""
    Utilities for reading and writing Netpbm files.

    Images are 8-bit grayscale PGM (P5 binary, P2 plain also read) holding
    intensities in [0, 1] scaled by maxval. Masks are plain PBM (P1) where a
    1 bit marks an open cell.
"""

import re

import numpy as np

import lenslesspy.utils as lu
from lenslesspy.exceptions import InvariantError


def _tokens(data):
    """ Splits a Netpbm header into tokens, dropping comments. Returns (tokens, end offset). """
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < 4 and i < n:
        c = data[i:i+1]
        if c == b'#':
            while i < n and data[i:i+1] not in (b'\n', b'\r'):
                i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < n and not data[i:i+1].isspace() and data[i:i+1] != b'#':
                i += 1
            tokens.append(data[start:i].decode('ascii'))
            if tokens[0] == 'P1' and len(tokens) == 3:
                break
    return tokens, i

def _plain_raster(data):
    """ Plain raster text with # comments (to end of line) removed. """
    return re.sub(rb'#[^\r\n]*', b'', data).decode('ascii')

def read_pgm(path):
    """ Returns a float64 array in [0, 1] from a P5 or P2 PGM file. """
    with open(path, 'rb') as f:
        data = f.read()
    tokens, end = _tokens(data)
    if len(tokens) < 4 or tokens[0] not in ('P5', 'P2'):
        raise InvariantError('%s is not a P5/P2 PGM file' % path)
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval < 1 or maxval > 255:
        raise InvariantError('%s: only 8-bit PGM files are supported' % path)
    if tokens[0] == 'P5':
        # Exactly one whitespace byte separates maxval from the raster
        raster = np.frombuffer(data, dtype=np.uint8, count=width*height, offset=end+1)
    else:
        raster = np.array([int(t) for t in _plain_raster(data[end:]).split()[:width*height]], dtype=np.int64)
    if raster.size != width*height:
        raise InvariantError('%s: truncated raster' % path)
    return raster.reshape(height, width).astype(np.float64) / maxval

def write_pgm(path, pixels):
    """ Writes intensities in [0, 1] as an 8-bit P5 PGM. """
    pixels = np.asarray(pixels, dtype=np.float64)
    raster = np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = raster.shape
    with lu.open_for_write(path, 'wb') as f:
        f.write(('P5\n%d %d\n255\n' % (width, height)).encode('ascii'))
        f.write(raster.tobytes())

def read_pbm(path):
    """ Returns a uint8 array of 0/1 cells from a plain P1 PBM file. """
    with open(path, 'rb') as f:
        data = f.read()
    tokens, end = _tokens(data)
    if len(tokens) < 3 or tokens[0] != 'P1':
        raise InvariantError('%s is not a plain P1 PBM file' % path)
    width, height = int(tokens[1]), int(tokens[2])
    # Plain PBM bits may be written without separators
    bits = [c for c in _plain_raster(data[end:]) if c in '01']
    if len(bits) < width*height:
        raise InvariantError('%s: truncated raster' % path)
    return np.array([int(c) for c in bits[:width*height]], dtype=np.uint8).reshape(height, width)

def write_pbm(path, cells, comment=None):
    cells = np.asarray(cells)
    height, width = cells.shape
    with lu.open_for_write(path) as f:
        f.write('P1\n')
        if comment:
            f.write('# %s\n' % comment)
        f.write('%d %d\n' % (width, height))
        for row in cells:
            f.write(' '.join('1' if v else '0' for v in row) + '\n')
