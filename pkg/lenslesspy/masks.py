"""
    Coded mask construction.

    Fixed benchmark masks (pinhole, full-open, random) and the learnable mask:
    real logits w whose sigmoid is the relaxed mask, binarized by thresholding
    w > 0 and trained through a straight-through estimator that multiplies the
    incoming gradient by the sigmoid derivative.
"""

import logging
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

import lenslesspy.pnm_utils as pnm
import lenslesspy.utils as lu
from lenslesspy.exceptions import ConfigError, DimensionError, InvariantError
from lenslesspy.imaging import CodedMask

logger = logging.getLogger(__name__)


class MaskKind(Enum):
    PINHOLE = 'pinhole'
    FULL_OPEN = 'full-open'
    RANDOM = 'random'
    LEARNED = 'learned'

    @classmethod
    def from_name(cls, name):
        """ Accepts 'full-open', 'full_open', 'FullOpen', ... """
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace('_', '-')
        if key == 'fullopen':
            key = 'full-open'
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigError('unknown mask kind %r' % name)


@dataclass
class MaskLogits:
    """ Continuous parameters of a learnable mask; cell is open iff logit > 0. """

    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.array(self.logits, dtype=np.float64)
        if self.logits.ndim != 2 or self.logits.shape[0] != self.logits.shape[1]:
            raise DimensionError('logits must be square, got shape %s' % (self.logits.shape,))
        if not np.all(np.isfinite(self.logits)):
            raise InvariantError('logits must be finite')

    @property
    def m(self):
        return self.logits.shape[0]

    def relaxed(self):
        """ Sigmoid of the logits, the real-valued mask used during training. """
        return expit(self.logits)


def _check_side(m):
    if int(m) != m or m < 1:
        raise DimensionError('mask side must be a positive integer, got %r' % m)
    return int(m)

def make_pinhole(m):
    """ Single open cell at (m//2, m//2). """
    m = _check_side(m)
    cells = np.zeros((m, m), dtype=np.uint8)
    cells[m // 2, m // 2] = 1
    return CodedMask(cells, name='pinhole-%d' % m)

def make_full_open(m):
    m = _check_side(m)
    return CodedMask(np.ones((m, m), dtype=np.uint8), name='full-open-%d' % m)

def make_random(m, ratio=0.5, seed=0):
    """ Each cell i.i.d. Bernoulli(ratio) from a generator seeded with seed. """
    m = _check_side(m)
    if not 0.0 < ratio < 1.0:
        raise ConfigError('random mask ratio must lie in (0, 1), got %r' % ratio)
    rng = np.random.default_rng(seed)
    cells = (rng.random((m, m)) < ratio).astype(np.uint8)
    return CodedMask(cells, name='random-%d-r%g-s%d' % (m, ratio, seed))

def make_mask(kind, m, ratio=0.5, seed=0):
    """ Builds a fixed mask of the given MaskKind. Learned masks come from binarize. """
    kind = MaskKind.from_name(kind)
    if kind is MaskKind.PINHOLE:
        return make_pinhole(m)
    elif kind is MaskKind.FULL_OPEN:
        return make_full_open(m)
    elif kind is MaskKind.RANDOM:
        return make_random(m, ratio, seed)
    raise ConfigError('learned masks are produced by training, not by make_mask')

def binarize(w, name=None):
    """ Open iff logit > 0; a logit of exactly 0 is closed. """
    if not isinstance(w, MaskLogits):
        w = MaskLogits(w)
    return CodedMask((w.logits > 0.0).astype(np.uint8), name=name)

def ste_backward(w, grad_wrt_mask):
    """ Straight-through gradient: grad * sigmoid'(w). """
    logits = w.logits if isinstance(w, MaskLogits) else np.asarray(w, dtype=np.float64)
    grad = np.asarray(grad_wrt_mask, dtype=np.float64)
    if grad.shape != logits.shape:
        raise DimensionError('gradient shape %s does not match logits %s' % (grad.shape, logits.shape))
    s = expit(logits)
    return grad * s * (1.0 - s)

def aperture_ratio(h):
    cells = h.cells if isinstance(h, CodedMask) else np.asarray(h)
    return float(np.count_nonzero(cells)) / cells.size

def init_logits(m, seed, spread=0.1):
    """ I.i.d. uniform logits in [-spread, spread], about half the cells open. """
    m = _check_side(m)
    rng = np.random.default_rng(seed)
    return MaskLogits(rng.uniform(-spread, spread, size=(m, m)))

def logits_from_mask(h, magnitude=10.0):
    """ Logits of +/- magnitude that binarize back to h. """
    return MaskLogits(np.where(h.cells > 0, magnitude, -magnitude).astype(np.float64))

def ascii_art(h, open_char='#', closed_char='.'):
    return '\n'.join(''.join(open_char if v else closed_char for v in row) for row in h.cells)

def sidecar_path(path):
    return os.path.splitext(path)[0] + '.json'

def save_mask(h, path):
    """ Writes h as plain PBM (1 = open) plus a JSON sidecar {"m": ..., "aperture_ratio": ...}. """
    pnm.write_pbm(path, h.cells, comment=h.mask_id)
    lu.json_dump({'m': h.m, 'aperture_ratio': aperture_ratio(h), 'name': h.mask_id}, sidecar_path(path))

def load_mask(path):
    meta = lu.json_load(sidecar_path(path)) or {}
    try:
        cells = pnm.read_pbm(path)
    except ValueError as exc:
        raise InvariantError(str(exc))
    if meta.get('m') not in (None, cells.shape[0]):
        raise DimensionError('%s holds a %d×%d mask but its sidecar says m=%s' % (path, cells.shape[0], cells.shape[1], meta['m']))
    return CodedMask(cells, name=meta.get('name'))


if __name__ == "__main__":

    #- Tests
    def t0(m):
        for kind in ('pinhole', 'full-open', 'random'):
            h = make_mask(kind, m, 0.5, 1)
            print(h.mask_id, aperture_ratio(h))
            print(ascii_art(h))

    #t0(8)
