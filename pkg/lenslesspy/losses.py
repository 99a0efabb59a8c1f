"""
    Human-imperceptibility losses on the (relaxed) mask H and the joint objective

        L = L_rec + alpha * L_hi

    Every loss returns a LossValue carrying the value and its gradient with
    respect to the m×m mask. Batch terms (similarity and RIP) are summed over
    the batch; any averaging is left to the caller.

    Subgradients use sign(0) = 0.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

import lenslesspy.imaging as li
from lenslesspy.exceptions import ConfigError, DatasetError, DimensionError

logger = logging.getLogger(__name__)


class HiKind(Enum):
    NONE = 'none'
    SIM = 'sim'
    TV = 'tv'
    INV = 'inv'
    RIP = 'rip'

    @classmethod
    def from_name(cls, name):
        if isinstance(name, cls):
            return name
        if name is None:
            return cls.NONE
        key = str(name).strip().lower()
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigError('unknown human-imperceptible loss %r' % name)

    @property
    def method_name(self):
        """ LwoC for no constraint, LwC-Sim, LwC-TV, LwC-Inv, LwC-RIP otherwise. """
        if self is HiKind.NONE:
            return 'LwoC'
        return {'sim': 'LwC-Sim', 'tv': 'LwC-TV', 'inv': 'LwC-Inv', 'rip': 'LwC-RIP'}[self.value]

    @property
    def batch_summed(self):
        """ True for the losses defined as a sum over batch images. """
        return self in (HiKind.SIM, HiKind.RIP)

    @property
    def objective_sign(self):
        """
            Sign with which the loss enters the minimized objective. The RIP
            loss is the negative energy ratio and is maximized, so training
            lowers the ratio; every other loss is minimized as written.
        """
        return -1.0 if self is HiKind.RIP else 1.0


@dataclass
class LossWeights:
    alpha: float = 1.0
    hi_kind: HiKind = HiKind.NONE

    def __post_init__(self):
        self.hi_kind = HiKind.from_name(self.hi_kind)
        if not self.alpha >= 0.0:
            raise ConfigError('alpha must be >= 0, got %r' % self.alpha)


@dataclass
class MaskGradients:
    """ Forward differences of H: dx is m×(m-1) horizontal, dy is (m-1)×m vertical. """

    dx: np.ndarray
    dy: np.ndarray


@dataclass
class LossValue:
    value: float
    grad_mask: np.ndarray

    def scaled(self, factor):
        return LossValue(self.value * factor, self.grad_mask * factor)


def _stack(batch):
    """ Returns a (B, n, n) float64 array from a list of Images/arrays or an array stack. """
    if isinstance(batch, np.ndarray):
        xs = batch.astype(np.float64, copy=False)
        if xs.ndim == 2:
            xs = xs[np.newaxis]
    else:
        batch = list(batch)
        if not batch:
            raise DatasetError('empty batch')
        arrays = [b.pixels if isinstance(b, li.Image) else np.asarray(b, dtype=np.float64) for b in batch]
        if len(set(a.shape for a in arrays)) != 1:
            raise DimensionError('batch images differ in size')
        xs = np.stack(arrays)
    if xs.shape[0] == 0:
        raise DatasetError('empty batch')
    if xs.ndim != 3 or xs.shape[1] != xs.shape[2]:
        raise DimensionError('batch must hold square images, got shape %s' % (xs.shape,))
    return xs

def _normalize_flag(cfg):
    return True if cfg is None else cfg.normalize_mask

def mask_gradients(h):
    h = np.asarray(h, dtype=np.float64)
    return MaskGradients(dx=h[:, 1:] - h[:, :-1], dy=h[1:, :] - h[:-1, :])

def sim_loss(h, batch, cfg=None):
    """ Sum over the batch of ||H * x - 1_m * x||^2, both kernels under the same normalization. """
    h = np.asarray(h, dtype=np.float64)
    xs = _stack(batch)
    n, m = xs.shape[-1], h.shape[0]
    normalize = _normalize_flag(cfg)
    kernel = li.mask_kernel(h, n, normalize)
    kernel_open = li.mask_kernel(np.ones_like(h), n, normalize)
    residual = li.circular_convolve(xs, kernel - kernel_open)
    value = float(np.sum(residual**2))
    grad_kernel = 2.0 * li.circular_correlate(xs, residual, m)
    return LossValue(value, li.kernel_backward(h, grad_kernel, normalize))

def tv_loss(h):
    """ Negative anisotropic total variation -(||dx H||_1 + ||dy H||_1). """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] < 2:
        raise DimensionError('total variation needs a mask side >= 2')
    d = mask_gradients(h)
    sx = np.sign(d.dx)
    sy = np.sign(d.dy)
    value = -(np.sum(np.abs(d.dx)) + np.sum(np.abs(d.dy)))
    grad = np.zeros_like(h)
    #- d|h[j+1]-h[j]| = s (dh[j+1] - dh[j]), negated
    grad[:, 1:] -= sx
    grad[:, :-1] += sx
    grad[1:, :] -= sy
    grad[:-1, :] += sy
    return LossValue(float(value), grad)

def inv_loss(h):
    """ Negative L1 norm of the mask; favours large apertures. """
    h = np.asarray(h, dtype=np.float64)
    return LossValue(float(-np.sum(np.abs(h))), -np.sign(h))

def rip_loss(h, batch, cfg=None, epsilon=li.EPSILON):
    """ Negative sum of energy ratios ||H * x_i||^2 / (||x_i||^2 + epsilon). """
    if not epsilon > 0.0:
        raise ConfigError('epsilon must be > 0')
    h = np.asarray(h, dtype=np.float64)
    xs = _stack(batch)
    n, m = xs.shape[-1], h.shape[0]
    normalize = _normalize_flag(cfg)
    kernel = li.mask_kernel(h, n, normalize)
    y = li.circular_convolve(xs, kernel)
    denom = np.sum(xs**2, axis=(1, 2)) + epsilon
    value = -float(np.sum(np.sum(y**2, axis=(1, 2)) / denom))
    grad_kernel = -2.0 * li.circular_correlate(xs, y / denom[:, np.newaxis, np.newaxis], m)
    return LossValue(value, li.kernel_backward(h, grad_kernel, normalize))

def hi_loss(kind, h, batch=None, cfg=None, epsilon=li.EPSILON):
    """ Dispatches to the loss named by kind; HiKind.NONE is the zero loss. """
    kind = HiKind.from_name(kind)
    if kind is HiKind.SIM:
        return sim_loss(h, batch, cfg)
    elif kind is HiKind.TV:
        return tv_loss(h)
    elif kind is HiKind.INV:
        return inv_loss(h)
    elif kind is HiKind.RIP:
        return rip_loss(h, batch, cfg, epsilon)
    return LossValue(0.0, np.zeros_like(np.asarray(h, dtype=np.float64)))

def total_loss(rec, hi, w):
    """ Combines L_rec + alpha * L_hi. With hi_kind NONE the hi term is ignored. """
    rec_grad = np.asarray(rec.grad_mask, dtype=np.float64)
    if w.hi_kind is HiKind.NONE:
        return LossValue(rec.value, rec_grad.copy())
    hi_grad = np.asarray(hi.grad_mask, dtype=np.float64)
    if rec_grad.shape != hi_grad.shape:
        raise DimensionError('gradient shapes %s and %s differ' % (rec_grad.shape, hi_grad.shape))
    return LossValue(rec.value + w.alpha * hi.value, rec_grad + w.alpha * hi_grad)
