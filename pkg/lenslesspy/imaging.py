"""
    Lensless capture forward model.

    A measurement is the circular 2-D convolution of a square grayscale scene
    x (n×n) with the kernel built from an m×m coded mask H (m <= n):

        y = H * x + eta

    The mask is zero-padded to n×n with its cell (0, 0) at convolution lag
    (0, 0). With normalize_mask on, the kernel is divided by its sum (the
    open-cell count for a binary mask), so a full-open mask becomes an
    averaging filter and ||H * x|| <= ||x||.
"""

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from lenslesspy.exceptions import ConfigError, DimensionError, InvariantError

logger = logging.getLogger(__name__)

#- Default guard added to the signal energy of energy ratios
EPSILON = 1e-10


@dataclass
class Image:
    """ A square grayscale scene with intensities in [0, 1]. """

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise DimensionError('image must be square, got shape %s' % (self.pixels.shape,))
        if self.pixels.shape[0] < 2:
            raise DimensionError('image side must be >= 2')
        if not np.all(np.isfinite(self.pixels)) or self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise InvariantError('image pixels must lie in [0, 1]')

    @property
    def n(self):
        return self.pixels.shape[0]


@dataclass
class CodedMask:
    """ An m×m binary aperture pattern. Cells are 1 (open) or 0 (closed). """

    cells: np.ndarray
    name: str = None

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1] or cells.shape[0] < 1:
            raise DimensionError('mask must be a non-empty square, got shape %s' % (cells.shape,))
        if not np.all((cells == 0) | (cells == 1)):
            raise InvariantError('mask cells must be exactly 0 or 1')
        self.cells = cells.astype(np.uint8)

    @property
    def m(self):
        return self.cells.shape[0]

    @property
    def mask_id(self):
        """ The mask name, or a short digest of its bits. """
        if self.name:
            return self.name
        digest = hashlib.sha1(np.packbits(self.cells).tobytes()).hexdigest()[:10]
        return 'mask-%d-%s' % (self.m, digest)


@dataclass
class Measurement:
    """ Sensor image y = H * x, same side length as the scene. """

    pixels: np.ndarray
    mask_id: str = None
    normalized: bool = True

    @property
    def n(self):
        return self.pixels.shape[0]


@dataclass
class CaptureConfig:
    normalize_mask: bool = True
    noise_std: float = 0.0

    def __post_init__(self):
        if not self.noise_std >= 0.0:
            raise ConfigError('noise_std must be >= 0, got %r' % self.noise_std)


def mask_kernel(h, n, normalize=True):
    """
        Returns the n×n kernel of an m×m (possibly relaxed, real-valued) mask.

        The mask sits in the top-left corner. With normalize on, it is divided
        by its sum; an all-zero mask yields the zero kernel.
    """
    h = np.asarray(h, dtype=np.float64)
    m = h.shape[0]
    if m > n:
        raise DimensionError('mask side %d exceeds image side %d' % (m, n))
    kernel = np.zeros((n, n), dtype=np.float64)
    kernel[:m, :m] = h
    if normalize:
        total = h.sum()
        if total != 0.0:
            kernel /= total
    return kernel

def kernel_backward(h, grad_kernel, normalize=True):
    """
        Chain rule through mask_kernel.

        Grad_kernel is dL/dk restricted to the m×m support; returns dL/dh.
        For k = h / sum(h): dL/dh_j = g_j / s - <g, h> / s**2.
    """
    h = np.asarray(h, dtype=np.float64)
    g = np.asarray(grad_kernel, dtype=np.float64)
    if g.shape != h.shape:
        raise DimensionError('gradient shape %s does not match mask %s' % (g.shape, h.shape))
    if not normalize:
        return g.copy()
    total = h.sum()
    if total == 0.0:
        return g.copy()
    return g / total - np.sum(g * h) / total**2

def circular_convolve(x, kernel):
    """ Circular convolution over the last two axes; x may be a stack (..., n, n). """
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape[-2:]
    return np.fft.irfft2(np.fft.rfft2(x) * np.fft.rfft2(kernel), s=shape)

def circular_correlate(x, g, m):
    """
        Adjoint of circular_convolve with respect to the kernel.

        Returns c[a, b] = sum_ij g[i, j] x[i-a, j-b] for 0 <= a, b < m,
        summed over any leading batch axes.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    shape = x.shape[-2:]
    c = np.fft.irfft2(np.fft.rfft2(g) * np.conj(np.fft.rfft2(x)), s=shape)
    if c.ndim > 2:
        c = c.reshape((-1,) + shape).sum(axis=0)
    return c[:m, :m]

def capture_array(x, h, normalize=True, noise_std=0.0, rng=None):
    """
        Array-level forward model: y = k(h) * x (+ Gaussian noise).

        X is an n×n array or an (B, n, n) stack, h an m×m real array. Rng is a
        numpy Generator, required when noise_std > 0.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = mask_kernel(h, x.shape[-1], normalize)
    y = circular_convolve(x, kernel)
    if noise_std > 0.0:
        if rng is None:
            raise ConfigError('a random generator is required when noise_std > 0')
        y = y + rng.normal(0.0, noise_std, size=y.shape)
    return y

def capture(x, h, cfg=None, rng_seed=0):
    """ Returns the Measurement of Image x through CodedMask h. """
    if cfg is None:
        cfg = CaptureConfig()
    if h.m > x.n:
        raise DimensionError('mask side %d exceeds image side %d' % (h.m, x.n))
    rng = np.random.default_rng(rng_seed) if cfg.noise_std > 0.0 else None
    y = capture_array(x.pixels, h.cells, cfg.normalize_mask, cfg.noise_std, rng)
    return Measurement(pixels=y, mask_id=h.mask_id, normalized=cfg.normalize_mask)

def capture_batch(images, h, cfg=None, rng_seed=0):
    """ Vectorized capture of a list of Images (or an (B, n, n) stack); returns a list of Measurements. """
    if cfg is None:
        cfg = CaptureConfig()
    if isinstance(images, np.ndarray):
        xs = images.reshape((-1,) + images.shape[-2:])
    else:
        xs = np.stack([img.pixels for img in images])
    if h.m > xs.shape[-1]:
        raise DimensionError('mask side %d exceeds image side %d' % (h.m, xs.shape[-1]))
    rng = np.random.default_rng(rng_seed) if cfg.noise_std > 0.0 else None
    ys = capture_array(xs, h.cells, cfg.normalize_mask, cfg.noise_std, rng)
    return [Measurement(pixels=y, mask_id=h.mask_id, normalized=cfg.normalize_mask) for y in ys]

def energy_ratios(xs, h, normalize=True, epsilon=EPSILON):
    """ Returns ||k(h) * x||^2 / (||x||^2 + epsilon) for each image of an (B, n, n) stack. """
    if not epsilon > 0.0:
        raise ConfigError('epsilon must be > 0')
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 2:
        xs = xs[np.newaxis]
    y = capture_array(xs, h, normalize)
    return np.sum(y**2, axis=(1, 2)) / (np.sum(xs**2, axis=(1, 2)) + epsilon)

def energy_ratio(x, h, cfg=None, epsilon=EPSILON):
    """ Ratio of measurement to signal energy. Noise is never applied here. """
    if cfg is None:
        cfg = CaptureConfig()
    if h.m > x.n:
        raise DimensionError('mask side %d exceeds image side %d' % (h.m, x.n))
    return float(energy_ratios(x.pixels, h.cells, cfg.normalize_mask, epsilon)[0])

def area_ratio(n, m):
    """ Mask-to-image area ratio m^2 / n^2. """
    return (m * m) / float(n * n)
