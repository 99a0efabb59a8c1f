"""
    Objective privacy metrics.

    blurriness: a no-reference blur score in [0, 1] (higher is blurrier)
    computed by re-blurring the image and measuring how much neighbour
    variation survives.

    RIP curve: for each isometric constant delta on a grid over [0, 1], the
    fraction of scenes whose energy ratio ||H * x||^2 / (||x||^2 + eps)
    satisfies the reduced lower RIP bound ratio >= 1 - delta. Its area under
    the curve (AUC-RIP) scores invertibility; smaller is more private.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import integrate, ndimage

import lenslesspy.imaging as li
from lenslesspy.exceptions import DatasetError, DimensionError, InvariantError

logger = logging.getLogger(__name__)

DELTA_POINTS = 101
#- Blur filter length of the re-blurring step
BLUR_TAPS = 9
#- Slack on the RIP bound absorbing FFT round-off of exact isometries
RIP_TOLERANCE = 1e-9


@dataclass
class RipCurve:
    delta_grid: np.ndarray
    satisfaction: np.ndarray
    auc: float = None

    def __post_init__(self):
        self.delta_grid = np.asarray(self.delta_grid, dtype=np.float64)
        self.satisfaction = np.asarray(self.satisfaction, dtype=np.float64)
        if self.delta_grid.shape != self.satisfaction.shape or self.delta_grid.ndim != 1:
            raise DimensionError('delta grid and satisfaction must be 1-d arrays of equal length')
        _check_grid(self.delta_grid)


@dataclass
class BlurReport:
    scores: np.ndarray
    mean: float
    mask_id: str = None
    image_ids: list = None


def default_delta_grid(points=DELTA_POINTS):
    return np.linspace(0.0, 1.0, points)

def _check_grid(delta_grid):
    if len(delta_grid) == 0:
        raise DimensionError('delta grid is empty')
    if np.any(np.diff(delta_grid) < 0.0):
        raise InvariantError('delta grid must be sorted')
    if delta_grid[0] < 0.0 or delta_grid[-1] > 1.0:
        raise InvariantError('delta grid must lie within [0, 1]')

def _pixels(img):
    return np.asarray(getattr(img, 'pixels', img), dtype=np.float64)

def _axis_blur(pixels, axis):
    """ Returns 1 - sum(V) / sum(D_F) along one axis, or 1.0 for a flat image. """
    blurred = ndimage.uniform_filter1d(pixels, size=BLUR_TAPS, axis=axis, mode='nearest')
    d_f = np.abs(np.diff(pixels, axis=axis))
    d_b = np.abs(np.diff(blurred, axis=axis))
    variation = np.maximum(0.0, d_f - d_b)
    s_f = d_f.sum()
    if s_f <= 0.0:
        return 1.0
    return (s_f - variation.sum()) / s_f

def blurriness(img):
    """
        No-reference blur score of an Image, Measurement or 2-d array.

        The image is re-blurred with a 9-tap average horizontally and
        vertically; per axis the score is the share of neighbour variation
        lost by re-blurring subtracted from one. Returns the larger axis
        score, clamped to [0, 1]. A constant image scores 1.0.
    """
    pixels = _pixels(img)
    if pixels.ndim != 2 or min(pixels.shape) < BLUR_TAPS + 1:
        raise DimensionError('blurriness needs an image of at least %d×%d pixels' % (BLUR_TAPS + 1, BLUR_TAPS + 1))
    score = max(_axis_blur(pixels, 1), _axis_blur(pixels, 0))
    return float(np.clip(score, 0.0, 1.0))

def blur_report(images, mask_id=None, image_ids=None):
    scores = np.array([blurriness(img) for img in images])
    if scores.size == 0:
        raise DatasetError('no images to score')
    if image_ids is None:
        image_ids = [str(i) for i in range(len(scores))]
    return BlurReport(scores=scores, mean=float(scores.mean()), mask_id=mask_id, image_ids=list(image_ids))

def satisfaction_from_ratios(ratios, delta_grid=None, tolerance=RIP_TOLERANCE):
    """ Fraction of ratios with ratio >= 1 - delta, for each delta of the grid. """
    if delta_grid is None:
        delta_grid = default_delta_grid()
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.size == 0:
        raise DatasetError('no energy ratios')
    delta_grid = np.asarray(delta_grid, dtype=np.float64)
    _check_grid(delta_grid)
    hits = ratios[np.newaxis, :] >= (1.0 - delta_grid[:, np.newaxis] - tolerance)
    return hits.mean(axis=1)

def auc_rip(curve):
    """ Trapezoidal area under the RIP curve over [0, 1]; stored into curve.auc. """
    grid = curve.delta_grid
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise InvariantError('delta grid must cover both endpoints 0 and 1')
    curve.auc = float(integrate.trapezoid(curve.satisfaction, grid))
    return curve.auc

def rip_curve(h, images, delta_grid=None, cfg=None, epsilon=li.EPSILON):
    """ RIP curve of CodedMask (or real m×m array) h over a set of scenes. """
    if cfg is None:
        cfg = li.CaptureConfig()
    if not cfg.normalize_mask:
        logger.warning('RIP curve computed with the raw (unnormalized) operator')
    if isinstance(images, np.ndarray):
        xs = images.reshape((-1,) + images.shape[-2:])
    else:
        xs = [_pixels(img) for img in images]
        if not xs:
            raise DatasetError('no images for the RIP curve')
        xs = np.stack(xs)
    if len(xs) == 0:
        raise DatasetError('no images for the RIP curve')
    if delta_grid is None:
        delta_grid = default_delta_grid()
    cells = getattr(h, 'cells', h)
    ratios = li.energy_ratios(xs, cells, cfg.normalize_mask, epsilon)
    curve = RipCurve(delta_grid, satisfaction_from_ratios(ratios, delta_grid))
    if curve.delta_grid[0] == 0.0 and curve.delta_grid[-1] == 1.0:
        auc_rip(curve)
    return curve

# CSV exports

def write_rip_csv(curve, path):
    pd.DataFrame({'delta': curve.delta_grid, 'satisfaction': curve.satisfaction}).to_csv(path, index=False)

def read_rip_csv(path):
    df = pd.read_csv(path, float_precision='round_trip')
    curve = RipCurve(df['delta'].to_numpy(), df['satisfaction'].to_numpy())
    if curve.delta_grid[0] == 0.0 and curve.delta_grid[-1] == 1.0:
        auc_rip(curve)
    return curve

def write_blur_csv(report, path):
    pd.DataFrame({'image_id': report.image_ids, 'score': report.scores}).to_csv(path, index=False)
