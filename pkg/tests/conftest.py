"""Shared fixtures and reference oracles for the lenslesspy tests."""

import numpy as np
import pytest

from lenslesspy.config import TrainConfig


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the desk-scale ordering experiments')

def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='desk-scale experiment, use --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def naive_convolve(x, h, normalize=True):
    """ Circular convolution by direct summation: y[i, j] = sum_ab k[a, b] x[i-a, j-b]. """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    k = h / h.sum() if normalize and h.sum() != 0.0 else h
    y = np.zeros_like(x)
    for a in range(h.shape[0]):
        for b in range(h.shape[1]):
            y += k[a, b] * np.roll(x, (a, b), axis=(0, 1))
    return y

def numeric_grad(f, p, eps=1e-6):
    """ Central finite differences of scalar f at array p. """
    p = np.array(p, dtype=np.float64)
    grad = np.zeros_like(p)
    for idx in np.ndindex(p.shape):
        old = p[idx]
        p[idx] = old + eps
        f_plus = f(p)
        p[idx] = old - eps
        f_minus = f(p)
        p[idx] = old
        grad[idx] = (f_plus - f_minus) / (2.0 * eps)
    return grad

def rel_error(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-30)
    return np.linalg.norm(a - b) / scale


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

@pytest.fixture
def relaxed_mask(rng):
    """ 8×8 real mask away from 0 and 1. """
    return rng.uniform(0.05, 0.95, size=(8, 8))

@pytest.fixture
def image_batch(rng):
    return rng.random((3, 16, 16))

@pytest.fixture
def tiny_settings():
    """ A configuration small enough to train in seconds. """
    return {
        'image_size': 12,
        'mask_size': 4,
        'num_classes': 3,
        'per_class': 6,
        'epochs': 2,
        'batch_size': 8,
        'hidden': 8,
    }

@pytest.fixture
def tiny_cfg(tiny_settings):
    return TrainConfig(**tiny_settings)
