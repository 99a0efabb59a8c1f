"""Tests for `lenslesspy.imaging`."""

import numpy as np
import pytest

import lenslesspy.imaging as li
from lenslesspy.exceptions import ConfigError, DimensionError, InvariantError

from conftest import naive_convolve


def origin_pinhole(m):
    cells = np.zeros((m, m), dtype=np.uint8)
    cells[0, 0] = 1
    return li.CodedMask(cells)


def test_origin_pinhole_is_identity(rng):
    x = li.Image(rng.random((16, 16)))
    y = li.capture(x, origin_pinhole(4))
    assert np.allclose(y.pixels, x.pixels, rtol=0, atol=1e-12)

def test_full_open_preserves_constant():
    x = li.Image(np.full((12, 12), 0.3))
    y = li.capture(x, li.CodedMask(np.ones((4, 4))))
    assert np.allclose(y.pixels, 0.3, rtol=0, atol=1e-12)

def test_hand_computed_unnormalized_capture():
    x = li.Image([[1, 0, 0], [0, 0, 0], [0, 0, 0]])
    y = li.capture(x, li.CodedMask(np.ones((2, 2))), li.CaptureConfig(normalize_mask=False))
    expected = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 0]], dtype=float)
    assert np.allclose(y.pixels, expected, rtol=0, atol=1e-12)
    assert y.normalized is False

def test_fft_capture_matches_naive_oracle(rng):
    for _ in range(50):
        n = int(rng.integers(4, 17))
        m = int(rng.integers(1, n + 1))
        x = rng.random((n, n))
        cells = (rng.random((m, m)) < 0.5).astype(np.uint8)
        cells[0, 0] = 1
        normalize = bool(rng.integers(0, 2))
        y = li.capture(li.Image(x), li.CodedMask(cells), li.CaptureConfig(normalize_mask=normalize))
        oracle = naive_convolve(x, cells, normalize)
        assert np.linalg.norm(y.pixels - oracle) <= 1e-10 * np.linalg.norm(oracle)

def test_centered_pinhole_preserves_energy(rng):
    x = rng.random((24, 24))
    cells = np.zeros((8, 8), dtype=np.uint8)
    cells[4, 4] = 1
    y = li.capture_array(x, cells)
    assert abs(np.sum(y**2) - np.sum(x**2)) <= 1e-12 * np.sum(x**2)
    #- a circular shift by (4, 4)
    assert np.allclose(y, np.roll(x, (4, 4), axis=(0, 1)), rtol=0, atol=1e-12)

def test_mask_larger_than_image():
    with pytest.raises(DimensionError):
        li.capture(li.Image(np.zeros((4, 4))), li.CodedMask(np.ones((5, 5))))

def test_mask_cells_must_be_binary():
    with pytest.raises(InvariantError):
        li.CodedMask([[0, 0.5], [1, 0]])

def test_image_must_be_square_and_in_range():
    with pytest.raises(DimensionError):
        li.Image(np.zeros((3, 4)))
    with pytest.raises(InvariantError):
        li.Image(np.full((3, 3), 1.5))

def test_negative_noise_rejected():
    with pytest.raises(ConfigError):
        li.CaptureConfig(noise_std=-0.1)

def test_noise_is_seeded(rng):
    x = li.Image(rng.random((8, 8)))
    h = li.CodedMask(np.ones((2, 2)))
    cfg = li.CaptureConfig(noise_std=0.05)
    a = li.capture(x, h, cfg, rng_seed=3)
    b = li.capture(x, h, cfg, rng_seed=3)
    c = li.capture(x, h, cfg, rng_seed=4)
    assert np.array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, c.pixels)

def test_capture_batch_matches_capture(rng):
    images = [li.Image(rng.random((10, 10))) for _ in range(4)]
    h = li.CodedMask((rng.random((3, 3)) < 0.5).astype(np.uint8) | np.eye(3, dtype=np.uint8))
    batch = li.capture_batch(images, h)
    for img, y in zip(images, batch):
        assert np.allclose(y.pixels, li.capture(img, h).pixels, rtol=0, atol=1e-14)
        assert y.mask_id == h.mask_id

def test_correlate_is_adjoint_of_convolve(rng):
    n, m = 10, 4
    xs = rng.random((2, n, n))
    g = rng.standard_normal((2, n, n))
    h = rng.random((m, m))
    kernel = np.zeros((n, n))
    kernel[:m, :m] = h
    lhs = np.sum(li.circular_convolve(xs, kernel) * g)
    rhs = np.sum(h * li.circular_correlate(xs, g, m))
    assert lhs == pytest.approx(rhs, rel=1e-12)

@pytest.mark.parametrize('normalize', [True, False])
def test_capture_is_linear_in_the_scene(rng, normalize):
    h = rng.uniform(0.05, 0.95, size=(4, 4))
    x1, x2 = rng.random((2, 12, 12))
    combined = li.capture_array(2.0 * x1 - 0.5 * x2, h, normalize)
    separate = 2.0 * li.capture_array(x1, h, normalize) - 0.5 * li.capture_array(x2, h, normalize)
    assert np.allclose(combined, separate, rtol=0, atol=1e-12)

def test_kernel_of_zero_mask_is_zero():
    assert not np.any(li.mask_kernel(np.zeros((3, 3)), 6))

def test_energy_ratio_examples():
    pinhole = origin_pinhole(2)
    x = li.Image(np.random.default_rng(0).random((6, 6)))
    assert li.energy_ratio(x, pinhole) == pytest.approx(1.0, abs=1e-9)
    assert li.energy_ratio(li.Image(np.zeros((6, 6))), pinhole) == 0.0
    x = li.Image([[1, 0], [0, 0]])
    assert li.energy_ratio(x, li.CodedMask(np.ones((2, 2)))) == pytest.approx(0.25, abs=1e-9)

def test_energy_ratio_bounded_by_one_when_normalized(rng):
    xs = rng.random((10, 12, 12))
    cells = (rng.random((5, 5)) < 0.5).astype(np.uint8)
    cells[0, 0] = 1
    ratios = li.energy_ratios(xs, cells)
    assert np.all(ratios <= 1.0 + 1e-12)

def test_area_ratio():
    assert li.area_ratio(64, 32) == 0.25
    assert li.area_ratio(64, 16) == 1.0 / 16
