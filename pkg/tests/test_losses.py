"""Tests for `lenslesspy.losses`."""

import numpy as np
import pytest

import lenslesspy.imaging as li
import lenslesspy.losses as ll
import lenslesspy.masks as lm
from lenslesspy.exceptions import ConfigError, DatasetError, DimensionError

from conftest import naive_convolve, numeric_grad, rel_error

GRAD_TOLERANCE = 1e-6


# Analytic identities

def test_sim_vanishes_at_full_open(image_batch):
    loss = ll.sim_loss(np.ones((8, 8)), image_batch)
    assert abs(loss.value) <= 1e-12
    assert np.allclose(loss.grad_mask, 0.0, atol=1e-12)

def test_sim_of_zero_mask_is_open_energy(image_batch):
    x = image_batch[:1]
    expected = np.sum(li.capture_array(x, np.ones((8, 8)), True)**2)
    assert ll.sim_loss(np.zeros((8, 8)), x).value == pytest.approx(expected, rel=1e-12)

def test_sim_by_hand_unnormalized():
    h = np.array([[1.0, 0.0], [0.0, 0.0]])
    x = np.ones((3, 3))
    #- residual kernel sums to -3 at every pixel of a constant image
    value = ll.sim_loss(h, [x], li.CaptureConfig(normalize_mask=False)).value
    assert value == pytest.approx(81.0, rel=1e-12)
    oracle = naive_convolve(x, h - np.ones((2, 2)), normalize=False)
    assert value == pytest.approx(np.sum(oracle**2), rel=1e-12)

def test_tv_examples():
    assert ll.tv_loss(np.full((5, 5), 0.7)).value == 0.0
    assert ll.tv_loss(lm.make_pinhole(3).cells).value == -4.0
    checker = np.indices((4, 4)).sum(axis=0) % 2
    assert ll.tv_loss(checker).value == -24.0

def test_tv_needs_two_cells():
    with pytest.raises(DimensionError):
        ll.tv_loss(np.ones((1, 1)))

def test_mask_gradients_shapes():
    d = ll.mask_gradients(np.arange(12.0).reshape(3, 4)[:, :3])
    assert d.dx.shape == (3, 2)
    assert d.dy.shape == (2, 3)

def test_inv_examples():
    assert ll.inv_loss(lm.make_full_open(6).cells).value == -36.0
    assert ll.inv_loss(lm.make_pinhole(32).cells).value == -1.0
    cells = np.zeros((32, 32))
    cells.flat[::2] = 1
    assert ll.inv_loss(cells).value == -512.0

def test_rip_pinhole_is_minus_batch_size(rng):
    xs = rng.random((5, 12, 12))
    assert ll.rip_loss(lm.make_pinhole(4).cells, xs).value == pytest.approx(-5.0, abs=1e-6)

def test_rip_zero_images():
    assert ll.rip_loss(np.ones((2, 2)), np.zeros((3, 4, 4))).value == 0.0

def test_rip_by_hand():
    value = ll.rip_loss(np.ones((2, 2)), [np.array([[1.0, 0.0], [0.0, 0.0]])]).value
    assert value == pytest.approx(-0.25, abs=1e-9)

def test_rip_matches_energy_ratios(rng, relaxed_mask, image_batch):
    ratios = li.energy_ratios(image_batch, relaxed_mask)
    assert ll.rip_loss(relaxed_mask, image_batch).value == pytest.approx(-ratios.sum(), rel=1e-12)

def test_rip_is_invariant_to_image_scale(relaxed_mask, image_batch):
    base = ll.rip_loss(relaxed_mask, image_batch)
    scaled = ll.rip_loss(relaxed_mask, 3.0 * image_batch)
    assert scaled.value == pytest.approx(base.value, rel=1e-9)
    assert rel_error(scaled.grad_mask, base.grad_mask) < 1e-9

def test_empty_and_mismatched_batches():
    with pytest.raises(DatasetError):
        ll.sim_loss(np.ones((2, 2)), [])
    with pytest.raises(DimensionError):
        ll.rip_loss(np.ones((2, 2)), [np.zeros((4, 4)), np.zeros((5, 5))])

def test_hi_loss_none_is_zero(relaxed_mask):
    loss = ll.hi_loss('none', relaxed_mask)
    assert loss.value == 0.0 and not np.any(loss.grad_mask)

def test_total_loss_examples():
    rec = ll.LossValue(2.0, np.ones((2, 2)))
    hi = ll.LossValue(-3.0, np.full((2, 2), 5.0))
    total = ll.total_loss(rec, hi, ll.LossWeights(1.0, 'rip'))
    assert total.value == -1.0
    assert np.array_equal(total.grad_mask, np.full((2, 2), 6.0))
    zero = ll.total_loss(rec, hi, ll.LossWeights(0.0, 'rip'))
    assert zero.value == rec.value
    assert np.array_equal(zero.grad_mask, rec.grad_mask)
    none = ll.total_loss(rec, hi, ll.LossWeights(1.0, None))
    assert none.value == rec.value

def test_method_names():
    assert ll.HiKind.from_name(None).method_name == 'LwoC'
    assert ll.HiKind.from_name('RIP').method_name == 'LwC-RIP'
    with pytest.raises(ConfigError):
        ll.HiKind.from_name('blur')

def test_negative_alpha_rejected():
    with pytest.raises(ConfigError):
        ll.LossWeights(-1.0, 'tv')


# Gradients against central finite differences

@pytest.mark.parametrize('normalize', [True, False])
def test_sim_gradient(relaxed_mask, image_batch, normalize):
    cfg = li.CaptureConfig(normalize_mask=normalize)
    analytic = ll.sim_loss(relaxed_mask, image_batch, cfg).grad_mask
    numeric = numeric_grad(lambda h: ll.sim_loss(h, image_batch, cfg).value, relaxed_mask)
    assert rel_error(analytic, numeric) < GRAD_TOLERANCE

@pytest.mark.parametrize('normalize', [True, False])
def test_rip_gradient(relaxed_mask, image_batch, normalize):
    cfg = li.CaptureConfig(normalize_mask=normalize)
    analytic = ll.rip_loss(relaxed_mask, image_batch, cfg).grad_mask
    numeric = numeric_grad(lambda h: ll.rip_loss(h, image_batch, cfg).value, relaxed_mask)
    assert rel_error(analytic, numeric) < GRAD_TOLERANCE

def test_tv_gradient_away_from_kinks(relaxed_mask):
    analytic = ll.tv_loss(relaxed_mask).grad_mask
    numeric = numeric_grad(lambda h: ll.tv_loss(h).value, relaxed_mask)
    assert rel_error(analytic, numeric) < GRAD_TOLERANCE

def test_inv_gradient(relaxed_mask):
    analytic = ll.inv_loss(relaxed_mask).grad_mask
    numeric = numeric_grad(lambda h: ll.inv_loss(h).value, relaxed_mask)
    assert rel_error(analytic, numeric) < GRAD_TOLERANCE
