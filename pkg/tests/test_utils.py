"""Tests for `lenslesspy.utils`, `lenslesspy.pnm_utils` and `lenslesspy.config`."""

import json

import numpy as np
import pytest

import lenslesspy.pnm_utils as pnm
import lenslesspy.utils as lu
from lenslesspy import config as lc
from lenslesspy.exceptions import ConfigError, InvariantError


def test_bundle_round_trip(tmp_path, rng):
    path = str(tmp_path / 'sub' / 'bundle.bin')
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal(5)
    lu.write_bundle(path, {'note': 'x'}, [('a', a), ('b', b)])
    header, tensors = lu.read_bundle(path)
    assert header['note'] == 'x'
    assert [t['name'] for t in header['tensors']] == ['a', 'b']
    assert np.array_equal(tensors['a'], a)
    assert np.array_equal(tensors['b'], b)

def test_bundle_magic(tmp_path):
    path = tmp_path / 'junk.bin'
    path.write_bytes(b'JUNK' + b'\0' * 16)
    with pytest.raises(InvariantError):
        lu.read_bundle(str(path))

def test_f64_header(tmp_path, rng):
    path = str(tmp_path / 'mask.f64')
    arr = rng.random((4, 4))
    lu.write_f64(path, arr, m=4)
    header, loaded = lu.read_f64(path)
    assert header['m'] == 4
    assert np.array_equal(loaded, arr)

def test_json_helpers(tmp_path):
    assert lu.json_load(str(tmp_path / 'missing.json')) is None
    path = str(tmp_path / 'a' / 'b.json')
    lu.json_dump({'n': np.int64(3), 'x': np.float64(0.5), 'v': np.arange(2)}, path)
    assert lu.json_load(path) == {'n': 3, 'x': 0.5, 'v': [0, 1]}

def test_sha256(tmp_path):
    path = tmp_path / 'f.txt'
    path.write_bytes(b'abc')
    assert lu.sha256_file(str(path)) == 'ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad'

def test_pgm_round_trip(tmp_path, rng):
    pixels = np.rint(rng.random((5, 7)) * 255.0) / 255.0
    path = str(tmp_path / 'img.pgm')
    pnm.write_pgm(path, pixels)
    assert np.array_equal(pnm.read_pgm(path), pixels)

def test_plain_pgm(tmp_path):
    path = tmp_path / 'plain.pgm'
    path.write_text('P2\n# comment\n2 2\n4\n0 1\n2 4\n')
    assert np.array_equal(pnm.read_pgm(str(path)), [[0.0, 0.25], [0.5, 1.0]])

def test_pbm_round_trip(tmp_path):
    cells = np.array([[1, 0, 1], [0, 1, 1], [0, 0, 0]], dtype=np.uint8)
    path = str(tmp_path / 'm.pbm')
    pnm.write_pbm(path, cells, comment='demo')
    text = open(path).read()
    assert text.startswith('P1\n# demo\n3 3\n')
    assert np.array_equal(pnm.read_pbm(path), cells)

def test_pbm_comments_inside_the_raster(tmp_path):
    path = tmp_path / 'commented.pbm'
    path.write_text('P1\n2 2\n1 0 # row 1 of 10\n# 1111\n0 1\n')
    assert np.array_equal(pnm.read_pbm(str(path)), [[1, 0], [0, 1]])

def test_plain_pgm_comments_inside_the_raster(tmp_path):
    path = tmp_path / 'commented.pgm'
    path.write_text('P2\n2 1\n4\n# 4 4\n0 4\n')
    assert np.array_equal(pnm.read_pgm(str(path)), [[0.0, 1.0]])

def test_pbm_truncated(tmp_path):
    path = tmp_path / 'short.pbm'
    path.write_text('P1\n3 3\n1 0 1\n')
    with pytest.raises(InvariantError):
        pnm.read_pbm(str(path))


# Configuration

def test_desk_defaults():
    cfg = lc.resolve_config()
    assert (cfg.image_size, cfg.mask_size, cfg.num_classes, cfg.per_class) == (24, 8, 10, 100)
    assert (cfg.epochs, cfg.batch_size, cfg.noise_std) == (50, 32, 0.15)
    assert cfg.method_name == 'LwoC'

def test_full_profile():
    cfg = lc.resolve_config('full')
    assert (cfg.epochs, cfg.batch_size, cfg.lr_initial, cfg.lr_decay_every) == (600, 128, 0.2, 100)
    assert (cfg.momentum, cfg.weight_decay) == (0.9, 5e-4)

def test_full_schedule_flag_pins_schedule():
    cfg = lc.resolve_config('desk', overrides={'full_schedule': True})
    assert cfg.epochs == 600 and cfg.lr_initial == 0.2

def test_full_schedule_on_a_direct_config():
    cfg = lc.TrainConfig(full_schedule=True)
    assert tuple(getattr(cfg, k) for k in lc.FULL_SCHEDULE) == tuple(lc.FULL_SCHEDULE.values())
    assert cfg.image_size == 24
    assert lc.TrainConfig(full_schedule=True, epochs=7, lr_initial=0.1).epochs == 7
    assert lc.TrainConfig(full_schedule=True, epochs=7, lr_initial=0.1).lr_initial == 0.1
    assert lc.TrainConfig().epochs == 50

def test_precedence(tmp_path):
    path = str(tmp_path / 'cfg.json')
    with open(path, 'w') as f:
        json.dump({'epochs': 7, 'alpha': 0.5}, f)
    cfg = lc.resolve_config('desk', path, {'epochs': 3, 'alpha': None})
    assert cfg.epochs == 3
    assert cfg.alpha == 0.5
    assert lc.resolve_config('full', path).epochs == 7

def test_unknown_config_keys(tmp_path):
    path = str(tmp_path / 'cfg.json')
    with open(path, 'w') as f:
        json.dump({'epoch': 7}, f)
    with pytest.raises(ConfigError):
        lc.resolve_config('desk', path)
    with pytest.raises(ConfigError):
        lc.resolve_config('desk', overrides={'lr': 0.1})
    with pytest.raises(ConfigError):
        lc.resolve_config('lab')

def test_fixed_pattern_rejects_hi_loss():
    with pytest.raises(ConfigError, match='learnable pattern'):
        lc.TrainConfig(pattern='pinhole', hi_kind='tv')

def test_invalid_values():
    with pytest.raises(ConfigError):
        lc.TrainConfig(mask_size=30, image_size=24)
    with pytest.raises(ConfigError):
        lc.TrainConfig(mask_mode='soft')
    with pytest.raises(ConfigError):
        lc.TrainConfig(lr_decay_factor=0.0)

def test_names_are_normalized():
    cfg = lc.TrainConfig(pattern='FullOpen')
    assert cfg.pattern == 'full-open'
    assert cfg.frozen_mask
    assert cfg.method_name == 'Full-open'
    assert lc.TrainConfig(hi_kind='RIP').method_name == 'LwC-RIP'

def test_output_root(monkeypatch):
    monkeypatch.delenv(lc.OUTPUT_ROOT_ENV, raising=False)
    assert lc.output_root() == 'runs'
    monkeypatch.setenv(lc.OUTPUT_ROOT_ENV, '/tmp/elsewhere')
    assert lc.output_root() == '/tmp/elsewhere'
