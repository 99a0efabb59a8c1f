"""Tests for `lenslesspy.report`."""

import json
import os

import numpy as np
import pandas as pd
import pytest

import lenslesspy.datasets as lds
import lenslesspy.masks as lm
import lenslesspy.report as rp
from lenslesspy.config import TrainConfig
from lenslesspy.exceptions import ConfigError, DatasetError, LenslessError


def test_default_grid_cardinality():
    grid = rp.ExperimentGrid.default((0, 1, 2))
    assert len(grid) == 24
    methods = sorted(set(c.method for c in grid.cells))
    assert methods == sorted(['Pinhole', 'Full-open', 'Random', 'LwoC',
                              'LwC-Sim', 'LwC-TV', 'LwC-Inv', 'LwC-RIP'])

def test_alpha_sweep_repeats_constrained_families():
    grid = rp.ExperimentGrid.default((0, 1), alphas=(0.5, 2.0))
    assert len(grid) == 4 * 2 + 4 * 2 * 2
    fixed = [c for c in grid.cells if c.hi == 'none']
    assert set(c.alpha for c in fixed) == {0.5}
    rip = [c for c in grid.cells if c.hi == 'rip']
    assert sorted((c.alpha, c.seed) for c in rip) == [(0.5, 0), (0.5, 1), (2.0, 0), (2.0, 1)]
    assert len(set(c.name for c in grid.cells)) == len(grid)

def test_median_table_per_alpha():
    rows = [('Pinhole', 1.0, 0, 0.9), ('Pinhole', 1.0, 1, 0.7), ('LwC-RIP', 1.0, 0, 0.5),
            ('LwC-RIP', 3.0, 0, 0.2), ('LwC-RIP', 3.0, 1, 0.4)]
    summary = pd.DataFrame([{'method': m, 'alpha': a, 'seed': s, 'top1': t, 'auc_rip': t,
                             'mean_blur': t, 'aperture_ratio': t, 'status': 'complete'}
                            for m, a, s, t in rows])
    medians = rp.median_table(summary)
    assert list(medians.index) == [('Pinhole', 1.0), ('LwC-RIP', 1.0), ('LwC-RIP', 3.0)]
    assert medians.loc[('Pinhole', 1.0), 'top1'] == pytest.approx(0.8)
    assert medians.loc[('LwC-RIP', 3.0), 'top1'] == pytest.approx(0.3)
    at3 = rp.medians_at(medians, 3.0)
    assert list(at3.index) == ['Pinhole', 'LwC-RIP']
    assert at3.loc['LwC-RIP', 'top1'] == pytest.approx(0.3)
    assert at3.loc['Pinhole', 'top1'] == pytest.approx(0.8)

def test_grid_cells_unique():
    with pytest.raises(ConfigError):
        rp.ExperimentGrid([('learned', 'rip', 1.0, 0), ('learned', 'rip', 1.0, 0)])
    with pytest.raises(ConfigError):
        rp.ExperimentGrid([])

def test_cell_names():
    assert rp.GridCell('learned', 'rip', 1.0, 2).name == 'lwc-rip-a1-s2'
    assert rp.GridCell('full-open', 'none', 0.5, 0).name == 'full-open-a0.5-s0'

def test_evaluate_mask(rng):
    images = rng.random((6, 16, 16))
    metrics, curve, blur = rp.evaluate_mask(lm.make_pinhole(4), images)
    assert metrics['auc_rip'] == pytest.approx(1.0, abs=1e-9)
    assert metrics['area_ratio'] == 1.0 / 16
    assert metrics['coded_ratio_text'] == 4.0
    assert len(blur.scores) == 6
    small, _, no_blur = rp.evaluate_mask(lm.make_pinhole(2), rng.random((2, 6, 6)))
    assert no_blur is None and np.isnan(small['mean_blur'])
    with pytest.raises(DatasetError):
        rp.evaluate_mask(lm.make_pinhole(2), np.zeros((0, 6, 6)))

def test_manifest_is_written_once(tmp_path):
    manifest = rp.RunManifest(config={'seed': 1}, seed=1, outputs=rp.run_outputs())
    manifest.write(str(tmp_path))
    assert rp.RunManifest.read(str(tmp_path)).seed == 1
    with pytest.raises(LenslessError):
        manifest.write(str(tmp_path))

def test_run_training_writes_run_directory(tiny_cfg, tmp_path):
    run_dir = str(tmp_path / 'run')
    metrics = rp.run_training(tiny_cfg, run_dir)
    for name in rp.run_outputs().values():
        assert os.path.exists(os.path.join(run_dir, name)), name
    assert rp.read_status(run_dir)['status'] == 'complete'
    with open(os.path.join(run_dir, 'metrics.json')) as f:
        on_disk = json.load(f)
    for key in ('top1', 'auc_rip', 'mean_blur', 'aperture_ratio', 'best_epoch', 'mask_id'):
        assert on_disk[key] == metrics[key]
    with open(os.path.join(run_dir, 'config.json')) as f:
        assert json.load(f) == tiny_cfg.to_dict()
    history = pd.read_csv(os.path.join(run_dir, 'history.csv'), float_precision='round_trip')
    assert metrics['top1'] == history['test_top1'].max()
    assert metrics['method'] == 'LwoC'

def test_run_training_marks_failures(tiny_cfg, tmp_path):
    run_dir = str(tmp_path / 'run')
    wrong_size = lds.gen_synthetic(3, 6, 10, seed=0)
    with pytest.raises(DatasetError):
        rp.run_training(tiny_cfg, run_dir, wrong_size)
    status = rp.read_status(run_dir)
    assert status['status'] == 'failed'
    assert 'DatasetError' in status['error']
    assert os.path.exists(os.path.join(run_dir, 'manifest.json'))

def test_run_grid_summary(tiny_cfg, tmp_path):
    grid = rp.ExperimentGrid([('pinhole', 'none', 1.0, 0), ('learned', 'rip', 1.0, 0),
                              ('learned', 'tv', 1.0, 0)])
    out = str(tmp_path / 'grid')
    summary = rp.run_grid(grid, tiny_cfg, out)
    assert list(summary['status']) == ['complete'] * 3
    assert list(summary.columns[:8]) == ['pattern', 'hi', 'alpha', 'seed', 'top1', 'auc_rip',
                                         'mean_blur', 'aperture_ratio']
    on_disk = rp.read_summary(os.path.join(out, 'summary.csv'))
    for _, row in on_disk.iterrows():
        with open(os.path.join(row['run_dir'], 'metrics.json')) as f:
            metrics = json.load(f)
        for key in ('top1', 'auc_rip', 'mean_blur', 'aperture_ratio'):
            assert row[key] == metrics[key]
    medians = pd.read_csv(os.path.join(out, 'medians.csv'), index_col=[0, 1])
    assert list(medians.index.names) == ['method', 'alpha']
    assert list(medians.index) == [('Pinhole', 1.0), ('LwC-TV', 1.0), ('LwC-RIP', 1.0)]

def test_run_grid_records_failed_cells(tiny_cfg, tmp_path):
    grid = rp.ExperimentGrid([('pinhole', 'none', 1.0, 0), ('learned', 'none', 1.0, 1)])
    out = tmp_path / 'grid'
    #- an existing manifest makes the second cell fail
    blocked = out / rp.GridCell('learned', 'none', 1.0, 1).name
    blocked.mkdir(parents=True)
    (blocked / 'manifest.json').write_text('{}')
    summary = rp.run_grid(grid, tiny_cfg, str(out))
    assert list(summary['status']) == ['complete', 'failed']
    assert 'already exists' in summary.loc[1, 'error']

def test_grid_with_workers_matches_serial(tiny_cfg, tmp_path):
    grid = rp.ExperimentGrid([('random', 'none', 1.0, 0), ('learned', 'inv', 1.0, 0)])
    serial = rp.run_grid(grid, tiny_cfg, str(tmp_path / 'serial'))
    pooled = rp.run_grid(grid, tiny_cfg, str(tmp_path / 'pooled'), workers=2)
    for key in ('top1', 'auc_rip', 'mean_blur', 'aperture_ratio'):
        assert np.array_equal(serial[key].to_numpy(), pooled[key].to_numpy())

def test_plots(tiny_cfg, tmp_path):
    pytest.importorskip('matplotlib')
    grid = rp.ExperimentGrid([('pinhole', 'none', 1.0, 0), ('full-open', 'none', 1.0, 0)])
    out = tmp_path / 'grid'
    rp.run_grid(grid, tiny_cfg, str(out), plots=True)
    assert (out / 'rip_curves.svg').exists()
    assert (out / 'tradeoff.svg').exists()


# Desk-scale orderings

@pytest.fixture(scope='module')
def desk_summary(tmp_path_factory):
    out = str(tmp_path_factory.mktemp('desk-grid'))
    return rp.run_grid(rp.ExperimentGrid.default((0, 1, 2)), TrainConfig(), out, workers=os.cpu_count() or 1)

@pytest.mark.slow
def test_desk_accuracy_ordering(desk_summary):
    medians = rp.medians_at(rp.median_table(desk_summary), 1.0)
    assert medians.loc['Pinhole', 'top1'] >= medians.loc['LwoC', 'top1']
    assert medians.loc['LwoC', 'top1'] > medians.loc['Random', 'top1']
    assert medians.loc['LwoC', 'top1'] - medians.loc['Full-open', 'top1'] >= 0.10

@pytest.mark.slow
def test_desk_invertibility_ordering(desk_summary):
    medians = rp.medians_at(rp.median_table(desk_summary), 1.0)
    assert medians.loc['LwC-RIP', 'auc_rip'] < medians.loc['LwoC', 'auc_rip']
    assert medians.loc['LwC-Inv', 'auc_rip'] < medians.loc['LwoC', 'auc_rip']
