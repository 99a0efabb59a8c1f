"""
    Run directories, experiment grids and summary tables.

    A run directory holds:

        manifest.json      written before training, never rewritten
        run_status.json    running / complete / failed plus timings
        config.json        the resolved TrainConfig
        history.csv        one row per epoch
        mask_final.pbm     best-epoch binary mask (+ mask_final.json sidecar)
        mask_relaxed.f64   sigmoid(w) (binary cells for frozen masks)
        mask_logits.f64
        checkpoint_best.bin
        rip_curve.csv      delta, satisfaction
        blur.csv           image_id, score
        metrics.json       top1, auc_rip, mean_blur, aperture_ratio, ...

    A grid directory holds one run directory per cell plus summary.csv and
    medians.csv (one row per method and alpha).
"""

import dataclasses
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

import lenslesspy
import lenslesspy.datasets as lds
import lenslesspy.imaging as li
import lenslesspy.masks as lm
import lenslesspy.metrics as lme
import lenslesspy.recognizer as lr
import lenslesspy.trainer as lt
import lenslesspy.utils as lu
from lenslesspy.config import TrainConfig
from lenslesspy.exceptions import ConfigError, DatasetError, LenslessError
from lenslesspy.losses import HiKind
from lenslesspy.masks import MaskKind

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
STATUS_NAME = 'run_status.json'
METRICS_NAME = 'metrics.json'

SUMMARY_COLUMNS = [
    'pattern', 'hi', 'alpha', 'seed', 'top1', 'auc_rip', 'mean_blur', 'aperture_ratio',
    'method', 'area_ratio', 'best_epoch', 'status', 'error', 'run_dir',
]
MEDIAN_COLUMNS = ['top1', 'auc_rip', 'mean_blur', 'aperture_ratio']
MEDIAN_INDEX = ['method', 'alpha']

#- Benchmark families in report order: (pattern, hi)
FAMILIES = [
    ('pinhole', 'none'),
    ('full-open', 'none'),
    ('random', 'none'),
    ('learned', 'none'),
    ('learned', 'sim'),
    ('learned', 'tv'),
    ('learned', 'inv'),
    ('learned', 'rip'),
]


@dataclass
class RunManifest:
    """ Identity of a run. Written once before training starts. """

    config: dict
    seed: int
    outputs: dict
    build_id: str = 'lenslesspy-%s' % lenslesspy.__version__
    created: str = field(default_factory=lu.utc_timestamp)

    def write(self, run_dir):
        path = os.path.join(run_dir, MANIFEST_NAME)
        if os.path.exists(path):
            raise LenslessError('%s already exists; run directories are not reused' % path)
        lu.json_dump(dataclasses.asdict(self), path)
        return path

    @classmethod
    def read(cls, run_dir):
        data = lu.json_load(os.path.join(run_dir, MANIFEST_NAME))
        if data is None:
            raise LenslessError('no manifest in %s' % run_dir)
        return cls(**data)


def write_status(run_dir, status, **info):
    info['status'] = status
    info['updated'] = lu.utc_timestamp()
    lu.json_dump(info, os.path.join(run_dir, STATUS_NAME))

def read_status(run_dir):
    return lu.json_load(os.path.join(run_dir, STATUS_NAME))

def run_outputs():
    return {
        'config': 'config.json',
        'history': 'history.csv',
        'mask': 'mask_final.pbm',
        'mask_relaxed': 'mask_relaxed.f64',
        'mask_logits': 'mask_logits.f64',
        'checkpoint': 'checkpoint_best.bin',
        'rip_curve': 'rip_curve.csv',
        'blur': 'blur.csv',
        'metrics': METRICS_NAME,
        'status': STATUS_NAME,
    }

# Mask evaluation

def evaluate_mask(h, images, normalize_mask=True, epsilon=li.EPSILON, image_ids=None):
    """
        Privacy metrics of a binary mask over an (N, n, n) stack of scenes.

        Returns (metrics, curve, blur) where blur is None when the images are
        too small for the blur filter.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3 or len(images) == 0:
        raise DatasetError('mask evaluation needs a non-empty (N, n, n) image stack')
    n = images.shape[-1]
    if h.m > n:
        raise ConfigError('mask side %d exceeds image side %d' % (h.m, n))
    cfg = li.CaptureConfig(normalize_mask=normalize_mask)
    curve = lme.rip_curve(h, images, cfg=cfg, epsilon=epsilon)
    blur = None
    mean_blur = float('nan')
    if n > lme.BLUR_TAPS:
        ys = li.capture_array(images, h.cells, normalize_mask)
        blur = lme.blur_report(ys, mask_id=h.mask_id, image_ids=image_ids)
        mean_blur = blur.mean
    else:
        logger.warning('images of side %d are too small for the blur metric', n)
    metrics = {
        'mask_id': h.mask_id,
        'auc_rip': curve.auc,
        'mean_blur': mean_blur,
        'aperture_ratio': lm.aperture_ratio(h),
        'area_ratio': li.area_ratio(n, h.m),
        'coded_ratio_text': n / float(h.m),
        'normalize_mask': normalize_mask,
        'num_images': int(len(images)),
    }
    return metrics, curve, blur

def write_mask_metrics(out_dir, metrics, curve, blur):
    lu.mkdir_p(out_dir)
    lme.write_rip_csv(curve, os.path.join(out_dir, 'rip_curve.csv'))
    if blur is not None:
        lme.write_blur_csv(blur, os.path.join(out_dir, 'blur.csv'))
    lu.json_dump(metrics, os.path.join(out_dir, METRICS_NAME))

def checkpoint_top1(mask, checkpoint_path, dataset):
    """ Top-1 of a saved recognizer behind a binary mask, using the capture settings in its header. """
    params, header = lr.load_checkpoint(checkpoint_path)
    if params.num_classes != dataset.num_classes:
        raise DatasetError('checkpoint has %d classes but the dataset has %d'
                           % (params.num_classes, dataset.num_classes))
    if dataset.size != header['image_size'] or mask.m != header['mask_size']:
        raise DatasetError('checkpoint expects %d×%d images and a %d×%d mask'
                           % (header['image_size'], header['image_size'], header['mask_size'], header['mask_size']))
    cfg = TrainConfig(image_size=header['image_size'], mask_size=header['mask_size'],
                      num_classes=params.num_classes, normalize_mask=header['normalize_mask'],
                      contrast_normalize=header['contrast_normalize'], pattern='learned',
                      noise_std=header.get('noise_std', 0.0), seed=header.get('seed', 0))
    model = lt.TrainedModel(mask=mask, logits=lm.logits_from_mask(mask), params=params, config=cfg)
    return lt.evaluate_top1(model, dataset, use_binary_mask=True)

# Single runs

def default_dataset(cfg):
    return lds.gen_synthetic(cfg.num_classes, cfg.per_class, cfg.image_size, cfg.data_seed)

def run_training(cfg, run_dir, dataset=None, test_dataset=None):
    """
        Trains one configuration and writes its run directory. Returns the
        metrics dict also written to metrics.json.

        Without a dataset the synthetic glyph set of cfg is generated. Without
        a test_dataset the dataset is split by cfg.train_fraction, seeded by
        cfg.data_seed.
    """
    t_start = time.time()
    lu.mkdir_p(run_dir)
    manifest = RunManifest(config=cfg.to_dict(), seed=cfg.seed, outputs=run_outputs())
    manifest.write(run_dir)
    lu.json_dump(cfg.to_dict(), os.path.join(run_dir, 'config.json'))
    write_status(run_dir, 'running', started=manifest.created)
    try:
        if dataset is None:
            dataset = default_dataset(cfg)
        if test_dataset is None:
            dataset.check_classes()
            train_ds, test_ds = lds.split(dataset, lds.SplitSpec(cfg.train_fraction, cfg.data_seed))
        else:
            train_ds, test_ds = dataset, test_dataset
        model = lt.train(train_ds, cfg, test_dataset=test_ds,
                         dump_path=os.path.join(run_dir, 'divergence_dump.json'))
        t_trained = time.time()
        lt.save_model(model, run_dir, {'method': cfg.method_name})
        metrics, curve, blur = evaluate_mask(model.mask, test_ds.images, True, cfg.epsilon)
        metrics.update({
            'method': cfg.method_name,
            'pattern': cfg.pattern,
            'hi': cfg.hi_kind,
            'alpha': cfg.alpha,
            'seed': cfg.seed,
            'top1': lt.evaluate_top1(model, test_ds, use_binary_mask=True),
            'top1_relaxed': lt.evaluate_top1(model, test_ds, use_binary_mask=False),
            'best_epoch': model.best_epoch,
        })
        write_mask_metrics(run_dir, metrics, curve, blur)
    except Exception as exc:
        write_status(run_dir, 'failed', error='%s: %s' % (type(exc).__name__, exc),
                     elapsed_seconds=time.time() - t_start)
        raise
    t_end = time.time()
    write_status(run_dir, 'complete', train_seconds=t_trained - t_start,
                 eval_seconds=t_end - t_trained, elapsed_seconds=t_end - t_start)
    logger.info('%s seed %d: top1 %.3f auc_rip %.4f mean_blur %.4f aperture %.3f',
                cfg.method_name, cfg.seed, metrics['top1'], metrics['auc_rip'],
                metrics['mean_blur'], metrics['aperture_ratio'])
    return metrics

# Grids

@dataclass(frozen=True)
class GridCell:
    pattern: str
    hi: str
    alpha: float
    seed: int

    @property
    def method(self):
        if MaskKind.from_name(self.pattern) is MaskKind.LEARNED:
            return HiKind.from_name(self.hi).method_name
        return {'pinhole': 'Pinhole', 'full-open': 'Full-open', 'random': 'Random'}[self.pattern]

    @property
    def name(self):
        return '%s-a%g-s%d' % (self.method.lower(), self.alpha, self.seed)


@dataclass
class ExperimentGrid:
    """ Unique (pattern, hi, alpha, seed) cells sharing one dataset (dataset_root, or synthetic when None). """

    cells: list
    dataset_root: str = None

    def __post_init__(self):
        self.cells = [c if isinstance(c, GridCell) else GridCell(*c) for c in self.cells]
        if len(set(self.cells)) != len(self.cells):
            raise ConfigError('experiment grid cells must be unique')
        if not self.cells:
            raise ConfigError('experiment grid is empty')

    @classmethod
    def default(cls, seeds=(0, 1, 2), alphas=(1.0,), dataset_root=None):
        """
            The eight benchmark families × seeds. Families with a hi loss are
            repeated for every alpha; the others do not depend on alpha and run
            once, recorded at the first alpha.
        """
        alphas = [float(a) for a in np.atleast_1d(alphas)]
        if not alphas:
            raise ConfigError('alpha sweep is empty')
        cells = []
        for pattern, hi in FAMILIES:
            for alpha in (alphas if HiKind.from_name(hi) is not HiKind.NONE else alphas[:1]):
                cells.extend(GridCell(pattern, hi, alpha, int(seed)) for seed in seeds)
        return cls(cells, dataset_root)

    def __len__(self):
        return len(self.cells)

    def cell_config(self, cell, base_cfg):
        return dataclasses.replace(base_cfg, pattern=cell.pattern, hi_kind=cell.hi,
                                   alpha=cell.alpha, seed=cell.seed)

    def load_dataset(self, base_cfg):
        if self.dataset_root:
            return lds.load_dataset(self.dataset_root, base_cfg.image_size)
        return default_dataset(base_cfg)


def _run_cell(args):
    """ Worker entry point: runs one cell and returns its summary row, never raising. """
    cell, cfg, run_dir, dataset = args
    row = {'pattern': cell.pattern, 'hi': cell.hi, 'alpha': cell.alpha, 'seed': cell.seed,
           'method': cell.method, 'run_dir': run_dir, 'error': ''}
    try:
        metrics = run_training(cfg, run_dir, dataset)
    except Exception as exc:
        logger.error('grid cell %s failed: %s', cell.name, exc)
        row.update({'status': 'failed', 'error': '%s: %s' % (type(exc).__name__, exc)})
        return row
    row['status'] = 'complete'
    for key in ('top1', 'auc_rip', 'mean_blur', 'aperture_ratio', 'area_ratio', 'best_epoch'):
        row[key] = metrics[key]
    return row

def run_grid(grid, base_cfg, out_dir, workers=1, plots=False):
    """
        Runs every cell of grid into out_dir/<cell name>/ and writes
        summary.csv and medians.csv. Returns the summary DataFrame; failed
        cells appear with status 'failed'.
    """
    lu.mkdir_p(out_dir)
    dataset = grid.load_dataset(base_cfg)
    jobs = [(cell, grid.cell_config(cell, base_cfg), os.path.join(out_dir, cell.name), dataset)
            for cell in grid.cells]
    logger.info('running %d grid cells with %d worker(s)', len(jobs), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]
    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    summary.to_csv(os.path.join(out_dir, 'summary.csv'), index=False)
    medians = median_table(summary)
    medians.to_csv(os.path.join(out_dir, 'medians.csv'))
    if plots:
        plot_rip_curves(summary, os.path.join(out_dir, 'rip_curves.svg'))
        plot_tradeoff(medians, os.path.join(out_dir, 'tradeoff.svg'))
    return summary

def read_summary(path):
    return pd.read_csv(path, float_precision='round_trip', keep_default_na=False,
                       na_values=['', 'nan', 'NaN'])

def median_table(summary):
    """
        Median over seeds of each metric per (method, alpha), methods in
        benchmark order and alphas ascending.
    """
    done = summary[summary['status'] == 'complete']
    if done.empty:
        index = pd.MultiIndex.from_arrays([[], []], names=MEDIAN_INDEX)
        return pd.DataFrame(columns=MEDIAN_COLUMNS, index=index)
    medians = done.groupby(MEDIAN_INDEX)[MEDIAN_COLUMNS].median()
    rank = {m: i for i, m in enumerate(_method_order())}
    order = sorted(medians.index, key=lambda key: (rank.get(key[0], len(rank)), key[1]))
    return medians.loc[order]

def medians_at(medians, alpha):
    """
        Per-method rows of a median table for one alpha, with the
        alpha-free families taken from wherever they ran.
    """
    rows = {}
    for (method, a), row in medians.iterrows():
        if a == alpha or (method not in rows and method in _fixed_methods()):
            rows[method] = row
    return pd.DataFrame(list(rows.values()), index=pd.Index(list(rows), name='method'))

def _method_order():
    return [GridCell(p, h, 1.0, 0).method for p, h in FAMILIES]

def _fixed_methods():
    return [GridCell(p, h, 1.0, 0).method for p, h in FAMILIES if h == 'none']

# Plots

def _pyplot():
    import matplotlib
    matplotlib.use('Agg')
    from matplotlib import pyplot as plt
    return plt

def plot_rip_curves(summary, path):
    """ One RIP curve per completed cell, read back from each rip_curve.csv. """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for _, row in summary[summary['status'] == 'complete'].iterrows():
        curve = lme.read_rip_csv(os.path.join(row['run_dir'], 'rip_curve.csv'))
        label = '%s a%g s%d' % (row['method'], row['alpha'], row['seed'])
        ax.plot(curve.delta_grid, curve.satisfaction, label=label)
    ax.set_xlabel('isometric constant delta')
    ax.set_ylabel('fraction satisfying RIP')
    ax.legend(fontsize='x-small', ncol=2)
    fig.savefig(path, format='svg', bbox_inches='tight')
    plt.close(fig)

def plot_tradeoff(medians, path):
    """ Median top-1 against median AUC-RIP per method and alpha. """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    for (method, alpha), row in medians.iterrows():
        ax.scatter(row['auc_rip'], row['top1'])
        ax.annotate('%s a%g' % (method, alpha), (row['auc_rip'], row['top1']), fontsize='small')
    ax.set_xlabel('AUC-RIP (lower is more private)')
    ax.set_ylabel('top-1 accuracy')
    fig.savefig(path, format='svg', bbox_inches='tight')
    plt.close(fig)
