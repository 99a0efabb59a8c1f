"""
    Joint training of the coded mask and the recognizer under

        L = L_rec(R(H * x), b) + alpha * L_hi(H)

    with the RIP loss (a negative energy ratio, to be maximized) entering
    with a minus sign, so the minimized objective adds alpha times the
    summed energy ratio. History columns report L_hi as defined.

    The mask is parameterized by logits w. In 'relaxed' mode the capture
    path convolves with sigmoid(w); in 'hard' mode it convolves with the
    binarized mask. Both backpropagate to w through the straight-through
    estimator. Fixed patterns (pinhole, full-open, random) freeze the mask
    and train only the recognizer.
"""

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

import lenslesspy.datasets as lds
import lenslesspy.imaging as li
import lenslesspy.losses as ll
import lenslesspy.masks as lm
import lenslesspy.recognizer as lr
import lenslesspy.utils as lu
from lenslesspy.config import TrainConfig
from lenslesspy.exceptions import ConfigError, DatasetError, TrainingDivergedError

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = [
    'epoch', 'lr', 'rec_loss', 'hi_loss', 'hi_loss_sum', 'total', 'alpha', 'hi_kind',
    'train_top1', 'test_top1', 'test_top1_relaxed', 'aperture_ratio',
]


@dataclass
class TrainedModel:
    """
        Selected solution of a run: the epoch with the best test top-1 under
        the binarized mask.
    """

    mask: li.CodedMask
    logits: lm.MaskLogits
    params: lr.RecognizerParams
    config: TrainConfig
    history: pd.DataFrame = field(default=None)
    best_epoch: int = 0

    @property
    def best_top1(self):
        if self.history is None or self.history.empty:
            return float('nan')
        return float(self.history['test_top1'].max())

    def mask_array(self, use_binary_mask=True):
        """ The m×m mask fed to capture: binary cells, or sigmoid(w) for learned masks in relaxed mode. """
        if use_binary_mask or self.config.frozen_mask or self.config.mask_mode == 'hard':
            return self.mask.cells.astype(np.float64)
        return self.logits.relaxed()

    def measure(self, xs, use_binary_mask=True, rng=None):
        return measure(xs, self.mask_array(use_binary_mask), self.config, rng)


def lr_schedule(epoch, cfg):
    """ Step decay: lr_initial * lr_decay_factor ** (epoch // lr_decay_every). """
    if epoch < 0:
        raise ConfigError('epoch must be >= 0')
    return cfg.lr_initial * cfg.lr_decay_factor ** (epoch // cfg.lr_decay_every)

def measure(xs, h, cfg, rng=None):
    """
        Captures an (B, n, n) stack through mask array h and prepares the
        recognizer input. Returns (inputs, y, contrast_cache).
    """
    noise = cfg.noise_std if rng is not None else 0.0
    y = li.capture_array(xs, h, cfg.normalize_mask, noise, rng)
    cache = None
    z = y
    if cfg.contrast_normalize:
        z, cache = lr.contrast_normalize(y)
    return z.reshape(len(xs), -1), y, cache


class Trainer:
    """ Holds the mutable state of one training run: logits, recognizer and optimizer. """

    def __init__(self, cfg, num_classes=None, dump_path=None):
        cfg.validate()
        self.cfg = cfg
        self.dump_path = dump_path
        self.weights = ll.LossWeights(cfg.alpha, cfg.hi_kind)
        seeds = np.random.SeedSequence(cfg.seed).spawn(4)
        self.rng = np.random.default_rng(seeds[0])
        self.noise_rng = np.random.default_rng(seeds[3])
        num_classes = num_classes or cfg.num_classes
        m, n = cfg.mask_size, cfg.image_size
        if cfg.frozen_mask:
            self.fixed_mask = lm.make_mask(cfg.pattern, m, cfg.random_ratio, cfg.seed)
            self.logits = lm.logits_from_mask(self.fixed_mask)
        else:
            self.fixed_mask = None
            self.logits = lm.init_logits(m, seeds[1], cfg.init_logit_range)
        self.params = lr.RecognizerParams.initialize(n * n, cfg.hidden, num_classes, seeds[2])
        self.recognizer = lr.Recognizer(self.params)
        arrays = self.params.arrays()
        scales = [1.0] * len(arrays)
        if not cfg.frozen_mask:
            arrays.append(self.logits.logits)
            scales.append(cfg.mask_lr_scale)
        self.lr_scales = scales
        self.optimizer = lr.SGD(arrays, cfg.momentum, cfg.weight_decay)

    def mask_array(self, use_binary_mask=False):
        if self.fixed_mask is not None:
            return self.fixed_mask.cells.astype(np.float64)
        if use_binary_mask or self.cfg.mask_mode == 'hard':
            return lm.binarize(self.logits).cells.astype(np.float64)
        return self.logits.relaxed()

    def loss_and_grad(self, xs, labels, rng=None):
        """
            Forward and backward pass on one batch, without updating.

            Returns (terms, param_grads, logit_grad) where terms holds rec,
            hi (batch-reduced), hi_sum and total values. Logit_grad is None for
            frozen masks.
        """
        cfg = self.cfg
        h = self.mask_array()
        inputs, _, cache = measure(xs, h, cfg, rng)
        logits_out = self.recognizer.forward(inputs)
        rec_value, grad_logits = lr.cross_entropy(logits_out, labels)
        param_grads, grad_input = self.recognizer.backward(grad_logits)
        terms = {'rec': rec_value, 'hi': 0.0, 'hi_sum': 0.0, 'total': rec_value}
        if self.fixed_mask is not None:
            return terms, param_grads, None

        grad_y = grad_input.reshape(xs.shape)
        if cache is not None:
            grad_y = lr.contrast_normalize_backward(cache, grad_y)
        grad_kernel = li.circular_correlate(xs, grad_y, h.shape[0])
        rec = ll.LossValue(rec_value, li.kernel_backward(h, grad_kernel, cfg.normalize_mask))
        capture_cfg = li.CaptureConfig(cfg.normalize_mask)
        hi = ll.hi_loss(self.weights.hi_kind, h, xs, capture_cfg, cfg.epsilon)
        terms['hi_sum'] = hi.value
        if self.weights.hi_kind.batch_summed and cfg.hi_reduction == 'mean':
            hi = hi.scaled(1.0 / len(xs))
        total = ll.total_loss(rec, hi.scaled(self.weights.hi_kind.objective_sign), self.weights)
        terms['hi'] = hi.value
        terms['total'] = total.value
        return terms, param_grads, lm.ste_backward(self.logits, total.grad_mask)

    def step(self, xs, labels, lr_value, epoch=None, step=None):
        noise_rng = self.noise_rng if self.cfg.noise_std > 0.0 else None
        terms, param_grads, logit_grad = self.loss_and_grad(xs, labels, noise_rng)
        grads = list(param_grads)
        if logit_grad is not None:
            grads.append(logit_grad)
        if not math.isfinite(terms['total']) or not all(np.all(np.isfinite(g)) for g in grads):
            self._diverged(terms, lr_value, epoch, step)
        self.optimizer.step(grads, lr_value, self.lr_scales)
        return terms

    def _diverged(self, terms, lr_value, epoch, step):
        state = {
            'epoch': epoch,
            'step': step,
            'lr': lr_value,
            'terms': {k: float(v) for k, v in terms.items()},
            'logits_min': float(np.min(self.logits.logits)),
            'logits_max': float(np.max(self.logits.logits)),
            'weight_norms': [float(np.linalg.norm(w)) for w in self.params.weights],
            'config': self.cfg.to_dict(),
        }
        if self.dump_path:
            lu.json_dump(state, self.dump_path)
        logger.error('non-finite loss at epoch %s step %s: %s', epoch, step, state['terms'])
        raise TrainingDivergedError('training diverged at epoch %s step %s' % (epoch, step),
                                    state=state, dump_path=self.dump_path)

    def top1(self, ds, use_binary_mask=False):
        inputs, _, _ = measure(ds.images, self.mask_array(use_binary_mask), self.cfg, self._eval_rng())
        logits_out = lr.Recognizer(self.params).forward(inputs)
        return float(np.mean(lr.predict(logits_out) == ds.labels))

    def _eval_rng(self):
        if self.cfg.noise_std > 0.0:
            return np.random.default_rng(self.cfg.seed)
        return None

    def snapshot(self):
        return lm.MaskLogits(self.logits.logits.copy()), self.params.copy()


def train(dataset, cfg, test_dataset=None, dump_path=None):
    """
        Trains mask and recognizer; returns the best-epoch TrainedModel.

        Without a test_dataset, dataset is split with cfg.train_fraction and
        a split seeded by cfg.data_seed.
    """
    dataset.check_classes()
    if test_dataset is None:
        train_ds, test_ds = lds.split(dataset, lds.SplitSpec(cfg.train_fraction, cfg.data_seed))
    else:
        train_ds, test_ds = dataset, test_dataset
    if train_ds.size != cfg.image_size:
        raise DatasetError('dataset images are %d×%d but image_size is %d'
                           % (train_ds.size, train_ds.size, cfg.image_size))
    trainer = Trainer(cfg, train_ds.num_classes, dump_path)
    if cfg.frozen_mask:
        logger.info('training %s with a frozen %s mask', cfg.method_name, cfg.pattern)
    rows = []
    best = None
    n_train = len(train_ds)
    for epoch in range(cfg.epochs):
        lr_value = lr_schedule(epoch, cfg)
        order = trainer.rng.permutation(n_train)
        sums = {'rec': 0.0, 'hi': 0.0, 'hi_sum': 0.0, 'total': 0.0}
        batches = 0
        for step, start in enumerate(range(0, n_train, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            xs = lds.augment_batch(train_ds.images[idx], trainer.rng, cfg.pad, cfg.flip)
            terms = trainer.step(xs, train_ds.labels[idx], lr_value, epoch, step)
            for k in sums:
                sums[k] += terms[k]
            batches += 1
        row = {
            'epoch': epoch,
            'lr': lr_value,
            'rec_loss': sums['rec'] / batches,
            'hi_loss': sums['hi'] / batches,
            'hi_loss_sum': sums['hi_sum'] / batches,
            'total': sums['total'] / batches,
            'alpha': cfg.alpha,
            'hi_kind': cfg.hi_kind,
            'train_top1': trainer.top1(train_ds),
            'test_top1': trainer.top1(test_ds, use_binary_mask=True),
            'test_top1_relaxed': trainer.top1(test_ds),
            'aperture_ratio': lm.aperture_ratio(lm.binarize(trainer.logits)),
        }
        rows.append(row)
        logger.info('epoch %d lr %.4g rec %.4f hi %.4f total %.4f train %.3f test %.3f aperture %.3f',
                    epoch, lr_value, row['rec_loss'], row['hi_loss'], row['total'],
                    row['train_top1'], row['test_top1'], row['aperture_ratio'])
        if best is None or row['test_top1'] > best[0]:
            best = (row['test_top1'], epoch) + trainer.snapshot()

    _, best_epoch, best_logits, best_params = best
    if cfg.frozen_mask:
        mask = trainer.fixed_mask
    else:
        mask = lm.binarize(best_logits, name='learned-%s-s%d' % (cfg.hi_kind, cfg.seed))
    history = pd.DataFrame(rows, columns=HISTORY_COLUMNS)
    return TrainedModel(mask=mask, logits=best_logits, params=best_params, config=cfg,
                        history=history, best_epoch=best_epoch)

def evaluate_top1(model, dataset, use_binary_mask=True):
    """ Fraction of samples whose argmax logit equals the label. """
    if dataset is None or len(dataset) == 0:
        raise DatasetError('cannot evaluate on an empty dataset')
    rng = np.random.default_rng(model.config.seed) if model.config.noise_std > 0.0 else None
    inputs, _, _ = model.measure(dataset.images, use_binary_mask, rng)
    logits_out = lr.Recognizer(model.params).forward(inputs)
    return float(np.mean(lr.predict(logits_out) == dataset.labels))

def save_model(model, run_dir, extra_header=None):
    """ Writes history.csv, mask_final.pbm, mask_relaxed.f64, mask_logits.f64 and checkpoint_best.bin. """
    lu.mkdir_p(run_dir)
    model.history.to_csv(os.path.join(run_dir, 'history.csv'), index=False)
    lm.save_mask(model.mask, os.path.join(run_dir, 'mask_final.pbm'))
    m = model.mask.m
    lu.write_f64(os.path.join(run_dir, 'mask_relaxed.f64'), model.mask_array(use_binary_mask=False), m=m)
    lu.write_f64(os.path.join(run_dir, 'mask_logits.f64'), model.logits.logits, m=m)
    header = {
        'epoch': model.best_epoch,
        'seed': model.config.seed,
        'architecture': 'flatten-' + '-'.join('dense%d' % s for s in model.params.layer_sizes[1:]),
        'normalize_mask': model.config.normalize_mask,
        'contrast_normalize': model.config.contrast_normalize,
        'image_size': model.config.image_size,
        'mask_size': model.config.mask_size,
        'noise_std': model.config.noise_std,
    }
    header.update(extra_header or {})
    lr.save_checkpoint(os.path.join(run_dir, 'checkpoint_best.bin'), model.params, **header)
