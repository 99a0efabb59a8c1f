# -*- coding: utf-8 -*-

"""Console script for lenslesspy."""
import functools
import logging
import os
import sys

import click
import numpy as np

import lenslesspy
import lenslesspy.datasets as lds
import lenslesspy.masks as lm
import lenslesspy.report as rp
import lenslesspy.utils as lu
from lenslesspy.config import DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_ENV, PROFILES, resolve_config
from lenslesspy.exceptions import LenslessError

logger = logging.getLogger(__name__)

PATTERNS = ['pinhole', 'full-open', 'random', 'learned']
HI_KINDS = ['none', 'sim', 'tv', 'inv', 'rip']
LOG_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]


def reports_errors(f):
    """ Turns library errors into a ClickException (message on stderr, exit status 1). """
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except LenslessError as exc:
            raise click.ClickException(str(exc))
    return wrapper

def _overrides(**kwargs):
    return {k: v for k, v in kwargs.items() if v is not None}

def _parse_list(value, kind, name):
    try:
        items = [kind(s) for s in value.split(',') if s.strip()]
    except ValueError:
        items = []
    if not items:
        raise click.BadParameter('must be a comma separated list of %ss, got %r' % (kind.__name__, value),
                                 param_hint=name)
    return items


@click.group()
@click.option('-v', '--verbose', count=True, help='-v for progress, -vv for debug output.')
@click.option('--output-root', envvar=OUTPUT_ROOT_ENV, default=DEFAULT_OUTPUT_ROOT, show_default=True,
              type=click.Path(file_okay=False), help='Root directory of run outputs.')
@click.version_option(lenslesspy.__version__)
@click.pass_context
def main(ctx, verbose, output_root):
    """Lensless coded-mask imaging: privacy-preserving mask learning and evaluation."""
    logging.basicConfig(level=LOG_LEVELS[min(verbose, 2)],
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    ctx.obj = {'output_root': output_root}


@main.command('gen-data')
@click.option('--classes', type=click.IntRange(min=2), default=10, show_default=True,
              help='Number of glyph classes (at least 2).')
@click.option('--per-class', type=click.IntRange(min=1), default=100, show_default=True)
@click.option('--size', type=click.IntRange(min=2), default=24, show_default=True, help='Image side n.')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), required=True)
@reports_errors
def gen_data(classes, per_class, size, seed, out_dir):
    """Generate the synthetic glyph dataset as <out>/<class>/<image>.pgm plus manifest.json."""
    ds = lds.gen_synthetic(classes, per_class, size, seed)
    manifest_path = lds.save_dataset(ds, out_dir)
    click.echo(manifest_path)


@main.command()
@click.option('--pattern', type=click.Choice(PATTERNS), default=None, help='Mask family [learned].')
@click.option('--hi', 'hi_kind', type=click.Choice(HI_KINDS), default=None,
              help='Human-imperceptible loss for learned masks [none].')
@click.option('--alpha', type=float, default=None, help='Weight of the hi loss [1.0].')
@click.option('--seed', type=int, default=None)
@click.option('--profile', type=click.Choice(sorted(PROFILES)), default='desk', show_default=True)
@click.option('--config', 'config_file', type=click.Path(dir_okay=False, exists=True), default=None,
              help='JSON file of TrainConfig values; flags take precedence.')
@click.option('--data', 'data_dir', type=click.Path(file_okay=False, exists=True), default=None,
              help='Dataset directory; the synthetic glyph set when omitted.')
@click.option('--epochs', type=int, default=None)
@click.option('--batch-size', type=int, default=None)
@click.option('--lr', 'lr_initial', type=float, default=None)
@click.option('--mask-mode', type=click.Choice(['relaxed', 'hard']), default=None)
@click.option('--noise-std', type=float, default=None)
@click.option('--data-seed', type=int, default=None)
@click.option('--run-dir', type=click.Path(file_okay=False), default=None,
              help='Run directory [<output-root>/<method>-a<alpha>-s<seed>].')
@click.pass_context
@reports_errors
def train(ctx, pattern, hi_kind, alpha, seed, profile, config_file, data_dir, epochs, batch_size,
          lr_initial, mask_mode, noise_std, data_seed, run_dir):
    """Train a mask and recognizer; writes a run directory with metrics.json."""
    if pattern not in (None, 'learned') and hi_kind not in (None, 'none'):
        raise click.UsageError('hi losses require a learnable pattern (got --pattern %s --hi %s)'
                               % (pattern, hi_kind))
    cfg = resolve_config(profile, config_file, _overrides(
        pattern=pattern, hi_kind=hi_kind, alpha=alpha, seed=seed, epochs=epochs,
        batch_size=batch_size, lr_initial=lr_initial, mask_mode=mask_mode,
        noise_std=noise_std, data_seed=data_seed))
    if run_dir is None:
        run_dir = os.path.join(ctx.obj['output_root'],
                               '%s-a%g-s%d' % (cfg.method_name.lower(), cfg.alpha, cfg.seed))
    dataset = lds.load_dataset(data_dir, cfg.image_size) if data_dir else None
    metrics = rp.run_training(cfg, run_dir, dataset)
    click.echo('%s top1=%.4f auc_rip=%.4f mean_blur=%.4f aperture_ratio=%.4f'
               % (cfg.method_name, metrics['top1'], metrics['auc_rip'], metrics['mean_blur'],
                  metrics['aperture_ratio']))
    click.echo(run_dir)


@main.command('eval')
@click.option('--mask', 'mask_path', type=click.Path(dir_okay=False, exists=True), required=True,
              help='Plain PBM mask file.')
@click.option('--data', 'data_dir', type=click.Path(file_okay=False, exists=True), default=None,
              help='Dataset directory; random textures when omitted.')
@click.option('--checkpoint', type=click.Path(dir_okay=False, exists=True), default=None,
              help='Recognizer checkpoint; adds top1 (requires --data).')
@click.option('--size', type=click.IntRange(min=2), default=24, show_default=True,
              help='Image side for textures, or to resize --data to.')
@click.option('--count', type=click.IntRange(min=1), default=20, show_default=True,
              help='Number of random textures.')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--raw', is_flag=True, help='Use the unnormalized operator.')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
              help='Output directory [<output-root>/eval-<mask id>].')
@click.pass_context
@reports_errors
def evaluate(ctx, mask_path, data_dir, checkpoint, size, count, seed, raw, out_dir):
    """Evaluate a mask: rip_curve.csv, blur.csv and metrics.json."""
    if checkpoint and not data_dir:
        raise click.UsageError('--checkpoint requires --data')
    mask = lm.load_mask(mask_path)
    if data_dir:
        dataset = lds.load_dataset(data_dir, size)
        images = dataset.images
    else:
        dataset = None
        images = lds.gen_textures(count, size, seed)
    metrics, curve, blur = rp.evaluate_mask(mask, images, normalize_mask=not raw)
    if checkpoint:
        metrics['top1'] = rp.checkpoint_top1(mask, checkpoint, dataset)
    if out_dir is None:
        out_dir = os.path.join(ctx.obj['output_root'], 'eval-%s' % mask.mask_id)
    rp.write_mask_metrics(out_dir, metrics, curve, blur)
    click.echo('auc_rip=%.6f mean_blur=%.4f aperture_ratio=%.4f'
               % (metrics['auc_rip'], metrics['mean_blur'], metrics['aperture_ratio']))
    click.echo(out_dir)


@main.command()
@click.option('--seeds', default='0,1,2', show_default=True, help='Comma separated seeds.')
@click.option('--alpha', default='1.0', show_default=True,
              help='Comma separated hi-loss weights; each adds a sweep of the LwC families.')
@click.option('--profile', type=click.Choice(sorted(PROFILES)), default='desk', show_default=True)
@click.option('--config', 'config_file', type=click.Path(dir_okay=False, exists=True), default=None)
@click.option('--data', 'data_dir', type=click.Path(file_okay=False, exists=True), default=None)
@click.option('--epochs', type=int, default=None)
@click.option('--workers', type=click.IntRange(min=1), default=None, help='Worker processes [1].')
@click.option('--plots/--no-plots', default=False, show_default=True, help='Write SVG plots.')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
              help='Grid directory [<output-root>/grid].')
@click.pass_context
@reports_errors
def grid(ctx, seeds, alpha, profile, config_file, data_dir, epochs, workers, plots, out_dir):
    """Run the benchmark grid (8 families × seeds × alphas); writes summary.csv and medians.csv."""
    seeds = _parse_list(seeds, int, '--seeds')
    alphas = _parse_list(alpha, float, '--alpha')
    base = resolve_config(profile, config_file, _overrides(epochs=epochs, workers=workers))
    experiment = rp.ExperimentGrid.default(seeds, alphas, data_dir)
    if out_dir is None:
        out_dir = os.path.join(ctx.obj['output_root'], 'grid')
    summary = rp.run_grid(experiment, base, out_dir, base.workers, plots)
    click.echo(os.path.join(out_dir, 'summary.csv'))
    failed = summary[summary['status'] != 'complete']
    if len(failed):
        for _, row in failed.iterrows():
            click.echo('%s alpha %g seed %d: %s' % (row['method'], row['alpha'], row['seed'], row['error']),
                       err=True)
        raise click.ClickException('%d of %d grid cells failed' % (len(failed), len(summary)))


@main.command('export-mask')
@click.option('--pattern', type=click.Choice(PATTERNS[:3]), default=None, help='Fixed mask family.')
@click.option('--size', type=click.IntRange(min=1), default=8, show_default=True, help='Mask side m.')
@click.option('--ratio', type=float, default=0.5, show_default=True, help='Open probability of random masks.')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--logits', 'logits_path', type=click.Path(exists=True), default=None,
              help='mask_logits.f64 file, or a run directory holding one.')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), required=True)
@reports_errors
def export_mask(pattern, size, ratio, seed, logits_path, out_path):
    """Write a mask as plain PBM plus a JSON sidecar."""
    if (pattern is None) == (logits_path is None):
        raise click.UsageError('give exactly one of --pattern and --logits')
    if pattern:
        mask = lm.make_mask(pattern, size, ratio, seed)
    else:
        if os.path.isdir(logits_path):
            logits_path = os.path.join(logits_path, 'mask_logits.f64')
        _, logits = lu.read_f64(logits_path)
        mask = lm.binarize(np.asarray(logits))
    lm.save_mask(mask, out_path)
    click.echo(out_path)


@main.command()
@click.argument('mask_path', type=click.Path(dir_okay=False, exists=True))
@reports_errors
def inspect(mask_path):
    """Print a mask as ASCII art with its aperture ratio."""
    mask = lm.load_mask(mask_path)
    click.echo(lm.ascii_art(mask))
    click.echo('%s aperture ratio: %.4f' % (mask.mask_id, lm.aperture_ratio(mask)))


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
