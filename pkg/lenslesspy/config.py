"""
    Training configuration and built-in profiles.

    Resolution order: CLI flags > JSON config file > profile defaults.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass

import lenslesspy.utils as lu
from lenslesspy.exceptions import ConfigError
from lenslesspy.losses import HiKind
from lenslesspy.masks import MaskKind

logger = logging.getLogger(__name__)

#- Selects the root directory for run outputs
OUTPUT_ROOT_ENV = 'LENSLESSPY_OUTPUT_ROOT'
DEFAULT_OUTPUT_ROOT = 'runs'

MASK_MODES = ('relaxed', 'hard')
FLIP_MODES = ('vertical', 'horizontal', 'none')
HI_REDUCTIONS = ('mean', 'sum')

#- Optimizer schedule pinned by full_schedule
FULL_SCHEDULE = {
    'epochs': 600,
    'batch_size': 128,
    'lr_initial': 0.2,
    'lr_decay_factor': 0.2,
    'lr_decay_every': 100,
    'momentum': 0.9,
    'weight_decay': 5e-4,
}


@dataclass
class TrainConfig:
    """
        Every knob of a training run. Defaults are the desk profile.

        With full_schedule set, the schedule fields still at their desk
        defaults take the full-scale values of FULL_SCHEDULE; fields given
        other values keep them.
    """

    # Schedule and optimizer
    epochs: int = 50
    batch_size: int = 32
    lr_initial: float = 0.05
    lr_decay_factor: float = 0.2
    lr_decay_every: int = 20
    momentum: float = 0.9
    weight_decay: float = 5e-4
    mask_lr_scale: float = 10.0

    # Objective
    alpha: float = 1.0
    hi_kind: str = 'none'
    hi_reduction: str = 'mean'
    epsilon: float = 1e-10

    # Imaging
    pattern: str = 'learned'
    random_ratio: float = 0.5
    mask_mode: str = 'relaxed'
    normalize_mask: bool = True
    #- Capture noise of the desk benchmark; wide apertures lose fine detail under it
    noise_std: float = 0.15
    contrast_normalize: bool = True
    init_logit_range: float = 0.1

    # Data
    image_size: int = 24
    mask_size: int = 8
    num_classes: int = 10
    per_class: int = 100
    train_fraction: float = 0.95
    pad: int = 4
    flip: str = 'vertical'

    # Recognizer
    hidden: int = 256

    seed: int = 0
    #- Seeds synthetic data and the train/test split, shared by every cell of a grid
    data_seed: int = 0
    workers: int = 1
    full_schedule: bool = False

    def __post_init__(self):
        if self.full_schedule:
            self._pin_full_schedule()
        self.validate()

    def _pin_full_schedule(self):
        defaults = {f.name: f.default for f in dataclasses.fields(self)}
        for name, value in FULL_SCHEDULE.items():
            if getattr(self, name) == defaults[name]:
                setattr(self, name, value)

    def validate(self):
        for name in ('epochs', 'batch_size', 'lr_decay_every', 'image_size', 'mask_size',
                     'num_classes', 'per_class', 'workers'):
            if int(getattr(self, name)) < 1:
                raise ConfigError('%s must be positive' % name)
        if not self.lr_initial > 0.0:
            raise ConfigError('lr_initial must be > 0')
        if not 0.0 < self.lr_decay_factor <= 1.0:
            raise ConfigError('lr_decay_factor must lie in (0, 1]')
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError('momentum must lie in [0, 1)')
        if self.weight_decay < 0.0 or self.alpha < 0.0 or self.noise_std < 0.0:
            raise ConfigError('weight_decay, alpha and noise_std must be >= 0')
        if not self.epsilon > 0.0:
            raise ConfigError('epsilon must be > 0')
        if self.mask_size > self.image_size:
            raise ConfigError('mask_size %d exceeds image_size %d' % (self.mask_size, self.image_size))
        if self.num_classes < 2:
            raise ConfigError('at least two classes are required')
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError('train_fraction must lie in (0, 1)')
        if not 0.0 < self.random_ratio < 1.0:
            raise ConfigError('random_ratio must lie in (0, 1)')
        if self.mask_mode not in MASK_MODES:
            raise ConfigError('mask_mode must be one of %s' % (MASK_MODES,))
        if self.flip not in FLIP_MODES:
            raise ConfigError('flip must be one of %s' % (FLIP_MODES,))
        if self.hi_reduction not in HI_REDUCTIONS:
            raise ConfigError('hi_reduction must be one of %s' % (HI_REDUCTIONS,))
        try:
            pattern = MaskKind.from_name(self.pattern)
            hi = HiKind.from_name(self.hi_kind)
        except ValueError as exc:
            raise ConfigError(str(exc))
        self.pattern = pattern.value
        self.hi_kind = hi.value
        if pattern is not MaskKind.LEARNED and hi is not HiKind.NONE:
            raise ConfigError('hi losses require a learnable pattern (got pattern %s, hi %s)'
                              % (self.pattern, self.hi_kind))

    @property
    def frozen_mask(self):
        return MaskKind.from_name(self.pattern) is not MaskKind.LEARNED

    @property
    def method_name(self):
        """ Benchmark name: Pinhole, Full-open, Random, LwoC or LwC-*. """
        kind = MaskKind.from_name(self.pattern)
        if kind is MaskKind.LEARNED:
            return HiKind.from_name(self.hi_kind).method_name
        return {'pinhole': 'Pinhole', 'full-open': 'Full-open', 'random': 'Random'}[kind.value]

    def to_dict(self):
        return dataclasses.asdict(self)


PROFILES = {
    'desk': {},
    'full': {
        'mask_lr_scale': 1.0,
        'image_size': 63,
        'mask_size': 32,
        'noise_std': 0.0,
        'full_schedule': True,
    },
}

def field_names():
    return [f.name for f in dataclasses.fields(TrainConfig)]

def load_config_file(path):
    """ Returns the dict of TrainConfig overrides in a JSON file. """
    data = lu.json_load(path)
    if data is None:
        raise ConfigError('config file %s not found' % path)
    if not isinstance(data, dict):
        raise ConfigError('config file %s must hold a JSON object' % path)
    unknown = sorted(set(data) - set(field_names()))
    if unknown:
        raise ConfigError('unknown config keys in %s: %s' % (path, ', '.join(unknown)))
    return data

def resolve_config(profile='desk', config_file=None, overrides=None):
    """ Builds a TrainConfig from a profile, then a config file, then explicit overrides. """
    if profile not in PROFILES:
        raise ConfigError('unknown profile %r (choose from %s)' % (profile, ', '.join(PROFILES)))
    values = dict(PROFILES[profile])
    if config_file:
        values.update(load_config_file(config_file))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in field_names():
            raise ConfigError('unknown config key %r' % key)
        values[key] = value
    cfg = TrainConfig(**values)
    logger.debug('resolved config: %s', cfg.to_dict())
    return cfg

def output_root():
    return os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)
