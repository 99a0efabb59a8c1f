"""
    Datasets for desk-scale recognition experiments.

    A Dataset holds an (N, n, n) stack of grayscale images in [0, 1] with
    integer labels. Datasets are read from and written to a directory with
    one subdirectory of PGM files per class:

        <root>/<class_name>/<image>.pgm
        <root>/manifest.json
"""

import logging
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

import lenslesspy.pnm_utils as pnm
import lenslesspy.utils as lu
from lenslesspy.exceptions import ConfigError, DatasetError, DimensionError
from lenslesspy.imaging import Image

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
IMAGE_EXTENSIONS = ('.pgm',)
#- Coverage of the shared glyph body; class detail is drawn at full coverage
BODY_LEVEL = 0.45


@dataclass
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    class_names: list = field(default_factory=list)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3 or self.images.shape[1] != self.images.shape[2]:
            raise DimensionError('dataset images must be an (N, n, n) stack, got %s' % (self.images.shape,))
        if len(self.images) != len(self.labels):
            raise DimensionError('%d images but %d labels' % (len(self.images), len(self.labels)))
        if len(self.images) == 0:
            raise DatasetError('dataset is empty')
        if not self.class_names:
            self.class_names = ['class%02d' % c for c in range(int(self.labels.max()) + 1)]
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise DatasetError('labels must lie in [0, %d)' % self.num_classes)
        if self.images.min() < 0.0 or self.images.max() > 1.0:
            raise DatasetError('pixel values must lie in [0, 1]')

    @property
    def num_classes(self):
        return len(self.class_names)

    @property
    def size(self):
        return self.images.shape[1]

    def __len__(self):
        return len(self.labels)

    @property
    def samples(self):
        """ List of (Image, label) pairs. """
        return [(Image(img), int(lbl)) for img, lbl in zip(self.images, self.labels)]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.labels[indices], list(self.class_names))

    def check_classes(self):
        """ Raises DatasetError unless there are >= 2 classes, each non-empty. """
        if self.num_classes < 2:
            raise DatasetError('at least two classes are required, got %d' % self.num_classes)
        empty = [self.class_names[c] for c, k in enumerate(self.class_counts()) if k == 0]
        if empty:
            raise DatasetError('classes without samples: %s' % ', '.join(empty))


@dataclass
class SplitSpec:
    train_fraction: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError('train_fraction must lie in (0, 1)')


def resize(pixels, n):
    """ Bilinear resize of a 2-d array to n×n, clipped to [0, 1]. """
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.shape == (n, n):
        return pixels.copy()
    zoom = (n / float(pixels.shape[0]), n / float(pixels.shape[1]))
    out = ndimage.zoom(pixels, zoom, order=1, mode='nearest', grid_mode=False)
    if out.shape != (n, n):
        raise DimensionError('resize produced %s instead of %d×%d' % (out.shape, n, n))
    return np.clip(out, 0.0, 1.0)

def load_dataset(root_path, n=None):
    """
        Loads root/<class_name>/*.pgm, classes in sorted directory order.

        Images are resized (bilinear) to n×n; if n is None the size of the
        first image is used.
    """
    if not os.path.isdir(root_path):
        raise DatasetError('dataset root %s does not exist' % root_path)
    class_names = sorted(d for d in os.listdir(root_path) if os.path.isdir(os.path.join(root_path, d)))
    if not class_names:
        raise DatasetError('dataset root %s has no class directories' % root_path)
    images = []
    labels = []
    for label, name in enumerate(class_names):
        class_dir = os.path.join(root_path, name)
        files = sorted(f for f in os.listdir(class_dir) if os.path.splitext(f)[1].lower() in IMAGE_EXTENSIONS)
        if not files:
            raise DatasetError('class directory %s holds no images' % class_dir)
        for fname in files:
            path = os.path.join(class_dir, fname)
            try:
                pixels = pnm.read_pgm(path)
            except (OSError, ValueError) as exc:
                raise DatasetError('cannot read %s: %s' % (path, exc))
            if n is None:
                n = pixels.shape[0]
            images.append(resize(pixels, n))
            labels.append(label)
    logger.info('loaded %d images in %d classes from %s', len(images), len(class_names), root_path)
    return Dataset(np.stack(images), np.array(labels), class_names)

def save_dataset(ds, root_path):
    """ Writes ds in the directory layout plus a manifest with SHA-256 checksums. Returns the manifest path. """
    files = {}
    per_class = {}
    for label, name in enumerate(ds.class_names):
        idx = np.flatnonzero(ds.labels == label)
        per_class[name] = int(len(idx))
        for k, i in enumerate(idx):
            rel = '%s/%s_%05d.pgm' % (name, name, k)
            path = os.path.join(root_path, rel)
            pnm.write_pgm(path, ds.images[i])
            files[rel] = lu.sha256_file(path)
    manifest = {
        'num_classes': ds.num_classes,
        'class_names': list(ds.class_names),
        'size': ds.size,
        'num_samples': len(ds),
        'counts': per_class,
        'checksums': files,
    }
    manifest_path = os.path.join(root_path, MANIFEST_NAME)
    lu.json_dump(manifest, manifest_path)
    return manifest_path

def split(ds, spec=None):
    """
        Stratified, seeded train/test split.

        Each class keeps round(count * (1 - fraction)) test samples, at least
        one, and at least one training sample.
    """
    if spec is None:
        spec = SplitSpec()
    rng = np.random.default_rng(spec.seed)
    train_idx = []
    test_idx = []
    for label in range(ds.num_classes):
        idx = np.flatnonzero(ds.labels == label)
        if len(idx) < 2:
            raise DatasetError('class %s has %d sample(s); a split needs at least 2'
                               % (ds.class_names[label], len(idx)))
        idx = idx[rng.permutation(len(idx))]
        n_test = int(np.floor(len(idx) * (1.0 - spec.train_fraction) + 0.5))
        n_test = min(max(n_test, 1), len(idx) - 1)
        test_idx.extend(idx[:n_test])
        train_idx.extend(idx[n_test:])
    return ds.subset(np.sort(train_idx)), ds.subset(np.sort(test_idx))

def augment(img, rng, pad=4, flip='vertical', offset=None, do_flip=None):
    """
        Random crop of the edge-padded image followed by a random flip.

        Offset (row, col) in [0, 2*pad] and do_flip force the random draws.
        Flip is 'vertical' (top-bottom), 'horizontal' or 'none'.
    """
    pixels = img.pixels if isinstance(img, Image) else np.asarray(img, dtype=np.float64)
    n_rows, n_cols = pixels.shape
    if offset is None:
        offset = rng.integers(0, 2 * pad + 1, size=2)
    if do_flip is None:
        do_flip = rng.random() < 0.5
    padded = np.pad(pixels, pad, mode='edge')
    r, c = int(offset[0]), int(offset[1])
    out = padded[r:r + n_rows, c:c + n_cols]
    if do_flip and flip == 'vertical':
        out = out[::-1, :]
    elif do_flip and flip == 'horizontal':
        out = out[:, ::-1]
    out = np.ascontiguousarray(out)
    return Image(out) if isinstance(img, Image) else out

def augment_batch(xs, rng, pad=4, flip='vertical'):
    return np.stack([augment(x, rng, pad, flip) for x in xs])

# Synthetic glyphs

def _glyph_primitives(rng, count, fine=True):
    """
        Bars and disks in normalized [-1, 1] coordinates (one unit is n/2
        pixels). Fine primitives are thin bars and dots of about one pixel
        width; coarse ones are broad strokes and blobs.
    """
    prims = []
    for _ in range(count):
        cx, cy = rng.uniform(-0.6, 0.6, size=2)
        if rng.random() < 0.6:
            angle = rng.choice([0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4])
            if fine:
                prims.append(('bar', cx, cy, rng.uniform(0.2, 0.45), rng.uniform(0.04, 0.06), angle))
            else:
                prims.append(('bar', cx, cy, rng.uniform(0.35, 0.7), rng.uniform(0.12, 0.2), angle))
        else:
            radius = rng.uniform(0.07, 0.11) if fine else rng.uniform(0.25, 0.4)
            prims.append(('disk', cx, cy, radius))
    return prims

def _render_glyph(prims, n, shift, theta):
    """ Anti-aliased coverage in [0, 1] of the glyph, shifted (pixels) and rotated (radians). """
    coords = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    v, u = np.meshgrid(coords, coords, indexing='ij')
    u = u - shift[1] * 2.0 / n
    v = v - shift[0] * 2.0 / n
    c, s = np.cos(theta), np.sin(theta)
    u, v = c * u + s * v, -s * u + c * v
    #- Edge softness of about one pixel
    sharp = n / 2.0
    cover = np.zeros((n, n))
    for p in prims:
        du, dv = u - p[1], v - p[2]
        if p[0] == 'bar':
            ca, sa = np.cos(p[5]), np.sin(p[5])
            a = ca * du + sa * dv
            b = -sa * du + ca * dv
            inside = (np.clip((p[3] - np.abs(a)) * sharp + 0.5, 0.0, 1.0)
                      * np.clip((p[4] - np.abs(b)) * sharp + 0.5, 0.0, 1.0))
        else:
            inside = np.clip((p[3] - np.hypot(du, dv)) * sharp + 0.5, 0.0, 1.0)
        cover = np.maximum(cover, inside)
    return cover

def gen_synthetic(num_classes=10, per_class=100, n=24, seed=0):
    """
        Procedural glyph classes. Every glyph shares one dim coarse body;
        each class adds its own fixed arrangement of thin bars and dots, so
        the class lives in detail about one pixel wide that wide apertures
        average away. Glyphs are rendered with sub-pixel shifts, rotations
        of +/-10 degrees and +/-10% brightness jitter. Deterministic per seed.
    """
    if num_classes < 2:
        raise DatasetError('at least two classes are required, got %d' % num_classes)
    if per_class < 1 or n < 2:
        raise DimensionError('per_class must be >= 1 and n >= 2')
    rng = np.random.default_rng(seed)
    body = _glyph_primitives(rng, 2, fine=False)
    prototypes = [_glyph_primitives(rng, int(rng.integers(3, 6))) for _ in range(num_classes)]
    images = np.empty((num_classes * per_class, n, n))
    labels = np.repeat(np.arange(num_classes), per_class)
    for i, label in enumerate(labels):
        shift = rng.uniform(-1.0, 1.0, size=2)
        theta = np.deg2rad(rng.uniform(-10.0, 10.0))
        brightness = rng.uniform(0.9, 1.1)
        cover = np.maximum(BODY_LEVEL * _render_glyph(body, n, shift, theta),
                           _render_glyph(prototypes[label], n, shift, theta))
        images[i] = np.clip((0.08 + 0.8 * cover) * brightness, 0.0, 1.0)
    names = ['glyph%02d' % c for c in range(num_classes)]
    return Dataset(images, labels, names)

def gen_textures(count=20, n=24, seed=0):
    """ High-frequency scenes: i.i.d. uniform pixels in [0, 1]. """
    if count < 1 or n < 2:
        raise DimensionError('count must be >= 1 and n >= 2')
    rng = np.random.default_rng(seed)
    return rng.random((count, n, n))
