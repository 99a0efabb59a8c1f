"""
    A small dense recognizer trained from scratch on lensless measurements.

    Flatten -> dense(hidden, ReLU) -> ... -> dense(num_classes), softmax
    cross-entropy, and exact reverse-mode gradients down to the input
    measurements so the mask gradient can be chained through capture.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, softmax

import lenslesspy.utils as lu
from lenslesspy.exceptions import ConfigError, DatasetError, DimensionError, LenslessError

logger = logging.getLogger(__name__)

#- Below this range a measurement is treated as constant by contrast_normalize
CONTRAST_FLOOR = 1e-12


@dataclass
class RecognizerParams:
    """ Dense layer stack. Layer i maps layer_sizes[i] -> layer_sizes[i+1]. """

    layer_sizes: list
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    def __post_init__(self):
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        if len(self.layer_sizes) < 2:
            raise DimensionError('a recognizer needs at least an input and an output size')
        if self.layer_sizes[-1] < 2:
            raise DimensionError('num_classes must be >= 2')
        if not self.weights:
            self.weights = [np.zeros((a, b)) for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:])]
            self.biases = [np.zeros(b) for b in self.layer_sizes[1:]]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_sizes[i], self.layer_sizes[i+1]) or b.shape != (self.layer_sizes[i+1],):
                raise DimensionError('layer %d shapes %s, %s do not chain' % (i, w.shape, b.shape))

    @classmethod
    def initialize(cls, input_size, hidden, num_classes, seed):
        """ Glorot-uniform weights drawn from the run seed, zero biases. """
        if isinstance(hidden, int):
            hidden = [hidden] if hidden > 0 else []
        sizes = [input_size] + list(hidden) + [num_classes]
        rng = np.random.default_rng(seed)
        weights = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases = [np.zeros(s) for s in sizes[1:]]
        return cls(sizes, weights, biases)

    @property
    def num_classes(self):
        return self.layer_sizes[-1]

    def arrays(self):
        """ Returns the parameter arrays in a fixed order: W0, b0, W1, b1, ... """
        result = []
        for w, b in zip(self.weights, self.biases):
            result.extend([w, b])
        return result

    def copy(self):
        return RecognizerParams(list(self.layer_sizes),
                                [w.copy() for w in self.weights],
                                [b.copy() for b in self.biases])


@dataclass
class LabeledBatch:
    """ Measurements (a list of Measurement, or an (B, n, n) array) and their class labels. """

    measurements: object
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.measurements) != len(self.labels):
            raise DimensionError('%d measurements but %d labels' % (len(self.measurements), len(self.labels)))

    def inputs(self):
        """ Flattened (B, n*n) measurement matrix. """
        if isinstance(self.measurements, np.ndarray):
            arr = self.measurements
        else:
            arr = np.stack([getattr(y, 'pixels', y) for y in self.measurements])
        return np.asarray(arr, dtype=np.float64).reshape(len(self.labels), -1)


class Recognizer:
    """ Forward/backward over a RecognizerParams stack, caching activations between the two. """

    def __init__(self, params):
        self.params = params
        self.cache = None

    def forward(self, batch):
        """ Returns (B, num_classes) logits for a LabeledBatch or a (B, d) input matrix. """
        x = batch.inputs() if isinstance(batch, LabeledBatch) else np.asarray(batch, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.params.layer_sizes[0]:
            raise DimensionError('input shape %s does not match recognizer input size %d'
                                 % (x.shape, self.params.layer_sizes[0]))
        activations = [x]
        pre = []
        a = x
        last = len(self.params.weights) - 1
        for i, (w, b) in enumerate(zip(self.params.weights, self.params.biases)):
            z = a @ w + b
            pre.append(z)
            a = z if i == last else np.maximum(z, 0.0)
            activations.append(a)
        self.cache = {'activations': activations, 'pre': pre}
        return a

    def backward(self, grad_logits):
        """
            Returns (grads, grad_input).

            Grads is a list ordered like RecognizerParams.arrays(); grad_input
            is dL/dx with the shape of the forward input.
        """
        if self.cache is None:
            raise LenslessError('backward called before forward')
        activations = self.cache['activations']
        pre = self.cache['pre']
        g = np.asarray(grad_logits, dtype=np.float64)
        if g.shape != pre[-1].shape:
            raise DimensionError('grad_logits shape %s does not match logits %s' % (g.shape, pre[-1].shape))
        grads_w = [None] * len(self.params.weights)
        grads_b = [None] * len(self.params.weights)
        for i in reversed(range(len(self.params.weights))):
            if i < len(self.params.weights) - 1:
                g = g * (pre[i] > 0.0)
            grads_w[i] = activations[i].T @ g
            grads_b[i] = g.sum(axis=0)
            g = g @ self.params.weights[i].T
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.extend([gw, gb])
        return grads, g


def cross_entropy(logits, labels):
    """ Mean softmax cross-entropy and its gradient (softmax - one_hot) / batch_size. """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    batch_size, num_classes = logits.shape
    if labels.shape != (batch_size,):
        raise DimensionError('expected %d labels, got shape %s' % (batch_size, labels.shape))
    if np.any(labels < 0) or np.any(labels >= num_classes):
        raise DatasetError('labels must lie in [0, %d)' % num_classes)
    rows = np.arange(batch_size)
    #- logsumexp and softmax subtract the row max
    loss = float(np.mean(logsumexp(logits, axis=1) - logits[rows, labels]))
    grad = softmax(logits, axis=1)
    grad[rows, labels] -= 1.0
    return loss, grad / batch_size

def predict(logits):
    return np.argmax(logits, axis=1)

def contrast_normalize(y):
    """
        Per-sample min-max rescaling of an (B, n, n) stack into [0, 1].

        Returns (z, cache) where cache feeds contrast_normalize_backward.
        A constant sample maps to zeros.
    """
    y = np.asarray(y, dtype=np.float64)
    flat = y.reshape(y.shape[0], -1)
    amin = np.argmin(flat, axis=1)
    amax = np.argmax(flat, axis=1)
    rows = np.arange(flat.shape[0])
    lo = flat[rows, amin]
    span = flat[rows, amax] - lo
    live = span > CONTRAST_FLOOR
    safe = np.where(live, span, 1.0)
    z = np.where(live[:, np.newaxis], (flat - lo[:, np.newaxis]) / safe[:, np.newaxis], 0.0)
    cache = {'amin': amin, 'amax': amax, 'span': safe, 'live': live, 'z': z, 'shape': y.shape}
    return z.reshape(y.shape), cache

def contrast_normalize_backward(cache, grad_z):
    """ Exact gradient of contrast_normalize through the min and max entries. """
    g = np.asarray(grad_z, dtype=np.float64).reshape(cache['z'].shape)
    span = cache['span'][:, np.newaxis]
    rows = np.arange(g.shape[0])
    total = g.sum(axis=1)
    weighted = np.sum(g * cache['z'], axis=1)
    grad = g / span
    np.add.at(grad, (rows, cache['amin']), (weighted - total) / cache['span'])
    np.add.at(grad, (rows, cache['amax']), -weighted / cache['span'])
    grad[~cache['live']] = 0.0
    return grad.reshape(cache['shape'])

def sgd_step(param, grad, velocity, lr, momentum=0.0, weight_decay=0.0):
    """
        One momentum SGD update, in place.

        v <- momentum * v + grad + weight_decay * param
        param <- param - lr * v
    """
    if not lr > 0.0:
        raise ConfigError('learning rate must be > 0')
    velocity *= momentum
    velocity += grad
    if weight_decay:
        velocity += weight_decay * param
    param -= lr * velocity
    return param


class SGD:
    """ Momentum SGD over a fixed list of parameter arrays, updated in place. """

    def __init__(self, params, momentum=0.0, weight_decay=0.0):
        self.params = list(params)
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = [np.zeros_like(p) for p in self.params]

    def step(self, grads, lr, lr_scales=None):
        if len(grads) != len(self.params):
            raise DimensionError('%d gradients for %d parameters' % (len(grads), len(self.params)))
        for i, (p, g, v) in enumerate(zip(self.params, grads, self.velocity)):
            scale = 1.0 if lr_scales is None else lr_scales[i]
            sgd_step(p, g, v, lr * scale, self.momentum, self.weight_decay)
        return self.params


def save_checkpoint(path, params, **header):
    """ Writes the recognizer as a JSON header (architecture, epoch, seed, ...) plus float64 tensors. """
    header = dict(header)
    header['layer_sizes'] = params.layer_sizes
    tensors = []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        tensors.append(('W%d' % i, w))
        tensors.append(('b%d' % i, b))
    lu.write_bundle(path, header, tensors)

def load_checkpoint(path):
    """ Returns (RecognizerParams, header) read from save_checkpoint output. """
    header, tensors = lu.read_bundle(path)
    sizes = header['layer_sizes']
    weights = [tensors['W%d' % i] for i in range(len(sizes) - 1)]
    biases = [tensors['b%d' % i] for i in range(len(sizes) - 1)]
    return RecognizerParams(sizes, weights, biases), header
