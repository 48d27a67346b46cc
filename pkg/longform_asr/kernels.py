#!/usr/bin/env python3
"""Attention weight computations over caller-supplied energies and parameters.

Encoder positions are 1-based throughout (``j = 1..T``), as are the indices
taken and returned by the selection functions; a hard selection that scans
past the last encoder step returns ``END_OF_SEQUENCE`` (``None``).
All arithmetic is float64.
"""
import functools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import KernelError

END_OF_SEQUENCE = None
VFLOOR = 1e-8
SELECT_THRESHOLD = 0.5
SUM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class AttentionWeights:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise KernelError("attention weights must be a vector")
        if not np.all(np.isfinite(w)):
            raise KernelError("attention weights must be finite")
        if np.any(w < 0):
            raise KernelError("attention weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, 'weights', w)

    def __len__(self):
        return self.weights.size

    def __getitem__(self, j):
        """Weight of 1-based encoder step j."""
        return float(self.weights[j - 1])

    @property
    def total(self):
        return float(self.weights.sum())

    @property
    def deficit(self):
        return max(0.0, 1.0 - self.total)

    def tolist(self):
        return self.weights.tolist()


@dataclass(frozen=True, eq=False)
class GmmMixtureParams:
    weight_logits: np.ndarray
    log_variances: np.ndarray
    log_steps: np.ndarray
    prev_means: np.ndarray
    vfloor: float = VFLOOR

    def __post_init__(self):
        arrays = {}
        for name in ('weight_logits', 'log_variances', 'log_steps', 'prev_means'):
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64))
            if a.ndim != 1:
                raise KernelError("%s must be a vector" % name)
            if not np.all(np.isfinite(a)):
                raise KernelError("%s must be finite" % name)
            arrays[name] = a
        sizes = {a.size for a in arrays.values()}
        if len(sizes) != 1:
            raise KernelError("mixture parameters differ in length: %s"
                              % ', '.join("%s=%d" % (k, v.size) for k, v in arrays.items()))
        if sizes == {0}:
            raise KernelError("a mixture needs at least one component")
        if np.any(arrays['prev_means'] < 0):
            raise KernelError("previous means must be nonnegative")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def num_components(self):
        return self.weight_logits.size


def _vector(values, name):
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 1:
        raise KernelError("%s must be a vector" % name)
    if a.size == 0:
        raise KernelError("%s is empty" % name)
    if not np.all(np.isfinite(a)):
        raise KernelError("%s must be finite" % name)
    return a


def _probabilities(values, name, ndim):
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != ndim or a.size == 0:
        raise KernelError("%s must be a nonempty %dD array" % (name, ndim))
    if np.any(~np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
        raise KernelError("%s must lie in [0, 1]" % name)
    return a


def _check_step(t, size, name='selected step'):
    if isinstance(t, bool) or int(t) != t or not 1 <= t <= size:
        raise KernelError("%s %r outside 1..%d" % (name, t, size))
    return int(t)


def _span_softmax(energies, first, last):
    """Exponential normalisation over the 1-based span [first, last], zero elsewhere."""
    span = energies[first - 1:last]
    e = np.exp(span - span.max())
    out = np.zeros_like(energies)
    out[first - 1:last] = e / e.sum()
    return out


def soft_attention(energies_row) -> AttentionWeights:
    e = _vector(energies_row, 'energies')
    return AttentionWeights(_span_softmax(e, 1, e.size))


def monotonic_select(selection_probs, start=1) -> Optional[int]:
    """First step at or after `start` whose selection probability reaches 1/2."""
    p = _probabilities(selection_probs, 'selection probabilities', 1)
    start = _check_step(start, p.size, 'start')
    hits = np.flatnonzero(p[start - 1:] >= SELECT_THRESHOLD)
    if hits.size == 0:
        return END_OF_SEQUENCE
    return start + int(hits[0])


def monotonic_decode(selection_probs) -> List[Optional[int]]:
    p = _probabilities(selection_probs, 'selection probabilities', 2)
    path = []
    start = 1
    for row in p:
        if start is END_OF_SEQUENCE:
            path.append(END_OF_SEQUENCE)
            continue
        start = monotonic_select(row, start)
        path.append(start)
    return path


def monotonic_expected(selection_probs, num_decode_steps=None) -> List[AttentionWeights]:
    """Expected attention of the left-to-right Bernoulli scan, one vector per decoder step.

    Each step resumes scanning where the previous one stopped; the mass missing
    from a vector is the probability that the scan ran off the end.
    """
    p = _probabilities(selection_probs, 'selection probabilities', 2)
    if num_decode_steps is None:
        num_decode_steps = p.shape[0]
    if not 0 <= num_decode_steps <= p.shape[0]:
        raise KernelError("num_decode_steps %r outside 0..%d" % (num_decode_steps, p.shape[0]))
    T = p.shape[1]
    prev = np.zeros(T)
    prev[0] = 1.0
    result = []
    for i in range(num_decode_steps):
        alpha = np.empty(T)
        # q = probability that the scan of step i reaches j
        q = 0.0
        for j in range(T):
            q = (q * (1.0 - p[i, j - 1]) if j else 0.0) + prev[j]
            alpha[j] = p[i, j] * q
        result.append(AttentionWeights(alpha))
        prev = alpha
    return result


def mocha_weights(energies_row, selected, chunk) -> AttentionWeights:
    """Softmax over the `chunk` steps ending at the selected step."""
    e = _vector(energies_row, 'energies')
    t = _check_step(selected, e.size)
    if isinstance(chunk, bool) or int(chunk) != chunk or chunk < 1:
        raise KernelError("chunk size must be a positive integer, got %r" % (chunk,))
    return AttentionWeights(_span_softmax(e, max(1, t - int(chunk) + 1), t))


def milk_weights(energies_row, selected) -> AttentionWeights:
    """Softmax over every step up to and including the selected one."""
    e = _vector(energies_row, 'energies')
    t = _check_step(selected, e.size)
    return AttentionWeights(_span_softmax(e, 1, t))


def gmm_weights(params: GmmMixtureParams, T) -> Tuple[AttentionWeights, np.ndarray]:
    """Mixture-of-Gaussians weights over steps 1..T and the advanced means."""
    if isinstance(T, bool) or int(T) != T or T < 1:
        raise KernelError("encoder length must be a positive integer, got %r" % (T,))
    try:
        with np.errstate(over='raise'):
            g = params.weight_logits
            w = np.exp(g - g.max())
            w = w / w.sum()
            v = np.exp(params.log_variances)
            step = np.exp(params.log_steps)
    except FloatingPointError:
        raise KernelError("mixture parameters overflow exp(); clamp log-variances and log-steps") from None
    means = step + params.prev_means
    if np.any(means <= params.prev_means):
        raise KernelError("mixture means must advance; log-steps are too small")

    j = np.arange(1, int(T) + 1, dtype=np.float64)[:, None]
    norm = w / np.sqrt(2 * math.pi * v + params.vfloor)
    dens = np.exp(-((j - means) ** 2) / (2 * v + params.vfloor))
    return AttentionWeights((norm * dens).sum(axis=1)), means


def gmm_attend(steps: Sequence[Tuple[Sequence[float], Sequence[float], Sequence[float]]], T,
               initial_means=None, vfloor=VFLOOR) -> Tuple[List[AttentionWeights], np.ndarray]:
    """Run gmm_weights over consecutive decoder steps, threading the means."""
    means = None
    if initial_means is not None:
        means = np.asarray(initial_means, dtype=np.float64)
    result = []
    for gamma, beta, kappa in steps:
        if means is None:
            means = np.zeros(np.atleast_1d(gamma).size)
        alpha, means = gmm_weights(GmmMixtureParams(gamma, beta, kappa, means, vfloor), T)
        result.append(alpha)
    return result, means


def latency_loss(alpha_prev, alpha_cur) -> float:
    """Sum over j of (alpha_cur[j] * expected forward delay from the previous step) squared."""
    prev = np.asarray(getattr(alpha_prev, 'weights', alpha_prev), dtype=np.float64)
    cur = np.asarray(getattr(alpha_cur, 'weights', alpha_cur), dtype=np.float64)
    if prev.shape != cur.shape or prev.ndim != 1:
        raise KernelError("weight vectors differ in length (%s vs %s)" % (prev.shape, cur.shape))
    idx = np.arange(cur.size)
    delay = np.maximum(idx[:, None] - idx[None, :], 0)
    expected = delay @ prev
    return float(np.sum((cur * expected) ** 2))


def sequence_latency_loss(alphas) -> float:
    return float(sum(latency_loss(a, b) for a, b in zip(alphas, alphas[1:])))


def kernel(_func=None, *, name):
    def register_kernel(func):
        @functools.wraps(func)
        def call_kernel(*args, **kwargs):
            return func(*args, **kwargs)
        KernelDelegate.KERNELS[name] = func
        return call_kernel
    return register_kernel


class KernelDelegate:
    KERNELS = {}

    def __init__(self, spec):
        if not isinstance(spec, dict):
            raise KernelError("kernel spec must be a JSON object")
        self.name = spec.get('kernel')
        self.params = spec.get('params', {}) or {}
        self.T = spec.get('T')
        if self.name not in KernelDelegate.KERNELS:
            raise KernelError("Unknown kernel '%s' (known: %s)" % (self.name, ', '.join(sorted(KernelDelegate.KERNELS))))

    def energies(self):
        if 'energies' in self.params:
            return self.params['energies']
        if self.T is None:
            raise KernelError("kernel '%s' needs params.energies or T" % self.name)
        return np.zeros(int(self.T))

    def param(self, key, default=KeyError):
        if key in self.params:
            return self.params[key]
        if default is KeyError:
            raise KernelError("kernel '%s' needs params.%s" % (self.name, key))
        return default

    def execute(self):
        result = KernelDelegate.KERNELS[self.name](self)
        result['kernel'] = self.name
        return result


@kernel(name='soft')
def kernel_soft(spec):
    return {'weights': soft_attention(spec.energies()).tolist()}


@kernel(name='monotonic_select')
def kernel_monotonic_select(spec):
    return {'selected': monotonic_select(spec.param('p'), spec.param('start', 1))}


@kernel(name='monotonic_decode')
def kernel_monotonic_decode(spec):
    return {'path': monotonic_decode(spec.param('p'))}


@kernel(name='monotonic_expected')
def kernel_monotonic_expected(spec):
    alphas = monotonic_expected(spec.param('p'), spec.param('steps', None))
    return {'weights': [a.tolist() for a in alphas], 'deficit': [a.deficit for a in alphas]}


@kernel(name='mocha')
def kernel_mocha(spec):
    return {'weights': mocha_weights(spec.energies(), spec.param('t'), spec.param('chunk')).tolist()}


@kernel(name='milk')
def kernel_milk(spec):
    return {'weights': milk_weights(spec.energies(), spec.param('t')).tolist()}


@kernel(name='gmm')
def kernel_gmm(spec):
    gamma = spec.param('gamma')
    params = GmmMixtureParams(gamma,
                              spec.param('beta'),
                              spec.param('kappa'),
                              spec.param('prev_means', np.zeros(np.atleast_1d(gamma).size)),
                              spec.param('vfloor', VFLOOR))
    if spec.T is None:
        raise KernelError("kernel 'gmm' needs T")
    alpha, means = gmm_weights(params, spec.T)
    return {'weights': alpha.tolist(), 'means': means.tolist()}


@kernel(name='latency')
def kernel_latency(spec):
    return {'loss': latency_loss(spec.param('alpha_prev'), spec.param('alpha_cur'))}
