#!/usr/bin/env python3
"""Seeded stand-in for a per-window recognizer.

A reference transcript is cut into windows and every window is "recognized"
independently. Errors come from a base error rate plus the two effects that
hurt naive segmentation: words at the start of a window are recognized with
little context (a higher error rate), and a word cut by a window edge may be
lost.

Random draws come from a counter-based generator (Philox) keyed by the seed,
with the counter holding a key of the utterance id, the word index and a lane.
Lane ``1 + window index`` carries the draws of one window, so every window is
recognized independently. With ``shared_difficulty`` the error draws come from
lane 0 instead and every window that hears a word makes the same mistake. No
draw depends on the order in which windows or utterances are processed.
"""
import hashlib
import math
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np

from .alignment import score_wer
from .consensus import TIME_BASED, merge_pipeline
from .errors import ValidationError
from .transcript import ReferenceWord, Transcript, WerReport, WindowSpec, WordHyp, quantize_time
from .windowing import FIXED, OVERLAPPING, make_layout

SUBSTITUTION_MARK = '~'
FILLER = 'uh'

SHARED_LANE = 0

# syllables for synthetic vocabulary
ONSETS = ('b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z', 'ch', 'sh', 'tr', 'pl')
NUCLEI = ('a', 'e', 'i', 'o', 'u', 'ai', 'ou')


@dataclass(frozen=True)
class CorruptionConfig:
    seed: int = 0
    base_error_rate: float = 0.05
    warmup_seconds: float = 1.0
    warmup_multiplier: float = 3.0
    boundary_cut_drop_prob: float = 0.5
    sub_prob: float = 0.5
    del_prob: float = 0.3
    ins_prob: float = 0.2
    shared_difficulty: bool = False

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be an integer in [0, 2^64), got %r" % (self.seed,))
        for name in ('base_error_rate', 'boundary_cut_drop_prob', 'sub_prob', 'del_prob', 'ins_prob'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError("%s must be a probability, got %r" % (name, value))
        if abs(self.sub_prob + self.del_prob + self.ins_prob - 1.0) > 1e-12:
            raise ValidationError("substitution/deletion/insertion mix must sum to 1")
        if not self.warmup_seconds >= 0:
            raise ValidationError("warmup_seconds must be nonnegative")
        if not self.warmup_multiplier >= 1:
            raise ValidationError("warmup_multiplier must be at least 1")

    @classmethod
    def noiseless(cls, seed=0):
        return cls(seed=seed, base_error_rate=0.0, boundary_cut_drop_prob=0.0)

    def error_rate(self, offset):
        """Error rate of a word starting `offset` seconds into its window."""
        if offset < self.warmup_seconds:
            return min(1.0, self.base_error_rate * self.warmup_multiplier)
        return self.base_error_rate

    def to_dict(self):
        return asdict(self)


def utterance_key(utterance_id):
    """Stable 64-bit key of an utterance id."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(utterance_id).encode('utf-8'))
    return int.from_bytes(h.digest(), 'little', signed=False)


def draws(seed, lane, word_index, n=3, utterance=0):
    """n uniforms on [0, 1) for (seed, utterance key, lane, word index), independent of any other key."""
    counter = np.array([utterance, 0, word_index, lane], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter)).random(n)


def _crosses_edge(word, window):
    end = quantize_time(word.end)
    return word.start < window.start < end or word.start < window.end < end


def _corrupt(word, window_index, kind_draw, config):
    """Hypothesis words for an erroneous reference word."""
    if kind_draw < config.sub_prob:
        return [WordHyp(word.token + SUBSTITUTION_MARK, word.start, word.duration, window_index)]
    if kind_draw < config.sub_prob + config.del_prob:
        return []
    filler = WordHyp(FILLER, quantize_time(word.start + word.duration), 0.0, window_index)
    return [WordHyp(word.token, word.start, word.duration, window_index), filler]


def simulate_window(ref_words: Sequence[ReferenceWord], window: WindowSpec, config: CorruptionConfig,
                    utterance_id='sim') -> Transcript:
    """Recognize the reference words starting inside one window."""
    starts = [w.start for w in ref_words]
    lo = bisect_left(starts, window.start)
    hi = bisect_left(starts, window.end)
    lane = 1 + window.index
    key = utterance_key(utterance_id)
    out = []
    for index in range(lo, hi):
        word = ref_words[index]
        cut_draw, err_draw, kind_draw = draws(config.seed, lane, index, utterance=key)
        if config.shared_difficulty:
            err_draw, kind_draw = draws(config.seed, SHARED_LANE, index, 2, utterance=key)
        if _crosses_edge(word, window) and cut_draw < config.boundary_cut_drop_prob:
            continue
        if err_draw < config.error_rate(word.start - window.start):
            out.extend(_corrupt(word, window.index, kind_draw, config))
        else:
            out.append(WordHyp(word.token, word.start, word.duration, window.index))
    return Transcript(utterance_id, tuple(out))


def utterance_length(ref_words: Sequence[ReferenceWord]):
    return quantize_time(max((w.end for w in ref_words), default=0.0))


def simulate_utterance(utterance_id, ref_words, layout_kind, L, config):
    length = utterance_length(ref_words)
    if length <= 0:
        return Transcript(utterance_id, ()), None
    layout = make_layout(layout_kind, length, L)
    words = []
    for window in layout:
        words.extend(simulate_window(ref_words, window, config, utterance_id).words)
    return Transcript(utterance_id, tuple(words)), layout


def parallel_map(func, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def simulate_corpus(ref_transcripts: Sequence[Tuple[str, Sequence[ReferenceWord]]], layout_kind, L,
                    config: CorruptionConfig, threads=1) -> List[Tuple[Transcript, object]]:
    """Per-window hypotheses for every reference utterance, with the layout used."""
    if layout_kind not in (OVERLAPPING, FIXED):
        raise ValidationError("unknown layout kind '%s'" % layout_kind)
    return parallel_map(lambda item: simulate_utterance(item[0], item[1], layout_kind, L, config),
                        list(ref_transcripts), threads)


def synthesize_reference(seed=0, seconds=300.0, utterance_id='synth', vocab_size=4000):
    """A time-marked reference of roughly `seconds` seconds on a 10 ms grid."""
    gen = np.random.Generator(np.random.Philox(key=seed, counter=np.array([0, 0, 0, 1 << 32], dtype=np.uint64)))
    syllables = [o + n for o in ONSETS for n in NUCLEI]
    vocab = sorted({''.join(gen.choice(syllables, size=gen.integers(1, 4))) for _ in range(vocab_size)})
    words = []
    t = round(float(gen.uniform(0.1, 0.5)), 2)
    while True:
        duration = round(float(gen.uniform(0.15, 0.6)), 2)
        if t + duration > seconds:
            break
        words.append(ReferenceWord(str(vocab[gen.integers(len(vocab))]), t, duration))
        t = round(t + duration + float(gen.uniform(0.05, 0.4)), 2)
    return utterance_id, words


@dataclass
class ArmResult:
    reports: List[WerReport]

    @property
    def total(self):
        total = WerReport.from_counts(0, 0, 0, 0)
        for r in self.reports:
            total = total + r
        return total

    @property
    def wers(self):
        return [r.wer for r in self.reports]

    def summary(self):
        total = self.total
        d = total.to_dict(6)
        d['mean_wer'] = round(float(np.mean(self.wers)), 6) if self.reports else 0.0
        return d


def run_trial(ref_corpus, L, config: CorruptionConfig, mode=TIME_BASED):
    """WER of fixed segmentation and of overlapping merge for one seed, summed over utterances."""
    fixed = WerReport.from_counts(0, 0, 0, 0)
    overlap = WerReport.from_counts(0, 0, 0, 0)
    for utt, ref_words in ref_corpus:
        ref_tokens = [w.token for w in ref_words]
        hyp, _ = simulate_utterance(utt, ref_words, FIXED, L, config)
        fixed = fixed + score_wer(ref_tokens, hyp)
        hyp, layout = simulate_utterance(utt, ref_words, OVERLAPPING, L, config)
        merged = merge_pipeline(hyp, layout, mode) if layout is not None else hyp
        overlap = overlap + score_wer(ref_tokens, merged)
    return fixed, overlap


def study(ref_corpus, L, config: CorruptionConfig, trials, threads=1, mode=TIME_BASED):
    """Fixed segmentation against overlapping inference over seeds seed .. seed+trials-1."""
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    ref_corpus = list(ref_corpus)
    configs = [replace(config, seed=config.seed + k) for k in range(trials)]
    results = parallel_map(lambda cfg: run_trial(ref_corpus, L, cfg, mode), configs, threads)

    fixed = ArmResult([f for f, _ in results])
    overlap = ArmResult([o for _, o in results])
    wins = sum(1 for f, o in results if o.wer < f.wer)
    ties = sum(1 for f, o in results if o.wer == f.wer)
    mean_fixed = float(np.mean(fixed.wers))
    mean_overlap = float(np.mean(overlap.wers))
    reduction = (mean_fixed - mean_overlap) / mean_fixed if mean_fixed > 0 and math.isfinite(mean_fixed) else 0.0

    return {
        'window_length': L,
        'trials': trials,
        'config': config.to_dict(),
        'per_trial': [{'seed': cfg.seed, 'fixed': round(f.wer, 6), 'overlap': round(o.wer, 6)}
                      for cfg, (f, o) in zip(configs, results)],
        'fixed': fixed.summary(),
        'overlap': overlap.summary(),
        'wins': wins,
        'ties': ties,
        'losses': trials - wins - ties,
        'win_rate': round(wins / trials, 6),
        'mean_relative_reduction': round(reduction, 6),
    }


def sweep(ref_corpus, lengths, config: CorruptionConfig, trials, threads=1, mode=TIME_BASED):
    """The study repeated for several window lengths."""
    ref_corpus = list(ref_corpus)
    return [study(ref_corpus, L, config, trials, threads, mode) for L in lengths]
