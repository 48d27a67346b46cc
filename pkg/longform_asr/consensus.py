#!/usr/bin/env python3
import functools
from dataclasses import dataclass, field

from .alignment import CORRECT, Alignment, align_constrained
from .errors import ConfidenceError, ValidationError
from .transcript import EVEN, ODD, Transcript, WindowSpec
from .windowing import WindowLayout, split_streams

TIME_BASED = 'time'
POSITION_BASED = 'position'

ALIASES = {
    'time_based': TIME_BASED,
    'position_based': POSITION_BASED,
}

# a missing word has no rank; it scores as a word at the very edge of a window
NULL_POSITION_SCORE = -0.5


def confidence(_func=None, *, name):
    def register_confidence(func):
        @functools.wraps(func)
        def call_confidence(*args, **kwargs):
            return func(*args, **kwargs)
        ConfidenceMode.SCORERS[name] = func
        return call_confidence
    return register_confidence


class ConfidenceMode:
    SCORERS = {}

    def __init__(self, variant=TIME_BASED):
        variant = ALIASES.get(variant, variant)
        if variant not in ConfidenceMode.SCORERS:
            raise ValidationError("Unknown confidence mode '%s' (known: %s)"
                                  % (variant, ', '.join(sorted(ConfidenceMode.SCORERS))))
        self.variant = variant

    @property
    def needs_timing(self):
        return self.variant != POSITION_BASED

    def score(self, start, window, rank, count):
        return ConfidenceMode.SCORERS[self.variant](start, window, rank, count)

    def __repr__(self):
        return "ConfidenceMode(%r)" % self.variant


def confidence_time(word_start, window: WindowSpec):
    """Negative distance of the word start from the center of the window's actual span."""
    if word_start is None:
        raise ConfidenceError("word has no start time; use the position-based confidence mode")
    return -abs(word_start - window.center)


def confidence_position(word_rank, window_word_count):
    """Negative distance of the relative rank j/C from the middle of the window."""
    if window_word_count == 0:
        return NULL_POSITION_SCORE
    if window_word_count < 0 or not 0 <= word_rank <= window_word_count:
        raise ValidationError("rank %r outside 0..%r" % (word_rank, window_word_count))
    return -abs(word_rank / window_word_count - 0.5)


@confidence(name=TIME_BASED)
def score_time(start, window, rank, count):
    return confidence_time(start, window)


@confidence(name=POSITION_BASED)
def score_position(start, window, rank, count):
    if rank is None:
        return NULL_POSITION_SCORE
    return confidence_position(rank, count)


@dataclass
class MergeDiagnostics:
    pairs: int = 0
    agreements: int = 0
    conflicts_won_even: int = 0
    conflicts_won_odd: int = 0
    null_wins: int = 0

    def to_dict(self, utterance_id=None):
        d = {
            'pairs': self.pairs,
            'agreements': self.agreements,
            'conflicts_won_even': self.conflicts_won_even,
            'conflicts_won_odd': self.conflicts_won_odd,
            'null_wins': self.null_wins,
        }
        if utterance_id is not None:
            d['utt'] = utterance_id
        return d


@dataclass(frozen=True)
class MergeResult:
    transcript: Transcript
    diagnostics: MergeDiagnostics = field(default_factory=MergeDiagnostics)


def _window_ranks(alignment):
    """1-based rank of each pair side among its window's words, and the word count per window."""
    ranks = []
    counts = {}
    for pair in alignment.pairs:
        sides = []
        for word in (pair.p, pair.q):
            if word is None:
                sides.append(None)
                continue
            counts[word.window_index] = counts.get(word.window_index, 0) + 1
            sides.append(counts[word.window_index])
        ranks.append(sides)
    return ranks, counts


def _uncontested(word, layout: WindowLayout):
    if len(layout) == 1:
        return True
    return word.start is not None and layout.single_covered(word.start)


def merge_detailed(alignment: Alignment, layout: WindowLayout, mode=TIME_BASED, utterance_id=None) -> MergeResult:
    if not isinstance(mode, ConfidenceMode):
        mode = ConfidenceMode(mode)
    if mode.needs_timing:
        for pair in alignment.pairs:
            for word in (pair.p, pair.q):
                if word is not None and word.start is None:
                    raise ConfidenceError("word %r in window %d has no start time; "
                                          "use the position-based confidence mode" % (word.token, word.window_index))

    ranks, counts = _window_ranks(alignment)

    def word_score(word, rank):
        return mode.score(word.start, layout[word.window_index], rank, counts[word.window_index])

    def null_score(present, stream):
        # the missing word inherits the present word's start time
        window = None
        if present.start is not None:
            window = layout.stream_window_at(present.start, stream)
        if window is None and mode.needs_timing:
            return None
        return mode.score(present.start, window, None, None)

    diag = MergeDiagnostics(pairs=len(alignment.pairs))
    words = []
    for pair, (p_rank, q_rank) in zip(alignment.pairs, ranks):
        p, q = pair.p, pair.q
        if p is not None and q is not None:
            winner = p if word_score(p, p_rank) >= word_score(q, q_rank) else q
            if pair.label == CORRECT:
                diag.agreements += 1
            elif winner is p:
                diag.conflicts_won_even += 1
            else:
                diag.conflicts_won_odd += 1
            words.append(winner)
            continue

        present, missing_stream = (p, ODD) if p is not None else (q, EVEN)
        if _uncontested(present, layout):
            words.append(present)
            continue
        empty = null_score(present, missing_stream)
        if empty is None:
            words.append(present)
            continue
        f_present = word_score(present, p_rank if present is p else q_rank)
        # ties go to the even side, whichever of the two is missing
        present_wins = f_present >= empty if present is p else f_present > empty
        if present_wins:
            words.append(present)
        else:
            diag.null_wins += 1

    return MergeResult(Transcript(utterance_id or 'merged', tuple(words)), diag)


def merge(alignment: Alignment, layout: WindowLayout, mode=TIME_BASED, utterance_id=None) -> Transcript:
    return merge_detailed(alignment, layout, mode, utterance_id).transcript


def merge_pipeline_detailed(per_window: Transcript, layout: WindowLayout, mode=TIME_BASED,
                            lowercase=False) -> MergeResult:
    y_even, y_odd = split_streams(per_window)
    alignment = align_constrained(y_even, y_odd, layout, lowercase=lowercase)
    return merge_detailed(alignment, layout, mode, per_window.utterance_id)


def merge_pipeline(per_window: Transcript, layout: WindowLayout, mode=TIME_BASED, lowercase=False) -> Transcript:
    """Split into streams, align them and keep the more confident word of every pair."""
    return merge_pipeline_detailed(per_window, layout, mode, lowercase).transcript
