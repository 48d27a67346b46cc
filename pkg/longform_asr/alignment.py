#!/usr/bin/env python3
"""Edit-distance alignment.

Two aligners share the same dynamic program shape, a row-by-row fill where
horizontal moves are resolved with a running minimum:

    D[i][j] - j = min_{k <= j} (min(D[i-1][k] + 1, D[i-1][k-1] + c(i, k)) - k)

``align_constrained`` matches the even and odd hypothesis streams and only lets
words from overlapping windows (window indices one apart) form a pair.
Its table is banded: a cell where the next word of one stream can no longer
overlap any remaining word of the other stream is never entered, so such a word
is emitted as an unmatched pair as soon as it is reached. Every alignment that
passes through those cells has an equal-cost rearrangement that avoids them,
so the band does not change the minimum cost.

``align_levenshtein`` is the plain unit-cost edit distance used for WER.
"""
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from .errors import LayoutError
from .transcript import EVEN, ODD, Transcript, WerReport, WordHyp, normalize_token

CORRECT = 'C'
SUBSTITUTION = 'S'
DELETION = 'D'
INSERTION = 'I'

INF = np.int32(1 << 29)


@dataclass(frozen=True)
class AlignedPair:
    p: Any = None
    q: Any = None
    label: str = CORRECT
    p_index: Optional[int] = None
    q_index: Optional[int] = None

    def __post_init__(self):
        if self.p is None and self.q is None:
            raise LayoutError("an aligned pair needs at least one word")
        if isinstance(self.p, WordHyp) and isinstance(self.q, WordHyp):
            if abs(self.p.window_index - self.q.window_index) != 1:
                raise LayoutError("words from windows %d and %d do not overlap"
                                  % (self.p.window_index, self.q.window_index))

    @property
    def matched(self):
        return self.p is not None and self.q is not None


@dataclass(frozen=True)
class Alignment:
    pairs: Tuple[AlignedPair, ...] = field(default_factory=tuple)
    cost: int = 0

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def projection(self, side):
        return [getattr(pair, side) for pair in self.pairs if getattr(pair, side) is not None]

    def counts(self):
        result = {CORRECT: 0, SUBSTITUTION: 0, DELETION: 0, INSERTION: 0}
        for pair in self.pairs:
            result[pair.label] += 1
        return result


def _label(p_tok, q_tok):
    if p_tok is None:
        return INSERTION
    if q_tok is None:
        return DELETION
    return CORRECT if p_tok == q_tok else SUBSTITUTION


def _token_ids(a, b):
    vocab = {}
    ids_a = np.fromiter((vocab.setdefault(t, len(vocab)) for t in a), dtype=np.int64, count=len(a))
    ids_b = np.fromiter((vocab.setdefault(t, len(vocab)) for t in b), dtype=np.int64, count=len(b))
    return ids_a, ids_b


def _fill_row(up, diag, js):
    # horizontal moves: D[j] = min_k (E[k] + j - k)
    e = np.minimum(up, diag)
    return (np.minimum.accumulate(e - js) + js).astype(np.int32)


def _check_streams(even_words, odd_words, layout):
    for words, parity in ((even_words, EVEN), (odd_words, ODD)):
        last = -1
        for w in words:
            if w.stream != parity:
                raise LayoutError("window %d cannot appear in the %s stream" % (w.window_index, parity))
            if w.window_index < last:
                raise LayoutError("%s stream is not in window order" % parity)
            last = w.window_index
            if layout is not None and w.window_index >= len(layout):
                raise LayoutError("window %d is not part of the layout" % w.window_index)
    if layout is not None:
        # matching windows one index apart is only valid for chained layouts
        for k in range(len(layout) - 1):
            if not layout.windows_overlap(k, k + 1):
                raise LayoutError("windows %d and %d of the layout do not overlap" % (k, k + 1))
            if k + 2 < len(layout) and layout.windows_overlap(k, k + 2):
                raise LayoutError("windows %d and %d overlap; layout is not a 50%% overlap chain" % (k, k + 2))


def align_constrained(y_even: Transcript, y_odd: Transcript, layout=None, lowercase=False) -> Alignment:
    """Minimum edit-distance matching of the two streams, pairing only words of overlapping windows.

    Equal-cost alternatives are resolved during the backtrace: a match is
    preferred over a gap, and between the two gaps the unmatched even word is
    placed first.
    """
    even = list(y_even.words)
    odd = list(y_odd.words)
    _check_streams(even, odd, layout)
    n, m = len(even), len(odd)

    ew = np.array([w.window_index for w in even], dtype=np.int64)
    ow = np.array([w.window_index for w in odd], dtype=np.int64)
    te, to = _token_ids([normalize_token(w.token, lowercase) for w in even],
                        [normalize_token(w.token, lowercase) for w in odd])

    # band [lo[i], hi[i]] of row i, both ends nondecreasing in i
    lo = np.zeros(n + 1, dtype=np.int64)
    hi = np.full(n + 1, m, dtype=np.int64)
    if n:
        lo[1:] = np.searchsorted(ow, ew - 1, side='left')
        hi[:n] = np.searchsorted(ow, ew + 1, side='right')

    rows = [np.arange(0, hi[0] + 1, dtype=np.int32)]
    for i in range(1, n + 1):
        a, b = int(lo[i]), int(hi[i])
        pa, pb = int(lo[i - 1]), int(hi[i - 1])
        prev = rows[i - 1]
        js = np.arange(a, b + 1, dtype=np.int64)

        up = np.full(js.size, INF, dtype=np.int64)
        s, t = max(a, pa), min(b, pb)
        if s <= t:
            up[s - a:t - a + 1] = prev[s - pa:t - pa + 1] + 1

        diag = np.full(js.size, INF, dtype=np.int64)
        s, t = max(a, pa + 1, 1), min(b, pb + 1)
        if s <= t:
            cols = np.arange(s, t + 1)
            admissible = np.abs(ow[cols - 1] - ew[i - 1]) == 1
            cost = (to[cols - 1] != te[i - 1]).astype(np.int64)
            vals = prev[s - 1 - pa:t - pa].astype(np.int64) + cost
            diag[s - a:t - a + 1] = np.where(admissible, vals, INF)

        rows.append(_fill_row(up, diag, js))

    # scalar access from here on
    lo_, hi_ = lo.tolist(), hi.tolist()
    ew_, ow_, te_, to_ = ew.tolist(), ow.tolist(), te.tolist(), to.tolist()
    table = [r.tolist() for r in rows]
    inf = int(INF)

    def cell(i, j):
        if i < 0 or j < lo_[i] or j > hi_[i]:
            return inf
        return table[i][j - lo_[i]]

    pairs = []
    i, j = n, m
    while i > 0 or j > 0:
        here = cell(i, j)
        if (i > 0 and j > 0 and abs(ow_[j - 1] - ew_[i - 1]) == 1
                and cell(i - 1, j - 1) + (to_[j - 1] != te_[i - 1]) == here):
            p, q = even[i - 1], odd[j - 1]
            label = CORRECT if to_[j - 1] == te_[i - 1] else SUBSTITUTION
            pairs.append(AlignedPair(p, q, label, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif j > 0 and cell(i, j - 1) + 1 == here:
            pairs.append(AlignedPair(None, odd[j - 1], INSERTION, None, j - 1))
            j -= 1
        else:
            pairs.append(AlignedPair(even[i - 1], None, DELETION, i - 1, None))
            i -= 1
    pairs.reverse()
    return Alignment(tuple(pairs), int(rows[n][m - lo[n]]))


def align_levenshtein(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Unit-cost edit distance; on ties substitution beats insertion beats deletion."""
    ref = list(ref)
    hyp = list(hyp)
    n, m = len(ref), len(hyp)
    r, h = _token_ids(ref, hyp)
    js = np.arange(m + 1, dtype=np.int64)

    table = np.empty((n + 1, m + 1), dtype=np.int32)
    table[0] = js
    for i in range(1, n + 1):
        up = table[i - 1].astype(np.int64) + 1
        diag = np.full(m + 1, INF, dtype=np.int64)
        diag[1:] = table[i - 1, :-1] + (h != r[i - 1])
        table[i] = _fill_row(up, diag, js)

    pairs = []
    i, j = n, m
    while i > 0 or j > 0:
        here = table[i, j]
        if i > 0 and j > 0 and table[i - 1, j - 1] + (h[j - 1] != r[i - 1]) == here:
            pairs.append(AlignedPair(ref[i - 1], hyp[j - 1], _label(ref[i - 1], hyp[j - 1]), i - 1, j - 1))
            i, j = i - 1, j - 1
        elif j > 0 and table[i, j - 1] + 1 == here:
            pairs.append(AlignedPair(None, hyp[j - 1], INSERTION, None, j - 1))
            j -= 1
        else:
            pairs.append(AlignedPair(ref[i - 1], None, DELETION, i - 1, None))
            i -= 1
    pairs.reverse()
    return Alignment(tuple(pairs), int(table[n, m]))


def _as_tokens(seq, lowercase):
    if isinstance(seq, Transcript):
        seq = seq.words
    return [normalize_token(w.token if isinstance(w, WordHyp) else w, lowercase) for w in seq]


def score_wer(ref, hyp, lowercase=False) -> WerReport:
    ref = _as_tokens(ref, lowercase)
    hyp = _as_tokens(hyp, lowercase)
    counts = align_levenshtein(ref, hyp).counts()
    return WerReport.from_counts(len(ref), counts[SUBSTITUTION], counts[DELETION], counts[INSERTION])
