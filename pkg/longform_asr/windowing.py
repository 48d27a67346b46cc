#!/usr/bin/env python3
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

from .errors import ValidationError
from .transcript import EVEN, ODD, Transcript, WindowSpec

OVERLAPPING = 'overlapping'
FIXED = 'fixed'


def _check_lengths(utterance_length, window_length):
    for name, value in (('utterance length', utterance_length), ('window length', window_length)):
        if value is None or not math.isfinite(value) or value <= 0:
            raise ValidationError("%s must be a positive number, got %r" % (name, value))


@dataclass(frozen=True)
class WindowLayout:
    utterance_length: float
    window_length: float
    windows: Tuple[WindowSpec, ...]
    kind: str = OVERLAPPING

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def __getitem__(self, index):
        return self.windows[index]

    @property
    def overlap(self):
        return self.window_length / 2 if self.kind == OVERLAPPING else 0.0

    @cached_property
    def _starts(self):
        return [w.start for w in self.windows]

    def windows_at(self, t) -> List[WindowSpec]:
        # no window is longer than L, so only the last few starting before t can reach it
        last = bisect_right(self._starts, t)
        first = max(0, last - 3)
        return [w for w in self.windows[first:last] if w.contains(t)]

    def coverage(self, t):
        return len(self.windows_at(t))

    def stream_window_at(self, t, stream) -> Optional[WindowSpec]:
        """The window of the given parity whose span contains t, if any."""
        for w in self.windows_at(t):
            if w.stream == stream:
                return w
        return None

    def single_covered(self, t):
        return self.coverage(t) == 1

    def windows_overlap(self, a, b):
        return self.windows[a].overlaps(self.windows[b])


def layout_overlapping(utterance_length, L) -> WindowLayout:
    """Windows of length L every L/2 seconds; the last one ends at the utterance end."""
    _check_lengths(utterance_length, L)
    if utterance_length <= L:
        return WindowLayout(utterance_length, L, (WindowSpec(0, 0.0, utterance_length),), OVERLAPPING)
    half = L / 2
    windows = []
    k = 0
    while True:
        start = k * half
        end = min(start + L, utterance_length)
        windows.append(WindowSpec(k, start, end - start))
        if start + L >= utterance_length:
            break
        k += 1
    return WindowLayout(utterance_length, L, tuple(windows), OVERLAPPING)


def layout_fixed(utterance_length, L) -> WindowLayout:
    """Disjoint windows [kL, (k+1)L), the last one truncated; the naive segmentation baseline."""
    _check_lengths(utterance_length, L)
    windows = []
    k = 0
    while k * L < utterance_length:
        start = k * L
        windows.append(WindowSpec(k, start, min(start + L, utterance_length) - start))
        k += 1
    return WindowLayout(utterance_length, L, tuple(windows), FIXED)


LAYOUTS = {
    OVERLAPPING: layout_overlapping,
    FIXED: layout_fixed,
}


def make_layout(kind, utterance_length, L) -> WindowLayout:
    if kind not in LAYOUTS:
        raise ValidationError("unknown layout kind '%s'" % kind)
    return LAYOUTS[kind](utterance_length, L)


def infer_layout(transcript: Transcript, L, utterance_length=None) -> WindowLayout:
    """Rebuild the overlapping layout a windowed transcript was decoded with.

    Without a known utterance length, the length is taken from the last word
    end when it is consistent with the number of windows, else the final
    window is assumed to be full length.
    """
    _check_lengths(L, L)
    if utterance_length is not None:
        return layout_overlapping(utterance_length, L)
    count = 1 + max((w.window_index for w in transcript.words), default=0)
    half = L / 2
    lower = 0.0 if count == 1 else count * half
    upper = L if count == 1 else (count + 1) * half
    ends = [w.end if w.timed else w.start for w in transcript.words if w.start is not None]
    last = max(ends, default=0.0)
    return layout_overlapping(last if lower < last <= upper else upper, L)


def split_streams(transcript: Transcript) -> Tuple[Transcript, Transcript]:
    """Concatenate even-numbered and odd-numbered windows into two parallel hypotheses."""
    ordered = sorted(enumerate(transcript.words), key=lambda iw: (iw[1].window_index, iw[0]))
    even = tuple(w for _, w in ordered if w.stream == EVEN)
    odd = tuple(w for _, w in ordered if w.stream == ODD)
    return Transcript(transcript.utterance_id, even), Transcript(transcript.utterance_id, odd)


def assign_words(words: Sequence, layout: WindowLayout) -> List[Tuple[WindowSpec, List[int]]]:
    """For each window, the indices of the (time-sorted) words starting inside it."""
    starts = [w.start for w in words]
    result = []
    for window in layout.windows:
        lo = bisect_left(starts, window.start)
        hi = bisect_left(starts, window.end)
        result.append((window, list(range(lo, hi))))
    return result
