import pytest

from longform_asr.transcript import ReferenceWord, Transcript, WordHyp
from longform_asr.windowing import layout_overlapping


def hyp(token, start, window_index, duration=0.3):
    return WordHyp(token, start, duration, window_index)


def words_in(ref_words, window):
    return [w for w in ref_words if window.start <= w.start < window.end]


@pytest.fixture
def small_layout():
    # windows [0,4) [2,6) [4,8)
    return layout_overlapping(8.0, 4.0)


@pytest.fixture
def small_reference():
    return [ReferenceWord(t, s, 0.3) for t, s in (('a', 0.5), ('b', 2.5), ('c', 3.5), ('d', 5.0), ('e', 7.0))]


@pytest.fixture
def small_per_window(small_layout, small_reference):
    """Noiseless per-window hypotheses of the small reference."""
    words = []
    for window in small_layout:
        words.extend(hyp(w.token, w.start, window.index) for w in words_in(small_reference, window))
    return Transcript('u1', tuple(words))
