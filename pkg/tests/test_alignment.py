from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longform_asr.alignment import (CORRECT, DELETION, INSERTION, SUBSTITUTION, AlignedPair, Alignment,
                                    align_constrained, align_levenshtein, score_wer)
from longform_asr.errors import LayoutError
from longform_asr.transcript import Transcript, WordHyp
from longform_asr.windowing import layout_fixed, layout_overlapping


def streams(per_window, limit=8):
    """Even and odd stream transcripts from a list of per-window token lists."""
    even = [WordHyp(t, window_index=k) for k in range(0, len(per_window), 2) for t in per_window[k]][:limit]
    odd = [WordHyp(t, window_index=k) for k in range(1, len(per_window), 2) for t in per_window[k]][:limit]
    return Transcript('u', tuple(even)), Transcript('u', tuple(odd))


def constrained_oracle(even, odd):
    even, odd = even.words, odd.words

    @lru_cache(maxsize=None)
    def cost(i, j):
        if i == len(even) and j == len(odd):
            return 0
        options = []
        if i < len(even):
            options.append(cost(i + 1, j) + 1)
        if j < len(odd):
            options.append(cost(i, j + 1) + 1)
        if i < len(even) and j < len(odd) and abs(even[i].window_index - odd[j].window_index) == 1:
            options.append(cost(i + 1, j + 1) + (even[i].token != odd[j].token))
        return min(options)

    return cost(0, 0)


def reference_alignment(even, odd):
    """Plain full-table alignment of the two streams, written without the row machinery.

    A state is skipped when a pending word of one stream is more than one
    window behind a word already taken from the other stream. Ties are broken
    walking back from the end: match, then unmatched odd word, then unmatched
    even word.
    """
    even, odd = even.words, odd.words
    n, m = len(even), len(odd)
    inf = float('inf')

    def valid(i, j):
        if i > 0 and j < m and odd[j].window_index < even[i - 1].window_index - 1:
            return False
        if j > 0 and i < n and even[i].window_index < odd[j - 1].window_index - 1:
            return False
        return True

    def pairable(i, j):
        return abs(even[i].window_index - odd[j].window_index) == 1

    D = [[inf] * (m + 1) for _ in range(n + 1)]
    D[0][0] = 0
    for i in range(n + 1):
        for j in range(m + 1):
            if (i, j) == (0, 0) or not valid(i, j):
                continue
            options = []
            if i and j and pairable(i - 1, j - 1):
                options.append(D[i - 1][j - 1] + (even[i - 1].token != odd[j - 1].token))
            if j:
                options.append(D[i][j - 1] + 1)
            if i:
                options.append(D[i - 1][j] + 1)
            D[i][j] = min(options)

    pairs = []
    i, j = n, m
    while i or j:
        if i and j and pairable(i - 1, j - 1) and D[i - 1][j - 1] + (even[i - 1].token != odd[j - 1].token) == D[i][j]:
            label = CORRECT if even[i - 1].token == odd[j - 1].token else SUBSTITUTION
            pairs.append(AlignedPair(even[i - 1], odd[j - 1], label, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif j and D[i][j - 1] + 1 == D[i][j]:
            pairs.append(AlignedPair(None, odd[j - 1], INSERTION, None, j - 1))
            j -= 1
        else:
            pairs.append(AlignedPair(even[i - 1], None, DELETION, i - 1, None))
            i -= 1
    return Alignment(tuple(reversed(pairs)), D[n][m])


def levenshtein_oracle(ref, hyp):
    @lru_cache(maxsize=None)
    def cost(i, j):
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        return min(cost(i + 1, j) + 1, cost(i, j + 1) + 1, cost(i + 1, j + 1) + (ref[i] != hyp[j]))

    return cost(0, 0)


window_tokens = st.lists(st.lists(st.sampled_from('abc'), max_size=4), min_size=1, max_size=5)


def check_alignment(alignment, even, odd):
    assert alignment.projection('p') == list(even.words)
    assert alignment.projection('q') == list(odd.words)
    for pair in alignment:
        if pair.matched:
            assert abs(pair.p.window_index - pair.q.window_index) == 1
            assert pair.label == (CORRECT if pair.p.token == pair.q.token else SUBSTITUTION)
        else:
            assert pair.label == (DELETION if pair.q is None else INSERTION)
    assert alignment.cost == sum(pair.label != CORRECT for pair in alignment)


@settings(max_examples=300, deadline=None)
@given(per_window=window_tokens)
def test_constrained_matches_oracle(per_window):
    even, odd = streams(per_window)
    alignment = align_constrained(even, odd)
    assert alignment.cost == constrained_oracle(even, odd)
    check_alignment(alignment, even, odd)


@settings(max_examples=300, deadline=None)
@given(per_window=st.lists(st.lists(st.sampled_from('abc'), max_size=3), min_size=1, max_size=8))
def test_constrained_matches_full_table(per_window):
    even, odd = streams(per_window, limit=12)
    assert align_constrained(even, odd) == reference_alignment(even, odd)


def test_agreeing_streams_align_at_zero_cost():
    even, odd = streams([['a', 'b'], ['b', 'c'], ['c', 'd']])
    alignment = align_constrained(even, odd)
    assert alignment.cost == 2
    assert [(p.p and p.p.token, p.q and p.q.token, p.label) for p in alignment] == [
        ('a', None, DELETION), ('b', 'b', CORRECT), ('c', 'c', CORRECT), ('d', None, DELETION)]


def test_words_of_distant_windows_never_pair():
    # identical tokens, but windows 0 and 3 do not overlap
    even, odd = streams([['x'], [], [], ['x']])
    alignment = align_constrained(even, odd)
    assert alignment.cost == 2
    assert not any(pair.matched for pair in alignment)


def tokens(alignment):
    return [(pair.p and pair.p.token, pair.q and pair.q.token) for pair in alignment]


def test_substitution_beats_two_gaps():
    even, odd = streams([['a'], ['b']])
    assert [pair.label for pair in align_constrained(even, odd)] == [SUBSTITUTION]

    even, odd = streams([['a'], [], ['c'], ['b']])
    assert tokens(align_constrained(even, odd)) == [('a', None), ('c', 'b')]


def test_unmatched_even_word_comes_first_on_ties():
    even, odd = streams([['a'], [], [], ['z']])
    assert tokens(align_constrained(even, odd)) == [('a', None), (None, 'z')]


def test_unmatched_words_follow_window_order():
    # an odd word of window 1 that can never pair with the even word of window 4 is placed before it
    even, odd = streams([[], ['x'], [], [], ['p']])
    alignment = align_constrained(even, odd)
    assert alignment.cost == 2
    assert tokens(alignment) == [(None, 'x'), ('p', None)]
    assert [pair.label for pair in alignment] == [INSERTION, DELETION]


def test_empty_streams():
    empty = Transcript('u', ())
    assert align_constrained(empty, empty).pairs == ()
    even, odd = streams([['a', 'b']])
    alignment = align_constrained(even, empty)
    assert alignment.cost == 2
    assert [pair.label for pair in alignment] == [DELETION, DELETION]


def test_lowercase_matching():
    even, odd = streams([['Hello'], ['hello']])
    assert align_constrained(even, odd).cost == 1
    assert align_constrained(even, odd, lowercase=True).cost == 0


def test_stream_checks():
    odd_in_even = Transcript('u', (WordHyp('a', window_index=1),))
    with pytest.raises(LayoutError):
        align_constrained(odd_in_even, Transcript('u', ()))

    out_of_order = Transcript('u', (WordHyp('a', window_index=2), WordHyp('b', window_index=0)))
    with pytest.raises(LayoutError):
        align_constrained(out_of_order, Transcript('u', ()))

    even, odd = streams([['a'], ['a']])
    with pytest.raises(LayoutError):
        align_constrained(even, odd, layout_fixed(40.0, 16.0))
    with pytest.raises(LayoutError):
        align_constrained(even, odd, layout_overlapping(10.0, 16.0))
    assert align_constrained(even, odd, layout_overlapping(20.0, 16.0)).cost == 0


def test_aligned_pair_admissibility():
    with pytest.raises(LayoutError):
        AlignedPair(WordHyp('a', window_index=0), WordHyp('a', window_index=3))
    with pytest.raises(LayoutError):
        AlignedPair(None, None)


@settings(max_examples=300, deadline=None)
@given(ref=st.lists(st.sampled_from('abcd'), max_size=6), hyp=st.lists(st.sampled_from('abcd'), max_size=6))
def test_levenshtein_matches_oracle(ref, hyp):
    alignment = align_levenshtein(ref, hyp)
    assert alignment.cost == levenshtein_oracle(tuple(ref), tuple(hyp))
    assert alignment.projection('p') == ref
    assert alignment.projection('q') == hyp

    report = score_wer(ref, hyp)
    assert report.errors == alignment.cost
    if ref:
        assert report.wer == (report.substitutions + report.deletions + report.insertions) / len(ref)


def test_wer_examples():
    assert score_wer(['a', 'b', 'c'], ['a', 'b', 'c']).wer == 0.0
    report = score_wer(['a', 'b', 'c'], ['a', 'c'])
    assert (report.substitutions, report.deletions, report.insertions) == (0, 1, 0)
    assert report.to_dict()['wer'] == 0.3333

    report = score_wer(['a', 'b', 'c'], [])
    assert report.wer == 1.0 and report.deletions == 3


def test_levenshtein_prefers_substitution():
    alignment = align_levenshtein(['a'], ['b'])
    assert [pair.label for pair in alignment] == [SUBSTITUTION]


def test_wer_accepts_transcripts():
    hyp = Transcript('u', (WordHyp('A', window_index=0), WordHyp('b', window_index=0)))
    assert score_wer(['a', 'b'], hyp).wer == 0.5
    assert score_wer(['a', 'b'], hyp, lowercase=True).wer == 0.0


short_tokens = st.lists(st.sampled_from('abc'), max_size=6)


@given(a=short_tokens, b=short_tokens, c=short_tokens)
def test_levenshtein_is_a_metric(a, b, c):
    d = lambda x, y: align_levenshtein(x, y).cost
    assert d(a, b) == d(b, a)
    assert d(a, c) <= d(a, b) + d(b, c)
    assert (d(a, b) == 0) == (a == b)
