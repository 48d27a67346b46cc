"""End-to-end checks on long inputs; deselected by default, run with ``pytest -m slow``."""
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import binomtest

from longform_asr.alignment import align_constrained, score_wer
from longform_asr.consensus import merge_pipeline
from longform_asr.kernels import GmmMixtureParams, gmm_weights, latency_loss, monotonic_expected
from longform_asr.simulator import CorruptionConfig, simulate_utterance, study, synthesize_reference
from longform_asr.windowing import OVERLAPPING

from test_alignment import check_alignment, constrained_oracle, levenshtein_oracle, streams
from test_kernels import expected_oracle

pytestmark = pytest.mark.slow


@settings(max_examples=1000, deadline=None)
@given(per_window=st.lists(st.lists(st.sampled_from('abcd'), max_size=4), min_size=1, max_size=5))
def test_constrained_alignment_is_optimal(per_window):
    even, odd = streams(per_window)
    alignment = align_constrained(even, odd)
    assert alignment.cost == constrained_oracle(even, odd)
    check_alignment(alignment, even, odd)


@settings(max_examples=500, deadline=None)
@given(st.integers(1, 3).flatmap(lambda I: st.integers(1, 6).flatmap(
    lambda T: arrays(np.float64, (I, T), elements=st.floats(0.0, 1.0)))))
def test_monotonic_expectation_is_exact(p):
    oracle, ended = expected_oracle(p)
    for i, alpha in enumerate(monotonic_expected(p)):
        np.testing.assert_allclose(alpha.weights, oracle[i], atol=1e-9)
        assert alpha.deficit == pytest.approx(ended[i], abs=1e-9)


@settings(max_examples=1000, deadline=None)
@given(ref=st.lists(st.sampled_from('abcd'), max_size=6), hyp=st.lists(st.sampled_from('abcd'), max_size=6))
def test_wer_is_optimal(ref, hyp):
    report = score_wer(ref, hyp)
    assert report.errors == levenshtein_oracle(tuple(ref), tuple(hyp))
    if ref:
        assert report.wer == (report.substitutions + report.deletions + report.insertions) / len(ref)


@settings(max_examples=1000)
@given(K=st.integers(1, 4), data=st.data())
def test_gmm_means_always_advance(K, data):
    draw = lambda lo, hi: np.array(data.draw(st.lists(st.floats(lo, hi), min_size=K, max_size=K)))
    params = GmmMixtureParams(draw(-5, 5), draw(-3, 3), draw(-4, 3), draw(0, 50))
    _, means = gmm_weights(params, 20)
    assert np.all(means > params.prev_means)


@settings(max_examples=100)
@given(T=st.integers(1, 20), data=st.data())
def test_latency_of_identical_one_hot_steps_is_zero(T, data):
    j = data.draw(st.integers(0, T - 1))
    one_hot = np.eye(T)[j]
    assert latency_loss(one_hot, one_hot) == 0.0


@settings(max_examples=1000)
@given(data=st.data(), T=st.integers(1, 10))
def test_latency_is_nonnegative(data, T):
    weights = arrays(np.float64, T, elements=st.floats(0.0, 1.0))
    assert latency_loss(data.draw(weights), data.draw(weights)) >= 0.0


def test_overlapping_inference_beats_fixed_segmentation():
    reference = synthesize_reference(seed=0, seconds=300.0)
    report = study([reference], 16.0, CorruptionConfig(seed=0), 100)
    assert report['wins'] >= 75
    assert report['wins'] > 4 * report['losses']
    assert report['mean_relative_reduction'] >= 0.05


def test_shared_difficulty_makes_overlap_win_nearly_always():
    reference = synthesize_reference(seed=0, seconds=300.0)
    report = study([reference], 16.0, CorruptionConfig(seed=0, shared_difficulty=True), 100)
    assert report['wins'] >= 95
    assert report['mean_relative_reduction'] >= 0.05


def test_without_boundary_effects_both_arms_score_alike():
    reference = synthesize_reference(seed=0, seconds=300.0)
    config = CorruptionConfig(seed=0, warmup_multiplier=1.0, boundary_cut_drop_prob=0.0)
    report = study([reference], 16.0, config, 100)
    assert report['ties'] < 100
    decided = report['wins'] + report['losses']
    assert binomtest(report['wins'], decided, 0.5).pvalue > 0.01


@pytest.mark.parametrize("seed", range(50))
def test_noiseless_round_trip(seed):
    utt, ref_words = synthesize_reference(seed=seed, seconds=120.0)
    hyp, layout = simulate_utterance(utt, ref_words, OVERLAPPING, 16.0, CorruptionConfig.noiseless(seed))
    assert score_wer([w.token for w in ref_words], merge_pipeline(hyp, layout)).wer == 0.0


def test_one_hour_merge_is_fast():
    utt, ref_words = synthesize_reference(seed=1, seconds=3600.0)
    hyp, layout = simulate_utterance(utt, ref_words, OVERLAPPING, 16.0, CorruptionConfig(seed=1))
    started = time.perf_counter()
    merged = merge_pipeline(hyp, layout)
    assert time.perf_counter() - started < 1.0
    assert score_wer([w.token for w in ref_words], merged).wer < 0.2
