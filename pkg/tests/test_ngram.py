from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codeseer.ngram import NGramError, NGramModel, train_ngram


def brute_force_counts(streams, order):
    """Oracle: enumerate every gram with plain slicing, no shared code."""
    tables = {k: Counter() for k in range(1, order + 1)}
    for ids in streams:
        ids = list(ids)
        for k in range(1, order + 1):
            for start in range(0, len(ids) - k + 1):
                tables[k][tuple(ids[start : start + k])] += 1
    return tables


class TestTraining:
    def test_bigram_counts_direct(self):
        model = train_ngram([[2, 3, 2, 3]], vocab_size=4, order=2)
        assert model.counts[2][(2, 3)] == 2
        assert model.counts[2][(3, 2)] == 1
        assert model.counts[1][(2,)] == 2

    def test_order_one_is_unigram_frequencies(self):
        model = train_ngram([[5, 5, 6]], vocab_size=8, order=1)
        assert model.counts == {1: {(5,): 2, (6,): 1}}

    def test_grams_do_not_span_streams(self):
        model = train_ngram([[2, 3], [3, 4]], vocab_size=5, order=2)
        assert (3, 3) not in model.counts[2]
        assert (3, 4) in model.counts[2]

    def test_thousand_token_fixture_matches_recount(self):
        rng = np.random.default_rng(11)
        streams = [rng.integers(0, 30, size=size).tolist() for size in (400, 350, 250)]
        model = train_ngram(streams, vocab_size=30, order=3)
        oracle = brute_force_counts(streams, 3)
        for k in (1, 2, 3):
            assert model.counts[k] == dict(oracle[k])

    def test_empty_corpus_rejected(self):
        with pytest.raises(NGramError):
            train_ngram([], vocab_size=4)
        with pytest.raises(NGramError):
            train_ngram([[]], vocab_size=4)

    def test_bad_hyperparameters_rejected(self):
        with pytest.raises(NGramError):
            train_ngram([[1, 2]], vocab_size=4, order=0)
        with pytest.raises(NGramError):
            train_ngram([[1, 2]], vocab_size=4, discount=1.0)


class TestProbabilities:
    def test_tiny_discount_recovers_relative_counts(self):
        model = train_ngram([[2, 3, 2, 3]], vocab_size=4, order=2, discount=1e-12)
        assert model.prob([2], 3) == pytest.approx(1.0, abs=1e-9)

    def test_uniform_fallback_with_no_counts(self):
        model = NGramModel(order=2, discount=0.75, vocab_size=10,
                           counts={1: {}, 2: {}})
        probs = model.prob_vector([3])
        np.testing.assert_allclose(probs, 0.1)

    def test_sum_to_one_over_random_contexts(self):
        """Oracle: explicit summation over the whole vocabulary."""
        rng = np.random.default_rng(7)
        streams = [rng.integers(0, 40, size=300).tolist() for _ in range(3)]
        model = train_ngram(streams, vocab_size=40, order=3)
        for _ in range(100):
            context = rng.integers(0, 40, size=rng.integers(0, 6)).tolist()
            total = sum(model.prob(context, t) for t in range(40))
            assert total == pytest.approx(1.0, abs=1e-6)
            assert model.prob_vector(context).sum() == pytest.approx(1.0, abs=1e-6)

    def test_every_token_strictly_positive(self):
        model = train_ngram([[2, 3, 2, 3, 4]], vocab_size=6, order=3)
        assert model.prob_vector([2, 3]).min() > 0

    def test_vector_and_scalar_paths_agree(self):
        rng = np.random.default_rng(3)
        streams = [rng.integers(0, 20, size=200).tolist()]
        model = train_ngram(streams, vocab_size=20, order=3)
        for _ in range(20):
            context = rng.integers(0, 20, size=2).tolist()
            vec = model.prob_vector(context)
            for t in range(20):
                assert model.prob(context, t) == vec[t]

    def test_out_of_range_token_rejected(self):
        model = train_ngram([[1, 2, 3]], vocab_size=4, order=2)
        with pytest.raises(IndexError):
            model.prob([1], 4)
        with pytest.raises(IndexError):
            model.prob_vector([9])

    def test_longer_context_truncated_to_order(self):
        model = train_ngram([[2, 3, 4, 2, 3, 4]], vocab_size=5, order=2)
        long = model.prob_vector([4, 4, 4, 2])
        short = model.prob_vector([2])
        np.testing.assert_array_equal(long, short)


class TestRanking:
    def test_most_frequent_continuation_first(self):
        model = train_ngram([[2, 3, 2, 3]], vocab_size=4, order=2)
        top = model.predict_topk([2], k=1)
        assert top[0][0] == 3

    def test_k_at_least_vocab_returns_permutation(self):
        model = train_ngram([[2, 3, 2, 3]], vocab_size=4, order=2)
        ranked = model.predict_topk([2], k=99)
        assert sorted(t for t, _ in ranked) == [0, 1, 2, 3]

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(5)
        streams = [rng.integers(0, 25, size=400).tolist()]
        model = train_ngram(streams, vocab_size=25, order=3)
        for _ in range(25):
            context = rng.integers(0, 25, size=2).tolist()
            probs = model.prob_vector(context)
            oracle = sorted(range(25), key=lambda t: (-probs[t], t))
            ranked = [t for t, _ in model.predict_topk(context, k=25)]
            assert ranked == oracle

    @given(st.integers(min_value=0, max_value=2 ** 31))
    @settings(max_examples=20, deadline=None)
    def test_growing_k_is_a_prefix(self, seed):
        rng = np.random.default_rng(seed)
        streams = [rng.integers(0, 12, size=60).tolist()]
        model = train_ngram(streams, vocab_size=12, order=2)
        context = rng.integers(0, 12, size=1).tolist()
        full = model.predict_topk(context, k=12)
        for k in (1, 3, 7):
            assert model.predict_topk(context, k) == full[:k]


@given(st.lists(st.lists(st.integers(min_value=0, max_value=9), min_size=1, max_size=30),
                min_size=1, max_size=4))
@settings(max_examples=40, deadline=None)
def test_prefix_count_invariant(streams):
    model = train_ngram(streams, vocab_size=10, order=3)
    total = sum(len(s) for s in streams)
    assert sum(model.counts[1].values()) == total
    for k in (2, 3):
        for gram, count in model.counts[k].items():
            assert model.counts[k - 1][gram[:-1]] >= count


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        model = train_ngram([rng.integers(0, 15, size=120).tolist()], vocab_size=15)
        path = tmp_path / "model.ngram"
        model.save(path)
        loaded = NGramModel.load(path)
        assert loaded.order == model.order
        assert loaded.discount == model.discount
        assert loaded.vocab_size == model.vocab_size
        assert loaded.counts == model.counts
        context = [3, 4]
        np.testing.assert_array_equal(loaded.prob_vector(context), model.prob_vector(context))

    def test_save_is_deterministic(self, tmp_path):
        model = train_ngram([[5, 6, 7, 5, 6]], vocab_size=8)
        a, b = tmp_path / "a", tmp_path / "b"
        model.save(a)
        model.save(b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad"
        path.write_bytes(b"WHAT" + bytes(30))
        with pytest.raises(NGramError, match="magic"):
            NGramModel.load(path)

    def test_bad_version_rejected(self, tmp_path):
        model = train_ngram([[1, 2, 3]], vocab_size=4)
        path = tmp_path / "model.ngram"
        model.save(path)
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(NGramError, match="version"):
            NGramModel.load(path)

    def test_truncation_rejected(self, tmp_path):
        model = train_ngram([[1, 2, 3, 1, 2]], vocab_size=4)
        path = tmp_path / "model.ngram"
        model.save(path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(NGramError, match="truncated"):
            NGramModel.load(path)
