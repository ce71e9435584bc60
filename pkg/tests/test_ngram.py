import math
import warnings

import numpy as np
import pytest

from surprisuite import (ModelFileError, NGramBackend, TrainingError, handshake,
                         score, train)
from surprisuite.ngram import train_file

from kn_reference import ReferenceKN, all_queries, random_contexts, random_corpus

TINY = [["a", "b"], ["a", "c"]]


def tiny_model():
    return train(TINY, order=2, unk_threshold=1)


# ---------------------------------------------------------------------------
# The hand-worked bigram case

def test_hand_worked_discount():
    # bigram types: (s,a) twice; (a,b), (b,</s>), (a,c), (c,</s>) once each
    ref = ReferenceKN(TINY, order=2, unk_threshold=1)
    assert ref.raw[2][("<s>", "a")] == 2
    assert sum(1 for c in ref.raw[2].values() if c == 1) == 4
    assert sum(1 for c in ref.raw[2].values() if c == 2) == 1
    assert ref.discount[2] == pytest.approx(2 / 3, abs=0)


def test_hand_worked_prob_b_given_a():
    # max(1 - 2/3, 0)/2 + (2/3) * (2/2) * P_cont(b), P_cont(b) = 1/5 -> 0.3
    model = tiny_model()
    assert abs(model.prob(["a"], "b") - 0.3) < 1e-12
    ref = ReferenceKN(TINY, order=2, unk_threshold=1)
    assert abs(ref.prob(["a"], "b") - 0.3) < 1e-12


def test_unigram_model_normalizes():
    model = train(TINY, order=1, unk_threshold=1)
    total = sum(model.prob([], w) for w in model.prediction_vocab())
    assert total == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Oracle equivalence on random corpora

@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("order", [2, 3, 5])
def test_matches_reference_on_random_corpora(seed, order):
    rng = np.random.default_rng(1000 * order + seed)
    corpus = random_corpus(rng, n_sentences=int(rng.integers(5, 40)),
                           vocab_size=int(rng.integers(3, 12)))
    threshold = int(rng.integers(1, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = train(corpus, order=order, unk_threshold=threshold)
        ref = ReferenceKN(corpus, order=order, unk_threshold=threshold)
    for ctx, w in all_queries(corpus):
        assert model.prob(ctx, w) == pytest.approx(ref.prob(ctx, w), abs=1e-9), \
            (ctx, w)


def test_normalization_over_random_contexts():
    rng = np.random.default_rng(7)
    corpus = random_corpus(rng, n_sentences=60, vocab_size=9)
    model = train(corpus, order=3, unk_threshold=2)
    vocab = model.prediction_vocab()
    for ctx in random_contexts(rng, vocab + ["zzz"], n=30, max_len=4):
        total = sum(model.prob(ctx, w) for w in vocab)
        assert total == pytest.approx(1.0, abs=1e-9), ctx


def test_markov_locality():
    rng = np.random.default_rng(11)
    corpus = random_corpus(rng, n_sentences=50, vocab_size=8)
    model = train(corpus, order=3, unk_threshold=1)
    vocab = model.prediction_vocab()
    for ctx in random_contexts(rng, vocab, n=25, max_len=5):
        tail = ctx[-(model.order - 1):]
        for w in vocab[:5]:
            assert model.prob(ctx, w) == model.prob(tail, w)


def test_oov_is_mapped_to_unknown():
    model = train([["a", "a", "b", "b"]], order=2, unk_threshold=2)
    assert model.prob(["a"], "zzz") == model.prob(["a"], "<unk>")
    assert model.prob(["zzz"], "a") == model.prob(["<unk>"], "a")
    assert model.prob(["a"], "zzz") > 0


def test_monotone_count_consistency():
    rng = np.random.default_rng(3)
    corpus = random_corpus(rng, n_sentences=30, vocab_size=6)
    full = ReferenceKN(corpus, order=3, unk_threshold=1)
    smaller = ReferenceKN(corpus[:-1], order=3, unk_threshold=1)
    for k in (1, 2, 3):
        for gram, count in smaller.raw[k].items():
            assert count <= full.raw[k][gram]


# ---------------------------------------------------------------------------
# Degenerate and error cases

def test_degenerate_discount_warns_and_stays_normalized():
    # every bigram type occurs 4 times -> n1 + n2 = 0 at the top order
    corpus = [["a"]] * 4
    with pytest.warns(UserWarning, match="discount 0.5"):
        model = train(corpus, order=2, unk_threshold=1)
    total = sum(model.prob(["a"], w) for w in model.prediction_vocab())
    assert total == pytest.approx(1.0, abs=1e-12)


def test_empty_corpus_rejected():
    with pytest.raises(TrainingError, match="empty"):
        train([], order=2)


def test_zero_in_vocabulary_tokens_rejected():
    with pytest.raises(TrainingError, match="zero in-vocabulary"):
        train([["a"], ["b"]], order=2, unk_threshold=5)


def test_bad_order_rejected():
    with pytest.raises(TrainingError, match="order"):
        train(TINY, order=0)


# ---------------------------------------------------------------------------
# Persistence

def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    corpus = random_corpus(rng, n_sentences=40, vocab_size=10)
    model = train(corpus, order=3, unk_threshold=2)
    path = tmp_path / "model.ngram"
    model.save(path)
    loaded = type(model).load(path)
    for ctx, w in all_queries(corpus)[:200]:
        assert loaded.prob(ctx, w) == pytest.approx(model.prob(ctx, w), abs=1e-12)


def test_load_truncated_file_is_corrupt(tmp_path):
    model = tiny_model()
    path = tmp_path / "model.ngram"
    model.save(path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(ModelFileError):
        type(model).load(path)


def test_load_rejects_non_model_file(tmp_path):
    path = tmp_path / "junk"
    path.write_text("hello")
    with pytest.raises(ModelFileError):
        tiny_model().load(path)


def test_loaded_model_answers_short_contexts(tmp_path):
    rng = np.random.default_rng(9)
    corpus = random_corpus(rng, n_sentences=80, vocab_size=8)
    model = train(corpus, order=5, unk_threshold=1)
    path = tmp_path / "m"
    model.save(path)
    loaded = model.load(path)
    vocab = loaded.prediction_vocab()
    p = loaded.prob(vocab[:2], vocab[0])  # 2-token context on a 5-gram
    assert 0 < p < 1
    total = sum(loaded.prob(vocab[:2], w) for w in vocab)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_train_file_reads_lines(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("a b\na c\n\n", encoding="utf-8")
    model = train_file(path, order=2, unk_threshold=1)
    assert abs(model.prob(["a"], "b") - 0.3) < 1e-12


# ---------------------------------------------------------------------------
# Serving

def test_backend_handshake_reports_context_window():
    model = train([["a", "b", "c", "d", "e", "f"]] * 3, order=5, unk_threshold=1)
    info = handshake(NGramBackend(model))
    assert info.kind == "ngram"
    assert info.context_window == 4


def test_backend_total_matches_chain_rule():
    model = tiny_model()
    backend = NGramBackend(model)
    [res] = score(backend, ["a b"])
    expected = -math.log2(model.prob(["<s>"], "a") * model.prob(["<s>", "a"], "b"))
    assert res.total_bits == pytest.approx(expected, abs=1e-6)
    assert res.tokens[0].surprisal_bits == pytest.approx(
        -math.log2(model.prob(["<s>"], "a")), abs=1e-9)


def test_backend_spans_are_whitespace_token_spans():
    backend = NGramBackend(tiny_model())
    [res] = score(backend, ["a   b"])
    assert [(t.start, t.end) for t in res.tokens] == [(0, 1), (4, 5)]


def test_backend_oov_scoring_is_finite():
    backend = NGramBackend(tiny_model())
    [res] = score(backend, ["zzz qqq"])
    assert all(math.isfinite(t.surprisal_bits) for t in res.tokens)
