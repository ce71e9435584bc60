"""Brute-force interpolated Kneser-Ney reference, independent of the package.

Everything here is recomputed from scratch with plain dict scans and the
textbook recursion, so it can serve as the oracle for the trained model:

    P_k(w | c) = max(N_k(c+w) - D_k, 0) / N_k(c+.)
                 + D_k * |{w': N_k(c+w') > 0}| / N_k(c+.) * P_{k-1}(w | c[1:])

with N_k raw counts at the top order and continuation counts below, levels
with N_k(c+.) = 0 skipped, and the unigram level interpolated with a
uniform distribution over the prediction vocabulary.
"""
from __future__ import annotations

import itertools

BOS, EOS, UNK = "<s>", "</s>", "<unk>"


class ReferenceKN:
    def __init__(self, sentences: list[list[str]], order: int, unk_threshold: int):
        self.order = order

        freq: dict[str, int] = {}
        for sent in sentences:
            for tok in sent:
                freq[tok] = freq.get(tok, 0) + 1
        keep = {t for t, c in freq.items() if c >= unk_threshold}
        mapped = [[t if t in keep else UNK for t in sent] for sent in sentences]

        # Raw counts per order over padded sentences, never counting
        # anything that ends with the start marker.
        self.raw: dict[int, dict[tuple, int]] = {k: {} for k in range(1, order + 1)}
        for sent in mapped:
            padded = [BOS] * (order - 1) + sent + [EOS]
            for k in range(1, order + 1):
                for i in range(len(padded) - k + 1):
                    gram = tuple(padded[i:i + k])
                    if gram[-1] == BOS:
                        continue
                    if EOS in gram[:-1]:
                        continue
                    self.raw[k][gram] = self.raw[k].get(gram, 0) + 1

        # Level tables: raw at the top, continuation counts below.
        self.level: dict[int, dict[tuple, int]] = {}
        for k in range(1, order + 1):
            if k == order:
                self.level[k] = dict(self.raw[k])
            else:
                cont: dict[tuple, int] = {}
                for gram in self.raw[k + 1]:
                    cont[gram[1:]] = cont.get(gram[1:], 0) + 1
                self.level[k] = cont

        self.discount: dict[int, float] = {}
        for k in range(1, order + 1):
            n1 = sum(1 for c in self.level[k].values() if c == 1)
            n2 = sum(1 for c in self.level[k].values() if c == 2)
            self.discount[k] = 0.5 if n1 + n2 == 0 else n1 / (n1 + 2.0 * n2)

        # Per-context denominators and continuation-type counts, grouped once
        # so queries stay fast on larger corpora.
        self.ctx_sum: dict[int, dict[tuple, int]] = {}
        self.ctx_ntypes: dict[int, dict[tuple, int]] = {}
        for k in range(1, order + 1):
            sums: dict[tuple, int] = {}
            ntypes: dict[tuple, int] = {}
            for gram, c in self.level[k].items():
                sums[gram[:-1]] = sums.get(gram[:-1], 0) + c
                ntypes[gram[:-1]] = ntypes.get(gram[:-1], 0) + 1
            self.ctx_sum[k] = sums
            self.ctx_ntypes[k] = ntypes

        self.vocab = sorted({g[0] for g in self.raw[1]})
        self.mapped_types = keep

    def _map(self, tok: str) -> str:
        if tok in (BOS, EOS):
            return tok
        return tok if tok in self.mapped_types else UNK

    def prob(self, context: list[str], word: str) -> float:
        ctx = tuple(self._map(t) for t in context)
        if len(ctx) > self.order - 1:
            ctx = ctx[len(ctx) - (self.order - 1):]
        return self._p(len(ctx) + 1, ctx, self._map(word))

    def _p(self, k: int, ctx: tuple, w: str) -> float:
        table = self.level[k]
        if k == 1:
            total = self.ctx_sum[1][()]
            d = self.discount[1]
            types = self.ctx_ntypes[1][()]
            c = table.get((w,), 0)
            return (max(c - d, 0.0) / total
                    + d * types / total * (1.0 / len(self.vocab)))
        total = self.ctx_sum[k].get(ctx, 0)
        if total == 0:
            return self._p(k - 1, ctx[1:], w)
        d = self.discount[k]
        types = self.ctx_ntypes[k][ctx]
        c = table.get(ctx + (w,), 0)
        return (max(c - d, 0.0) / total
                + d * types / total * self._p(k - 1, ctx[1:], w))


def random_corpus(rng, n_sentences: int, vocab_size: int,
                  max_len: int = 8) -> list[list[str]]:
    words = [f"w{i}" for i in range(vocab_size)]
    corpus = []
    for _ in range(n_sentences):
        length = int(rng.integers(1, max_len + 1))
        corpus.append([words[int(rng.integers(0, vocab_size))]
                       for _ in range(length)])
    return corpus


def random_contexts(rng, model_vocab: list[str], n: int, max_len: int):
    for _ in range(n):
        length = int(rng.integers(0, max_len + 1))
        yield [model_vocab[int(rng.integers(0, len(model_vocab)))]
               for _ in range(length)]


def all_queries(corpus, extra_words=("zz", "qq")):
    """A spread of (context, word) queries touching seen and unseen material."""
    words = sorted({t for s in corpus for t in s}) + list(extra_words) + [EOS]
    contexts = [[]]
    for sent in corpus[:4]:
        for i in range(len(sent)):
            contexts.append(sent[max(0, i - 4):i])
    contexts += [list(p) for p in itertools.islice(
        itertools.product(words[:3], repeat=2), 6)]
    return [(ctx, w) for ctx in contexts for w in words[:8]]
