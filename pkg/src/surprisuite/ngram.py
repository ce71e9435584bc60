"""Interpolated Kneser-Ney n-gram language model and its protocol backend.

One absolute discount per order:

    P_k(w | c) = max(count_k(c, w) - D_k, 0) / count_k(c)
                 + D_k * T_k(c) / count_k(c) * P_{k-1}(w | c[1:])

where count_k is the raw k-gram count at the top order and the
continuation (distinct-left-extension) count at every lower order,
count_k(c) sums count_k(c, w) over w, and T_k(c) is the number of distinct
continuations of c at that level.  If count_k(c) is zero the level is
skipped.  The unigram level interpolates with a uniform distribution over
the prediction vocabulary, so every query has nonzero probability.

D_k = n1 / (n1 + 2 n2) from the count-of-count statistics of the table the
level consumes; when n1 + n2 = 0 (tiny corpora) D_k falls back to 0.5 with
a warning.

Training maps types rarer than ``unk_threshold`` to ``<unk>``, pads each
sentence with n-1 ``<s>`` markers plus one ``</s>``, and never counts
k-grams that end in ``<s>`` (the start marker is conditioned on, never
predicted).  The prediction vocabulary is every type observed after
mapping, plus ``</s>``, plus ``<unk>`` when anything was actually mapped.
"""
from __future__ import annotations

import gzip
import json
import math
import re
import warnings
from array import array
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ModelFileError, TrainingError
from .scoring import Backend, BackendInfo, SentenceScore, TokenScore

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

MODEL_FORMAT = "surprisuite-ngram"
MODEL_VERSION = 1

_TOKEN_RE = re.compile(r"\S+")


def _discount(table: dict, order: int) -> float:
    n1 = n2 = 0
    for c in table.values():
        if c == 1:
            n1 += 1
        elif c == 2:
            n2 += 1
    if n1 + n2 == 0:
        warnings.warn(
            f"order {order}: no singleton or doubleton types; using discount 0.5",
            stacklevel=3)
        return 0.5
    return n1 / (n1 + 2.0 * n2)


def _count_raw_tables(sentence_ids: list[list[int]], order: int,
                      bos_id: int, eos_id: int, n_ids: int) -> list[dict]:
    """Raw k-gram counts for k = 1..order over BOS/EOS-padded sentences.

    Windows ending in BOS are never counted.  Uses packed integer codes via
    numpy when the id space is small enough, else plain tuple counting.
    """
    stream = array("q")
    pad = [bos_id] * (order - 1)
    for ids in sentence_ids:
        stream.extend(pad)
        stream.extend(ids)
        stream.append(eos_id)
    a = np.frombuffer(stream, dtype=np.int64)

    tables: list[dict] = [None] * (order + 1)  # type: ignore[list-item]
    base = n_ids
    packable = order * max(1, (base - 1).bit_length()) <= 62

    is_eos = (a == eos_id).astype(np.int64)
    eos_prefix = np.concatenate(([0], np.cumsum(is_eos)))

    for k in range(1, order + 1):
        L = len(a) - k + 1
        if L <= 0:
            tables[k] = {}
            continue
        valid = a[k - 1:k - 1 + L] != bos_id
        if k > 1:
            # no EOS among the first k-1 positions of the window
            valid = valid & (eos_prefix[k - 1:k - 1 + L] - eos_prefix[:L] == 0)
        if packable:
            codes = a[0:L].copy()
            for j in range(1, k):
                codes *= base
                codes += a[j:j + L]
            uniq, cnt = np.unique(codes[valid], return_counts=True)
            table: dict = {}
            cols = []
            rem = uniq.copy()
            for _ in range(k):
                cols.append(rem % base)
                rem = rem // base
            cols.reverse()
            for row, c in zip(zip(*(col.tolist() for col in cols)), cnt.tolist()):
                table[row] = c
        else:
            table = Counter()
            av = a.tolist()
            for i in np.nonzero(valid)[0].tolist():
                table[tuple(av[i:i + k])] += 1
            table = dict(table)
        tables[k] = table
    return tables


def _continuation_counts(raw_higher: dict) -> dict:
    """Distinct-left-extension counts: each (k+1)-gram type adds 1 to its suffix."""
    cont: dict = {}
    for gram in raw_higher:
        suffix = gram[1:]
        cont[suffix] = cont.get(suffix, 0) + 1
    return cont


@dataclass
class _Level:
    table: dict            # gram tuple -> count (raw at top, continuation below)
    ctx_total: dict        # context tuple -> sum of counts
    ctx_types: dict        # context tuple -> number of distinct continuations
    discount: float


class NGramModel:
    """A trained model; immutable and safe for concurrent queries."""

    def __init__(self, order: int, unk_threshold: int, vocab: list[str],
                 raw_tables: list[dict]):
        self.order = order
        self.unk_threshold = unk_threshold
        self._id_to_tok = list(vocab)
        self._tok_to_id = {t: i for i, t in enumerate(vocab)}
        self._raw = raw_tables  # index k (1..order); [0] unused
        self._finalize()

    # -- derived tables -----------------------------------------------------
    def _finalize(self) -> None:
        n = self.order
        self._levels: list[_Level | None] = [None] * (n + 1)
        for k in range(1, n + 1):
            if k == n:
                table = self._raw[k]
            else:
                table = _continuation_counts(self._raw[k + 1])
            ctx_total: dict = {}
            ctx_types: dict = {}
            for gram, c in table.items():
                ctx = gram[:-1]
                ctx_total[ctx] = ctx_total.get(ctx, 0) + c
                ctx_types[ctx] = ctx_types.get(ctx, 0) + 1
            self._levels[k] = _Level(table, ctx_total, ctx_types, _discount(table, k))

        bos_id = self._tok_to_id[BOS]
        # Everything observed after unk-mapping, including EOS, excluding BOS.
        self._pred_vocab = sorted(
            g[0] for g in self._raw[1] if g[0] != bos_id)
        if not self._pred_vocab:
            raise TrainingError("corpus has no in-vocabulary tokens")
        self._vsize = len(self._pred_vocab)

    # -- queries ------------------------------------------------------------
    def _map(self, token: str) -> int:
        return self._tok_to_id.get(token, self._tok_to_id[UNK])

    def prediction_vocab(self) -> list[str]:
        return [self._id_to_tok[i] for i in self._pred_vocab]

    def prob(self, context: Sequence[str], word: str) -> float:
        """P(word | context); contexts longer than n-1 use their last n-1 tokens."""
        ctx = tuple(self._map(t) for t in context)
        if len(ctx) > self.order - 1:
            ctx = ctx[len(ctx) - (self.order - 1):]
        return self._p(len(ctx) + 1, ctx, self._map(word))

    def _p(self, k: int, ctx: tuple, w: int) -> float:
        level = self._levels[k]
        assert level is not None
        if k == 1:
            tot = level.ctx_total.get((), 0)
            d = level.discount
            c = level.table.get((w,), 0)
            types = level.ctx_types.get((), 0)
            return (max(c - d, 0.0) / tot
                    + d * types / tot * (1.0 / self._vsize))
        denom = level.ctx_total.get(ctx, 0)
        if denom == 0:
            return self._p(k - 1, ctx[1:], w)
        d = level.discount
        c = level.table.get(ctx + (w,), 0)
        lam = d * level.ctx_types[ctx] / denom
        return max(c - d, 0.0) / denom + lam * self._p(k - 1, ctx[1:], w)

    def surprisal_bits(self, context: Sequence[str], word: str) -> float:
        return -math.log2(self.prob(context, word))

    # -- persistence ----------------------------------------------------------
    def save(self, path) -> None:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "order": self.order,
            "unk_threshold": self.unk_threshold,
            "vocab": self._id_to_tok,
            "counts": [[k, [list(g) + [c] for g, c in sorted(self._raw[k].items())]]
                       for k in range(1, self.order + 1)],
        }
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            json.dump(doc, fh)

    @classmethod
    def load(cls, path) -> "NGramModel":
        try:
            with gzip.open(path, "rt", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, EOFError, json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ModelFileError(f"cannot read model file {path}: {e}") from None
        if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
            raise ModelFileError(f"{path}: not a {MODEL_FORMAT} file")
        if doc.get("version") != MODEL_VERSION:
            raise ModelFileError(
                f"{path}: model format version {doc.get('version')!r}, "
                f"this build reads version {MODEL_VERSION}")
        try:
            order = int(doc["order"])
            raw: list[dict] = [None] * (order + 1)  # type: ignore[list-item]
            for k, rows in doc["counts"]:
                raw[k] = {tuple(row[:-1]): row[-1] for row in rows}
            model = cls(order, int(doc["unk_threshold"]), doc["vocab"], raw)
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ModelFileError(f"{path}: corrupt model file: {e}") from None
        return model


def train(corpus: Iterable[Sequence[str]], order: int,
          unk_threshold: int = 2) -> NGramModel:
    """Train from pre-tokenized sentences (whitespace tokenization upstream).

    ``corpus`` is iterated twice: once for type frequencies (unk mapping),
    once for counting, so pass a list or another re-iterable.
    """
    if order < 1:
        raise TrainingError(f"order must be >= 1, got {order}")
    freq: Counter = Counter()
    n_sentences = 0
    for sent in corpus:
        n_sentences += 1
        freq.update(sent)
    if n_sentences == 0 or not freq:
        raise TrainingError("empty training corpus")

    kept = sorted(t for t, c in freq.items() if c >= unk_threshold
                  and t not in (BOS, EOS, UNK))
    if not kept:
        raise TrainingError(
            "corpus has zero in-vocabulary tokens at this unk threshold")
    vocab = [BOS, EOS, UNK] + kept
    tok_to_id = {t: i for i, t in enumerate(vocab)}
    unk_id = tok_to_id[UNK]

    sentence_ids = [[tok_to_id.get(t, unk_id) for t in sent] for sent in corpus]
    raw = _count_raw_tables(sentence_ids, order, tok_to_id[BOS], tok_to_id[EOS],
                            len(vocab))
    return NGramModel(order, unk_threshold, vocab, raw)


def train_file(path, order: int, unk_threshold: int = 2) -> NGramModel:
    """Train from a text file, one whitespace-tokenized sentence per line."""

    class Lines:
        def __iter__(self):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    toks = line.split()
                    if toks:
                        yield toks

    return train(Lines(), order, unk_threshold)


class NGramBackend(Backend):
    """Serve a trained model through the scoring interface.

    Requests are whitespace-tokenized; each token is conditioned on the
    n-1 preceding tokens with BOS padding at the sentence start.  The end
    marker is part of training but is not a scored token, so total_bits is
    -log2 P(tokens | start).
    """

    def __init__(self, model: NGramModel, name: str = "kneser-ney-ngram"):
        self.model = model
        self.name = name

    def info(self) -> BackendInfo:
        return BackendInfo(name=self.name, kind="ngram",
                           version=f"{MODEL_FORMAT}/{MODEL_VERSION}",
                           context_window=self.model.order - 1)

    def score_sentences(self, sentences: Sequence[str]) -> list[SentenceScore]:
        out = []
        for sent in sentences:
            matches = list(_TOKEN_RE.finditer(sent))
            history = [BOS] * (self.model.order - 1)
            tokens = []
            total = 0.0
            for m in matches:
                s = self.model.surprisal_bits(history, m.group())
                tokens.append(TokenScore(m.group(), s, m.start(), m.end()))
                history.append(m.group())
                total += s
            out.append(SentenceScore(sent, tuple(tokens), total))
        return out
