"""Backend scoring interface: per-token surprisal in bits, region alignment.

Any scorer (the built-in n-gram, the mock oracle, or an external process
speaking the wire protocol) is used through the same small interface:
``info()`` identifies the backend, ``score_sentences()`` returns one
:class:`SentenceScore` per input sentence.  Surprisal is always base-2
(bits), and the first token is conditioned on a beginning-of-sequence
marker that is never itself scored, so ``total_bits`` is -log2 P(sentence)
uniformly across backends.

Token-to-region alignment assigns each token to the region whose span
contains the token's first non-whitespace character, which stays total and
order-preserving even when subword tokens straddle region boundaries.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

from .errors import ProtocolViolation, ValidationError
from .suite import RegionedSentence

ADDITIVITY_TOL = 1e-6

BACKEND_KINDS = ("ngram", "neural", "mock")


@dataclass(frozen=True)
class TokenScore:
    text: str
    surprisal_bits: float
    start: int
    end: int


@dataclass(frozen=True)
class SentenceScore:
    sentence: str
    tokens: tuple[TokenScore, ...]
    total_bits: float


@dataclass(frozen=True)
class BackendInfo:
    name: str
    kind: str
    version: str
    context_window: int | None = None


@dataclass(frozen=True)
class RegionScores:
    """Per-region surprisal sums for one scored sentence (or merged condition)."""

    sums: dict[str, float]
    counts: dict[str, int]
    total_bits: float

    def bits(self, region: str) -> float:
        return self.sums[region]


class Backend:
    """Minimal scorer interface; implementations may be in-process or remote."""

    def info(self) -> BackendInfo:
        raise NotImplementedError

    def score_sentences(self, sentences: Sequence[str]) -> list[SentenceScore]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def validate_sentence_score(score: SentenceScore) -> None:
    """Enforce the scoring invariants; raises ProtocolViolation naming the sentence."""
    sent = score.sentence

    def fail(msg: str):
        raise ProtocolViolation(f"sentence {sent!r}: {msg}")

    prev_end = 0
    covered = bytearray(len(sent))
    for tok in score.tokens:
        if tok.surprisal_bits < 0:
            fail(f"negative surprisal for token {tok.text!r}")
        if not (0 <= tok.start <= tok.end <= len(sent)):
            fail(f"span [{tok.start},{tok.end}) out of bounds")
        if tok.start < prev_end:
            fail(f"token spans overlap or are out of order at {tok.start}")
        prev_end = tok.end
        if sent[tok.start:tok.end] != tok.text:
            fail(f"token text {tok.text!r} does not match span "
                 f"[{tok.start},{tok.end})")
        if not tok.text.strip():
            fail(f"token at [{tok.start},{tok.end}) has no non-whitespace character")
        for i in range(tok.start, tok.end):
            covered[i] = 1
    for i, ch in enumerate(sent):
        if not ch.isspace() and not covered[i]:
            fail(f"character {i} ({ch!r}) not covered by any token span")

    total = sum(t.surprisal_bits for t in score.tokens)
    if abs(total - score.total_bits) > ADDITIVITY_TOL:
        fail(f"total_bits {score.total_bits} differs from token sum {total}")


def handshake(backend: Backend) -> BackendInfo:
    """Fetch and validate backend identity."""
    info = backend.info()
    if info.kind not in BACKEND_KINDS:
        raise ProtocolViolation(f"unknown backend kind {info.kind!r}")
    if (info.kind == "ngram") != (info.context_window is not None):
        raise ProtocolViolation(
            "context_window must be present exactly for ngram backends")
    return info


def score(backend: Backend, sentences: Sequence[str]) -> list[SentenceScore]:
    """Score sentences, preserving order and validating every reply."""
    sentences = list(sentences)
    for s in sentences:
        if not isinstance(s, str) or not s.strip():
            raise ValidationError("empty sentence")
    results = backend.score_sentences(sentences)
    if len(results) != len(sentences):
        raise ProtocolViolation(
            f"backend returned {len(results)} results for {len(sentences)} sentences")
    for sent, res in zip(sentences, results):
        if res.sentence != sent:
            raise ProtocolViolation(
                f"result order mismatch: expected {sent!r}, got {res.sentence!r}")
        validate_sentence_score(res)
    return results


def align(sentence_score: SentenceScore, rsent: RegionedSentence) -> RegionScores:
    """Sum token surprisals per region.

    Each token belongs to the region whose span contains the token's first
    non-whitespace character.
    """
    if sentence_score.sentence != rsent.text:
        raise ValidationError(
            f"scored text does not match rendered sentence: "
            f"{sentence_score.sentence!r} vs {rsent.text!r}")

    nonempty = [s for s in rsent.spans if not s.empty]
    starts = [s.start for s in nonempty]
    sums = {s.region: 0.0 for s in rsent.spans}
    counts = {s.region: 0 for s in rsent.spans}

    for tok in sentence_score.tokens:
        anchor = None
        for i in range(tok.start, tok.end):
            if not sentence_score.sentence[i].isspace():
                anchor = i
                break
        if anchor is None:  # unreachable after validate_sentence_score
            raise ProtocolViolation(
                f"sentence {sentence_score.sentence!r}: whitespace-only token")
        if not nonempty or anchor < starts[0]:
            raise ProtocolViolation(
                f"sentence {sentence_score.sentence!r}: token {tok.text!r} "
                "precedes the first region")
        j = bisect_right(starts, anchor) - 1
        span = nonempty[j]
        if anchor >= span.end:
            raise ValidationError(
                f"token {tok.text!r} at {anchor} falls outside every region span")
        sums[span.region] += tok.surprisal_bits
        counts[span.region] += 1

    return RegionScores(sums, counts, sentence_score.total_bits)


def merge_region_scores(parts: Sequence[RegionScores]) -> RegionScores:
    """Combine per-sentence region scores of a multi-sentence condition."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    total = 0.0
    for p in parts:
        for r, v in p.sums.items():
            sums[r] = sums.get(r, 0.0) + v
            counts[r] = counts.get(r, 0) + p.counts[r]
        total += p.total_bits
    return RegionScores(sums, counts, total)
