"""Per-token surprisal from a pretrained causal LM, with character offsets.

Every sentence is scored as P(tokens | BOS): the beginning-of-sequence
marker is prepended and conditioned on but never itself scored, and
log-probabilities are converted from natural log to bits inside this
module.  Token spans are character offsets into the exact request string;
leading whitespace is stripped from each span and tokenizer quirks
(whitespace-only pieces, byte-level splits inside one character) are merged
into neighbouring tokens so that spans always cover every non-whitespace
character exactly once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

LN2 = math.log(2.0)


class SentenceScoringError(ValueError):
    """Offset reconstruction or tokenization failed for one sentence."""


@dataclass(frozen=True)
class AdapterConfig:
    model: str                 # model id or local path
    device: str = "cpu"
    batch_size: int = 8
    # The BOS policy is fixed: prepend one marker, never score it.


@dataclass(frozen=True)
class ScoredToken:
    text: str
    surprisal_bits: float
    start: int
    end: int


class CausalScorer:
    def __init__(self, config: AdapterConfig):
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModelForCausalLM.from_pretrained(config.model)
        self.model.to(config.device)
        self.model.eval()
        self.bos_id = self.tokenizer.bos_token_id
        if self.bos_id is None:
            self.bos_id = self.tokenizer.eos_token_id
        if self.bos_id is None:
            raise ValueError(
                f"model {config.model!r} defines neither a BOS nor an EOS "
                "token to condition the first word on")
        self.casing = self._probe_casing()

    def _probe_casing(self) -> str:
        upper = self.tokenizer("A B", add_special_tokens=False)["input_ids"]
        lower = self.tokenizer("a b", add_special_tokens=False)["input_ids"]
        return "lowercasing" if upper == lower else "case-preserving"

    def version(self) -> str:
        import transformers
        return (f"transformers-{transformers.__version__};"
                f"bos=prepend-unscored;{self.casing}")

    # -- tokenization with offsets -----------------------------------------

    def _encode(self, sentence: str) -> tuple[list[int], list[tuple[int, int]]]:
        if getattr(self.tokenizer, "is_fast", False):
            enc = self.tokenizer(sentence, add_special_tokens=False,
                                 return_offsets_mapping=True)
            return enc["input_ids"], [tuple(o) for o in enc["offset_mapping"]]
        ids = self.tokenizer(sentence, add_special_tokens=False)["input_ids"]
        return ids, self._offsets_by_matching(sentence, ids)

    def _offsets_by_matching(self, sentence: str,
                             ids: list[int]) -> list[tuple[int, int]]:
        """Fallback: greedy left-to-right matching of detokenized pieces."""
        offsets = []
        pos = 0
        for tid in ids:
            piece = self.tokenizer.decode([tid],
                                          clean_up_tokenization_spaces=False)
            stripped = piece.lstrip()
            if not stripped:
                offsets.append((pos, pos))
                continue
            found = sentence.find(stripped, pos)
            if found < 0:
                raise SentenceScoringError(
                    f"offset reconstruction failure: piece {piece!r} not found "
                    f"after position {pos}")
            offsets.append((found, found + len(stripped)))
            pos = found + len(stripped)
        return offsets

    # -- span normalization --------------------------------------------------

    @staticmethod
    def _normalize_spans(sentence: str, offsets, bits) -> list[ScoredToken]:
        """Merge empty/overlapping/whitespace-only spans into neighbours."""
        groups: list[list] = []  # [start, end, bits]
        pending = 0.0
        for (start, end), b in zip(offsets, bits):
            if start == end:
                pending += b
                continue
            if groups and start < groups[-1][1]:
                groups[-1][1] = max(groups[-1][1], end)
                groups[-1][2] += b + pending
            else:
                groups.append([start, end, b + pending])
            pending = 0.0
        if pending and groups:
            groups[-1][2] += pending
        elif pending:
            raise SentenceScoringError("tokenizer produced no anchored tokens")

        # strip whitespace from span edges; merge spans left empty
        tokens: list[ScoredToken] = []
        carry = 0.0
        for start, end, b in groups:
            while start < end and sentence[start].isspace():
                start += 1
            while end > start and sentence[end - 1].isspace():
                end -= 1
            if start == end:
                carry += b
                continue
            tokens.append(ScoredToken(sentence[start:end], b + carry, start, end))
            carry = 0.0
        if carry:
            if not tokens:
                raise SentenceScoringError("tokenizer produced only whitespace")
            last = tokens[-1]
            tokens[-1] = ScoredToken(last.text, last.surprisal_bits + carry,
                                     last.start, last.end)

        covered = 0
        prev_end = 0
        for t in tokens:
            if t.start < prev_end:
                raise SentenceScoringError("overlapping token spans")
            prev_end = t.end
            covered += sum(1 for ch in t.text if not ch.isspace())
        expected = sum(1 for ch in sentence if not ch.isspace())
        if covered != expected:
            raise SentenceScoringError(
                f"token spans cover {covered} of {expected} non-whitespace "
                "characters")
        return tokens

    # -- scoring -------------------------------------------------------------

    def _surprisals(self, batch_ids: list[list[int]]) -> list[list[float]]:
        """Bits per token for each id sequence, conditioned on prepended BOS."""
        rows = [[self.bos_id] + ids for ids in batch_ids]
        width = max(len(r) for r in rows)
        input_ids = torch.full((len(rows), width), self.bos_id, dtype=torch.long)
        mask = torch.zeros((len(rows), width), dtype=torch.long)
        for i, row in enumerate(rows):
            input_ids[i, :len(row)] = torch.tensor(row, dtype=torch.long)
            mask[i, :len(row)] = 1
        position_ids = (mask.cumsum(dim=1) - 1).clamp(min=0)
        with torch.no_grad():
            logits = self.model(input_ids=input_ids.to(self.config.device),
                                attention_mask=mask.to(self.config.device),
                                position_ids=position_ids.to(self.config.device)
                                ).logits.double().cpu()
        logprobs = torch.log_softmax(logits, dim=-1)
        out = []
        for i, ids in enumerate(batch_ids):
            # logits at position j predict row token j+1
            picked = logprobs[i, range(len(ids)), ids]
            out.append([float(-lp) / LN2 for lp in picked])
        return out

    def score_sentences(self, sentences: list[str]) -> list[list[ScoredToken]]:
        encoded = []
        for idx, sentence in enumerate(sentences):
            try:
                ids, offsets = self._encode(sentence)
                if not ids:
                    raise SentenceScoringError("tokenizer produced no tokens")
            except SentenceScoringError as e:
                raise SentenceScoringError(f"sentence {idx}: {e}") from None
            encoded.append((ids, offsets))

        results: list[list[ScoredToken]] = []
        bs = max(1, self.config.batch_size)
        for lo in range(0, len(encoded), bs):
            chunk = encoded[lo:lo + bs]
            all_bits = self._surprisals([ids for ids, _ in chunk])
            for offset_in_chunk, ((ids, offsets), bits) in enumerate(
                    zip(chunk, all_bits)):
                idx = lo + offset_in_chunk
                try:
                    results.append(self._normalize_spans(
                        sentences[idx], offsets, bits))
                except SentenceScoringError as e:
                    raise SentenceScoringError(f"sentence {idx}: {e}") from None
        return results

    def sequence_bits(self, sentence: str) -> float:
        """-log2 P(sentence | BOS) from one full-sequence pass (no offsets)."""
        ids = self.tokenizer(sentence, add_special_tokens=False)["input_ids"]
        row = torch.tensor([[self.bos_id] + ids], dtype=torch.long,
                           device=self.config.device)
        with torch.no_grad():
            logits = self.model(input_ids=row).logits.double().cpu()[0]
        logprobs = torch.log_softmax(logits, dim=-1)
        total = sum(float(logprobs[j, tid]) for j, tid in enumerate(ids))
        return -total / LN2
