"""Programmable mock backend: base surprisal plus rule-conditioned penalties.

The oracle knows the suite it will be asked about.  Each whitespace token
gets ``base_bits`` plus the sum of penalties from every matching rule; a
rule matches on a (partial) condition-label pattern, a region name, and
optionally the token text.  Because penalties are chosen by the test
author, metric values downstream are exactly predictable, which is what
makes this the ground-truth instrument for the metrics and stats layers.
"""
from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .errors import ParseError, ValidationError
from .scoring import Backend, BackendInfo, SentenceScore, TokenScore
from .suite import (ConditionLabel, RegionedSentence, TestSuite, load_suite,
                    render_condition, suite_from_dict)

_TOKEN_RE = re.compile(r"\S+")

RULES_FORMAT = "oracle-rules@1"


@dataclass(frozen=True)
class OracleRule:
    penalty_bits: float
    when: tuple[tuple[str, str], ...] = ()  # partial label pattern
    region: str | None = None               # None = any region
    token: str | None = None                # exact token text, None = any
    predicate: Callable[[str], bool] | None = None  # in-code rules only

    @classmethod
    def make(cls, penalty_bits: float, when: Mapping[str, str] | None = None,
             region: str | None = None, token: str | None = None,
             predicate: Callable[[str], bool] | None = None) -> "OracleRule":
        if not math.isfinite(penalty_bits):
            raise ValidationError("rule penalty must be finite")
        pattern = tuple(sorted((when or {}).items()))
        return cls(penalty_bits, pattern, region, token, predicate)

    def matches(self, label: ConditionLabel, region: str, token: str) -> bool:
        if not label.matches(dict(self.when)):
            return False
        if self.region is not None and self.region != region:
            return False
        if self.token is not None and self.token != token:
            return False
        if self.predicate is not None and not self.predicate(token):
            return False
        return True


def oracle_score(rules: Sequence[OracleRule], base_bits: float,
                 rsent: RegionedSentence, label: ConditionLabel) -> SentenceScore:
    """Score one rendered sentence: whitespace tokens, base + matching penalties."""
    nonempty = [s for s in rsent.spans if not s.empty]
    tokens = []
    total = 0.0
    for m in _TOKEN_RE.finditer(rsent.text):
        region = None
        for span in nonempty:
            if span.start <= m.start() < span.end:
                region = span.region
                break
        if region is None:
            raise ValidationError(
                f"token {m.group()!r} at {m.start()} outside every region span")
        bits = base_bits + sum(r.penalty_bits for r in rules
                               if r.matches(label, region, m.group()))
        if bits < 0:
            warnings.warn(
                f"clamping negative surprisal ({bits} bits) for token "
                f"{m.group()!r} to 0", stacklevel=2)
            bits = 0.0
        tokens.append(TokenScore(m.group(), bits, m.start(), m.end()))
        total += bits
    return SentenceScore(rsent.text, tuple(tokens), total)


class MockOracleBackend(Backend):
    """Scores exactly the sentences of one suite, by rendered-text lookup."""

    def __init__(self, suite: TestSuite, rules: Sequence[OracleRule] = (),
                 base_bits: float = 3.0, name: str = "mock-oracle"):
        self.suite = suite
        self.rules = tuple(rules)
        self.base_bits = base_bits
        self.name = name
        self._index: dict[str, list[tuple[ConditionLabel, RegionedSentence]]] = {}
        for item in suite.items:
            for label in suite.condition_labels():
                for rsent in render_condition(suite, item, label):
                    self._index.setdefault(rsent.text, []).append((label, rsent))

    def info(self) -> BackendInfo:
        return BackendInfo(name=self.name, kind="mock", version=RULES_FORMAT)

    def score_sentences(self, sentences: Sequence[str]) -> list[SentenceScore]:
        out = []
        for sent in sentences:
            candidates = self._index.get(sent)
            if not candidates:
                raise ValidationError(
                    f"mock oracle knows no sentence {sent!r} in suite "
                    f"{self.suite.name!r}")
            scores = [oracle_score(self.rules, self.base_bits, rsent, label)
                      for label, rsent in candidates]
            first = scores[0]
            for other in scores[1:]:
                if other != first:
                    raise ValidationError(
                        f"sentence {sent!r} is ambiguous between conditions with "
                        "different oracle scores")
            out.append(first)
        return out


class ConstantBackend(Backend):
    """Uniform mock: every whitespace token costs the same number of bits.

    ``bits_per_token`` defaults to 3.0, i.e. a uniform distribution over
    eight word types.
    """

    def __init__(self, bits_per_token: float = 3.0, name: str = "mock-uniform"):
        self.bits_per_token = bits_per_token
        self.name = name

    def info(self) -> BackendInfo:
        return BackendInfo(name=self.name, kind="mock", version="constant")

    def score_sentences(self, sentences: Sequence[str]) -> list[SentenceScore]:
        out = []
        for sent in sentences:
            tokens = tuple(
                TokenScore(m.group(), self.bits_per_token, m.start(), m.end())
                for m in _TOKEN_RE.finditer(sent))
            out.append(SentenceScore(sent, tokens,
                                     self.bits_per_token * len(tokens)))
        return out


# ---------------------------------------------------------------------------
# Rule files

def rules_from_dict(doc: dict, base_dir: Path | None = None
                    ) -> tuple[TestSuite, list[OracleRule], float]:
    if not isinstance(doc, dict) or doc.get("format") != RULES_FORMAT:
        raise ValidationError(f"rules document must declare format {RULES_FORMAT!r}")
    base_bits = float(doc.get("base_bits", 3.0))
    suite_ref = doc.get("suite")
    if isinstance(suite_ref, str):
        path = Path(suite_ref)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        suite = load_suite(path)
    elif isinstance(suite_ref, dict):
        suite = suite_from_dict(suite_ref)
    else:
        raise ValidationError("rules document needs a 'suite' path or object")
    rules = []
    for raw in doc.get("rules", []):
        rules.append(OracleRule.make(
            penalty_bits=float(raw["penalty_bits"]),
            when=raw.get("when"),
            region=raw.get("region"),
            token=raw.get("token")))
    return suite, rules, base_bits


def load_rules(path) -> tuple[TestSuite, list[OracleRule], float]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    return rules_from_dict(doc, base_dir=path.parent)


def mock_backend_from_rules(path) -> MockOracleBackend:
    suite, rules, base_bits = load_rules(path)
    return MockOracleBackend(suite, rules, base_bits)
