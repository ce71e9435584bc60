"""Test-suite data model: factorial designs, items, conditions, regions.

A suite is a family of minimal-pair sentences organized as items x
conditions, where conditions are the cells of a declared factor cross and
every condition carries one text per named region (the empty string marks
a region that is absent in that condition, e.g. a gap site).  Rendering
joins the non-empty region texts with single spaces and records exact
character spans per region, so per-token surprisals can later be summed
region by region.

A condition may span more than one physical sentence (paired control
sentences); each region then carries a sentence index and rendering yields
one :class:`RegionedSentence` per physical sentence.

All types are immutable after construction and safe to share across
threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ParseError, UnknownConditionError, ValidationError

SUITE_FORMAT = "suite@1"


@dataclass(frozen=True)
class Factor:
    name: str
    levels: tuple[str, ...]


@dataclass(frozen=True, order=True)
class ConditionLabel:
    """One cell of the factor cross, as (factor, level) pairs in factor order."""

    assignments: tuple[tuple[str, str], ...]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str],
                     factor_order: Iterable[str] | None = None) -> "ConditionLabel":
        if factor_order is None:
            factor_order = sorted(mapping)
        missing = [f for f in factor_order if f not in mapping]
        if missing:
            raise ValidationError(f"condition label missing factors {missing}")
        extra = set(mapping) - set(factor_order)
        if extra:
            raise ValidationError(f"condition label has unknown factors {sorted(extra)}")
        return cls(tuple((f, mapping[f]) for f in factor_order))

    def level(self, factor: str) -> str:
        for f, lvl in self.assignments:
            if f == factor:
                return lvl
        raise KeyError(factor)

    def as_dict(self) -> dict[str, str]:
        return dict(self.assignments)

    def matches(self, partial: Mapping[str, str]) -> bool:
        got = self.as_dict()
        return all(got.get(f) == lvl for f, lvl in partial.items())

    def __str__(self) -> str:
        return ",".join(f"{f}={lvl}" for f, lvl in self.assignments)


@dataclass(frozen=True)
class Condition:
    label: ConditionLabel
    regions: tuple[str, ...]
    # Physical-sentence index per region; all zeros for single-sentence items.
    sentences: tuple[int, ...]

    def n_sentences(self) -> int:
        return max(self.sentences) + 1


@dataclass(frozen=True)
class Item:
    id: int
    conditions: dict[ConditionLabel, Condition] = field(compare=True)

    def condition(self, label: ConditionLabel) -> Condition:
        try:
            return self.conditions[label]
        except KeyError:
            raise UnknownConditionError(
                f"item {self.id} has no condition [{label}]") from None


@dataclass(frozen=True)
class RegionSpan:
    region: str
    start: int
    end: int

    @property
    def empty(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True)
class RegionedSentence:
    """A rendered sentence plus half-open character spans, one per region.

    Empty regions get zero-width spans anchored where the next non-empty
    region starts (end of text if nothing follows).  Joining the non-empty
    span contents with single spaces reconstructs ``text`` exactly.
    """

    text: str
    spans: tuple[RegionSpan, ...]

    def span_for(self, region: str) -> RegionSpan:
        for s in self.spans:
            if s.region == region:
                return s
        raise KeyError(region)


@dataclass(frozen=True)
class TestSuite:
    name: str
    factors: tuple[Factor, ...]
    region_names: tuple[str, ...]
    items: tuple[Item, ...]
    metadata: dict = field(default_factory=dict)
    analyses: tuple[dict, ...] = ()

    def factor_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def factor(self, name: str) -> Factor:
        for f in self.factors:
            if f.name == name:
                return f
        raise KeyError(name)

    def condition_labels(self) -> list[ConditionLabel]:
        """All cells of the factor cross, in declared factor/level order."""
        labels = [()]
        for f in self.factors:
            labels = [prev + ((f.name, lvl),) for prev in labels for lvl in f.levels]
        return [ConditionLabel(a) for a in labels]

    def item(self, item_id: int) -> Item:
        for it in self.items:
            if it.id == item_id:
                return it
        raise KeyError(item_id)

    def label(self, mapping: Mapping[str, str]) -> ConditionLabel:
        return ConditionLabel.from_mapping(mapping, self.factor_names())


# ---------------------------------------------------------------------------
# Rendering

def _render_regions(pairs: list[tuple[str, str]]) -> RegionedSentence:
    """Join non-empty region texts with single spaces, tracking spans."""
    starts: list[int | None] = []
    pos = 0
    any_text = False
    for _, text in pairs:
        if text:
            if any_text:
                pos += 1  # joining space
            starts.append(pos)
            pos += len(text)
            any_text = True
        else:
            starts.append(None)
    parts = [t for _, t in pairs if t]
    text = " ".join(parts)

    # Anchor empty regions at the start of the next non-empty region.
    spans: list[RegionSpan] = []
    next_start = len(text)
    anchors: list[int] = [0] * len(pairs)
    for i in range(len(pairs) - 1, -1, -1):
        if starts[i] is None:
            anchors[i] = next_start
        else:
            anchors[i] = starts[i]  # type: ignore[assignment]
            next_start = starts[i]  # type: ignore[assignment]
    for (name, t), start, anchor in zip(pairs, starts, anchors):
        if start is None:
            spans.append(RegionSpan(name, anchor, anchor))
        else:
            spans.append(RegionSpan(name, start, start + len(t)))
    return RegionedSentence(text, tuple(spans))


def render_condition(suite: TestSuite, item: Item,
                     label: ConditionLabel) -> tuple[RegionedSentence, ...]:
    """Render every physical sentence of (item, label), in sentence order."""
    cond = item.condition(label)
    rendered = []
    for k in range(cond.n_sentences()):
        pairs = [(name, text)
                 for name, text, s in zip(suite.region_names, cond.regions, cond.sentences)
                 if s == k]
        rendered.append(_render_regions(pairs))
    return tuple(rendered)


def render_sentence(suite: TestSuite, item: Item,
                    label: ConditionLabel) -> RegionedSentence:
    """Render a single-sentence condition.

    Raises ValidationError for multi-sentence conditions; use
    :func:`render_condition` for those.
    """
    rendered = render_condition(suite, item, label)
    if len(rendered) != 1:
        raise ValidationError(
            f"item {item.id} condition [{label}] has {len(rendered)} sentences; "
            "use render_condition")
    return rendered[0]


# ---------------------------------------------------------------------------
# Parsing and validation

def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _validate_region_text(text, where: str) -> str:
    _check(isinstance(text, str), f"{where}: region text must be a string")
    _check(text == text.strip(),
           f"{where}: region text has leading/trailing whitespace: {text!r}")
    return text


def suite_from_dict(doc: dict) -> TestSuite:
    if not isinstance(doc, dict):
        raise ValidationError("suite document must be a JSON object")
    for key in ("name", "factors", "regions", "items"):
        _check(key in doc, f"suite is missing required key {key!r}")
    name = doc["name"]
    _check(isinstance(name, str) and name != "", "suite name must be a non-empty string")

    factors = []
    seen_factors = set()
    _check(isinstance(doc["factors"], list) and doc["factors"],
           "suite must declare at least one factor")
    for f in doc["factors"]:
        _check(isinstance(f, dict) and "name" in f and "levels" in f,
               "each factor needs 'name' and 'levels'")
        _check(f["name"] not in seen_factors, f"duplicate factor {f['name']!r}")
        seen_factors.add(f["name"])
        levels = tuple(f["levels"])
        _check(len(levels) >= 1 and len(set(levels)) == len(levels),
               f"factor {f['name']!r} needs distinct levels")
        factors.append(Factor(f["name"], levels))
    factors = tuple(factors)
    factor_names = tuple(f.name for f in factors)

    region_names = tuple(doc["regions"])
    _check(len(region_names) > 0, "suite declares no regions")
    _check(len(set(region_names)) == len(region_names), "duplicate region names")

    raw_items = doc["items"]
    _check(isinstance(raw_items, list), "items must be an array")
    _check(len(raw_items) > 0, "suite has no items")

    items = []
    seen_ids: set[int] = set()
    for raw in raw_items:
        _check(isinstance(raw, dict) and "id" in raw and "conditions" in raw,
               "each item needs 'id' and 'conditions'")
        item_id = raw["id"]
        _check(isinstance(item_id, int) and item_id > 0,
               f"item id must be a positive integer, got {item_id!r}")
        _check(item_id not in seen_ids, f"duplicate item id {item_id}")
        seen_ids.add(item_id)

        conditions: dict[ConditionLabel, Condition] = {}
        for rc in raw["conditions"]:
            _check(isinstance(rc, dict) and "label" in rc and "regions" in rc,
                   f"item {item_id}: each condition needs 'label' and 'regions'")
            try:
                label = ConditionLabel.from_mapping(rc["label"], factor_names)
            except ValidationError as e:
                raise ValidationError(f"item {item_id}: {e}") from None
            for f in factors:
                lvl = label.level(f.name)
                _check(lvl in f.levels,
                       f"item {item_id}, condition [{label}]: level {lvl!r} not "
                       f"declared for factor {f.name!r}")
            _check(label not in conditions,
                   f"item {item_id}: duplicate condition [{label}]")

            regions = rc["regions"]
            _check(isinstance(regions, list) and len(regions) == len(region_names),
                   f"item {item_id}, condition [{label}]: expected "
                   f"{len(region_names)} regions, got {len(regions) if isinstance(regions, list) else type(regions).__name__}")
            texts = tuple(
                _validate_region_text(t, f"item {item_id}, condition [{label}]")
                for t in regions)

            sent = rc.get("sentences")
            if sent is None:
                sent_idx = (0,) * len(region_names)
            else:
                _check(isinstance(sent, list) and len(sent) == len(region_names),
                       f"item {item_id}, condition [{label}]: 'sentences' must align "
                       "with regions")
                _check(all(isinstance(s, int) and s >= 0 for s in sent),
                       f"item {item_id}, condition [{label}]: sentence indices must "
                       "be non-negative integers")
                sent_idx = tuple(sent)
            used = set(sent_idx)
            _check(used == set(range(max(used) + 1)),
                   f"item {item_id}, condition [{label}]: sentence indices must be "
                   "contiguous from 0")
            for k in sorted(used):
                has_text = any(t for t, s in zip(texts, sent_idx) if s == k)
                _check(has_text,
                       f"item {item_id}, condition [{label}]: sentence {k} has no "
                       "non-empty region")

            conditions[label] = Condition(label, texts, sent_idx)

        items.append(Item(item_id, conditions))

    # The factor cross must be realized exactly, in every item.
    cross = frozenset(
        TestSuite(name, factors, region_names, (), {}).condition_labels())
    for it in items:
        missing = cross - frozenset(it.conditions)
        if missing:
            lab = sorted(missing)[0]
            raise ValidationError(f"item {it.id} is missing condition [{lab}]")
        extra = frozenset(it.conditions) - cross
        if extra:
            lab = sorted(extra)[0]
            raise ValidationError(
                f"item {it.id} has condition [{lab}] outside the factor cross")

    metadata = doc.get("metadata", {})
    _check(isinstance(metadata, dict), "metadata must be an object")
    analyses = doc.get("analyses", [])
    _check(isinstance(analyses, list), "analyses must be an array")
    return TestSuite(name, factors, region_names, tuple(items),
                     metadata, tuple(analyses))


def parse_suite(source: str) -> TestSuite:
    """Parse and validate a suite document from JSON text."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    return suite_from_dict(doc)


def load_suite(path) -> TestSuite:
    with open(path, encoding="utf-8") as fh:
        return parse_suite(fh.read())


def suite_to_dict(suite: TestSuite) -> dict:
    items = []
    for it in suite.items:
        conds = []
        # Serialize in canonical cross order for byte-stable output.
        for label in suite.condition_labels():
            cond = it.conditions[label]
            entry: dict = {"label": label.as_dict(), "regions": list(cond.regions)}
            if any(s != 0 for s in cond.sentences):
                entry["sentences"] = list(cond.sentences)
            conds.append(entry)
        items.append({"id": it.id, "conditions": conds})
    doc: dict = {
        "name": suite.name,
        "factors": [{"name": f.name, "levels": list(f.levels)} for f in suite.factors],
        "regions": list(suite.region_names),
        "items": items,
    }
    if suite.metadata:
        doc["metadata"] = suite.metadata
    if suite.analyses:
        doc["analyses"] = list(suite.analyses)
    return doc


def serialize_suite(suite: TestSuite) -> str:
    return json.dumps(suite_to_dict(suite), ensure_ascii=False, indent=2) + "\n"


def save_suite(suite: TestSuite, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_suite(suite))
