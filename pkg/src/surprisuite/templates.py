"""Template expansion: seeded region slots -> generated test suites.

A template is a flat sequence of regions; each region carries one or more
named seed sets (a seed may be the empty string, e.g. for gap sites), and
each condition selects one seed set per region.  An item corresponds to one
joint choice of a seed from every slot, so conditions built from the same
item share every seed they have in common and remain minimal pairs.

Expansion is a pure function of (template, plan).  Sampling draws joint
indices without replacement from the mixed-radix index space using numpy's
PCG64 generator seeded with the plan's rng_seed, so samples are
reproducible bit-for-bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
import numpy as np

from .errors import ParseError, ValidationError
from .suite import (Condition, ConditionLabel, Factor, Item, TestSuite,
                    suite_from_dict)

TEMPLATE_FORMAT = "template@1"


@dataclass(frozen=True)
class Slot:
    region_name: str
    set_name: str
    seeds: tuple[str, ...]


@dataclass(frozen=True)
class Template:
    name: str
    factors: tuple[Factor, ...]
    region_names: tuple[str, ...]
    slots: tuple[Slot, ...]  # ordered: region order, then set-name order
    # label -> {region -> set name}
    selections: dict[ConditionLabel, dict[str, str]]
    metadata: dict

    def factor_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def slot_for(self, region: str, set_name: str) -> Slot:
        for s in self.slots:
            if s.region_name == region and s.set_name == set_name:
                return s
        raise KeyError((region, set_name))


@dataclass(frozen=True)
class ExpansionPlan:
    mode: str  # "exhaustive" | "sample"
    sample_size: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "sample"):
            raise ValidationError(f"unknown expansion mode {self.mode!r}")
        if self.mode == "sample":
            if self.sample_size is None or self.sample_size < 1:
                raise ValidationError("sample mode requires sample_size >= 1")


def template_from_dict(doc: dict) -> Template:
    if not isinstance(doc, dict):
        raise ValidationError("template document must be a JSON object")
    for key in ("name", "factors", "regions", "conditions"):
        if key not in doc:
            raise ValidationError(f"template is missing required key {key!r}")

    factors = tuple(Factor(f["name"], tuple(f["levels"])) for f in doc["factors"])
    factor_names = tuple(f.name for f in factors)

    region_names = []
    slots: list[Slot] = []
    for r in doc["regions"]:
        if not isinstance(r, dict) or "name" not in r or "seeds" not in r:
            raise ValidationError("each template region needs 'name' and 'seeds'")
        rname = r["name"]
        if rname in region_names:
            raise ValidationError(f"duplicate template region {rname!r}")
        region_names.append(rname)
        if not isinstance(r["seeds"], dict) or not r["seeds"]:
            raise ValidationError(f"region {rname!r}: 'seeds' must be a non-empty "
                                  "object of named seed lists")
        for set_name in sorted(r["seeds"]):
            seeds = r["seeds"][set_name]
            if not isinstance(seeds, list) or not seeds:
                raise ValidationError(
                    f"region {rname!r}, seed set {set_name!r}: needs at least one seed")
            if len(set(seeds)) != len(seeds):
                raise ValidationError(
                    f"region {rname!r}, seed set {set_name!r}: seeds must be distinct")
            for s in seeds:
                if not isinstance(s, str) or s != s.strip():
                    raise ValidationError(
                        f"region {rname!r}, seed set {set_name!r}: seed {s!r} has "
                        "leading/trailing whitespace")
            slots.append(Slot(rname, set_name, tuple(seeds)))

    selections: dict[ConditionLabel, dict[str, str]] = {}
    for rc in doc["conditions"]:
        label = ConditionLabel.from_mapping(rc["label"], factor_names)
        if label in selections:
            raise ValidationError(f"duplicate template condition [{label}]")
        use = rc.get("use", {})
        sel = {}
        for rname in region_names:
            if rname not in use:
                raise ValidationError(
                    f"condition [{label}]: no seed set selected for region {rname!r}")
            set_name = use[rname]
            if not any(s.region_name == rname and s.set_name == set_name for s in slots):
                raise ValidationError(
                    f"condition [{label}]: region {rname!r} has no seed set "
                    f"{set_name!r}")
            sel[rname] = set_name
        selections[label] = sel

    cross = TestSuite(doc["name"], factors, tuple(region_names), (), {}) \
        .condition_labels()
    for label in cross:
        if label not in selections:
            raise ValidationError(f"template is missing condition [{label}]")
    if len(selections) != len(cross):
        raise ValidationError("template conditions do not match the factor cross")

    return Template(doc["name"], factors, tuple(region_names), tuple(slots),
                    selections, doc.get("metadata", {}))


def parse_template(source: str) -> Template:
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    return template_from_dict(doc)


def load_template(path) -> Template:
    with open(path, encoding="utf-8") as fh:
        return parse_template(fh.read())


def count_expansions(template: Template) -> dict[ConditionLabel, int]:
    """Candidate count per condition: the product of its selected seed-set sizes."""
    counts = {}
    for label, sel in template.selections.items():
        n = 1
        for region, set_name in sel.items():
            n *= len(template.slot_for(region, set_name).seeds)
        counts[label] = n
    return counts


def joint_space_size(template: Template) -> int:
    """Size of the joint index space: the product over every slot's seed count."""
    n = 1
    for s in template.slots:
        n *= len(s.seeds)
    return n


def _decode(index: int, sizes: list[int]) -> list[int]:
    # Mixed-radix, first slot most significant (lexicographic slot order).
    digits = [0] * len(sizes)
    for j in range(len(sizes) - 1, -1, -1):
        digits[j] = index % sizes[j]
        index //= sizes[j]
    return digits


def _sample_without_replacement(total: int, k: int, rng_seed: int) -> list[int]:
    if total >= 2 ** 63:
        raise ValidationError("joint seed space too large to sample")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    if 2 * k >= total:
        return [int(x) for x in rng.permutation(total)[:k]]
    chosen: list[int] = []
    seen: set[int] = set()
    while len(chosen) < k:
        batch = rng.integers(0, total, size=max(16, k - len(chosen)))
        for x in batch:
            xi = int(x)
            if xi not in seen:
                seen.add(xi)
                chosen.append(xi)
                if len(chosen) == k:
                    break
    return chosen


def expand(template: Template, plan: ExpansionPlan) -> TestSuite:
    """Expand a template into a suite, one item per drawn joint seed tuple."""
    sizes = [len(s.seeds) for s in template.slots]
    total = joint_space_size(template)
    counts = count_expansions(template)

    if plan.mode == "sample":
        available = min(counts.values())
        assert plan.sample_size is not None
        if plan.sample_size > available:
            raise ValidationError(
                f"requested {plan.sample_size} of {available} available seed tuples")
        indices = _sample_without_replacement(total, plan.sample_size, plan.rng_seed)
    else:
        indices = list(range(total))

    slot_pos = {(s.region_name, s.set_name): j for j, s in enumerate(template.slots)}
    labels = TestSuite(template.name, template.factors, template.region_names,
                       (), {}).condition_labels()

    items = []
    for item_id, index in enumerate(indices, start=1):
        digits = _decode(index, sizes)
        conditions = {}
        for label in labels:
            sel = template.selections[label]
            texts = []
            for region in template.region_names:
                slot = template.slot_for(region, sel[region])
                digit = digits[slot_pos[(region, sel[region])]]
                texts.append(slot.seeds[digit])
            conditions[label] = Condition(label, tuple(texts),
                                          (0,) * len(template.region_names))
        items.append(Item(item_id, conditions))

    metadata = dict(template.metadata)
    metadata["generated_from"] = {
        "template": template.name,
        "mode": plan.mode,
        "rng_seed": plan.rng_seed,
        "sample_size": plan.sample_size,
        "joint_space": total,
    }
    suite = TestSuite(template.name, template.factors, template.region_names,
                      tuple(items), metadata, ())
    # Re-validate through the parser path so expansion cannot emit an
    # inconsistent suite.
    from .suite import suite_to_dict
    return suite_from_dict(suite_to_dict(suite))
