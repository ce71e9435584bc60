"""Surprisal contrasts: signed sums of region surprisals across conditions.

Every metric here is a per-item value

    sum over plus terms  S(condition, region)
  - sum over minus terms S(condition, region)

where S is the summed surprisal of one region in one condition of that
item.  The presets build the standard contrasts: the ordering effect for
center-embedding designs and the filler-gap wh-effects.  Suites whose
factor cross is wider than a preset expects (e.g. an ORDER x STRUCTURE
design) pin the remaining factors with the ``fixed`` argument.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import ValidationError
from .scoring import Backend, align, merge_region_scores, score
from .suite import ConditionLabel, TestSuite, render_condition

# {item_id: {label: {region: bits}}}
RegionSums = dict[int, dict[ConditionLabel, dict[str, float]]]


@dataclass(frozen=True)
class Contrast:
    name: str
    plus_terms: tuple[tuple[ConditionLabel, str], ...]
    minus_terms: tuple[tuple[ConditionLabel, str], ...]

    def __post_init__(self):
        if not self.plus_terms or not self.minus_terms:
            raise ValidationError(
                f"contrast {self.name!r} needs at least one term on each side")

    def terms(self):
        return list(self.plus_terms) + list(self.minus_terms)

    def condition_set(self) -> str:
        plus = sorted({str(lab) for lab, _ in self.plus_terms})
        minus = sorted({str(lab) for lab, _ in self.minus_terms})
        return f"{'|'.join(plus)} vs {'|'.join(minus)}"


@dataclass(frozen=True)
class MetricResult:
    contrast_name: str
    per_item: dict[int, float]

    @property
    def n_items(self) -> int:
        return len(self.per_item)

    def values(self) -> list[float]:
        return [self.per_item[i] for i in sorted(self.per_item)]


@dataclass(frozen=True)
class RegionViolation:
    item_id: int | None
    label: ConditionLabel
    region: str
    reason: str

    def __str__(self):
        where = f"item {self.item_id}, " if self.item_id is not None else ""
        return f"{where}condition [{self.label}], region {self.region!r}: {self.reason}"


def validate_measurement_regions(suite: TestSuite,
                                 contrast: Contrast) -> list[RegionViolation]:
    """Check that every (condition, region) a contrast touches exists and is
    non-empty in every item.  Returns violations; never raises."""
    violations = []
    labels = set(suite.condition_labels())
    for label, region in contrast.terms():
        if label not in labels:
            violations.append(RegionViolation(
                None, label, region, "condition not in suite"))
            continue
        if region not in suite.region_names:
            violations.append(RegionViolation(
                None, label, region, "region not declared in suite"))
            continue
        idx = suite.region_names.index(region)
        for item in suite.items:
            cond = item.conditions.get(label)
            if cond is None:
                violations.append(RegionViolation(
                    item.id, label, region, "condition missing from item"))
            elif cond.regions[idx] == "":
                violations.append(RegionViolation(
                    item.id, label, region, "region is empty in this condition"))
    return violations


def collect_region_sums(suite: TestSuite, backend: Backend) -> RegionSums:
    """Score every (item, condition) of a suite and sum surprisal per region.

    Multi-sentence conditions are scored sentence by sentence and their
    region sums merged, so contrasts can mix regions from different
    physical sentences of the same condition.
    """
    sums: RegionSums = {}
    for item in suite.items:
        per_label = {}
        for label in suite.condition_labels():
            rsents = render_condition(suite, item, label)
            scored = score(backend, [r.text for r in rsents])
            merged = merge_region_scores(
                [align(sc, rs) for sc, rs in zip(scored, rsents)])
            per_label[label] = dict(merged.sums)
        sums[item.id] = per_label
    return sums


def eval_contrast(suite: TestSuite, region_sums: RegionSums,
                  contrast: Contrast) -> MetricResult:
    """Per item: sum of plus-term region surprisals minus sum of minus terms."""
    violations = validate_measurement_regions(suite, contrast)
    if violations:
        raise ValidationError(
            f"contrast {contrast.name!r} fails validation: "
            + "; ".join(str(v) for v in violations[:5]))
    per_item: dict[int, float] = {}
    for item in suite.items:
        scores = region_sums.get(item.id)
        if scores is None:
            raise ValidationError(f"no scores for item {item.id}")
        value = 0.0
        for sign, terms in ((1.0, contrast.plus_terms), (-1.0, contrast.minus_terms)):
            for label, region in terms:
                cond_scores = scores.get(label)
                if cond_scores is None or region not in cond_scores:
                    raise ValidationError(
                        f"missing score for item {item.id}, condition [{label}]")
                value += sign * cond_scores[region]
        per_item[item.id] = value
    return MetricResult(contrast.name, per_item)


# ---------------------------------------------------------------------------
# Preset contrasts

def _resolve_fixed(suite: TestSuite, preset_factors: dict[str, list[str]],
                   fixed: Mapping[str, str] | None, preset: str) -> dict[str, str]:
    """Check required factors/levels and pin any remaining factors via fixed."""
    fixed = dict(fixed or {})
    names = suite.factor_names()
    for fname, levels in preset_factors.items():
        if fname not in names:
            raise ValidationError(f"{preset}: suite has no factor {fname!r}")
        declared = suite.factor(fname).levels
        for lvl in levels:
            if lvl not in declared:
                raise ValidationError(
                    f"{preset}: factor {fname!r} lacks level {lvl!r}")
    for fname, lvl in fixed.items():
        if fname not in names:
            raise ValidationError(f"{preset}: unknown fixed factor {fname!r}")
        if fname in preset_factors:
            raise ValidationError(
                f"{preset}: factor {fname!r} is contrasted, cannot be fixed")
        if lvl not in suite.factor(fname).levels:
            raise ValidationError(
                f"{preset}: factor {fname!r} lacks level {lvl!r}")
    leftover = [n for n in names if n not in preset_factors and n not in fixed]
    if leftover:
        raise ValidationError(
            f"{preset}: pin factor(s) {leftover} via 'fixed' to build this contrast")
    return fixed


def _label(suite: TestSuite, fixed: Mapping[str, str],
           **assignment: str) -> ConditionLabel:
    mapping = dict(fixed)
    mapping.update(assignment)
    return suite.label(mapping)


def ordering_effect(suite: TestSuite, fixed: Mapping[str, str] | None = None,
                    name: str | None = None) -> Contrast:
    """Mismatch-minus-match surprisal summed over the two verb regions."""
    fixed = _resolve_fixed(suite, {"ORDER": ["match", "mismatch"]}, fixed,
                           "ordering_effect")
    for region in ("VP1", "VP2"):
        if region not in suite.region_names:
            raise ValidationError(f"ordering_effect: suite has no region {region!r}")
    mismatch = _label(suite, fixed, ORDER="mismatch")
    match = _label(suite, fixed, ORDER="match")
    return Contrast(
        name or _preset_name("ordering_effect", fixed),
        plus_terms=((mismatch, "VP1"), (mismatch, "VP2")),
        minus_terms=((match, "VP1"), (match, "VP2")))


def wh_effect_plus_gap(suite: TestSuite, measure_region: str,
                       fixed: Mapping[str, str] | None = None,
                       name: str | None = None) -> Contrast:
    """Filler effect at a gapped position: S([-FILLER,+GAP]) - S([+FILLER,+GAP])."""
    fixed = _resolve_fixed(suite, {"FILLER": ["+", "-"], "GAP": ["+"]}, fixed,
                           "wh_effect_plus_gap")
    _require_region(suite, measure_region, "wh_effect_plus_gap")
    return Contrast(
        name or _preset_name("wh_effect_plus_gap", fixed),
        plus_terms=((_label(suite, fixed, FILLER="-", GAP="+"), measure_region),),
        minus_terms=((_label(suite, fixed, FILLER="+", GAP="+"), measure_region),))


def wh_effect_minus_gap(suite: TestSuite, measure_region: str,
                        fixed: Mapping[str, str] | None = None,
                        name: str | None = None) -> Contrast:
    """The filled-gap effect: S([+FILLER,-GAP]) - S([-FILLER,-GAP])."""
    fixed = _resolve_fixed(suite, {"FILLER": ["+", "-"], "GAP": ["-"]}, fixed,
                           "wh_effect_minus_gap")
    _require_region(suite, measure_region, "wh_effect_minus_gap")
    return Contrast(
        name or _preset_name("wh_effect_minus_gap", fixed),
        plus_terms=((_label(suite, fixed, FILLER="+", GAP="-"), measure_region),),
        minus_terms=((_label(suite, fixed, FILLER="-", GAP="-"), measure_region),))


def licensing_interaction(suite: TestSuite, plus_region: str, minus_region: str,
                          fixed: Mapping[str, str] | None = None,
                          name: str | None = None) -> Contrast:
    """Sum of the two wh-effects as one signed sum over the 2x2 cross."""
    fixed = _resolve_fixed(suite, {"FILLER": ["+", "-"], "GAP": ["+", "-"]}, fixed,
                           "licensing_interaction")
    _require_region(suite, plus_region, "licensing_interaction")
    _require_region(suite, minus_region, "licensing_interaction")
    return Contrast(
        name or _preset_name("licensing_interaction", fixed),
        plus_terms=((_label(suite, fixed, FILLER="-", GAP="+"), plus_region),
                    (_label(suite, fixed, FILLER="+", GAP="-"), minus_region)),
        minus_terms=((_label(suite, fixed, FILLER="+", GAP="+"), plus_region),
                     (_label(suite, fixed, FILLER="-", GAP="-"), minus_region)))


def _require_region(suite: TestSuite, region: str, preset: str) -> None:
    if region not in suite.region_names:
        raise ValidationError(f"{preset}: suite has no region {region!r}")


def _preset_name(base: str, fixed: Mapping[str, str]) -> str:
    if not fixed:
        return base
    tail = ",".join(f"{k}={v}" for k, v in sorted(fixed.items()))
    return f"{base}[{tail}]"


# ---------------------------------------------------------------------------
# Declarative contrasts (suite 'analyses' entries or standalone files)

def contrast_from_spec(suite: TestSuite, spec: Mapping) -> Contrast:
    """Build a contrast from a JSON-style mapping.

    Either a preset reference ``{"name": ..., "preset": ..., ...args}`` or an
    explicit ``{"name": ..., "plus": [{"label": {...}, "region": ...}],
    "minus": [...]}``.
    """
    name = spec.get("name")
    if not isinstance(name, str) or not name:
        raise ValidationError("analysis entry needs a 'name'")
    preset = spec.get("preset")
    if preset is not None:
        fixed = spec.get("fixed")
        if preset == "ordering_effect":
            return ordering_effect(suite, fixed, name=name)
        if preset == "wh_effect_plus_gap":
            return wh_effect_plus_gap(suite, spec["measure_region"], fixed, name=name)
        if preset == "wh_effect_minus_gap":
            return wh_effect_minus_gap(suite, spec["measure_region"], fixed, name=name)
        if preset == "licensing_interaction":
            return licensing_interaction(suite, spec["plus_region"],
                                         spec["minus_region"], fixed, name=name)
        raise ValidationError(f"unknown contrast preset {preset!r}")

    def parse_terms(key: str):
        terms = []
        for t in spec.get(key, []):
            terms.append((suite.label(t["label"]), t["region"]))
        return tuple(terms)

    return Contrast(name, parse_terms("plus"), parse_terms("minus"))


def suite_contrasts(suite: TestSuite) -> list[Contrast]:
    """Contrasts embedded in the suite's 'analyses' block."""
    return [contrast_from_spec(suite, spec) for spec in suite.analyses]
