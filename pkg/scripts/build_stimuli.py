#!/usr/bin/env python3
"""Regenerate the shipped suite and template files under src/surprisuite/data.

The word bank lives here; the synthetic training corpus used by the test
suite derives its vocabulary from these files, so regenerate and re-run the
tests together if you edit anything.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from surprisuite import load_suite, load_template  # noqa: E402

DATA = ROOT / "src" / "surprisuite" / "data"

# (agent, transitive verb, inanimate, intransitive verb, 4-token agent PP)
# Verb and modifier repeats across neighbouring items are deliberate: they
# give the Markov-locality checks identical scoring contexts to compare.
CENTER_EMBEDDING_BANK = [
    ("thief", "stole", "diamond", "glittered", "in the black mask"),
    ("burglar", "stole", "necklace", "glittered", "in the black mask"),
    ("chef", "stirred", "soup", "boiled", "in the white apron"),
    ("cook", "stirred", "stew", "boiled", "in the white apron"),
    ("clerk", "typed", "letter", "arrived", "at the front desk"),
    ("porter", "carried", "parcel", "vanished", "at the front desk"),
    ("baker", "sliced", "bread", "cooled", "at the corner stall"),
    ("grocer", "weighed", "melon", "ripened", "at the corner stall"),
    ("plumber", "fixed", "pipe", "leaked", "in the damp cellar"),
    ("tenant", "rented", "cottage", "crumbled", "in the damp cellar"),
    ("gardener", "watered", "rose", "bloomed", "in the walled garden"),
    ("florist", "arranged", "tulip", "wilted", "in the walled garden"),
    ("captain", "steered", "ship", "sank", "on the stormy sea"),
    ("sailor", "rowed", "boat", "drifted", "on the stormy sea"),
    ("painter", "painted", "fence", "faded", "by the garden gate"),
    ("farmer", "milked", "cow", "grazed", "by the wooden barn"),
    ("hunter", "tracked", "deer", "fled", "in the dark forest"),
    ("ranger", "spotted", "eagle", "soared", "in the dark forest"),
    ("miner", "dug", "tunnel", "collapsed", "under the old hill"),
    ("mason", "built", "wall", "cracked", "by the stone bridge"),
    ("student", "read", "novel", "ended", "in the quiet library"),
    ("scholar", "wrote", "essay", "appeared", "in the quiet library"),
    ("nurse", "poured", "medicine", "spilled", "in the bright ward"),
    ("doctor", "mixed", "tonic", "fizzed", "in the bright ward"),
]


def build_center_embedding() -> dict:
    items = []
    for i, (agent, vt, inan, vi, pp) in enumerate(CENTER_EMBEDDING_BANK, start=1):
        np1 = f"The {inan}"
        np2 = f"the {agent}"
        conds = []
        for structure, modifier in (("embedding", ""), ("embedding-long", pp)):
            for order, vp1, vp2 in (("match", vt, vi), ("mismatch", vi, vt)):
                conds.append({
                    "label": {"ORDER": order, "STRUCTURE": structure},
                    "regions": [np1, "that", np2, modifier, vp1, vp2, ".", ""],
                })
        for order, vp1, vp2 in (("match", vt, vi), ("mismatch", vi, vt)):
            conds.append({
                "label": {"ORDER": order, "STRUCTURE": "sentence"},
                "regions": [np1, "", f"The {agent}", "", vp1, vp2, ".", "."],
                "sentences": [1, 0, 0, 0, 0, 1, 0, 1],
            })
        items.append({"id": i, "conditions": conds})
    return {
        "name": "center_embedding",
        "factors": [
            {"name": "ORDER", "levels": ["match", "mismatch"]},
            {"name": "STRUCTURE",
             "levels": ["embedding", "embedding-long", "sentence"]},
        ],
        "regions": ["NP1", "comp", "NP2", "modifier", "VP1", "VP2", "end", "end2"],
        "items": items,
        "metadata": {
            "design": "object-extracted relative clause inside the matrix subject; "
                      "verb order carries the subject-verb pairing",
            "sentence_controls": "the 'sentence' conditions are two independent "
                                 "simple sentences; VP1 lives in the first, VP2 "
                                 "in the second",
            "long_modifier": "a 4-token prepositional phrase on the inner subject",
            "punctuation": "final period included as its own token in every "
                           "physical sentence",
        },
        "analyses": [
            {"name": "ordering_effect_embedding", "preset": "ordering_effect",
             "fixed": {"STRUCTURE": "embedding"}},
            {"name": "ordering_effect_embedding_long", "preset": "ordering_effect",
             "fixed": {"STRUCTURE": "embedding-long"}},
            {"name": "ordering_effect_sentence", "preset": "ordering_effect",
             "fixed": {"STRUCTURE": "sentence"}},
        ],
    }


FILLER_GAP_BANK = [
    ("count", "insulted", "the hostess", "yesterday"),
    ("duke", "praised", "the actress", "last night"),
    ("baron", "mocked", "the barmaid", "on Friday"),
    ("minister", "thanked", "the countess", "afterwards"),
    ("waiter", "served", "the princess", "yesterday"),
    ("colonel", "saluted", "the widow", "last night"),
    ("mayor", "greeted", "the singer", "on Friday"),
    ("senator", "praised", "the dancer", "afterwards"),
]


def build_filler_gap() -> dict:
    items = []
    for i, (subj, verb, obj, adjunct) in enumerate(FILLER_GAP_BANK, start=1):
        conds = []
        for filler, comp in (("-", "that"), ("+", "who")):
            for gap, obj_text in (("-", obj), ("+", "")):
                conds.append({
                    "label": {"FILLER": filler, "GAP": gap},
                    "regions": ["I know", comp, f"the {subj}", verb, obj_text,
                                adjunct, "."],
                })
        items.append({"id": i, "conditions": conds})
    return {
        "name": "filler_gap",
        "factors": [
            {"name": "FILLER", "levels": ["+", "-"]},
            {"name": "GAP", "levels": ["+", "-"]},
        ],
        "regions": ["intro", "comp", "subj", "verb", "obj", "postgap", "end"],
        "items": items,
        "metadata": {
            "design": "embedded question with the direct object either filled "
                      "or gapped, crossed with who/that",
            "measurement": "gap expectations read out at 'postgap' (the full "
                           "temporal adjunct); filled-gap effects at 'obj'",
            "punctuation": "final period included as its own token",
        },
        "analyses": [
            {"name": "wh_effect_plus_gap", "preset": "wh_effect_plus_gap",
             "measure_region": "postgap"},
            {"name": "wh_effect_minus_gap", "preset": "wh_effect_minus_gap",
             "measure_region": "obj"},
            {"name": "licensing_interaction", "preset": "licensing_interaction",
             "plus_region": "postgap", "minus_region": "obj"},
        ],
    }


# (island verb: gerund, finite; first object; rc head; second object)
DISCHARGE_BANK = [
    ("insulting", "insulted", "the actress", "the old man", "the countess"),
    ("praising", "praised", "the barmaid", "the young lady", "the princess"),
    ("mocking", "mocked", "the dancer", "the tall man", "the widow"),
    ("greeting", "greeted", "the singer", "the old woman", "the duchess"),
    ("thanking", "thanked", "the hostess", "the young man", "the baroness"),
    ("serving", "served", "the maid", "the old lady", "the empress"),
]


def build_discharge() -> dict:
    items = []
    for i, (ger, fin, first_obj, rc_head, second_obj) in enumerate(
            DISCHARGE_BANK, start=1):
        conds = []
        for filler, wh in (("+", "who"), ("-", "that")):
            for gap, obj_text in (("+", ""), ("-", second_obj)):
                base = {
                    "intro": "I know", "wh": wh, "comma1": "", "ger": "",
                    "first_obj": "", "comma2": "", "subj": "", "rc_that": "",
                    "rc_verb": "", "rc_obj": "", "verb": "talked",
                    "manner": "very loudly", "prep": "with", "obj": obj_text,
                    "postgap": "on the balcony", "end": ".",
                }
                subject = dict(base)
                subject["subj"] = "" if filler == "+" else "the count"
                adjunct = dict(base)
                adjunct.update({
                    "comma1": ",", "ger": f"after {ger}",
                    "first_obj": "" if filler == "+" else first_obj,
                    "comma2": ",", "subj": "the count",
                })
                cnp = dict(base)
                cnp.update({
                    "subj": rc_head, "rc_that": "that", "rc_verb": fin,
                    "rc_obj": "" if filler == "+" else first_obj,
                })
                for condition, regions in (("subject", subject),
                                           ("adjunct-discharge", adjunct),
                                           ("cnp-discharge", cnp)):
                    conds.append({
                        "label": {"CONDITION": condition, "FILLER": filler,
                                  "GAP": gap},
                        "regions": [regions[r] for r in DISCHARGE_REGIONS],
                    })
        items.append({"id": i, "conditions": conds})
    return {
        "name": "discharge",
        "factors": [
            {"name": "CONDITION",
             "levels": ["subject", "adjunct-discharge", "cnp-discharge"]},
            {"name": "FILLER", "levels": ["+", "-"]},
            {"name": "GAP", "levels": ["+", "-"]},
        ],
        "regions": list(DISCHARGE_REGIONS),
        "items": items,
        "metadata": {
            "design": "double-gap sentences: an upstream position (subject, or "
                      "an object inside an adjunct/relative-clause island) plus "
                      "a downstream prepositional object",
            "minus_gap_choice": "the -GAP conditions fill only the downstream "
                                "object; the upstream position co-varies with "
                                "FILLER so that -FILLER conditions contain no "
                                "unlicensed gap",
            "punctuation": "final period included as its own token",
        },
        "analyses": [
            {"name": f"wh_effect_plus_gap_{cond}", "preset": "wh_effect_plus_gap",
             "measure_region": "postgap", "fixed": {"CONDITION": cond}}
            for cond in ("subject", "adjunct-discharge", "cnp-discharge")
        ] + [
            {"name": f"wh_effect_minus_gap_{cond}", "preset": "wh_effect_minus_gap",
             "measure_region": "obj", "fixed": {"CONDITION": cond}}
            for cond in ("subject", "adjunct-discharge", "cnp-discharge")
        ],
    }


DISCHARGE_REGIONS = ("intro", "wh", "comma1", "ger", "first_obj", "comma2",
                     "subj", "rc_that", "rc_verb", "rc_obj", "verb", "manner",
                     "prep", "obj", "postgap", "end")


def build_island_template() -> dict:
    regions = [
        {"name": "intro", "seeds": {"base": ["I know", "I remember", "I recall"]}},
        {"name": "wh", "seeds": {"base": ["who"]}},
        {"name": "comma1", "seeds": {"on": [","], "none": [""]}},
        {"name": "sub", "seeds": {"on": ["after"], "none": [""]}},
        {"name": "isl_subj",
         "seeds": {"np": ["the count", "the duke", "the waiter"], "none": [""]}},
        {"name": "isl_verb",
         "seeds": {"fin": ["insulted", "praised", "mocked"],
                   "ger": ["insulting", "praising", "mocking"], "none": [""]}},
        {"name": "isl_obj",
         "seeds": {"np": ["the hostess", "the actress", "the barmaid"],
                   "none": [""]}},
        {"name": "isl_pp",
         "seeds": {"pp": ["on the balcony", "at the party", "in the garden"],
                   "none": [""]}},
        {"name": "comma2", "seeds": {"on": [","], "none": [""]}},
        {"name": "subj",
         "seeds": {"np": ["the baron", "the senator", "the mayor",
                          "the colonel"]}},
        {"name": "subj_pp",
         "seeds": {"pp": ["from the southern province",
                          "from the northern village",
                          "from the old quarter"], "none": [""]}},
        {"name": "rc_that", "seeds": {"on": ["that"], "none": [""]}},
        {"name": "rc_verb",
         "seeds": {"fin": ["insulted", "praised", "mocked"], "none": [""]}},
        {"name": "rc_obj",
         "seeds": {"np": ["the hostess", "the actress", "the barmaid"],
                   "none": [""]}},
        {"name": "rc_pp",
         "seeds": {"pp": ["on the balcony", "at the party", "in the garden"],
                   "none": [""]}},
        {"name": "verb", "seeds": {"base": ["talked", "argued", "chatted"]}},
        {"name": "manner",
         "seeds": {"adv": ["very loudly", "quite openly", "rather cheerfully"],
                   "none": [""]}},
        {"name": "prep", "seeds": {"base": ["with"]}},
        {"name": "obj",
         "seeds": {"np": ["the countess", "the princess", "the widow"],
                   "none": [""]}},
        {"name": "postgap",
         "seeds": {"pp": ["on the balcony", "at the reception",
                          "near the fountain"], "none": [""]}},
        {"name": "end", "seeds": {"base": ["."]}},
    ]

    off = {"comma1": "none", "sub": "none", "isl_subj": "none",
           "isl_verb": "none", "isl_obj": "none", "isl_pp": "none",
           "comma2": "none", "subj_pp": "none", "rc_that": "none",
           "rc_verb": "none", "rc_obj": "none", "rc_pp": "none",
           "manner": "none", "obj": "none", "postgap": "none"}
    always = {"intro": "base", "wh": "base", "subj": "np", "verb": "base",
              "prep": "base", "end": "base"}

    def use(**overrides):
        sel = dict(off)
        sel.update(always)
        sel.update(overrides)
        return sel

    conditions = [
        {"label": {"CONDITION": "object"},
         "use": use(subj_pp="pp", manner="adv", postgap="pp")},
        {"label": {"CONDITION": "adjunct"},
         "use": use(comma1="on", sub="on", isl_subj="np", isl_verb="fin",
                    isl_pp="pp", comma2="on", obj="np")},
        {"label": {"CONDITION": "over-adjunct"},
         "use": use(comma1="on", sub="on", isl_verb="ger", isl_obj="np",
                    comma2="on", postgap="pp")},
        {"label": {"CONDITION": "cnp"},
         "use": use(rc_that="on", rc_verb="fin", rc_pp="pp", obj="np")},
        {"label": {"CONDITION": "over-cnp"},
         "use": use(rc_that="on", rc_verb="fin", rc_obj="np", manner="adv",
                    postgap="pp")},
    ]
    return {
        "name": "island_adjunct_cnp",
        "factors": [{"name": "CONDITION",
                     "levels": ["object", "adjunct", "over-adjunct", "cnp",
                                "over-cnp"]}],
        "regions": regions,
        "conditions": conditions,
        "metadata": {
            "design": "adjunct and complex-NP islands; gaps inside the island "
                      "in the island conditions, downstream of it in the "
                      "over-island conditions",
            "gap_regions": {"object": "obj", "adjunct": "isl_obj",
                            "over-adjunct": "obj", "cnp": "rc_obj",
                            "over-cnp": "obj"},
            "note": "island verb forms (finite vs gerund) are separate seed "
                    "sets and draw independently within an item",
            "punctuation": "final period included as its own token",
        },
    }


def main():
    (DATA / "suites").mkdir(parents=True, exist_ok=True)
    (DATA / "templates").mkdir(parents=True, exist_ok=True)
    outputs = {
        DATA / "suites" / "center_embedding.json": build_center_embedding(),
        DATA / "suites" / "filler_gap.json": build_filler_gap(),
        DATA / "suites" / "discharge.json": build_discharge(),
        DATA / "templates" / "island_adjunct_cnp.json": build_island_template(),
    }
    for path, doc in outputs.items():
        path.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n",
                        encoding="utf-8")
        print(f"wrote {path.relative_to(ROOT)}")

    # Self-check: everything we just wrote must parse and validate.
    for path in outputs:
        if path.parent.name == "suites":
            suite = load_suite(path)
            print(f"  ok: {suite.name}: {len(suite.items)} items x "
                  f"{len(suite.condition_labels())} conditions")
        else:
            template = load_template(path)
            print(f"  ok: {template.name}: {len(template.slots)} slots")


if __name__ == "__main__":
    main()
