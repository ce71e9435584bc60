"""Hand-built suite documents shared across test modules."""


def make_gap_suite_doc():
    """A 2x2 filler-gap suite with single-token measurement regions, so
    per-token oracle penalties translate 1:1 into region effects."""
    items = []
    bank = [("count", "insulted", "him"), ("duke", "praised", "her")]
    for i, (subj, verb, pron) in enumerate(bank, start=1):
        conds = []
        for filler, comp in (("-", "that"), ("+", "who")):
            for gap, obj in (("-", pron), ("+", "")):
                conds.append({
                    "label": {"FILLER": filler, "GAP": gap},
                    "regions": ["I know", comp, f"the {subj}", verb, obj,
                                "yesterday", "."],
                })
        items.append({"id": i, "conditions": conds})
    return {
        "name": "filler_gap_unit",
        "factors": [{"name": "FILLER", "levels": ["+", "-"]},
                    {"name": "GAP", "levels": ["+", "-"]}],
        "regions": ["intro", "comp", "subj", "verb", "obj", "postgap", "end"],
        "items": items,
    }


def make_order_suite_doc():
    """Single-factor ORDER suite (one item) for preset smoke tests."""
    return {
        "name": "order_unit",
        "factors": [{"name": "ORDER", "levels": ["match", "mismatch"]}],
        "regions": ["NP1", "comp", "NP2", "VP1", "VP2", "end"],
        "items": [{
            "id": 1,
            "conditions": [
                {"label": {"ORDER": "match"},
                 "regions": ["The diamond", "that", "the thief", "stole",
                             "glittered", "."]},
                {"label": {"ORDER": "mismatch"},
                 "regions": ["The diamond", "that", "the thief", "glittered",
                             "stole", "."]},
            ],
        }],
    }
