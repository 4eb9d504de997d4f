"""
From a summary to a question-answer blueprint
=============================================

Walks the Shelby Mustang summary through every annotation stage: answer
candidates, one question per candidate, the round-trip check, one pair per
proposition, greedy lexical coverage and finally ordering by position in
the summary.  The learned models are replaced by the fixture-driven mocks in
``data/shelby.json``.
"""

import json
from pathlib import Path

from qablueprint import (
    annotate_example,
    build_clients,
    coverage_select,
    extract_candidates,
    overgenerate,
    rheme_select,
    roundtrip_filter,
    sort_blueprint,
    split_summary,
)
from qablueprint.records import CorpusRecord

data = json.loads((Path(__file__).parent / "data" / "shelby.json").read_text())
record = CorpusRecord.from_json(data["record"])
summary = record.summary_obj()
clients = build_clients({}, data["fixtures"])


def show(title, pairs):
    print(f"\n{title} ({len(pairs)})")
    for p in pairs:
        print(f"  {p.answer!r:40} {p.question}")


###############################################################################
# Candidates and overgeneration: every candidate answer gets a question.
cands = extract_candidates(summary, clients.candidates)
pairs = overgenerate(summary, cands, clients.qg)
show("overgenerated", pairs)

###############################################################################
# Round trip: answer each question against the summary and keep the pair when
# the reader agrees with the planned answer.  Two pairs fail here.
pairs = roundtrip_filter(pairs, summary, clients.qa)
show("after round trip", pairs)

###############################################################################
# Rheme: within each proposition keep the pair whose answer ends last.
propositions = record.override_propositions()
for prop in propositions:
    print("  proposition:", prop.text)
pairs = rheme_select(pairs, propositions, summary.text)
show("after rheme", pairs)

###############################################################################
# Coverage: greedily keep pairs that still add unseen summary words.
pairs = coverage_select(pairs, summary)
blueprint = sort_blueprint(pairs, summary)
show("blueprint", blueprint)

###############################################################################
# The propositions above are supplied with the record.  Without them the
# rule-based splitter cuts the summary itself.  Its boundaries differ, yet
# for this summary the four-pair plan comes out unchanged.
auto = split_summary(summary)
for prop in auto:
    print("  auto proposition:", prop.text)
example = annotate_example(record.document(), summary, clients)
show("blueprint with automatic propositions", example.blueprint)
