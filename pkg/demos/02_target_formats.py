"""
Three ways to put a plan in front of a summary
==============================================

The same annotated example serialized as one end-to-end target, as two
multitask targets (answer plan plus summary, answer plan plus questions),
and as one instance per summary sentence where each step sees the
sentences written so far.  Every decode is parsed back to check that
nothing is lost on the way.
"""

import json
from pathlib import Path

from qablueprint import (
    FormatConfig,
    PlanOrder,
    annotate_example,
    assemble_iterative,
    build_clients,
    parse_e2e,
    parse_iterative_step,
    parse_multitask,
    serialize_e2e,
    serialize_iterative,
    serialize_multitask,
)
from qablueprint.formats import escape_content, unescape_content
from qablueprint.records import CorpusRecord

data = json.loads((Path(__file__).parent / "data" / "shelby.json").read_text())
record = CorpusRecord.from_json(data["record"])
example = annotate_example(
    record.document(), record.summary_obj(), build_clients({}, data["fixtures"]),
    override_propositions=record.override_propositions(),
)

###############################################################################
# End to end: plan then summary in one decoder pass.
e2e = serialize_e2e(example)
print(e2e.target_text, "\n")
print("parsed back:", parse_e2e(e2e.target_text).blueprint.answers)

###############################################################################
# Multitask: the summary task only carries answers; the question task pairs
# the same answers with their questions.
summary_task, question_task = serialize_multitask(example)
print("\n" + summary_task.target_text)
print(question_task.target_text)
parsed = parse_multitask(summary_task.target_text, question_task.target_text)
print("flags:", parsed.flags or "none")

###############################################################################
# Iterative: one step per sentence plus an end marker.  The "Context:" prefix
# is teacher-forced, so ``loss_mask_prefix_len`` marks where the loss starts.
steps = serialize_iterative(example)
for inst in steps:
    masked = inst.target_text[:inst.loss_mask_prefix_len]
    print(f"\nstep {inst.step_index}: masked {len(masked)} chars")
    print("  " + inst.target_text[inst.loss_mask_prefix_len:])
assembled = assemble_iterative([parse_iterative_step(s.target_text) for s in steps])
print("\nreassembled summary matches:", assembled.summary == example.summary.text)

###############################################################################
# Question-first plans are a config switch away.
qa_first = FormatConfig(plan_order=PlanOrder.QUESTION_ANSWER)
print("\n" + serialize_e2e(example, qa_first).target_text[:120] + " ...")

###############################################################################
# Content that looks like a marker is escaped rather than confusing the parser.
tricky = "Plan: Summary: [END]"
cfg = FormatConfig()
print("\nescaped:", escape_content(tricky, cfg), "->", unescape_content(escape_content(tricky, cfg), cfg))
