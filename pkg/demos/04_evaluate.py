"""
Scoring a summary with questions and entailment
===============================================

Informativeness asks the reference plan's questions of the generated
summary.  Grounding asks the summary's own plan's questions.  Faithfulness
checks every summary sentence against the input.  Summary-level Rouge-L
compares both the text and the plan with the reference.

The QA and NLI models are mocks whose answers are spelled out below, so
every number can be checked by hand.
"""

import json
from pathlib import Path

from qablueprint import (
    Blueprint,
    MockNliClient,
    MockQaClient,
    QAPair,
    evaluate_example,
    novel_ngrams,
    rouge_lsum,
    token_f1,
)
from qablueprint.metrics import aggregate_reports
from qablueprint.records import CorpusRecord

data = json.loads((Path(__file__).parent / "data" / "shelby.json").read_text())
record = CorpusRecord.from_json(data["record"])
document = record.document()

reference_plan = Blueprint((
    QAPair("Who built the Shelby Mustang from 1969 to 1970?", "Ford"),
    QAPair("During what years was the Shelby Mustang built by Shelby American?", "1965 to 1968"),
))

###############################################################################
# Token F1 is the SQuAD measure: articles and punctuation drop out.
print("F1('1965 to 1968', '1968') =", token_f1("1965 to 1968", "1968"))
print("F1('the Ford Mustang', 'Ford Mustang') =", token_f1("the Ford Mustang", "Ford Mustang"))

###############################################################################
# A prediction that gets the years half right.
predicted = "The Shelby Mustang was built by Shelby American until 1968 and later by Ford."
qa = MockQaClient([
    {"question": reference_plan[0].question, "answer": "Ford"},
    {"question": reference_plan[1].question, "answer": "1968"},
    {"question": "Who built it later?", "answer": "Ford"},
])
own_plan = Blueprint((QAPair("Who built it later?", "Ford"),))
nli = MockNliClient([{"hypothesis": predicted, "entail_prob": 0.81}])
report = evaluate_example(
    "shelby", document, predicted, record.summary, reference_plan, own_plan, qa, nli,
)
for q in report.per_question:
    print(f"  {q.question!r}: {q.predicted_answer!r} vs {q.gold_answer!r} -> F1 {q.f1:.2f}")
print("informativeness:", report.informativeness)  # (1.0 + 0.5) / 2
print("grounding:", report.grounding)
print("faithfulness:", report.faithfulness, report.faithfulness_labels)
print("rouge-lsum:", round(report.rouge_lsum_summary, 4))

###############################################################################
# An empty prediction answers nothing and has no sentences to check.
empty = evaluate_example("empty", document, "", record.summary, reference_plan, None, qa, nli)
print("\nempty prediction flags:", empty.flags)
print(json.dumps(aggregate_reports([report, empty]), indent=1))

###############################################################################
# Rouge-L over sentence lines: each reference line picks up the union of its
# longest common subsequences with every candidate line.
print("\nrouge_lsum('a b c\\nd', 'a b\\nc d') =", rouge_lsum("a b c\nd", "a b\nc d"))

###############################################################################
# Abstractiveness: how many summary n-grams never occur in the input.
for n in range(1, 5):
    print(f"novel {n}-grams: {novel_ngrams(document.source_text, record.summary, n):.3f}")
