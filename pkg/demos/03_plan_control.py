"""
Steering a summary through its plan
===================================

A predicted plan is an editable object.  This script drops pairs the input
cannot answer, keeps one pair per sentence for shorter output, and turns a
hand-edited plan into the prompt that would be sent back to the generator.
The plans come from two worked examples: a Bulldog answer whose second
pair the user rewrites, and a Hinduism summary cut down by deleting most of
its plan.
"""

from qablueprint import (
    Blueprint,
    ControlConfig,
    Document,
    MockQaClient,
    QAPair,
    Summary,
    align_to_sentences,
    apply_plan_edit,
    drop_unanswerable,
    parse_e2e,
    truncate_q1,
)

document = Document.from_texts("bulldog", [
    "Old English Bulldogs refers to a breed of dog that once existed but is now extinct. "
    "The breed was bred for fighting in public arenas. At the end of the 19th century, "
    "the Old English Bulldog, the Toy Bulldog and the Bullenbeisser were considered extinct."
])

predicted = Blueprint((
    QAPair("What breed existed but is no longer extinct?", "Old English Bulldogs"),
    QAPair("Along with the Old English Bulldog and Toy Bulldog, what breed was considered "
           "extinct at the end of the 19th century?", "Bullenbeisser"),
    QAPair("Who first bred the Old English Bulldog?", "Spanish monks"),
))

###############################################################################
# +drop: ask each question against the input.  Here the reader finds the
# first two answers but nothing about monks, so the last pair goes.
reader = MockQaClient([
    {"question": predicted[0].question, "answer": "Old English Bulldogs"},
    {"question": predicted[1].question, "answer": "the Bullenbeisser"},
])
kept = drop_unanswerable(predicted, document, reader)
print("kept after +drop:", kept.answers)

###############################################################################
# +Q1: one pair per summary sentence.  Plans are first split by the sentence
# that holds each answer.
summary = Summary.from_text(
    "Old English Bulldogs refers to a breed of dog that once existed. "
    "At the end of the 19th century, the Bullenbeisser was considered extinct."
)
plan = Blueprint(kept.pairs + (QAPair("What once existed?", "a breed of dog"),))
per_sentence = align_to_sentences(plan, summary)
for sb in per_sentence:
    print(f"sentence {sb.sentence_index} before:", [p.answer for p in sb.pairs])
for sb in truncate_q1(per_sentence, ControlConfig(q1_selection="longest_answer")):
    print(f"sentence {sb.sentence_index} after: ", [p.answer for p in sb.pairs])

###############################################################################
# Editing: the user fixes the first question and swaps in a new second pair.
edited = [
    QAPair("What breed existed but is now extinct?", "Old English Bulldogs"),
    QAPair("What was the Old English Bulldog bred for?", "Fighting in public arenas"),
]
prompt = apply_plan_edit(document, edited, "e2e")
print("\ndecoder prefix:\n ", prompt.prefix)
assert [(p.question, p.answer) for p in parse_e2e(prompt.prefix + " ...").blueprint] == \
    [(p.question, p.answer) for p in edited]

###############################################################################
# Shortening: delete everything after the second pair.
hinduism = [
    QAPair("Hinduism is an Indian religion and what else?", "dharma"),
    QAPair("Hinduism is a way of what?", "life"),
    QAPair("Hinduism has been called what in the world?", "the oldest religion"),
    QAPair("When did the Vedic period end?", "500 BCE"),
]
short = apply_plan_edit(Document.from_texts("hinduism", ["..."]), hinduism[:2], "e2e")
print("\nshortened prefix:\n ", short.prefix)

###############################################################################
# The multitask and iterative variants get their own prompt shapes.
print("\nmultitask:", apply_plan_edit(document, edited, "multitask").prefix)
print("iterative:", apply_plan_edit(document, edited[1:], "iterative",
                                    context_sentences=["Old English Bulldogs are extinct."]).prefix)
