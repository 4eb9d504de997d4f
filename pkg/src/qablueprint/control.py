"""Plan-level control: drop unanswerable pairs, keep one pair per sentence, user edits."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Sequence

from .clients import QaRequest, answer_many
from .core import Blueprint, Document, QAPair, SentenceBlueprint, normalize_answer
from .formats import (
    FormatConfig,
    Variant,
    format_answer_plan,
    format_plan,
    iterative_target,
)
from .metrics import token_f1

logger = logging.getLogger(__name__)


class Q1Selection(str, enum.Enum):
    FIRST_IN_PLAN_ORDER = "first_in_plan_order"
    LONGEST_ANSWER = "longest_answer"


class UnsupportedVariantError(ValueError):
    pass


@dataclass(frozen=True)
class ControlConfig:
    drop_threshold: float = 0.5
    q1_selection: Q1Selection = Q1Selection.FIRST_IN_PLAN_ORDER

    def __post_init__(self):
        object.__setattr__(self, "q1_selection", Q1Selection(self.q1_selection))
        if not 0.0 <= self.drop_threshold <= 1.0:
            raise ValueError("drop_threshold must lie in [0, 1]")


def _answer_in_input(answer: str, source: str) -> bool:
    needle = normalize_answer(answer)
    hay = normalize_answer(source)
    if not needle:
        return False
    return any(hay[i:i + len(needle)] == needle for i in range(len(hay) - len(needle) + 1))


def drop_unanswerable(
    blueprint: Blueprint, document: Document, qa_client, config: ControlConfig | None = None
) -> Blueprint:
    """Remove pairs the input cannot answer.

    Each question is answered against the concatenated sources; the pair
    survives when the reader finds an answer whose token F1 with the
    planned answer reaches ``drop_threshold``.  Answer-only pairs (empty
    question) survive when their normalized answer occurs in the input.
    """
    config = config or ControlConfig()
    context = document.source_text
    asked = [i for i, p in enumerate(blueprint) if p.question.strip()]
    responses = dict(
        zip(asked, answer_many([QaRequest(blueprint[i].question, context) for i in asked], qa_client))
    )
    kept = []
    for i, pair in enumerate(blueprint):
        if i in responses:
            resp = responses[i]
            if not resp.no_answer and token_f1(resp.answer, pair.answer) >= config.drop_threshold:
                kept.append(pair)
        else:
            logger.warning("pair %r has no question; checking its answer against the input", pair.answer)
            if _answer_in_input(pair.answer, context):
                kept.append(pair)
    return Blueprint(tuple(kept))


def truncate_q1(
    sentence_blueprints: Sequence[SentenceBlueprint], config: ControlConfig | None = None
) -> list[SentenceBlueprint]:
    """Reduce every non-empty sentence plan to a single pair."""
    config = config or ControlConfig()
    out = []
    for sb in sentence_blueprints:
        if not sb.pairs:
            out.append(sb)
            continue
        if config.q1_selection is Q1Selection.LONGEST_ANSWER:
            # max() keeps the first of equally long answers
            chosen = max(sb.pairs, key=lambda p: len(p.answer))
        else:
            chosen = sb.pairs[0]
        out.append(SentenceBlueprint(sb.sentence_index, (chosen,)))
    return out


@dataclass(frozen=True)
class Prompt:
    """Encoder input plus the decoder prefix that forces a plan."""

    input_text: str
    prefix: str


def apply_plan_edit(
    document: Document,
    edited: Blueprint | Sequence[QAPair],
    variant: Variant | str,
    config: FormatConfig | None = None,
    context_sentences: Sequence[str] = (),
) -> Prompt:
    """Build the regeneration prompt for an edited plan.

    For the iterative variant ``edited`` is the plan of the next sentence
    and ``context_sentences`` the sentences produced so far.
    """
    config = config or FormatConfig()
    pairs = tuple(edited)
    if variant == "multitask":
        variant = Variant.MULTITASK_SUMMARY
    try:
        variant = Variant(variant)
    except ValueError:
        raise UnsupportedVariantError(f"unsupported variant {variant!r}") from None
    doc = document.input_text
    if variant is Variant.E2E:
        prefix = " ".join(p for p in (config.plan_marker, format_plan(pairs, config), config.summary_marker) if p)
        return Prompt(doc, prefix)
    if variant is Variant.MULTITASK_SUMMARY:
        prefix = " ".join(
            p for p in (config.plan_marker, format_answer_plan(pairs, config), config.summary_marker) if p
        )
        return Prompt(f"{config.gen_summary_prefix} {doc}", prefix)
    if variant is Variant.MULTITASK_QUESTIONS:
        prefix = " ".join(
            p for p in (config.plan_marker, format_answer_plan(pairs, config), config.questions_marker) if p
        )
        return Prompt(f"{config.gen_questions_prefix} {doc}", prefix)
    target, _ = iterative_target(context_sentences, format_plan(pairs, config), "", config)
    return Prompt(doc, target)
