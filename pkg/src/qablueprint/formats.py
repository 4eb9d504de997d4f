"""Serialization and parsing of the three blueprint target layouts.

E2E         target  ``Plan: a1; q1; ...; am; qm Summary: s``
Multitask   targets ``Plan: a1; ...; am Summary: s`` (input prefixed
            ``Generate Summary:``) and ``Plan: a1; ...; am Questions: q1; ...; qm``
            (input prefixed ``Generate Questions:``)
Iterative   one target per sentence,
            ``Context: s1 ... si Plan: b(i+1) Next Sentence: s(i+1)``, plus a
            terminator whose plan and sentence are the end tokens.  The
            ``Context: ... `` prefix is excluded from the loss.

Content that happens to contain a marker is escaped by doubling the
marker's final character (``Summary:`` -> ``Summary::``, ``[END]`` ->
``[END]]``); inside plan fields the separator character is doubled too
(``;`` -> ``;;``).  Parsing reverses both.
"""

from __future__ import annotations

import enum
import functools
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .core import AnnotatedExample, Blueprint, QAPair, SentenceBlueprint


class PlanOrder(str, enum.Enum):
    ANSWER_QUESTION = "answer_question"
    QUESTION_ANSWER = "question_answer"


class Variant(str, enum.Enum):
    E2E = "e2e"
    MULTITASK_SUMMARY = "multitask_summary"
    MULTITASK_QUESTIONS = "multitask_questions"
    ITERATIVE = "iterative"


class FormatError(ValueError):
    """A decode does not follow the expected layout."""

    code = "format_error"


class MissingMarkerError(FormatError):
    code = "missing_marker"

    def __init__(self, marker: str):
        super().__init__(f"missing marker {marker!r}")
        self.marker = marker


class OddFieldCountError(FormatError):
    code = "odd_field_count"


@dataclass(frozen=True)
class FormatConfig:
    plan_marker: str = "Plan:"
    summary_marker: str = "Summary:"
    questions_marker: str = "Questions:"
    context_marker: str = "Context:"
    next_sentence_marker: str = "Next Sentence:"
    gen_summary_prefix: str = "Generate Summary:"
    gen_questions_prefix: str = "Generate Questions:"
    pair_separator: str = "; "
    end_plan_token: str = "[END_PLAN]"
    end_sentence_token: str = "[END]"
    plan_order: PlanOrder = PlanOrder.ANSWER_QUESTION

    def __post_init__(self):
        object.__setattr__(self, "plan_order", PlanOrder(self.plan_order))
        markers = self.target_markers
        if len(set(markers)) != len(markers):
            raise ValueError("target markers must be pairwise distinct")
        for a in markers:
            for b in markers:
                if a != b and a[:-1] in b:
                    raise ValueError(f"marker {a!r} is contained in marker {b!r}")
        if len(self.pair_separator) < 2 or not self.pair_separator[1:].isspace():
            raise ValueError("pair_separator must be one character followed by whitespace")
        if self.end_plan_token == self.end_sentence_token:
            raise ValueError("end tokens must differ")

    @property
    def target_markers(self) -> tuple[str, ...]:
        return (
            self.plan_marker,
            self.summary_marker,
            self.questions_marker,
            self.context_marker,
            self.next_sentence_marker,
        )


@dataclass(frozen=True)
class TargetInstance:
    input_text: str
    target_text: str
    variant: Variant
    loss_mask_prefix_len: int = 0
    step_index: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0 <= self.loss_mask_prefix_len <= len(self.target_text):
            raise ValueError("loss_mask_prefix_len outside the target")

    def to_json(self, example_id: str) -> dict:
        return {
            "example_id": example_id,
            "variant": self.variant.value,
            "step_index": self.step_index,
            "input": self.input_text,
            "target": self.target_text,
            "loss_mask_prefix_len": self.loss_mask_prefix_len,
        }


@dataclass
class ParsedOutput:
    blueprint: Blueprint
    summary: str
    flags: list[str] = field(default_factory=list)


@dataclass
class ParsedStep:
    pairs: list[QAPair]
    sentence: str
    is_end: bool
    flags: list[str] = field(default_factory=list)


# -- Escaping ---------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _escape_pattern(config: FormatConfig, min_repeat: int) -> re.Pattern:
    # "<token minus last char>" followed by a run of its last char
    tokens = set(config.target_markers) | {config.end_plan_token, config.end_sentence_token}
    alts = []
    for tok in sorted(tokens, key=lambda t: (-len(t), t)):
        head, tail = re.escape(tok[:-1]), re.escape(tok[-1])
        alts.append(f"{head}{tail}{{{min_repeat},}}")
    return re.compile("|".join(alts))


def escape_content(text: str, config: FormatConfig) -> str:
    """Double the last character of every embedded marker or end token."""
    return _escape_pattern(config, 1).sub(lambda m: m.group() + m.group()[-1], text)


def unescape_content(text: str, config: FormatConfig) -> str:
    return _escape_pattern(config, 2).sub(lambda m: m.group()[:-1], text)


def _find_marker(text: str, marker: str, start: int = 0) -> int:
    """First occurrence of ``marker`` not followed by its escape character."""
    pos = text.find(marker, start)
    while pos != -1:
        after = pos + len(marker)
        if after >= len(text) or text[after] != marker[-1]:
            return pos
        pos = text.find(marker, pos + 1)
    return -1


def _rfind_marker(text: str, marker: str) -> int:
    last, pos = -1, _find_marker(text, marker)
    while pos != -1:
        last = pos
        pos = _find_marker(text, marker, pos + 1)
    return last


def _join_fields(fields: Sequence[str], config: FormatConfig) -> str:
    sep_char = config.pair_separator[0]
    escaped = [escape_content(f, config).replace(sep_char, sep_char * 2) for f in fields]
    return config.pair_separator.join(escaped)


def _split_fields(body: str, config: FormatConfig) -> list[str]:
    if not body:
        return []
    sep_char = config.pair_separator[0]
    fields, current, i = [], [], 0
    while i < len(body):
        if body[i] != sep_char:
            current.append(body[i])
            i += 1
            continue
        j = i
        while j < len(body) and body[j] == sep_char:
            j += 1
        run = j - i
        # an odd run ends with a separator character
        if run % 2 and (j == len(body) or body[j].isspace()):
            current.append(sep_char * (run - 1))
            fields.append("".join(current))
            current = []
            i = j + 1 if j < len(body) else j
            if j == len(body):
                fields.append("")
        else:
            current.append(body[i:j])
            i = j
    if current or not fields:
        fields.append("".join(current))
    return [
        unescape_content(f.strip().replace(sep_char * 2, sep_char), config) for f in fields
    ]


def _compose(*parts: str) -> str:
    return " ".join(p for p in parts if p)


def _plan_fields(pairs: Iterable[QAPair], config: FormatConfig) -> list[str]:
    fields = []
    for pair in pairs:
        if config.plan_order is PlanOrder.ANSWER_QUESTION:
            fields.extend((pair.answer, pair.question))
        else:
            fields.extend((pair.question, pair.answer))
    return fields


def format_plan(pairs: Iterable[QAPair], config: FormatConfig | None = None) -> str:
    config = config or FormatConfig()
    return _join_fields(_plan_fields(pairs, config), config)


def format_answer_plan(pairs: Iterable[QAPair], config: FormatConfig | None = None) -> str:
    config = config or FormatConfig()
    return _join_fields([p.answer for p in pairs], config)


def _pairs_from_fields(fields: list[str], config: FormatConfig, strict: bool, flags: list[str]) -> list[QAPair]:
    if len(fields) % 2:
        if strict:
            raise OddFieldCountError(f"plan has an odd number of fields ({len(fields)})")
        flags.append("odd_field_count")
        fields = fields + [""]
    pairs = []
    for first, second in zip(fields[::2], fields[1::2]):
        if config.plan_order is PlanOrder.ANSWER_QUESTION:
            pairs.append(QAPair(question=second, answer=first))
        else:
            pairs.append(QAPair(question=first, answer=second))
    return pairs


def _segment(text: str, start_marker: str, end_marker: Optional[str], start: int = 0) -> tuple[str, str, int]:
    """(body between markers, rest after end marker, end offset)."""
    lo = _find_marker(text, start_marker, start)
    if lo == -1:
        raise MissingMarkerError(start_marker)
    body_start = lo + len(start_marker)
    if end_marker is None:
        return text[body_start:].strip(), "", len(text)
    hi = _find_marker(text, end_marker, body_start)
    if hi == -1:
        raise MissingMarkerError(end_marker)
    rest_start = hi + len(end_marker)
    return text[body_start:hi].strip(), text[rest_start:].strip(), rest_start


# -- E2E --------------------------------------------------------------------


def serialize_e2e(example: AnnotatedExample, config: FormatConfig | None = None) -> TargetInstance:
    config = config or FormatConfig()
    target = _compose(
        config.plan_marker,
        format_plan(example.blueprint, config),
        config.summary_marker,
        escape_content(example.summary.text, config),
    )
    return TargetInstance(example.document.input_text, target, Variant.E2E)


def parse_e2e(text: str, config: FormatConfig | None = None, strict: bool = False) -> ParsedOutput:
    """Recover (blueprint, summary) from an E2E decode.

    Raises :class:`MissingMarkerError` when either marker is absent.  An odd
    number of plan fields raises in strict mode; otherwise the last pair
    gets an empty partner and the result is flagged.
    """
    config = config or FormatConfig()
    body, summary, _ = _segment(text, config.plan_marker, config.summary_marker)
    flags: list[str] = []
    pairs = _pairs_from_fields(_split_fields(body, config), config, strict, flags)
    return ParsedOutput(Blueprint(tuple(pairs)), unescape_content(summary, config), flags)


# -- Multitask --------------------------------------------------------------


def serialize_multitask(
    example: AnnotatedExample, config: FormatConfig | None = None
) -> tuple[TargetInstance, TargetInstance]:
    config = config or FormatConfig()
    answers = format_answer_plan(example.blueprint, config)
    doc = example.document.input_text
    summary_task = TargetInstance(
        _compose(config.gen_summary_prefix, doc),
        _compose(
            config.plan_marker, answers, config.summary_marker,
            escape_content(example.summary.text, config),
        ),
        Variant.MULTITASK_SUMMARY,
    )
    questions_task = TargetInstance(
        _compose(config.gen_questions_prefix, doc),
        _compose(
            config.plan_marker, answers, config.questions_marker,
            _join_fields(example.blueprint.questions, config),
        ),
        Variant.MULTITASK_QUESTIONS,
    )
    return summary_task, questions_task


def parse_multitask(
    summary_decode: str, questions_decode: str, config: FormatConfig | None = None
) -> ParsedOutput:
    """Zip the answer plan of the summary decode with the questions decode.

    When the counts differ the shorter prefix is paired and the result is
    flagged; a blank questions decode yields answer-only pairs.
    """
    config = config or FormatConfig()
    body, summary, _ = _segment(summary_decode, config.plan_marker, config.summary_marker)
    answers = _split_fields(body, config)
    flags: list[str] = []
    if questions_decode.strip():
        q_body, _, _ = _segment(questions_decode, config.questions_marker, None)
        questions = _split_fields(q_body, config)
    else:
        questions = []
    if answers and not questions:
        flags.append("answers_only")
        pairs = [QAPair("", a) for a in answers]
    else:
        if len(answers) != len(questions):
            flags.append("length_mismatch")
            flags.append(f"unpaired:{abs(len(answers) - len(questions))}")
        pairs = [QAPair(q, a) for a, q in zip(answers, questions)]
    return ParsedOutput(Blueprint(tuple(pairs)), unescape_content(summary, config), flags)


# -- Iterative --------------------------------------------------------------


def _sentence_blueprints(example: AnnotatedExample) -> Sequence[SentenceBlueprint]:
    if example.sentence_blueprints:
        return example.sentence_blueprints
    from .annotate import align_to_sentences

    return align_to_sentences(example.blueprint, example.summary)


def iterative_target(
    context_sentences: Sequence[str],
    plan: str,
    sentence: str,
    config: FormatConfig,
) -> tuple[str, int]:
    """Target text and loss-mask length for one iterative step.

    ``plan`` and ``sentence`` are inserted verbatim (already escaped).
    """
    context = " ".join(escape_content(s, config) for s in context_sentences)
    prefix = _compose(config.context_marker, context) + " "
    return prefix + _compose(config.plan_marker, plan, config.next_sentence_marker, sentence), len(prefix)


def serialize_iterative(example: AnnotatedExample, config: FormatConfig | None = None) -> list[TargetInstance]:
    """n + 1 step instances: one per sentence and a terminator."""
    config = config or FormatConfig()
    sentences = example.summary.sentence_texts()
    by_index = {sb.sentence_index: sb.pairs for sb in _sentence_blueprints(example)}
    doc = example.document.input_text
    instances = []
    for i, sentence in enumerate(sentences):
        target, masked = iterative_target(
            sentences[:i], format_plan(by_index.get(i, ()), config), escape_content(sentence, config), config
        )
        instances.append(TargetInstance(doc, target, Variant.ITERATIVE, masked, i))
    target, masked = iterative_target(
        sentences, config.end_plan_token, config.end_sentence_token, config
    )
    instances.append(TargetInstance(doc, target, Variant.ITERATIVE, masked, len(sentences)))
    return instances


def parse_iterative_step(decode: str, config: FormatConfig | None = None, strict: bool = False) -> ParsedStep:
    """Plan and sentence of one iterative decode.

    Everything up to the last ``Context:`` block is skipped; the decode may
    also start directly at ``Plan:``.
    """
    config = config or FormatConfig()
    start = max(_rfind_marker(decode, config.context_marker), 0)
    body, sentence, _ = _segment(decode, config.plan_marker, config.next_sentence_marker, start)
    if body == config.end_plan_token or sentence == config.end_sentence_token:
        return ParsedStep([], "", True)
    flags: list[str] = []
    pairs = _pairs_from_fields(_split_fields(body, config), config, strict, flags)
    if not sentence:
        flags.append("empty_sentence")
    return ParsedStep(pairs, unescape_content(sentence, config), False, flags)


def assemble_iterative(steps: Sequence[ParsedStep]) -> ParsedOutput:
    """Concatenate step plans and sentences up to the first end step."""
    pairs: list[QAPair] = []
    sentences: list[str] = []
    flags: list[str] = []
    ended = False
    for step in steps:
        if step.is_end:
            ended = True
            break
        pairs.extend(step.pairs)
        if step.sentence:
            sentences.append(step.sentence)
        flags.extend(step.flags)
    if not ended:
        flags.append("missing_end")
    return ParsedOutput(Blueprint(tuple(pairs)), " ".join(sentences), flags)
