"""Blueprint annotation: overgenerate QA pairs for a summary, then filter.

The chain is candidates -> question generation -> round-trip consistency
-> Rheme (one pair per proposition, rightmost answer) -> Coverage (greedy
lexical coverage of the summary) -> ordering by answer position.
"""

from __future__ import annotations

import enum
import logging
import random
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .candidates import AnswerCandidate, extract_candidates
from .clients import ClientError, Clients, answer_many, QaRequest, generate_question, map_ordered
from .core import (
    AnnotatedExample,
    Blueprint,
    CharSpan,
    Document,
    Proposition,
    QAPair,
    SentenceBlueprint,
    Summary,
    find_token_occurrence,
    normalize_answer,
    tokenize,
)
from .metrics import token_f1
from .propsplit import SplitConfig, split_summary

logger = logging.getLogger(__name__)


class RoundtripMode(str, enum.Enum):
    NORMALIZED_EXACT = "normalized_exact"
    F1_THRESHOLD = "f1_threshold"


class CoverageUnit(str, enum.Enum):
    QUESTION_PLUS_ANSWER = "question_plus_answer_tokens"
    ANSWER_ONLY = "answer_tokens_only"


class CoverageScore(str, enum.Enum):
    # share of the pair's answer tokens still present in the residual bag
    ANSWER_NOVELTY = "answer_novelty"
    # raw count of coverage-unit tokens still present in the residual bag
    PAIR_OVERLAP = "pair_overlap"


class CoverageBag(str, enum.Enum):
    TYPES = "types"
    TOKENS = "tokens"


class SortMode(str, enum.Enum):
    FIRST_OCCURRENCE = "first_occurrence"
    ANSWER_SPAN = "answer_span"
    RANDOM = "random"


@dataclass(frozen=True)
class AnnotateConfig:
    roundtrip_mode: RoundtripMode = RoundtripMode.F1_THRESHOLD
    roundtrip_threshold: float = 0.5
    coverage_unit: CoverageUnit = CoverageUnit.QUESTION_PLUS_ANSWER
    coverage_score: CoverageScore = CoverageScore.ANSWER_NOVELTY
    coverage_bag: CoverageBag = CoverageBag.TYPES
    sort_mode: SortMode = SortMode.FIRST_OCCURRENCE
    seed: int = 0
    enable_rheme: bool = True
    enable_coverage: bool = True

    def __post_init__(self):
        for name, kind in (
            ("roundtrip_mode", RoundtripMode),
            ("coverage_unit", CoverageUnit),
            ("coverage_score", CoverageScore),
            ("coverage_bag", CoverageBag),
            ("sort_mode", SortMode),
        ):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if not 0.0 < self.roundtrip_threshold <= 1.0:
            raise ValueError("roundtrip_threshold must lie in (0, 1]")


def overgenerate(summary: Summary, cands: Sequence[AnswerCandidate], qg_client) -> list[QAPair]:
    """One question per candidate; candidates whose QG call fails are dropped."""
    for cand in cands:
        cand.span.check_within(summary.text)

    def ask(cand: AnswerCandidate) -> Optional[QAPair]:
        try:
            question = generate_question(cand.text, summary.text, qg_client)
        except ClientError as exc:
            logger.warning("dropping candidate %r: question generation failed (%s)", cand.text, exc)
            return None
        return QAPair(question, cand.text, cand.span)

    results = map_ordered(ask, cands, getattr(qg_client, "max_in_flight", 1))
    return [pair for pair in results if pair is not None]


def answers_match(predicted: str, gold: str, config: AnnotateConfig) -> bool:
    if config.roundtrip_mode is RoundtripMode.NORMALIZED_EXACT:
        return normalize_answer(predicted) == normalize_answer(gold)
    return token_f1(predicted, gold) >= config.roundtrip_threshold


def roundtrip_filter(
    pairs: Sequence[QAPair], summary: Summary, qa_client, config: AnnotateConfig | None = None
) -> list[QAPair]:
    """Keep pairs whose question, answered against the summary, yields their answer.

    Client errors propagate: a partially checked batch is never returned.
    """
    config = config or AnnotateConfig()
    responses = answer_many([QaRequest(p.question, summary.text) for p in pairs], qa_client)
    return [
        pair
        for pair, resp in zip(pairs, responses)
        if not resp.no_answer and answers_match(resp.answer, pair.answer, config)
    ]


def _resolve_span(pair: QAPair, text: str) -> Optional[CharSpan]:
    if pair.answer_span is not None:
        return pair.answer_span
    pos = find_token_occurrence(text, pair.answer)
    return CharSpan(pos, pos + len(pair.answer)) if pos >= 0 and pair.answer else None


def rheme_select(
    pairs: Sequence[QAPair], propositions: Sequence[Proposition], text: str = ""
) -> list[QAPair]:
    """Per proposition, keep the pair whose answer ends rightmost.

    Ties go to the longest answer, then to the earliest pair.  Pairs whose
    answer does not fit inside a single proposition are dropped.  ``text``
    is only needed for pairs that lack an ``answer_span``.
    """
    spans = [_resolve_span(p, text) for p in pairs]
    selected = []
    for prop in propositions:
        inside = [
            i for i, span in enumerate(spans) if span is not None and prop.extent.contains(span)
        ]
        if inside:
            best = max(inside, key=lambda i: (spans[i].end, len(pairs[i].answer), -i))
            selected.append(pairs[best])
    return selected


def coverage_select(
    pairs: Sequence[QAPair], summary: Summary, config: AnnotateConfig | None = None
) -> list[QAPair]:
    """Greedy lexical coverage of the summary's token bag.

    Repeatedly pick the best-scoring pair, remove its tokens from the bag,
    and stop once the bag is empty or nothing overlaps it any more.
    Picked pairs are returned in input order.
    """
    config = config or AnnotateConfig()
    as_types = config.coverage_bag is CoverageBag.TYPES

    def bag(text: str) -> Counter:
        counts = Counter(tokenize(text))
        return Counter(set(counts)) if as_types else counts

    residual = bag(summary.text)
    answer_bags = [bag(p.answer) for p in pairs]
    if config.coverage_unit is CoverageUnit.QUESTION_PLUS_ANSWER:
        unit_bags = [bag(f"{p.question} {p.answer}") for p in pairs]
    else:
        unit_bags = answer_bags
    starts = [p.answer_span.start if p.answer_span else len(summary.text) for p in pairs]

    def score(i: int) -> float:
        if config.coverage_score is CoverageScore.ANSWER_NOVELTY:
            total = sum(answer_bags[i].values())
            return sum((answer_bags[i] & residual).values()) / total if total else 0.0
        return float(sum((unit_bags[i] & residual).values()))

    def rank(i: int):
        if config.coverage_score is CoverageScore.ANSWER_NOVELTY:
            return (score(i), sum(answer_bags[i].values()), len(pairs[i].answer), -starts[i], -i)
        return (score(i), -starts[i], -i)

    remaining = list(range(len(pairs)))
    picked = []
    while remaining and residual:
        best = max(remaining, key=rank)
        if score(best) <= 0:
            break
        picked.append(best)
        remaining.remove(best)
        residual = residual - unit_bags[best]
    return [pairs[i] for i in sorted(picked)]


def _first_occurrence_key(pair: QAPair, text: str) -> int:
    pos = find_token_occurrence(text, pair.answer)
    if pos >= 0:
        return pos
    if pair.answer_span is not None:
        return pair.answer_span.start
    return len(text)


def sort_blueprint(
    pairs: Sequence[QAPair],
    summary: Summary,
    config: AnnotateConfig | None = None,
    rng_key: str = "",
) -> Blueprint:
    """Order pairs by where their answers appear in the summary.

    ``first_occurrence`` keys each pair on the first whole-token occurrence
    of its answer string, ``answer_span`` on the originating span, and
    ``random`` shuffles with a generator seeded from ``config.seed`` and
    ``rng_key``.
    """
    config = config or AnnotateConfig()
    text = summary.text
    if config.sort_mode is SortMode.ANSWER_SPAN:
        keys = [
            p.answer_span.start if p.answer_span else _first_occurrence_key(p, text) for p in pairs
        ]
    else:
        keys = [_first_occurrence_key(p, text) for p in pairs]
    keyed = [
        QAPair(p.question, p.answer, p.answer_span, key) for p, key in zip(pairs, keys)
    ]
    if config.sort_mode is SortMode.RANDOM:
        random.Random(f"{config.seed}:{rng_key}").shuffle(keyed)
    else:
        keyed.sort(key=lambda p: p.sort_key)
    return Blueprint(tuple(keyed))


def align_to_sentences(blueprint: Blueprint, summary: Summary) -> list[SentenceBlueprint]:
    """Assign each pair to the sentence holding its answer.

    The answer span start decides; without a span, the first occurrence of
    the answer string (case-sensitive, then case-insensitive).  A pair that
    cannot be located stays with the previous pair's sentence.
    """
    text = summary.text
    buckets: list[list[QAPair]] = [[] for _ in summary.sentences]
    last = 0
    for pair in blueprint:
        index = None
        if pair.answer_span is not None:
            index = summary.sentence_index_at(pair.answer_span.start)
        if index is None:
            pos = find_token_occurrence(text, pair.answer)
            if pos < 0 and pair.answer:
                pos = text.lower().find(pair.answer.lower())
            if pos >= 0:
                index = summary.sentence_index_at(pos)
        if index is None:
            index = last
        buckets[index].append(pair)
        last = index
    return [SentenceBlueprint(i, tuple(pairs)) for i, pairs in enumerate(buckets)]


def annotate_example(
    document: Document,
    summary: Summary,
    clients: Clients,
    split_config: SplitConfig | None = None,
    annotate_config: AnnotateConfig | None = None,
    override_propositions: Optional[Sequence[Proposition]] = None,
) -> AnnotatedExample:
    """Run the full annotation chain for one (document, summary) pair."""
    config = annotate_config or AnnotateConfig()
    if override_propositions is not None:
        propositions = list(override_propositions)
    else:
        propositions = split_summary(summary, split_config)

    cands = extract_candidates(summary, clients.candidates)
    pairs = overgenerate(summary, cands, clients.qg)
    pairs = roundtrip_filter(pairs, summary, clients.qa, config)
    if config.enable_rheme:
        pairs = rheme_select(pairs, propositions, summary.text)
    if config.enable_coverage:
        pairs = coverage_select(pairs, summary, config)
    blueprint = sort_blueprint(pairs, summary, config, rng_key=document.id)
    return AnnotatedExample(
        document=document,
        summary=summary,
        blueprint=blueprint,
        sentence_blueprints=tuple(align_to_sentences(blueprint, summary)),
        propositions=tuple(propositions),
    )
