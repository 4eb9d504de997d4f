"""Evaluation metrics: QA-F1, entailment faithfulness, RougeLSum, corpus statistics."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from statistics import mean
from typing import Optional, Sequence

from .clients import NliRequest, QaRequest, answer_many, entail_many
from .core import Blueprint, Document, Summary, normalize_answer, split_sentences, tokenize


class EmptyBlueprintError(ValueError):
    pass


class EmptyCorpusError(ValueError):
    pass


def token_f1(predicted: str, gold: str) -> float:
    """SQuAD token-level F1 over normalized answers."""
    pred = normalize_answer(predicted)
    ref = normalize_answer(gold)
    if not pred and not ref:
        return 1.0
    if not pred or not ref:
        return 0.0
    same = sum((Counter(pred) & Counter(ref)).values())
    if same == 0:
        return 0.0
    precision = same / len(pred)
    recall = same / len(ref)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class QuestionScore:
    question: str
    gold_answer: str
    predicted_answer: str
    f1: float


def qa_based_score(summary_text: str, blueprint: Blueprint, qa_client) -> tuple[float, list[QuestionScore]]:
    """Mean token F1 of the QA model's answers, asked against ``summary_text``.

    With the reference blueprint this is informativeness; with the
    predicted blueprint it is grounding.  Unanswerable predictions count
    as empty strings.
    """
    if not len(blueprint):
        raise EmptyBlueprintError("QA-based scoring needs at least one question")
    responses = answer_many([QaRequest(p.question, summary_text) for p in blueprint], qa_client)
    scores = []
    for pair, resp in zip(blueprint, responses):
        predicted = "" if resp.no_answer else resp.answer
        scores.append(QuestionScore(pair.question, pair.answer, predicted, token_f1(predicted, pair.answer)))
    return mean(s.f1 for s in scores), scores


@dataclass(frozen=True)
class FaithfulnessConfig:
    max_premise_chars: int = 4000
    threshold: float = 0.5

    def __post_init__(self):
        if self.max_premise_chars <= 0:
            raise ValueError("max_premise_chars must be > 0")


@dataclass(frozen=True)
class SentenceEntailment:
    sentence: str
    prob: float
    label: int


def chunk_premise(text: str, max_chars: int) -> list[str]:
    """Pack whole sentences into chunks of at most ``max_chars`` characters.

    A single sentence longer than the budget is cut at whitespace (or hard
    cut when a single token exceeds it).
    """
    if len(text) <= max_chars:
        return [text]
    pieces = []
    for span in split_sentences(text):
        sent = span.slice(text)
        while len(sent) > max_chars:
            cut = sent.rfind(" ", 0, max_chars + 1)
            if cut <= 0:
                cut = max_chars
            pieces.append(sent[:cut].rstrip())
            sent = sent[cut:].lstrip()
        if sent:
            pieces.append(sent)
    chunks, current = [], ""
    for piece in pieces:
        joined = f"{current} {piece}" if current else piece
        if len(joined) <= max_chars:
            current = joined
        else:
            chunks.append(current)
            current = piece
    if current:
        chunks.append(current)
    return chunks


def faithfulness(
    document: Document, summary: Summary, nli_client, config: FaithfulnessConfig | None = None
) -> tuple[float, list[SentenceEntailment]]:
    """Share of summary sentences entailed by the input.

    Each sentence is scored against every premise chunk, the maximum
    probability is kept, and it counts as entailed only when strictly above
    the threshold.
    """
    config = config or FaithfulnessConfig()
    chunks = chunk_premise(document.source_text, config.max_premise_chars)
    sentences = summary.sentence_texts()
    probs = entail_many([NliRequest(c, s) for s in sentences for c in chunks], nli_client)
    judged = []
    for i, sent in enumerate(sentences):
        best = max(probs[i * len(chunks):(i + 1) * len(chunks)])
        judged.append(SentenceEntailment(sent, best, int(best > config.threshold)))
    return sum(j.label for j in judged) / len(judged), judged


# -- RougeLSum --------------------------------------------------------------

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def rouge_tokenize(text: str) -> list[str]:
    return _NON_ALNUM.sub(" ", text.lower()).split()


def _lcs_positions(ref: Sequence[str], cand: Sequence[str]) -> set[int]:
    """Indices of ``ref`` lying on at least one longest common subsequence."""
    n, m = len(ref), len(cand)
    fwd = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n):
        for j in range(m):
            fwd[i + 1][j + 1] = fwd[i][j] + 1 if ref[i] == cand[j] else max(fwd[i][j + 1], fwd[i + 1][j])
    bwd = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            bwd[i][j] = bwd[i + 1][j + 1] + 1 if ref[i] == cand[j] else max(bwd[i + 1][j], bwd[i][j + 1])
    best = fwd[n][m]
    if best == 0:
        return set()
    return {
        i
        for i in range(n)
        for j in range(m)
        if ref[i] == cand[j] and fwd[i][j] + 1 + bwd[i + 1][j + 1] == best
    }


def rouge_lsum(candidate: str, reference: str) -> float:
    """Summary-level ROUGE-L F1 with newlines as sentence boundaries.

    For every reference sentence the union of its LCS positions against
    all candidate sentences counts as hits; each token can be hit at most
    as often as it occurs in both texts.
    """
    ref_sents = [t for t in (rouge_tokenize(s) for s in reference.split("\n")) if t]
    cand_sents = [t for t in (rouge_tokenize(s) for s in candidate.split("\n")) if t]
    ref_total = sum(map(len, ref_sents))
    cand_total = sum(map(len, cand_sents))
    if ref_total == 0 and cand_total == 0:
        return 1.0
    if ref_total == 0 or cand_total == 0:
        return 0.0
    ref_left = Counter(tok for s in ref_sents for tok in s)
    cand_left = Counter(tok for s in cand_sents for tok in s)
    hits = 0
    for ref in ref_sents:
        union = set()
        for cand in cand_sents:
            union |= _lcs_positions(ref, cand)
        for i in sorted(union):
            tok = ref[i]
            if ref_left[tok] > 0 and cand_left[tok] > 0:
                hits += 1
                ref_left[tok] -= 1
                cand_left[tok] -= 1
    if hits == 0:
        return 0.0
    precision = hits / cand_total
    recall = hits / ref_total
    return 2 * precision * recall / (precision + recall)


def linearize_blueprint(blueprint: Blueprint) -> str:
    return "\n".join(f"{p.question} {p.answer}" for p in blueprint)


def blueprint_rouge(predicted: Blueprint, reference: Blueprint) -> float:
    return rouge_lsum(linearize_blueprint(predicted), linearize_blueprint(reference))


def sentences_per_line(text: str) -> str:
    """Put each sentence on its own line, as RougeLSum expects."""
    return "\n".join(span.slice(text) for span in split_sentences(text))


# -- Abstractiveness and corpus statistics ----------------------------------


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def novel_ngrams(source_text, target_text: str, n: int) -> float:
    """Share of target n-gram positions whose n-gram never occurs in the source.

    ``source_text`` may be a list of texts; n-grams never span two of them.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    target = _ngrams(tokenize(target_text), n)
    if not target:
        return 0.0
    sources = [source_text] if isinstance(source_text, str) else list(source_text)
    seen = {g for src in sources for g in _ngrams(tokenize(src), n)}
    return sum(g not in seen for g in target) / len(target)


@dataclass(frozen=True)
class DatasetStats:
    examples: int
    docs_per_example: float
    source_words: float
    source_sentences: float
    words_per_doc: float
    target_words: float
    target_sentences: float
    novel_unigrams: float
    novel_bigrams: float
    novel_trigrams: float
    novel_4grams: float
    qa_pairs: Optional[float] = None
    target_blueprint_words: Optional[float] = None

    def to_json(self) -> dict:
        return asdict(self)


def dataset_stats(corpus: Sequence) -> DatasetStats:
    """Per-corpus averages of source/target size, abstractiveness and plan size.

    ``corpus`` holds :class:`~qablueprint.records.CorpusRecord` objects.
    Blueprint statistics average over the records that carry a blueprint.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpusError("cannot compute statistics of an empty corpus")
    rows = []
    for rec in corpus:
        texts = [src.text for src in rec.sources]
        words = sum(len(tokenize(t)) for t in texts)
        target_words = len(tokenize(rec.summary))
        row = {
            "docs": len(texts),
            "words": words,
            "sentences": sum(len(split_sentences(t)) for t in texts),
            "words_per_doc": words / len(texts),
            "target_words": target_words,
            "target_sentences": len(split_sentences(rec.summary)),
            **{f"novel{n}": novel_ngrams(texts, rec.summary, n) for n in range(1, 5)},
        }
        if rec.blueprint is not None:
            row["qa_pairs"] = len(rec.blueprint)
            row["bp_words"] = target_words + sum(
                len(tokenize(p.question)) + len(tokenize(p.answer)) for p in rec.blueprint
            )
        rows.append(row)

    def avg(key: str) -> Optional[float]:
        values = [r[key] for r in rows if key in r]
        return mean(values) if values else None

    return DatasetStats(
        examples=len(rows),
        docs_per_example=avg("docs"),
        source_words=avg("words"),
        source_sentences=avg("sentences"),
        words_per_doc=avg("words_per_doc"),
        target_words=avg("target_words"),
        target_sentences=avg("target_sentences"),
        novel_unigrams=avg("novel1"),
        novel_bigrams=avg("novel2"),
        novel_trigrams=avg("novel3"),
        novel_4grams=avg("novel4"),
        qa_pairs=avg("qa_pairs"),
        target_blueprint_words=avg("bp_words"),
    )


# -- Per-example report -----------------------------------------------------


@dataclass
class EvalReport:
    example_id: str
    informativeness: Optional[float] = None
    grounding: Optional[float] = None
    faithfulness: Optional[float] = None
    faithfulness_labels: list[int] = field(default_factory=list)
    rouge_lsum_summary: float = 0.0
    rouge_lsum_blueprint: Optional[float] = None
    per_question: list[QuestionScore] = field(default_factory=list)
    grounding_per_question: list[QuestionScore] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def evaluate_example(
    example_id: str,
    document: Document,
    predicted_summary: str,
    reference_summary: str,
    reference_blueprint: Blueprint,
    predicted_blueprint: Optional[Blueprint],
    qa_client,
    nli_client,
    faithfulness_config: FaithfulnessConfig | None = None,
) -> EvalReport:
    """All metrics for one prediction.  Undefined scores are left as None and flagged."""
    report = EvalReport(example_id)
    if len(reference_blueprint):
        report.informativeness, report.per_question = qa_based_score(
            predicted_summary, reference_blueprint, qa_client
        )
    else:
        report.flags.append("empty_reference_blueprint")
    if predicted_blueprint is not None:
        if len(predicted_blueprint):
            report.grounding, report.grounding_per_question = qa_based_score(
                predicted_summary, predicted_blueprint, qa_client
            )
        else:
            report.flags.append("empty_predicted_blueprint")
        report.rouge_lsum_blueprint = blueprint_rouge(predicted_blueprint, reference_blueprint)
    if predicted_summary.strip():
        summary = Summary.from_text(predicted_summary)
        report.faithfulness, judged = faithfulness(document, summary, nli_client, faithfulness_config)
        report.faithfulness_labels = [j.label for j in judged]
    else:
        report.flags.append("empty_summary")
    report.rouge_lsum_summary = rouge_lsum(
        sentences_per_line(predicted_summary), sentences_per_line(reference_summary)
    )
    return report


def aggregate_reports(reports: Sequence[EvalReport]) -> dict:
    """Corpus means per metric, plus QA-F1 pooled over all questions."""

    def avg(name: str) -> Optional[float]:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        return mean(values) if values else None

    pooled = [q.f1 for r in reports for q in r.per_question]
    pooled_grounding = [q.f1 for r in reports for q in r.grounding_per_question]
    return {
        "examples": len(reports),
        "informativeness": avg("informativeness"),
        "informativeness_pooled": mean(pooled) if pooled else None,
        "grounding": avg("grounding"),
        "grounding_pooled": mean(pooled_grounding) if pooled_grounding else None,
        "faithfulness": avg("faithfulness"),
        "rouge_lsum_summary": avg("rouge_lsum_summary"),
        "rouge_lsum_blueprint": avg("rouge_lsum_blueprint"),
    }
