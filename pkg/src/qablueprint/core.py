"""Shared domain types and text utilities.

Every other module works on the types defined here: a :class:`Document`
(the generation input), a :class:`Summary` (the output, with sentence
offsets), and a :class:`Blueprint` (the ordered question-answer plan).
"""

from __future__ import annotations

import re
import string
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

ARTICLES = frozenset({"a", "an", "the"})

# Words that end in a period but do not end a sentence.
ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "etc",
        "e.g", "i.e", "inc", "ltd", "co", "corp", "no", "fig", "approx",
        "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
        "nov", "dec", "u.s", "u.k", "gen", "col", "capt", "lt", "sgt", "rev",
    }
)

_INTRA_WORD_HYPHEN = re.compile(r"(?<=[^\W_])-(?=[^\W_])")
_SENTENCE_END = re.compile(r"[.!?]+[\"'”’)\]]*(?=\s+[\"'“‘(\[]?[A-Z0-9])")


@dataclass(frozen=True, order=True)
class CharSpan:
    """Half-open character range ``[start, end)``."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def slice(self, text: str) -> str:
        return text[self.start:self.end]

    def contains(self, other: "CharSpan") -> bool:
        return self.start <= other.start and other.end <= self.end

    def covers(self, offset: int) -> bool:
        return self.start <= offset < self.end

    def shift(self, offset: int) -> "CharSpan":
        return CharSpan(self.start + offset, self.end + offset)

    def check_within(self, text: str) -> None:
        if self.end > len(text):
            raise ValueError(
                f"span [{self.start}, {self.end}) exceeds text of length {len(text)}"
            )


@dataclass(frozen=True)
class Source:
    id: str
    text: str


@dataclass(frozen=True)
class Document:
    """Generation input: one or more sources plus an optional query."""

    id: str
    sources: tuple[Source, ...]
    query: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.sources:
            raise ValueError(f"document {self.id!r} has no sources")
        for src in self.sources:
            if not src.text.strip():
                raise ValueError(f"source {src.id!r} of document {self.id!r} is empty")

    @classmethod
    def from_texts(cls, id: str, texts: Iterable[str], query: Optional[str] = None) -> "Document":
        return cls(id, tuple(Source(str(i), t) for i, t in enumerate(texts)), query)

    @property
    def source_text(self) -> str:
        """All source texts joined by newlines (the premise/QA context)."""
        return "\n".join(src.text for src in self.sources)

    @property
    def input_text(self) -> str:
        """Model input: the query (when present) followed by the sources."""
        parts = [self.query] if self.query else []
        parts.extend(src.text for src in self.sources)
        return "\n".join(parts)


@dataclass(frozen=True)
class Summary:
    """Output text with its sentence segmentation."""

    text: str
    sentences: tuple[CharSpan, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if not self.sentences:
            raise ValueError("summary must contain at least one sentence")
        prev_end = 0
        for span in self.sentences:
            span.check_within(self.text)
            if span.start < prev_end:
                raise ValueError("sentence spans overlap or are out of order")
            if self.text[prev_end:span.start].strip():
                raise ValueError("sentence spans leave non-whitespace text uncovered")
            prev_end = span.end
        if self.text[prev_end:].strip():
            raise ValueError("sentence spans leave non-whitespace text uncovered")

    @classmethod
    def from_text(cls, text: str) -> "Summary":
        return cls(text, tuple(split_sentences(text)))

    @property
    def n(self) -> int:
        return len(self.sentences)

    def sentence_texts(self) -> list[str]:
        return [span.slice(self.text) for span in self.sentences]

    def sentence_index_at(self, offset: int) -> Optional[int]:
        for i, span in enumerate(self.sentences):
            if span.covers(offset):
                return i
        return None


@dataclass(frozen=True)
class QAPair:
    """One question-answer pair.

    ``answer_span`` is the summary span the question was generated from;
    ``sort_key`` is filled in by blueprint sorting.
    """

    question: str
    answer: str
    answer_span: Optional[CharSpan] = None
    sort_key: Optional[int] = None


@dataclass(frozen=True)
class Blueprint:
    """Ordered plan of question-answer pairs."""

    pairs: tuple[QAPair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[QAPair]:
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def answers(self) -> list[str]:
        return [p.answer for p in self.pairs]

    @property
    def questions(self) -> list[str]:
        return [p.question for p in self.pairs]

    def strings(self) -> list[tuple[str, str]]:
        """(question, answer) tuples, ignoring span metadata."""
        return [(p.question, p.answer) for p in self.pairs]


@dataclass(frozen=True)
class Proposition:
    """A sub-sentential unit of a summary.

    ``span``/``text`` hold the proposition content.  ``extent`` is the full
    partition cell, which additionally covers a stripped leading connector
    ("and", "which", ...); extents of one sentence partition its text.
    """

    span: CharSpan
    text: str
    extent: Optional[CharSpan] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("proposition text is empty")
        if self.extent is None:
            object.__setattr__(self, "extent", self.span)
        elif not self.extent.contains(self.span):
            raise ValueError("proposition extent must contain its span")

    def shift(self, offset: int) -> "Proposition":
        return Proposition(self.span.shift(offset), self.text, self.extent.shift(offset))


@dataclass(frozen=True)
class SentenceBlueprint:
    sentence_index: int
    pairs: tuple[QAPair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))


@dataclass(frozen=True)
class AnnotatedExample:
    """The (document, blueprint, summary) training tuple."""

    document: Document
    summary: Summary
    blueprint: Blueprint
    sentence_blueprints: tuple[SentenceBlueprint, ...] = ()
    propositions: tuple[Proposition, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "sentence_blueprints", tuple(self.sentence_blueprints))
        object.__setattr__(self, "propositions", tuple(self.propositions))
        indices = [sb.sentence_index for sb in self.sentence_blueprints]
        if indices != sorted(indices):
            raise ValueError("sentence blueprints must be ordered by sentence index")
        if self.sentence_blueprints:
            assigned = Counter(p for sb in self.sentence_blueprints for p in sb.pairs)
            if assigned != Counter(self.blueprint.pairs):
                raise ValueError("sentence blueprints do not partition the blueprint")


def _is_punct(ch: str) -> bool:
    return ch in string.punctuation or unicodedata.category(ch).startswith("P")


def _strip_punctuation(text: str) -> str:
    # Intra-word hyphens survive ("high-performance" stays one token).
    text = _INTRA_WORD_HYPHEN.sub("\0", text.lower())
    text = "".join(ch for ch in text if not _is_punct(ch))
    return text.replace("\0", "-")


def tokenize(text: str) -> list[str]:
    """Lowercased, punctuation-stripped whitespace tokens (articles kept)."""
    return _strip_punctuation(text).split()


def normalize_answer(text: str) -> list[str]:
    """SQuAD-style answer normalization, returned as a token list.

    >>> normalize_answer("the Ford Mustang")
    ['ford', 'mustang']
    """
    return [tok for tok in tokenize(text) if tok not in ARTICLES]


def bag_tokens(text: str) -> Counter:
    """Multiset of :func:`tokenize` tokens."""
    return Counter(tokenize(text))


def split_sentences(text: str) -> list[CharSpan]:
    """Rule-based sentence segmentation returning character spans.

    A sentence ends at ``.``, ``!`` or ``?`` (plus any closing quotes or
    brackets) when followed by whitespace and an uppercase letter or digit,
    unless the word before the period is a known abbreviation.
    """
    cuts = [0]
    for match in _SENTENCE_END.finditer(text):
        if match.group().startswith(".") and _ends_with_abbreviation(text, match.start()):
            continue
        cuts.append(match.end())
    cuts.append(len(text))

    spans = []
    for lo, hi in zip(cuts, cuts[1:]):
        chunk = text[lo:hi]
        stripped = chunk.strip()
        if not stripped:
            continue
        start = lo + (len(chunk) - len(chunk.lstrip()))
        spans.append(CharSpan(start, start + len(stripped)))
    return spans


def _ends_with_abbreviation(text: str, period_at: int) -> bool:
    word_start = period_at
    while word_start > 0 and not text[word_start - 1].isspace():
        word_start -= 1
    word = text[word_start:period_at].lower().lstrip("\"'“‘([")
    return word in ABBREVIATIONS


def find_token_occurrence(text: str, needle: str, start: int = 0) -> int:
    """Offset of the first whole-token, case-sensitive occurrence of ``needle``.

    Returns -1 when absent.  "Ford" matches inside "Ford Mustang" but not
    inside "Fordham".
    """
    if not needle:
        return -1
    pos = text.find(needle, start)
    while pos != -1:
        before = text[pos - 1] if pos > 0 else " "
        after_at = pos + len(needle)
        after = text[after_at] if after_at < len(text) else " "
        if not (before.isalnum() and needle[0].isalnum()) and not (
            after.isalnum() and needle[-1].isalnum()
        ):
            return pos
        pos = text.find(needle, pos + 1)
    return -1


def join_sentences(sentences: Sequence[str]) -> str:
    return " ".join(s for s in sentences)
