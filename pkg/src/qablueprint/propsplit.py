"""Lexical proposition splitting.

Sentences are split greedily and hierarchically: a chunk longer than
``max_words`` is cut at its leftmost punctuation boundary, failing that at
a coordination word or relative pronoun, failing that at a preposition.
A cut is only made when both sides keep at least ``min_words`` content
words.  Connectors that open a chunk ("and", "which", ...) are stripped
from the proposition text but stay inside its extent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import CharSpan, Proposition, Summary

_TOKEN = re.compile(r"\S+")
_CLOSERS = "\"'”’)]"


@dataclass(frozen=True)
class SplitConfig:
    punctuation_tokens: tuple[str, ...] = (".", ",", ";")
    coordination_tokens: tuple[str, ...] = ("and", "but", "or")
    relative_pronouns: tuple[str, ...] = (
        "that", "who", "which", "where", "when", "whose", "whom",
    )
    prepositions: tuple[str, ...] = (
        "at", "by", "from", "for", "in", "on", "to", "with", "of", "during", "following",
    )
    min_words: int = 3
    max_words: int = 12

    def __post_init__(self):
        for name in ("punctuation_tokens", "coordination_tokens", "relative_pronouns", "prepositions"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, value)
        if self.min_words < 1:
            raise ValueError("min_words must be >= 1")
        if self.max_words < self.min_words:
            raise ValueError("max_words must be >= min_words")

    @property
    def connectors(self) -> frozenset[str]:
        return frozenset(w.lower() for w in self.coordination_tokens + self.relative_pronouns)


@dataclass
class _Token:
    text: str
    start: int
    end: int
    key: str = field(init=False)

    def __post_init__(self):
        self.key = self.text.strip(".,;:!?" + _CLOSERS + "\"'“‘([").lower()

    @property
    def is_word(self) -> bool:
        return any(ch.isalnum() for ch in self.text)


def _tokens(text: str) -> list[_Token]:
    return [_Token(m.group(), m.start(), m.end()) for m in _TOKEN.finditer(text)]


def _strip_leading_connector(chunk: list[_Token], config: SplitConfig) -> list[_Token]:
    if len(chunk) > 1 and chunk[0].key in config.connectors:
        return chunk[1:]
    return chunk


def _content_words(chunk: list[_Token], config: SplitConfig) -> int:
    return sum(tok.is_word for tok in _strip_leading_connector(chunk, config))


def _ends_with_punct(tok: _Token, config: SplitConfig) -> bool:
    bare = tok.text.rstrip(_CLOSERS)
    return any(bare.endswith(p) for p in config.punctuation_tokens)


def _boundaries(chunk: list[_Token], config: SplitConfig) -> list[list[int]]:
    """Candidate cut indices per tier; a cut at ``i`` splits before chunk[i]."""
    punct, connective, prep = [], [], []
    connectors = config.connectors
    prepositions = frozenset(w.lower() for w in config.prepositions)
    for i in range(1, len(chunk)):
        if _ends_with_punct(chunk[i - 1], config):
            punct.append(i)
        if chunk[i].key in connectors:
            connective.append(i)
        elif chunk[i].key in prepositions:
            prep.append(i)
    return [punct, connective, prep]


def _split_chunk(chunk: list[_Token], config: SplitConfig) -> list[list[_Token]]:
    if _content_words(chunk, config) <= config.max_words:
        return [chunk]
    for tier in _boundaries(chunk, config):
        for cut in tier:
            left, right = chunk[:cut], chunk[cut:]
            if (
                _content_words(left, config) >= config.min_words
                and _content_words(right, config) >= config.min_words
            ):
                return _split_chunk(left, config) + _split_chunk(right, config)
    return [chunk]


def split_propositions(sentence_text: str, config: SplitConfig | None = None) -> list[Proposition]:
    """Split one sentence into propositions (spans relative to the sentence)."""
    config = config or SplitConfig()
    tokens = _tokens(sentence_text)
    if not tokens:
        raise ValueError("cannot split an empty sentence")
    props = []
    for chunk in _split_chunk(tokens, config):
        content = _strip_leading_connector(chunk, config)
        span = CharSpan(content[0].start, content[-1].end)
        extent = CharSpan(chunk[0].start, chunk[-1].end)
        props.append(Proposition(span, span.slice(sentence_text), extent))
    return props


def split_summary(summary: Summary, config: SplitConfig | None = None) -> list[Proposition]:
    """Propositions for every sentence, in summary coordinates."""
    props = []
    for sent in summary.sentences:
        for prop in split_propositions(sent.slice(summary.text), config):
            props.append(prop.shift(sent.start))
    return props
