"""Answer candidate extraction.

A backend is any callable mapping summary text to a list of
:class:`AnswerCandidate`.  Three are provided: a deterministic heuristic
(capitalized runs, determiner-headed noun phrases, numbers), a fixture
table for tests, and a client for a remote annotation service that accepts
``{"text"}`` and returns ``{"candidates": [{text, start, end, kind}]}``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Union

from .clients import ClientError, HttpJsonClient, MalformedResponseError
from .core import CharSpan, Summary, split_sentences


class CandidateKind(str, enum.Enum):
    NOUN_PHRASE = "noun_phrase"
    NAMED_ENTITY = "named_entity"
    NUMBER_OR_DATE = "number_or_date"


@dataclass(frozen=True)
class AnswerCandidate:
    text: str
    span: CharSpan
    kind: CandidateKind

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "start": self.span.start,
            "end": self.span.end,
            "kind": self.kind.value,
        }

    @classmethod
    def from_json(cls, data: dict) -> "AnswerCandidate":
        return cls(data["text"], CharSpan(int(data["start"]), int(data["end"])), CandidateKind(data["kind"]))


class BackendUnavailable(ClientError):
    """The remote annotator could not be reached; fall back to the heuristic."""


CandidateBackend = Callable[[str], list]

DETERMINERS = frozenset(
    "a an the this that these those his her its their our my your some any each every "
    "another such both several many few".split()
)
_OTHER_CLOSED = frozenset(
    """
    i he she it they we you him them us me who whom whose which what where when why how
    there here about above across after against along among around as at before behind
    below beneath beside between beyond by down during except for from following in inside
    into like near of off on onto out outside over past since through throughout to toward
    towards under until up upon with within without via per than and or but nor so yet
    because although though while if unless whereas is are was were be been being am has
    have had do does did will would shall should can could may might must not also then no
    all
    """.split()
)
CLOSED_CLASS = DETERMINERS | _OTHER_CLOSED

_TOKEN = re.compile(r"\S+")
_CORE = re.compile(r"^[\"'“‘(\[]*(.*?)[\"'”’)\].,;:!?]*$")
_NUMBER = re.compile(r"^\d+(?:[.,]\d+)*$")


@dataclass
class _Tok:
    core: str
    start: int
    end: int
    sentence_initial: bool
    # punctuation directly after the core ends any phrase running through it
    closes: bool

    @property
    def lower(self) -> str:
        return self.core.lower()

    @property
    def capitalized(self) -> bool:
        return bool(self.core) and self.core[0].isupper()

    @property
    def closed(self) -> bool:
        return self.lower in CLOSED_CLASS


def _tokens(text: str) -> list[_Tok]:
    starts = {span.start for span in split_sentences(text)}
    toks = []
    for m in _TOKEN.finditer(text):
        core_match = _CORE.match(m.group())
        core = core_match.group(1)
        if not core:
            continue
        start = m.start() + core_match.start(1)
        end = start + len(core)
        toks.append(_Tok(core, start, end, m.start() in starts, end < m.end()))
    return toks


def _capitalized_runs(toks: list[_Tok]) -> list[list[_Tok]]:
    runs, current = [], []
    for tok in toks:
        if tok.capitalized and not tok.closed and not (tok.sentence_initial and current):
            current.append(tok)
        else:
            if current:
                runs.append(current)
            current = [tok] if tok.capitalized and not tok.closed else []
        if tok.closes and current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    # a lone capitalized sentence-initial word is not evidence of a name
    return [run for run in runs if not (len(run) == 1 and run[0].sentence_initial)]


def _noun_phrases(toks: list[_Tok]) -> list[list[_Tok]]:
    phrases = []
    for i, tok in enumerate(toks):
        if tok.lower not in DETERMINERS or tok.closes:
            continue
        body = []
        for nxt in toks[i + 1:]:
            if nxt.closed or not any(ch.isalnum() for ch in nxt.core):
                break
            if body and re.search(r"(?:ed|ly)$", nxt.lower) and len(nxt.lower) > 4:
                break
            body.append(nxt)
            if nxt.closes:
                break
        if body:
            phrases.append([tok] + body)
            # "the fifth generation Ford Mustang" also yields "the fifth generation"
            for k in range(1, len(body)):
                if body[k].capitalized and not body[k - 1].capitalized:
                    phrases.append([tok] + body[:k])
                    break
    return phrases


def _numbers(toks: list[_Tok]) -> list[tuple[list[_Tok], bool]]:
    found = []
    for i, tok in enumerate(toks):
        if not _NUMBER.match(tok.core):
            continue
        found.append(([tok], False))
        if (
            not tok.closes
            and i + 2 < len(toks)
            and toks[i + 1].lower == "to"
            and not toks[i + 1].closes
            and _NUMBER.match(toks[i + 2].core)
        ):
            found.append(([tok, toks[i + 1], toks[i + 2]], True))
    return found


def heuristic_backend(text: str) -> list[AnswerCandidate]:
    """Dependency-free candidate extraction.

    Emits maximal capitalized-token runs (and every contiguous sub-run),
    determiner-headed noun phrases, numbers, and ``NUM to NUM`` ranges.
    """
    toks = _tokens(text)
    out: list[AnswerCandidate] = []

    def emit(run: list[_Tok], kind: CandidateKind) -> None:
        span = CharSpan(run[0].start, run[-1].end)
        out.append(AnswerCandidate(span.slice(text), span, kind))

    for run in _capitalized_runs(toks):
        for length in range(len(run), 0, -1):
            for lo in range(len(run) - length + 1):
                emit(run[lo:lo + length], CandidateKind.NAMED_ENTITY)
    for run, _ in _numbers(toks):
        emit(run, CandidateKind.NUMBER_OR_DATE)
    for run in _noun_phrases(toks):
        emit(run, CandidateKind.NOUN_PHRASE)
    return out


class FixtureCandidateBackend:
    """Candidates looked up by exact text; unknown texts use ``fallback``."""

    def __init__(self, fixtures: Iterable[dict], fallback: CandidateBackend = heuristic_backend):
        self._table = {
            entry["text"]: [AnswerCandidate.from_json(c) for c in entry["candidates"]]
            for entry in fixtures
        }
        self.fallback = fallback

    def __call__(self, text: str) -> list[AnswerCandidate]:
        if text in self._table:
            return list(self._table[text])
        return self.fallback(text)


class RemoteCandidateBackend(HttpJsonClient):
    def __call__(self, text: str) -> list[AnswerCandidate]:
        try:
            body = self.post({"text": text})
        except MalformedResponseError:
            raise
        except ClientError as exc:
            raise BackendUnavailable(str(exc)) from exc
        try:
            return [AnswerCandidate.from_json(c) for c in body["candidates"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"bad candidate payload: {exc}") from exc


def extract_candidates(
    summary: Union[Summary, str], backend: CandidateBackend = heuristic_backend
) -> list[AnswerCandidate]:
    """Validated, span-deduplicated candidates sorted by (start, end)."""
    text = summary.text if isinstance(summary, Summary) else summary
    if not text.strip():
        return []
    seen: dict[CharSpan, AnswerCandidate] = {}
    for cand in backend(text):
        cand.span.check_within(text)
        if cand.span.slice(text) != cand.text:
            raise ValueError(f"candidate {cand.text!r} does not match its span in the summary")
        seen.setdefault(cand.span, cand)
    return sorted(seen.values(), key=lambda c: (c.span.start, c.span.end))
