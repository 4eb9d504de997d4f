"""JSONL corpus records and helpers for reading/writing them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional

from .core import Blueprint, CharSpan, Document, Proposition, QAPair, Source, Summary


class RecordError(ValueError):
    """A corpus record is malformed."""


@dataclass
class CorpusRecord:
    example_id: str
    sources: tuple[Source, ...]
    summary: str
    query: Optional[str] = None
    propositions: Optional[list[CharSpan]] = None
    blueprint: Optional[list[QAPair]] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: Any) -> "CorpusRecord":
        if not isinstance(data, dict):
            raise RecordError("record must be a JSON object")
        try:
            example_id = str(data["example_id"])
            sources = tuple(
                Source(str(s.get("id", i)), s["text"]) for i, s in enumerate(data["sources"])
            )
            summary = data["summary"]
        except (KeyError, TypeError, AttributeError) as exc:
            raise RecordError(f"missing or malformed field: {exc}") from exc
        if not isinstance(summary, str):
            raise RecordError("summary must be a string")
        try:
            props = data.get("propositions")
            if props is not None:
                props = [CharSpan(int(p["start"]), int(p["end"])) for p in props]
            blueprint = data.get("blueprint")
            if blueprint is not None:
                blueprint = [pair_from_json(p) for p in blueprint]
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordError(f"malformed span or pair: {exc}") from exc
        known = {"example_id", "sources", "summary", "query", "propositions", "blueprint"}
        return cls(
            example_id=example_id,
            sources=sources,
            summary=summary,
            query=data.get("query"),
            propositions=props,
            blueprint=blueprint,
            extra={k: v for k, v in data.items() if k not in known},
        )

    def to_json(self) -> dict:
        out: dict = {"example_id": self.example_id}
        if self.query is not None:
            out["query"] = self.query
        out["sources"] = [{"id": s.id, "text": s.text} for s in self.sources]
        out["summary"] = self.summary
        if self.propositions is not None:
            out["propositions"] = [{"start": s.start, "end": s.end} for s in self.propositions]
        if self.blueprint is not None:
            out["blueprint"] = [pair_to_json(p) for p in self.blueprint]
        out.update(self.extra)
        return out

    def document(self) -> Document:
        try:
            return Document(self.example_id, self.sources, self.query)
        except ValueError as exc:
            raise RecordError(str(exc)) from exc

    def summary_obj(self) -> Summary:
        if not self.summary.strip():
            raise RecordError("summary is empty")
        return Summary.from_text(self.summary)

    def override_propositions(self) -> Optional[list[Proposition]]:
        if self.propositions is None:
            return None
        out = []
        for span in self.propositions:
            try:
                span.check_within(self.summary)
                out.append(Proposition(span, span.slice(self.summary)))
            except ValueError as exc:
                raise RecordError(f"bad proposition span: {exc}") from exc
        return out

    def blueprint_obj(self) -> Blueprint:
        if self.blueprint is None:
            raise RecordError("record has no blueprint")
        for pair in self.blueprint:
            if pair.answer_span is not None:
                try:
                    pair.answer_span.check_within(self.summary)
                except ValueError as exc:
                    raise RecordError(str(exc)) from exc
        return Blueprint(tuple(self.blueprint))


def pair_from_json(data: dict) -> QAPair:
    span = None
    if data.get("start") is not None and data.get("end") is not None:
        span = CharSpan(int(data["start"]), int(data["end"]))
    return QAPair(str(data.get("question", "")), str(data["answer"]), span)


def pair_to_json(pair: QAPair) -> dict:
    out = {"question": pair.question, "answer": pair.answer}
    if pair.answer_span is not None:
        out["start"] = pair.answer_span.start
        out["end"] = pair.answer_span.end
    return out


def blueprint_from_json(items) -> Blueprint:
    return Blueprint(tuple(pair_from_json(p) for p in items))


def read_jsonl(path) -> Iterator[tuple[int, Any]]:
    """(line number, parsed value) per non-blank line; bad JSON yields the exception."""
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, exc


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path, rows) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(dumps(row) + "\n")
