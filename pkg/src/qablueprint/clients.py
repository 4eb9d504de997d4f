"""Inference clients for question generation, extractive QA and entailment.

Each learned component sits behind a small client with two backends: a
remote HTTP backend speaking JSON, and a deterministic fixture-driven mock
used by the tests and for offline runs.

Wire format (HTTP POST, JSON):

    QG   request {"answer", "context", "input"}   response {"question"}
    QA   request {"question", "context"}          response {"answer", "score", "no_answer"}
    NLI  request {"premise", "hypothesis"}        response {"entail_prob"}

``input`` carries the conventional seq2seq encoding of the QG request,
``"answer: <a> context: <c>"``; servers that build their own input may
ignore it.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, TypeVar

import requests

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

ENV_URLS = {
    "qg": "BLUEPRINT_QG_URL",
    "qa": "BLUEPRINT_QA_URL",
    "nli": "BLUEPRINT_NLI_URL",
    "candidates": "BLUEPRINT_CANDIDATES_URL",
}


class ClientError(Exception):
    """Base class for inference client failures."""


class TransportError(ClientError):
    """The backend could not be reached (after retries)."""


class MalformedResponseError(ClientError):
    """The backend answered with something that violates the wire contract."""


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str
    timeout: float = 30.0
    max_retries: int = 3
    max_in_flight: int = 8
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class QgRequest:
    answer: str
    context: str

    @property
    def input_text(self) -> str:
        return f"answer: {self.answer} context: {self.context}"


@dataclass(frozen=True)
class QgResponse:
    question: str


@dataclass(frozen=True)
class QaRequest:
    question: str
    context: str


@dataclass(frozen=True)
class QaResponse:
    answer: str
    score: float = 1.0
    no_answer: bool = False

    @classmethod
    def unanswerable(cls, score: float = 0.0) -> "QaResponse":
        return cls("", score, True)


@dataclass(frozen=True)
class NliRequest:
    premise: str
    hypothesis: str


@dataclass(frozen=True)
class NliResponse:
    entail_prob: float


# -- HTTP transport ---------------------------------------------------------

RETRY_STATUS = frozenset({429, 500, 502, 503, 504})


class HttpJsonClient:
    """POSTs JSON with bounded concurrency and exponential-backoff retries."""

    def __init__(self, config: ClientConfig, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._local = threading.local()
        self._sleep = sleep

    @property
    def max_in_flight(self) -> int:
        return self.config.max_in_flight

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = self._local.session = requests.Session()
        return session

    def post(self, payload: dict) -> dict:
        cfg = self.config
        last_error: Optional[str] = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                self._sleep(cfg.backoff_base * 2 ** (attempt - 1))
            with self._slots:
                try:
                    resp = self._session().post(cfg.endpoint, json=payload, timeout=cfg.timeout)
                except requests.RequestException as exc:
                    last_error = f"{type(exc).__name__}: {exc}"
                    continue
            if resp.status_code in RETRY_STATUS:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise TransportError(f"{cfg.endpoint}: HTTP {resp.status_code}")
            try:
                body = resp.json()
            except ValueError as exc:
                raise MalformedResponseError(f"{cfg.endpoint}: response is not JSON") from exc
            if not isinstance(body, dict):
                raise MalformedResponseError(f"{cfg.endpoint}: response is not a JSON object")
            return body
        raise TransportError(
            f"{cfg.endpoint}: giving up after {cfg.max_retries + 1} attempts ({last_error})"
        )


def _field(body: dict, name: str, kind: type, endpoint: str) -> Any:
    if name not in body:
        raise MalformedResponseError(f"{endpoint}: response lacks {name!r}")
    value = body[name]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise MalformedResponseError(f"{endpoint}: {name!r} must be {kind.__name__}")
    return value


class RemoteQgClient(HttpJsonClient):
    def generate(self, request: QgRequest) -> QgResponse:
        body = self.post(
            {"answer": request.answer, "context": request.context, "input": request.input_text}
        )
        return QgResponse(_field(body, "question", str, self.config.endpoint))


class RemoteQaClient(HttpJsonClient):
    def answer(self, request: QaRequest) -> QaResponse:
        body = self.post({"question": request.question, "context": request.context})
        endpoint = self.config.endpoint
        return QaResponse(
            answer=_field(body, "answer", str, endpoint),
            score=_field(body, "score", float, endpoint),
            no_answer=_field(body, "no_answer", bool, endpoint),
        )


class RemoteNliClient(HttpJsonClient):
    def entail(self, request: NliRequest) -> NliResponse:
        body = self.post({"premise": request.premise, "hypothesis": request.hypothesis})
        return NliResponse(_field(body, "entail_prob", float, self.config.endpoint))


# -- Mock backends ----------------------------------------------------------


def _maybe_fail(entry: dict) -> None:
    error = entry.get("error")
    if error == "transport":
        raise TransportError("mock transport failure")
    if error is not None:
        raise MalformedResponseError(f"mock malformed response ({error})")


def _lookup(table: dict, key: tuple, wildcard_key: tuple) -> Optional[dict]:
    entry = table.get(key)
    if entry is None:
        entry = table.get(wildcard_key)
    return entry


class MockQgClient:
    """Fixture lookup on (answer, context); falls back to ``What is <answer>?``.

    Fixture entries without a ``context`` match any context.
    """

    max_in_flight = 1  # pure lookups; no point fanning out threads

    def __init__(self, fixtures: Iterable[dict] = ()):
        self._table = {(e["answer"], e.get("context")): e for e in fixtures}

    def generate(self, request: QgRequest) -> QgResponse:
        entry = _lookup(self._table, (request.answer, request.context), (request.answer, None))
        if entry is None:
            return QgResponse(f"What is {request.answer}?")
        _maybe_fail(entry)
        return QgResponse(entry["question"])


class MockQaClient:
    """Fixture lookup on (question, context); unknown questions are unanswerable.

    Like an extractive reader, a fixture answer is only returned when it
    occurs verbatim in the context (disable with ``extractive=False``).
    """

    max_in_flight = 1  # pure lookups; no point fanning out threads

    def __init__(self, fixtures: Iterable[dict] = (), extractive: bool = True):
        self._table = {(e["question"], e.get("context")): e for e in fixtures}
        self.extractive = extractive

    def answer(self, request: QaRequest) -> QaResponse:
        entry = _lookup(self._table, (request.question, request.context), (request.question, None))
        if entry is None:
            return QaResponse.unanswerable()
        _maybe_fail(entry)
        if entry.get("no_answer"):
            return QaResponse.unanswerable(float(entry.get("score", 0.0)))
        answer = entry["answer"]
        if self.extractive and answer not in request.context:
            return QaResponse.unanswerable()
        return QaResponse(answer, float(entry.get("score", 1.0)), False)


class MockNliClient:
    """Fixture lookup on (premise, hypothesis).

    Defaults: a hypothesis that appears verbatim in the premise (identity
    included) is entailed with probability 1.0; anything else gets 0.0.
    Fixture entries without a ``premise`` match any premise.
    """

    max_in_flight = 1  # pure lookups; no point fanning out threads

    def __init__(self, fixtures: Iterable[dict] = ()):
        self._table = {(e.get("premise"), e["hypothesis"]): e for e in fixtures}

    def entail(self, request: NliRequest) -> NliResponse:
        entry = _lookup(
            self._table, (request.premise, request.hypothesis), (None, request.hypothesis)
        )
        if entry is not None:
            _maybe_fail(entry)
            return NliResponse(float(entry["entail_prob"]))
        hyp = " ".join(request.hypothesis.split())
        if hyp and hyp in " ".join(request.premise.split()):
            return NliResponse(1.0)
        return NliResponse(0.0)


# -- Public operations ------------------------------------------------------


def generate_question(answer: str, context: str, client) -> str:
    response = client.generate(QgRequest(answer, context))
    question = response.question
    if not isinstance(question, str) or not question.strip():
        raise MalformedResponseError("question generator returned an empty question")
    return question


def answer_question(question: str, context: str, client) -> QaResponse:
    response = client.answer(QaRequest(question, context))
    if not 0.0 <= response.score <= 1.0:
        raise MalformedResponseError(f"QA score {response.score} outside [0, 1]")
    if response.no_answer and response.answer:
        raise MalformedResponseError("QA response flags no_answer but carries an answer")
    return response


def entail_prob(premise: str, hypothesis: str, client) -> float:
    prob = client.entail(NliRequest(premise, hypothesis)).entail_prob
    if not 0.0 <= prob <= 1.0:
        raise MalformedResponseError(f"entailment probability {prob} outside [0, 1]")
    return prob


def map_ordered(fn: Callable[[T], R], items: Sequence[T], max_workers: int = 1) -> list[R]:
    """Apply ``fn`` concurrently; results come back in input order."""
    items = list(items)
    if max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(max_workers, len(items))) as pool:
        return list(pool.map(fn, items))


def answer_many(requests_: Sequence[QaRequest], client) -> list[QaResponse]:
    return map_ordered(
        lambda r: answer_question(r.question, r.context, client),
        requests_,
        getattr(client, "max_in_flight", 1),
    )


def entail_many(requests_: Sequence[NliRequest], client) -> list[float]:
    return map_ordered(
        lambda r: entail_prob(r.premise, r.hypothesis, client),
        requests_,
        getattr(client, "max_in_flight", 1),
    )


# -- Construction -----------------------------------------------------------


@dataclass
class Clients:
    """The set of backends one pipeline run talks to."""

    qg: Any
    qa: Any
    nli: Any
    candidates: Any = None


def load_fixtures(path) -> dict:
    with open(Path(path), encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: fixtures must be a JSON object")
    return data


def endpoint_from_env(kind: str) -> Optional[str]:
    return os.environ.get(ENV_URLS[kind]) or None


def build_clients(
    settings: Optional[dict] = None,
    fixtures: Optional[dict] = None,
) -> Clients:
    """Remote clients where an endpoint is configured, mocks otherwise.

    ``settings`` maps ``qg``/``qa``/``nli``/``candidates`` to ClientConfig
    keyword arguments; environment variables supply missing endpoints.
    """
    from .candidates import FixtureCandidateBackend, RemoteCandidateBackend, heuristic_backend

    settings = settings or {}
    fixtures = fixtures or {}

    def remote_config(kind: str) -> Optional[ClientConfig]:
        opts = dict(settings.get(kind) or {})
        endpoint = opts.pop("endpoint", None) or endpoint_from_env(kind)
        return ClientConfig(endpoint, **opts) if endpoint else None

    qg_cfg, qa_cfg, nli_cfg, cand_cfg = (
        remote_config(k) for k in ("qg", "qa", "nli", "candidates")
    )
    if cand_cfg:
        candidates = RemoteCandidateBackend(cand_cfg)
    elif fixtures.get("candidates"):
        candidates = FixtureCandidateBackend(fixtures["candidates"])
    else:
        candidates = heuristic_backend
    return Clients(
        qg=RemoteQgClient(qg_cfg) if qg_cfg else MockQgClient(fixtures.get("qg", ())),
        qa=RemoteQaClient(qa_cfg) if qa_cfg else MockQaClient(fixtures.get("qa", ())),
        nli=RemoteNliClient(nli_cfg) if nli_cfg else MockNliClient(fixtures.get("nli", ())),
        candidates=candidates,
    )
