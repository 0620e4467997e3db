"""Score sources: where scenario and action relevance vectors come from.

Three sources share one ``assess(request)`` surface:

* :class:`AnnotationAssessor` returns the scores stored in a corpus.
* :class:`ConstantAssessor` returns a fixed fill value (a stub).
* :class:`RemoteAssessor` asks a model server over HTTP, protocol ``assess/1``.

Remote protocol: ``POST {base_url}/assess/v1`` with JSON body::

    {"version": "assess/1", "dimensions": [...], "scenario": "...", "actions": ["...", ...]}

A 200 response carries::

    {"version": "assess/1", "scenario_scores": [...], "action_scores": [[...], ...]}

Connection failures, timeouts, 429 and 5xx answers are retried with
jittered exponential backoff; other statuses fail immediately.
"""

from __future__ import annotations

import json
import logging
import os
import random
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import httpx

from .dataset import CorpusFile
from .errors import (
    AssessorProtocolError,
    AssessorTransportError,
    StructuralError,
    ValidationError,
)
from .values import DimensionSet, ValueVector, check_relevance

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = "assess/1"
ENDPOINT_PATH = "/assess/v1"
ENV_URL = "VALUERANK_ASSESSOR_URL"
ENV_TIMEOUT = "VALUERANK_ASSESSOR_TIMEOUT"
ENV_RETRIES = "VALUERANK_ASSESSOR_RETRIES"
DEFAULT_TIMEOUT = 10.0
DEFAULT_RETRIES = 2
RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class AssessorRequest:
    scenario_text: str
    action_texts: tuple[str, ...]
    dimension_set: DimensionSet = field(default_factory=DimensionSet)
    scenario_id: str | None = None
    action_ids: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "action_texts", tuple(self.action_texts))
        if self.action_ids is not None:
            object.__setattr__(self, "action_ids", tuple(self.action_ids))
        if not self.scenario_text or not self.scenario_text.strip():
            raise ValidationError("assessor request needs a non-empty scenario text")

    def to_body(self) -> dict[str, Any]:
        return {
            "version": PROTOCOL_VERSION,
            "dimensions": list(self.dimension_set.names),
            "scenario": self.scenario_text,
            "actions": list(self.action_texts),
        }


@dataclass(frozen=True)
class AssessorResponse:
    scenario_scores: ValueVector
    action_scores: tuple[ValueVector, ...]
    retries: int = 0


class Assessor(Protocol):
    def assess(self, request: AssessorRequest) -> AssessorResponse: ...


def _validated(request: AssessorRequest, scenario: Any, actions: Any, *, clamp: bool,
               retries: int = 0) -> AssessorResponse:
    dims = request.dimension_set
    if not isinstance(scenario, list) or not isinstance(actions, list):
        raise AssessorProtocolError("scenario_scores and action_scores must be lists")
    if len(actions) != len(request.action_texts):
        raise StructuralError(
            f"response has {len(actions)} action score vectors for {len(request.action_texts)} actions"
        )
    vectors = [scenario, *actions]
    for k, vec in enumerate(vectors):
        if not isinstance(vec, list) or len(vec) != dims.m:
            where = "scenario_scores" if k == 0 else f"action_scores[{k - 1}]"
            raise StructuralError(f"{where} must hold {dims.m} scores")
        if any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in vec):
            where = "scenario_scores" if k == 0 else f"action_scores[{k - 1}]"
            raise AssessorProtocolError(f"{where} contains a non-numeric entry")
    s = check_relevance(scenario, what="scenario_scores", dimensions=dims, clamp=clamp)
    a = tuple(
        check_relevance(v, what=f"action_scores[{i}]", dimensions=dims, clamp=clamp)
        for i, v in enumerate(actions)
    )
    return AssessorResponse(s, a, retries)


@dataclass(frozen=True)
class ConstantAssessor:
    fill: float = 0.0

    def __post_init__(self) -> None:
        check_relevance([self.fill], what="constant fill")

    def assess(self, request: AssessorRequest) -> AssessorResponse:
        m = request.dimension_set.m
        vec = (float(self.fill),) * m
        return AssessorResponse(vec, tuple(vec for _ in request.action_texts))


@dataclass(frozen=True)
class AnnotationAssessor:
    """Stored corpus scores, looked up by scenario/action id (or by text)."""

    corpus: CorpusFile

    def assess(self, request: AssessorRequest) -> AssessorResponse:
        if request.dimension_set != self.corpus.dimension_set:
            raise StructuralError("request dimensions do not match the corpus dimensions")
        scenario = None
        if request.scenario_id is not None:
            try:
                scenario = self.corpus.scenario(request.scenario_id)
            except KeyError:
                raise ValidationError(f"unknown scenario id {request.scenario_id!r}") from None
        else:
            matches = [s for s in self.corpus.scenarios if s.text == request.scenario_text]
            if len(matches) != 1:
                raise ValidationError("scenario text does not identify exactly one corpus scenario")
            scenario = matches[0]
        if request.action_ids is not None:
            by_id = {a.id: a for a in scenario.actions}
            missing = [x for x in request.action_ids if x not in by_id]
            if missing:
                raise ValidationError(f"scenario {scenario.id!r} has no actions {missing}")
            actions = [by_id[x] for x in request.action_ids]
        else:
            by_text = {a.text: a for a in scenario.actions}
            missing = [t for t in request.action_texts if t not in by_text]
            if missing:
                raise ValidationError(f"scenario {scenario.id!r} has no actions with texts {missing}")
            actions = [by_text[t] for t in request.action_texts]
        return AssessorResponse(scenario.relevance, tuple(a.relevance for a in actions))


class RemoteAssessor:
    """HTTP client for an external value-assessment model server.

    Safe to share between threads; holds no mutable state besides the
    underlying connection pool.
    """

    def __init__(
        self,
        base_url: str | None = None,
        timeout: float | None = None,
        max_retries: int | None = None,
        strict: bool = True,
        backoff: float = 0.25,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        base_url = base_url or os.environ.get(ENV_URL)
        if not base_url:
            raise ValidationError(f"remote assessor needs a base URL (argument or ${ENV_URL})")
        self.base_url = base_url.rstrip("/")
        self.timeout = float(timeout if timeout is not None else os.environ.get(ENV_TIMEOUT, DEFAULT_TIMEOUT))
        self.max_retries = int(max_retries if max_retries is not None else os.environ.get(ENV_RETRIES, DEFAULT_RETRIES))
        self.strict = strict
        self.backoff = backoff
        self._sleep = sleep
        self._client = httpx.Client(timeout=self.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteAssessor":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    def _delay(self, attempt: int) -> float:
        return self.backoff * (2**attempt) * random.uniform(0.5, 1.5)

    def _post(self, body: dict[str, Any]) -> tuple[httpx.Response, int]:
        url = self.base_url + ENDPOINT_PATH
        last = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self._delay(attempt - 1))
            try:
                resp = self._client.post(url, json=body)
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
                logger.warning("assessor attempt %d failed: %s", attempt + 1, last)
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last = f"HTTP {resp.status_code}"
                logger.warning("assessor attempt %d got %s", attempt + 1, last)
                continue
            return resp, attempt
        raise AssessorTransportError(f"remote assessor at {url} unavailable: {last}", self.max_retries)

    def assess(self, request: AssessorRequest) -> AssessorResponse:
        resp, retries = self._post(request.to_body())
        if resp.status_code != 200:
            raise AssessorProtocolError(f"remote assessor answered HTTP {resp.status_code}")
        try:
            body = json.loads(resp.content)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise AssessorProtocolError(f"malformed response body: {exc}") from None
        if not isinstance(body, dict):
            raise AssessorProtocolError("response body must be a JSON object")
        if body.get("version") != PROTOCOL_VERSION:
            raise AssessorProtocolError(f"unsupported protocol version {body.get('version')!r}")
        return _validated(
            request, body.get("scenario_scores"), body.get("action_scores"),
            clamp=not self.strict, retries=retries,
        )


def remote_protocol_roundtrip(request: AssessorRequest, assessor: RemoteAssessor) -> AssessorResponse:
    """One request/response exchange with a remote assessor."""
    return assessor.assess(request)


def assess(request: AssessorRequest, source: Assessor) -> AssessorResponse:
    return source.assess(request)


def serve_response(body: dict[str, Any], scorer: Callable[[str, list[str], list[str]], tuple[list, list]]) -> dict[str, Any]:
    """Server-side helper: answer a decoded ``assess/1`` request body.

    ``scorer(scenario, actions, dimensions)`` returns the scenario vector and
    the list of action vectors.  Used by test servers and local model shims.
    """
    if body.get("version") != PROTOCOL_VERSION:
        raise AssessorProtocolError(f"unsupported protocol version {body.get('version')!r}")
    scenario_scores, action_scores = scorer(body["scenario"], body["actions"], body["dimensions"])
    return {"version": PROTOCOL_VERSION, "scenario_scores": scenario_scores, "action_scores": action_scores}
