"""HTTP clients for the ``/v1`` generation, scoring and suggestion protocol.

Wire format (JSON bodies, POST):

* ``/v1/generate``: ``{"prompt", "n", "seed"}`` -> ``{"texts": [...]}``
* ``/v1/score``: ``{"texts", "label"}`` -> ``{"scores": [...]}``
* ``/v1/suggest``: ``{"text"}`` (one ``<mask>``) -> ``{"token"}``

Timeouts, connection errors, 5xx and 429 are retried with exponential
backoff; any other 4xx is permanent.  Provider credentials are the shim
server's business, never the client's.
"""

from __future__ import annotations

import json
import logging
import math
import threading
import time
from typing import Any, Callable

import httpx

from mopo.backends import (
    GenerateRequest,
    GenerateResponse,
    ScoreRequest,
    ScoreResponse,
    SuggestRequest,
    SuggestResponse,
)
from mopo.core import BackendError, ProtocolViolation, derive_seed, make_id

log = logging.getLogger(__name__)


class HttpClient:
    """POSTs JSON documents to one endpoint with bounded retries."""

    def __init__(
        self,
        endpoint: str,
        max_attempts: int = 4,
        base_delay: float = 0.5,
        max_delay: float = 8.0,
        timeout: float = 60.0,
        max_in_flight: int = 8,
        sleep: Callable[[float], None] = time.sleep,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.max_delay = max_delay
        self.sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self.attempts = 0

    def close(self) -> None:
        self._client.close()

    def _delay(self, attempt: int, response: httpx.Response | None) -> float:
        if response is not None:
            retry_after = response.headers.get("retry-after")
            try:
                if retry_after is not None:
                    return min(self.max_delay, max(0.0, float(retry_after)))
            except ValueError:
                pass
        return min(self.max_delay, self.base_delay * 2**attempt)

    def post(self, path: str, document: dict[str, Any]) -> dict[str, Any]:
        body = json.dumps(document, ensure_ascii=False)
        request_id = make_id(path, body)
        url = f"{self.endpoint}{path}"
        last_error = "no attempt made"
        for attempt in range(self.max_attempts):
            response = None
            try:
                with self._slots:
                    self.attempts += 1
                    response = self._client.post(
                        url,
                        content=body.encode("utf-8"),
                        headers={"content-type": "application/json", "x-request-id": request_id},
                    )
            except httpx.TransportError as exc:  # includes timeouts
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                status = response.status_code
                if status < 300:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise ProtocolViolation(f"{url} returned invalid JSON", request_id) from exc
                last_error = f"HTTP {status}"
                if 400 <= status < 500 and status != 429:
                    raise BackendError(f"{url} rejected request: {last_error}", request_id)
            if attempt + 1 < self.max_attempts:
                delay = self._delay(attempt, response)
                log.warning("retry %d/%d for %s after %.2fs: %s",
                            attempt + 1, self.max_attempts - 1, url, delay, last_error)
                self.sleep(delay)
        raise BackendError(f"{url} failed after {self.max_attempts} attempts: {last_error}",
                           request_id)


class HttpGenerator:
    def __init__(self, client: HttpClient):
        self.client = client

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        texts: list[str] = []
        for round_ in range(self.client.max_attempts):
            missing = request.n - len(texts)
            if missing <= 0:
                break
            seed = request.seed if round_ == 0 else derive_seed(request.seed, round_)
            doc = self.client.post("/v1/generate", {"prompt": request.prompt, "n": missing, "seed": seed})
            got = doc.get("texts") if isinstance(doc, dict) else None
            if not isinstance(got, list) or not all(isinstance(t, str) for t in got):
                raise ProtocolViolation("generate response lacks a list of strings in 'texts'")
            texts.extend(got[:missing])
        if len(texts) < request.n:
            raise BackendError(f"generator returned {len(texts)} of {request.n} texts")
        return GenerateResponse(tuple(texts))


class HttpScorer:
    def __init__(self, name: str, client: HttpClient):
        self.name = name
        self.client = client

    def score(self, request: ScoreRequest) -> ScoreResponse:
        if not request.texts:
            return ScoreResponse(())
        doc = self.client.post("/v1/score", request.to_dict())
        scores = doc.get("scores") if isinstance(doc, dict) else None
        if not isinstance(scores, list) or len(scores) != len(request.texts):
            raise ProtocolViolation("score response length does not match request")
        out = []
        for s in scores:
            if isinstance(s, bool) or not isinstance(s, (int, float)):
                raise ProtocolViolation(f"score {s!r} is not a number")
            if not (math.isfinite(s) and 0.0 <= s <= 1.0):
                raise ProtocolViolation(f"score {s!r} outside [0, 1]")
            out.append(float(s))
        return ScoreResponse(tuple(out))


class HttpSuggester:
    def __init__(self, client: HttpClient):
        self.client = client

    def suggest(self, request: SuggestRequest) -> SuggestResponse:
        doc = self.client.post("/v1/suggest", request.to_dict())
        token = doc.get("token") if isinstance(doc, dict) else None
        if not isinstance(token, str) or not token or any(c.isspace() for c in token):
            raise ProtocolViolation(f"suggested token {token!r} is empty or contains whitespace")
        return SuggestResponse(token)
