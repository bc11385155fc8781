"""Wire protocol and client for the external model roles.

Four roles sit behind one JSON-over-HTTP contract: question generator,
extractive QA confidence scorer, instruction model, and answer-span
extractor. Endpoints are either real URLs or "mock:<fixture>" strings that
route to the in-process mock servers in `consistent_qg.mocks`; both paths
serialize requests to bytes and back, so tests exercise the same payloads
that would cross the network.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass

import httpx

from .codes import ExtractedSpan
from .errors import BackendUnavailable, ConfigError, ProtocolError

ROLE_GENERATOR = "generator"
ROLE_QA_SCORER = "qa_scorer"
ROLE_INSTRUCT = "instruct"
ROLE_SPAN_EXTRACTOR = "span_extractor"
ROLES = (ROLE_GENERATOR, ROLE_QA_SCORER, ROLE_INSTRUCT, ROLE_SPAN_EXTRACTOR)

ROUTES = {
    ROLE_GENERATOR: "/v1/generate",
    ROLE_QA_SCORER: "/v1/qa_score",
    ROLE_INSTRUCT: "/v1/instruct",
    ROLE_SPAN_EXTRACTOR: "/v1/extract_spans",
}

STRATEGY_TOP_K = "top_k_sampling"
STRATEGY_GREEDY = "greedy"


@dataclass(frozen=True)
class BackendHandle:
    role: str
    endpoint: str  # http(s) URL or "mock:<fixture name or path>"
    timeout_ms: int = 10_000
    max_retries: int = 2
    auth_token: str | None = None
    backoff_base_s: float = 0.1

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"unknown backend role: {self.role!r}")

    @property
    def is_mock(self) -> bool:
        return self.endpoint.startswith("mock:")


@dataclass(frozen=True)
class DecodeConfig:
    strategy: str = STRATEGY_TOP_K
    k: int = 5
    temperature: float = 0.8
    no_repeat_ngram_size: int = 2
    seed: int | None = None

    def __post_init__(self):
        if self.strategy not in (STRATEGY_TOP_K, STRATEGY_GREEDY):
            raise ConfigError(f"unknown decode strategy: {self.strategy!r}")
        if self.strategy == STRATEGY_TOP_K and (self.k < 1 or self.temperature <= 0):
            raise ConfigError("top_k_sampling requires k >= 1 and temperature > 0")

    def to_wire(self) -> dict:
        wire = {
            "strategy": self.strategy,
            "k": self.k,
            "temperature": self.temperature,
            "no_repeat_ngram_size": self.no_repeat_ngram_size,
        }
        if self.seed is not None:
            wire["seed"] = self.seed
        return wire

    @classmethod
    def from_wire(cls, data: dict) -> "DecodeConfig":
        try:
            return cls(
                strategy=data["strategy"],
                k=int(data["k"]),
                temperature=float(data["temperature"]),
                no_repeat_ngram_size=int(data["no_repeat_ngram_size"]),
                seed=data.get("seed"),
            )
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            raise ProtocolError(f"malformed decode config: {exc}") from exc


@dataclass(frozen=True)
class QaScore:
    answer_span: str
    confidence: float


# --- request/response codecs (field names are part of the wire contract) ---

def encode_generate_request(prompt: str, decode: DecodeConfig, n: int) -> dict:
    return {"prompt": prompt, "decode": decode.to_wire(), "n": n}


def decode_generate_response(data: dict) -> list[str]:
    outputs = data.get("outputs")
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ProtocolError(f"generate response missing string list 'outputs': {data!r}")
    return outputs


def encode_qa_request(question: str, paragraph: str) -> dict:
    return {"question": question, "paragraph": paragraph}


def decode_qa_response(data: dict) -> QaScore:
    try:
        answer = data["answer"]
        confidence = float(data["confidence"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed qa_score response: {data!r}") from exc
    if not isinstance(answer, str) or not 0.0 <= confidence <= 1.0:
        raise ProtocolError(f"qa_score response out of range: {data!r}")
    return QaScore(answer_span=answer, confidence=confidence)


def encode_instruct_request(prompt: str) -> dict:
    return {"prompt": prompt}


def decode_instruct_response(data: dict) -> str:
    text = data.get("text")
    if not isinstance(text, str):
        raise ProtocolError(f"instruct response missing 'text': {data!r}")
    return text


def encode_spans_request(paragraph: str, top_k: int) -> dict:
    return {"paragraph": paragraph, "top_k": top_k}


def decode_spans_response(data: dict) -> list[ExtractedSpan]:
    raw = data.get("spans")
    if not isinstance(raw, list):
        raise ProtocolError(f"extract_spans response missing 'spans': {data!r}")
    spans = []
    for item in raw:
        try:
            span = ExtractedSpan(
                text=item["text"],
                start=int(item["start"]),
                end=int(item["end"]),
                probability=float(item["probability"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed span entry: {item!r}") from exc
        if span.end <= span.start or not 0.0 <= span.probability <= 1.0:
            raise ProtocolError(f"span entry out of range: {item!r}")
        spans.append(span)
    return spans


# --- transports ---

class TransportFailure(Exception):
    """Retryable failure: timeout or connection error."""


_http_clients: dict[str, httpx.Client] = {}
_http_lock = threading.Lock()


def _http_client(base_url: str) -> httpx.Client:
    with _http_lock:
        client = _http_clients.get(base_url)
        if client is None:
            client = httpx.Client(base_url=base_url)
            _http_clients[base_url] = client
        return client


def _post_http(handle: BackendHandle, path: str, body: bytes) -> tuple[int, bytes]:
    headers = {"content-type": "application/json"}
    if handle.auth_token:
        headers["authorization"] = f"Bearer {handle.auth_token}"
    try:
        resp = _http_client(handle.endpoint).post(
            path, content=body, headers=headers, timeout=handle.timeout_ms / 1000.0,
        )
    except (httpx.TimeoutException, httpx.ConnectError, httpx.NetworkError) as exc:
        raise TransportFailure(str(exc)) from exc
    return resp.status_code, resp.content


def _post(handle: BackendHandle, payload: dict) -> dict:
    path = ROUTES[handle.role]
    body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
    attempts = handle.max_retries + 1
    last_failure = None
    for attempt in range(attempts):
        if attempt:
            time.sleep(handle.backoff_base_s * (2 ** (attempt - 1)))
        try:
            if handle.is_mock:
                from .mocks import mock_server

                status, resp_body = mock_server(handle.endpoint).post(path, body)
            else:
                status, resp_body = _post_http(handle, path, body)
        except TransportFailure as exc:
            last_failure = exc
            continue
        if not 200 <= status < 300:
            excerpt = resp_body[:200].decode("utf-8", errors="replace")
            raise ProtocolError(
                f"{handle.role} backend returned {status}: {excerpt}",
                status=status,
                body=excerpt,
            )
        try:
            return json.loads(resp_body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"{handle.role} backend sent invalid JSON: {exc}") from exc
    raise BackendUnavailable(
        f"{handle.role} backend unreachable after {attempts} attempts: {last_failure}",
        attempts=attempts,
        endpoint=handle.endpoint,
    )


# --- client operations ---

def generate(handle: BackendHandle, prompt: str, cfg: DecodeConfig, n: int = 1) -> list[str]:
    """Ask the generator for up to n outputs conditioned on the prompt."""
    if handle.role != ROLE_GENERATOR:
        raise ValueError(f"generate requires a generator handle, got {handle.role}")
    if n < 1:
        raise ValueError("n must be >= 1")
    data = _post(handle, encode_generate_request(prompt, cfg, n))
    return [out for out in decode_generate_response(data) if out][:n]


def qa_confidence(handle: BackendHandle, question: str, paragraph: str) -> QaScore:
    """Extractive-QA answer span and confidence for (question, paragraph)."""
    if handle.role != ROLE_QA_SCORER:
        raise ValueError(f"qa_confidence requires a qa_scorer handle, got {handle.role}")
    return decode_qa_response(_post(handle, encode_qa_request(question, paragraph)))


def instruct(handle: BackendHandle, prompt: str) -> str:
    """Raw reply of the instruction-following model, unmodified."""
    if handle.role != ROLE_INSTRUCT:
        raise ValueError(f"instruct requires an instruct handle, got {handle.role}")
    return decode_instruct_response(_post(handle, encode_instruct_request(prompt)))


def extract_spans(handle: BackendHandle, paragraph: str, top_k: int) -> list[ExtractedSpan]:
    """Answer-span candidates, sorted by descending probability client-side."""
    if handle.role != ROLE_SPAN_EXTRACTOR:
        raise ValueError(f"extract_spans requires a span_extractor handle, got {handle.role}")
    spans = decode_spans_response(_post(handle, encode_spans_request(paragraph, top_k)))
    spans.sort(key=lambda s: (-s.probability, s.start, s.text))
    return spans[:top_k]
