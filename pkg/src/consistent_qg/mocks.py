"""Deterministic, fixture-driven mock implementations of the backend roles.

These are shipped components, not test shims: the acceptance suite, the CLI,
and demo configurations all run against them. A mock endpoint looks like
"mock:<name-or-path>"; the name resolves through the in-process registry,
a path loads a fixture JSON file. Every response is a pure function of
(fixture, request bytes), derived where needed from a seeded hash chain, so
replies are byte-identical across runs and across call orderings.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

_WORDS_RE = re.compile(r"\S+")

_QUESTION_TEMPLATES = (
    "What does {} mean for the wider story?",
    "How could {} change what happens next?",
    "Why is {} drawing so much attention?",
    "What should readers know about {}?",
)


def _chain(*parts) -> int:
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big")


def _unit(*parts) -> float:
    return _chain(*parts) / 2.0**64


@dataclass(frozen=True)
class RecordedRequest:
    path: str
    body: bytes

    def json(self) -> dict:
        return json.loads(self.body.decode("utf-8"))


class MockBackendServer:
    """Serves all four backend routes from one fixture."""

    def __init__(self, fixture: dict | None = None):
        self.fixture = fixture or {}
        self.seed = self.fixture.get("seed", 0)
        self.separator = self.fixture.get("separator", " [SEP] ")
        self.requests: list[RecordedRequest] = []
        self._fail_remaining = dict(self.fixture.get("fail_first", {}))
        self._lock = threading.Lock()

    # -- plumbing --

    def post(self, path: str, body: bytes) -> tuple[int, bytes]:
        with self._lock:
            self.requests.append(RecordedRequest(path=path, body=bytes(body)))
        handler = {
            "/v1/generate": self._generate,
            "/v1/qa_score": self._qa_score,
            "/v1/instruct": self._instruct,
            "/v1/extract_spans": self._extract_spans,
        }.get(path)
        if handler is None:
            return 404, b'{"error": "unknown route"}'
        self._maybe_fail(path)
        try:
            payload = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return 400, b'{"error": "invalid JSON body"}'
        try:
            response = handler(payload)
        except (KeyError, TypeError, ValueError) as exc:
            return 400, json.dumps({"error": str(exc)}).encode("utf-8")
        return 200, json.dumps(response, ensure_ascii=False).encode("utf-8")

    def _maybe_fail(self, path: str):
        from .backends import TransportFailure

        role = path.rsplit("/", 1)[-1]
        alias = {"generate": "generator", "qa_score": "qa_scorer",
                 "instruct": "instruct", "extract_spans": "span_extractor"}[role]
        with self._lock:
            remaining = self._fail_remaining.get(alias, 0)
            if remaining > 0:
                self._fail_remaining[alias] = remaining - 1
                raise TransportFailure(f"simulated outage of {alias}")

    def requests_for(self, path: str) -> list[RecordedRequest]:
        with self._lock:
            return [r for r in self.requests if r.path == path]

    # -- role behaviors --

    def _generate(self, payload: dict) -> dict:
        prompt = payload["prompt"]
        n = int(payload["n"])
        section = self.fixture.get("generator", {})
        hit = section.get("by_prompt", {}).get(prompt)
        if hit is None:
            code = prompt.split(self.separator, 1)[0]
            hit = section.get("by_code", {}).get(code)
        if hit is not None:
            outputs = [hit] if isinstance(hit, str) else list(hit)
            return {"outputs": outputs[:n]}
        decode_seed = payload.get("decode", {}).get("seed")
        code = prompt.split(self.separator, 1)[0]
        subject = code if len(code) <= 60 else code[:60].rsplit(" ", 1)[0]
        outputs = []
        for i in range(n):
            idx = (_chain(self.seed, decode_seed, "gen", prompt) + i) % len(_QUESTION_TEMPLATES)
            outputs.append(_QUESTION_TEMPLATES[idx].format(subject))
        return {"outputs": outputs}

    def _qa_score(self, payload: dict) -> dict:
        question, paragraph = payload["question"], payload["paragraph"]
        section = self.fixture.get("qa_scorer", {})
        hit = section.get("by_question", {}).get(question)
        if hit is not None:
            return {"answer": hit.get("answer", ""), "confidence": float(hit["confidence"])}
        if section.get("strict"):
            return {"answer": "", "confidence": 0.0}
        confidence = _unit(self.seed, "qa", question, paragraph)
        if confidence < 0.1:
            answer = ""
        else:
            answer = paragraph[:60]
            if len(paragraph) > 60:
                answer = answer.rsplit(" ", 1)[0]
        return {"answer": answer, "confidence": confidence}

    def _instruct(self, payload: dict) -> dict:
        prompt = payload["prompt"]
        section = self.fixture.get("instruct", {})
        hit = section.get("by_prompt", {}).get(prompt)
        if hit is not None:
            return {"text": hit}
        for needle in sorted(section.get("by_contains", {})):
            if needle in prompt:
                return {"text": section["by_contains"][needle]}
        if "answerable" in prompt:
            yes_rate = float(section.get("yes_rate", 0.7))
            verdict = "Yes" if _unit(self.seed, "verdict", prompt) < yes_rate else "No"
            return {"text": verdict}
        words = _WORDS_RE.findall(prompt)
        stem = " ".join(words[-8:]).rstrip(".!?")
        return {"text": f"What does it mean that {stem.lower()}?"}

    def _extract_spans(self, payload: dict) -> dict:
        paragraph, top_k = payload["paragraph"], int(payload["top_k"])
        section = self.fixture.get("span_extractor", {})
        if "spans" in section:
            spans = sorted(section["spans"], key=lambda s: -float(s["probability"]))
            return {"spans": spans[:top_k]}
        words = list(_WORDS_RE.finditer(paragraph))
        spans = []
        seen = set()
        for i in range(top_k * 2):
            if not words:
                break
            start_idx = _chain(self.seed, "span", paragraph, i) % len(words)
            length = 1 + _chain(self.seed, "len", paragraph, i) % 3
            chunk = words[start_idx:start_idx + length]
            start, end = chunk[0].start(), chunk[-1].end()
            if (start, end) in seen:
                continue
            seen.add((start, end))
            spans.append({
                "text": paragraph[start:end],
                "start": start,
                "end": end,
                "probability": round(0.25 + 0.75 * _unit(self.seed, "p", paragraph, i), 6),
            })
            if len(spans) == top_k:
                break
        spans.sort(key=lambda s: -s["probability"])
        return {"spans": spans}


_registry: dict[str, dict] = {}
_servers: dict[str, MockBackendServer] = {}
_registry_lock = threading.Lock()


def register_fixture(name: str, fixture: dict) -> None:
    """Make a fixture addressable as endpoint "mock:<name>"."""
    with _registry_lock:
        _registry[name] = fixture
        _servers.pop(f"mock:{name}", None)


def reset_mock_servers() -> None:
    """Drop cached server state (recorded requests, outage counters)."""
    with _registry_lock:
        _servers.clear()


def mock_server(endpoint: str) -> MockBackendServer:
    """The shared server instance behind a "mock:..." endpoint."""
    if not endpoint.startswith("mock:"):
        raise ConfigError(f"not a mock endpoint: {endpoint!r}")
    with _registry_lock:
        server = _servers.get(endpoint)
        if server is not None:
            return server
        spec = endpoint[len("mock:"):]
        if spec in _registry:
            fixture = _registry[spec]
        elif spec in ("", "default"):
            fixture = {}
        elif Path(spec).is_file():
            fixture = json.loads(Path(spec).read_text("utf-8"))
        else:
            raise ConfigError(f"unknown mock fixture: {spec!r}")
        server = MockBackendServer(fixture)
        _servers[endpoint] = server
        return server


def create_mock_backend_app(fixture: dict | None = None):
    """An ASGI app exposing one fixture over the real wire routes."""
    from starlette.applications import Starlette
    from starlette.responses import Response
    from starlette.routing import Route

    server = MockBackendServer(fixture)

    async def dispatch(request):
        body = await request.body()
        status, payload = server.post(request.url.path, body)
        return Response(content=payload, status_code=status, media_type="application/json")

    app = Starlette(routes=[Route("/v1/{route}", dispatch, methods=["POST"])])
    app.state.mock_server = server
    return app
