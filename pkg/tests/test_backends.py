import json
import time

import pytest
from fastapi import FastAPI
from hypothesis import given, settings, strategies as st

from consistent_qg import backends as be
from consistent_qg import mocks
from consistent_qg.errors import BackendUnavailable, ConfigError, ProtocolError

from helpers import ServerThread


def handle_for(role, name, fixture=None, **kwargs):
    if fixture is not None:
        mocks.register_fixture(name, fixture)
    return be.BackendHandle(role=role, endpoint=f"mock:{name}", **kwargs)


class TestDecodeConfig:
    def test_default_wire_serialization(self):
        assert be.DecodeConfig().to_wire() == {
            "strategy": "top_k_sampling",
            "k": 5,
            "temperature": 0.8,
            "no_repeat_ngram_size": 2,
        }

    def test_seed_included_when_set(self):
        assert be.DecodeConfig(seed=11).to_wire()["seed"] == 11

    def test_invalid_sampling_params(self):
        with pytest.raises(ConfigError):
            be.DecodeConfig(strategy="top_k_sampling", k=0)
        with pytest.raises(ConfigError):
            be.DecodeConfig(temperature=0.0)
        with pytest.raises(ConfigError):
            be.DecodeConfig(strategy="beam")

    def test_greedy_allows_any_k(self):
        cfg = be.DecodeConfig(strategy="greedy", k=1, temperature=1.0)
        assert cfg.to_wire()["strategy"] == "greedy"

    @settings(max_examples=50, deadline=None)
    @given(k=st.integers(1, 50), temperature=st.floats(0.05, 5.0),
           ngram=st.integers(0, 6), seed=st.one_of(st.none(), st.integers(0, 2**31)))
    def test_wire_round_trip(self, k, temperature, ngram, seed):
        cfg = be.DecodeConfig(k=k, temperature=temperature,
                              no_repeat_ngram_size=ngram, seed=seed)
        assert be.DecodeConfig.from_wire(cfg.to_wire()) == cfg


class TestCodecRoundTrips:
    @settings(max_examples=50, deadline=None)
    @given(prompt=st.text(max_size=80), n=st.integers(1, 8))
    def test_generate_request(self, prompt, n):
        payload = be.encode_generate_request(prompt, be.DecodeConfig(), n)
        again = json.loads(json.dumps(payload, ensure_ascii=False))
        assert again == payload
        assert again["prompt"] == prompt and again["n"] == n

    @settings(max_examples=50, deadline=None)
    @given(outputs=st.lists(st.text(max_size=40), max_size=5))
    def test_generate_response(self, outputs):
        assert be.decode_generate_response({"outputs": outputs}) == outputs

    @settings(max_examples=50, deadline=None)
    @given(answer=st.text(max_size=40), confidence=st.floats(0.0, 1.0))
    def test_qa_response(self, answer, confidence):
        score = be.decode_qa_response({"answer": answer, "confidence": confidence})
        assert score.answer_span == answer
        assert score.confidence == confidence

    @settings(max_examples=50, deadline=None)
    @given(question=st.text(max_size=60), paragraph=st.text(max_size=120))
    def test_qa_request(self, question, paragraph):
        payload = be.encode_qa_request(question, paragraph)
        assert json.loads(json.dumps(payload, ensure_ascii=False)) == {
            "question": question, "paragraph": paragraph,
        }

    def test_span_response_round_trip(self):
        wire = {"spans": [{"text": "once-niche world", "start": 23, "end": 39,
                           "probability": 0.8}]}
        spans = be.decode_spans_response(wire)
        assert spans[0].text == "once-niche world"
        assert spans[0].probability == 0.8

    def test_malformed_payloads_rejected(self):
        with pytest.raises(ProtocolError):
            be.decode_generate_response({"output": ["x"]})
        with pytest.raises(ProtocolError):
            be.decode_qa_response({"answer": "x"})
        with pytest.raises(ProtocolError):
            be.decode_instruct_response({})
        with pytest.raises(ProtocolError):
            be.decode_spans_response({"spans": [{"text": "x", "start": 5, "end": 2,
                                                 "probability": 0.5}]})


class TestGenerate:
    def test_fixture_keyed_by_prompt(self):
        handle = handle_for("generator", "genfx", {
            "generator": {"by_prompt": {"code [SEP] body": ["Fixed question?"]}},
        })
        out = be.generate(handle, "code [SEP] body", be.DecodeConfig(), n=3)
        assert out == ["Fixed question?"]

    def test_greedy_n1_exactly_one(self):
        handle = handle_for("generator", "genfx2", {"seed": 3})
        cfg = be.DecodeConfig(strategy="greedy", k=1, temperature=1.0)
        out = be.generate(handle, "vaccine push [SEP] text", cfg, n=1)
        assert len(out) == 1 and out[0]

    def test_default_decode_on_the_wire(self):
        handle = handle_for("generator", "genfx3", {"seed": 3})
        be.generate(handle, "p [SEP] q", be.DecodeConfig(), n=1)
        request = mocks.mock_server(handle.endpoint).requests_for("/v1/generate")[-1]
        assert request.json()["decode"] == {
            "strategy": "top_k_sampling", "k": 5,
            "temperature": 0.8, "no_repeat_ngram_size": 2,
        }

    def test_role_check(self):
        handle = handle_for("qa_scorer", "rolefx", {})
        with pytest.raises(ValueError):
            be.generate(handle, "x", be.DecodeConfig(), n=1)


class TestQaConfidence:
    BITCOIN_Q3 = "How is digital money showing up via art, sports, entertainment and media?"

    def test_fixture_table(self):
        handle = handle_for("qa_scorer", "qafx", {"qa_scorer": {"by_question": {
            self.BITCOIN_Q3: {"answer": "via art, sports, entertainment and media.",
                              "confidence": 0.8},
        }}})
        score = be.qa_confidence(handle, self.BITCOIN_Q3, "bitcoin paragraph")
        assert score.answer_span == "via art, sports, entertainment and media."
        assert score.confidence == 0.8

    def test_strict_mock_unknown_pair_zero(self):
        handle = handle_for("qa_scorer", "strictfx", {"qa_scorer": {"strict": True}})
        assert be.qa_confidence(handle, "unknown?", "paragraph").confidence == 0.0

    def test_confidence_bounds(self):
        good = handle_for("qa_scorer", "boundfx", {"qa_scorer": {"by_question": {
            "q": {"answer": "a", "confidence": 1.0},
        }}})
        assert be.qa_confidence(good, "q", "p").confidence == 1.0
        bad = handle_for("qa_scorer", "badfx", {"qa_scorer": {"by_question": {
            "q": {"answer": "a", "confidence": 1.2},
        }}})
        with pytest.raises(ProtocolError):
            be.qa_confidence(bad, "q", "p")


class TestInstruct:
    def test_fixture_yes(self):
        handle = handle_for("instruct", "insfx", {"instruct": {"by_prompt": {"P": "Yes"}}})
        assert be.instruct(handle, "P") == "Yes"

    def test_verbatim_reply_not_normalized(self):
        handle = handle_for("instruct", "insfx2", {"instruct": {"by_prompt": {"P": "no."}}})
        assert be.instruct(handle, "P") == "no."

    def test_empty_reply_is_not_an_error(self):
        handle = handle_for("instruct", "insfx3", {"instruct": {"by_prompt": {"P": ""}}})
        assert be.instruct(handle, "P") == ""


class TestRetries:
    def test_backend_unavailable_after_retries(self):
        handle = handle_for("generator", "flaky", {"fail_first": {"generator": 99}},
                            max_retries=2, backoff_base_s=0.001)
        with pytest.raises(BackendUnavailable) as exc:
            be.generate(handle, "x", be.DecodeConfig(), n=1)
        assert exc.value.attempts == 3

    def test_recovers_within_retry_budget(self):
        handle = handle_for("generator", "flaky2",
                            {"seed": 1, "fail_first": {"generator": 2}},
                            max_retries=2, backoff_base_s=0.001)
        out = be.generate(handle, "x [SEP] y", be.DecodeConfig(), n=1)
        assert len(out) == 1

    def test_exponential_backoff_timing(self):
        handle = handle_for("generator", "flaky3", {"fail_first": {"generator": 99}},
                            max_retries=2, backoff_base_s=0.05)
        start = time.monotonic()
        with pytest.raises(BackendUnavailable):
            be.generate(handle, "x", be.DecodeConfig(), n=1)
        elapsed = time.monotonic() - start
        # backoff sum = 0.05 + 0.10
        assert 0.14 <= elapsed < 1.0


class TestMockDeterminism:
    def test_byte_identical_responses(self):
        body = json.dumps({"question": "Why?", "paragraph": "Because."}).encode()
        first = mocks.MockBackendServer({"seed": 42}).post("/v1/qa_score", body)
        second = mocks.MockBackendServer({"seed": 42}).post("/v1/qa_score", body)
        assert first == second

    def test_different_seeds_differ(self):
        body = json.dumps({"question": "Why?", "paragraph": "Because."}).encode()
        a = mocks.MockBackendServer({"seed": 1}).post("/v1/qa_score", body)
        b = mocks.MockBackendServer({"seed": 2}).post("/v1/qa_score", body)
        assert a != b

    def test_unknown_fixture_name(self):
        handle = be.BackendHandle(role="generator", endpoint="mock:no-such-fixture")
        with pytest.raises(ConfigError):
            be.generate(handle, "x", be.DecodeConfig(), n=1)


class TestHttpTransport:
    def test_round_trip_over_real_socket(self):
        app = mocks.create_mock_backend_app({
            "generator": {"by_prompt": {"code [SEP] text": ["Over the wire?"]}},
        })
        with ServerThread(app) as server:
            handle = be.BackendHandle(role="generator", endpoint=server.base_url)
            out = be.generate(handle, "code [SEP] text", be.DecodeConfig(), n=1)
            assert out == ["Over the wire?"]
            recorded = app.state.mock_server.requests_for("/v1/generate")
            assert json.loads(recorded[-1].body)["prompt"] == "code [SEP] text"

    def test_non_2xx_raises_protocol_error(self):
        app = FastAPI()

        @app.post("/v1/generate")
        def broken():
            from fastapi.responses import JSONResponse

            return JSONResponse(status_code=500, content={"error": "boom"})

        with ServerThread(app) as server:
            handle = be.BackendHandle(role="generator", endpoint=server.base_url)
            with pytest.raises(ProtocolError) as exc:
                be.generate(handle, "x", be.DecodeConfig(), n=1)
            assert exc.value.status == 500
            assert "boom" in exc.value.body

    def test_connection_refused_becomes_unavailable(self):
        from helpers import free_port

        dead = f"http://127.0.0.1:{free_port()}"
        handle = be.BackendHandle(role="instruct", endpoint=dead,
                                  max_retries=1, backoff_base_s=0.001, timeout_ms=500)
        with pytest.raises(BackendUnavailable) as exc:
            be.instruct(handle, "hello")
        assert exc.value.attempts == 2

    def test_bearer_token_header_sent(self):
        captured = {}
        app = FastAPI()

        @app.post("/v1/instruct")
        async def echo(request_data: dict, ):
            return {"text": "ok"}

        from fastapi import Request

        @app.middleware("http")
        async def capture(request: Request, call_next):
            captured["auth"] = request.headers.get("authorization")
            return await call_next(request)

        with ServerThread(app) as server:
            handle = be.BackendHandle(role="instruct", endpoint=server.base_url,
                                      auth_token="sekrit")
            assert be.instruct(handle, "hello") == "ok"
        assert captured["auth"] == "Bearer sekrit"
