import random

import pytest

from consistent_qg import mocks
from consistent_qg.backends import BackendHandle
from consistent_qg.codes import (
    CodeSelectionConfig,
    ControlCode,
    SPAN_TOKEN_CAP,
    code_from_question,
    occurs_verbatim,
    select_control_codes,
    spans_from_backend,
)
from consistent_qg.errors import BackendUnavailable, InputError, NoCodeExtractable
from consistent_qg.models import Paragraph
from consistent_qg.textanalysis import tokenize

from oracles import brute_force_keyphrases

BITCOIN_TEXT = (
    "Bitcoins have turned a once-niche world of digital money into a mainstream "
    "obsession, and the people who bought in early have made fortunes. The currency "
    "now shows up via art, sports, entertainment and media, where teams and "
    "celebrities promote it to new audiences."
)


def span_extractor_handle(fixture, name="spanfx"):
    mocks.register_fixture(name, fixture)
    return BackendHandle(role="span_extractor", endpoint=f"mock:{name}")


def fixed_spans_fixture(spans):
    return {"span_extractor": {"spans": spans}}


class TestSpansFromBackend:
    def test_echoes_mock_spans(self):
        text = "At the current rate of COVID-19 vaccination, experts say, it will take months."
        handle = span_extractor_handle(fixed_spans_fixture([
            {"text": "current rate of COVID-19 vaccination", "start": 7, "end": 43,
             "probability": 0.9},
        ]))
        spans = spans_from_backend(Paragraph(id="p", text=text), handle, top_k=3)
        assert len(spans) == 1
        assert spans[0].text == "current rate of COVID-19 vaccination"
        assert spans[0].probability == 0.9
        assert not spans[0].truncated

    def test_top_k_zero(self):
        handle = span_extractor_handle(fixed_spans_fixture([]))
        assert spans_from_backend(Paragraph(id="p", text="anything"), handle, top_k=0) == []

    def test_descending_probability_order(self):
        handle = span_extractor_handle(fixed_spans_fixture([
            {"text": "Bitcoins", "start": 0, "end": 8, "probability": 0.6},
            {"text": "once-niche world", "start": 23, "end": 39, "probability": 0.8},
        ]))
        spans = spans_from_backend(Paragraph(id="p", text=BITCOIN_TEXT), handle, top_k=5)
        assert [s.text for s in spans] == ["once-niche world", "Bitcoins"]

    def test_overlong_span_truncated_at_token_boundary(self):
        long_text = " ".join(f"word{i}" for i in range(40))
        handle = span_extractor_handle(fixed_spans_fixture([
            {"text": long_text, "start": 0, "end": len(long_text), "probability": 0.5},
        ]))
        spans = spans_from_backend(Paragraph(id="p", text=long_text), handle, top_k=1)
        assert spans[0].truncated
        assert len(tokenize(spans[0].text)) == SPAN_TOKEN_CAP
        assert not spans[0].text.endswith(" ")

    def test_backend_failure_propagates(self):
        mocks.register_fixture("downfx", {"fail_first": {"span_extractor": 99}})
        handle = BackendHandle(role="span_extractor", endpoint="mock:downfx",
                               max_retries=1, backoff_base_s=0.001)
        with pytest.raises(BackendUnavailable) as exc:
            spans_from_backend(Paragraph(id="p", text="text"), handle, top_k=2)
        assert exc.value.attempts == 2


class TestSelectControlCodes:
    def test_keywords_only_degraded_path(self):
        paragraph = Paragraph(id="p", text="The vaccine push accelerated.")
        codes = select_control_codes(paragraph, None, CodeSelectionConfig())
        assert codes
        assert all(c.source == "keyword" for c in codes)

    def test_two_content_phrases_two_codes(self):
        paragraph = Paragraph(id="p", text="A vaccine for the hospital.")
        codes = select_control_codes(paragraph, None, CodeSelectionConfig())
        assert sorted(c.phrase for c in codes) == ["hospital", "vaccine"]

    def test_span_wins_dedup_tie(self):
        paragraph = Paragraph(id="p", text="The vaccine push accelerated this week.")
        handle = span_extractor_handle(fixed_spans_fixture([
            {"text": "vaccine push", "start": 4, "end": 16, "probability": 0.7},
        ]))
        codes = select_control_codes(paragraph, handle, CodeSelectionConfig())
        matches = [c for c in codes if c.phrase.casefold() == "vaccine push"]
        assert len(matches) == 1
        assert matches[0].source == "span"
        assert matches[0].salience == 0.7

    def test_fan_out_from_bitcoin_fixture(self):
        paragraph = Paragraph(id="p", text=BITCOIN_TEXT)
        handle = span_extractor_handle(fixed_spans_fixture([
            {"text": "once-niche world", "start": 23, "end": 39, "probability": 0.8},
            {"text": "Bitcoins", "start": 0, "end": 8, "probability": 0.6},
        ]))
        codes = select_control_codes(
            paragraph, handle, CodeSelectionConfig(max_codes=5, top_k_spans=2),
        )
        assert len(codes) >= 2
        assert codes[0].phrase == "once-niche world"
        assert codes[1].phrase == "Bitcoins"

    def test_empty_paragraph_rejected(self):
        with pytest.raises(InputError):
            select_control_codes(Paragraph(id="p", text="  "), None)

    def test_max_codes_cap(self, doc_factory):
        rng = random.Random(3)
        for _ in range(10):
            paragraph = Paragraph(id="p", text=doc_factory(rng))
            for cap in (1, 2, 5):
                cfg = CodeSelectionConfig(max_codes=cap, top_k_keywords=6)
                assert len(select_control_codes(paragraph, None, cfg)) <= cap

    def test_faithfulness_every_code_verbatim(self, doc_factory):
        rng = random.Random(7)
        for i in range(15):
            paragraph = Paragraph(id=f"p{i}", text=doc_factory(rng))
            handle = span_extractor_handle({"seed": i}, name=f"hashfx{i}")
            for code in select_control_codes(paragraph, handle, CodeSelectionConfig()):
                assert code.source in ("keyword", "span")
                assert occurs_verbatim(code.phrase, paragraph.text)

    def test_nonverbatim_span_dropped(self):
        paragraph = Paragraph(id="p", text="The vaccine push accelerated.")
        handle = span_extractor_handle(fixed_spans_fixture([
            {"text": "flu season", "start": 0, "end": 10, "probability": 0.9},
        ]))
        codes = select_control_codes(paragraph, handle, CodeSelectionConfig())
        assert all(c.phrase != "flu season" for c in codes)

    def test_keyword_entries_subset_of_keyword_only_run(self, doc_factory):
        rng = random.Random(31)
        for i in range(10):
            paragraph = Paragraph(id=f"p{i}", text=doc_factory(rng))
            handle = span_extractor_handle({"seed": 100 + i}, name=f"subsetfx{i}")
            mixed = select_control_codes(paragraph, handle, CodeSelectionConfig())
            alone = select_control_codes(paragraph, None, CodeSelectionConfig())
            keyword_phrases = {c.phrase for c in mixed if c.source == "keyword"}
            assert keyword_phrases <= {c.phrase for c in alone}

    def test_deterministic_with_fixed_backend(self):
        paragraph = Paragraph(id="p", text=BITCOIN_TEXT)
        handle = span_extractor_handle({"seed": 5})
        first = select_control_codes(paragraph, handle, CodeSelectionConfig())
        second = select_control_codes(paragraph, handle, CodeSelectionConfig())
        assert first == second

    def test_salience_in_unit_interval(self, doc_factory):
        rng = random.Random(43)
        for i in range(10):
            paragraph = Paragraph(id=f"p{i}", text=doc_factory(rng))
            handle = span_extractor_handle({"seed": 200 + i}, name=f"salfx{i}")
            for code in select_control_codes(paragraph, handle, CodeSelectionConfig()):
                assert 0.0 <= code.salience <= 1.0


class TestCodeFromQuestion:
    def test_trigram_from_question(self):
        code = code_from_question("Where do presidential campaign donations actually get spent?")
        assert code.phrase == "presidential campaign donations"
        assert code.source == "question_derived"

    def test_stopword_only_question(self):
        with pytest.raises(NoCodeExtractable):
            code_from_question("Why?")

    def test_empty_question(self):
        with pytest.raises(InputError):
            code_from_question("   ")

    def test_matches_extractor_oracle(self):
        question = "How come bluetooth is so much slower than Wi-Fi?"
        reference = brute_force_keyphrases(question, max_ngram=3, top_k=1)
        code = code_from_question(question)
        assert code.phrase.casefold() == reference[0][0]
        assert "bluetooth" in code.phrase.casefold()


class TestControlCodeSerialization:
    def test_round_trip(self):
        code = ControlCode(phrase="vaccine push", source="span", salience=0.7,
                           origin_offsets=(4, 16))
        assert ControlCode.from_dict(code.to_dict()) == code

    def test_round_trip_no_offsets(self):
        code = ControlCode(phrase="x", source="manual", salience=1.0)
        assert ControlCode.from_dict(code.to_dict()) == code
