"""Control-code selection: the salient phrases that steer question generation.

At inference time codes come from two sources merged together: statistical
keyphrases of the paragraph and answer-span candidates from an extraction
backend. At training-data time they come from the target question itself.
Codes sourced from the paragraph are guaranteed to occur verbatim in it
(case-insensitive); that guarantee is what keeps generated questions tied
to concepts actually present in the text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InputError, NoCodeExtractable
from .models import Paragraph
from .textanalysis import extract_keyphrases, levenshtein_similarity, tokenize

SPAN_TOKEN_CAP = 30

SOURCE_KEYWORD = "keyword"
SOURCE_SPAN = "span"
SOURCE_QUESTION = "question_derived"
SOURCE_MANUAL = "manual"


@dataclass(frozen=True)
class ControlCode:
    phrase: str
    source: str
    salience: float
    origin_offsets: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "phrase": self.phrase,
            "source": self.source,
            "salience": self.salience,
            "origin_offsets": list(self.origin_offsets) if self.origin_offsets else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControlCode":
        offsets = data.get("origin_offsets")
        return cls(
            phrase=data["phrase"],
            source=data["source"],
            salience=float(data["salience"]),
            origin_offsets=tuple(offsets) if offsets else None,
        )


@dataclass(frozen=True)
class ExtractedSpan:
    text: str
    start: int
    end: int
    probability: float
    truncated: bool = False


@dataclass(frozen=True)
class CodeSelectionConfig:
    max_codes: int = 5
    top_k_keywords: int = 3
    top_k_spans: int = 3
    max_ngram: int = 3
    dedup_similarity: float = 0.9


def occurs_verbatim(phrase: str, text: str) -> bool:
    """Case-insensitive occurrence check, tolerant of whitespace runs."""
    words = phrase.split()
    if not words:
        return False
    pattern = r"\s+".join(re.escape(w) for w in words)
    return re.search(pattern, text, re.IGNORECASE) is not None


def _truncate_span(span: ExtractedSpan) -> ExtractedSpan:
    tokens = tokenize(span.text)
    if len(tokens) <= SPAN_TOKEN_CAP:
        return span
    cut = tokens[SPAN_TOKEN_CAP - 1].end
    return ExtractedSpan(
        text=span.text[:cut],
        start=span.start,
        end=span.start + cut,
        probability=span.probability,
        truncated=True,
    )


def spans_from_backend(paragraph: Paragraph, extractor, top_k: int) -> list[ExtractedSpan]:
    """Answer-span candidates from the extraction backend, most probable first.

    Spans longer than the 30-token cap are cut at a token boundary and
    flagged as truncated.
    """
    if top_k <= 0:
        return []
    from . import backends

    spans = backends.extract_spans(extractor, paragraph.text, top_k)
    spans = [_truncate_span(s) for s in spans]
    spans.sort(key=lambda s: (-s.probability, s.start, s.text))
    return spans[:top_k]


def _dedup_match(a: str, b: str, threshold: float) -> bool:
    a_low, b_low = a.casefold(), b.casefold()
    return a_low in b_low or b_low in a_low or levenshtein_similarity(a_low, b_low) >= threshold


def select_control_codes(
    paragraph: Paragraph,
    extractor=None,
    cfg: CodeSelectionConfig = CodeSelectionConfig(),
) -> list[ControlCode]:
    """Merge span and keyword candidates into at most cfg.max_codes codes.

    Spans are considered first (they carry a calibrated probability), then
    keywords in salience order; a candidate matching an already kept code by
    case-insensitive containment or high similarity is dropped. Without an
    extractor the selection degrades to keywords only. Every returned code
    occurs verbatim in the paragraph.
    """
    if not paragraph.text.strip():
        raise InputError("paragraph text is empty")

    candidates: list[ControlCode] = []
    if extractor is not None:
        for span in spans_from_backend(paragraph, extractor, cfg.top_k_spans):
            if not occurs_verbatim(span.text, paragraph.text):
                continue
            candidates.append(ControlCode(
                phrase=span.text,
                source=SOURCE_SPAN,
                salience=span.probability,
                origin_offsets=(span.start, span.end),
            ))
    keyphrases = extract_keyphrases(
        paragraph.text,
        max_ngram=cfg.max_ngram,
        top_k=cfg.top_k_keywords,
        dedup_threshold=cfg.dedup_similarity,
    )
    for rank, kp in enumerate(keyphrases):
        if not occurs_verbatim(kp.phrase, paragraph.text):
            continue
        candidates.append(ControlCode(
            phrase=kp.phrase,
            source=SOURCE_KEYWORD,
            salience=1.0 - rank / cfg.top_k_keywords,
            origin_offsets=(kp.start, kp.end),
        ))

    selected: list[ControlCode] = []
    for cand in candidates:
        if any(_dedup_match(cand.phrase, kept.phrase, cfg.dedup_similarity) for kept in selected):
            continue
        selected.append(cand)
        if len(selected) == cfg.max_codes:
            break
    return selected


def code_from_question(question: str, max_ngram: int = 3) -> ControlCode:
    """Top keyphrase of a question, used as the training-side control code."""
    if not question.strip():
        raise InputError("question is empty")
    phrases = extract_keyphrases(question, max_ngram=max_ngram, top_k=1)
    if not phrases:
        raise NoCodeExtractable(f"no content token in question: {question!r}")
    return ControlCode(phrase=phrases[0].phrase, source=SOURCE_QUESTION, salience=1.0)
