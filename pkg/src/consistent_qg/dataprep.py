"""Training-data preparation and evaluation-set validation.

Long-form QA pairs stream in, training triples (control code, answer
passage, target question) stream out; every input line becomes exactly one
triple or one reject entry, so counts are conserved. The control code is
the top keyphrase of the target question, which makes the mapping
re-derivable from the output alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .codes import code_from_question
from .errors import InputError, NoCodeExtractable
from .models import Paragraph
from .textanalysis import tokenize

DOMAINS = ("science", "climate", "technology", "health", "nyregion", "business")

# Per-domain sizes of a conforming full evaluation set.
CANONICAL_DOMAIN_COUNTS = {
    "science": 55,
    "climate": 66,
    "technology": 98,
    "health": 110,
    "nyregion": 100,
    "business": 100,
}
CANONICAL_TOTAL = 529

DEFAULT_MIN_ANSWER_TOKENS = 20


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str
    source_id: str = ""


@dataclass(frozen=True)
class TrainingTriple:
    control_code: str
    input_text: str
    target_question: str
    source_id: str = ""

    def to_dict(self) -> dict:
        return {
            "control_code": self.control_code,
            "input_text": self.input_text,
            "target_question": self.target_question,
            "source_id": self.source_id,
        }


@dataclass(frozen=True)
class Reject:
    index: int
    reason: str
    source_id: str = ""
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "reason": self.reason,
            "source_id": self.source_id,
            "detail": self.detail,
        }


REASON_MALFORMED = "malformed_line"
REASON_EMPTY_FIELD = "empty_field"
REASON_ANSWER_TOO_SHORT = "answer_too_short"
REASON_NO_CODE = "no_extractable_code"


def _content_token_count(text: str) -> int:
    return sum(1 for t in tokenize(text) if not t.is_stopword)


def _convert(pair: QaPair, index: int, min_answer_tokens: int) -> TrainingTriple | Reject:
    question = " ".join(pair.question.split())
    answer = pair.answer.strip()
    if not question or not answer:
        return Reject(index=index, reason=REASON_EMPTY_FIELD, source_id=pair.source_id)
    if _content_token_count(answer) < min_answer_tokens:
        return Reject(index=index, reason=REASON_ANSWER_TOO_SHORT, source_id=pair.source_id,
                      detail=f"needs >= {min_answer_tokens} content tokens")
    try:
        code = code_from_question(question)
    except NoCodeExtractable:
        return Reject(index=index, reason=REASON_NO_CODE, source_id=pair.source_id)
    return TrainingTriple(
        control_code=code.phrase,
        input_text=answer,
        target_question=question,
        source_id=pair.source_id,
    )


def build_triples(pairs: Iterable[QaPair],
                  min_answer_tokens: int = DEFAULT_MIN_ANSWER_TOKENS,
                  ) -> Iterator[TrainingTriple | Reject]:
    """One triple or one reject per pair, in input order, O(1) memory."""
    for index, pair in enumerate(pairs):
        yield _convert(pair, index, min_answer_tokens)


def stream_triples(lines: Iterable[str],
                   min_answer_tokens: int = DEFAULT_MIN_ANSWER_TOKENS,
                   ) -> Iterator[TrainingTriple | Reject]:
    """Like build_triples but over raw JSONL lines; parse failures reject."""
    index = -1
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        index += 1
        try:
            data = json.loads(line)
            pair = QaPair(
                question=str(data["question"]),
                answer=str(data["answer"]),
                source_id=str(data.get("source_id", "")),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            yield Reject(index=index, reason=REASON_MALFORMED, detail=f"line {line_no}: {exc}")
            continue
        yield _convert(pair, index, min_answer_tokens)


@dataclass(frozen=True)
class EvalRecord:
    paragraph: Paragraph
    reference_question: str
    domain: str


def load_eval_set(path, strict: bool = False) -> tuple[list[EvalRecord], dict[str, int]]:
    """Load and validate an evaluation JSONL file.

    Any schema violation is a hard error naming the record index. With
    strict=True the file must additionally match the canonical per-domain
    counts exactly. Returns the records and the per-domain count report.
    """
    records: list[EvalRecord] = []
    seen_ids: set[str] = set()
    counts = {domain: 0 for domain in DOMAINS}
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"record {i}: invalid JSON: {exc}") from exc
            for key in ("id", "text", "domain", "reference_question"):
                if not str(data.get(key, "")).strip():
                    raise InputError(f"record {i}: missing or empty field {key!r}")
            domain = data["domain"]
            if domain not in DOMAINS:
                raise InputError(f"record {i}: unknown domain {domain!r}")
            rec_id = str(data["id"])
            if rec_id in seen_ids:
                raise InputError(f"record {i}: duplicate paragraph id {rec_id!r}")
            seen_ids.add(rec_id)
            counts[domain] += 1
            records.append(EvalRecord(
                paragraph=Paragraph.from_dict(data),
                reference_question=data["reference_question"],
                domain=domain,
            ))
    if strict:
        if counts != CANONICAL_DOMAIN_COUNTS:
            raise InputError(
                f"strict mode: domain counts {counts} != canonical {CANONICAL_DOMAIN_COUNTS}"
            )
        if len(records) != CANONICAL_TOTAL:
            raise InputError(f"strict mode: total {len(records)} != {CANONICAL_TOTAL}")
    return records, counts
