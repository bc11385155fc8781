"""End-to-end inference: control codes fan out into candidate questions,
which survive only if an extractive QA scorer is confident enough (primary
filter) and an instruction model answers "Yes" to an answerability prompt
(secondary filter). Survivors are ranked by QA confidence.

Every candidate ever created is accounted for: it ends up either in the
ranked output or in the discarded list with a reason, so
|ranked| + |discarded| == number of generation slots for every run.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace

from . import backends as be
from .codes import (
    CodeSelectionConfig,
    ControlCode,
    SOURCE_KEYWORD,
    SOURCE_MANUAL,
    occurs_verbatim,
    select_control_codes,
)
from .errors import BackendUnavailable, ConfigError, InputError, PipelineUnavailable, ProtocolError
from .models import Paragraph
from .textanalysis import extract_keyphrases, tokenize

DEFAULT_ANSWERABILITY_TEMPLATE = (
    "Given paragraph {{paragraph}}, is the question {{question}} answerable? "
    "Please answer in Yes or No"
)
DEFAULT_SEPARATOR = " [SEP] "
LEAD_TEMPLATE = "Rewrite the following statement as a single question: {{sentence}}"

# Threshold sweep used when calibrating the confidence cutoff.
KAPPA_SWEEP = (0.35, 0.4, 0.45)

STAGE_GENERATED = "generated"
STAGE_PASSED_PRIMARY = "passed_primary"
STAGE_PASSED_SECONDARY = "passed_secondary"
STAGE_DISCARDED = "discarded"

REASON_BELOW_KAPPA = "below_kappa"
REASON_NOT_ANSWERABLE = "not_answerable"
REASON_EMPTY_GENERATION = "empty_generation"
REASON_DUPLICATE = "duplicate"
REASON_BACKEND_FAILURE = "backend_failure"

VARIANT_LEAD = "lead"
VARIANT_RANDOM_IN = "random_in"
VARIANT_RANDOM_OUT = "random_out"
VARIANT_SQUAD_STYLE = "squad_style"
BASELINE_VARIANTS = (VARIANT_LEAD, VARIANT_RANDOM_IN, VARIANT_RANDOM_OUT, VARIANT_SQUAD_STYLE)

_PLACEHOLDER_RE = re.compile(r"\{\{(paragraph|question)\}\}")
_PUNCT_STRIP = ".,;:!?\"'()[]{}"


def validate_answerability_template(template: str) -> None:
    """Each placeholder must appear exactly once; checked at load time."""
    found = [m.group(1) for m in _PLACEHOLDER_RE.finditer(template)]
    for name in ("paragraph", "question"):
        if found.count(name) != 1:
            raise ConfigError(
                f"answerability template must contain {{{{{name}}}}} exactly once"
            )


@dataclass(frozen=True)
class FilterConfig:
    kappa: float = 0.4
    answerability_template: str = DEFAULT_ANSWERABILITY_TEMPLATE
    accept_tokens: frozenset[str] = frozenset({"yes"})
    candidates_per_code: int = 1
    separator: str = DEFAULT_SEPARATOR

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ConfigError(f"kappa must be in [0, 1], got {self.kappa}")
        if self.candidates_per_code < 1:
            raise ConfigError("candidates_per_code must be >= 1")
        validate_answerability_template(self.answerability_template)
        object.__setattr__(self, "accept_tokens", frozenset(self.accept_tokens))


@dataclass(frozen=True)
class CandidateQuestion:
    text: str
    code: ControlCode | None
    qa: be.QaScore | None = None
    answerable: bool | None = None
    stage: str = STAGE_GENERATED
    discard_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "code": self.code.to_dict() if self.code else None,
            "qa": {"answer_span": self.qa.answer_span, "confidence": self.qa.confidence}
            if self.qa else None,
            "answerable": self.answerable,
            "stage": self.stage,
            "discard_reason": self.discard_reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateQuestion":
        qa = data.get("qa")
        code = data.get("code")
        return cls(
            text=data["text"],
            code=ControlCode.from_dict(code) if code else None,
            qa=be.QaScore(answer_span=qa["answer_span"], confidence=qa["confidence"])
            if qa else None,
            answerable=data.get("answerable"),
            stage=data["stage"],
            discard_reason=data.get("discard_reason"),
        )


@dataclass(frozen=True)
class PipelineResult:
    paragraph_id: str
    ranked: list[CandidateQuestion]
    discarded: list[CandidateQuestion]
    generated_count: int
    config_snapshot: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "paragraph_id": self.paragraph_id,
            "ranked": [c.to_dict() for c in self.ranked],
            "discarded": [c.to_dict() for c in self.discarded],
            "generated_count": self.generated_count,
            "config_snapshot": self.config_snapshot,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineResult":
        return cls(
            paragraph_id=str(data["paragraph_id"]),
            ranked=[CandidateQuestion.from_dict(c) for c in data["ranked"]],
            discarded=[CandidateQuestion.from_dict(c) for c in data["discarded"]],
            generated_count=int(data["generated_count"]),
            config_snapshot=data.get("config_snapshot", {}),
        )


@dataclass(frozen=True)
class BackendSet:
    generator: be.BackendHandle | None = None
    qa_scorer: be.BackendHandle | None = None
    instruct: be.BackendHandle | None = None
    span_extractor: be.BackendHandle | None = None
    squad_generator: be.BackendHandle | None = None

    def require(self, *roles: str) -> None:
        for role in roles:
            if getattr(self, role, None) is None:
                raise ConfigError(f"no backend configured for role: {role}")


def build_generation_prompt(code: ControlCode, paragraph: Paragraph,
                            separator: str = DEFAULT_SEPARATOR) -> str:
    """Exactly code.phrase + separator + paragraph.text, untrimmed."""
    if not code.phrase or not paragraph.text:
        raise InputError("control code and paragraph text must be nonempty")
    return code.phrase + separator + paragraph.text


def build_answerability_prompt(paragraph: str, question: str,
                               template: str = DEFAULT_ANSWERABILITY_TEMPLATE) -> str:
    """Single-pass substitution: placeholder text inside the values survives."""
    values = {"paragraph": paragraph, "question": question}
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)


def parse_verdict(raw: str, accept_tokens: frozenset[str] = frozenset({"yes"})) -> bool:
    """True iff the reply's first token is an accept token.

    Normalization: trim, lowercase, take the first whitespace token, strip
    surrounding punctuation. Anything unrecognized (including an empty
    reply) counts as a rejection.
    """
    stripped = raw.strip().casefold()
    if not stripped:
        return False
    first = stripped.split()[0].strip(_PUNCT_STRIP)
    return first in accept_tokens


def primary_filter(cand: CandidateQuestion, paragraph: Paragraph,
                   scorer: be.BackendHandle, cfg: FilterConfig) -> CandidateQuestion:
    """Score the candidate with extractive QA; keep it iff confidence >= kappa."""
    if cand.stage != STAGE_GENERATED:
        raise ValueError(f"primary_filter expects a generated candidate, got {cand.stage}")
    try:
        score = be.qa_confidence(scorer, cand.text, paragraph.text)
    except (BackendUnavailable, ProtocolError):
        return replace(cand, stage=STAGE_DISCARDED, discard_reason=REASON_BACKEND_FAILURE)
    if score.confidence >= cfg.kappa:
        return replace(cand, qa=score, stage=STAGE_PASSED_PRIMARY)
    return replace(cand, qa=score, stage=STAGE_DISCARDED, discard_reason=REASON_BELOW_KAPPA)


def secondary_filter(cand: CandidateQuestion, paragraph: Paragraph,
                     instruct_backend: be.BackendHandle, cfg: FilterConfig) -> CandidateQuestion:
    """Ask the instruction model whether the question is answerable."""
    if cand.stage != STAGE_PASSED_PRIMARY:
        raise ValueError(f"secondary_filter expects passed_primary, got {cand.stage}")
    prompt = build_answerability_prompt(paragraph.text, cand.text, cfg.answerability_template)
    try:
        reply = be.instruct(instruct_backend, prompt)
    except (BackendUnavailable, ProtocolError):
        return replace(cand, stage=STAGE_DISCARDED, discard_reason=REASON_BACKEND_FAILURE)
    if parse_verdict(reply, cfg.accept_tokens):
        return replace(cand, answerable=True, stage=STAGE_PASSED_SECONDARY)
    return replace(cand, answerable=False, stage=STAGE_DISCARDED,
                   discard_reason=REASON_NOT_ANSWERABLE)


def rank(cands: list[CandidateQuestion]) -> list[CandidateQuestion]:
    """Descending QA confidence; ties broken lexicographically by text."""
    for cand in cands:
        if cand.stage != STAGE_PASSED_SECONDARY or cand.qa is None:
            raise ValueError("rank expects passed_secondary candidates with QA scores")
    return sorted(cands, key=lambda c: (-c.qa.confidence, c.text))


def _dedup_key(text: str) -> str:
    return " ".join(text.split()).casefold()


def _config_snapshot(code_cfg: CodeSelectionConfig, filter_cfg: FilterConfig,
                     decode_cfg: be.DecodeConfig, **extra) -> dict:
    snap = {
        "kappa": filter_cfg.kappa,
        "candidates_per_code": filter_cfg.candidates_per_code,
        "separator": filter_cfg.separator,
        "accept_tokens": sorted(filter_cfg.accept_tokens),
        "max_codes": code_cfg.max_codes,
        "top_k_keywords": code_cfg.top_k_keywords,
        "top_k_spans": code_cfg.top_k_spans,
        "decode": decode_cfg.to_wire(),
    }
    snap.update(extra)
    return snap


def run_pipeline(
    paragraph: Paragraph,
    handles: BackendSet,
    code_cfg: CodeSelectionConfig = CodeSelectionConfig(),
    filter_cfg: FilterConfig = FilterConfig(),
    decode_cfg: be.DecodeConfig = be.DecodeConfig(),
) -> PipelineResult:
    """Full run for one paragraph: codes, generation, both filters, ranking.

    An empty ranked list is a valid outcome; discarded candidates carry the
    full audit trail.
    """
    if not paragraph.text.strip():
        raise InputError(f"paragraph {paragraph.id!r} has empty text")
    handles.require("generator", "qa_scorer", "instruct")

    codes = select_control_codes(paragraph, handles.span_extractor, code_cfg)
    per_code = filter_cfg.candidates_per_code

    candidates: list[CandidateQuestion] = []
    generation_failures = 0
    for code in codes:
        prompt = build_generation_prompt(code, paragraph, filter_cfg.separator)
        try:
            outputs = be.generate(handles.generator, prompt, decode_cfg, n=per_code)
        except BackendUnavailable:
            generation_failures += 1
            candidates.extend(
                CandidateQuestion(text="", code=code, stage=STAGE_DISCARDED,
                                  discard_reason=REASON_BACKEND_FAILURE)
                for _ in range(per_code)
            )
            continue
        for slot in range(per_code):
            if slot < len(outputs) and outputs[slot].strip():
                candidates.append(CandidateQuestion(text=outputs[slot], code=code))
            else:
                candidates.append(CandidateQuestion(
                    text="", code=code, stage=STAGE_DISCARDED,
                    discard_reason=REASON_EMPTY_GENERATION,
                ))
    if codes and generation_failures == len(codes):
        raise PipelineUnavailable(
            f"generator backend failed for every control code of paragraph {paragraph.id!r}"
        )

    seen: set[str] = set()
    staged: list[CandidateQuestion] = []
    for cand in candidates:
        if cand.stage != STAGE_GENERATED:
            staged.append(cand)
            continue
        key = _dedup_key(cand.text)
        if key in seen:
            staged.append(replace(cand, stage=STAGE_DISCARDED, discard_reason=REASON_DUPLICATE))
        else:
            seen.add(key)
            staged.append(cand)

    finished: list[CandidateQuestion] = []
    for cand in staged:
        if cand.stage == STAGE_GENERATED:
            cand = primary_filter(cand, paragraph, handles.qa_scorer, filter_cfg)
        if cand.stage == STAGE_PASSED_PRIMARY:
            cand = secondary_filter(cand, paragraph, handles.instruct, filter_cfg)
        finished.append(cand)

    ranked = rank([c for c in finished if c.stage == STAGE_PASSED_SECONDARY])
    discarded = [c for c in finished if c.stage == STAGE_DISCARDED]
    return PipelineResult(
        paragraph_id=paragraph.id,
        ranked=ranked,
        discarded=discarded,
        generated_count=len(codes) * per_code,
        config_snapshot=_config_snapshot(code_cfg, filter_cfg, decode_cfg, variant="full"),
    )


def lead_sentence(text: str) -> str:
    """The first sentence of the text, including its terminal punctuation."""
    tokens = tokenize(text)
    if not tokens:
        return ""
    last = max((t for t in tokens if t.sentence_index == 0), key=lambda t: t.end)
    tail = text[last.end:]
    extra = 0
    for ch in tail:
        extra += 1
        if ch in ".!?":
            break
        if not (ch.isspace() or ch in "\"')]"):
            extra -= 1
            break
    return text[tokens[0].start:last.end + extra].strip()


def run_baseline(
    variant: str,
    paragraph: Paragraph,
    handles: BackendSet,
    code_cfg: CodeSelectionConfig = CodeSelectionConfig(),
    filter_cfg: FilterConfig = FilterConfig(),
    decode_cfg: be.DecodeConfig = be.DecodeConfig(),
    seed: int = 0,
    out_of_paragraph_vocab: list[str] | None = None,
) -> PipelineResult:
    """Reference variants for comparison runs.

    lead: the first sentence converted to a question by the instruction
    model. random_in / random_out: generation steered by a random keyphrase
    from inside / outside the paragraph, with NO filtering applied.
    squad_style: the top control code of a full run, replayed through an
    alternate generator. None of the variants run the answerability filters.
    """
    if variant not in BASELINE_VARIANTS:
        raise ConfigError(f"unknown baseline variant: {variant!r}")
    if not paragraph.text.strip():
        raise InputError(f"paragraph {paragraph.id!r} has empty text")

    rng = random.Random(seed)
    cands: list[CandidateQuestion] = []

    if variant == VARIANT_LEAD:
        handles.require("instruct")
        sentence = lead_sentence(paragraph.text)
        prompt = LEAD_TEMPLATE.replace("{{sentence}}", sentence)
        reply = be.instruct(handles.instruct, prompt)
        if reply.strip():
            cands.append(CandidateQuestion(text=reply.strip(), code=None))

    elif variant == VARIANT_RANDOM_IN:
        handles.require("generator")
        pool = extract_keyphrases(paragraph.text, max_ngram=code_cfg.max_ngram,
                                  top_k=max(10, code_cfg.top_k_keywords))
        if not pool:
            raise InputError("paragraph has no content tokens to draw a keyphrase from")
        pick = rng.choice(pool)
        code = ControlCode(phrase=pick.phrase, source=SOURCE_KEYWORD, salience=1.0,
                           origin_offsets=(pick.start, pick.end))
        cands.extend(_generate_unfiltered(handles.generator, code, paragraph,
                                          filter_cfg, decode_cfg))

    elif variant == VARIANT_RANDOM_OUT:
        handles.require("generator")
        vocab = [p for p in (out_of_paragraph_vocab or [])
                 if p.strip() and not occurs_verbatim(p, paragraph.text)]
        if not vocab:
            raise ConfigError("random_out requires an out-of-paragraph vocabulary")
        code = ControlCode(phrase=rng.choice(vocab), source=SOURCE_MANUAL, salience=1.0)
        cands.extend(_generate_unfiltered(handles.generator, code, paragraph,
                                          filter_cfg, decode_cfg))

    elif variant == VARIANT_SQUAD_STYLE:
        handles.require("squad_generator")
        full = run_pipeline(paragraph, handles, code_cfg, filter_cfg, decode_cfg)
        if full.ranked:
            code = full.ranked[0].code
        else:
            top_codes = select_control_codes(paragraph, handles.span_extractor, code_cfg)
            if not top_codes:
                raise InputError("no control code available for squad_style baseline")
            code = top_codes[0]
        cands.extend(_generate_unfiltered(handles.squad_generator, code, paragraph,
                                          filter_cfg, decode_cfg))

    return PipelineResult(
        paragraph_id=paragraph.id,
        ranked=cands,
        discarded=[],
        generated_count=len(cands),
        config_snapshot=_config_snapshot(code_cfg, filter_cfg, decode_cfg,
                                         variant=variant, seed=seed),
    )


def _generate_unfiltered(handle: be.BackendHandle, code: ControlCode, paragraph: Paragraph,
                         filter_cfg: FilterConfig, decode_cfg: be.DecodeConfig,
                         ) -> list[CandidateQuestion]:
    prompt = build_generation_prompt(code, paragraph, filter_cfg.separator)
    outputs = be.generate(handle, prompt, decode_cfg, n=filter_cfg.candidates_per_code)
    return [CandidateQuestion(text=out, code=code) for out in outputs if out.strip()]
