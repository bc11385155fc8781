"""Deterministic tokenization, sentence splitting, and statistical keyphrase scoring.

Everything in this module is a pure function of its inputs. The scoring
scheme is frequency/position/casing/co-occurrence based: a term is more
salient (lower score) when it is frequent, appears early, carries rich
casing, and spreads over many sentences. Phrase scores combine member-term
scores penalized by phrase frequency. Lower score always means more salient,
and results are returned already sorted ascending.
"""

from __future__ import annotations

import math
import re
import statistics
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

__all__ = [
    "Token",
    "TermStats",
    "DocStats",
    "Keyphrase",
    "stopwords",
    "is_stopword",
    "tokenize",
    "term_statistics",
    "doc_statistics",
    "score_terms",
    "extract_keyphrases",
    "levenshtein_similarity",
]

_WORD_RE = re.compile(r"[A-Za-z0-9À-ɏ]+(?:['’.\-&/][A-Za-z0-9À-ɏ]+)*")

# Titles, latin shorthands, months etc. whose trailing period does not end a
# sentence. Single letters ("George W. Bush") are guarded separately.
_ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "ave", "blvd", "rd",
    "etc", "vs", "inc", "ltd", "co", "corp", "dept", "univ", "est", "fig",
    "gen", "gov", "sen", "rep", "adm", "capt", "col", "lt", "sgt", "rev",
    "hon", "pres", "approx", "al", "e.g", "i.e", "a.m", "p.m", "u.s", "u.k",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
    "nov", "dec", "mon", "tue", "wed", "thu", "fri", "sat", "sun",
})

_stopword_cache: frozenset[str] | None = None


def stopwords() -> frozenset[str]:
    """The embedded English stopword list (lowercase, apostrophes straight)."""
    global _stopword_cache
    if _stopword_cache is None:
        raw = resources.files("consistent_qg.data").joinpath("stopwords_en.txt").read_text("utf-8")
        words = {line.strip() for line in raw.splitlines()}
        _stopword_cache = frozenset(w for w in words if w and not w.startswith("#"))
    return _stopword_cache


def _lookup_form(normalized: str) -> str:
    return normalized.replace("’", "'").rstrip(".")


def is_stopword(word: str) -> bool:
    return _lookup_form(word.casefold()) in stopwords()


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    sentence_index: int
    position: int
    is_uppercase_initial: bool
    is_acronym: bool
    is_stopword: bool
    start: int  # char offset in the source text
    end: int
    joins_previous: bool  # only whitespace between this token and the one before


def _is_acronym(surface: str) -> bool:
    letters = [ch for ch in surface if ch.isalpha()]
    return len(letters) >= 2 and all(ch.isupper() for ch in letters)


def tokenize(text: str) -> list[Token]:
    """Split text into word tokens with sentence indices.

    Sentence boundaries are assigned by a rule-based splitter: terminal
    punctuation (. ! ?) ends a sentence unless the preceding word is a
    guarded abbreviation or a single letter. Dotted alphanumerics such as
    "B.1.351" are kept as one token by the word pattern. Punctuation itself
    is not emitted; an abbreviation keeps its trailing period in the surface.
    """
    matches = list(_WORD_RE.finditer(text))
    tokens: list[Token] = []
    sentence_index = 0
    prev_end = 0
    for i, m in enumerate(matches):
        surface = m.group(0)
        start, end = m.span()
        gap = text[end:matches[i + 1].start()] if i + 1 < len(matches) else text[end:]

        word_key = surface.casefold().rstrip(".")
        is_abbrev = gap.startswith(".") and (
            word_key in _ABBREVIATIONS or len(surface) == 1
        )
        if is_abbrev:
            surface = surface + "."
            end += 1
            gap = gap[1:]

        normalized = surface.casefold()
        tokens.append(Token(
            surface=surface,
            normalized=normalized,
            sentence_index=sentence_index,
            position=i,
            is_uppercase_initial=surface[:1].isupper(),
            is_acronym=_is_acronym(surface),
            is_stopword=_lookup_form(normalized) in stopwords(),
            start=start,
            end=end,
            joins_previous=i > 0 and text[prev_end:start].strip() == "",
        ))
        prev_end = end

        terminators = "!?" if is_abbrev else ".!?"
        if any(ch in terminators for ch in gap) or "\n\n" in gap:
            sentence_index += 1
    return tokens


@dataclass
class TermStats:
    term: str
    tf: int = 0
    tf_upper: int = 0
    tf_acronym: int = 0
    positions: list[int] = field(default_factory=list)
    cooccurrence_left: Counter = field(default_factory=Counter)
    cooccurrence_right: Counter = field(default_factory=Counter)

    @property
    def sentence_spread(self) -> int:
        return len(set(self.positions))


@dataclass(frozen=True)
class DocStats:
    total_sentences: int
    mean_tf: float
    stddev_tf: float
    max_tf: int


def _content_runs(tokens: list[Token]) -> list[list[Token]]:
    """Maximal runs of adjacent content tokens within one sentence.

    A run breaks on stopwords, sentence boundaries, and any punctuation
    between neighboring tokens, so the joined surface of a run always occurs
    verbatim (up to whitespace) in the source text.
    """
    runs: list[list[Token]] = []
    current: list[Token] = []
    prev: Token | None = None
    for tok in tokens:
        if tok.is_stopword:
            if current:
                runs.append(current)
            current, prev = [], None
            continue
        contiguous = (
            prev is not None
            and tok.position == prev.position + 1
            and tok.sentence_index == prev.sentence_index
            and tok.joins_previous
        )
        if not contiguous and current:
            runs.append(current)
            current = []
        current.append(tok)
        prev = tok
    if current:
        runs.append(current)
    return runs


def term_statistics(tokens: list[Token], window: int = 2) -> dict[str, TermStats]:
    """Per-term frequency, casing, position, and co-occurrence statistics.

    Only content (non-stopword) terms become keys. Co-occurrence windows
    slide over runs of contiguous content tokens, so they never cross
    sentence boundaries, stopwords, or punctuation.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    stats: dict[str, TermStats] = {}
    for tok in tokens:
        if tok.is_stopword:
            continue
        st = stats.setdefault(tok.normalized, TermStats(term=tok.normalized))
        st.tf += 1
        st.tf_upper += int(tok.is_uppercase_initial)
        st.tf_acronym += int(tok.is_acronym)
        st.positions.append(tok.sentence_index)
    for run in _content_runs(tokens):
        for i, tok in enumerate(run):
            st = stats[tok.normalized]
            for left in run[max(0, i - window):i]:
                st.cooccurrence_left[left.normalized] += 1
            for right in run[i + 1:i + 1 + window]:
                st.cooccurrence_right[right.normalized] += 1
    return stats


def doc_statistics(tokens: list[Token], stats: dict[str, TermStats]) -> DocStats:
    total_sentences = tokens[-1].sentence_index + 1 if tokens else 0
    tfs = [st.tf for st in stats.values()]
    return DocStats(
        total_sentences=total_sentences,
        mean_tf=statistics.fmean(tfs) if tfs else 0.0,
        stddev_tf=statistics.pstdev(tfs) if tfs else 0.0,
        max_tf=max(tfs) if tfs else 0,
    )


def score_terms(stats: dict[str, TermStats], doc: DocStats) -> dict[str, float]:
    """Score every term; lower means more salient.

    S(t) = (Trel * Tpos) / (Tcase + TFnorm / Trel + Tspread / Trel) with
      Tcase   = max(tf_upper, tf_acronym) / (1 + ln tf)
      Tpos    = ln(ln(3 + median sentence index))
      TFnorm  = tf / (mean_tf + stddev_tf)
      Trel    = 1 + (distinct_left/tf + distinct_right/tf) * (tf / max_tf)
      Tspread = sentence_spread / total_sentences
    """
    if not stats:
        raise ValueError("stats must be nonempty")
    scores: dict[str, float] = {}
    for term, st in stats.items():
        t_case = max(st.tf_upper, st.tf_acronym) / (1.0 + math.log(st.tf))
        t_pos = math.log(math.log(3.0 + statistics.median(st.positions)))
        tf_norm = st.tf / (doc.mean_tf + doc.stddev_tf)
        t_rel = 1.0 + (
            len(st.cooccurrence_left) / st.tf + len(st.cooccurrence_right) / st.tf
        ) * (st.tf / doc.max_tf)
        t_spread = st.sentence_spread / doc.total_sentences
        scores[term] = (t_rel * t_pos) / (t_case + tf_norm / t_rel + t_spread / t_rel)
    return scores


@dataclass(frozen=True)
class Keyphrase:
    phrase: str
    score: float
    ngram_len: int
    start: int = 0  # char span of the first occurrence
    end: int = 0


def levenshtein_similarity(a: str, b: str) -> float:
    """Normalized Levenshtein ratio in [0, 1]; 1.0 means identical."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return 1.0 - prev[-1] / max(len(a), len(b))


def _phrase_score(term_seq: tuple[str, ...], scores: dict[str, float], tf_phrase: int) -> float:
    product = 1.0
    total = 0.0
    for term in term_seq:
        product *= scores[term]
        total += scores[term]
    return product / (tf_phrase * (1.0 + total))


def extract_keyphrases(
    text: str,
    max_ngram: int = 3,
    top_k: int = 10,
    dedup_threshold: float = 0.9,
    window: int = 2,
) -> list[Keyphrase]:
    """Top salient keyphrases of up to max_ngram contiguous content tokens.

    Candidates are windows inside content runs (never crossing stopwords,
    punctuation, or sentence boundaries). Output is sorted ascending by
    score, capped at top_k, and near-duplicates (normalized Levenshtein
    similarity >= dedup_threshold) are collapsed onto the more salient entry.
    """
    if max_ngram < 1 or top_k < 1:
        raise ValueError("max_ngram and top_k must be >= 1")
    if not 0.0 < dedup_threshold <= 1.0:
        raise ValueError("dedup_threshold must be in (0, 1]")
    tokens = tokenize(text)
    stats = term_statistics(tokens, window=window)
    if not stats:
        return []
    scores = score_terms(stats, doc_statistics(tokens, stats))

    candidates: dict[tuple[str, ...], dict] = {}
    for run in _content_runs(tokens):
        for n in range(1, max_ngram + 1):
            for i in range(len(run) - n + 1):
                chunk = run[i:i + n]
                key = tuple(t.normalized for t in chunk)
                entry = candidates.get(key)
                if entry is None:
                    candidates[key] = {
                        "surface": " ".join(t.surface for t in chunk),
                        "tf": 1,
                        "start": chunk[0].start,
                        "end": chunk[-1].end,
                    }
                else:
                    entry["tf"] += 1

    scored = sorted(
        (
            (_phrase_score(key, scores, entry["tf"]), key, entry)
            for key, entry in candidates.items()
        ),
        key=lambda item: (item[0], item[1]),
    )

    result: list[Keyphrase] = []
    for score, key, entry in scored:
        phrase_norm = " ".join(key)
        if any(
            levenshtein_similarity(phrase_norm, kept.phrase.casefold()) >= dedup_threshold
            for kept in result
        ):
            continue
        result.append(Keyphrase(
            phrase=entry["surface"],
            score=score,
            ngram_len=len(key),
            start=entry["start"],
            end=entry["end"],
        ))
        if len(result) == top_k:
            break
    return result
