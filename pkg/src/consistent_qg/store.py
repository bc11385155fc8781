"""Editorial review workflow: persistence, state machine, and FAQ search.

Review items move through pending -> approved -> published with rejection
possible before and after publication; every change is appended to an event
log (the log IS the audit trail) with periodic snapshots for fast loading.
Writes are serialized and guarded by optimistic versioning: a transition
carrying a stale expected_version fails with ConflictError and no mutation.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConflictError, InputError, StateError
from .pipeline import CandidateQuestion, PipelineResult, _dedup_key
from .textanalysis import tokenize

STATE_PENDING = "pending"
STATE_APPROVED = "approved"
STATE_REJECTED = "rejected"
STATE_PUBLISHED = "published"
STATES = (STATE_PENDING, STATE_APPROVED, STATE_REJECTED, STATE_PUBLISHED)

ACTION_APPROVE = "approve"
ACTION_REJECT = "reject"
ACTION_EDIT_APPROVE = "edit+approve"
ACTION_PUBLISH = "publish"
ACTION_UNPUBLISH = "unpublish"
ACTIONS = (ACTION_APPROVE, ACTION_REJECT, ACTION_EDIT_APPROVE, ACTION_PUBLISH, ACTION_UNPUBLISH)

# (state, action) -> next state; anything absent is illegal.
LEGAL_TRANSITIONS: dict[tuple[str, str], str] = {
    (STATE_PENDING, ACTION_APPROVE): STATE_APPROVED,
    (STATE_PENDING, ACTION_EDIT_APPROVE): STATE_APPROVED,
    (STATE_PENDING, ACTION_REJECT): STATE_REJECTED,
    (STATE_APPROVED, ACTION_PUBLISH): STATE_PUBLISHED,
    (STATE_APPROVED, ACTION_REJECT): STATE_REJECTED,
    (STATE_PUBLISHED, ACTION_UNPUBLISH): STATE_REJECTED,
}

SNAPSHOT_INTERVAL = 100


@dataclass
class ReviewItem:
    id: str
    article_ref: dict
    paragraph_id: str
    candidate: CandidateQuestion
    paragraph_text: str = ""
    state: str = STATE_PENDING
    edited_text: str | None = None
    history: list[dict] = field(default_factory=list)
    version: int = 0

    @property
    def current_text(self) -> str:
        return self.edited_text if self.edited_text else self.candidate.text

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "article_ref": self.article_ref,
            "paragraph_id": self.paragraph_id,
            "candidate": self.candidate.to_dict(),
            "paragraph_text": self.paragraph_text,
            "state": self.state,
            "edited_text": self.edited_text,
            "history": list(self.history),
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReviewItem":
        return cls(
            id=data["id"],
            article_ref=data["article_ref"],
            paragraph_id=data["paragraph_id"],
            candidate=CandidateQuestion.from_dict(data["candidate"]),
            paragraph_text=data.get("paragraph_text", ""),
            state=data["state"],
            edited_text=data.get("edited_text"),
            history=list(data.get("history", [])),
            version=int(data.get("version", 0)),
        )


@dataclass(frozen=True)
class FaqEntry:
    item_id: str
    question: str
    paragraph: str
    article_ref: dict
    published_at: str
    published_seq: int

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "question": self.question,
            "paragraph": self.paragraph,
            "article_ref": self.article_ref,
            "published_at": self.published_at,
            "published_seq": self.published_seq,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FaqEntry":
        return cls(
            item_id=data["item_id"],
            question=data["question"],
            paragraph=data["paragraph"],
            article_ref=data["article_ref"],
            published_at=data["published_at"],
            published_seq=int(data["published_seq"]),
        )


def replay_history(history: list[dict]) -> str:
    """Recompute the state an item's history implies, starting from pending."""
    state = STATE_PENDING
    for entry in history:
        key = (state, entry["action"])
        if key not in LEGAL_TRANSITIONS:
            raise StateError(f"history replays illegal transition {key}")
        state = LEGAL_TRANSITIONS[key]
    return state


def item_id_for(paragraph_id: str, question_text: str) -> str:
    digest = hashlib.sha1(
        f"{paragraph_id}\x1f{_dedup_key(question_text)}".encode("utf-8")
    ).hexdigest()
    return digest[:12]


class ReviewStore:
    """Single-file embedded store: append-only event log plus snapshots."""

    def __init__(self, path: str | Path | None = None,
                 snapshot_interval: int = SNAPSHOT_INTERVAL):
        self._lock = threading.RLock()
        self._items: dict[str, ReviewItem] = {}
        self._faq: list[FaqEntry] = []
        self._audit: list[dict] = []
        self._seq = 0
        self._snapshot_interval = snapshot_interval
        self._log_path = Path(path) if path else None
        self._snapshot_path = (
            self._log_path.with_suffix(self._log_path.suffix + ".snapshot")
            if self._log_path else None
        )
        if self._log_path:
            self._load()

    # -- persistence --

    def _load(self) -> None:
        snap_seq = 0
        if self._snapshot_path.exists():
            snap = json.loads(self._snapshot_path.read_text("utf-8"))
            snap_seq = snap["seq"]
            self._seq = snap_seq
            self._items = {d["id"]: ReviewItem.from_dict(d) for d in snap["items"]}
            self._faq = [FaqEntry.from_dict(d) for d in snap["faq"]]
            self._audit = list(snap.get("audit", []))
        if self._log_path.exists():
            with open(self._log_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["seq"] > snap_seq:
                        self._apply_event(event)
                        self._seq = event["seq"]

    def _apply_event(self, event: dict) -> None:
        kind = event["event"]
        if kind == "ingest_item":
            item = ReviewItem.from_dict(event["item"])
            self._items[item.id] = item
        elif kind == "audit":
            self._audit.append(event["entry"])
        elif kind == "transition":
            item = self._items[event["item_id"]]
            item.state = event["to"]
            if event.get("edited_text") is not None:
                item.edited_text = event["edited_text"]
            item.history.append(event["history_entry"])
            item.version = event["version"]
            if event["action"] == ACTION_PUBLISH:
                self._faq.append(FaqEntry(
                    item_id=item.id,
                    question=event["question_snapshot"],
                    paragraph=item.paragraph_text,
                    article_ref=item.article_ref,
                    published_at=event["history_entry"]["ts"],
                    published_seq=event["seq"],
                ))
            elif event["action"] == ACTION_UNPUBLISH:
                self._faq = [e for e in self._faq if e.item_id != item.id]

    def _append_event(self, event: dict) -> None:
        self._seq += 1
        event["seq"] = self._seq
        self._apply_event(event)
        if self._log_path:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            if self._seq % self._snapshot_interval == 0:
                self._write_snapshot()

    def _write_snapshot(self) -> None:
        snap = {
            "seq": self._seq,
            "items": [item.to_dict() for item in self._items.values()],
            "faq": [entry.to_dict() for entry in self._faq],
            "audit": list(self._audit),
        }
        tmp = self._snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(snap, ensure_ascii=False), "utf-8")
        tmp.replace(self._snapshot_path)

    @staticmethod
    def _now() -> str:
        return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()) + "Z"

    # -- reads --

    @property
    def version(self) -> int:
        return self._seq

    def get(self, item_id: str) -> ReviewItem:
        with self._lock:
            return self._items[item_id]

    def list_items(self, state: str | None = None, domain: str | None = None,
                   article_url: str | None = None) -> list[ReviewItem]:
        with self._lock:
            items = list(self._items.values())
        if state:
            items = [i for i in items if i.state == state]
        if domain:
            items = [i for i in items if i.article_ref.get("domain") == domain]
        if article_url:
            items = [i for i in items if i.article_ref.get("url") == article_url]
        return items

    def faq_entries(self) -> list[FaqEntry]:
        with self._lock:
            return list(self._faq)

    def audit_entries(self) -> list[dict]:
        with self._lock:
            return list(self._audit)

    # -- writes --

    def ingest(self, results: list[PipelineResult], article_ref: dict,
               paragraph_texts: dict[str, str] | None = None) -> list[ReviewItem]:
        """One pending item per ranked candidate; re-ingesting is a no-op.

        Discarded candidates are recorded in the audit log only and never
        enter the review queue; an empty result still leaves an audit row.
        """
        if not results:
            raise InputError("ingest requires at least one result")
        paragraph_texts = paragraph_texts or {}
        created: list[ReviewItem] = []
        with self._lock:
            for result in results:
                for cand in result.ranked:
                    item_id = item_id_for(result.paragraph_id, cand.text)
                    if item_id in self._items:
                        self._append_event({"event": "audit", "entry": {
                            "ts": self._now(), "kind": "duplicate_ingest",
                            "paragraph_id": result.paragraph_id, "item_id": item_id,
                        }})
                        continue
                    item = ReviewItem(
                        id=item_id,
                        article_ref=dict(article_ref),
                        paragraph_id=result.paragraph_id,
                        candidate=cand,
                        paragraph_text=paragraph_texts.get(result.paragraph_id, ""),
                    )
                    self._append_event({"event": "ingest_item", "item": item.to_dict()})
                    created.append(self._items[item_id])
                if not result.ranked:
                    self._append_event({"event": "audit", "entry": {
                        "ts": self._now(), "kind": "empty_result",
                        "paragraph_id": result.paragraph_id,
                    }})
                for cand in result.discarded:
                    self._append_event({"event": "audit", "entry": {
                        "ts": self._now(), "kind": "discarded_candidate",
                        "paragraph_id": result.paragraph_id,
                        "text": cand.text, "reason": cand.discard_reason,
                    }})
        return created

    def transition(self, item_id: str, action: str, actor: str,
                   edited_text: str | None = None,
                   expected_version: int | None = None) -> ReviewItem:
        """Apply one editorial action atomically; raises instead of mutating."""
        if not actor or not actor.strip():
            raise InputError("actor is required on every transition")
        if action not in ACTIONS:
            raise InputError(f"unknown action {action!r}")
        with self._lock:
            item = self._items[item_id]
            if expected_version is not None and expected_version != item.version:
                raise ConflictError(
                    f"expected version {expected_version}, item is at {item.version}",
                    current_version=item.version,
                )
            key = (item.state, action)
            if key not in LEGAL_TRANSITIONS:
                raise StateError(f"cannot {action} an item in state {item.state}")
            if action == ACTION_EDIT_APPROVE:
                if not edited_text or not edited_text.strip():
                    raise InputError("edit+approve requires nonempty edited_text")
            else:
                edited_text = None

            new_state = LEGAL_TRANSITIONS[key]
            history_entry = {
                "ts": self._now(),
                "actor": actor,
                "action": action,
                "from": item.state,
                "to": new_state,
            }
            if action == ACTION_EDIT_APPROVE:
                history_entry["original_text"] = item.candidate.text
                history_entry["edited_text"] = edited_text
            event = {
                "event": "transition",
                "item_id": item_id,
                "action": action,
                "to": new_state,
                "edited_text": edited_text,
                "version": item.version + 1,
                "history_entry": history_entry,
            }
            if action == ACTION_PUBLISH:
                event["question_snapshot"] = item.current_text
            self._append_event(event)
            return self._items[item_id]


# -- fuzzy FAQ search --

def _normalize_tokens(text: str) -> list[str]:
    return [t.normalized for t in tokenize(text) if not t.is_stopword]


def _trigrams(text: str) -> Counter:
    if len(text) < 3:
        return Counter([text] if text else [])
    return Counter(text[i:i + 3] for i in range(len(text) - 2))


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b[gram] for gram, count in a.items())
    norm = math.sqrt(sum(c * c for c in a.values())) * math.sqrt(sum(c * c for c in b.values()))
    return dot / norm if norm else 0.0


def similarity(query: str, question: str,
               jaccard_weight: float = 0.7, trigram_weight: float = 0.3) -> float:
    """Weighted mix of token-set Jaccard and character-trigram cosine."""
    q_tokens, c_tokens = _normalize_tokens(query), _normalize_tokens(question)
    if not q_tokens or not c_tokens:
        return 0.0
    q_set, c_set = set(q_tokens), set(c_tokens)
    jaccard = len(q_set & c_set) / len(q_set | c_set)
    cosine = _cosine(_trigrams(" ".join(q_tokens)), _trigrams(" ".join(c_tokens)))
    return jaccard_weight * jaccard + trigram_weight * cosine


def faq_search(query: str, corpus: list[FaqEntry], top_k: int = 10,
               min_sim: float = 0.35,
               jaccard_weight: float = 0.7, trigram_weight: float = 0.3,
               ) -> list[tuple[FaqEntry, float]]:
    """Published entries scored against the query, best first, ties by recency."""
    if not query.strip():
        raise InputError("query is empty")
    if not _normalize_tokens(query):
        return []
    scored = [
        (entry, similarity(query, entry.question, jaccard_weight, trigram_weight))
        for entry in corpus
    ]
    matches = [(e, s) for e, s in scored if s >= min_sim]
    matches.sort(key=lambda pair: (-pair[1], -pair[0].published_seq))
    return matches[:top_k]
