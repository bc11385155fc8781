"""Shared input record types."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Paragraph:
    """A news passage with provenance."""

    id: str
    text: str
    domain: str = ""
    headline: str = ""
    url: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "domain": self.domain,
            "headline": self.headline,
            "url": self.url,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Paragraph":
        return cls(
            id=str(data["id"]),
            text=data["text"],
            domain=data.get("domain", ""),
            headline=data.get("headline", ""),
            url=data.get("url", ""),
        )
