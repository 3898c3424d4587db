"""Revision accountability: misrepresentation-risk scoring, review
digests, and revision-channel telemetry.

The reference risk scorer is deterministic (1 minus Jaccard token
overlap between the action content and the memory snapshot it should be
grounded in); an LLM scorer can sit behind the same callable interface.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .deliberation import DomainEvent, RevisionKind
from .errors import ValidationError

DEFAULT_CASCADE_WINDOW = 3600.0  # seconds
DEFAULT_DIGEST_PERIOD_DAYS = 7


@dataclass
class ReviewableAction:
    id: str
    agent: str
    deliberation: str
    kind: str  # opinion_submitted | statement_proposed | ranking_submitted
    content: str
    memory_snapshot: str
    created_at: float
    reviewed: bool = False
    risk: Optional[float] = None

    def mark_reviewed(self) -> None:
        if self.reviewed:
            raise ValidationError(f"action {self.id!r} already reviewed")
        self.reviewed = True


@dataclass(frozen=True)
class ReviewDigest:
    user: str
    period: tuple[float, float]
    headline: ReviewableAction
    deep_link: str

    def to_document(self) -> dict:
        return {
            "user": self.user,
            "period": {"start": self.period[0], "end": self.period[1]},
            "headline": {
                "action_id": self.headline.id,
                "kind": self.headline.kind,
                "deliberation": self.headline.deliberation,
                "excerpt": self.headline.content[:280],
                "risk": self.headline.risk,
            },
            "deep_link": self.deep_link,
        }


def _tokens(text: str) -> set[str]:
    return set(text.lower().split())


def jaccard_risk(content: str, memory_snapshot: str) -> float:
    """1 - Jaccard similarity of lowercased token sets. 0 means perfectly
    grounded in memory; 1 means no overlap at all."""
    a, b = _tokens(content), _tokens(memory_snapshot)
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def score_risk(
    action: ReviewableAction,
    scorer: Callable[[str, str], float] = jaccard_risk,
) -> float:
    """Score one unreviewed action for misrepresentation risk in [0, 1]
    and record the score on the action. A scorer failure propagates; the
    caller leaves the action unscored and retries next cycle."""
    if action.reviewed:
        raise ValidationError("only unreviewed actions are scored")
    risk = float(scorer(action.content, action.memory_snapshot))
    if not 0.0 <= risk <= 1.0:
        raise ValidationError(f"scorer returned out-of-range risk {risk}")
    action.risk = risk
    return risk


def build_digest(
    user: str,
    actions: list[ReviewableAction],
    period: tuple[float, float],
    deep_link_base: str = "/review/actions",
) -> Optional[ReviewDigest]:
    """Pick the highest-risk unreviewed, scored action in the period as
    the digest headline; ties go to the most recent action. Returns None
    when nothing needs review."""
    start, end = period
    eligible = [
        a
        for a in actions
        if not a.reviewed and a.risk is not None and start <= a.created_at <= end
    ]
    if not eligible:
        return None
    headline = max(eligible, key=lambda a: (a.risk, a.created_at))
    return ReviewDigest(
        user=user,
        period=period,
        headline=headline,
        deep_link=f"{deep_link_base}/{headline.id}",
    )


@dataclass
class RevisionRecord:
    agent: str
    deliberation: str
    kind: str  # event kind
    revision_kind: Optional[str]
    at: float
    cascaded: bool = False


@dataclass
class RevisionTelemetry:
    """Counters over the revision channel, fed from the event stream.

    A revision is flagged `cascaded` when a memory edit by the same agent
    follows within the cascade window, capturing corrections that
    propagate into the profile.
    """

    cascade_window: float = DEFAULT_CASCADE_WINDOW
    records: list[RevisionRecord] = field(default_factory=list)
    counts_by_revision_kind: dict[str, int] = field(default_factory=dict)
    counts_by_event_kind: dict[str, int] = field(default_factory=dict)

    REVISION_EVENT_KINDS = ("opinion_revised", "opinion_withdrawn", "ranking_edited")

    def record_revision_outcome(
        self, event: DomainEvent, deliberation_id: str, at: float
    ) -> RevisionRecord:
        if event.kind not in self.REVISION_EVENT_KINDS:
            raise ValidationError(f"not a revision event: {event.kind!r}")
        revision_kind = event.payload.get("revision_kind")
        record = RevisionRecord(
            agent=event.actor,
            deliberation=deliberation_id,
            kind=event.kind,
            revision_kind=revision_kind,
            at=at,
        )
        self.records.append(record)
        self.counts_by_event_kind[event.kind] = (
            self.counts_by_event_kind.get(event.kind, 0) + 1
        )
        if revision_kind is not None:
            self.counts_by_revision_kind[revision_kind] = (
                self.counts_by_revision_kind.get(revision_kind, 0) + 1
            )
        return record

    def record_memory_edit(self, agent: str, at: float) -> None:
        """Flag every pending revision by `agent` inside the cascade
        window leading up to this edit."""
        for record in self.records:
            if (
                record.agent == agent
                and not record.cascaded
                and 0 <= at - record.at <= self.cascade_window
            ):
                record.cascaded = True

    def cascade_count(self) -> int:
        return sum(1 for r in self.records if r.cascaded)
