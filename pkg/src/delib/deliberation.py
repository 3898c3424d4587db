"""Event-sourced deliberation state machine with lazy consensus.

Every mutation appends exactly one DomainEvent and is applied through the
same deterministic transition used by replay, so replaying the log always
reproduces the live state, winner included. Timestamps are recorded but
carry no semantic weight; sequence numbers alone determine state.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .ballots import (
    AgentId,
    CandidateId,
    Ranking,
    build_preference_matrix,
    insert_at_median,
    withdraw_candidate,
)
from .bradley_terry import bt_fit, bt_winner, wins_from_rankings
from .errors import ConflictError, CorruptLogError, NotFoundError, ValidationError
from .schulze import schulze_winner, strongest_paths

DeliberationId = str


class ProducedVia(str, Enum):
    AUTONOMOUS = "autonomous"
    TOPIC_INTERVIEW = "topic_interview"
    EXTERNAL = "external"


class RevisionKind(str, Enum):
    AGENT_MISREPRESENTED = "agent_misrepresented"
    VIEW_CHANGED = "view_changed"


class StatementStatus(str, Enum):
    ACTIVE = "active"
    WITHDRAWN = "withdrawn"


EVENT_KINDS = frozenset(
    {
        "joined",
        "opinion_submitted",
        "opinion_revised",
        "opinion_withdrawn",
        "statement_proposed",
        "statement_withdrawn",
        "ranking_submitted",
        "ranking_edited",
        "deliberation_closed",
        "review_recorded",
    }
)


@dataclass
class Opinion:
    agent: AgentId
    deliberation: DeliberationId
    text: str
    produced_via: ProducedVia
    created_at: str
    revised_at: str
    revision_count: int = 0


@dataclass
class CandidateStatement:
    id: CandidateId
    author: AgentId
    title: str
    body: str
    status: StatementStatus = StatementStatus.ACTIVE


@dataclass(frozen=True)
class DomainEvent:
    seq: int
    kind: str
    actor: str
    timestamp: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "kind": self.kind,
                "actor": self.actor,
                "timestamp": self.timestamp,
                "payload": self.payload,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "DomainEvent":
        # Unknown fields are tolerated for forward compatibility.
        doc = json.loads(line)
        try:
            return cls(
                seq=int(doc["seq"]),
                kind=str(doc["kind"]),
                actor=str(doc["actor"]),
                timestamp=str(doc["timestamp"]),
                payload=dict(doc["payload"]),
            )
        except KeyError as exc:
            raise CorruptLogError(f"event record missing field {exc}") from None


class Deliberation:
    """Live deliberation state. Writers must be serialized externally
    (single writer per deliberation); `snapshot()` hands out deep copies
    safe to read from other threads."""

    def __init__(
        self,
        id: DeliberationId,
        question: str,
        aggregator: str = "schulze",
    ):
        if aggregator not in ("schulze", "bradley_terry"):
            raise ValidationError(f"unknown aggregator {aggregator!r}")
        self.id = id
        self.question = question
        self.aggregator = aggregator
        self.status = "open"
        self.participants: list[AgentId] = []
        self.opinions: dict[AgentId, Opinion] = {}
        self.statements: dict[CandidateId, CandidateStatement] = {}
        self.rankings: dict[AgentId, Ranking] = {}
        self.winner: Optional[CandidateId] = None
        self.event_seq = 0
        self.log: list[DomainEvent] = []

    # -- views ---------------------------------------------------------

    @property
    def active_pool(self) -> list[CandidateId]:
        """Active candidate ids in proposal order."""
        return [
            c.id
            for c in self.statements.values()
            if c.status is StatementStatus.ACTIVE
        ]

    def snapshot(self) -> "Deliberation":
        return copy.deepcopy(self)

    def state_dict(self) -> dict:
        """Canonical state document, used for replay-determinism checks
        and snapshots on the wire."""
        return {
            "id": self.id,
            "question": self.question,
            "aggregator": self.aggregator,
            "status": self.status,
            "participants": list(self.participants),
            "opinions": {
                a: {
                    "text": o.text,
                    "produced_via": o.produced_via.value,
                    "created_at": o.created_at,
                    "revised_at": o.revised_at,
                    "revision_count": o.revision_count,
                }
                for a, o in self.opinions.items()
            },
            "statements": {
                c.id: {
                    "author": c.author,
                    "title": c.title,
                    "body": c.body,
                    "status": c.status.value,
                }
                for c in self.statements.values()
            },
            "rankings": {a: list(r.order) for a, r in self.rankings.items()},
            "active_pool": list(self.active_pool),
            "winner": self.winner,
            "event_seq": self.event_seq,
        }

    def state_bytes(self) -> bytes:
        return json.dumps(
            self.state_dict(), sort_keys=True, separators=(",", ":")
        ).encode()

    # -- commands ------------------------------------------------------

    def _require_open(self) -> None:
        if self.status != "open":
            raise ValidationError(f"deliberation {self.id!r} is closed")

    def _require_participant(self, agent: AgentId) -> None:
        if agent not in self.participants:
            raise ValidationError(
                f"agent {agent!r} is not a participant of {self.id!r}"
            )

    def _check_pool_match(
        self, order: Iterable[CandidateId], expected: Iterable[CandidateId]
    ) -> None:
        if set(order) != set(expected):
            raise ConflictError(
                "ranking does not cover the current candidate pool; "
                "re-read the pool and retry"
            )

    def join(
        self,
        agent: AgentId,
        opinion_text: str,
        produced_via: ProducedVia = ProducedVia.AUTONOMOUS,
        ranking: Optional[list[CandidateId]] = None,
        statement: Optional[CandidateStatement] = None,
        timestamp: str = "",
    ) -> DomainEvent:
        self._require_open()
        if agent in self.participants:
            raise ValidationError(f"agent {agent!r} already joined {self.id!r}")
        pool = self.active_pool
        if statement is not None:
            self._check_statement_id_fresh(statement.id)
            expected = pool + [statement.id]
            if ranking is None:
                raise ValidationError(
                    "a complete ranking is required when proposing a statement"
                )
            self._check_pool_match(ranking, expected)
        elif pool:
            if ranking is None:
                raise ValidationError(
                    "a complete ranking over the pool is required to join"
                )
            self._check_pool_match(ranking, pool)
        payload = {
            "agent": agent,
            "opinion": {"text": opinion_text, "produced_via": produced_via.value},
            "statement": (
                {"id": statement.id, "title": statement.title, "body": statement.body}
                if statement is not None
                else None
            ),
            "ranking": list(ranking) if ranking is not None else None,
        }
        return self._append("joined", agent, payload, timestamp)

    def propose_statement(
        self,
        author: AgentId,
        statement: CandidateStatement,
        author_ranking: list[CandidateId],
        timestamp: str = "",
    ) -> DomainEvent:
        self._require_open()
        self._require_participant(author)
        self._check_statement_id_fresh(statement.id)
        expected = self.active_pool + [statement.id]
        self._check_pool_match(author_ranking, expected)
        payload = {
            "statement": {
                "id": statement.id,
                "title": statement.title,
                "body": statement.body,
            },
            "author_ranking": list(author_ranking),
        }
        return self._append("statement_proposed", author, payload, timestamp)

    def edit_ranking(
        self, agent: AgentId, order: list[CandidateId], timestamp: str = ""
    ) -> DomainEvent:
        self._require_open()
        self._require_participant(agent)
        if len(set(order)) != len(order):
            raise ValidationError("ranking contains duplicate candidates")
        self._check_pool_match(order, self.active_pool)
        kind = "ranking_edited" if agent in self.rankings else "ranking_submitted"
        return self._append(kind, agent, {"ranking": list(order)}, timestamp)

    def submit_opinion(
        self,
        agent: AgentId,
        text: str,
        produced_via: ProducedVia = ProducedVia.AUTONOMOUS,
        timestamp: str = "",
    ) -> DomainEvent:
        self._require_open()
        self._require_participant(agent)
        if agent in self.opinions:
            raise ValidationError(f"agent {agent!r} already has a live opinion")
        payload = {"text": text, "produced_via": produced_via.value}
        return self._append("opinion_submitted", agent, payload, timestamp)

    def revise_opinion(
        self,
        agent: AgentId,
        new_text: str,
        kind: RevisionKind,
        timestamp: str = "",
    ) -> DomainEvent:
        self._require_open()
        if agent not in self.opinions:
            raise ValidationError(f"no live opinion for agent {agent!r}")
        payload = {"text": new_text, "revision_kind": kind.value}
        return self._append("opinion_revised", agent, payload, timestamp)

    def withdraw_opinion(self, agent: AgentId, timestamp: str = "") -> DomainEvent:
        self._require_open()
        if agent not in self.opinions:
            raise ValidationError(f"no live opinion for agent {agent!r}")
        return self._append("opinion_withdrawn", agent, {}, timestamp)

    def withdraw_statement(
        self, actor: AgentId, candidate: CandidateId, timestamp: str = ""
    ) -> DomainEvent:
        self._require_open()
        stmt = self.statements.get(candidate)
        if stmt is None or stmt.status is not StatementStatus.ACTIVE:
            raise NotFoundError(f"no active statement {candidate!r}")
        if stmt.author != actor:
            raise ValidationError(
                f"agent {actor!r} is not the author of {candidate!r}"
            )
        return self._append(
            "statement_withdrawn", actor, {"candidate": candidate}, timestamp
        )

    def close(self, actor: str = "system", timestamp: str = "") -> DomainEvent:
        self._require_open()
        return self._append("deliberation_closed", actor, {}, timestamp)

    def record_review(
        self, actor: str, action_id: str, timestamp: str = ""
    ) -> DomainEvent:
        return self._append(
            "review_recorded", actor, {"action_id": action_id}, timestamp
        )

    def _check_statement_id_fresh(self, cid: CandidateId) -> None:
        # Ids are never reused, including after withdrawal.
        if cid in self.statements:
            raise ValidationError(f"statement id {cid!r} already used")

    # -- event application --------------------------------------------

    def _append(
        self, kind: str, actor: str, payload: dict, timestamp: str
    ) -> DomainEvent:
        event = DomainEvent(
            seq=self.event_seq + 1,
            kind=kind,
            actor=actor,
            timestamp=timestamp,
            payload=payload,
        )
        self.apply(event)
        return event

    def apply(self, event: DomainEvent) -> None:
        """Deterministic state transition; shared by live writes and replay."""
        if event.seq != self.event_seq + 1:
            raise CorruptLogError(
                f"expected seq {self.event_seq + 1}, got {event.seq}"
            )
        if event.kind not in EVENT_KINDS:
            raise CorruptLogError(f"unknown event kind {event.kind!r}")
        handler = getattr(self, f"_apply_{event.kind}")
        handler(event)
        self.event_seq = event.seq
        self.log.append(event)
        if event.kind not in ("review_recorded",):
            self.winner = self.recompute_consensus()

    def _apply_joined(self, event: DomainEvent) -> None:
        p = event.payload
        agent = p["agent"]
        self.participants.append(agent)
        self.opinions[agent] = Opinion(
            agent=agent,
            deliberation=self.id,
            text=p["opinion"]["text"],
            produced_via=ProducedVia(p["opinion"]["produced_via"]),
            created_at=event.timestamp,
            revised_at=event.timestamp,
        )
        stmt = p.get("statement")
        if stmt is not None:
            self._add_statement_to_pool(agent, stmt)
        if p.get("ranking") is not None:
            self.rankings[agent] = Ranking(agent, tuple(p["ranking"]))

    def _apply_statement_proposed(self, event: DomainEvent) -> None:
        author = event.actor
        self._add_statement_to_pool(author, event.payload["statement"])
        self.rankings[author] = Ranking(
            author, tuple(event.payload["author_ranking"])
        )

    def _add_statement_to_pool(self, author: AgentId, stmt: dict) -> None:
        cid = stmt["id"]
        self.statements[cid] = CandidateStatement(
            id=cid, author=author, title=stmt["title"], body=stmt["body"]
        )
        # Median insertion keeps every other agent's ranking complete.
        for agent, ranking in self.rankings.items():
            if agent != author:
                self.rankings[agent] = insert_at_median(ranking, cid)

    def _apply_ranking_submitted(self, event: DomainEvent) -> None:
        agent = event.actor
        self.rankings[agent] = Ranking(agent, tuple(event.payload["ranking"]))

    _apply_ranking_edited = _apply_ranking_submitted

    def _apply_opinion_submitted(self, event: DomainEvent) -> None:
        agent = event.actor
        p = event.payload
        self.opinions[agent] = Opinion(
            agent=agent,
            deliberation=self.id,
            text=p["text"],
            produced_via=ProducedVia(p["produced_via"]),
            created_at=event.timestamp,
            revised_at=event.timestamp,
        )

    def _apply_opinion_revised(self, event: DomainEvent) -> None:
        opinion = self.opinions[event.actor]
        opinion.text = event.payload["text"]
        opinion.revised_at = event.timestamp
        opinion.revision_count += 1

    def _apply_opinion_withdrawn(self, event: DomainEvent) -> None:
        del self.opinions[event.actor]

    def _apply_statement_withdrawn(self, event: DomainEvent) -> None:
        cid = event.payload["candidate"]
        self.statements[cid].status = StatementStatus.WITHDRAWN
        for agent, ranking in list(self.rankings.items()):
            if cid in ranking.order:
                self.rankings[agent] = withdraw_candidate(ranking, cid)

    def _apply_deliberation_closed(self, event: DomainEvent) -> None:
        self.status = "closed"

    def _apply_review_recorded(self, event: DomainEvent) -> None:
        pass

    # -- aggregation ---------------------------------------------------

    def recompute_consensus(self) -> Optional[CandidateId]:
        """Current winner, a pure function of (rankings, active pool)."""
        pool = self.active_pool
        rankings = [r for r in self.rankings.values() if r.order]
        if not pool or not rankings:
            return None
        if self.aggregator == "bradley_terry":
            return bt_winner(bt_fit(wins_from_rankings(rankings)))
        matrix = build_preference_matrix(rankings, pool)
        winner, _ = schulze_winner(strongest_paths(matrix))
        return winner

    def ranking_distribution(self) -> dict[CandidateId, dict[int, int]]:
        """Per active statement: count of agents placing it at each rank."""
        dist: dict[CandidateId, dict[int, int]] = {c: {} for c in self.active_pool}
        for ranking in self.rankings.values():
            for pos, cid in enumerate(ranking.order, start=1):
                if cid in dist:
                    dist[cid][pos] = dist[cid].get(pos, 0) + 1
        return dist

    def check_invariants(self) -> None:
        """Raise ValidationError if any machine invariant is violated."""
        pool = set(self.active_pool)
        for agent, ranking in self.rankings.items():
            if set(ranking.order) != pool:
                raise ValidationError(
                    f"ranking by {agent!r} is not a permutation of the pool"
                )
        for i, event in enumerate(self.log, start=1):
            if event.seq != i:
                raise ValidationError(f"event seq gap at position {i}")
        for stmt in self.statements.values():
            if (
                stmt.status is StatementStatus.ACTIVE
                and stmt.author not in self.participants
            ):
                raise ValidationError(
                    f"statement {stmt.id!r} authored by non-participant"
                )


def replay(
    events: Iterable[DomainEvent],
    id: DeliberationId,
    question: str,
    aggregator: str = "schulze",
) -> Deliberation:
    """Rebuild a deliberation from its ordered event log.

    Sequence numbers must be contiguous from 1; a gap raises
    CorruptLogError. A truncated log yields the state as of that prefix.
    """
    d = Deliberation(id, question, aggregator=aggregator)
    for event in events:
        d.apply(event)
    return d


def write_event_log(d: Deliberation) -> str:
    """Serialize a deliberation to newline-delimited records: a header
    line followed by one event per line."""
    header = json.dumps(
        {
            "record": "deliberation",
            "id": d.id,
            "question": d.question,
            "aggregator": d.aggregator,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return "\n".join([header] + [e.to_json() for e in d.log]) + "\n"


def read_event_log(text: str) -> Deliberation:
    """Parse and replay a serialized event log produced by write_event_log."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CorruptLogError("empty log file")
    header = json.loads(lines[0])
    if header.get("record") != "deliberation":
        raise CorruptLogError("missing deliberation header record")
    events = [DomainEvent.from_json(ln) for ln in lines[1:]]
    return replay(
        events,
        id=header["id"],
        question=header["question"],
        aggregator=header.get("aggregator", "schulze"),
    )
