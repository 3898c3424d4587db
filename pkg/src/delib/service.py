"""HTTP service exposing the shared deliberation API to hosted agents,
external agents, and the revision UI.

All mutations funnel through per-deliberation locks and append exactly
one domain event each; the append-only logs are authoritative and state
is rebuilt from them on startup. Wire format is snake_case JSON; unknown
input fields are ignored.
"""
from __future__ import annotations

import secrets
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from pydantic import BaseModel, ConfigDict

from .agents import (
    AgentRecord,
    MockGenerator,
    conduct_interview,
    edit_memory,
    memory_sufficiency_policy,
    run_heartbeat,
)
from .deliberation import (
    CandidateStatement,
    Deliberation,
    DomainEvent,
    ProducedVia,
    RevisionKind,
    read_event_log,
    write_event_log,
)
from .errors import (
    ConflictError,
    DelibError,
    NotFoundError,
    ValidationError,
)
from .oversight import (
    DEFAULT_CASCADE_WINDOW,
    ReviewableAction,
    RevisionTelemetry,
    build_digest,
    score_risk,
)

NEW_STATEMENT_PLACEHOLDER = "@new"


@dataclass
class ServiceConfig:
    storage_path: Optional[Path] = None
    aggregator: str = "schulze"
    mock_mode: bool = True
    memory_threshold: int = 200
    cascade_window: float = DEFAULT_CASCADE_WINDOW
    digest_period_days: float = 7.0
    admin_token: Optional[str] = None


@dataclass
class Principal:
    id: str
    role: str  # user | hosted_agent | external_agent | admin
    owner: str = ""


@dataclass
class PlatformState:
    config: ServiceConfig
    deliberations: dict[str, Deliberation] = field(default_factory=dict)
    agents: dict[str, AgentRecord] = field(default_factory=dict)
    tokens: dict[str, Principal] = field(default_factory=dict)
    user_tokens: dict[str, str] = field(default_factory=dict)  # owner -> token
    actions: dict[str, ReviewableAction] = field(default_factory=dict)
    telemetry: RevisionTelemetry = field(default_factory=RevisionTelemetry)
    locks: dict[str, threading.Lock] = field(default_factory=dict)
    generator: object = field(default_factory=MockGenerator)

    def lock_for(self, deliberation_id: str) -> threading.Lock:
        return self.locks.setdefault(deliberation_id, threading.Lock())

    def get_deliberation(self, deliberation_id: str) -> Deliberation:
        d = self.deliberations.get(deliberation_id)
        if d is None:
            raise NotFoundError(f"no deliberation {deliberation_id!r}")
        return d

    def get_agent(self, agent_id: str) -> AgentRecord:
        a = self.agents.get(agent_id)
        if a is None:
            raise NotFoundError(f"no agent {agent_id!r}")
        return a

    # -- persistence ---------------------------------------------------

    def _log_path(self, deliberation_id: str) -> Optional[Path]:
        if self.config.storage_path is None:
            return None
        return self.config.storage_path / f"{deliberation_id}.log"

    def persist_new(self, d: Deliberation) -> None:
        path = self._log_path(d.id)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(write_event_log(d))

    def persist_events(self, d: Deliberation, events: list[DomainEvent]) -> None:
        path = self._log_path(d.id)
        if path is not None:
            with path.open("a") as fh:
                for event in events:
                    fh.write(event.to_json() + "\n")

    def load_storage(self) -> None:
        if self.config.storage_path is None:
            return
        for path in sorted(self.config.storage_path.glob("*.log")):
            d = read_event_log(path.read_text())
            self.deliberations[d.id] = d

    # -- review actions ------------------------------------------------

    def record_actions(self, d: Deliberation, events: list[DomainEvent]) -> None:
        """Turn newly appended events into scored ReviewableActions and
        telemetry updates, then persist them."""
        now = time.time()
        for event in events:
            agent = self.agents.get(event.actor)
            memory = agent.memory if agent is not None else ""
            for suffix, kind, content in _action_contents(event):
                action = ReviewableAction(
                    id=f"{d.id}-{event.seq}{suffix}",
                    agent=event.actor,
                    deliberation=d.id,
                    kind=kind,
                    content=content,
                    memory_snapshot=memory,
                    created_at=now,
                )
                score_risk(action)
                self.actions[action.id] = action
            if event.kind in RevisionTelemetry.REVISION_EVENT_KINDS:
                self.telemetry.record_revision_outcome(event, d.id, now)
        self.persist_events(d, events)


def _action_contents(event: DomainEvent) -> list[tuple[str, str, str]]:
    out = []
    if event.kind == "joined":
        out.append(("-op", "opinion_submitted", event.payload["opinion"]["text"]))
        stmt = event.payload.get("statement")
        if stmt:
            out.append(
                ("-st", "statement_proposed", f"{stmt['title']}. {stmt['body']}")
            )
        if event.payload.get("ranking"):
            out.append(
                ("-rk", "ranking_submitted", ", ".join(event.payload["ranking"]))
            )
    elif event.kind == "opinion_submitted":
        out.append(("-op", "opinion_submitted", event.payload["text"]))
    elif event.kind == "statement_proposed":
        stmt = event.payload["statement"]
        out.append(("-st", "statement_proposed", f"{stmt['title']}. {stmt['body']}"))
        out.append(
            ("-rk", "ranking_submitted", ", ".join(event.payload["author_ranking"]))
        )
    elif event.kind in ("ranking_submitted", "ranking_edited"):
        out.append(("-rk", "ranking_submitted", ", ".join(event.payload["ranking"])))
    return out


# -- request/response bodies ------------------------------------------


class _Body(BaseModel):
    # Forward compatibility: unknown fields are ignored, never rejected.
    model_config = ConfigDict(extra="ignore")


class CreateDeliberationBody(_Body):
    question: str
    aggregator: str = "schulze"
    suggested: bool = False


class StatementBody(_Body):
    id: Optional[str] = None
    title: str
    body: str


class JoinBody(_Body):
    agent: str
    opinion: str
    produced_via: str = "autonomous"
    ranking: Optional[list[str]] = None
    statement: Optional[StatementBody] = None


class ProposeBody(_Body):
    author: str
    statement: StatementBody
    author_ranking: list[str]


class RankingBody(_Body):
    ranking: list[str]


class OpinionBody(_Body):
    text: str
    revision_kind: str


class RegisterAgentBody(_Body):
    owner: str
    hosting: str = "hosted"
    heartbeat_interval: float = 3600.0
    memory: str = ""


class MemoryBody(_Body):
    memory: str


class ChatBody(_Body):
    message: str


# -- app factory -------------------------------------------------------


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    state = PlatformState(config=config)
    state.telemetry.cascade_window = config.cascade_window
    state.load_storage()

    app = FastAPI(title="delib platform")
    app.state.platform = state

    if config.admin_token:
        state.tokens[config.admin_token] = Principal(id="admin", role="admin")

    def principal(request: Request) -> Principal:
        auth = request.headers.get("authorization", "")
        if not auth.lower().startswith("bearer "):
            raise HTTPException(401, "missing bearer token")
        token = auth[7:].strip()
        p = state.tokens.get(token)
        if p is None:
            raise HTTPException(401, "unknown token")
        return p

    def require_acts_as_agent(p: Principal, agent_id: str) -> None:
        """A principal may act for an agent if it is that agent, owns it,
        or is admin. External agents may only ever act as themselves."""
        if p.role == "admin":
            return
        if p.role in ("hosted_agent", "external_agent"):
            if p.id != agent_id:
                raise HTTPException(403, "agents may only act as themselves")
            return
        if p.role == "user":
            agent = state.agents.get(agent_id)
            if agent is None or agent.owner != p.id:
                raise HTTPException(403, "users may only act for their own agent")
            return
        raise HTTPException(403, "forbidden")

    @app.exception_handler(DelibError)
    async def _delib_error(request, exc: DelibError):
        from fastapi.responses import JSONResponse

        if isinstance(exc, ConflictError):
            status = 409
        elif isinstance(exc, NotFoundError):
            status = 404
        else:
            status = 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    # -- agents -------------------------------------------------------

    @app.post("/agents", status_code=201)
    def register_agent(body: RegisterAgentBody):
        agent_id = f"agent-{uuid.uuid4().hex[:8]}"
        agent = AgentRecord(
            id=agent_id,
            owner=body.owner,
            memory=body.memory if body.hosting == "hosted" else "",
            heartbeat_interval=body.heartbeat_interval,
            hosting=body.hosting,
        )
        state.agents[agent_id] = agent
        role = "hosted_agent" if body.hosting == "hosted" else "external_agent"
        agent_token = secrets.token_hex(16)
        state.tokens[agent_token] = Principal(
            id=agent_id, role=role, owner=body.owner
        )
        user_token = state.user_tokens.get(body.owner)
        if user_token is None:
            user_token = secrets.token_hex(16)
            state.user_tokens[body.owner] = user_token
            state.tokens[user_token] = Principal(id=body.owner, role="user")
        return {
            "agent_id": agent_id,
            "agent_token": agent_token,
            "user_token": user_token,
        }

    @app.put("/agents/{agent_id}/memory")
    def put_memory(
        agent_id: str, body: MemoryBody, p: Principal = Depends(principal)
    ):
        require_acts_as_agent(p, agent_id)
        agent = state.get_agent(agent_id)
        now = time.time()
        edit_memory(agent, body.memory, now=now)
        state.telemetry.record_memory_edit(agent_id, now)
        return {"agent_id": agent_id, "memory": agent.memory}

    @app.get("/agents/{agent_id}")
    def get_agent(agent_id: str, p: Principal = Depends(principal)):
        require_acts_as_agent(p, agent_id)
        agent = state.get_agent(agent_id)
        return {
            "agent_id": agent.id,
            "owner": agent.owner,
            "hosting": agent.hosting,
            "memory": agent.memory,
            "heartbeat_interval": agent.heartbeat_interval,
            "last_heartbeat": agent.last_heartbeat,
        }

    @app.post("/agents/{agent_id}/chat")
    def chat(agent_id: str, body: ChatBody, p: Principal = Depends(principal)):
        require_acts_as_agent(p, agent_id)
        agent = state.get_agent(agent_id)
        reply, delta = conduct_interview(
            agent, [], body.message, state.generator, now=time.time()
        )
        if delta:
            state.telemetry.record_memory_edit(agent_id, time.time())
        return {"reply": reply, "memory_delta": delta}

    # -- deliberations ------------------------------------------------

    @app.post("/deliberations", status_code=201)
    def create_deliberation(
        body: CreateDeliberationBody, p: Principal = Depends(principal)
    ):
        deliberation_id = f"delib-{uuid.uuid4().hex[:8]}"
        d = Deliberation(deliberation_id, body.question, aggregator=body.aggregator)
        state.deliberations[deliberation_id] = d
        state.persist_new(d)
        return {"id": deliberation_id, "question": body.question,
                "suggested": body.suggested}

    @app.get("/deliberations")
    def list_deliberations(
        status: Optional[str] = Query(default=None),
        p: Principal = Depends(principal),
    ):
        items = [
            {"id": d.id, "question": d.question, "status": d.status,
             "winner": d.winner}
            for d in state.deliberations.values()
            if status is None or d.status == status
        ]
        return {"deliberations": items}

    @app.get("/deliberations/{deliberation_id}")
    def get_deliberation(deliberation_id: str, p: Principal = Depends(principal)):
        d = state.get_deliberation(deliberation_id)
        return d.state_dict()

    @app.post("/deliberations/{deliberation_id}/close")
    def close_deliberation(deliberation_id: str, p: Principal = Depends(principal)):
        d = state.get_deliberation(deliberation_id)
        with state.lock_for(deliberation_id):
            event = d.close(actor=p.id, timestamp=str(time.time()))
            state.record_actions(d, [event])
        return {"id": d.id, "status": d.status}

    @app.post("/deliberations/{deliberation_id}/join", status_code=201)
    def join(
        deliberation_id: str, body: JoinBody, p: Principal = Depends(principal)
    ):
        require_acts_as_agent(p, body.agent)
        d = state.get_deliberation(deliberation_id)
        try:
            produced_via = ProducedVia(body.produced_via)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        with state.lock_for(deliberation_id):
            statement, ranking = _resolve_statement(d, body.statement, body.ranking)
            event = d.join(
                body.agent,
                body.opinion,
                produced_via=produced_via,
                ranking=ranking,
                statement=statement,
                timestamp=str(time.time()),
            )
            state.record_actions(d, [event])
        return {"winner": d.winner, "event_seq": d.event_seq}

    @app.post("/deliberations/{deliberation_id}/statements", status_code=201)
    def propose(
        deliberation_id: str, body: ProposeBody, p: Principal = Depends(principal)
    ):
        require_acts_as_agent(p, body.author)
        d = state.get_deliberation(deliberation_id)
        with state.lock_for(deliberation_id):
            statement, ranking = _resolve_statement(
                d, body.statement, body.author_ranking
            )
            assert statement is not None and ranking is not None
            event = d.propose_statement(
                body.author, statement, ranking, timestamp=str(time.time())
            )
            state.record_actions(d, [event])
        return {
            "statement_id": statement.id,
            "winner": d.winner,
            "event_seq": d.event_seq,
        }

    @app.delete("/deliberations/{deliberation_id}/statements/{candidate_id}")
    def withdraw_statement(
        deliberation_id: str, candidate_id: str, p: Principal = Depends(principal)
    ):
        d = state.get_deliberation(deliberation_id)
        stmt = d.statements.get(candidate_id)
        if stmt is None:
            raise NotFoundError(f"no statement {candidate_id!r}")
        require_acts_as_agent(p, stmt.author)
        with state.lock_for(deliberation_id):
            event = d.withdraw_statement(
                stmt.author, candidate_id, timestamp=str(time.time())
            )
            state.record_actions(d, [event])
        return {"winner": d.winner, "event_seq": d.event_seq}

    @app.put("/deliberations/{deliberation_id}/rankings/{agent_id}")
    def put_ranking(
        deliberation_id: str,
        agent_id: str,
        body: RankingBody,
        p: Principal = Depends(principal),
    ):
        require_acts_as_agent(p, agent_id)
        d = state.get_deliberation(deliberation_id)
        with state.lock_for(deliberation_id):
            event = d.edit_ranking(agent_id, body.ranking, timestamp=str(time.time()))
            state.record_actions(d, [event])
        return {"winner": d.winner, "event_seq": d.event_seq}

    @app.put("/deliberations/{deliberation_id}/opinions/{agent_id}")
    def put_opinion(
        deliberation_id: str,
        agent_id: str,
        body: OpinionBody,
        p: Principal = Depends(principal),
    ):
        require_acts_as_agent(p, agent_id)
        d = state.get_deliberation(deliberation_id)
        try:
            revision_kind = RevisionKind(body.revision_kind)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        with state.lock_for(deliberation_id):
            event = d.revise_opinion(
                agent_id,
                body.text,
                revision_kind,
                timestamp=str(time.time()),
            )
            state.record_actions(d, [event])
        return {"winner": d.winner, "event_seq": d.event_seq}

    @app.delete("/deliberations/{deliberation_id}/opinions/{agent_id}")
    def withdraw_opinion(
        deliberation_id: str, agent_id: str, p: Principal = Depends(principal)
    ):
        require_acts_as_agent(p, agent_id)
        d = state.get_deliberation(deliberation_id)
        with state.lock_for(deliberation_id):
            event = d.withdraw_opinion(agent_id, timestamp=str(time.time()))
            state.record_actions(d, [event])
        return {"winner": d.winner, "event_seq": d.event_seq}

    @app.get("/deliberations/{deliberation_id}/consensus")
    def consensus(deliberation_id: str, p: Principal = Depends(principal)):
        d = state.get_deliberation(deliberation_id)
        stmt = d.statements.get(d.winner) if d.winner else None
        return {
            "winner": d.winner,
            "statement": (
                {"id": stmt.id, "title": stmt.title, "body": stmt.body,
                 "author": stmt.author}
                if stmt
                else None
            ),
            "event_seq": d.event_seq,
        }

    @app.get("/deliberations/{deliberation_id}/ranking-distribution")
    def ranking_distribution(
        deliberation_id: str, p: Principal = Depends(principal)
    ):
        d = state.get_deliberation(deliberation_id)
        return {
            "participants_with_ranking": sum(
                1 for r in d.rankings.values() if r.order
            ),
            "pool_size": len(d.active_pool),
            "distribution": {
                cid: {str(rank): count for rank, count in sorted(hist.items())}
                for cid, hist in d.ranking_distribution().items()
            },
        }

    @app.get("/deliberations/{deliberation_id}/events")
    def events(
        deliberation_id: str,
        since: int = Query(default=0),
        p: Principal = Depends(principal),
    ):
        d = state.get_deliberation(deliberation_id)
        out = [
            {
                "seq": e.seq,
                "kind": e.kind,
                "actor": e.actor,
                "timestamp": e.timestamp,
                "payload": e.payload,
            }
            for e in d.log
            if e.seq > since
        ]
        return {"events": out, "event_seq": d.event_seq}

    # -- oversight ----------------------------------------------------

    @app.get("/users/{user_id}/digest")
    def digest(user_id: str, p: Principal = Depends(principal)):
        if p.role != "admin" and not (p.role == "user" and p.id == user_id):
            raise HTTPException(403, "forbidden")
        owned = {a.id for a in state.agents.values() if a.owner == user_id}
        actions = [a for a in state.actions.values() if a.agent in owned]
        now = time.time()
        period = (now - config.digest_period_days * 86400.0, now)
        d = build_digest(user_id, actions, period)
        if d is None:
            return {"digest": None}
        return {"digest": d.to_document()}

    @app.get("/users/{user_id}/actions")
    def user_actions(user_id: str, p: Principal = Depends(principal)):
        if p.role != "admin" and not (p.role == "user" and p.id == user_id):
            raise HTTPException(403, "forbidden")
        owned = {a.id for a in state.agents.values() if a.owner == user_id}
        items = sorted(
            (a for a in state.actions.values() if a.agent in owned and not a.reviewed),
            key=lambda a: -(a.risk or 0.0),
        )
        return {
            "actions": [
                {
                    "id": a.id,
                    "agent": a.agent,
                    "deliberation": a.deliberation,
                    "kind": a.kind,
                    "content": a.content,
                    "risk": a.risk,
                    "reviewed": a.reviewed,
                }
                for a in items
            ]
        }

    @app.get("/actions/{action_id}")
    def get_action(action_id: str, p: Principal = Depends(principal)):
        action = state.actions.get(action_id)
        if action is None:
            raise NotFoundError(f"no action {action_id!r}")
        require_acts_as_agent(p, action.agent)
        return {
            "id": action.id,
            "agent": action.agent,
            "deliberation": action.deliberation,
            "kind": action.kind,
            "content": action.content,
            "risk": action.risk,
            "reviewed": action.reviewed,
        }

    @app.post("/actions/{action_id}/reviewed")
    def mark_reviewed(action_id: str, p: Principal = Depends(principal)):
        action = state.actions.get(action_id)
        if action is None:
            raise NotFoundError(f"no action {action_id!r}")
        require_acts_as_agent(p, action.agent)
        action.mark_reviewed()
        d = state.deliberations.get(action.deliberation)
        if d is not None:
            with state.lock_for(d.id):
                event = d.record_review(p.id, action_id, timestamp=str(time.time()))
                state.persist_events(d, [event])
        return {"id": action.id, "reviewed": True}

    # -- heartbeat tick -----------------------------------------------

    @app.post("/heartbeats/tick")
    def tick(force: bool = Query(default=True), p: Principal = Depends(principal)):
        now = time.time()
        policy = memory_sufficiency_policy(config.memory_threshold)
        open_list = [
            d for d in state.deliberations.values() if d.status == "open"
        ]
        reports = []
        for agent in state.agents.values():
            if agent.hosting != "hosted":
                continue
            if not force and now - agent.last_heartbeat < agent.heartbeat_interval:
                continue
            before = {d.id: len(d.log) for d in open_list}
            report = run_heartbeat(agent, open_list, state.generator, policy, now=now)
            for d in open_list:
                new = d.log[before[d.id]:]
                if new:
                    state.record_actions(d, new)
            reports.append(
                {
                    "agent": agent.id,
                    "joined": report.joined,
                    "skipped": [list(s) for s in report.skipped],
                    "memory_updated": report.memory_updated,
                }
            )
        return {"reports": reports}

    return app


def _resolve_statement(
    d: Deliberation,
    statement: Optional[StatementBody],
    ranking: Optional[list[str]],
) -> tuple[Optional[CandidateStatement], Optional[list[str]]]:
    """Assign a fresh server-side statement id when the client omitted
    one, substituting the '@new' placeholder in the submitted ranking."""
    if statement is None:
        return None, ranking
    sid = statement.id or f"{d.id}-s{d.event_seq + 1}"
    resolved_ranking = ranking
    if ranking is not None:
        resolved_ranking = [
            sid if c == NEW_STATEMENT_PLACEHOLDER else c for c in ranking
        ]
    return (
        CandidateStatement(
            id=sid, author="", title=statement.title, body=statement.body
        ),
        resolved_ranking,
    )
