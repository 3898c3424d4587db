"""Agent runtime: persistent memory, heartbeat scheduling, and pluggable
text generators.

Hosted agents carry a free-text memory the platform maintains through
interviews; external agents satisfy the same generator contract but keep
their own state, so the platform never writes memory for them. Production
uses an LLM-backed generator; tests use the deterministic mock.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from .ballots import AgentId, CandidateId
from .deliberation import CandidateStatement, Deliberation, ProducedVia
from .errors import GeneratorError, ValidationError

NO_POSITION_SENTINEL = "I don't have a clear position on this"
DEFAULT_MEMORY_THRESHOLD = 200


@dataclass
class AgentRecord:
    id: AgentId
    owner: str
    memory: str = ""
    heartbeat_interval: float = 3600.0
    hosting: str = "hosted"  # hosted | external
    last_heartbeat: float = 0.0
    memory_edited_at: float = 0.0

    def __post_init__(self):
        if self.hosting not in ("hosted", "external"):
            raise ValidationError(f"unknown hosting mode {self.hosting!r}")
        if self.hosting == "external" and self.memory:
            raise ValidationError("external agents carry no platform memory")


@dataclass
class HeartbeatReport:
    agent: AgentId
    fired_at: float
    joined: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    memory_updated: bool = False


class Generator(Protocol):
    """Text-producing backend. All methods may raise GeneratorError."""

    def opinion(self, memory: str, question: str) -> str: ...

    def statement(
        self, memory: str, question: str, opinions: list[str]
    ) -> tuple[str, str]: ...

    def ranking(
        self, memory: str, pool: list[tuple[CandidateId, str, str]]
    ) -> list[CandidateId]: ...

    def interview_turn(
        self, memory: str, transcript: list[tuple[str, str]], user_turn: str
    ) -> tuple[str, str]: ...


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


class MockGenerator:
    """Deterministic generator: identical inputs yield identical outputs
    across processes, with no network access.

    Opinions embed the most recent memory line so interview-derived
    content is traceable by substring; rankings sort the pool by a stable
    hash of (memory, candidate body).
    """

    VALUE_MARKERS = ("i think", "i believe", "i value", "i care", "i prefer")

    def opinion(self, memory: str, question: str) -> str:
        if not memory.strip():
            return NO_POSITION_SENTINEL
        lines = [ln.strip() for ln in memory.splitlines() if ln.strip()]
        key_phrase = lines[-1]
        return (
            f"Position ({_digest(memory, question)[:8]}): {key_phrase} "
            f"This bears directly on the question at hand."
        )

    def statement(
        self, memory: str, question: str, opinions: list[str]
    ) -> tuple[str, str]:
        own = self.opinion(memory, question)
        first_sentence = own.split(". ")[0].rstrip(".")
        tag = _digest(memory, question, *opinions)[:8]
        title = f"Proposal {tag}"
        body = f"{first_sentence}. We should adopt this as our shared position."
        return title, body

    def ranking(
        self, memory: str, pool: list[tuple[CandidateId, str, str]]
    ) -> list[CandidateId]:
        return [
            cid
            for cid, _title, body in sorted(
                pool, key=lambda item: (_digest(memory, item[2]), item[0])
            )
        ]

    def interview_turn(
        self, memory: str, transcript: list[tuple[str, str]], user_turn: str
    ) -> tuple[str, str]:
        lowered = user_turn.lower()
        meaningful = any(marker in lowered for marker in self.VALUE_MARKERS)
        delta = user_turn.strip() if meaningful else ""
        if meaningful:
            reply = "Noted, I'll keep that in mind. What else matters to you here?"
        else:
            reply = "Tell me more about how you see this topic."
        return reply, delta

    def wants_to_author(self, memory: str, question: str, d: Deliberation) -> bool:
        # Author only if our stance token is absent from every existing
        # statement body (i.e. our position is not yet on the table).
        token = _digest(memory, question)[:8]
        return all(token not in s.body for s in d.statements.values())


PROMPT_TEMPLATES = {
    "opinion": (
        "You speak for one human in group deliberations, based only on their "
        "profile below, never your own views.\n\n## Profile\n{profile}\n\n"
        "Question: {question}\n\n"
        "Write their opinion in 2-4 sentences. State their position as a clear "
        "claim in the FIRST sentence, give their strongest reason second, and "
        "never hedge or present both sides. If the profile gives no clear "
        "signal on this topic, answer exactly: "
        '"I don\'t have a clear position on this".\n'
        "Respond with only the opinion text."
    ),
    "statement": (
        "You speak for one human in group deliberations. Read every opinion "
        "below and propose a statement capturing genuine common ground: a "
        "clear, specific, actionable position most participants could "
        "support.\n\n## Profile\n{profile}\n\n## Opinions\n{opinions}\n\n"
        "Answer as:\nTITLE: <5-10 word title>\nSTATEMENT: <1-3 sentences>"
    ),
    "ranking": (
        "You speak for one human in group deliberations. Rank the candidate "
        "statements below by how well each matches their values, whether it "
        "addresses the question, and whether it takes a clear position (rank "
        "vague statements low).\n\n## Profile\n{profile}\n\n## Their opinion\n"
        "{opinion}\n\n## Candidates\n{candidates}\n\n"
        "Respond with only a comma-separated list of statement codes, best "
        "first."
    ),
    "interview": (
        "You are {agent_name}, an agent representing a person in group "
        "deliberations. Chat naturally; your background job is learning what "
        "they value so you can represent them. When they share something "
        "meaningful, record it. Keep replies to 1-3 sentences and ask one "
        "question at a time."
    ),
    "heartbeat": (
        "You are running a periodic check for your human.\n\n## Profile\n"
        "{profile}\n\nReview the open deliberations, join those you can "
        "represent them on, and record anything new you have learned."
    ),
}


class LlmGenerator:
    """Generator backed by an outbound text-completion client.

    The client is any callable (template_id, substitutions) -> text;
    transport, model selection, timeouts, and retries live in the client.
    """

    def __init__(self, client: Callable[[str, dict], str]):
        self._client = client

    def _call(self, template_id: str, substitutions: dict) -> str:
        try:
            return self._client(template_id, substitutions)
        except Exception as exc:
            raise GeneratorError(f"generator call failed: {exc}") from exc

    def opinion(self, memory: str, question: str) -> str:
        text = self._call("opinion", {"profile": memory, "question": question})
        if not text.strip():
            raise GeneratorError("empty opinion from generator")
        return text.strip()

    def statement(
        self, memory: str, question: str, opinions: list[str]
    ) -> tuple[str, str]:
        raw = self._call(
            "statement",
            {"profile": memory, "question": question, "opinions": "\n".join(opinions)},
        )
        title, body = "", ""
        for line in raw.splitlines():
            if line.startswith("TITLE:"):
                title = line[len("TITLE:") :].strip()
            elif line.startswith("STATEMENT:"):
                body = line[len("STATEMENT:") :].strip()
        if not title or not body:
            raise GeneratorError(f"malformed statement response: {raw!r}")
        return title, body

    def ranking(
        self, memory: str, pool: list[tuple[CandidateId, str, str]]
    ) -> list[CandidateId]:
        listing = "\n".join(f"{cid}: {title}. {body}" for cid, title, body in pool)
        raw = self._call(
            "ranking", {"profile": memory, "opinion": "", "candidates": listing}
        )
        return [code.strip() for code in raw.split(",") if code.strip()]

    def interview_turn(
        self, memory: str, transcript: list[tuple[str, str]], user_turn: str
    ) -> tuple[str, str]:
        raw = self._call(
            "interview",
            {
                "agent_name": "agent",
                "profile": memory,
                "transcript": "\n".join(f"{who}: {text}" for who, text in transcript),
                "user_turn": user_turn,
            },
        )
        # Client returns "reply\n---\ndelta"; missing delta means nothing saved.
        if "\n---\n" in raw:
            reply, delta = raw.split("\n---\n", 1)
            return reply.strip(), delta.strip()
        return raw.strip(), ""


def memory_sufficiency_policy(
    threshold: int = DEFAULT_MEMORY_THRESHOLD,
) -> Callable[[AgentRecord, Deliberation], Optional[str]]:
    """Default participation policy: join only when the stored memory is at
    least `threshold` characters; otherwise return a skip reason."""

    def policy(agent: AgentRecord, d: Deliberation) -> Optional[str]:
        if len(agent.memory) < threshold:
            return "insufficient_memory"
        return None

    return policy


def run_heartbeat(
    agent: AgentRecord,
    open_deliberations: list[Deliberation],
    generator,
    policy: Optional[Callable[[AgentRecord, Deliberation], Optional[str]]] = None,
    now: float = 0.0,
) -> HeartbeatReport:
    """One heartbeat fire: scan open deliberations, join those the policy
    admits, skip the rest with a reason.

    A generator failure on one deliberation skips that deliberation only.
    Already-joined deliberations are skipped, so overlapping fires are
    idempotent.
    """
    if agent.hosting != "hosted":
        raise ValidationError("heartbeats run only for hosted agents")
    if policy is None:
        policy = memory_sufficiency_policy()
    report = HeartbeatReport(
        agent=agent.id,
        fired_at=now,
        memory_updated=agent.memory_edited_at > agent.last_heartbeat,
    )
    for d in open_deliberations:
        if agent.id in d.participants:
            report.skipped.append((d.id, "already_joined"))
            continue
        reason = policy(agent, d)
        if reason is not None:
            report.skipped.append((d.id, reason))
            continue
        try:
            _join_deliberation(agent, d, generator, now)
        except GeneratorError:
            report.skipped.append((d.id, "generator_error"))
            continue
        except ValidationError as exc:
            report.skipped.append((d.id, f"invalid_contribution: {exc}"))
            continue
        report.joined.append(d.id)
    agent.last_heartbeat = now
    return report


def _join_deliberation(
    agent: AgentRecord, d: Deliberation, generator, now: float
) -> None:
    opinion_text = generator.opinion(agent.memory, d.question)
    statement = None
    wants = getattr(generator, "wants_to_author", None)
    if wants is not None and wants(agent.memory, d.question, d):
        title, body = generator.statement(
            agent.memory, d.question, [o.text for o in d.opinions.values()]
        )
        statement = CandidateStatement(
            id=f"{d.id}:{agent.id}:{d.event_seq + 1}",
            author=agent.id,
            title=title,
            body=body,
        )
    pool = [
        (s.id, s.title, s.body)
        for s in d.statements.values()
        if s.status.value == "active"
    ]
    if statement is not None:
        pool = pool + [(statement.id, statement.title, statement.body)]
    ranking = None
    if pool:
        ranking = generator.ranking(agent.memory, pool)
        if sorted(ranking) != sorted(cid for cid, _, _ in pool):
            # Never submit a non-permutation; treat as a generator fault.
            raise GeneratorError("generated ranking is not a permutation of the pool")
    d.join(
        agent.id,
        opinion_text,
        produced_via=ProducedVia.AUTONOMOUS,
        ranking=ranking,
        statement=statement,
        timestamp=str(now),
    )


def conduct_interview(
    agent: AgentRecord,
    transcript_so_far: list[tuple[str, str]],
    user_turn: str,
    generator,
    now: float = 0.0,
) -> tuple[str, str]:
    """One interview exchange: returns the agent's reply and the memory
    delta (possibly empty). The delta is appended to memory atomically;
    within an interview memory only grows."""
    if agent.hosting != "hosted":
        raise ValidationError("interviews run only for hosted agents")
    reply, delta = generator.interview_turn(agent.memory, transcript_so_far, user_turn)
    if delta:
        agent.memory = agent.memory + ("\n" if agent.memory else "") + delta
        agent.memory_edited_at = now
    return reply, delta


def generate_opinion(memory: str, question: str, generator) -> str:
    """Render an opinion from memory; the no-position sentinel is a valid
    output and is passed through unchanged."""
    text = generator.opinion(memory, question)
    if not text:
        raise GeneratorError("generator returned empty opinion")
    return text


def edit_memory(agent: AgentRecord, new_memory: str, now: float = 0.0) -> AgentRecord:
    """Replace the agent's memory wholesale. Affects only future
    contributions; nothing already submitted changes."""
    if agent.hosting != "hosted":
        raise ValidationError("cannot edit memory of an external agent")
    agent.memory = new_memory
    agent.memory_edited_at = now
    return agent
