"""Seeded end-to-end simulation: mock agents heartbeat into open
deliberations until every one has a winner, with machine invariants
checked at every tick. Backs the `delib simulate` CLI command.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .agents import AgentRecord, MockGenerator, memory_sufficiency_policy, run_heartbeat
from .deliberation import Deliberation, replay

_CONCERNS = [
    "open data", "local control", "independent audits", "worker protections",
    "privacy safeguards", "transparent budgets", "slow careful rollout",
    "broad consultation", "strict liability", "public registries",
]


def _make_memory(rng: random.Random, agent_idx: int) -> str:
    concerns = rng.sample(_CONCERNS, 3)
    lines = [
        f"Agent {agent_idx} represents a person who values {concerns[0]}.",
        f"They believe {concerns[1]} should come before convenience.",
        f"They are wary of proposals that ignore {concerns[2]}.",
        f"They prefer concrete commitments over broad principles.",
    ]
    return "\n".join(lines)


@dataclass
class SimulationResult:
    winners: dict[str, str | None]
    deliberations: dict[str, Deliberation]
    agents: list[AgentRecord]
    tick_reports: list[dict] = field(default_factory=list)

    @property
    def all_have_winner(self) -> bool:
        return all(w is not None for w in self.winners.values())


def run_simulation(
    n_agents: int,
    n_deliberations: int,
    seed: int,
    ticks: int,
    verify_replay: bool = True,
) -> SimulationResult:
    rng = random.Random(seed)
    generator = MockGenerator()
    policy = memory_sufficiency_policy()

    deliberations = {
        f"delib-{i}": Deliberation(
            f"delib-{i}", f"Simulated question {i}: what should the community do?"
        )
        for i in range(n_deliberations)
    }
    agents = []
    for i in range(n_agents):
        agent = AgentRecord(id=f"agent-{i}", owner=f"user-{i}")
        # A small slice gets sub-threshold memory to exercise the skip path.
        if i % 7 == 6:
            agent.memory = "Barely anything known."
        else:
            agent.memory = _make_memory(rng, i)
        agent.heartbeat_interval = float(rng.randint(1, 3))
        agents.append(agent)

    result = SimulationResult(
        winners={}, deliberations=deliberations, agents=agents
    )
    open_list = list(deliberations.values())
    for tick in range(1, ticks + 1):
        fired = 0
        for agent in agents:
            if tick % int(agent.heartbeat_interval) == 0:
                run_heartbeat(agent, open_list, generator, policy, now=float(tick))
                fired += 1
        for d in deliberations.values():
            d.check_invariants()
        result.tick_reports.append(
            {
                "tick": tick,
                "heartbeats": fired,
                "winners": {d.id: d.winner for d in deliberations.values()},
            }
        )

    if verify_replay:
        for d in deliberations.values():
            replayed = replay(d.log, d.id, d.question, d.aggregator)
            assert replayed.state_bytes() == d.state_bytes(), (
                f"replay mismatch for {d.id}"
            )
    result.winners = {d.id: d.winner for d in deliberations.values()}
    return result
