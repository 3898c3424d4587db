"""Candidate pools, strict rankings, and pairwise preference extraction.

Rankings are strict total orders over the candidate pool of one
deliberation. All operations here are pure: they take immutable values
and return new ones, so they are safe to call from any thread.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ValidationError

CandidateId = str
AgentId = str


@dataclass(frozen=True)
class Ranking:
    """One agent's strict best-to-worst order over the candidate pool."""

    agent: AgentId
    order: tuple[CandidateId, ...]

    def __post_init__(self):
        if len(set(self.order)) != len(self.order):
            raise ValidationError(
                f"ranking by {self.agent!r} contains duplicate candidates"
            )

    def position(self, candidate: CandidateId) -> int:
        """1-based rank of `candidate` (1 = best)."""
        try:
            return self.order.index(candidate) + 1
        except ValueError:
            raise ValidationError(
                f"candidate {candidate!r} not in ranking by {self.agent!r}"
            ) from None


@dataclass(frozen=True)
class PreferenceMatrix:
    """Pairwise preference counts d[x][y] = rankings placing x above y."""

    candidates: tuple[CandidateId, ...]
    d: tuple[tuple[int, ...], ...]

    def index(self, candidate: CandidateId) -> int:
        return self.candidates.index(candidate)

    def count(self, x: CandidateId, y: CandidateId) -> int:
        return self.d[self.index(x)][self.index(y)]


def _check_complete(ranking: Ranking, pool: Sequence[CandidateId]) -> None:
    if set(ranking.order) != set(pool) or len(ranking.order) != len(pool):
        raise ValidationError(
            f"ranking by {ranking.agent!r} is not a permutation of the pool: "
            f"got {list(ranking.order)}, pool {list(pool)}"
        )


def build_preference_matrix(
    rankings: Iterable[Ranking], pool: Sequence[CandidateId]
) -> PreferenceMatrix:
    """Count, for every ordered candidate pair, how many rankings place the
    first strictly above the second.

    Every ranking must be a complete permutation of `pool`; an incomplete
    or duplicate-bearing ranking raises ValidationError naming the agent.
    The candidate axis follows `pool` order, so output is deterministic.
    """
    pool = tuple(pool)
    n = len(pool)
    idx = {c: i for i, c in enumerate(pool)}
    d = [[0] * n for _ in range(n)]
    for ranking in rankings:
        _check_complete(ranking, pool)
        for a, x in enumerate(ranking.order):
            for y in ranking.order[a + 1 :]:
                d[idx[x]][idx[y]] += 1
    return PreferenceMatrix(pool, tuple(tuple(row) for row in d))


def implied_pairwise_outcomes(
    ranking: Ranking,
) -> set[tuple[CandidateId, CandidateId]]:
    """Expand a ranking of length n into its n(n-1)/2 pairwise outcomes.

    (x, y) is present iff x precedes y in the order.
    """
    outcomes: set[tuple[CandidateId, CandidateId]] = set()
    for a, x in enumerate(ranking.order):
        for y in ranking.order[a + 1 :]:
            outcomes.add((x, y))
    return outcomes


def median_insert_position(n: int) -> int:
    """1-based insertion rank for a new candidate into a ranking of prior
    length n: the median of {1..n}, with half-ranks rounded up."""
    return n // 2 + 1


def insert_at_median(ranking: Ranking, new_candidate: CandidateId) -> Ranking:
    """Place `new_candidate` at the median rank of the existing order.

    All other candidates keep their relative order. For an even-length
    ranking the half-rank median rounds up (toward the worse half).
    """
    if new_candidate in ranking.order:
        raise ValidationError(
            f"candidate {new_candidate!r} already present in ranking "
            f"by {ranking.agent!r}"
        )
    pos = median_insert_position(len(ranking.order)) - 1
    order = ranking.order[:pos] + (new_candidate,) + ranking.order[pos:]
    return Ranking(ranking.agent, order)


def withdraw_candidate(ranking: Ranking, candidate: CandidateId) -> Ranking:
    """Remove `candidate`, preserving the relative order of the rest."""
    if candidate not in ranking.order:
        raise ValidationError(
            f"candidate {candidate!r} not in ranking by {ranking.agent!r}"
        )
    return Ranking(ranking.agent, tuple(c for c in ranking.order if c != candidate))
