"""Regularized Bradley-Terry strength fitting over pairwise outcomes.

Regularization is an additive pseudocount on every ordered candidate
pair, which keeps the MLE finite under unanimous sweeps. The fit is a
minorization-maximization iteration (monotone, derivative-free), gauge
fixed so log-strengths sum to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .ballots import CandidateId, Ranking
from .errors import ConvergenceError, ValidationError

DEFAULT_PSEUDOCOUNT = 0.5
CONVERGENCE_TOL = 1e-10
MAX_ITERATIONS = 10_000


@dataclass(frozen=True)
class PairwiseWins:
    """w[x][y] = number of outcomes where x beat y."""

    candidates: tuple[CandidateId, ...]
    w: tuple[tuple[int, ...], ...]

    def count(self, x: CandidateId, y: CandidateId) -> int:
        i = self.candidates.index(x)
        j = self.candidates.index(y)
        return self.w[i][j]


@dataclass(frozen=True)
class BtStrengths:
    """Fitted strengths, strictly positive, log-strengths summing to zero."""

    strengths: dict[CandidateId, float]

    def __getitem__(self, candidate: CandidateId) -> float:
        return self.strengths[candidate]


def wins_from_rankings(rankings: Iterable[Ranking]) -> PairwiseWins:
    """Tally the pairwise outcomes implied by a set of complete rankings.

    A ranking of length n implies n(n-1)/2 outcomes, one per ordered pair.
    All rankings must cover the same pool.
    """
    rankings = list(rankings)
    if not rankings:
        raise ValidationError("need at least one ranking")
    pool = tuple(rankings[0].order)
    pool_set = set(pool)
    n = len(pool)
    idx = {c: i for i, c in enumerate(pool)}
    w = [[0] * n for _ in range(n)]
    for ranking in rankings:
        if set(ranking.order) != pool_set or len(ranking.order) != n:
            raise ValidationError(
                f"ranking by {ranking.agent!r} covers a different pool"
            )
        for a, x in enumerate(ranking.order):
            for y in ranking.order[a + 1 :]:
                w[idx[x]][idx[y]] += 1
    return PairwiseWins(pool, tuple(tuple(row) for row in w))


def regularized_log_likelihood(
    wins: PairwiseWins, strengths: dict[CandidateId, float], pseudocount: float
) -> float:
    """Objective maximized by bt_fit: sum over ordered pairs x != y of
    (w[x][y] + pseudocount) * log(s[x] / (s[x] + s[y]))."""
    cands = wins.candidates
    total = 0.0
    for i, x in enumerate(cands):
        for j, y in enumerate(cands):
            if i == j:
                continue
            a = wins.w[i][j] + pseudocount
            total += a * math.log(strengths[x] / (strengths[x] + strengths[y]))
    return total


def bt_fit(wins: PairwiseWins, pseudocount: float = DEFAULT_PSEUDOCOUNT) -> BtStrengths:
    """Fit strengths by MM iteration on the pseudocount-augmented counts.

    Converges when the max absolute change in log-strength drops below
    1e-10; raises ConvergenceError (carrying the last iterate) if the
    10,000-iteration cap is hit first.
    """
    if pseudocount < 0:
        raise ValidationError("pseudocount must be non-negative")
    cands = wins.candidates
    n = len(cands)
    if n == 0:
        raise ValidationError("need at least one candidate")
    if n == 1:
        return BtStrengths({cands[0]: 1.0})

    # Augmented counts: a[i][j] = wins + pseudocount on every ordered pair.
    a = [
        [wins.w[i][j] + pseudocount if i != j else 0.0 for j in range(n)]
        for i in range(n)
    ]
    if pseudocount == 0:
        for i in range(n):
            if all(a[i][j] == 0 and a[j][i] == 0 for j in range(n) if j != i):
                raise ValidationError(
                    f"candidate {cands[i]!r} appears in no comparison and "
                    "pseudocount is zero"
                )
    row_wins = [sum(a[i]) for i in range(n)]
    totals = [[a[i][j] + a[j][i] for j in range(n)] for i in range(n)]

    s = [1.0] * n
    for _ in range(MAX_ITERATIONS):
        new_s = []
        for i in range(n):
            denom = sum(
                totals[i][j] / (s[i] + s[j]) for j in range(n) if j != i
            )
            if denom == 0:
                new_s.append(s[i])
            else:
                new_s.append(row_wins[i] / denom)
        # Gauge fix: divide by the geometric mean.
        log_gm = sum(math.log(v) for v in new_s) / n
        new_s = [v / math.exp(log_gm) for v in new_s]
        delta = max(abs(math.log(new_s[i]) - math.log(s[i])) for i in range(n))
        s = new_s
        if delta < CONVERGENCE_TOL:
            return BtStrengths(dict(zip(cands, s)))
    raise ConvergenceError(
        f"BT fit did not converge within {MAX_ITERATIONS} iterations",
        last_iterate=BtStrengths(dict(zip(cands, s))),
    )


def bt_winner(strengths: BtStrengths) -> CandidateId:
    """Highest-strength candidate; ties broken by lexicographic id."""
    return min(strengths.strengths, key=lambda c: (-strengths.strengths[c], c))
