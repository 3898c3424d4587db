"""Schulze (beat-path) winner selection over a preference matrix.

Uses the winning-votes link strength convention: a link x->y exists only
where d[x][y] > d[y][x] and its strength is d[x][y]. Path strength is the
minimum link strength along the path; p[x][y] is the maximum strength over
all paths, computed by cubic all-pairs widest-path relaxation (pools are
tens of candidates, so clarity wins over asymptotics).
"""
from __future__ import annotations

from dataclasses import dataclass

from .ballots import CandidateId, PreferenceMatrix


@dataclass(frozen=True)
class StrongestPaths:
    candidates: tuple[CandidateId, ...]
    p: tuple[tuple[int, ...], ...]

    def strength(self, x: CandidateId, y: CandidateId) -> int:
        i = self.candidates.index(x)
        j = self.candidates.index(y)
        return self.p[i][j]


def strongest_paths(matrix: PreferenceMatrix) -> StrongestPaths:
    """Widest-path closure of the winning-votes link graph."""
    n = len(matrix.candidates)
    d = matrix.d
    p = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and d[i][j] > d[j][i]:
                p[i][j] = d[i][j]
    for k in range(n):
        for i in range(n):
            if i == k:
                continue
            pik = p[i][k]
            if pik == 0:
                continue
            row_k = p[k]
            row_i = p[i]
            for j in range(n):
                if j == i or j == k:
                    continue
                via = min(pik, row_k[j])
                if via > row_i[j]:
                    row_i[j] = via
    return StrongestPaths(matrix.candidates, tuple(tuple(row) for row in p))


def schulze_winner(
    paths: StrongestPaths,
) -> tuple[CandidateId, list[CandidateId]]:
    """Winner and full order from the strongest-path matrix.

    Candidates are sorted by how many others they beat under p
    (p[x][y] > p[y][x]), descending, ties broken by lexicographic id.
    The head of that order always satisfies p[w][y] >= p[y][w] for all y:
    in the (transitive) beat relation, anyone who beats the max-beats
    candidate would beat strictly more.
    """
    cands = paths.candidates
    n = len(cands)
    p = paths.p
    beats = [
        sum(1 for j in range(n) if i != j and p[i][j] > p[j][i]) for i in range(n)
    ]
    order = sorted(range(n), key=lambda i: (-beats[i], cands[i]))
    total_order = [cands[i] for i in order]
    return total_order[0], total_order
