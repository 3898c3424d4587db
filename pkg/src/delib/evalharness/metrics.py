"""Evaluation metrics: opinion homogeneity, rank correlation, position-
debiased pairwise win rates, anchored actionability scoring, and Pareto
frontier computation over (representativeness, actionability) points.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import InsufficientSignalError, ValidationError


@dataclass(frozen=True)
class OpinionVector:
    opinion_id: str
    embedding: tuple[float, ...]
    production_path: str = "autonomous"  # autonomous | external | topic_interview

    def __post_init__(self):
        if not any(v != 0.0 for v in self.embedding):
            raise ValidationError("opinion embedding must be non-zero")


def mean_pairwise_similarity(vectors: Sequence[OpinionVector]) -> float:
    """Mean cosine similarity over all unordered pairs. Grouping by
    production path is the caller's job."""
    if len(vectors) < 2:
        raise InsufficientSignalError("need at least 2 vectors")
    mat = np.array([v.embedding for v in vectors], dtype=float)
    mat = mat / np.linalg.norm(mat, axis=1, keepdims=True)
    sims = mat @ mat.T
    n = len(vectors)
    iu = np.triu_indices(n, k=1)
    return float(sims[iu].mean())


def _average_ranks(xs: Sequence[float]) -> np.ndarray:
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs), dtype=float)
    i = 0
    sorted_xs = np.asarray(xs, dtype=float)[order]
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and sorted_xs[j + 1] == sorted_xs[i]:
            j += 1
        avg = (i + j) / 2 + 1  # 1-based average rank for the tie block
        ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rho: Pearson correlation of average-ranked data."""
    if len(xs) != len(ys):
        raise ValidationError("series must have equal length")
    if len(xs) < 3:
        raise ValidationError("need at least 3 observations")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise InsufficientSignalError("constant series has zero rank variance")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


@dataclass(frozen=True)
class JudgeVerdict:
    """One agent-context pairwise comparison, run in both presentation
    orders. `verdict_xy` is the winner when x was shown first."""

    context_id: str
    x: str
    y: str
    verdict_xy: str
    verdict_yx: str

    @property
    def decisive(self) -> bool:
        return self.verdict_xy == self.verdict_yx


def debiased_win_rate(
    verdicts: Iterable[JudgeVerdict],
    method_statement: str,
    baseline_statement: str,
) -> tuple[float, int]:
    """Pooled win rate for the method over decisive verdicts only.

    Indecisive verdicts (winner flips with presentation order) are
    excluded from numerator and denominator. A method compared against
    the identical text is pinned at 0.5 by construction.
    """
    decisive = [v for v in verdicts if v.decisive]
    n = len(decisive)
    if method_statement == baseline_statement:
        return 0.5, n
    if n == 0:
        raise InsufficientSignalError("zero decisive verdicts")
    wins = sum(1 for v in decisive if v.verdict_xy == method_statement)
    return wins / n, n


# -- anchored actionability rubric ------------------------------------

_ACTOR_RE = re.compile(
    r"\b(providers?|compan(?:y|ies)|corporations?|governments?|regulators?|"
    r"developers?|agenc(?:y|ies)|authorit(?:y|ies)|labs?|bod(?:y|ies)|"
    r"institutions?|parliament|congress|commission|ministr(?:y|ies)|"
    r"vendors?|operators?|platforms?|manufacturers?)\b",
    re.IGNORECASE,
)
_MODAL_RE = re.compile(r"\b(must|should|shall|will|are required|is required)\b", re.IGNORECASE)
_MECHANISM_RE = re.compile(
    r"\b(transparen\w*|accountab\w*|oversight|audit\w*|publish\w*|disclos\w*|"
    r"report\w*|regulat\w*|licens\w*|certif\w*|registr\w*|ban(?:ned|s)?|"
    r"tax\w*|fund\w*)\b",
    re.IGNORECASE,
)
_BINDING_RE = re.compile(
    r"\d|\b(annually|monthly|quarterly|weekly|daily)\b", re.IGNORECASE
)
_STATUTE_RE = re.compile(r"\b(pursuant|section\s+\d|subsection|herein)\b", re.IGNORECASE)


def rubric_actionability(statement: str) -> int:
    """Deterministic keyword rubric on a 1-5 scale.

    1: value talk with no mechanism or actor. 2: a kind of action but no
    actor. 3: a named actor committed to an action. 4: actor plus at
    least one binding parameter (number or fixed cadence). 5: reads like
    drafted legislation.
    """
    has_actor = bool(_ACTOR_RE.search(statement)) and bool(_MODAL_RE.search(statement))
    bindings = _BINDING_RE.findall(statement)
    if has_actor:
        if _STATUTE_RE.search(statement) and len(bindings) >= 2:
            return 5
        if bindings:
            return 4
        return 3
    if _MECHANISM_RE.search(statement):
        return 2
    return 1


def actionability_score(statement: str, judge=None) -> int:
    """Score a statement 1-5 with the given judge (default: the
    deterministic keyword rubric)."""
    if judge is None:
        return rubric_actionability(statement)
    score = int(judge.actionability(statement))
    if not 1 <= score <= 5:
        raise ValidationError(f"judge returned out-of-range score {score}")
    return score


# -- frontier ----------------------------------------------------------


@dataclass(frozen=True)
class MethodScore:
    method: str
    judge: str
    representativeness: float
    actionability: float


def pareto_frontier(scores: Sequence[MethodScore]) -> list[MethodScore]:
    """Non-dominated methods, maximizing both axes, sorted by
    representativeness descending. All scores must come from one judge."""
    judges = {s.judge for s in scores}
    if len(judges) > 1:
        raise ValidationError(f"scores span multiple judges: {sorted(judges)}")
    frontier = []
    for s in scores:
        dominated = any(
            other is not s
            and other.representativeness >= s.representativeness
            and other.actionability >= s.actionability
            and (
                other.representativeness > s.representativeness
                or other.actionability > s.actionability
            )
            for other in scores
        )
        if not dominated:
            frontier.append(s)
    return sorted(frontier, key=lambda s: -s.representativeness)
