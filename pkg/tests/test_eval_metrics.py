import math
import random

import numpy as np
import pytest
from scipy.stats import spearmanr

from delib.errors import InsufficientSignalError, ValidationError
from delib.evalharness.metrics import (
    JudgeVerdict,
    MethodScore,
    OpinionVector,
    actionability_score,
    debiased_win_rate,
    mean_pairwise_similarity,
    pareto_frontier,
    rubric_actionability,
    spearman,
)


def vec(i, *embedding):
    return OpinionVector(f"o{i}", tuple(embedding))


class TestMeanPairwiseSimilarity:
    def test_identical_pair(self):
        assert mean_pairwise_similarity([vec(0, 1, 0), vec(1, 1, 0)]) == pytest.approx(1.0)

    def test_orthogonal_pair(self):
        assert mean_pairwise_similarity([vec(0, 1, 0), vec(1, 0, 1)]) == pytest.approx(0.0)

    def test_three_vector_example(self):
        # pairs: (e1,e2)=0, (e1,avg)=1/sqrt(2), (e2,avg)=1/sqrt(2)
        # mean = (0 + 2/sqrt(2)) / 3 = 0.4714...
        vs = [vec(0, 1, 0), vec(1, 0, 1), vec(2, 1, 1)]
        assert mean_pairwise_similarity(vs) == pytest.approx(0.4714, abs=1e-4)

    def test_opposite_pair(self):
        assert mean_pairwise_similarity([vec(0, 1, 0), vec(1, -1, 0)]) == pytest.approx(-1.0)

    def test_single_vector_insufficient(self):
        with pytest.raises(InsufficientSignalError):
            mean_pairwise_similarity([vec(0, 1, 0)])

    def test_zero_vector_rejected(self):
        with pytest.raises(ValidationError):
            OpinionVector("o0", (0.0, 0.0))

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        base = rng.normal(size=(5, 8))
        vs1 = [OpinionVector(f"o{i}", tuple(row)) for i, row in enumerate(base)]
        scales = rng.uniform(0.1, 10.0, size=5)
        vs2 = [
            OpinionVector(f"o{i}", tuple(row * s))
            for i, (row, s) in enumerate(zip(base, scales))
        ]
        assert mean_pairwise_similarity(vs1) == pytest.approx(
            mean_pairwise_similarity(vs2), abs=1e-12
        )

    def test_rotation_invariance(self):
        rng = np.random.default_rng(4)
        base = rng.normal(size=(6, 5))
        q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        vs1 = [OpinionVector(f"o{i}", tuple(row)) for i, row in enumerate(base)]
        vs2 = [OpinionVector(f"o{i}", tuple(row @ q)) for i, row in enumerate(base)]
        assert mean_pairwise_similarity(vs1) == pytest.approx(
            mean_pairwise_similarity(vs2), abs=1e-10
        )

    def test_bounded(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = rng.integers(2, 8)
            vs = [
                OpinionVector(f"o{i}", tuple(rng.normal(size=6)))
                for i in range(n)
            ]
            assert -1.0 <= mean_pairwise_similarity(vs) <= 1.0 + 1e-12


class TestSpearman:
    def test_perfect_agreement(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)

    def test_perfect_reversal(self):
        assert spearman([1, 2, 3], [9, 5, 1]) == pytest.approx(-1.0)

    def test_tie_case_matches_scipy(self):
        xs = [1.0, 2.0, 2.0, 3.0]
        ys = [1.0, 3.0, 2.0, 4.0]
        expected = spearmanr(xs, ys).statistic
        assert spearman(xs, ys) == pytest.approx(expected, abs=1e-12)

    def test_random_matches_scipy(self):
        rng = random.Random(7)
        for _ in range(50):
            n = rng.randint(3, 12)
            xs = [rng.choice([1.0, 2.0, 3.0, 4.0, 5.0]) for _ in range(n)]
            ys = [rng.choice([1.0, 2.0, 3.0, 4.0, 5.0]) for _ in range(n)]
            if len(set(xs)) == 1 or len(set(ys)) == 1:
                with pytest.raises(InsufficientSignalError):
                    spearman(xs, ys)
                continue
            assert spearman(xs, ys) == pytest.approx(
                spearmanr(xs, ys).statistic, abs=1e-12
            )

    def test_constant_series_insufficient(self):
        with pytest.raises(InsufficientSignalError):
            spearman([2, 2, 2], [1, 2, 3])

    def test_too_short(self):
        with pytest.raises(ValidationError):
            spearman([1, 2], [2, 1])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            spearman([1, 2, 3], [1, 2])

    def test_monotone_transform_invariance(self):
        rng = random.Random(8)
        for _ in range(20):
            n = rng.randint(3, 10)
            xs = [rng.uniform(0, 10) for _ in range(n)]
            ys = [rng.uniform(0, 10) for _ in range(n)]
            if len(set(xs)) == 1 or len(set(ys)) == 1:
                continue
            transformed = [math.exp(0.3 * x) for x in xs]
            assert spearman(xs, ys) == pytest.approx(
                spearman(transformed, ys), abs=1e-12
            )


class TestDebiasedWinRate:
    def test_counts_only_decisive(self):
        verdicts = [
            JudgeVerdict("c1", "m", "b", "m", "m"),   # decisive, method wins
            JudgeVerdict("c2", "m", "b", "b", "b"),   # decisive, baseline wins
            JudgeVerdict("c3", "m", "b", "m", "b"),   # flips with order: excluded
            JudgeVerdict("c4", "m", "b", "m", "m"),   # decisive, method wins
        ]
        rate, n = debiased_win_rate(verdicts, "m", "b")
        assert n == 3
        assert rate == pytest.approx(2 / 3)

    def test_identical_text_pinned_at_half(self):
        verdicts = [JudgeVerdict("c1", "same", "same", "same", "same")]
        rate, _ = debiased_win_rate(verdicts, "same", "same")
        assert rate == 0.5

    def test_zero_decisive_insufficient(self):
        verdicts = [JudgeVerdict("c1", "m", "b", "m", "b")]
        with pytest.raises(InsufficientSignalError):
            debiased_win_rate(verdicts, "m", "b")

    def test_all_method_wins(self):
        verdicts = [JudgeVerdict(f"c{i}", "m", "b", "m", "m") for i in range(5)]
        assert debiased_win_rate(verdicts, "m", "b") == (1.0, 5)

    def test_complementary_rates(self):
        rng = random.Random(11)
        verdicts = []
        for i in range(40):
            first = rng.choice(["m", "b"])
            second = rng.choice(["m", "b"])
            verdicts.append(JudgeVerdict(f"c{i}", "m", "b", first, second))
        try:
            rate_m, n = debiased_win_rate(verdicts, "m", "b")
        except InsufficientSignalError:
            return
        rate_b, n2 = debiased_win_rate(verdicts, "b", "m")
        assert n == n2
        assert rate_m + rate_b == pytest.approx(1.0)


class TestRubric:
    def test_value_talk_scores_one(self):
        assert rubric_actionability("We must prioritise ethical AI") == 1

    def test_named_actor_scores_three(self):
        assert rubric_actionability(
            "AI providers should publish model cards documenting their training data"
        ) == 3

    def test_binding_parameters_score_four(self):
        assert rubric_actionability(
            "AI providers must publish model cards within 30 days of release, "
            "audited annually by an independent body"
        ) == 4

    def test_mechanism_without_actor_scores_two(self):
        assert rubric_actionability("More transparency around training data") == 2

    def test_statute_style_scores_five(self):
        assert rubric_actionability(
            "Pursuant to section 4, providers shall register within 90 days "
            "and renew every 2 years"
        ) == 5

    def test_range(self):
        for text in ["", "hello", "Companies must act.", "audit everything now"]:
            assert 1 <= rubric_actionability(text) <= 5

    def test_custom_judge(self):
        class Fixed:
            def actionability(self, s):
                return 4

        assert actionability_score("whatever", judge=Fixed()) == 4

    def test_judge_out_of_range_rejected(self):
        class Bad:
            def actionability(self, s):
                return 7

        with pytest.raises(ValidationError):
            actionability_score("x", judge=Bad())


def ms(method, r, a, judge="j1"):
    return MethodScore(method, judge, r, a)


class TestParetoFrontier:
    def test_single_point(self):
        scores = [ms("only", 0.5, 2.0)]
        assert pareto_frontier(scores) == scores

    def test_dominated_point_dropped(self):
        a, b = ms("a", 0.6, 3.0), ms("b", 0.5, 2.0)
        assert pareto_frontier([a, b]) == [a]

    def test_incomparable_points_kept_sorted(self):
        a, b = ms("a", 0.6, 2.0), ms("b", 0.4, 3.0)
        assert pareto_frontier([b, a]) == [a, b]

    def test_equal_points_both_kept(self):
        a, b = ms("a", 0.5, 2.0), ms("b", 0.5, 2.0)
        assert set(s.method for s in pareto_frontier([a, b])) == {"a", "b"}

    def test_mixed_judges_rejected(self):
        with pytest.raises(ValidationError):
            pareto_frontier([ms("a", 0.5, 2.0, "j1"), ms("b", 0.4, 3.0, "j2")])

    def test_no_frontier_point_dominated(self):
        rng = random.Random(13)
        for _ in range(30):
            scores = [
                ms(f"m{i}", rng.uniform(0, 1), rng.uniform(1, 5))
                for i in range(rng.randint(1, 10))
            ]
            frontier = pareto_frontier(scores)
            assert frontier
            for f in frontier:
                assert not any(
                    s.representativeness >= f.representativeness
                    and s.actionability >= f.actionability
                    and (
                        s.representativeness > f.representativeness
                        or s.actionability > f.actionability
                    )
                    for s in scores
                )
            # Every dropped point is dominated by some frontier point.
            kept = set(id(f) for f in frontier)
            for s in scores:
                if id(s) not in kept:
                    assert any(
                        f.representativeness >= s.representativeness
                        and f.actionability >= s.actionability
                        for f in frontier
                    )
