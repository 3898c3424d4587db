from .metrics import (
    JudgeVerdict,
    MethodScore,
    OpinionVector,
    actionability_score,
    debiased_win_rate,
    mean_pairwise_similarity,
    pareto_frontier,
    spearman,
)
from .harness import (
    DeliberationFixture,
    FixtureAgent,
    MockJudge,
    MockSynthesizer,
    default_method_registry,
    load_fixture,
    make_synthetic_fixtures,
    run_comparison,
)

__all__ = [
    "JudgeVerdict",
    "MethodScore",
    "OpinionVector",
    "actionability_score",
    "debiased_win_rate",
    "mean_pairwise_similarity",
    "pareto_frontier",
    "spearman",
    "DeliberationFixture",
    "FixtureAgent",
    "MockJudge",
    "MockSynthesizer",
    "default_method_registry",
    "load_fixture",
    "make_synthetic_fixtures",
    "run_comparison",
]
