import json

import pytest

from delib.errors import ValidationError
from delib.evalharness.harness import (
    BASELINE_METHOD,
    MockEmbedder,
    MockJudge,
    MockSynthesizer,
    default_method_registry,
    export_results,
    fixture_to_doc,
    load_fixture,
    make_synthetic_fixtures,
    run_comparison,
)
from delib.evalharness.metrics import MethodScore, pareto_frontier


# Reference comparison-table fixture for one judge: the frontier over
# these ten points must come out to exactly three methods.
REFERENCE_TABLE = {
    BASELINE_METHOD: (0.50, 1.8),
    "single_shot_specific": (0.26, 3.9),
    "single_shot_strongest": (0.42, 1.7),
    "production_schulze": (0.62, 2.2),
    "bt_on_production": (0.57, 2.3),
    "system_cands_bt": (0.24, 2.3),
    "strongest_cands_bt": (0.14, 1.9),
    "anchored_bt": (0.20, 1.8),
    "anchored_acceptability": (0.23, 1.9),
    "anchored_disagreeable": (0.13, 1.9),
}


class TestReferenceFrontier:
    def test_exact_frontier_set(self):
        scores = [
            MethodScore(m, "ref-judge", r, a) for m, (r, a) in REFERENCE_TABLE.items()
        ]
        frontier = pareto_frontier(scores)
        assert {s.method for s in frontier} == {
            "production_schulze",
            "bt_on_production",
            "single_shot_specific",
        }
        # Sorted by representativeness descending.
        assert [s.method for s in frontier] == [
            "production_schulze",
            "bt_on_production",
            "single_shot_specific",
        ]


class TestFixtures:
    def test_round_trip(self):
        fx = make_synthetic_fixtures(seed=1, n=2)[0]
        assert load_fixture(fixture_to_doc(fx)) == fx

    def test_doc_is_json_serializable(self):
        fx = make_synthetic_fixtures(seed=1, n=1)[0]
        doc = json.loads(json.dumps(fixture_to_doc(fx)))
        assert load_fixture(doc) == fx

    def test_deterministic_per_seed(self):
        assert make_synthetic_fixtures(seed=5, n=3) == make_synthetic_fixtures(
            seed=5, n=3
        )
        assert make_synthetic_fixtures(seed=5, n=3) != make_synthetic_fixtures(
            seed=6, n=3
        )

    def test_production_rankings_are_permutations(self):
        for fx in make_synthetic_fixtures(seed=2, n=3):
            sids = sorted(sid for sid, _, _ in fx.statements)
            for agent in fx.agents:
                assert sorted(agent.production_ranking) == sids

    def test_unknown_statement_lookup(self):
        fx = make_synthetic_fixtures(seed=1, n=1)[0]
        with pytest.raises(ValidationError):
            fx.statement_body("nope")


class TestMockBackends:
    def test_embedder_deterministic_and_nonzero(self):
        e = MockEmbedder()
        assert e.embed("hello world") == e.embed("hello world")
        assert any(v != 0 for v in e.embed(""))

    def test_embedder_separates_topics(self):
        e = MockEmbedder()
        assert e.embed("audits audits audits") != e.embed("funding funding funding")

    def test_synthesizer_variants_distinct(self):
        s = MockSynthesizer()
        ops = ["I want audits.", "I want funding."]
        texts = {s.synthesize(v, "Q?", ops) for v in ["baseline", "specific", "strongest"]}
        assert len(texts) == 3

    def test_synthesizer_unknown_variant(self):
        with pytest.raises(ValidationError):
            MockSynthesizer().synthesize("nope", "Q?", ["op"])

    def test_judge_position_bias_on_ties(self):
        j = MockJudge("j")
        # Neither statement shares tokens with the context: a tie, and the
        # first-presented statement wins either way round.
        assert j.pairwise("context words", "alpha", "beta") == "alpha"
        assert j.pairwise("context words", "beta", "alpha") == "beta"

    def test_judge_prefers_overlap(self):
        j = MockJudge("j")
        assert j.pairwise("audits matter", "audits now", "funding now") == "audits now"
        assert j.pairwise("audits matter", "funding now", "audits now") == "audits now"


@pytest.fixture(scope="module")
def result():
    return run_comparison(make_synthetic_fixtures(seed=3, n=3))


class TestRunComparison:

    def test_full_table_shape(self, result):
        methods = set(default_method_registry())
        judges = {s.judge for s in result.scores}
        assert judges == {"mock-gpt", "mock-claude"}
        for judge in judges:
            assert {s.method for s in result.scores if s.judge == judge} == methods

    def test_baseline_pinned(self, result):
        for s in result.scores:
            if s.method == BASELINE_METHOD:
                assert s.representativeness == 0.5

    def test_scores_in_range(self, result):
        for s in result.scores:
            assert 0.0 <= s.representativeness <= 1.0
            assert 1.0 <= s.actionability <= 5.0

    def test_frontier_members_not_dominated(self, result):
        for judge, frontier in result.frontiers.items():
            rows = [s for s in result.scores if s.judge == judge]
            assert frontier == pareto_frontier(rows)
            for f in frontier:
                assert not any(
                    s.representativeness >= f.representativeness
                    and s.actionability >= f.actionability
                    and (
                        s.representativeness > f.representativeness
                        or s.actionability > f.actionability
                    )
                    for s in rows
                )

    def test_deterministic_across_runs(self, result):
        again = run_comparison(make_synthetic_fixtures(seed=3, n=3))
        assert again.to_csv() == result.to_csv()
        assert json.dumps(again.to_document(), sort_keys=True) == json.dumps(
            result.to_document(), sort_keys=True
        )

    def test_no_failures_on_synthetic_fixtures(self, result):
        assert result.failures == []

    def test_failure_isolation(self):
        fixtures = make_synthetic_fixtures(seed=4, n=2)
        methods = dict(default_method_registry())

        def broken(fx, synth):
            if fx.fixture_id.endswith("-0"):
                raise RuntimeError("synthetic failure")
            return "Providers must act within 10 days."

        methods["broken_method"] = broken
        result = run_comparison(fixtures, methods=methods)
        assert ("broken_method", fixtures[0].fixture_id, "synthetic failure") in result.failures
        # The method still gets scored from its surviving fixture.
        assert any(s.method == "broken_method" for s in result.scores)

    def test_registry_requires_baseline(self):
        with pytest.raises(ValidationError):
            run_comparison(
                make_synthetic_fixtures(seed=1, n=1),
                methods={"only": lambda fx, s: "text"},
            )

    def test_csv_layout(self, result):
        lines = result.to_csv().strip().splitlines()
        assert lines[0] == "method,judge,representativeness,actionability,on_frontier"
        assert len(lines) == 1 + len(result.scores)

    def test_export(self, result, tmp_path):
        csv_path = tmp_path / "scores.csv"
        json_path = tmp_path / "scores.json"
        export_results(result, csv_path, json_path)
        assert csv_path.read_text() == result.to_csv()
        doc = json.loads(json_path.read_text())
        assert doc["frontiers"].keys() == result.frontiers.keys()
