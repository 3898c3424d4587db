import random

import pytest

from delib.deliberation import DomainEvent, RevisionKind
from delib.errors import ValidationError
from delib.oversight import (
    ReviewableAction,
    RevisionTelemetry,
    build_digest,
    jaccard_risk,
    score_risk,
)


def action(id="a1", content="x", memory="x", created_at=0.0, **kwargs):
    return ReviewableAction(
        id=id,
        agent="ag1",
        deliberation="d1",
        kind="opinion_submitted",
        content=content,
        memory_snapshot=memory,
        created_at=created_at,
        **kwargs,
    )


class TestJaccardRisk:
    def test_identical_text_is_zero(self):
        assert jaccard_risk("taxes should fund transit", "taxes should fund transit") == 0.0

    def test_partial_overlap(self):
        # tokens {a,b,c} vs {a,d,e}: intersection 1, union 5 -> risk 0.8
        assert jaccard_risk("a b c", "a d e") == pytest.approx(0.8)

    def test_case_insensitive(self):
        assert jaccard_risk("Taxes Fund Transit", "taxes fund transit") == 0.0

    def test_disjoint_is_one(self):
        assert jaccard_risk("alpha beta", "gamma delta") == 1.0

    def test_both_empty_is_zero(self):
        assert jaccard_risk("", "") == 0.0

    def test_range(self):
        rng = random.Random(2)
        words = ["w%d" % i for i in range(10)]
        for _ in range(100):
            a = " ".join(rng.choices(words, k=rng.randint(0, 6)))
            b = " ".join(rng.choices(words, k=rng.randint(0, 6)))
            assert 0.0 <= jaccard_risk(a, b) <= 1.0


class TestScoreRisk:
    def test_records_score_on_action(self):
        a = action(content="a b c", memory="a d e")
        assert score_risk(a) == pytest.approx(0.8)
        assert a.risk == pytest.approx(0.8)

    def test_reviewed_action_rejected(self):
        a = action()
        a.mark_reviewed()
        with pytest.raises(ValidationError):
            score_risk(a)

    def test_out_of_range_scorer_rejected(self):
        with pytest.raises(ValidationError):
            score_risk(action(), scorer=lambda c, m: 1.5)
        with pytest.raises(ValidationError):
            score_risk(action(), scorer=lambda c, m: -0.1)

    def test_scorer_failure_leaves_action_unscored(self):
        a = action()

        def boom(c, m):
            raise RuntimeError("scorer down")

        with pytest.raises(RuntimeError):
            score_risk(a, scorer=boom)
        assert a.risk is None


class TestMarkReviewed:
    def test_single_transition(self):
        a = action()
        a.mark_reviewed()
        assert a.reviewed is True
        with pytest.raises(ValidationError):
            a.mark_reviewed()


class TestBuildDigest:
    def test_headline_is_max_risk(self):
        actions = [
            action(id="low", content="a b c", memory="a b c", created_at=1.0),
            action(id="high", content="p q r", memory="x y z", created_at=2.0),
            action(id="mid", content="a b c", memory="a d e", created_at=3.0),
        ]
        for a in actions:
            score_risk(a)
        digest = build_digest("u1", actions, (0.0, 10.0))
        assert digest.headline.id == "high"
        assert digest.deep_link == "/review/actions/high"

    def test_tie_breaks_by_recency(self):
        actions = [
            action(id="older", content="p", memory="z", created_at=1.0),
            action(id="newer", content="q", memory="z", created_at=2.0),
        ]
        for a in actions:
            score_risk(a)
        assert build_digest("u1", actions, (0.0, 10.0)).headline.id == "newer"

    def test_reviewed_actions_excluded(self):
        a = action(id="only", content="p", memory="z", created_at=1.0)
        score_risk(a)
        a.mark_reviewed()
        assert build_digest("u1", [a], (0.0, 10.0)) is None

    def test_unscored_actions_excluded(self):
        assert build_digest("u1", [action()], (0.0, 10.0)) is None

    def test_out_of_period_excluded(self):
        a = action(created_at=100.0)
        score_risk(a)
        assert build_digest("u1", [a], (0.0, 10.0)) is None
        assert build_digest("u1", [a], (50.0, 150.0)) is not None

    def test_document_shape(self):
        a = action(id="a9", content="word " * 100, created_at=5.0)
        score_risk(a)
        doc = build_digest("u1", [a], (0.0, 10.0)).to_document()
        assert doc["headline"]["action_id"] == "a9"
        assert len(doc["headline"]["excerpt"]) == 280
        assert doc["deep_link"].endswith("/a9")
        assert doc["period"] == {"start": 0.0, "end": 10.0}


def revision_event(seq, actor="ag1", kind="opinion_revised", revision_kind="refine"):
    payload = {"revision_kind": revision_kind} if revision_kind else {}
    return DomainEvent(seq=seq, kind=kind, actor=actor, payload=payload, timestamp=float(seq))


class TestRevisionTelemetry:
    def test_counts_by_kind(self):
        t = RevisionTelemetry()
        t.record_revision_outcome(revision_event(1, revision_kind="refine"), "d1", 0.0)
        t.record_revision_outcome(revision_event(2, revision_kind="reversal"), "d1", 1.0)
        t.record_revision_outcome(revision_event(3, revision_kind="refine"), "d1", 2.0)
        assert t.counts_by_revision_kind == {"refine": 2, "reversal": 1}
        assert t.counts_by_event_kind == {"opinion_revised": 3}

    def test_non_revision_event_rejected(self):
        t = RevisionTelemetry()
        with pytest.raises(ValidationError):
            t.record_revision_outcome(
                DomainEvent(seq=1, kind="joined", actor="a", payload={}, timestamp=0.0),
                "d1",
                0.0,
            )

    def test_memory_edit_within_window_flags_cascade(self):
        t = RevisionTelemetry(cascade_window=3600.0)
        t.record_revision_outcome(revision_event(1), "d1", at=100.0)
        t.record_memory_edit("ag1", at=100.0 + 3599.0)
        assert t.cascade_count() == 1
        assert t.records[0].cascaded is True

    def test_memory_edit_outside_window_does_not_flag(self):
        t = RevisionTelemetry(cascade_window=3600.0)
        t.record_revision_outcome(revision_event(1), "d1", at=100.0)
        t.record_memory_edit("ag1", at=100.0 + 3601.0)
        assert t.cascade_count() == 0

    def test_other_agent_edit_does_not_flag(self):
        t = RevisionTelemetry()
        t.record_revision_outcome(revision_event(1, actor="ag1"), "d1", at=0.0)
        t.record_memory_edit("ag2", at=1.0)
        assert t.cascade_count() == 0

    def test_two_revisions_one_edit_flags_both(self):
        t = RevisionTelemetry(cascade_window=3600.0)
        t.record_revision_outcome(revision_event(1), "d1", at=0.0)
        t.record_revision_outcome(
            revision_event(2, kind="ranking_edited", revision_kind=None), "d2", at=50.0
        )
        t.record_memory_edit("ag1", at=100.0)
        assert t.cascade_count() == 2

    def test_edit_before_revision_does_not_flag(self):
        t = RevisionTelemetry()
        t.record_revision_outcome(revision_event(1), "d1", at=100.0)
        t.record_memory_edit("ag1", at=50.0)
        assert t.cascade_count() == 0

    def test_counts_match_full_log_recount(self):
        # Oracle: replay the same interleaving over a plain list and
        # compute cascades by brute force.
        rng = random.Random(9)
        t = RevisionTelemetry(cascade_window=10.0)
        log = []  # (type, agent, at, revision_kind)
        at = 0.0
        agents = ["ag1", "ag2", "ag3"]
        for i in range(200):
            at += rng.uniform(0.1, 5.0)
            agent = rng.choice(agents)
            if rng.random() < 0.6:
                kind = rng.choice(RevisionTelemetry.REVISION_EVENT_KINDS)
                rk = (
                    rng.choice([k.value for k in RevisionKind])
                    if kind == "opinion_revised"
                    else None
                )
                t.record_revision_outcome(
                    revision_event(i + 1, actor=agent, kind=kind, revision_kind=rk),
                    "d1",
                    at,
                )
                log.append(("revision", agent, at, rk))
            else:
                t.record_memory_edit(agent, at)
                log.append(("edit", agent, at, None))

        revisions = [e for e in log if e[0] == "revision"]
        edits = [e for e in log if e[0] == "edit"]
        expected_cascades = sum(
            1
            for _, agent, at, _ in revisions
            if any(
                ea == agent and 0 <= et - at <= 10.0 for _, ea, et, _ in edits
            )
        )
        assert t.cascade_count() == expected_cascades
        assert len(t.records) == len(revisions)
        expected_rk = {}
        for _, _, _, rk in revisions:
            if rk is not None:
                expected_rk[rk] = expected_rk.get(rk, 0) + 1
        assert t.counts_by_revision_kind == expected_rk
