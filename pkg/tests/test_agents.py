import pytest

from delib.agents import (
    NO_POSITION_SENTINEL,
    AgentRecord,
    LlmGenerator,
    MockGenerator,
    conduct_interview,
    edit_memory,
    generate_opinion,
    memory_sufficiency_policy,
    run_heartbeat,
)
from delib.deliberation import Deliberation
from delib.errors import GeneratorError, ValidationError

LONG_MEMORY = (
    "Values open processes and community review above all.\n"
    "Believes decisions should name who acts and by when.\n"
    "Wary of sweeping mandates that skip consultation with the people affected.\n"
    "Wants independent audits with published findings on a fixed schedule."
)


def hosted(memory=LONG_MEMORY, **kwargs):
    return AgentRecord(id="ag1", owner="u1", memory=memory, **kwargs)


def open_delib(n=1):
    return [Deliberation(f"d{i}", f"Question {i}?") for i in range(n)]


class TestMockGenerator:
    def test_opinion_deterministic(self):
        g = MockGenerator()
        assert g.opinion(LONG_MEMORY, "Q?") == g.opinion(LONG_MEMORY, "Q?")

    def test_empty_memory_gives_sentinel(self):
        assert MockGenerator().opinion("", "Q?") == NO_POSITION_SENTINEL

    def test_distinct_memories_distinct_opinions(self):
        g = MockGenerator()
        memories = [f"Memory variant {i} about things." for i in range(50)]
        outputs = {g.opinion(m, "Q?") for m in memories}
        assert len(outputs) == 50

    def test_ranking_is_permutation(self):
        g = MockGenerator()
        pool = [(f"c{i}", f"T{i}", f"Body {i}") for i in range(6)]
        ranked = g.ranking(LONG_MEMORY, pool)
        assert sorted(ranked) == sorted(cid for cid, _, _ in pool)


class TestRunHeartbeat:
    def test_short_memory_skips_all(self):
        agent = hosted(memory="x" * 150)
        report = run_heartbeat(agent, open_delib(2), MockGenerator())
        assert report.joined == []
        assert [reason for _, reason in report.skipped] == [
            "insufficient_memory",
            "insufficient_memory",
        ]

    def test_sufficient_memory_joins(self):
        agent = hosted(memory="x" * 250 + "\nCares about audits.")
        delibs = open_delib(1)
        report = run_heartbeat(agent, delibs, MockGenerator())
        assert report.joined == [delibs[0].id]
        assert delibs[0].winner is not None

    def test_zero_deliberations(self):
        report = run_heartbeat(hosted(), [], MockGenerator())
        assert report.joined == [] and report.skipped == []
        assert report.memory_updated is False

    def test_idempotent_across_fires(self):
        agent = hosted()
        delibs = open_delib(1)
        run_heartbeat(agent, delibs, MockGenerator())
        report = run_heartbeat(agent, delibs, MockGenerator())
        assert report.joined == []
        assert report.skipped == [(delibs[0].id, "already_joined")]

    def test_generator_failure_skips_only_that_deliberation(self):
        class Flaky(MockGenerator):
            def opinion(self, memory, question):
                if "0" in question:
                    raise GeneratorError("boom")
                return super().opinion(memory, question)

        delibs = open_delib(2)
        report = run_heartbeat(hosted(), delibs, Flaky())
        assert report.joined == ["d1"]
        assert ("d0", "generator_error") in report.skipped

    def test_bad_ranking_skips_with_reason(self):
        class BadRanker(MockGenerator):
            def ranking(self, memory, pool):
                return [pool[0][0]] * len(pool)

        from delib.deliberation import CandidateStatement

        # Seed a pool so a ranking is required.
        d = Deliberation("d0", "Q?")
        d.join(
            "seed",
            "op",
            ranking=["S1"],
            statement=CandidateStatement("S1", "seed", "T", "B"),
        )
        report = run_heartbeat(hosted(), [d], BadRanker())
        assert report.joined == []
        assert report.skipped[0][1] == "generator_error"

    def test_external_agent_rejected(self):
        agent = AgentRecord(id="x", owner="u", hosting="external")
        with pytest.raises(ValidationError):
            run_heartbeat(agent, [], MockGenerator())

    def test_memory_updated_reflects_edit_history(self):
        agent = hosted()
        run_heartbeat(agent, [], MockGenerator(), now=1.0)
        edit_memory(agent, LONG_MEMORY + "\nNew fact.", now=2.0)
        report = run_heartbeat(agent, [], MockGenerator(), now=3.0)
        assert report.memory_updated is True
        report = run_heartbeat(agent, [], MockGenerator(), now=4.0)
        assert report.memory_updated is False


class TestConductInterview:
    def test_value_statement_saved_verbatim(self):
        agent = hosted(memory="")
        _, delta = conduct_interview(
            agent, [], "I believe audits should be mandatory.", MockGenerator()
        )
        assert delta == "I believe audits should be mandatory."
        assert "I believe audits should be mandatory." in agent.memory

    def test_small_talk_saves_nothing(self):
        agent = hosted(memory="existing")
        _, delta = conduct_interview(agent, [], "nice weather today", MockGenerator())
        assert delta == ""
        assert agent.memory == "existing"

    def test_interview_then_opinion_references_memory(self):
        g = MockGenerator()
        agent = hosted(memory="")
        conduct_interview(agent, [], "I value community-led oversight boards.", g)
        opinion = generate_opinion(agent.memory, "How to govern?", g)
        assert "I value community-led oversight boards." in opinion

    def test_memory_grows_monotonically(self):
        agent = hosted(memory="start")
        for i in range(3):
            before = agent.memory
            conduct_interview(agent, [], f"I think point {i} matters.", MockGenerator())
            assert agent.memory.startswith(before)

    def test_external_agent_rejected(self):
        agent = AgentRecord(id="x", owner="u", hosting="external")
        with pytest.raises(ValidationError):
            conduct_interview(agent, [], "I think so.", MockGenerator())


class TestEditMemory:
    def test_external_agent_rejected(self):
        agent = AgentRecord(id="x", owner="u", hosting="external")
        with pytest.raises(ValidationError):
            edit_memory(agent, "new")

    def test_external_agent_never_carries_memory(self):
        with pytest.raises(ValidationError):
            AgentRecord(id="x", owner="u", hosting="external", memory="nope")

    def test_edit_does_not_touch_existing_opinions(self):
        agent = hosted()
        delibs = open_delib(1)
        run_heartbeat(agent, delibs, MockGenerator())
        before = delibs[0].state_bytes()
        edit_memory(agent, "Entirely new memory content for the future.")
        assert delibs[0].state_bytes() == before

    def test_subsequent_opinions_see_new_memory(self):
        g = MockGenerator()
        agent = hosted()
        old = generate_opinion(agent.memory, "Q?", g)
        edit_memory(agent, "Fresh view: prioritize local pilots first.")
        new = generate_opinion(agent.memory, "Q?", g)
        assert old != new
        assert "Fresh view: prioritize local pilots first." in new


class TestPolicy:
    def test_threshold_boundary(self):
        policy = memory_sufficiency_policy(200)
        d = Deliberation("d", "Q?")
        assert policy(hosted(memory="x" * 199), d) == "insufficient_memory"
        assert policy(hosted(memory="x" * 200), d) is None


class TestLlmGenerator:
    def test_statement_parsing(self):
        def client(template_id, subs):
            assert template_id == "statement"
            return "TITLE: A short title\nSTATEMENT: One sentence."

        g = LlmGenerator(client)
        assert g.statement("m", "q", ["op"]) == ("A short title", "One sentence.")

    def test_malformed_statement_raises(self):
        g = LlmGenerator(lambda t, s: "no markers here")
        with pytest.raises(GeneratorError):
            g.statement("m", "q", [])

    def test_transport_failure_wrapped(self):
        def client(template_id, subs):
            raise OSError("connection refused")

        with pytest.raises(GeneratorError):
            LlmGenerator(client).opinion("m", "q")

    def test_ranking_parse(self):
        g = LlmGenerator(lambda t, s: "c2, c0 , c1")
        assert g.ranking("m", [("c0", "t", "b"), ("c1", "t", "b"), ("c2", "t", "b")]) == [
            "c2", "c0", "c1",
        ]
