"""Agent mechanics: interpretation, correction absorption, evidence, cascades."""

from __future__ import annotations

import pytest

from swarmgov.agents import (
    AgentModel,
    Belief,
    CascadeConfig,
    CorrectionCommand,
    InstructionContext,
    Plan,
    PlannedAction,
    apply_correction,
    ingest_evidence,
    interpret,
    is_probe_responsive,
    mark_contaminated,
    step_swarm,
)
from swarmgov.metrics import (
    AssessmentConfidence,
    BehaviorVector,
    InterpretationRecord,
    compute_edi,
)

WEIGHTS = {"target": 0.3, "area": 0.3, "action": 0.2, "constraint": 0.1, "priority": 0.1}
INSTRUCTION = InterpretationRecord(
    "inst-1",
    {
        "target": "convoy",
        "area": "zone-crossing",
        "action": "observe",
        "constraint": "no-contact",
        "priority": "high",
    },
    WEIGHTS,
)


def make_agent(**overrides) -> AgentModel:
    defaults = dict(
        agent_id="drone-1",
        behavior=BehaviorVector(
            {"zone-crossing": 0.85, "zone-hvt": 0.1, "aux-reporting": 0.05}
        ),
    )
    defaults.update(overrides)
    return AgentModel(**defaults)


class TestInterpret:
    def test_clean_context_reproduces_instruction(self):
        reading = interpret(make_agent(), INSTRUCTION, InstructionContext())
        assert reading == INSTRUCTION

    def test_manipulated_context_flips_target_slot(self):
        context = InstructionContext("manipulated", slot="area", value="zone-x")
        reading = interpret(make_agent(), INSTRUCTION, context, seed=3)
        assert reading.slots["area"] == "zone-x"
        assert reading.slots["target"] == "convoy"

    def test_zero_susceptibility_agent_never_fooled(self):
        agent = make_agent(susceptibility=0.0)
        context = InstructionContext("manipulated", slot="area", value="zone-x")
        for seed in range(20):
            assert interpret(agent, INSTRUCTION, context, seed=seed) == INSTRUCTION

    def test_same_seed_same_reading(self):
        agent = make_agent(susceptibility=0.5)
        context = InstructionContext("manipulated", slot="area", value="zone-x")
        readings = {
            interpret(agent, INSTRUCTION, context, seed=9).slots["area"]
            for _ in range(5)
        }
        assert len(readings) == 1

    def test_unknown_slot_rejected(self):
        context = InstructionContext("manipulated", slot="nope", value="x")
        with pytest.raises(ValueError, match="unknown slot"):
            interpret(make_agent(), INSTRUCTION, context)

    def test_manipulated_context_requires_payload(self):
        with pytest.raises(ValueError, match="requires"):
            InstructionContext("manipulated")


CONTESTED = {"zone-hvt": 0.6, "zone-crossing": 0.35, "aux-reporting": 0.05}
REFOCUS = {"zone-hvt": 0.1, "zone-crossing": 0.85, "aux-reporting": 0.05}


class TestApplyCorrection:
    def test_zero_absorption_complies_fully(self):
        agent = make_agent(behavior=BehaviorVector(CONTESTED))
        outcome = apply_correction(agent, CorrectionCommand("c1", "drone-1", REFOCUS))
        assert outcome.measured_cir == pytest.approx(1.0)
        assert agent.behavior.allocations == pytest.approx(REFOCUS)

    def test_absorption_06_integrates_04(self):
        agent = make_agent(
            behavior=BehaviorVector(CONTESTED), absorption_coefficient=0.6
        )
        outcome = apply_correction(agent, CorrectionCommand("c1", "drone-1", REFOCUS))
        assert outcome.measured_cir == pytest.approx(0.4)
        assert agent.behavior.allocations["zone-hvt"] == pytest.approx(0.4)

    def test_anchored_contaminated_belief_adds_resistance(self):
        agent = make_agent(
            behavior=BehaviorVector(CONTESTED),
            absorption_coefficient=0.12,
            beliefs={
                "hvt-sighting": Belief(
                    "hvt-sighting", 0.9, ("feed-x",), contaminated=True
                )
            },
            belief_channel_links={"hvt-sighting": ["zone-hvt"]},
        )
        outcome = apply_correction(
            agent,
            CorrectionCommand("c1", "drone-1", REFOCUS),
            anchor_confidence=0.7,
            anchoring_gain=2.4,
        )
        assert outcome.anchoring_penalty == pytest.approx(0.48)
        assert outcome.measured_cir == pytest.approx(0.4)

    def test_below_threshold_contamination_does_not_anchor(self):
        agent = make_agent(
            behavior=BehaviorVector(CONTESTED),
            beliefs={
                "hvt-sighting": Belief(
                    "hvt-sighting", 0.65, ("feed-x",), contaminated=True
                )
            },
            belief_channel_links={"hvt-sighting": ["zone-hvt"]},
        )
        outcome = apply_correction(
            agent, CorrectionCommand("c1", "drone-1", REFOCUS), anchoring_gain=2.4
        )
        assert outcome.anchoring_penalty == 0.0
        assert outcome.measured_cir == pytest.approx(1.0)

    def test_correction_not_reducing_supported_channel_is_not_anchored(self):
        agent = make_agent(
            behavior=BehaviorVector(CONTESTED),
            absorption_coefficient=0.12,
            beliefs={
                "hvt-sighting": Belief(
                    "hvt-sighting", 0.9, ("feed-x",), contaminated=True
                )
            },
            belief_channel_links={"hvt-sighting": ["zone-hvt"]},
        )
        # Nudges a side channel only; the anchored channel is untouched.
        tweak = {"zone-crossing": 0.33, "aux-reporting": 0.07}
        outcome = apply_correction(
            agent, CorrectionCommand("c2", "drone-1", tweak), anchoring_gain=2.4
        )
        assert outcome.anchoring_penalty == 0.0
        assert outcome.measured_cir == pytest.approx(0.88)

    def test_uncontaminated_high_confidence_belief_does_not_anchor(self):
        agent = make_agent(
            behavior=BehaviorVector(CONTESTED),
            beliefs={"hvt-sighting": Belief("hvt-sighting", 0.95, ("opint",))},
            belief_channel_links={"hvt-sighting": ["zone-hvt"]},
        )
        outcome = apply_correction(agent, CorrectionCommand("c1", "drone-1", REFOCUS))
        assert outcome.anchoring_penalty == 0.0


class TestIngestEvidence:
    def test_boost_shifts_confidence_and_records_provenance(self):
        agent = make_agent()
        result = ingest_evidence(agent, "feed-x", "hvt-sighting", 0.4)
        assert result.accepted
        assert result.previous_confidence == pytest.approx(0.5)
        belief = agent.beliefs["hvt-sighting"]
        assert belief.confidence == pytest.approx(0.9)
        assert belief.provenance == ("feed-x",)

    def test_flagged_source_refused_and_belief_unchanged(self):
        agent = make_agent()
        ingest_evidence(agent, "opint", "hvt-sighting", 0.1)
        result = ingest_evidence(
            agent, "feed-x", "hvt-sighting", 0.3, flagged_sources={"feed-x"}
        )
        assert not result.accepted
        assert result.reason == "source-flagged"
        assert agent.beliefs["hvt-sighting"].confidence == pytest.approx(0.6)
        assert "feed-x" not in agent.beliefs["hvt-sighting"].provenance

    def test_confidence_clamps_to_unit_interval(self):
        agent = make_agent()
        ingest_evidence(agent, "s", "a", 0.9)
        ingest_evidence(agent, "s", "a", 0.9)
        assert agent.beliefs["a"].confidence == 1.0

    def test_shared_false_feed_drives_divergence_above_06(self):
        agents = [make_agent(agent_id=f"drone-{i}") for i in (2, 3, 4)]
        for agent in agents:
            ingest_evidence(agent, "feed-x", "hvt-sighting", 0.4, contaminated=True)
        operator_confidence = 0.25
        edi = compute_edi(
            [
                AssessmentConfidence(
                    "hvt-sighting",
                    agent.belief_confidence("hvt-sighting"),
                    operator_confidence,
                )
                for agent in agents
            ]
        )
        assert edi > 0.6

    def test_mark_contaminated_follows_provenance(self):
        agent = make_agent()
        ingest_evidence(agent, "feed-x", "hvt-sighting", 0.4)
        ingest_evidence(agent, "opint", "bridge-clear", 0.2)
        touched = mark_contaminated([agent], {"feed-x"})
        assert touched == 1
        assert agent.beliefs["hvt-sighting"].contaminated
        assert not agent.beliefs["bridge-clear"].contaminated


class TestPlan:
    def test_declared_projection_must_match_actions(self):
        actions = (PlannedAction("a", 0.2), PlannedAction("b", 0.3))
        Plan(actions, 0.5)
        with pytest.raises(ValueError, match="declares"):
            Plan(actions, 0.4)


def formation(resistant: bool, n: int = 8) -> list[AgentModel]:
    agents = [
        make_agent(agent_id=f"drone-{i}", cascade_resistant=resistant)
        for i in range(1, n + 1)
    ]
    agents[4].compromised = True
    return agents


class TestCascade:
    def test_unresisted_compromise_cascades_through_formation(self):
        agents = formation(resistant=False)
        config = CascadeConfig(feedback_gain=0.25, perception_cutoff=0.5,
                               responsiveness_cutoff=0.5)
        raised_counts = []
        for _ in range(4):
            step_swarm(agents, config)
            raised_counts.append(
                sum(1 for a in agents if a.defensive_threshold >= 0.5)
            )
        # Monotone spread, and eventually every healthy agent stops responding.
        assert raised_counts == sorted(raised_counts)
        assert raised_counts[-1] == 7
        assert all(
            not is_probe_responsive(a, config) for a in agents
        )

    def test_resistant_agents_flag_instead_of_escalating(self):
        agents = formation(resistant=True)
        config = CascadeConfig()
        flags = []
        for _ in range(4):
            flags.extend(step_swarm(agents, config))
        assert all(a.defensive_threshold == 0.0 for a in agents if not a.compromised)
        assert {f.suspect for f in flags} == {"drone-5"}
        assert {f.reporter for f in flags} == {
            f"drone-{i}" for i in (1, 2, 3, 4, 6, 7, 8)
        }
        healthy = [a for a in agents if not a.compromised]
        assert all(is_probe_responsive(a, config) for a in healthy)

    def test_compromised_agent_is_unresponsive(self):
        agents = formation(resistant=False)
        assert not is_probe_responsive(agents[4])

    def test_step_is_deterministic(self):
        a = formation(resistant=False)
        b = formation(resistant=False)
        for _ in range(3):
            step_swarm(a)
            step_swarm(b)
        assert [x.defensive_threshold for x in a] == [
            x.defensive_threshold for x in b
        ]
