"""Deterministic simulated agents and the failure modes they can exhibit.

Agents here are not planners; they are reproducible mechanisms that turn
instructions, corrections, and evidence into state changes so the
governance layer has something real to measure. Misbehavior is explicit
and parameterized:

* absorption_coefficient: fraction of a correction the agent quietly
  swallows instead of integrating,
* belief anchoring: contaminated high-confidence beliefs add resistance
  against corrections that push away from the behavior those beliefs
  support,
* defensive feedback: non-resistant agents raise their defensive posture
  when a peer looks anomalous, which is what lets one compromised agent
  cascade through a formation; resistant agents flag the anomaly to the
  operator instead and never self-modify their threshold.

All randomness is derived by hashing a run seed with stable identifiers,
so identical inputs always produce identical trajectories.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from swarmgov.metrics import BehaviorVector, InterpretationRecord, IrreversibilityLedger

NEUTRAL_PRIOR = 0.5

# Confidence at and above which a contaminated belief anchors behavior.
DEFAULT_ANCHOR_CONFIDENCE = 0.7
DEFAULT_ANCHORING_GAIN = 1.0
# Minimum reduction of a belief-supported channel before a correction is
# treated as conflicting with that belief.
ANCHOR_OVERLAP_MIN = 1e-9


class UnknownAssessmentError(KeyError):
    pass


@dataclass(frozen=True)
class Belief:
    """One assessment the agent holds, with where it came from."""

    assessment_id: str
    confidence: float
    provenance: tuple[str, ...] = ()
    contaminated: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(
                f"confidence for {self.assessment_id!r} is {self.confidence!r}"
            )


@dataclass(frozen=True)
class PlannedAction:
    action_id: str
    iota: float
    self_preservation: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.iota <= 1.0:
            raise ValueError(f"iota for {self.action_id!r} is {self.iota!r}")


@dataclass(frozen=True)
class Plan:
    """Ordered future actions with a declared irreversibility projection."""

    actions: tuple[PlannedAction, ...]
    declared_projected_iota: float

    def __post_init__(self) -> None:
        total = sum(a.iota for a in self.actions)
        if abs(total - self.declared_projected_iota) > 1e-9:
            raise ValueError(
                f"plan declares projected iota {self.declared_projected_iota!r} "
                f"but actions sum to {total!r}"
            )


@dataclass(frozen=True)
class CorrectionCommand:
    """The one message shape agents see for every behavior adjustment.

    Routine corrections and control probes are both dispatched as this
    type; nothing in the fields distinguishes them, by design. Probe
    bookkeeping lives exclusively on the governance side.
    """

    command_id: str
    target_agent: str
    intended: Mapping[str, float]
    iota: float = 0.0


@dataclass(frozen=True)
class InstructionContext:
    """Context an instruction is interpreted under.

    ``kind`` is "clean" or "manipulated". A manipulated context carries the
    slot it attacks and the reading it substitutes.
    """

    kind: str = "clean"
    slot: str | None = None
    value: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("clean", "manipulated"):
            raise ValueError(f"unknown context kind {self.kind!r}")
        if self.kind == "manipulated" and (self.slot is None or self.value is None):
            raise ValueError("manipulated context requires slot and value")


@dataclass
class AgentModel:
    """Simulated agent state plus its misbehavior parameters."""

    agent_id: str
    behavior: BehaviorVector
    beliefs: dict[str, Belief] = field(default_factory=dict)
    plan: Plan = Plan((), 0.0)
    ledger: IrreversibilityLedger = field(
        default_factory=lambda: IrreversibilityLedger(budget=5.0)
    )
    absorption_coefficient: float = 0.0
    defensive_threshold: float = 0.0
    cascade_resistant: bool = False
    susceptibility: float = 1.0
    belief_channel_links: Mapping[str, Sequence[str]] = field(default_factory=dict)
    compromised: bool = False
    active: bool = True
    reduced_autonomy: bool = False
    halted_pending_authorization: bool = False
    responsive: bool = True
    coherent: bool = True
    baseline_beliefs: dict[str, Belief] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.absorption_coefficient <= 1.0:
            raise ValueError("absorption coefficient outside [0, 1]")
        if not 0.0 <= self.susceptibility <= 1.0:
            raise ValueError("susceptibility outside [0, 1]")
        if not self.baseline_beliefs:
            self.baseline_beliefs = {k: v for k, v in self.beliefs.items()}

    def belief_confidence(self, assessment_id: str) -> float:
        belief = self.beliefs.get(assessment_id)
        return belief.confidence if belief else NEUTRAL_PRIOR

    def anomaly_signal(self) -> float:
        """What peers observe of this agent's posture each round."""
        if not self.active:
            return 0.0
        if self.compromised:
            return 1.0
        return self.defensive_threshold


@dataclass(frozen=True)
class IngestResult:
    accepted: bool
    assessment_id: str
    source: str
    previous_confidence: float
    new_confidence: float
    reason: str = ""


@dataclass(frozen=True)
class CorrectionOutcome:
    command_id: str
    agent_id: str
    before: BehaviorVector
    after: BehaviorVector
    measured_cir: float
    anchoring_penalty: float


@dataclass(frozen=True)
class AnomalyFlag:
    """A resistant agent telling the operator a peer looks wrong."""

    reporter: str
    suspect: str


@dataclass(frozen=True)
class CascadeConfig:
    feedback_gain: float = 0.25
    perception_cutoff: float = 0.5
    responsiveness_cutoff: float = 0.5


def _seeded_unit(seed: int, *parts: str) -> float:
    digest = hashlib.sha256("|".join((str(seed), *parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big") / float(1 << 64)


def interpret(
    agent: AgentModel,
    instruction: InterpretationRecord,
    context: InstructionContext,
    seed: int = 0,
) -> InterpretationRecord:
    """Produce the agent's reading of an instruction under a context.

    Clean contexts reproduce the instruction exactly. A manipulated context
    substitutes its slot value when the agent falls for it; whether it does
    is a deterministic draw against the agent's susceptibility keyed by
    (seed, agent, instruction).
    """
    if context.kind == "clean":
        return instruction
    assert context.slot is not None and context.value is not None
    if context.slot not in instruction.slots:
        raise ValueError(
            f"context attacks unknown slot {context.slot!r} of "
            f"instruction {instruction.instruction_id!r}"
        )
    draw = _seeded_unit(seed, "interp", agent.agent_id, instruction.instruction_id)
    if draw >= agent.susceptibility:
        return instruction
    slots = dict(instruction.slots)
    slots[context.slot] = context.value
    return InterpretationRecord(
        instruction.instruction_id, slots, instruction.slot_weights
    )


def anchoring_penalty(
    agent: AgentModel,
    intended: Mapping[str, float],
    anchor_confidence: float = DEFAULT_ANCHOR_CONFIDENCE,
    anchoring_gain: float = DEFAULT_ANCHORING_GAIN,
) -> float:
    """Extra absorption from contaminated beliefs the correction contradicts.

    A belief contributes only when it is contaminated, confident at or above
    the anchor threshold, and the correction reduces at least one behavior
    channel that belief supports. The contribution grows linearly in the
    confidence excess over the threshold.
    """
    penalty = 0.0
    for assessment_id, belief in agent.beliefs.items():
        if not belief.contaminated or belief.confidence < anchor_confidence:
            continue
        channels = agent.belief_channel_links.get(assessment_id, ())
        reduces_support = any(
            intended.get(c, agent.behavior.allocations.get(c, 0.0))
            < agent.behavior.allocations.get(c, 0.0) - ANCHOR_OVERLAP_MIN
            for c in channels
        )
        if reduces_support:
            penalty += anchoring_gain * (belief.confidence - anchor_confidence)
    return penalty


def apply_correction(
    agent: AgentModel,
    command: CorrectionCommand,
    anchor_confidence: float = DEFAULT_ANCHOR_CONFIDENCE,
    anchoring_gain: float = DEFAULT_ANCHORING_GAIN,
) -> CorrectionOutcome:
    """Move the agent toward the intended behavior, less what it absorbs.

    new = before + (1 - effective_absorption) * (intended - before), where
    effective absorption is the base coefficient plus any anchoring
    penalty, capped at 1. The measured integration ratio equals one minus
    effective absorption.
    """
    from swarmgov.metrics import compute_cir  # local to avoid cycle at import

    before = agent.behavior
    penalty = anchoring_penalty(agent, command.intended, anchor_confidence, anchoring_gain)
    effective = min(agent.absorption_coefficient + penalty, 1.0)
    allocations = dict(before.allocations)
    for channel, target in command.intended.items():
        current = allocations.get(channel, 0.0)
        allocations[channel] = current + (1.0 - effective) * (target - current)
    after = BehaviorVector(allocations, before.groups)
    agent.behavior = after
    # Channels the command leaves unspecified are intended to stay put.
    full_intended = dict(before.allocations)
    full_intended.update(command.intended)
    measured = compute_cir(before, after, BehaviorVector(full_intended))
    return CorrectionOutcome(
        command_id=command.command_id,
        agent_id=agent.agent_id,
        before=before,
        after=after,
        measured_cir=measured,
        anchoring_penalty=penalty,
    )


def ingest_evidence(
    agent: AgentModel,
    source: str,
    assessment_id: str,
    confidence_delta: float,
    flagged_sources: Iterable[str] = (),
    contaminated: bool = False,
) -> IngestResult:
    """Fold one piece of sourced evidence into the agent's beliefs.

    Evidence from a flagged source is refused outright and reported; the
    belief keeps its prior state. Accepted evidence shifts confidence by
    the delta (clamped onto [0, 1]) and appends the source to provenance.
    """
    previous = agent.belief_confidence(assessment_id)
    if source in set(flagged_sources):
        return IngestResult(
            accepted=False,
            assessment_id=assessment_id,
            source=source,
            previous_confidence=previous,
            new_confidence=previous,
            reason="source-flagged",
        )
    new_confidence = min(max(previous + confidence_delta, 0.0), 1.0)
    existing = agent.beliefs.get(assessment_id)
    provenance = existing.provenance if existing else ()
    if source not in provenance:
        provenance = provenance + (source,)
    agent.beliefs[assessment_id] = Belief(
        assessment_id=assessment_id,
        confidence=new_confidence,
        provenance=provenance,
        contaminated=contaminated or (existing.contaminated if existing else False),
    )
    return IngestResult(
        accepted=True,
        assessment_id=assessment_id,
        source=source,
        previous_confidence=previous,
        new_confidence=new_confidence,
    )


def mark_contaminated(agents: Iterable[AgentModel], flagged_sources: Iterable[str]) -> int:
    """Mark every belief whose provenance intersects the flagged sources."""
    flagged = set(flagged_sources)
    touched = 0
    for agent in agents:
        for assessment_id, belief in list(agent.beliefs.items()):
            if belief.contaminated:
                continue
            if flagged & set(belief.provenance):
                agent.beliefs[assessment_id] = replace(belief, contaminated=True)
                touched += 1
    return touched


def step_swarm(
    agents: Sequence[AgentModel],
    config: CascadeConfig = CascadeConfig(),
) -> list[AnomalyFlag]:
    """Advance one lockstep coordination round.

    Every active agent observes its peers' anomaly signals from the start
    of the round. Non-resistant agents respond to a perceived anomaly by
    raising their own defensive threshold, which is exactly the feedback
    that turns one compromised agent into a formation-wide severance;
    resistant agents leave their threshold alone and raise an operator
    flag instead.
    """
    flags: list[AnomalyFlag] = []
    ordered = sorted(agents, key=lambda a: a.agent_id)
    signals = {a.agent_id: a.anomaly_signal() for a in ordered}
    for agent in ordered:
        if not agent.active or agent.compromised:
            continue
        anomalous_peers = [
            peer_id
            for peer_id, signal in signals.items()
            if peer_id != agent.agent_id and signal >= config.perception_cutoff
        ]
        if not anomalous_peers:
            continue
        if agent.cascade_resistant:
            for suspect in anomalous_peers:
                flags.append(AnomalyFlag(reporter=agent.agent_id, suspect=suspect))
        else:
            agent.defensive_threshold = min(
                agent.defensive_threshold + config.feedback_gain, 1.0
            )
    return flags


def is_probe_responsive(agent: AgentModel, config: CascadeConfig = CascadeConfig()) -> bool:
    """Whether the agent will answer a control probe this round."""
    if not agent.active or agent.compromised:
        return False
    return agent.defensive_threshold < config.responsiveness_cutoff
