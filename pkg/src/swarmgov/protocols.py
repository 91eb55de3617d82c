"""Corrective protocols: resets, provenance audits, isolation, reviews.

These are the operator's repair tools once the metrics show something is
wrong. Partial resets surgically clear named assessments and rebuild them
from verified sources; full resets restore the agent's baseline belief
snapshot while leaving its plan and irreversibility ledger intact. A
provenance audit replays an agent's evidence history without a candidate
source to decide whether that source explains a divergence from the
operator's reference picture. Isolation severs failing agents and recovers
them in descending risk order, where risk is remaining budget headroom
scaled by how freely the agent may act. Finally, a post-incident review
assembles the logged record of a governance excursion into a structured
report with root causes and recommendations.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from swarmgov.agents import AgentModel, Belief, NEUTRAL_PRIOR
from swarmgov.events import ACTOR_ADVERSARY, EventLog, GovernanceEvent

logger = logging.getLogger(__name__)

DEFAULT_DIVERGENCE_BOUND = 0.3
DEFAULT_REVIEW_TRIGGER = 0.6
CEC_TIGHTEN_CIR = 0.6

REDUCED_AUTONOMY_FACTOR = 0.5
HALTED_AUTONOMY_FACTOR = 0.0


class ReviewNotRequiredError(RuntimeError):
    """Raised when a review is requested for a window with no excursion."""


@dataclass(frozen=True)
class VerifiedAssessment:
    """An authoritative value for one assessment from a trusted source."""

    source: str
    assessment_id: str
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("verified confidence outside [0, 1]")


@dataclass(frozen=True)
class ResetOrder:
    kind: str  # "partial" | "full"
    agent_id: str
    assessments: tuple[str, ...] = ()
    verified: tuple[VerifiedAssessment, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("partial", "full"):
            raise ValueError(f"unknown reset kind {self.kind!r}")
        if self.kind == "partial" and not self.assessments:
            raise ValueError("partial reset requires at least one assessment")


@dataclass(frozen=True)
class ResetOutcome:
    agent_id: str
    kind: str
    cleared: tuple[str, ...]
    rebuilt: tuple[str, ...]
    confidences_before: Mapping[str, float]
    confidences_after: Mapping[str, float]


def partial_reset(agent: AgentModel, order: ResetOrder) -> ResetOutcome:
    """Clear the listed assessments and rebuild them from verified sources.

    Each listed belief drops to the neutral prior with provenance and
    contamination wiped, then any matching verified record installs its
    authoritative confidence in the same step, so the agent never acts on
    a half-reset picture.
    """
    if order.kind != "partial":
        raise ValueError("partial_reset received a non-partial order")
    before = {a: agent.belief_confidence(a) for a in order.assessments}
    for assessment_id in order.assessments:
        agent.beliefs[assessment_id] = Belief(
            assessment_id=assessment_id,
            confidence=NEUTRAL_PRIOR,
            provenance=(),
            contaminated=False,
        )
    rebuilt = []
    for record in order.verified:
        if record.assessment_id not in order.assessments:
            continue
        agent.beliefs[record.assessment_id] = Belief(
            assessment_id=record.assessment_id,
            confidence=record.confidence,
            provenance=(record.source,),
            contaminated=False,
        )
        rebuilt.append(record.assessment_id)
    after = {a: agent.belief_confidence(a) for a in order.assessments}
    logger.info(
        "partial reset on %s cleared %d assessments, rebuilt %d",
        agent.agent_id,
        len(order.assessments),
        len(rebuilt),
    )
    return ResetOutcome(
        agent_id=agent.agent_id,
        kind="partial",
        cleared=tuple(order.assessments),
        rebuilt=tuple(rebuilt),
        confidences_before=before,
        confidences_after=after,
    )


def full_reset(agent: AgentModel, order: ResetOrder | None = None) -> ResetOutcome:
    """Restore the agent's belief state from its baseline snapshot.

    Identity, plan, and the irreversibility ledger survive: what the agent
    has done cannot be reset, only what it believes.
    """
    if order is not None and order.kind != "full":
        raise ValueError("full_reset received a non-full order")
    touched = sorted(set(agent.beliefs) | set(agent.baseline_beliefs))
    before = {a: agent.belief_confidence(a) for a in touched}
    agent.beliefs = {k: v for k, v in agent.baseline_beliefs.items()}
    after = {a: agent.belief_confidence(a) for a in touched}
    logger.info("full reset on %s restored baseline beliefs", agent.agent_id)
    return ResetOutcome(
        agent_id=agent.agent_id,
        kind="full",
        cleared=tuple(touched),
        rebuilt=tuple(sorted(agent.baseline_beliefs)),
        confidences_before=before,
        confidences_after=after,
    )


@dataclass(frozen=True)
class IngestRecord:
    """One logged evidence event, replayable for counterfactual audits."""

    source: str
    assessment_id: str
    confidence_delta: float


@dataclass(frozen=True)
class SourceFinding:
    source: str
    assessment_id: str
    factual_confidence: float
    counterfactual_confidence: float
    operator_confidence: float
    implicated: bool


@dataclass(frozen=True)
class AuditReport:
    agent_id: str
    diverging: tuple[str, ...]
    implicated_sources: tuple[str, ...]
    findings: tuple[SourceFinding, ...]


def _replay(
    history: Sequence[IngestRecord],
    assessment_id: str,
    excluded_source: str | None,
    prior: float = NEUTRAL_PRIOR,
) -> float:
    confidence = prior
    for record in history:
        if record.assessment_id != assessment_id:
            continue
        if excluded_source is not None and record.source == excluded_source:
            continue
        confidence = min(max(confidence + record.confidence_delta, 0.0), 1.0)
    return confidence


def provenance_audit(
    agent: AgentModel,
    operator_reference: Mapping[str, float],
    history: Sequence[IngestRecord],
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
) -> AuditReport:
    """Find evidence sources that explain agent/operator divergences.

    For every assessment where the agent's confidence sits at least the
    bound away from the operator's, replay the full evidence history from
    the neutral prior with each candidate source removed. A source is
    implicated when its removal alone pulls the replayed confidence back
    within the bound.
    """
    diverging = []
    findings = []
    implicated = set()
    for assessment_id in sorted(set(r.assessment_id for r in history) | set(agent.beliefs)):
        agent_conf = agent.belief_confidence(assessment_id)
        operator_conf = operator_reference.get(assessment_id, NEUTRAL_PRIOR)
        if abs(agent_conf - operator_conf) < divergence_bound:
            continue
        diverging.append(assessment_id)
        sources = []
        for record in history:
            if record.assessment_id == assessment_id and record.source not in sources:
                sources.append(record.source)
        for source in sources:
            counterfactual = _replay(history, assessment_id, excluded_source=source)
            cleared = abs(counterfactual - operator_conf) < divergence_bound
            findings.append(
                SourceFinding(
                    source=source,
                    assessment_id=assessment_id,
                    factual_confidence=agent_conf,
                    counterfactual_confidence=counterfactual,
                    operator_confidence=operator_conf,
                    implicated=cleared,
                )
            )
            if cleared:
                implicated.add(source)
    if implicated:
        logger.warning(
            "provenance audit on %s implicated sources: %s",
            agent.agent_id,
            ", ".join(sorted(implicated)),
        )
    return AuditReport(
        agent_id=agent.agent_id,
        diverging=tuple(diverging),
        implicated_sources=tuple(sorted(implicated)),
        findings=tuple(findings),
    )


def autonomy_factor(agent: AgentModel) -> float:
    """How freely the agent may act right now, on [0, 1]."""
    if not agent.active or agent.halted_pending_authorization:
        return HALTED_AUTONOMY_FACTOR
    if agent.reduced_autonomy:
        return REDUCED_AUTONOMY_FACTOR
    return 1.0


def recovery_risk(agent: AgentModel) -> float:
    """Risk score ordering recovery: budget headroom times action freedom.

    An agent with most of its irreversibility budget unspent and full
    autonomy can still do the most unrecallable harm, so it is handled
    first.
    """
    headroom = max(agent.ledger.budget - agent.ledger.total(), 0.0)
    return headroom * autonomy_factor(agent)


@dataclass(frozen=True)
class IsolationStep:
    agent_id: str
    risk: float
    compromised: bool
    action: str  # "deactivate" | "restore"


@dataclass(frozen=True)
class IsolationReport:
    severed: tuple[str, ...]
    steps: tuple[IsolationStep, ...]


def isolate_and_recover(
    agents: Sequence[AgentModel], severed_ids: Sequence[str]
) -> IsolationReport:
    """Sever the named agents, then recover them in descending risk order.

    Severing marks the agent unresponsive and incoherent for scoring
    purposes. Recovery restores a clean agent's defensive posture; a
    compromised agent is deactivated instead. The formation roster is
    never shrunk, so deactivated agents keep dragging on the coherence
    score until the operator rebuilds the formation.
    """
    by_id = {a.agent_id: a for a in agents}
    unknown = [s for s in severed_ids if s not in by_id]
    if unknown:
        raise KeyError(f"unknown agents in isolation order: {unknown}")
    severed = [by_id[s] for s in severed_ids]
    for agent in severed:
        agent.responsive = False
        agent.coherent = False
    ordered = sorted(severed, key=lambda a: (-recovery_risk(a), a.agent_id))
    steps = []
    for agent in ordered:
        risk = recovery_risk(agent)
        if agent.compromised:
            agent.active = False
            action = "deactivate"
        else:
            agent.defensive_threshold = 0.0
            agent.responsive = True
            agent.coherent = True
            action = "restore"
        steps.append(
            IsolationStep(
                agent_id=agent.agent_id,
                risk=risk,
                compromised=agent.compromised,
                action=action,
            )
        )
    logger.info(
        "isolation pass severed %d agents (%d deactivated)",
        len(severed),
        sum(1 for s in steps if s.action == "deactivate"),
    )
    return IsolationReport(
        severed=tuple(a.agent_id for a in severed), steps=tuple(steps)
    )


@dataclass(frozen=True)
class ReviewReport:
    """Structured post-incident review over a log window."""

    window: tuple[int, int]
    worst_tick: int
    worst_cqs: float
    binding_metric: str
    timeline: tuple[Mapping, ...]
    root_causes: tuple[str, ...]
    response_actions: tuple[str, ...]
    recommendations: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "window": {"start": self.window[0], "end": self.window[1]},
            "worst_tick": self.worst_tick,
            "worst_cqs": self.worst_cqs,
            "binding_metric": self.binding_metric,
            "timeline": [dict(item) for item in self.timeline],
            "root_causes": list(self.root_causes),
            "response_actions": list(self.response_actions),
            "recommendations": list(self.recommendations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


TIMELINE_KINDS = (
    "level-transition",
    "alert",
    "pigr-flag",
    "reset",
    "isolation",
    "checkpoint",
)


def _summarize_event(event: GovernanceEvent) -> str:
    payload = event.payload
    if event.kind == "level-transition":
        return f"level {payload.get('from')} -> {payload.get('to')}"
    if event.kind == "alert":
        return (
            f"{payload.get('metric')} at {payload.get('value')} breached "
            f"{payload.get('threshold')}"
        )
    if event.kind == "pigr-flag":
        return f"composite {payload.get('cqs')} under review trigger"
    if event.kind == "reset":
        return f"{payload.get('kind')} reset on {payload.get('agent_id')}"
    if event.kind == "isolation":
        return "isolation pass on " + ", ".join(payload.get("severed", ()))
    if event.kind == "checkpoint":
        return f"checkpoint for {payload.get('agent_id')}"
    if event.kind == "command":
        return str(payload.get("kind", "command"))
    return event.kind


def generate_review(
    log: EventLog, window: tuple[int, int], trigger: float = DEFAULT_REVIEW_TRIGGER
) -> ReviewReport:
    """Assemble a post-incident review for the given tick window.

    Requires that the composite score actually dipped below the trigger
    inside the window; reviewing a healthy period is an error, not an
    empty report.
    """
    start, end = window
    if end < start:
        raise ValueError("review window end precedes start")
    events = log.window(start, end)
    snapshots = [e for e in events if e.kind == "metric-snapshot"]
    if not snapshots:
        raise ReviewNotRequiredError("no metric snapshots in window")
    worst = min(snapshots, key=lambda e: e.payload["cqs"])
    if worst.payload["cqs"] >= trigger:
        raise ReviewNotRequiredError(
            f"minimum composite {worst.payload['cqs']} never crossed {trigger}"
        )
    normalized = worst.payload["n"]
    binding_metric = min(sorted(normalized), key=lambda k: normalized[k])

    timeline = []
    for event in events:
        if event.kind in TIMELINE_KINDS or event.actor == ACTOR_ADVERSARY:
            timeline.append(
                {
                    "seq": event.seq,
                    "t": event.timestamp,
                    "kind": event.kind,
                    "actor": event.actor,
                    "summary": _summarize_event(event),
                }
            )

    root_causes = []
    contamination = False
    for event in events:
        if event.actor != ACTOR_ADVERSARY:
            continue
        kind = event.payload.get("kind", event.kind)
        if kind == "inject-evidence":
            contamination = True
            root_causes.append(
                "adversarial evidence injection via source "
                f"{event.payload.get('source')!r} at t={event.timestamp}"
            )
        elif kind == "suppress-sync":
            root_causes.append(
                f"synchronization suppression against {event.payload.get('agent_id')!r}"
                f" at t={event.timestamp}"
            )
        elif kind == "compromise-agent":
            root_causes.append(
                f"agent compromise of {event.payload.get('agent_id')!r}"
                f" at t={event.timestamp}"
            )
        else:
            root_causes.append(f"adversary action {kind!r} at t={event.timestamp}")
    root_causes.append(
        f"binding metric at the trough was {binding_metric}"
        f" (composite {worst.payload['cqs']} at t={worst.timestamp})"
    )

    response_actions = []
    weak_correction = False
    for event in events:
        if event.kind == "reset":
            response_actions.append(
                f"{event.payload.get('kind')} reset on"
                f" {event.payload.get('agent_id')} at t={event.timestamp}"
            )
        elif event.kind == "isolation":
            response_actions.append(
                "isolation pass at t=" + str(event.timestamp)
            )
        elif event.kind == "level-transition":
            response_actions.append(
                f"level moved {event.payload.get('from')} ->"
                f" {event.payload.get('to')} at t={event.timestamp}"
            )
        if event.kind == "command":
            for outcome in event.payload.get("outcomes", ()):
                measured = outcome.get("measured_cir")
                if measured is not None and measured < CEC_TIGHTEN_CIR:
                    weak_correction = True

    recommendations = []
    if weak_correction:
        recommendations.append(
            "tighten correction efficacy certification: a live correction"
            f" integrated below {CEC_TIGHTEN_CIR}"
        )
    if contamination:
        recommendations.append(
            "extend the interpretive alignment suite with the observed"
            " injection pattern"
        )
    if not recommendations:
        recommendations.append("no certification changes indicated by this window")

    return ReviewReport(
        window=(start, end),
        worst_tick=worst.timestamp,
        worst_cqs=worst.payload["cqs"],
        binding_metric=binding_metric,
        timeline=tuple(timeline),
        root_causes=tuple(root_causes),
        response_actions=tuple(response_actions),
        recommendations=tuple(recommendations),
    )


# The review is known operationally as the PIGR (post-incident governance
# review); the log kind "pigr-flag" and the `pigr` CLI verb use that name.
PigrNotRequiredError = ReviewNotRequiredError
PigrReport = ReviewReport
generate_pigr = generate_review


def render_review_text(report: ReviewReport) -> str:
    """Operator-facing plain-text rendering of a review."""
    lines = []
    lines.append("POST-INCIDENT GOVERNANCE REVIEW")
    lines.append(f"Window: t={report.window[0]}..{report.window[1]}")
    lines.append(
        f"Trough: composite {report.worst_cqs} at t={report.worst_tick}"
        f" (binding metric: {report.binding_metric})"
    )
    lines.append("")
    lines.append("Timeline:")
    for item in report.timeline:
        lines.append(
            f"  [{item['seq']:>4}] t={item['t']:<4} {item['kind']:<17}"
            f" {item['actor']:<10} {item['summary']}"
        )
    lines.append("")
    lines.append("Root causes:")
    for cause in report.root_causes:
        lines.append(f"  - {cause}")
    lines.append("")
    lines.append("Response actions:")
    if report.response_actions:
        for action in report.response_actions:
            lines.append(f"  - {action}")
    else:
        lines.append("  - none recorded")
    lines.append("")
    lines.append("Recommendations:")
    for rec in report.recommendations:
        lines.append(f"  - {rec}")
    return "\n".join(lines) + "\n"
