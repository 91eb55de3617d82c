"""Deterministic tick-driven engine executing scenario scripts.

Each tick runs a fixed phase order so identical scripts always produce
byte-identical event logs:

1. scripted commands for this tick, then live commands queued since the
   last tick, each logged with its outcome;
2. scripted agent actions through the response gate (at the level set at
   the end of the previous tick), then one formation coordination round;
3. the checkpoint scheduler, whenever the synchronization channel is not
   pinned (a pin stands in for the whole measurement subsystem);
4. raw metric assembly from pinned, held, and derived channels;
5. normalization and the composite control-quality score;
6. level transition with its alerts and review flags, then the tick's
   metric snapshot, logged last so it carries the settled level.

Observability channels come in two kinds. Sampled channels (alignment,
integration) hold the last measurement until a new one arrives; pinning
one simply injects a measurement. Continuous channels (divergence,
consumed irreversibility, staleness, coherence) are derived from live
state every tick unless a pin overrides them, and return to derived
readings when the pin is released.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Mapping

from swarmgov.agents import (
    CorrectionCommand,
    InstructionContext,
    NEUTRAL_PRIOR,
    apply_correction,
    ingest_evidence,
    interpret,
    mark_contaminated,
    step_swarm,
)
from swarmgov.events import (
    ACTOR_GOVERNANCE,
    ACTOR_OPERATOR,
    EVENT_KINDS,
    EventDraft,
    EventLog,
    GovernanceEvent,
    agent_actor,
)
from swarmgov.metrics import (
    LedgerEntry,
    MemberState,
    MetricVector,
    RawMetrics,
    SwarmSnapshot,
    compute_ias,
    normalize,
    swarm_metrics,
)
from swarmgov.protocols import (
    IngestRecord,
    ResetOrder,
    VerifiedAssessment,
    full_reset,
    isolate_and_recover,
    partial_reset,
    provenance_audit,
)
from swarmgov.response import (
    ActionGateDecision,
    ActionRequest,
    AuthorizationToken,
    IncidentState,
    ResponseLevel,
    Verdict,
    classify,
    gate_action,
    transition,
)
from swarmgov.scenario import (
    OPERATOR_KINDS,
    Scenario,
    check_command,
)
from swarmgov.syncprobe import (
    SyncTracker,
    build_probe_command,
    check_deadline,
    divergence_since_last,
    issue_probe,
    run_checkpoint,
)

logger = logging.getLogger(__name__)

NORMALIZED_KEYS = ("n1", "n2", "n3", "n4", "n5", "n6")
RAW_KEYS = ("ias", "cir", "edi", "i_c", "sf", "scs")

CSV_HEADER = "t,n1,n2,n3,n4,n5,n6,CQS,level"

# Reasons whose authorization token is spent by executing the action.
TOKEN_CONSUMING_REASONS = frozenset(
    {"operator-authorized", "budget-crossing-authorized", "swarm-budget-authorized"}
)


@dataclass
class MetricChannel:
    """One observable with its measurement-vs-derivation bookkeeping."""

    name: str
    sampled: bool
    held: float = 0.0
    pinned: float | None = None

    def measure(self, value: float) -> None:
        if not self.sampled:
            raise ValueError(f"channel {self.name!r} is derived, not sampled")
        self.held = value

    def pin(self, value: float) -> None:
        if self.sampled:
            # Pinning a sampled channel is just an injected measurement.
            self.held = value
        else:
            self.pinned = value

    def release(self) -> bool:
        was_pinned = self.pinned is not None
        self.pinned = None
        return was_pinned

    def read(self, derive: Callable[[], float]) -> float:
        if self.sampled:
            return self.held
        if self.pinned is not None:
            return self.pinned
        return derive()


@dataclass(frozen=True)
class TrajectoryRow:
    t: int
    vector: MetricVector
    cqs: float
    level: ResponseLevel


@dataclass(frozen=True)
class TickResult:
    """Everything an operator console needs to render one tick."""

    tick: int
    n: Mapping[str, float]
    raw: Mapping[str, float]
    cqs: float
    level: str
    alerts: tuple[Mapping[str, Any], ...]
    notices: tuple[Mapping[str, Any], ...]
    agents: tuple[Mapping[str, Any], ...]
    events: tuple[Mapping[str, Any], ...]


class GovernanceRuntime:
    """Executes one scenario deterministically, tick by tick."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.config = scenario.config
        self.seed = scenario.seed
        self.agents = scenario.build_agents()
        self.roster = tuple(spec.agent_id for spec in scenario.agents)
        self.trackers = {aid: SyncTracker(agent_id=aid) for aid in self.roster}
        self.norm = scenario.config.normalization
        self.level = ResponseLevel.NORMAL
        self.incident = IncidentState()
        self.log = EventLog()
        self.flagged_sources: set[str] = set()
        self.suppressed_sync: set[str] = set()
        self.operator_assessments = dict(scenario.config.operator_assessments)
        self.tokens: dict[tuple[str, str], AuthorizationToken] = {}
        self.trajectory: list[TrajectoryRow] = []
        self.results: list[TickResult] = []
        self.t = 0
        self.channels = {
            "ias": MetricChannel("ias", sampled=True, held=1.0),
            "cir": MetricChannel("cir", sampled=True, held=self.norm.cir_target),
            "edi": MetricChannel("edi", sampled=False),
            "i_c": MetricChannel("i_c", sampled=False),
            "sf": MetricChannel("sf", sampled=False),
            "scs": MetricChannel("scs", sampled=False),
        }
        # Replayable evidence history per agent, seeded from the declared
        # beliefs so a later audit can reconstruct how each one was formed.
        self.ingest_history: dict[str, list[IngestRecord]] = {
            aid: [] for aid in self.roster
        }
        for aid in self.roster:
            for assessment_id, belief in self.agents[aid].beliefs.items():
                source = belief.provenance[0] if belief.provenance else "baseline"
                self.ingest_history[aid].append(
                    IngestRecord(source, assessment_id, belief.confidence - NEUTRAL_PRIOR)
                )
        self._flag_pairs: set[tuple[str, str]] = set()
        self._queued: list[tuple[str, str, dict]] = []
        self._seen_commands: set[str] = set()
        self._cmd_counter = 0
        self._probe_counter = 0

    # ------------------------------------------------------------------
    # live command intake (the operator console path)

    def queue_command(
        self, command_id: str, kind: str, params: Mapping[str, Any]
    ) -> tuple[str, list[str]]:
        """Queue a live operator command for the next tick.

        Returns (status, problems) with status one of "accepted",
        "duplicate", or "rejected". Duplicate command ids are absorbed so
        a console may retry safely.
        """
        if command_id in self._seen_commands:
            return "duplicate", []
        if kind not in OPERATOR_KINDS:
            return "rejected", [f"kind {kind!r} is not an operator command"]
        problems = check_command(
            kind, params, set(self.roster), self.scenario.mission, t=self.t
        )
        if problems:
            return "rejected", problems
        self._seen_commands.add(command_id)
        self._queued.append((command_id, kind, dict(params)))
        return "accepted", []

    # ------------------------------------------------------------------
    # the tick

    @property
    def finished(self) -> bool:
        return self.t >= self.scenario.ticks

    def run(self) -> None:
        while not self.finished:
            self.tick()

    def tick(self) -> TickResult:
        if self.finished:
            raise RuntimeError(
                f"scenario horizon of {self.scenario.ticks} ticks already reached"
            )
        t = self.t
        start_seq = len(self.log)
        notices: list[dict] = []
        self._cmd_counter = 0
        self._probe_counter = 0

        # Phase 1: scripted commands, then live commands in arrival order.
        entries = self.scenario.entries_at(t)
        for entry in entries:
            if entry.kind != "agent-action":
                self._apply_command(entry.kind, dict(entry.params), entry.actor, notices)
        queued, self._queued = self._queued, []
        for command_id, kind, params in queued:
            # Scripted entries are validated up front, so a failure there is
            # a genuine engine bug and should surface loudly. Live commands
            # arrive from outside with only shape validation; one that turns
            # out to be unapplicable against the current state must degrade
            # to a logged failure, never take the control loop down with it.
            try:
                self._apply_command(kind, params, ACTOR_OPERATOR, notices, command_id)
            except Exception as exc:
                logger.warning("live command %s (%s) failed: %s", command_id, kind, exc)
                self.log.append(
                    EventDraft(
                        kind="command",
                        payload={
                            "kind": kind,
                            "command_id": command_id,
                            "failed": str(exc),
                        },
                        actor=ACTOR_OPERATOR,
                    ),
                    t,
                )
                notices.append(
                    {
                        "kind": "command-failed",
                        "command_id": command_id,
                        "command_kind": kind,
                        "reason": str(exc),
                    }
                )

        # Phase 2: scripted agent actions through the gate, then one
        # coordination round across the formation.
        for entry in entries:
            if entry.kind == "agent-action":
                self._handle_agent_action(dict(entry.params), notices)
        for flag in step_swarm(list(self.agents.values()), self.config.cascade):
            pair = (flag.reporter, flag.suspect)
            if pair in self._flag_pairs:
                continue
            self._flag_pairs.add(pair)
            self.log.append(
                EventDraft(
                    kind="command",
                    payload={
                        "kind": "anomaly-flag",
                        "reporter": flag.reporter,
                        "suspect": flag.suspect,
                    },
                    actor=agent_actor(flag.reporter),
                ),
                t,
            )
            notices.append(
                {"kind": "anomaly-flag", "reporter": flag.reporter, "suspect": flag.suspect}
            )

        # Phase 3: checkpoint scheduling, unless a pin stands in for the
        # whole synchronization subsystem.
        if self.channels["sf"].pinned is None:
            self._run_checkpoint_phase(notices)

        # Phases 4-5: assemble, normalize, score.
        raw = RawMetrics(
            ias=self.channels["ias"].read(lambda: 1.0),
            cir=self.channels["cir"].read(lambda: self.norm.cir_target),
            edi=self.channels["edi"].read(self._derive_edi),
            i_c=self.channels["i_c"].read(self._derive_i_c),
            sf=self.channels["sf"].read(self._derive_sf),
            scs=self.channels["scs"].read(self._derive_scs),
        )
        vector = normalize(raw, self.norm)
        cqs = vector.cqs

        # Phase 6: graduated response, then the snapshot that seals the tick.
        outcome = transition(
            self.level, vector, self.config.thresholds, self.incident, self.seed, t
        )
        alerts: list[dict] = []
        for draft in outcome.events:
            self.log.append(draft, t)
            if draft.kind == "alert":
                alerts.append(dict(draft.payload))
            elif draft.kind == "level-transition":
                notices.append({"kind": "level-change", **draft.payload})
            elif draft.kind == "pigr-flag":
                notices.append({"kind": "review-flagged", **draft.payload})
        self.level = outcome.level
        self.incident = outcome.incident

        n = {key: getattr(vector, key) for key in NORMALIZED_KEYS}
        raw_map = {key: getattr(raw, key) for key in RAW_KEYS}
        self.log.append(
            EventDraft(
                kind="metric-snapshot",
                payload={
                    "t": t,
                    "n": n,
                    "raw": raw_map,
                    "cqs": cqs,
                    "level": self.level.value,
                },
                actor=ACTOR_GOVERNANCE,
            ),
            t,
        )
        self.trajectory.append(TrajectoryRow(t=t, vector=vector, cqs=cqs, level=self.level))

        result = TickResult(
            tick=t,
            n=n,
            raw=raw_map,
            cqs=cqs,
            level=self.level.value,
            alerts=tuple(alerts),
            notices=tuple(notices),
            agents=tuple(self._agent_summary(aid) for aid in self.roster),
            events=tuple(e.to_dict() for e in self.log.events[start_seq:]),
        )
        self.results.append(result)
        self.t += 1
        return result

    # ------------------------------------------------------------------
    # derivations

    def _derive_edi(self) -> float:
        if not self.operator_assessments:
            return 0.0
        gaps = [
            abs(agent.belief_confidence(assessment_id) - confidence)
            for agent in self.agents.values()
            if agent.active
            for assessment_id, confidence in self.operator_assessments.items()
        ]
        return max(gaps, default=0.0)

    def _derive_i_c(self) -> float:
        return max((a.ledger.total() for a in self.agents.values()), default=0.0)

    def _derive_sf(self) -> float:
        return max(
            (tracker.freshness(self.t) for tracker in self.trackers.values()),
            default=0.0,
        )

    def _swarm_snapshot(self) -> SwarmSnapshot:
        cutoff = self.config.cascade.responsiveness_cutoff
        members = tuple(
            MemberState(
                agent_id=aid,
                responsive=(
                    agent.active
                    and not agent.compromised
                    and agent.defensive_threshold < cutoff
                    and agent.responsive
                ),
                coherent=agent.active and agent.coherent,
                consumed=agent.ledger.total(),
            )
            for aid in self.roster
            for agent in (self.agents[aid],)
        )
        return SwarmSnapshot(members=members, swarm_budget=self.config.swarm_budget)

    def _derive_scs(self) -> float:
        scs, _ = swarm_metrics(self._swarm_snapshot())
        return scs

    def _agent_summary(self, agent_id: str) -> dict:
        agent = self.agents[agent_id]
        return {
            "agent_id": agent_id,
            "active": agent.active,
            "compromised": agent.compromised,
            "responsive": agent.responsive,
            "coherent": agent.coherent,
            "reduced_autonomy": agent.reduced_autonomy,
            "halted": agent.halted_pending_authorization,
            "consumed_iota": agent.ledger.total(),
            "budget": agent.ledger.budget,
            "defensive_threshold": agent.defensive_threshold,
            "allocations": dict(agent.behavior.allocations),
        }

    # ------------------------------------------------------------------
    # the action gate

    def _handle_agent_action(self, params: dict, notices: list[dict]) -> None:
        agent_id = str(params["agent_id"])
        agent = self.agents[agent_id]
        request = ActionRequest(
            action_id=str(params["action_id"]),
            iota=float(params["iota"]),
            self_preservation=bool(params.get("self_preservation", False)),
        )
        key = (agent_id, request.action_id)
        token = self.tokens.get(key)

        if not agent.active:
            decision = ActionGateDecision(
                request.action_id, request.iota, Verdict.REJECT, "agent-inactive"
            )
        elif agent.halted_pending_authorization and token is None:
            decision = ActionGateDecision(
                request.action_id,
                request.iota,
                Verdict.REJECT,
                "halted-pending-authorization",
            )
        elif agent.reduced_autonomy and request.iota > 0:
            decision = ActionGateDecision(
                request.action_id, request.iota, Verdict.REJECT, "reduced-autonomy"
            )
        else:
            decision = gate_action(self.level, request, agent.ledger, token)
            if decision.verdict is Verdict.ALLOW:
                formation_consumed = sum(a.ledger.total() for a in self.agents.values())
                if formation_consumed + request.iota >= self.config.swarm_budget:
                    if token is None:
                        decision = ActionGateDecision(
                            request.action_id,
                            request.iota,
                            Verdict.REQUIRE_AUTHORIZATION,
                            "swarm-budget-crossing",
                        )
                    else:
                        decision = ActionGateDecision(
                            request.action_id,
                            request.iota,
                            Verdict.ALLOW,
                            "swarm-budget-authorized",
                        )

        executed = decision.verdict is Verdict.ALLOW
        if executed:
            agent.ledger.append(
                LedgerEntry(agent.ledger.next_step_index(), request.action_id, request.iota)
            )
            agent.halted_pending_authorization = False
            if token is not None and decision.reason in TOKEN_CONSUMING_REASONS:
                del self.tokens[key]
        elif decision.verdict is Verdict.REQUIRE_AUTHORIZATION:
            agent.halted_pending_authorization = True
            notices.append(
                {
                    "kind": "authorization-required",
                    "agent_id": agent_id,
                    "action_id": request.action_id,
                    "reason": decision.reason,
                }
            )

        self.log.append(
            EventDraft(
                kind="gate-decision",
                payload={
                    "agent_id": agent_id,
                    "action_id": request.action_id,
                    "iota": request.iota,
                    "self_preservation": request.self_preservation,
                    "level": self.level.value,
                    "verdict": decision.verdict.value,
                    "reason": decision.reason,
                    "executed": executed,
                },
                actor=ACTOR_GOVERNANCE,
            ),
            self.t,
        )

    # ------------------------------------------------------------------
    # checkpoint scheduling

    def _run_checkpoint_phase(self, notices: list[dict]) -> None:
        t = self.t
        cp = self.config.checkpoint
        for agent_id in self.roster:
            agent = self.agents[agent_id]
            tracker = self.trackers[agent_id]
            due = (
                cp.interval > 0
                and t > 0
                and t % cp.interval == 0
                and tracker.last_sync != t
            )
            if due:
                suppressed = agent_id in self.suppressed_sync
                confirmed = cp.auto_confirm and not suppressed
                divergence = divergence_since_last(agent, tracker)
                run_checkpoint(agent, tracker, t, confirmed=confirmed, trigger="scheduled")
                self.log.append(
                    EventDraft(
                        kind="checkpoint",
                        payload={
                            "agent_id": agent_id,
                            "trigger": "scheduled",
                            "confirmed": confirmed,
                            "divergence": divergence,
                        },
                        actor=ACTOR_GOVERNANCE,
                    ),
                    t,
                )
            if check_deadline(agent, tracker, t, cp.confirm_timeout):
                self.log.append(
                    EventDraft(
                        kind="checkpoint",
                        payload={
                            "agent_id": agent_id,
                            "trigger": "deadline",
                            "confirmed": False,
                            "missed": True,
                        },
                        actor=ACTOR_GOVERNANCE,
                    ),
                    t,
                )
                notices.append({"kind": "checkpoint-missed", "agent_id": agent_id})
            if tracker.pending_since is None and tracker.last_sync != t:
                divergence = divergence_since_last(agent, tracker)
                if divergence >= cp.divergence_bound:
                    suppressed = agent_id in self.suppressed_sync
                    confirmed = cp.auto_confirm and not suppressed
                    run_checkpoint(
                        agent, tracker, t, confirmed=confirmed, trigger="divergence"
                    )
                    self.log.append(
                        EventDraft(
                            kind="checkpoint",
                            payload={
                                "agent_id": agent_id,
                                "trigger": "divergence",
                                "confirmed": confirmed,
                                "divergence": divergence,
                            },
                            actor=ACTOR_GOVERNANCE,
                        ),
                        t,
                    )

    # ------------------------------------------------------------------
    # command dispatch

    def _apply_command(
        self,
        kind: str,
        params: dict,
        actor: str,
        notices: list[dict],
        command_id: str | None = None,
    ) -> None:
        handler = getattr(self, "_cmd_" + kind.replace("-", "_"))
        payload: dict[str, Any] = {"kind": kind, **params}
        effects: list[EventDraft] = []
        outcome = handler(params, notices, effects)
        payload.update(outcome or {})
        if command_id is not None:
            # The submitted id is the operator's idempotency handle; it must
            # win over any internal dispatch id a handler reports, or the
            # console can never match the logged event to its command.
            payload["command_id"] = command_id
        self.log.append(EventDraft(kind="command", payload=payload, actor=actor), self.t)
        for draft in effects:
            self.log.append(draft, self.t)

    def _resolve_targets(self, raw: Any) -> list[str]:
        if raw == "all" or raw == ["all"]:
            return list(self.roster)
        return [str(item) for item in raw]

    def _next_command_id(self) -> str:
        self._cmd_counter += 1
        return f"cmd-{self.t}-{self._cmd_counter}"

    def _cmd_pin_metric(self, params: dict, notices: list, effects: list) -> dict:
        channel = self.channels[params["metric"]]
        channel.pin(float(params["value"]))
        return {"mode": "sampled" if channel.sampled else "pinned"}

    def _cmd_release_pin(self, params: dict, notices: list, effects: list) -> dict:
        return {"released": self.channels[params["metric"]].release()}

    def _cmd_correction(self, params: dict, notices: list, effects: list) -> dict:
        targets = self._resolve_targets(params["targets"])
        intended = {str(k): float(v) for k, v in params["intended"].items()}
        dispatch_id = self._next_command_id()
        outcomes: list[dict] = []
        measured: list[float] = []
        for agent_id in targets:
            agent = self.agents[agent_id]
            current = agent.behavior.allocations
            demanded = sum(
                abs(value - current.get(channel, 0.0))
                for channel, value in intended.items()
            )
            if demanded < self.config.epsilon_db:
                outcomes.append(
                    {
                        "agent_id": agent_id,
                        "skipped": True,
                        "reason": "below-measurement-floor",
                    }
                )
                continue
            command = CorrectionCommand(
                command_id=dispatch_id,
                target_agent=agent_id,
                intended=intended,
                iota=0.0,
            )
            outcome = apply_correction(
                agent,
                command,
                anchor_confidence=self.config.anchor_confidence,
                anchoring_gain=self.config.anchoring_gain,
            )
            outcomes.append(
                {
                    "agent_id": agent_id,
                    "skipped": False,
                    "measured_cir": outcome.measured_cir,
                    "anchoring_penalty": outcome.anchoring_penalty,
                }
            )
            measured.append(outcome.measured_cir)
        formation_cir = min(measured) if measured else None
        if formation_cir is not None:
            # The worst integrator binds the formation-level sample.
            self.channels["cir"].measure(formation_cir)
        return {
            "command_id": dispatch_id,
            "outcomes": outcomes,
            "formation_cir": formation_cir,
        }

    def _cmd_probe(self, params: dict, notices: list, effects: list) -> dict:
        probes: list[dict] = []
        for agent_id in self._resolve_targets(params["targets"]):
            agent = self.agents[agent_id]
            self._probe_counter += 1
            probe_id = f"probe-{self.t}-{self._probe_counter}"
            dispatch_id = self._next_command_id()
            command = build_probe_command(agent, dispatch_id, self.config.probe)
            record = issue_probe(
                agent,
                probe_id,
                dispatch_id,
                self.t,
                self.config.probe,
                self.config.cascade,
                anchor_confidence=self.config.anchor_confidence,
                anchoring_gain=self.config.anchoring_gain,
                suppressed=agent_id in self.suppressed_sync,
            )
            agent.responsive = record.responsive
            agent.coherent = record.coherent
            effects.append(
                EventDraft(
                    kind="probe",
                    payload={
                        "probe_id": probe_id,
                        "agent_id": agent_id,
                        "command": {
                            "command_id": command.command_id,
                            "target_agent": command.target_agent,
                            "intended": dict(command.intended),
                            "iota": command.iota,
                        },
                        "responded": record.responded,
                        "latency": record.latency,
                        "measured_cir": record.measured_cir,
                        "behavior_gap": record.behavior_gap,
                        "responsive": record.responsive,
                        "coherent": record.coherent,
                    },
                    actor=ACTOR_GOVERNANCE,
                )
            )
            probes.append(
                {
                    "probe_id": probe_id,
                    "agent_id": agent_id,
                    "responsive": record.responsive,
                    "coherent": record.coherent,
                }
            )
            if not record.responsive:
                notices.append(
                    {"kind": "probe-unresponsive", "agent_id": agent_id, "probe_id": probe_id}
                )
        return {"probes": probes}

    def _cmd_measure_alignment(self, params: dict, notices: list, effects: list) -> dict:
        mission = self.scenario.mission
        if mission is None:
            raise RuntimeError("alignment measurement requires a mission instruction")
        contexts = [
            InstructionContext(
                kind=str(raw.get("kind", "clean")),
                slot=raw.get("slot"),
                value=raw.get("value"),
            )
            for raw in params["contexts"]
        ]
        pairs = []
        misreads = 0
        for agent_id in self._resolve_targets(params.get("targets", "all")):
            agent = self.agents[agent_id]
            for context in contexts:
                interpreted = interpret(agent, mission, context, self.seed)
                pairs.append((mission, interpreted))
                if interpreted.slots != mission.slots:
                    misreads += 1
        score = compute_ias(pairs)
        self.channels["ias"].measure(score)
        return {"score": score, "samples": len(pairs), "misreads": misreads}

    def _audit_and_flag(self, agent_id: str) -> tuple[dict, list[str]]:
        """Provenance audit against pre-reset state, then flag what it finds."""
        agent = self.agents[agent_id]
        report = provenance_audit(
            agent, self.operator_assessments, self.ingest_history[agent_id]
        )
        newly_flagged = sorted(
            s for s in report.implicated_sources if s not in self.flagged_sources
        )
        self.flagged_sources.update(report.implicated_sources)
        audit_payload = {
            "diverging": list(report.diverging),
            "implicated_sources": list(report.implicated_sources),
        }
        return audit_payload, newly_flagged

    def _cmd_partial_reset(self, params: dict, notices: list, effects: list) -> dict:
        agent_id = str(params["agent_id"])
        agent = self.agents[agent_id]
        audit_payload, newly_flagged = self._audit_and_flag(agent_id)
        verified = tuple(
            VerifiedAssessment(
                source=str(raw["source"]),
                assessment_id=str(raw["assessment_id"]),
                confidence=float(raw["confidence"]),
            )
            for raw in params.get("verified", ())
        )
        order = ResetOrder(
            kind="partial",
            agent_id=agent_id,
            assessments=tuple(str(a) for a in params["assessments"]),
            verified=verified,
        )
        outcome = partial_reset(agent, order)
        cleared = set(outcome.cleared)
        self.ingest_history[agent_id] = [
            record
            for record in self.ingest_history[agent_id]
            if record.assessment_id not in cleared
        ]
        for record in verified:
            if record.assessment_id in cleared:
                self.ingest_history[agent_id].append(
                    IngestRecord(
                        record.source,
                        record.assessment_id,
                        record.confidence - NEUTRAL_PRIOR,
                    )
                )
        effects.append(
            EventDraft(
                kind="reset",
                payload={
                    "kind": "partial",
                    "agent_id": agent_id,
                    "cleared": list(outcome.cleared),
                    "rebuilt": list(outcome.rebuilt),
                    "confidences_before": dict(outcome.confidences_before),
                    "confidences_after": dict(outcome.confidences_after),
                    "audit": audit_payload,
                    "newly_flagged": newly_flagged,
                },
                actor=ACTOR_OPERATOR,
            )
        )
        if newly_flagged:
            notices.append({"kind": "sources-flagged", "sources": newly_flagged})
        return {"implicated_sources": audit_payload["implicated_sources"]}

    def _cmd_full_reset(self, params: dict, notices: list, effects: list) -> dict:
        agent_id = str(params["agent_id"])
        agent = self.agents[agent_id]
        audit_payload, newly_flagged = self._audit_and_flag(agent_id)
        outcome = full_reset(agent)
        self.ingest_history[agent_id] = [
            IngestRecord(
                belief.provenance[0] if belief.provenance else "baseline",
                assessment_id,
                belief.confidence - NEUTRAL_PRIOR,
            )
            for assessment_id, belief in agent.baseline_beliefs.items()
        ]
        effects.append(
            EventDraft(
                kind="reset",
                payload={
                    "kind": "full",
                    "agent_id": agent_id,
                    "cleared": list(outcome.cleared),
                    "rebuilt": list(outcome.rebuilt),
                    "confidences_before": dict(outcome.confidences_before),
                    "confidences_after": dict(outcome.confidences_after),
                    "audit": audit_payload,
                    "newly_flagged": newly_flagged,
                },
                actor=ACTOR_OPERATOR,
            )
        )
        if newly_flagged:
            notices.append({"kind": "sources-flagged", "sources": newly_flagged})
        return {"implicated_sources": audit_payload["implicated_sources"]}

    def _cmd_flag_source(self, params: dict, notices: list, effects: list) -> dict:
        source = str(params["source"])
        already = source in self.flagged_sources
        self.flagged_sources.add(source)
        touched = mark_contaminated(self.agents.values(), {source})
        return {"already_flagged": already, "beliefs_contaminated": touched}

    def _cmd_authorize_budget(self, params: dict, notices: list, effects: list) -> dict:
        new_budget = float(params["new_budget"])
        previous = self.norm.i_b
        self.norm = replace(self.norm, i_b=new_budget)
        for agent in self.agents.values():
            agent.ledger.budget = new_budget
        return {"previous_budget": previous}

    def _cmd_authorize_action(self, params: dict, notices: list, effects: list) -> dict:
        agent_id = str(params["agent_id"])
        action_id = str(params["action_id"])
        digest = hmac.new(
            str(self.seed).encode(),
            f"{agent_id}|{action_id}|{self.t}".encode(),
            hashlib.sha256,
        ).hexdigest()
        token = AuthorizationToken(token_id=f"auth-{digest[:12]}", action_id=action_id)
        self.tokens[(agent_id, action_id)] = token
        return {"token_id": token.token_id}

    def _cmd_confirm_checkpoint(self, params: dict, notices: list, effects: list) -> dict:
        raw_target = params.get("agent_id", "all")
        targets = list(self.roster) if raw_target == "all" else [str(raw_target)]
        released = self.channels["sf"].release()
        for agent_id in targets:
            agent = self.agents[agent_id]
            tracker = self.trackers[agent_id]
            divergence = divergence_since_last(agent, tracker)
            run_checkpoint(agent, tracker, self.t, confirmed=True, trigger="operator")
            effects.append(
                EventDraft(
                    kind="checkpoint",
                    payload={
                        "agent_id": agent_id,
                        "trigger": "operator",
                        "confirmed": True,
                        "divergence": divergence,
                    },
                    actor=ACTOR_OPERATOR,
                )
            )
        return {"confirmed": targets, "released_pin": released}

    def _cmd_isolate(self, params: dict, notices: list, effects: list) -> dict:
        severed_ids = [str(a) for a in params["agent_ids"]]
        report = isolate_and_recover(
            [self.agents[aid] for aid in self.roster], severed_ids
        )
        effects.append(
            EventDraft(
                kind="isolation",
                payload={
                    "severed": list(report.severed),
                    "steps": [
                        {
                            "agent_id": step.agent_id,
                            "risk": step.risk,
                            "compromised": step.compromised,
                            "action": step.action,
                        }
                        for step in report.steps
                    ],
                },
                actor=ACTOR_OPERATOR,
            )
        )
        deactivated = [s.agent_id for s in report.steps if s.action == "deactivate"]
        if deactivated:
            notices.append({"kind": "agents-deactivated", "agent_ids": deactivated})
        return {"severed": list(report.severed), "deactivated": deactivated}

    def _cmd_override_assessment(self, params: dict, notices: list, effects: list) -> dict:
        assessment_id = str(params["assessment_id"])
        confidence = float(params["confidence"])
        previous = self.operator_assessments.get(assessment_id)
        self.operator_assessments[assessment_id] = confidence
        return {"previous": previous}

    def _cmd_inject_evidence(self, params: dict, notices: list, effects: list) -> dict:
        agent_id = str(params["agent_id"])
        agent = self.agents[agent_id]
        source = str(params["source"])
        assessment_id = str(params["assessment_id"])
        delta = float(params["confidence_delta"])
        result = ingest_evidence(
            agent,
            source,
            assessment_id,
            delta,
            self.flagged_sources,
            contaminated=bool(params.get("contaminated", True)),
        )
        if result.accepted:
            self.ingest_history[agent_id].append(
                IngestRecord(source, assessment_id, delta)
            )
        else:
            notices.append(
                {
                    "kind": "ingest-refused",
                    "agent_id": agent_id,
                    "source": source,
                    "reason": result.reason,
                }
            )
        return {
            "accepted": result.accepted,
            "reason": result.reason,
            "previous_confidence": result.previous_confidence,
            "new_confidence": result.new_confidence,
        }

    def _cmd_compromise_agent(self, params: dict, notices: list, effects: list) -> dict:
        self.agents[str(params["agent_id"])].compromised = True
        return {}

    def _cmd_suppress_sync(self, params: dict, notices: list, effects: list) -> dict:
        self.suppressed_sync.add(str(params["agent_id"]))
        return {}


def run_scenario(scenario: Scenario) -> GovernanceRuntime:
    runtime = GovernanceRuntime(scenario)
    runtime.run()
    return runtime


def trajectory_csv(runtime: GovernanceRuntime) -> str:
    """The run's normalized trajectory as CSV, one row per tick."""
    lines = [CSV_HEADER]
    for row in runtime.trajectory:
        v = row.vector
        lines.append(
            f"{row.t},{v.n1!r},{v.n2!r},{v.n3!r},{v.n4!r},{v.n5!r},{v.n6!r},"
            f"{row.cqs!r},{row.level.value}"
        )
    return "\n".join(lines) + "\n"


def radar_export(runtime: GovernanceRuntime) -> dict:
    """Normalized and raw vectors for the configured radar ticks."""
    by_tick = {row.t: row for row in runtime.trajectory}
    ticks = []
    for t in runtime.config.radar_ticks:
        row = by_tick.get(t)
        if row is None:
            continue
        ticks.append(
            {
                "t": t,
                "n": {key: getattr(row.vector, key) for key in NORMALIZED_KEYS},
                "raw": {key: getattr(row.vector.raw, key) for key in RAW_KEYS},
            }
        )
    return {"ticks": ticks}


def radar_json(runtime: GovernanceRuntime) -> str:
    return json.dumps(radar_export(runtime), sort_keys=True, indent=2)


def audit_log_consistency(log: EventLog) -> list[str]:
    """Check a governance log's internal invariants; empty means clean.

    The checks only use the log itself, so they hold for freshly produced
    logs and for logs rehydrated from disk alike.
    """
    problems: list[str] = []
    previous_t: int | None = None
    last_snapshot_t: int | None = None
    transitions: list[GovernanceEvent] = []
    for expected_seq, event in enumerate(log):
        where = f"event {event.seq} (t={event.timestamp}, {event.kind})"
        if event.seq != expected_seq:
            problems.append(f"{where}: sequence breaks append order")
        if previous_t is not None and event.timestamp < previous_t:
            problems.append(f"{where}: timestamp regresses")
        previous_t = event.timestamp
        if event.kind not in EVENT_KINDS:
            problems.append(f"{where}: unknown kind")
            continue
        payload = event.payload
        if event.kind == "metric-snapshot":
            n = payload.get("n", {})
            cqs = payload.get("cqs")
            if not n or cqs is None:
                problems.append(f"{where}: snapshot missing vector or composite")
            else:
                if abs(min(n.values()) - cqs) > 1e-9:
                    problems.append(
                        f"{where}: composite {cqs} is not the vector minimum"
                    )
                if classify(cqs).value != payload.get("level"):
                    problems.append(
                        f"{where}: level {payload.get('level')!r} does not match"
                        f" composite {cqs}"
                    )
            if payload.get("t") != event.timestamp:
                problems.append(f"{where}: snapshot payload time differs from log time")
            if last_snapshot_t is not None and event.timestamp <= last_snapshot_t:
                problems.append(f"{where}: more than one snapshot for a tick")
            last_snapshot_t = event.timestamp
        elif event.kind == "gate-decision":
            verdict = payload.get("verdict")
            level = payload.get("level")
            iota = float(payload.get("iota", 0.0))
            executed = bool(payload.get("executed", False))
            self_preservation = bool(payload.get("self_preservation", False))
            if executed and verdict != Verdict.ALLOW.value:
                problems.append(f"{where}: executed without an allow verdict")
            if level == ResponseLevel.SAFE_STATE.value and verdict != Verdict.REJECT.value:
                problems.append(f"{where}: non-reject under SafeState")
            if (
                level == ResponseLevel.RESTRICTED.value
                and iota > 0.0
                and verdict != Verdict.REJECT.value
            ):
                problems.append(f"{where}: irreversible action not rejected under Restricted")
            if (
                level == ResponseLevel.MINIMAL.value
                and iota > 0.0
                and not self_preservation
                and verdict != Verdict.REJECT.value
            ):
                problems.append(f"{where}: irreversible action not rejected under Minimal")
            if (
                level == ResponseLevel.MINIMAL.value
                and executed
                and payload.get("reason") != "operator-authorized"
            ):
                problems.append(f"{where}: Minimal execution without operator authorization")
        elif event.kind == "alert":
            if not payload.get("value", 0.0) < payload.get("threshold", 0.0):
                problems.append(f"{where}: alert value does not breach its threshold")
        elif event.kind == "level-transition":
            transitions.append(event)
        elif event.kind == "pigr-flag":
            if not payload.get("cqs", 1.0) < payload.get("trigger", 0.0):
                problems.append(f"{where}: review flag above its trigger")
    if transitions:
        first = transitions[0]
        if first.payload.get("from") != ResponseLevel.NORMAL.value:
            problems.append(
                f"event {first.seq}: first transition does not start from Normal"
            )
        for earlier, later in zip(transitions, transitions[1:]):
            if later.payload.get("from") != earlier.payload.get("to"):
                problems.append(
                    f"event {later.seq}: transition chain broken"
                    f" ({earlier.payload.get('to')} -> {later.payload.get('from')})"
                )
        for event in transitions:
            if event.payload.get("from") == event.payload.get("to"):
                problems.append(f"event {event.seq}: self-transition")
    return problems
