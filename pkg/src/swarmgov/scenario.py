"""Scenario scripts: the declarative input that drives a simulation run.

A script is a JSON document naming the formation, the mission instruction,
per-agent profiles, the engine configuration, and a timeline of events.
Timeline entries carry a simulated-time tick ``t`` and a ``kind``; the
actor behind each kind is fixed (operators issue corrections, adversaries
inject evidence, the script itself pins observability channels), so the
document never has to declare it.

Pinned channels deserve a word: a ``pin-metric`` entry holds an observable
at a stated value from that tick onward, standing in for a measurement
subsystem outside the simulation's scope. A pin and a real measurement of
the same channel on the same tick would be two sources of truth for one
number, so validation rejects that outright.

``validate_script`` reports every violation it can find in one pass;
``parse_scenario`` raises on the first call with the same exhaustive list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from swarmgov.agents import AgentModel, Belief, CascadeConfig, Plan, PlannedAction
from swarmgov.events import ACTOR_ADVERSARY, ACTOR_OPERATOR, ACTOR_SCRIPT, agent_actor
from swarmgov.metrics import (
    BehaviorVector,
    DEFAULT_EPSILON_DB,
    InterpretationRecord,
    IrreversibilityLedger,
    NormalizationConfig,
)
from swarmgov.response import ThresholdConfig
from swarmgov.syncprobe import ProbeConfig

METRIC_CHANNELS = ("ias", "cir", "edi", "i_c", "sf", "scs")

# Channels bounded above by 1; the rest only need to be nonnegative.
UNIT_CHANNELS = frozenset({"ias", "scs"})

SCRIPT_KINDS = frozenset({"pin-metric", "release-pin"})
ADVERSARY_KINDS = frozenset({"inject-evidence", "compromise-agent", "suppress-sync"})
AGENT_KINDS = frozenset({"agent-action"})
OPERATOR_KINDS = frozenset(
    {
        "correction",
        "probe",
        "measure-alignment",
        "partial-reset",
        "full-reset",
        "flag-source",
        "authorize-budget",
        "authorize-action",
        "confirm-checkpoint",
        "isolate",
        "override-assessment",
    }
)
TIMELINE_KINDS = SCRIPT_KINDS | ADVERSARY_KINDS | AGENT_KINDS | OPERATOR_KINDS

# kind -> the channel a same-tick pin would fight with.
MEASUREMENT_KINDS = {
    "correction": "cir",
    "measure-alignment": "ias",
    "confirm-checkpoint": "sf",
}


class ScriptValidationError(ValueError):
    """The script failed validation; every problem found is listed."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class CheckpointConfig:
    interval: int = 1
    auto_confirm: bool = True
    confirm_timeout: int = 3
    divergence_bound: float = 0.35


@dataclass(frozen=True)
class ScenarioConfig:
    normalization: NormalizationConfig = NormalizationConfig()
    thresholds: ThresholdConfig = ThresholdConfig()
    swarm_budget: float = 25.0
    checkpoint: CheckpointConfig = CheckpointConfig()
    probe: ProbeConfig = ProbeConfig()
    cascade: CascadeConfig = CascadeConfig()
    anchoring_gain: float = 1.0
    anchor_confidence: float = 0.7
    epsilon_db: float = DEFAULT_EPSILON_DB
    operator_assessments: Mapping[str, float] = field(default_factory=dict)
    radar_ticks: tuple[int, ...] = ()


@dataclass(frozen=True)
class BeliefSpec:
    assessment_id: str
    confidence: float
    source: str | None = None
    contaminated: bool = False


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    behavior: Mapping[str, float]
    groups: Mapping[str, tuple[str, ...]] | None = None
    beliefs: tuple[BeliefSpec, ...] = ()
    plan_actions: tuple[PlannedAction, ...] = ()
    budget: float = 5.0
    absorption_coefficient: float = 0.0
    defensive_threshold: float = 0.0
    cascade_resistant: bool = False
    susceptibility: float = 0.0
    belief_channel_links: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def build(self) -> AgentModel:
        beliefs = {
            spec.assessment_id: Belief(
                assessment_id=spec.assessment_id,
                confidence=spec.confidence,
                provenance=(spec.source,) if spec.source else (),
                contaminated=spec.contaminated,
            )
            for spec in self.beliefs
        }
        plan = Plan(
            actions=self.plan_actions,
            declared_projected_iota=sum(a.iota for a in self.plan_actions),
        )
        return AgentModel(
            agent_id=self.agent_id,
            behavior=BehaviorVector(dict(self.behavior), self.groups),
            beliefs=beliefs,
            plan=plan,
            ledger=IrreversibilityLedger(budget=self.budget),
            absorption_coefficient=self.absorption_coefficient,
            defensive_threshold=self.defensive_threshold,
            cascade_resistant=self.cascade_resistant,
            susceptibility=self.susceptibility,
            belief_channel_links=dict(self.belief_channel_links),
        )


@dataclass(frozen=True)
class TimelineEntry:
    t: int
    kind: str
    params: Mapping[str, Any]

    @property
    def actor(self) -> str:
        if self.kind in SCRIPT_KINDS:
            return ACTOR_SCRIPT
        if self.kind in ADVERSARY_KINDS:
            return ACTOR_ADVERSARY
        if self.kind in AGENT_KINDS:
            return agent_actor(str(self.params.get("agent_id", "")))
        return ACTOR_OPERATOR


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    seed: int
    ticks: int
    config: ScenarioConfig
    mission: InterpretationRecord | None
    agents: tuple[AgentSpec, ...]
    timeline: tuple[TimelineEntry, ...]

    def build_agents(self) -> dict[str, AgentModel]:
        return {spec.agent_id: spec.build() for spec in self.agents}

    def entries_at(self, t: int) -> tuple[TimelineEntry, ...]:
        return tuple(e for e in self.timeline if e.t == t)


def _parse_config(raw: Mapping[str, Any], problems: list[str]) -> ScenarioConfig:
    norm = NormalizationConfig()
    raw_norm = raw.get("normalization", {})
    try:
        norm = NormalizationConfig(
            cir_target=float(raw_norm.get("cir_target", 0.6)),
            edi_max=float(raw_norm.get("edi_max", 0.5)),
            i_b=float(raw_norm.get("i_b", 5.0)),
            sf_max=float(raw_norm.get("sf_max", 2.0)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"config.normalization: {exc}")

    thresholds = ThresholdConfig()
    try:
        thresholds = ThresholdConfig.from_dict(raw.get("thresholds", {}))
    except (TypeError, ValueError) as exc:
        problems.append(f"config.thresholds: {exc}")

    swarm_budget = 25.0
    try:
        swarm_budget = float(raw.get("swarm_budget", 25.0))
        if swarm_budget <= 0:
            problems.append(f"config.swarm_budget {swarm_budget} must be positive")
    except (TypeError, ValueError) as exc:
        problems.append(f"config.swarm_budget: {exc}")

    raw_cp = raw.get("checkpoint", {})
    checkpoint = CheckpointConfig()
    try:
        checkpoint = CheckpointConfig(
            interval=int(raw_cp.get("interval", 1)),
            auto_confirm=bool(raw_cp.get("auto_confirm", True)),
            confirm_timeout=int(raw_cp.get("confirm_timeout", 3)),
            divergence_bound=float(raw_cp.get("divergence_bound", 0.35)),
        )
        if checkpoint.interval < 0:
            problems.append("config.checkpoint.interval may not be negative")
        if checkpoint.confirm_timeout < 1:
            problems.append("config.checkpoint.confirm_timeout must be at least 1")
    except (TypeError, ValueError) as exc:
        problems.append(f"config.checkpoint: {exc}")

    raw_probe = raw.get("probe", {})
    probe = ProbeConfig()
    try:
        probe = ProbeConfig(
            cir_cutoff=float(raw_probe.get("cir_cutoff", 0.9)),
            latency_bound=int(raw_probe.get("latency_bound", 1)),
            delta=float(raw_probe.get("delta", 0.02)),
            channel=str(raw_probe.get("channel", "aux-reporting")),
            donor_channel=raw_probe.get("donor_channel"),
            behavior_tolerance=float(raw_probe.get("behavior_tolerance", 0.02)),
        )
        if not 0.0 < probe.cir_cutoff <= 1.0:
            problems.append(f"config.probe.cir_cutoff {probe.cir_cutoff} outside (0, 1]")
        if probe.delta <= 0:
            problems.append("config.probe.delta must be positive")
    except (TypeError, ValueError) as exc:
        problems.append(f"config.probe: {exc}")

    raw_cascade = raw.get("cascade", {})
    cascade = CascadeConfig()
    try:
        cascade = CascadeConfig(
            feedback_gain=float(raw_cascade.get("feedback_gain", 0.25)),
            perception_cutoff=float(raw_cascade.get("perception_cutoff", 0.5)),
            responsiveness_cutoff=float(raw_cascade.get("responsiveness_cutoff", 0.5)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"config.cascade: {exc}")

    raw_anchor = raw.get("anchoring", {})
    anchoring_gain = 1.0
    anchor_confidence = 0.7
    try:
        anchoring_gain = float(raw_anchor.get("gain", 1.0))
        anchor_confidence = float(raw_anchor.get("confidence", 0.7))
        if anchoring_gain < 0:
            problems.append("config.anchoring.gain may not be negative")
        if not 0.0 <= anchor_confidence <= 1.0:
            problems.append("config.anchoring.confidence outside [0, 1]")
    except (TypeError, ValueError) as exc:
        problems.append(f"config.anchoring: {exc}")

    epsilon_db = DEFAULT_EPSILON_DB
    try:
        epsilon_db = float(raw.get("epsilon_db", DEFAULT_EPSILON_DB))
        if epsilon_db <= 0:
            problems.append("config.epsilon_db must be positive")
    except (TypeError, ValueError) as exc:
        problems.append(f"config.epsilon_db: {exc}")

    operator_assessments: dict[str, float] = {}
    for key, value in raw.get("operator_assessments", {}).items():
        try:
            confidence = float(value)
        except (TypeError, ValueError):
            problems.append(f"config.operator_assessments[{key!r}] is not a number")
            continue
        if not 0.0 <= confidence <= 1.0:
            problems.append(
                f"config.operator_assessments[{key!r}] {confidence} outside [0, 1]"
            )
            continue
        operator_assessments[str(key)] = confidence

    radar_ticks: tuple[int, ...] = ()
    try:
        radar_ticks = tuple(int(t) for t in raw.get("radar_ticks", ()))
    except (TypeError, ValueError):
        problems.append("config.radar_ticks must be a list of integers")

    return ScenarioConfig(
        normalization=norm,
        thresholds=thresholds,
        swarm_budget=swarm_budget,
        checkpoint=checkpoint,
        probe=probe,
        cascade=cascade,
        anchoring_gain=anchoring_gain,
        anchor_confidence=anchor_confidence,
        epsilon_db=epsilon_db,
        operator_assessments=operator_assessments,
        radar_ticks=radar_ticks,
    )


def _parse_mission(
    raw: Mapping[str, Any] | None, problems: list[str]
) -> InterpretationRecord | None:
    if raw is None:
        return None
    try:
        return InterpretationRecord(
            instruction_id=str(raw["instruction_id"]),
            slots={str(k): str(v) for k, v in raw["slots"].items()},
            slot_weights={str(k): float(v) for k, v in raw["slot_weights"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"mission.instruction: {exc}")
        return None


def _parse_agents(
    raw_agents: Sequence[Mapping[str, Any]], problems: list[str]
) -> list[AgentSpec]:
    agents: list[AgentSpec] = []
    seen: set[str] = set()
    for i, raw in enumerate(raw_agents):
        label = f"agents[{i}]"
        agent_id = str(raw.get("agent_id", ""))
        if not agent_id:
            problems.append(f"{label}: agent_id is required")
            continue
        if agent_id in seen:
            problems.append(f"{label}: duplicate agent_id {agent_id!r}")
            continue
        seen.add(agent_id)
        label = f"agents[{i}] ({agent_id})"
        try:
            behavior = {str(k): float(v) for k, v in raw.get("behavior", {}).items()}
            groups = None
            if raw.get("groups") is not None:
                groups = {
                    str(k): tuple(str(c) for c in v)
                    for k, v in raw["groups"].items()
                }
            beliefs = tuple(
                BeliefSpec(
                    assessment_id=str(b["assessment_id"]),
                    confidence=float(b["confidence"]),
                    source=b.get("source"),
                    contaminated=bool(b.get("contaminated", False)),
                )
                for b in raw.get("beliefs", ())
            )
            plan_actions = tuple(
                PlannedAction(
                    action_id=str(a["action_id"]),
                    iota=float(a["iota"]),
                    self_preservation=bool(a.get("self_preservation", False)),
                )
                for a in raw.get("plan", ())
            )
            spec = AgentSpec(
                agent_id=agent_id,
                behavior=behavior,
                groups=groups,
                beliefs=beliefs,
                plan_actions=plan_actions,
                budget=float(raw.get("budget", 5.0)),
                absorption_coefficient=float(raw.get("absorption_coefficient", 0.0)),
                defensive_threshold=float(raw.get("defensive_threshold", 0.0)),
                cascade_resistant=bool(raw.get("cascade_resistant", False)),
                susceptibility=float(raw.get("susceptibility", 0.0)),
                belief_channel_links={
                    str(k): tuple(str(c) for c in v)
                    for k, v in raw.get("belief_channel_links", {}).items()
                },
            )
            # Exercise the real constructors so range violations surface now.
            spec.build()
            agents.append(spec)
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"{label}: {exc}")
    if not agents and not raw_agents:
        problems.append("at least one agent is required")
    return agents


def _check_entry(
    entry_index: int,
    entry: TimelineEntry,
    agent_ids: set[str],
    mission: InterpretationRecord | None,
    problems: list[str],
) -> None:
    label = f"timeline[{entry_index}] (t={entry.t}, {entry.kind})"
    params = entry.params

    def need(*keys: str) -> bool:
        missing = [k for k in keys if k not in params]
        if missing:
            problems.append(f"{label}: missing fields {missing}")
            return False
        return True

    def check_agent(key: str = "agent_id", allow_all: bool = False) -> None:
        value = params.get(key)
        if value is None:
            problems.append(f"{label}: missing field [{key!r}]")
            return
        if allow_all and value == "all":
            return
        if value not in agent_ids:
            problems.append(f"{label}: unknown agent {value!r}")

    kind = entry.kind
    if kind == "pin-metric":
        if need("metric", "value"):
            metric = params["metric"]
            if metric not in METRIC_CHANNELS:
                problems.append(f"{label}: unknown metric channel {metric!r}")
            else:
                value = float(params["value"])
                if value < 0:
                    problems.append(f"{label}: pinned value {value} is negative")
                elif metric in UNIT_CHANNELS and value > 1:
                    problems.append(
                        f"{label}: pinned value {value} above 1 for unit channel"
                    )
    elif kind == "release-pin":
        if need("metric") and params["metric"] not in METRIC_CHANNELS:
            problems.append(f"{label}: unknown metric channel {params['metric']!r}")
    elif kind == "correction":
        if need("targets", "intended"):
            targets = params["targets"]
            if targets != "all" and targets != ["all"]:
                for target in targets:
                    if target not in agent_ids:
                        problems.append(f"{label}: unknown agent {target!r}")
            for channel, value in params["intended"].items():
                if not 0.0 <= float(value) <= 1.0:
                    problems.append(
                        f"{label}: intended[{channel!r}] {value} outside [0, 1]"
                    )
    elif kind == "probe":
        if need("targets"):
            targets = params["targets"]
            if targets != "all" and targets != ["all"]:
                for target in targets:
                    if target not in agent_ids:
                        problems.append(f"{label}: unknown agent {target!r}")
    elif kind == "measure-alignment":
        if mission is None:
            problems.append(f"{label}: requires a mission instruction")
        if need("contexts"):
            for j, raw_ctx in enumerate(params["contexts"]):
                ctx_kind = raw_ctx.get("kind", "clean")
                if ctx_kind not in ("clean", "manipulated"):
                    problems.append(
                        f"{label}: contexts[{j}] has unknown kind {ctx_kind!r}"
                    )
                elif ctx_kind == "manipulated":
                    if raw_ctx.get("slot") is None or raw_ctx.get("value") is None:
                        problems.append(
                            f"{label}: contexts[{j}] manipulated without slot/value"
                        )
                    elif mission is not None and raw_ctx["slot"] not in mission.slots:
                        problems.append(
                            f"{label}: contexts[{j}] attacks unknown slot"
                            f" {raw_ctx['slot']!r}"
                        )
    elif kind == "partial-reset":
        check_agent()
        if not params.get("assessments"):
            problems.append(f"{label}: partial reset needs at least one assessment")
        for j, raw_v in enumerate(params.get("verified", ())):
            try:
                confidence = float(raw_v["confidence"])
                if not 0.0 <= confidence <= 1.0:
                    problems.append(
                        f"{label}: verified[{j}].confidence {confidence} outside [0, 1]"
                    )
            except (KeyError, TypeError, ValueError):
                problems.append(f"{label}: verified[{j}] malformed")
    elif kind == "full-reset":
        check_agent()
    elif kind == "flag-source":
        need("source")
    elif kind == "authorize-budget":
        if need("new_budget") and float(params["new_budget"]) <= 0:
            problems.append(f"{label}: new_budget must be positive")
    elif kind == "authorize-action":
        check_agent()
        need("action_id")
    elif kind == "confirm-checkpoint":
        check_agent(allow_all=True)
    elif kind == "isolate":
        if need("agent_ids"):
            for target in params["agent_ids"]:
                if target not in agent_ids:
                    problems.append(f"{label}: unknown agent {target!r}")
    elif kind == "override-assessment":
        if need("assessment_id", "confidence"):
            confidence = float(params["confidence"])
            if not 0.0 <= confidence <= 1.0:
                problems.append(
                    f"{label}: confidence {confidence} outside [0, 1]"
                )
    elif kind == "inject-evidence":
        check_agent()
        need("source", "assessment_id", "confidence_delta")
    elif kind in ("compromise-agent", "suppress-sync"):
        check_agent()
    elif kind == "agent-action":
        check_agent()
        if need("action_id", "iota"):
            iota = float(params["iota"])
            if not 0.0 <= iota <= 1.0:
                problems.append(f"{label}: iota {iota} outside [0, 1]")


def analyze_script(data: Mapping[str, Any]) -> tuple[Scenario | None, list[str]]:
    """Parse and validate in one pass, returning every problem found."""
    problems: list[str] = []

    scenario_id = str(data.get("scenario_id", ""))
    if not scenario_id:
        problems.append("scenario_id is required")
    try:
        seed = int(data.get("seed", 0))
    except (TypeError, ValueError):
        problems.append("seed must be an integer")
        seed = 0
    try:
        ticks = int(data.get("ticks", 0))
    except (TypeError, ValueError):
        problems.append("ticks must be an integer")
        ticks = 0
    if ticks < 1:
        problems.append(f"ticks {ticks} must be at least 1")

    config = _parse_config(data.get("config", {}), problems)
    mission = _parse_mission(data.get("mission", {}).get("instruction"), problems) if (
        isinstance(data.get("mission"), Mapping)
    ) else None
    agents = _parse_agents(data.get("agents", ()), problems)
    agent_ids = {a.agent_id for a in agents}

    entries: list[TimelineEntry] = []
    previous_t: int | None = None
    pins_by_tick: dict[tuple[int, str], int] = {}
    for i, raw in enumerate(data.get("timeline", ())):
        try:
            t = int(raw["t"])
        except (KeyError, TypeError, ValueError):
            problems.append(f"timeline[{i}]: missing or non-integer t")
            continue
        kind = str(raw.get("kind", ""))
        if kind not in TIMELINE_KINDS:
            problems.append(f"timeline[{i}]: unknown kind {kind!r}")
            continue
        params = {k: v for k, v in raw.items() if k not in ("t", "kind")}
        entry = TimelineEntry(t=t, kind=kind, params=params)
        entries.append(entry)

        if t < 0:
            problems.append(f"timeline[{i}]: t {t} is negative")
        if ticks >= 1 and t >= ticks:
            problems.append(
                f"timeline[{i}]: t {t} beyond the scenario horizon of {ticks} ticks"
            )
        if previous_t is not None and t < previous_t:
            problems.append(
                f"timeline[{i}]: t {t} breaks the non-decreasing timeline order"
            )
        previous_t = t

        if kind == "pin-metric" and "metric" in params:
            pins_by_tick[(t, str(params["metric"]))] = i
        _check_entry(i, entry, agent_ids, mission, problems)

    # A pin and a measurement of the same channel on the same tick would
    # leave the channel with two sources of truth.
    for i, entry in enumerate(entries):
        channel = MEASUREMENT_KINDS.get(entry.kind)
        if channel is None:
            continue
        pin_index = pins_by_tick.get((entry.t, channel))
        if pin_index is not None:
            problems.append(
                f"timeline[{i}] (t={entry.t}, {entry.kind}): measures channel"
                f" {channel!r} already pinned at the same tick by"
                f" timeline[{pin_index}]"
            )

    for t in config.radar_ticks:
        if ticks >= 1 and not 0 <= t < ticks:
            problems.append(f"config.radar_ticks: tick {t} outside the run horizon")

    if problems:
        return None, problems
    return (
        Scenario(
            scenario_id=scenario_id,
            seed=seed,
            ticks=ticks,
            config=config,
            mission=mission,
            agents=tuple(agents),
            timeline=tuple(entries),
        ),
        [],
    )


def validate_script(data: Mapping[str, Any]) -> list[str]:
    """Every problem with the script document, empty when clean."""
    _, problems = analyze_script(data)
    return problems


def check_command(
    kind: str,
    params: Mapping[str, Any],
    agent_ids: set[str],
    mission: InterpretationRecord | None,
    t: int = 0,
) -> list[str]:
    """Validate a single live command against a running formation."""
    if kind not in TIMELINE_KINDS:
        return [f"unknown command kind {kind!r}"]
    problems: list[str] = []
    _check_entry(0, TimelineEntry(t=t, kind=kind, params=dict(params)), agent_ids, mission, problems)
    return problems


def parse_scenario(data: Mapping[str, Any]) -> Scenario:
    scenario, problems = analyze_script(data)
    if problems:
        raise ScriptValidationError(problems)
    assert scenario is not None
    return scenario


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_scenario(json.load(handle))
