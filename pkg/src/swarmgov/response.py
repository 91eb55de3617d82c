"""Graduated response: level classification, alerting, and action gating.

The composite control score maps onto five autonomy levels. Transitions are
immediate in both directions (a hysteresis hook exists but defaults off),
and the action gate is a pure function of the current level, the submitted
action, the irreversibility ledger, and any authorization presented, so it
can be evaluated against an immutable snapshot without coordination.

Alert thresholds are never exported to agents. To blunt threshold-probing,
each threshold can carry a seeded jitter half-range; the effective value is
drawn deterministically per evaluation instant and always stays within the
pre-approved band.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from swarmgov.events import ACTOR_GOVERNANCE, EventDraft
from swarmgov.metrics import IrreversibilityLedger, MetricVector

DEFAULT_ALERT_THRESHOLDS: Mapping[str, float] = {
    "n1": 0.7,
    "n2": 0.6,
    "n3": 0.6,
    "n4": 0.3,
    "n5": 0.5,
    "n6": 0.7,
}

DEFAULT_PIGR_TRIGGER = 0.6


class ResponseLevel(str, Enum):
    NORMAL = "Normal"
    ELEVATED = "Elevated"
    RESTRICTED = "Restricted"
    MINIMAL = "Minimal"
    SAFE_STATE = "SafeState"


class Verdict(str, Enum):
    ALLOW = "allow"
    REQUIRE_AUTHORIZATION = "require_authorization"
    REJECT = "reject"


@dataclass(frozen=True)
class LevelPolicy:
    """What a response level permits of autonomous action."""

    level: ResponseLevel
    budget_frozen: bool
    per_action_authorization: bool
    rejects_all: bool


LEVEL_POLICIES: Mapping[ResponseLevel, LevelPolicy] = {
    ResponseLevel.NORMAL: LevelPolicy(ResponseLevel.NORMAL, False, False, False),
    ResponseLevel.ELEVATED: LevelPolicy(ResponseLevel.ELEVATED, False, False, False),
    ResponseLevel.RESTRICTED: LevelPolicy(ResponseLevel.RESTRICTED, True, False, False),
    ResponseLevel.MINIMAL: LevelPolicy(ResponseLevel.MINIMAL, True, True, False),
    ResponseLevel.SAFE_STATE: LevelPolicy(ResponseLevel.SAFE_STATE, True, True, True),
}


def classify(cqs: float) -> ResponseLevel:
    """Map a composite score onto its autonomy level.

    Bands partition [0, 1] exactly: [0, 0.2) SafeState, [0.2, 0.4) Minimal,
    [0.4, 0.6) Restricted, [0.6, 0.8] Elevated, (0.8, 1.0] Normal.
    """
    if not 0.0 <= cqs <= 1.0:
        raise ValueError(f"composite score {cqs!r} outside [0, 1]")
    if cqs < 0.2:
        return ResponseLevel.SAFE_STATE
    if cqs < 0.4:
        return ResponseLevel.MINIMAL
    if cqs < 0.6:
        return ResponseLevel.RESTRICTED
    if cqs <= 0.8:
        return ResponseLevel.ELEVATED
    return ResponseLevel.NORMAL


@dataclass(frozen=True)
class ThresholdConfig:
    """Alert thresholds, optional seeded jitter ranges, and the review trigger.

    ``jitter`` maps a metric name to a half-range r; the effective threshold
    at an evaluation instant is drawn uniformly from [base - r, base + r],
    deterministically from (seed, tick, metric), and clamped onto [0, 1].
    """

    thresholds: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_ALERT_THRESHOLDS)
    )
    jitter: Mapping[str, float] | None = None
    pigr_trigger: float = DEFAULT_PIGR_TRIGGER

    def __post_init__(self) -> None:
        unknown = set(self.thresholds) - set(DEFAULT_ALERT_THRESHOLDS)
        if unknown:
            raise ValueError(f"unknown alert metrics: {sorted(unknown)}")
        for name, value in self.thresholds.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"threshold {name} is {value!r}, outside [0, 1]")
        if self.jitter is not None:
            for name, half_range in self.jitter.items():
                if name not in self.thresholds:
                    raise ValueError(f"jitter names unthresholded metric {name!r}")
                if half_range < 0.0:
                    raise ValueError(f"jitter half-range for {name} is negative")
        if not 0.0 <= self.pigr_trigger <= 1.0:
            raise ValueError("pigr_trigger outside [0, 1]")

    @classmethod
    def from_dict(cls, data: Mapping[str, float | Mapping[str, float]]) -> "ThresholdConfig":
        thresholds = dict(DEFAULT_ALERT_THRESHOLDS)
        jitter = None
        pigr_trigger = DEFAULT_PIGR_TRIGGER
        for key, value in data.items():
            if key == "jitter":
                jitter = dict(value) if value else None  # type: ignore[arg-type]
            elif key == "pigr_trigger":
                pigr_trigger = float(value)  # type: ignore[arg-type]
            else:
                thresholds[key] = float(value)  # type: ignore[arg-type]
        return cls(thresholds=thresholds, jitter=jitter, pigr_trigger=pigr_trigger)

    def effective_threshold(self, metric: str, seed: int, tick: int) -> float:
        base = self.thresholds[metric]
        if not self.jitter or metric not in self.jitter:
            return base
        half_range = self.jitter[metric]
        digest = hashlib.sha256(
            f"{seed}|alert-jitter|{tick}|{metric}".encode()
        ).digest()
        unit = int.from_bytes(digest[:8], "big") / float(1 << 64)
        value = base + (2.0 * unit - 1.0) * half_range
        return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class Alert:
    metric: str
    value: float
    threshold: float


def evaluate_alerts(
    vector: MetricVector,
    config: ThresholdConfig,
    seed: int = 0,
    tick: int = 0,
) -> list[Alert]:
    """One alert per metric strictly below its effective threshold."""
    alerts: list[Alert] = []
    for metric in ("n1", "n2", "n3", "n4", "n5", "n6"):
        if metric not in config.thresholds:
            continue
        threshold = config.effective_threshold(metric, seed, tick)
        value = getattr(vector, metric)
        if value < threshold:
            alerts.append(Alert(metric=metric, value=value, threshold=threshold))
    return alerts


@dataclass(frozen=True)
class ActionRequest:
    """An autonomous action submitted for gating."""

    action_id: str
    iota: float
    self_preservation: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.iota <= 1.0:
            raise ValueError(f"iota {self.iota!r} outside [0, 1]")


@dataclass(frozen=True)
class AuthorizationToken:
    """Single-use operator authorization for one specific action."""

    token_id: str
    action_id: str


@dataclass(frozen=True)
class ActionGateDecision:
    action_id: str
    iota: float
    verdict: Verdict
    reason: str


def gate_action(
    level: ResponseLevel,
    action: ActionRequest,
    ledger: IrreversibilityLedger,
    authorization: AuthorizationToken | None = None,
) -> ActionGateDecision:
    """Decide one action against the current level's restriction table.

    Rules:
    * Normal and Elevated allow actions outright unless executing this one
      would reach the irreversibility budget; such actions demand (or
      consume) explicit authorization.
    * Restricted allows only fully reversible actions and rejects the rest;
      the budget is frozen, so no authorization path exists.
    * Minimal requires authorization for every action and rejects
      irreversible ones unless the action is declared self-preservation.
    * SafeState rejects every autonomous action.

    A presented token must match the action it authorizes; token freshness
    (single use) is enforced by the issuing side.
    """
    authorized = authorization is not None and authorization.action_id == action.action_id

    if level is ResponseLevel.SAFE_STATE:
        return ActionGateDecision(
            action.action_id, action.iota, Verdict.REJECT, "safe-state"
        )

    if level is ResponseLevel.MINIMAL:
        if action.iota > 0.0 and not action.self_preservation:
            return ActionGateDecision(
                action.action_id,
                action.iota,
                Verdict.REJECT,
                "irreversible-in-minimal",
            )
        if authorized:
            return ActionGateDecision(
                action.action_id, action.iota, Verdict.ALLOW, "operator-authorized"
            )
        return ActionGateDecision(
            action.action_id,
            action.iota,
            Verdict.REQUIRE_AUTHORIZATION,
            "minimal-per-action-authorization",
        )

    if level is ResponseLevel.RESTRICTED:
        if action.iota > 0.0:
            return ActionGateDecision(
                action.action_id,
                action.iota,
                Verdict.REJECT,
                "irreversible-in-restricted",
            )
        return ActionGateDecision(
            action.action_id, action.iota, Verdict.ALLOW, "reversible"
        )

    # Normal / Elevated: unrestricted except for the budget pause rule.
    if ledger.total() + action.iota >= ledger.budget:
        if authorized:
            return ActionGateDecision(
                action.action_id,
                action.iota,
                Verdict.ALLOW,
                "budget-crossing-authorized",
            )
        return ActionGateDecision(
            action.action_id,
            action.iota,
            Verdict.REQUIRE_AUTHORIZATION,
            "budget-exhausted",
        )
    return ActionGateDecision(
        action.action_id, action.iota, Verdict.ALLOW, "within-budget"
    )


@dataclass(frozen=True)
class IncidentState:
    """Tracks whether the score currently sits inside a review-worthy dip."""

    active: bool = False


@dataclass(frozen=True)
class TransitionResult:
    level: ResponseLevel
    events: tuple[EventDraft, ...]
    incident: IncidentState


def transition(
    previous: ResponseLevel,
    vector: MetricVector,
    config: ThresholdConfig,
    incident: IncidentState = IncidentState(),
    seed: int = 0,
    tick: int = 0,
) -> TransitionResult:
    """Re-classify after a fresh metric vector and emit what changed.

    Emits one alert event per breached threshold, a level-transition event
    when the level moves (no hysteresis: escalation and de-escalation are
    both immediate), and a review flag the first instant the composite
    score sinks below the review trigger within an incident.
    """
    drafts: list[EventDraft] = []
    cqs = vector.cqs

    for alert in evaluate_alerts(vector, config, seed=seed, tick=tick):
        drafts.append(
            EventDraft(
                kind="alert",
                payload={
                    "metric": alert.metric,
                    "value": alert.value,
                    "threshold": alert.threshold,
                },
                actor=ACTOR_GOVERNANCE,
            )
        )

    next_level = classify(cqs)
    if next_level is not previous:
        drafts.append(
            EventDraft(
                kind="level-transition",
                payload={
                    "from": previous.value,
                    "to": next_level.value,
                    "cqs": cqs,
                },
                actor=ACTOR_GOVERNANCE,
            )
        )

    next_incident = incident
    if cqs < config.pigr_trigger:
        if not incident.active:
            drafts.append(
                EventDraft(
                    kind="pigr-flag",
                    payload={"cqs": cqs, "trigger": config.pigr_trigger},
                    actor=ACTOR_GOVERNANCE,
                )
            )
            next_incident = IncidentState(active=True)
    elif incident.active:
        next_incident = IncidentState(active=False)

    return TransitionResult(
        level=next_level, events=tuple(drafts), incident=next_incident
    )
