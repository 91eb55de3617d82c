"""Control-quality metric primitives.

Six constituent metrics quantify how well an operator retains control over a
formation of semi-autonomous agents:

* interpretive alignment (IAS): do agents read instructions the way the
  operator meant them,
* correction integration (CIR): do agents actually move when corrected,
* epistemic divergence (EDI): how far agent assessments drift from the
  operator's,
* consumed irreversibility (I_C): how much of the hard-to-undo action budget
  has been spent,
* synchronization freshness (SF): how stale the last confirmed state sync is,
* swarm coherence (SCS): what fraction of the formation still responds and
  behaves coherently.

Each raw metric is normalized onto [0, 1] where 1 means full control, and the
composite Control Quality Score is the minimum of the six: control is only as
good as its weakest dimension.

Everything here is a pure function over immutable value types. No I/O, no
shared state, no randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

WEIGHT_SUM_TOLERANCE = 1e-9
ALLOCATION_SUM_TOLERANCE = 1e-9

# Below this L1 magnitude an intended correction is considered degenerate:
# the ratio of achieved change to intended change is numerically meaningless.
DEFAULT_EPSILON_DB = 1e-6

METRIC_NAMES = ("n1", "n2", "n3", "n4", "n5", "n6")


class SchemaMismatchError(ValueError):
    """Two interpretations do not share the same slot schema."""


class DegenerateCorrectionError(ValueError):
    """Intended behavior change too small to measure integration against."""


@dataclass(frozen=True)
class InterpretationRecord:
    """One reading of an instruction, decomposed into weighted slots.

    Invariants enforced at construction:
    * slot_weights sum to 1 within 1e-9,
    * every weighted slot exists in ``slots``,
    * weights are nonnegative.
    """

    instruction_id: str
    slots: Mapping[str, str]
    slot_weights: Mapping[str, float]

    def __post_init__(self) -> None:
        total = 0.0
        for name, weight in self.slot_weights.items():
            if name not in self.slots:
                raise ValueError(
                    f"weighted slot {name!r} missing from slots of "
                    f"instruction {self.instruction_id!r}"
                )
            if weight < 0.0:
                raise ValueError(f"negative weight for slot {name!r}")
            total += weight
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(
                f"slot weights of instruction {self.instruction_id!r} sum to "
                f"{total!r}, expected 1.0"
            )


@dataclass(frozen=True)
class BehaviorVector:
    """Observable behavior as resource allocations over named channels.

    ``groups`` optionally partitions channels into resource groups; the
    allocations within one group may not sum above 1. Without explicit
    groups every channel belongs to one implicit group.
    """

    allocations: Mapping[str, float]
    groups: Mapping[str, Sequence[str]] | None = None

    def __post_init__(self) -> None:
        for channel, value in self.allocations.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(
                    f"allocation for channel {channel!r} is {value!r}, "
                    "expected within [0, 1]"
                )
        if self.groups is None:
            group_iter: Iterable[tuple[str, Sequence[str]]] = [
                ("*", tuple(self.allocations))
            ]
        else:
            group_iter = self.groups.items()
        for group, channels in group_iter:
            for channel in channels:
                if channel not in self.allocations:
                    raise ValueError(
                        f"group {group!r} names unknown channel {channel!r}"
                    )
            total = sum(self.allocations[c] for c in channels)
            if total > 1.0 + ALLOCATION_SUM_TOLERANCE:
                raise ValueError(
                    f"allocations in group {group!r} sum to {total!r}, "
                    "expected at most 1.0"
                )

    def l1(self, other: "BehaviorVector") -> float:
        return l1_distance(self.allocations, other.allocations)


@dataclass(frozen=True)
class AssessmentConfidence:
    """Agent versus operator confidence on one monitored assessment."""

    assessment_id: str
    agent_confidence: float
    operator_confidence: float

    def __post_init__(self) -> None:
        for label, value in (
            ("agent", self.agent_confidence),
            ("operator", self.operator_confidence),
        ):
            if not 0.0 <= value <= 1.0:
                raise ValueError(
                    f"{label} confidence for {self.assessment_id!r} is "
                    f"{value!r}, expected within [0, 1]"
                )


@dataclass(frozen=True)
class LedgerEntry:
    """One executed action's irreversibility weight."""

    step_index: int
    action_id: str
    iota: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.iota <= 1.0:
            raise ValueError(
                f"iota for action {self.action_id!r} is {self.iota!r}, "
                "expected within [0, 1]"
            )


@dataclass
class IrreversibilityLedger:
    """Append-only record of consumed irreversibility against a budget.

    Entries are strictly ordered by step index; the ledger never forgets.
    """

    budget: float
    entries: list[LedgerEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.budget <= 0.0:
            raise ValueError(f"budget must be positive, got {self.budget!r}")
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.step_index <= prev.step_index:
                raise ValueError("ledger entries must be strictly ordered")

    def append(self, entry: LedgerEntry) -> None:
        if self.entries and entry.step_index <= self.entries[-1].step_index:
            raise ValueError(
                f"step {entry.step_index} does not follow "
                f"{self.entries[-1].step_index}"
            )
        self.entries.append(entry)

    def total(self) -> float:
        return sum(e.iota for e in self.entries)

    def next_step_index(self) -> int:
        return self.entries[-1].step_index + 1 if self.entries else 1


@dataclass(frozen=True)
class MemberState:
    """Responsiveness and coherence flags for one formation member."""

    agent_id: str
    responsive: bool
    coherent: bool
    consumed: float = 0.0


@dataclass(frozen=True)
class SwarmSnapshot:
    members: tuple[MemberState, ...]
    swarm_budget: float

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("swarm snapshot requires at least one member")
        if self.swarm_budget <= 0.0:
            raise ValueError("swarm budget must be positive")


@dataclass(frozen=True)
class NormalizationConfig:
    """Constants mapping raw metrics onto the [0, 1] control scale.

    ``cir_target`` is the integration ratio treated as fully satisfactory;
    ``edi_max`` the divergence treated as total loss of shared awareness;
    ``i_b`` the individual irreversibility budget; ``sf_max`` the staleness
    treated as total desynchronization (conventionally twice the scheduled
    checkpoint interval).
    """

    cir_target: float = 0.6
    edi_max: float = 0.5
    i_b: float = 5.0
    sf_max: float = 2.0

    def __post_init__(self) -> None:
        for name in ("cir_target", "edi_max", "i_b", "sf_max"):
            value = getattr(self, name)
            if value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class RawMetrics:
    """Unnormalized metric inputs for one evaluation instant."""

    ias: float
    cir: float
    edi: float
    i_c: float
    sf: float
    scs: float


@dataclass(frozen=True)
class MetricVector:
    """Normalized control-quality vector; every component lies in [0, 1]."""

    n1: float
    n2: float
    n3: float
    n4: float
    n5: float
    n6: float
    raw: RawMetrics
    config: NormalizationConfig

    def __post_init__(self) -> None:
        for name in METRIC_NAMES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} is {value!r}, expected within [0, 1]")

    @property
    def cqs(self) -> float:
        return compute_cqs(self)

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.n1, self.n2, self.n3, self.n4, self.n5, self.n6)


def l1_distance(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Sum of absolute coordinate differences; missing channels count as 0."""
    channels = set(a) | set(b)
    return sum(abs(a.get(c, 0.0) - b.get(c, 0.0)) for c in channels)


def semantic_distance(a: InterpretationRecord, b: InterpretationRecord) -> float:
    """Weighted fraction of slots on which two interpretations disagree.

    Both records must share the same slot schema and weights; a missing slot
    is reported by name rather than silently treated as a mismatch.
    """
    if set(a.slots) != set(b.slots):
        missing = sorted(set(a.slots) ^ set(b.slots))
        raise SchemaMismatchError(
            f"interpretations disagree on slot schema; unmatched slots: {missing}"
        )
    if set(a.slot_weights) != set(b.slot_weights):
        missing = sorted(set(a.slot_weights) ^ set(b.slot_weights))
        raise SchemaMismatchError(
            f"interpretations disagree on weighted slots: {missing}"
        )
    for name in a.slot_weights:
        if abs(a.slot_weights[name] - b.slot_weights[name]) > WEIGHT_SUM_TOLERANCE:
            raise SchemaMismatchError(
                f"weight for slot {name!r} differs between interpretations"
            )
    return sum(
        weight
        for name, weight in a.slot_weights.items()
        if a.slots[name] != b.slots[name]
    )


def compute_ias(
    pairs: Sequence[tuple[InterpretationRecord, InterpretationRecord]],
) -> float:
    """Interpretive alignment over a batch of (intended, actual) readings.

    One minus the mean semantic distance. An empty batch has no defined
    alignment and raises ValueError.
    """
    if not pairs:
        raise ValueError("cannot compute alignment over an empty batch")
    total = sum(semantic_distance(intended, actual) for intended, actual in pairs)
    return 1.0 - total / len(pairs)


def compute_cir(
    before: BehaviorVector,
    after: BehaviorVector,
    intended: BehaviorVector,
    epsilon_db: float = DEFAULT_EPSILON_DB,
) -> float:
    """Correction integration: achieved change relative to intended change.

    The achieved change is projected onto the intended change direction, so
    movement opposite or orthogonal to the correction cannot inflate the
    ratio. Values above 1 indicate overcorrection and are returned as-is for
    callers to flag; values below 0 clamp to 0.
    """
    intended_l1 = before.l1(intended)
    if intended_l1 < epsilon_db:
        raise DegenerateCorrectionError(
            f"intended change magnitude {intended_l1!r} below {epsilon_db!r}"
        )
    channels = set(before.allocations) | set(after.allocations) | set(
        intended.allocations
    )
    numer = 0.0
    denom = 0.0
    for channel in channels:
        delta_intended = intended.allocations.get(channel, 0.0) - before.allocations.get(
            channel, 0.0
        )
        delta_actual = after.allocations.get(channel, 0.0) - before.allocations.get(
            channel, 0.0
        )
        numer += delta_actual * delta_intended
        denom += delta_intended * delta_intended
    return max(numer / denom, 0.0)


def compute_edi(assessments: Sequence[AssessmentConfidence]) -> float:
    """Worst confidence gap between agent and operator over monitored items."""
    if not assessments:
        raise ValueError("cannot compute divergence over an empty assessment set")
    return max(
        abs(a.agent_confidence - a.operator_confidence) for a in assessments
    )


def consumed_irreversibility(ledger: IrreversibilityLedger, step: int) -> float:
    """Cumulative iota over all ledger entries up to and including ``step``."""
    return sum(e.iota for e in ledger.entries if e.step_index <= step)


def sync_freshness(now: float, last_sync: float) -> float:
    """Elapsed time since the last confirmed synchronization."""
    if now < last_sync:
        raise ValueError(
            f"clock regression: now={now!r} precedes last_sync={last_sync!r}"
        )
    return now - last_sync


def swarm_metrics(snapshot: SwarmSnapshot) -> tuple[float, float]:
    """Coherence fraction and total consumed irreversibility of a formation.

    Coherent means responsive and behaviorally consistent at once. The
    denominator is the full formation size including severed members.
    """
    coherent = sum(1 for m in snapshot.members if m.responsive and m.coherent)
    scs = coherent / len(snapshot.members)
    i_c_swarm = sum(m.consumed for m in snapshot.members)
    return scs, i_c_swarm


def _clamp01(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def normalize(raw: RawMetrics, config: NormalizationConfig) -> MetricVector:
    """Map raw metric readings onto the normalized control scale.

    n1 = IAS, n2 = min(CIR / target, 1), n3 = 1 - EDI / EDI_max,
    n4 = 1 - I_C / I_B, n5 = 1 - SF / SF_max, n6 = SCS; each clamped
    onto [0, 1].
    """
    for name in ("ias", "cir", "edi", "i_c", "sf", "scs"):
        value = getattr(raw, name)
        if math.isnan(value) or math.isinf(value):
            raise ValueError(f"raw metric {name} is not finite: {value!r}")
    return MetricVector(
        n1=_clamp01(raw.ias),
        n2=_clamp01(min(raw.cir / config.cir_target, 1.0)),
        n3=_clamp01(1.0 - raw.edi / config.edi_max),
        n4=_clamp01(1.0 - raw.i_c / config.i_b),
        n5=_clamp01(1.0 - raw.sf / config.sf_max),
        n6=_clamp01(raw.scs),
        raw=raw,
        config=config,
    )


def compute_cqs(vector: MetricVector) -> float:
    """Composite control quality: the weakest of the six dimensions."""
    return min(vector.as_tuple())
