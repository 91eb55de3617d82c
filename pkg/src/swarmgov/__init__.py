"""Runtime governance engine for operator-supervised agent formations."""

from swarmgov.metrics import (
    AssessmentConfidence,
    BehaviorVector,
    InterpretationRecord,
    IrreversibilityLedger,
    LedgerEntry,
    MetricVector,
    NormalizationConfig,
    RawMetrics,
    SwarmSnapshot,
    compute_cir,
    compute_cqs,
    compute_edi,
    compute_ias,
    normalize,
    semantic_distance,
)
from swarmgov.response import ResponseLevel, ThresholdConfig, classify, gate_action

__version__ = "0.1.0"

__all__ = [
    "AssessmentConfidence",
    "BehaviorVector",
    "InterpretationRecord",
    "IrreversibilityLedger",
    "LedgerEntry",
    "MetricVector",
    "NormalizationConfig",
    "RawMetrics",
    "ResponseLevel",
    "SwarmSnapshot",
    "ThresholdConfig",
    "classify",
    "compute_cir",
    "compute_cqs",
    "compute_edi",
    "compute_ias",
    "gate_action",
    "normalize",
    "semantic_distance",
    "__version__",
]
