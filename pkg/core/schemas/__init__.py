from .data_models import (
    ChannelSpec,
    CodeBlock,
    DelayThresholdReport,
    FadingModel,
    GainReport,
    HarqScheme,
    OptimizationMode,
    OptimizationProblem,
    OutageEstimate,
    OutageMethod,
    OutageVector,
    RoundGeometry,
    SimConfig,
    SimStats,
    SweepSpec,
    ThroughputReport,
    db_to_linear,
)

__all__ = [
    "ChannelSpec",
    "CodeBlock",
    "DelayThresholdReport",
    "FadingModel",
    "GainReport",
    "HarqScheme",
    "OptimizationMode",
    "OptimizationProblem",
    "OutageEstimate",
    "OutageMethod",
    "OutageVector",
    "RoundGeometry",
    "SimConfig",
    "SimStats",
    "SweepSpec",
    "ThroughputReport",
    "db_to_linear",
]
