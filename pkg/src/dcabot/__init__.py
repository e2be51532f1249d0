"""Dendritic cell algorithm for single-host bot detection.

Pipeline: trace -> Dataset -> SignalSamples -> DC population -> presentations
-> MCAV/MAC report.
"""

from dcabot.analysis import (
    AnalysisReport,
    ProcessScore,
    aggregate_runs,
    classify,
    compute_mac,
    compute_mcav,
)
from dcabot.engine import (
    DendriticCell,
    Population,
    PopulationConfig,
    PresentationRecord,
    RunResult,
    WeightMatrix,
    fuse_signals,
    get_preset,
    run,
    step,
)
from dcabot.events import (
    AntigenEvent,
    Dataset,
    EventRecord,
    build_dataset,
    merge_sorted,
    parse_trace,
)
from dcabot.signals import (
    NormalizationConfig,
    SignalSample,
    compute_danger,
    compute_pamp,
    compute_safe,
    extract_signals,
)
from dcabot.stats import mann_whitney_u, wilcoxon_signed_rank

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "AntigenEvent",
    "Dataset",
    "DendriticCell",
    "EventRecord",
    "NormalizationConfig",
    "Population",
    "PopulationConfig",
    "PresentationRecord",
    "ProcessScore",
    "RunResult",
    "SignalSample",
    "WeightMatrix",
    "aggregate_runs",
    "build_dataset",
    "classify",
    "compute_danger",
    "compute_mac",
    "compute_mcav",
    "compute_pamp",
    "compute_safe",
    "extract_signals",
    "fuse_signals",
    "get_preset",
    "mann_whitney_u",
    "merge_sorted",
    "parse_trace",
    "run",
    "step",
    "wilcoxon_signed_rank",
]
