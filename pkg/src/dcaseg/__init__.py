"""Deterministic Dendritic Cell Algorithm with segmented (ABS/TBS) analysis."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DEFAULT_WEIGHTS,
    AntigenEvent,
    ConfigError,
    DataError,
    DCAError,
    OutputSignals,
    SignalInstance,
    StreamOrderError,
    WeightMatrix,
    transform_signals,
    validate_weights,
)
from .engine import DendriticCell, Engine, PopulationConfig, ProcessedRecord, init_population, run_stream  # noqa: E402
from .segmentation import (  # noqa: E402
    KAlphaScore,
    Segment,
    SegmenterConfig,
    SegmentReport,
    analyze,
    compute_k_alpha,
    segment_abs,
    segment_tbs,
)
