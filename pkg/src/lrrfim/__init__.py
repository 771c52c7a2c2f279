"""One-dimensional long-range random-field Ising chain.

Exact and Monte Carlo sampling of window Gibbs measures, the run/triangle/
contour geometry of configurations, and calculators for the explicit
run-length bounds.
"""

from .events import EventSpec, evaluate_event, event_mask
from .exact import ExactMeasure, event_probability, log_partition
from .exceptions import (
    CoverageError,
    DivergentSeriesError,
    DomainError,
    EnumerationSizeError,
    InsufficientSamplesError,
    InvalidFamilyError,
    RegimeError,
)
from .mcmc import Chain, ChainConfig, EventEstimate, estimate_event, estimate_events
from .model import (
    CouplingTable,
    DisorderField,
    ModelParams,
    SpinWindow,
    Window,
    flip_delta,
    sample_disorder,
    total_energy,
)

__version__ = "0.1.0"

__all__ = [
    "Chain", "ChainConfig", "CouplingTable", "CoverageError", "DisorderField",
    "DivergentSeriesError", "DomainError", "EnumerationSizeError", "EventEstimate",
    "EventSpec", "ExactMeasure", "InsufficientSamplesError", "InvalidFamilyError",
    "ModelParams", "RegimeError", "SpinWindow", "Window", "estimate_event",
    "estimate_events", "evaluate_event", "event_mask", "event_probability",
    "flip_delta", "log_partition", "sample_disorder", "total_energy", "__version__",
]
