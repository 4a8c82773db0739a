"""Secure aggregation of several linear combinations with a hidden demand.

Implements the single-combination scheme, the multi-combination scheme
built on symmetric private computation, and the repetition baseline, inside
a deterministic dropout simulator with exact rate accounting and
verifiers for decodability, input security and demand privacy.
"""

from .algebra import FieldConfig, FieldElement, Polynomial
from .harness import converse_check, rate_sweep, run_protocol, sweep
from .kernels import BACKEND
from .model import (
    DemandMatrix,
    DropoutSchedule,
    ProblemParams,
    RateReport,
    Transcript,
    compute_rates,
    validate_demand,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DemandMatrix",
    "DropoutSchedule",
    "FieldConfig",
    "FieldElement",
    "Polynomial",
    "ProblemParams",
    "RateReport",
    "Transcript",
    "compute_rates",
    "converse_check",
    "rate_sweep",
    "run_protocol",
    "sweep",
    "validate_demand",
]
