"""Property checks, counterexamples and the known status tables."""

from .checks import (
    BOUND_CHAIN,
    Bound,
    PropertyReport,
    bound_slacks,
    check_axioms,
    check_bounds,
    check_concavity,
    check_monotonicity,
    check_multiplicativity,
    check_triangle,
    metric_value,
    sample_bounds,
    sample_property,
    trace_distance,
    unit_fidelity_witness,
)
from .core import (
    AXIOMS,
    EXACT_TOL,
    ORTHO_TOL,
    VIOLATION_MARGIN,
    Channel,
    ChannelKind,
    MetricFunctional,
    Property,
    SamplingOptions,
    Verdict,
    margins,
    sample_instances,
)
from .registry import RegistryResult, evaluate_registry, find, load_registry
from .search import WitnessStore, falsify
from .tables import (
    AXIOM_TABLE,
    CONCAVITY_TABLE,
    METRIC_TABLE,
    MONO_TABLE,
    MULT_TABLE,
    TABLES,
    CellResult,
    sample_triangle,
)
from .witness import Counterexample, witness_from_instance

__all__ = [
    "BOUND_CHAIN",
    "Bound",
    "PropertyReport",
    "bound_slacks",
    "check_axioms",
    "check_bounds",
    "check_concavity",
    "check_monotonicity",
    "check_multiplicativity",
    "check_triangle",
    "metric_value",
    "sample_bounds",
    "sample_property",
    "trace_distance",
    "unit_fidelity_witness",
    "AXIOMS",
    "EXACT_TOL",
    "ORTHO_TOL",
    "VIOLATION_MARGIN",
    "Channel",
    "ChannelKind",
    "MetricFunctional",
    "Property",
    "SamplingOptions",
    "Verdict",
    "margins",
    "sample_instances",
    "RegistryResult",
    "evaluate_registry",
    "find",
    "load_registry",
    "WitnessStore",
    "falsify",
    "AXIOM_TABLE",
    "CONCAVITY_TABLE",
    "METRIC_TABLE",
    "MONO_TABLE",
    "MULT_TABLE",
    "TABLES",
    "CellResult",
    "sample_triangle",
    "Counterexample",
    "witness_from_instance",
]
