"""Design-space exploration and template-based compilation of analog compute-in-memory macros."""

from __future__ import annotations

from .distill import FilterSpec, apply_filter, parse_filter
from .errors import (
    AcimError,
    CheckFailedError,
    ConfigurationError,
    EmptySpaceError,
    FeasibilityError,
    LibraryError,
    ParseError,
    RoutingError,
    ValidationError,
)
from .explorer import (
    ParetoEntry,
    ParetoSet,
    SearchBounds,
    brute_force_pareto,
    crowding_distance,
    dominates,
    enumerate_feasible,
    is_feasible,
    non_dominated_sort,
)
from .model import (
    DesignPoint,
    PerformanceVector,
    adc_energy,
    analog_nonideality_variance,
    area_per_bit,
    energy_per_op,
    evaluate,
    input_quantization_variance,
    snr_simplified_db,
    snr_total_db,
    sqnr_output_db,
    throughput,
)
from .montecarlo import monte_carlo_snr
from .netlist import emit_netlist, erc_check, generate_column, generate_macro, load_cell_library, parse_netlist, sar_grouping
from .nsga2 import GaParams, nsga2_explore
from .profile import TechnologyProfile, default_profile, load_profile

__version__ = "0.1.0"

__all__ = [
    "AcimError", "CheckFailedError", "ConfigurationError", "DesignPoint", "EmptySpaceError",
    "FeasibilityError", "FilterSpec", "GaParams", "LibraryError", "ParetoEntry", "ParetoSet",
    "ParseError", "PerformanceVector", "RoutingError", "SearchBounds", "TechnologyProfile",
    "ValidationError", "adc_energy", "analog_nonideality_variance", "apply_filter", "area_per_bit",
    "brute_force_pareto", "crowding_distance", "default_profile", "dominates", "emit_netlist",
    "energy_per_op", "enumerate_feasible", "erc_check", "evaluate", "generate_column",
    "generate_macro", "input_quantization_variance", "is_feasible", "load_cell_library",
    "load_profile", "monte_carlo_snr", "non_dominated_sort", "nsga2_explore", "parse_filter",
    "parse_netlist", "sar_grouping", "snr_simplified_db", "snr_total_db", "sqnr_output_db",
    "throughput",
]
