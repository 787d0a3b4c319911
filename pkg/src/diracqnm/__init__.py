"""Resonances of massless spin-1/2 waves outside charged de Sitter black holes.

The package computes the quasi-normal spectrum three independent ways —
barrier-top asymptotic lattices, Wronskian zero-finding for the first-order
scattering system, and complex-scaled spectral collocation — and validates
the spectrum against direct time evolution of the radial Dirac equation.
"""

from __future__ import annotations

from .barrier import (
    DEFAULT_F2_FORM,
    BarrierData,
    Pseudopole,
    PseudopoleCoeffs,
    barrier_data,
    lattice,
    pseudopole,
)
from .contours import BentLine, ContourTransport, SmoothRotation
from .evolution import (
    EnergyTrace,
    Grid1D,
    RingdownFit,
    RingdownMode,
    SpinorField,
    cutoff_weights,
    evolve,
    expansion_residual,
    init_bump,
    load_snapshot,
    make_grid,
    ringdown_fit,
    save_snapshot,
    step,
)
from .geometry import (
    AdmissibilityError,
    BlackHoleParams,
    ContourPinchError,
    HorizonData,
    PotentialProfile,
    TortoiseMap,
    alpha_decay_amplitudes,
    barrier_radius,
    complex_radius,
    find_horizons,
    flow_profile,
    metric_function,
    potential_derivatives,
)
from .probe import (
    GreenKernel,
    ZonePoint,
    ZoneScanReport,
    cutoff_h1_norm,
    cutoff_norm,
    green_kernel,
    window_cutoff,
    zone_scan,
)
from .solver import (
    ContinuationError,
    ContourSpec,
    JostSolution,
    MatchResult,
    ModeOperator,
    RefineResult,
    ResonanceEntry,
    ResonanceList,
    ScaledResult,
    UnionReport,
    count_zeros,
    default_contour,
    dirac_jost,
    k_guess_from_value,
    match_multisets,
    mode_operator,
    refine,
    scaled_spectrum,
    string_resonances,
    strip_depth,
    verify_union,
    wronskian,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "BarrierData",
    "BentLine",
    "BlackHoleParams",
    "ContinuationError",
    "ContourPinchError",
    "ContourSpec",
    "ContourTransport",
    "DEFAULT_F2_FORM",
    "EnergyTrace",
    "GreenKernel",
    "Grid1D",
    "HorizonData",
    "JostSolution",
    "MatchResult",
    "ModeOperator",
    "PotentialProfile",
    "Pseudopole",
    "PseudopoleCoeffs",
    "RefineResult",
    "ResonanceEntry",
    "ResonanceList",
    "RingdownFit",
    "RingdownMode",
    "ScaledResult",
    "SmoothRotation",
    "SpinorField",
    "TortoiseMap",
    "UnionReport",
    "ZonePoint",
    "ZoneScanReport",
    "alpha_decay_amplitudes",
    "barrier_data",
    "barrier_radius",
    "complex_radius",
    "count_zeros",
    "cutoff_h1_norm",
    "cutoff_norm",
    "cutoff_weights",
    "default_contour",
    "dirac_jost",
    "evolve",
    "expansion_residual",
    "find_horizons",
    "flow_profile",
    "green_kernel",
    "init_bump",
    "k_guess_from_value",
    "lattice",
    "load_snapshot",
    "make_grid",
    "match_multisets",
    "metric_function",
    "mode_operator",
    "potential_derivatives",
    "pseudopole",
    "refine",
    "ringdown_fit",
    "save_snapshot",
    "scaled_spectrum",
    "step",
    "string_resonances",
    "strip_depth",
    "verify_union",
    "window_cutoff",
    "wronskian",
    "zone_scan",
]
