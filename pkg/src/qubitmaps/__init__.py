"""Exact reduced dynamics of a qubit coupled to one- and two-qubit environments."""
from .kernels import BACKEND
from .two_qubit import (BlockParams, TwoQubitParams, derive_block_params, makhlin_analysis,
                        max_concurrence_search, propagator)
from .dynamical_map import (Family, classify, invertibility_analysis, map_at, map_series,
                            oracle_map_at, partial_components)
from .diagnostics import divisibility_report, interweave, witness_series
from .master_equations import (EffectiveTLSetup, fourier_decompose, generator_tl,
                               lindblad_form, nz_kernel_eval, nz_kernel_time)
from .three_qubit import ThreeQubitParams, post_switch_map, pre_switch_map, propagator_pieces

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BlockParams", "TwoQubitParams", "derive_block_params", "makhlin_analysis",
    "max_concurrence_search", "propagator", "Family", "classify", "invertibility_analysis",
    "map_at", "map_series", "oracle_map_at", "partial_components", "divisibility_report",
    "interweave", "witness_series", "EffectiveTLSetup", "fourier_decompose", "generator_tl",
    "lindblad_form", "nz_kernel_eval", "nz_kernel_time", "ThreeQubitParams",
    "post_switch_map", "pre_switch_map", "propagator_pieces",
]
