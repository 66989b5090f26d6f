"""Layered state, mapping synthesis and gain metrics"""

from hierarchy.core import (
    TEMPERATURE_LADDER,
    LayeredState,
    MappingParams,
    MappingSet,
    Projection,
    amax_gain,
    amax_gains,
    composite_mapping,
    compute_mappings,
    fixed_mappings,
    implied_tau_ratios,
    is_doubly_stochastic,
    layer_temperature,
    logistic,
    normalize_state,
    project_doubly_stochastic,
    propagate_error,
    propagate_hierarchy,
    propagate_layer,
    residual_chain,
)

__all__ = [
    "TEMPERATURE_LADDER",
    "LayeredState",
    "MappingParams",
    "MappingSet",
    "Projection",
    "amax_gain",
    "amax_gains",
    "composite_mapping",
    "compute_mappings",
    "fixed_mappings",
    "implied_tau_ratios",
    "is_doubly_stochastic",
    "layer_temperature",
    "logistic",
    "normalize_state",
    "project_doubly_stochastic",
    "propagate_error",
    "propagate_hierarchy",
    "propagate_layer",
    "residual_chain",
]
