"""Numerical Morse engine on the built-in catalog of models."""

from .flow import (
    CriticalPoint,
    FlowConfig,
    FlowOutcome,
    basin_radius,
    find_critical_points,
    flow_for_time,
    integrate_flow,
)
from .links import (
    Connector,
    FiberReport,
    SignedCount,
    build_morse_complex,
    count_connecting,
    fiber_check,
    link_analysis,
    morse_differential,
)
from .models import MorseModel, get_model, product_model, sphere2_height, torus_n_cosine

__all__ = [
    "Connector",
    "CriticalPoint",
    "FiberReport",
    "FlowConfig",
    "FlowOutcome",
    "MorseModel",
    "SignedCount",
    "basin_radius",
    "build_morse_complex",
    "count_connecting",
    "fiber_check",
    "find_critical_points",
    "flow_for_time",
    "get_model",
    "integrate_flow",
    "link_analysis",
    "morse_differential",
    "product_model",
    "sphere2_height",
    "torus_n_cosine",
]
