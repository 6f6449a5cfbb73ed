"""Overhead-adjusted area spectral efficiency of beam-managed cellular downlinks."""

__version__ = "0.1.0"

from .ase import AseResult, Optimum, SweepGrid, SweepRow, effective_ase, optimal_n, sweep
from .config import (
    BANDS,
    FR1,
    FR2,
    BandPreset,
    BeamSetting,
    ConfigError,
    DerivedConstants,
    NetworkConfig,
    beam_setting,
    config_from_deployment,
)
from .mobility import (
    MobilityProfile,
    beam_reselection_intensity,
    handover_intensity,
    misalignment_probability,
    mobility_profile,
    overhead_fraction,
)
from .montecarlo import (
    CrossingCounts,
    McEstimate,
    PppRealization,
    count_crossings,
    drop_ppp,
    simulate_rate,
    simulate_sinr,
    simulate_success_prob,
)
from .quadrature import QuadratureError, QuadratureSpec
from .sinr import conditional_success, ergodic_rate, success_curve, success_probability

__all__ = [
    "AseResult", "BANDS", "BandPreset", "BeamSetting", "ConfigError", "CrossingCounts",
    "DerivedConstants", "FR1", "FR2", "McEstimate", "MobilityProfile", "NetworkConfig",
    "Optimum", "PppRealization", "QuadratureError", "QuadratureSpec", "SweepGrid", "SweepRow",
    "beam_reselection_intensity", "beam_setting", "conditional_success", "config_from_deployment",
    "count_crossings", "drop_ppp", "effective_ase", "ergodic_rate", "handover_intensity",
    "misalignment_probability", "mobility_profile", "optimal_n", "overhead_fraction",
    "simulate_rate", "simulate_sinr", "simulate_success_prob", "success_curve",
    "success_probability", "sweep",
]
