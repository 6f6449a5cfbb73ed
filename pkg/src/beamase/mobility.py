"""Boundary-crossing intensities, beam misalignment and time overhead."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .config import BeamSetting, NetworkConfig

MISALIGNMENT_WARN = 0.99


@dataclass(frozen=True)
class MobilityProfile:
    mu_s_cell: float  # handovers per metre
    mu_s_beam: float  # beam reselections per metre
    mu_t_beam: float  # beam reselections per second
    mu_b_eff: float  # SSB-limited reselections per second
    mu_cell: float  # handovers per second
    p_bm: float
    overhead: float  # fraction of time, not clamped


def handover_intensity(cfg: NetworkConfig) -> tuple[float, float]:
    """Cell-boundary crossings per metre and per second along a straight path."""
    linear = 4.0 * math.sqrt(cfg.lam) / math.pi
    return linear, linear * cfg.speed


def beam_reselection_intensity(cfg: NetworkConfig, beams: BeamSetting) -> tuple[float, float]:
    """Intra-cell beam-boundary crossings per metre and per second."""
    linear = 2**beams.n * math.sqrt(cfg.lam) / math.pi
    return linear, linear * cfg.speed


def misalignment_probability(cfg: NetworkConfig, beams: BeamSetting) -> float:
    """Probability that the MT left its reference beam since the last SSB."""
    mu_s_beam, _ = beam_reselection_intensity(cfg, beams)
    p = -math.expm1(-cfg.speed * cfg.ssb_period * mu_s_beam)
    if p > MISALIGNMENT_WARN:
        warnings.warn(f"beam misalignment probability {p:.4f} is close to 1", stacklevel=2)
    return p


def capped_rate(mu_t: float, ssb_period: float) -> float:
    """``1 / max(tau, 1/mu_t)``; zero when no reselections happen at all."""
    if mu_t <= 0:
        return 0.0
    return 1.0 / max(ssb_period, 1.0 / mu_t)


def effective_reselection_rate(cfg: NetworkConfig, beams: BeamSetting) -> float:
    _, mu_t = beam_reselection_intensity(cfg, beams)
    return capped_rate(mu_t, cfg.ssb_period)


def overhead_fraction(cfg: NetworkConfig, beams: BeamSetting) -> float:
    """Average fraction of time spent on beam alignment and cell handovers.

    May exceed 1; the clamp happens when the effective ASE is formed.
    """
    _, mu_c = handover_intensity(cfg)
    return effective_reselection_rate(cfg, beams) * cfg.overhead_beam + mu_c * cfg.overhead_cell


def mobility_profile(cfg: NetworkConfig, beams: BeamSetting) -> MobilityProfile:
    mu_s_cell, mu_cell = handover_intensity(cfg)
    mu_s_beam, mu_t_beam = beam_reselection_intensity(cfg, beams)
    return MobilityProfile(
        mu_s_cell=mu_s_cell,
        mu_s_beam=mu_s_beam,
        mu_t_beam=mu_t_beam,
        mu_b_eff=effective_reselection_rate(cfg, beams),
        mu_cell=mu_cell,
        p_bm=misalignment_probability(cfg, beams),
        overhead=overhead_fraction(cfg, beams),
    )
