"""Effective area spectral efficiency, the beam-count search and sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

from .config import BANDS, MAX_BEAM_EXPONENT, BandPreset, NetworkConfig, beam_setting
from .mobility import MobilityProfile, mobility_profile
from .quadrature import QuadratureError, QuadratureSpec
from .sinr import DEFAULT_QUAD, ergodic_rate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AseResult:
    n: int
    rate: float  # per the log base
    rate_error: float
    overhead: float
    effective_ase: float  # rate units per m^2
    p_bm: float
    mobility: MobilityProfile
    log_base: str = "nats"


def clamp_overhead(overhead: float) -> float:
    """Fraction of time left for data, ``max(0, 1 - overhead)``."""
    return max(0.0, 1.0 - overhead)


def effective_ase(cfg: NetworkConfig, beams, quad: QuadratureSpec = DEFAULT_QUAD,
                  log_base: str = "nats") -> AseResult:
    """``lam * R_n * max(0, 1 - T_o)`` for one beam setting."""
    profile = mobility_profile(cfg, beams)
    rate, err = ergodic_rate(cfg, beams, quad, log_base=log_base, p_bm=profile.p_bm, full_output=True)
    return AseResult(
        n=beams.n,
        rate=rate,
        rate_error=err,
        overhead=profile.overhead,
        effective_ase=cfg.lam * rate * clamp_overhead(profile.overhead),
        p_bm=profile.p_bm,
        mobility=profile,
        log_base=log_base,
    )


class Optimum(NamedTuple):
    n_star: int
    results: list
    degenerate: bool


def _check_range(n_min: int, n_max: int) -> None:
    if not 1 <= n_min <= n_max <= MAX_BEAM_EXPONENT:
        raise ValueError(f"need 1 <= n_min <= n_max <= {MAX_BEAM_EXPONENT}, got [{n_min}, {n_max}]")


def optimal_n(cfg: NetworkConfig, quad: QuadratureSpec = DEFAULT_QUAD, n_range=(1, 10),
              log_base: str = "nats") -> Optimum:
    """Exhaustive search over ``n_range`` (inclusive).

    Ties go to the smaller exponent. If every exponent has zero effective
    ASE the smallest one is returned and the optimum is flagged degenerate.
    """
    n_min, n_max = n_range
    _check_range(n_min, n_max)
    results = [effective_ase(cfg, beam_setting(n), quad, log_base) for n in range(n_min, n_max + 1)]
    return pick_optimum(results)


def pick_optimum(results) -> Optimum:
    best = results[0]
    for res in results[1:]:
        if res.effective_ase > best.effective_ase:
            best = res
    return Optimum(n_star=best.n, results=list(results), degenerate=best.effective_ase <= 0)


@dataclass(frozen=True)
class SweepGrid:
    band: str
    isds: tuple[float, ...]
    speeds_kmh: tuple[float, ...]
    n_min: int = 1
    n_max: int = 10
    overrides: dict = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        if not self.isds or not self.speeds_kmh:
            raise ValueError("sweep axes must be non-empty")
        _check_range(self.n_min, self.n_max)
        if self.band not in BANDS:
            raise ValueError(f"unknown band {self.band!r}; choose from {sorted(BANDS)}")

    @property
    def preset(self) -> BandPreset:
        return BANDS[self.band]

    @classmethod
    def from_preset(cls, band: str, n_min: int = 1, n_max: int = 10) -> SweepGrid:
        p = BANDS[band]
        return cls(band=band, isds=p.isds, speeds_kmh=p.speeds_kmh, n_min=n_min, n_max=n_max)

    def points(self):
        for isd in sorted(self.isds):
            for v in sorted(self.speeds_kmh):
                for n in range(self.n_min, self.n_max + 1):
                    yield isd, v, n


@dataclass(frozen=True)
class SweepRow:
    band: str
    isd: float
    speed_kmh: float
    n: int
    result: AseResult | None
    error: str | None = None


def _sweep_row(args) -> SweepRow:
    grid, isd, v, n, quad, log_base = args
    cfg = grid.preset.config(isd, v, **grid.overrides)
    try:
        res = effective_ase(cfg, beam_setting(n), quad, log_base)
    except QuadratureError as exc:
        log.warning("sweep point %s isd=%g v=%g n=%d failed: %s", grid.band, isd, v, n, exc)
        return SweepRow(grid.band, isd, v, n, None, str(exc))
    return SweepRow(grid.band, isd, v, n, res)


def sweep(grids, quad: QuadratureSpec = DEFAULT_QUAD, log_base: str = "nats",
          workers: int = 1) -> list[SweepRow]:
    """Evaluate every grid point; rows come back ordered by band, ISD, speed, n."""
    if isinstance(grids, SweepGrid):
        grids = [grids]
    jobs = [
        (g, isd, v, n, quad, log_base)
        for g in sorted(grids, key=lambda g: g.band)
        for isd, v, n in g.points()
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(job) for job in jobs]
    return sorted(rows, key=lambda r: (r.band, r.isd, r.speed_kmh, r.n))


def optima_by_speed(rows) -> dict:
    """``{(band, isd): {speed: n_star}}`` from sweep rows."""
    groups: dict = {}
    for row in rows:
        if row.result is not None:
            groups.setdefault((row.band, row.isd, row.speed_kmh), []).append(row.result)
    out: dict = {}
    for (band, isd, v), results in groups.items():
        out.setdefault((band, isd), {})[v] = pick_optimum(results).n_star
    return out
