"""Network parameters, beam settings and unit conversions.

Everything inside the package works in SI linear units. dB, dBm, GHz, km/h
and ms only appear in :func:`config_from_deployment` and the band presets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

SPEED_OF_LIGHT = 299_792_458.0  # m/s
MAX_BEAM_EXPONENT = 20

NOISE_CONVENTIONS = ("sigma2", "n0")


class ConfigError(ValueError):
    """Raised when a parameter set violates a physical invariant."""


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def kmh_to_ms(v_kmh: float) -> float:
    return v_kmh / 3.6


def isd_to_density(isd: float) -> float:
    """BS intensity for a mean inter-site distance ``isd = 2 / sqrt(pi * lam)``."""
    if not isd > 0 or not math.isfinite(isd):
        raise ConfigError(f"inter-site distance must be positive and finite, got {isd!r}")
    return 4.0 / (math.pi * isd * isd)


def density_to_isd(lam: float) -> float:
    return 2.0 / math.sqrt(math.pi * lam)


@dataclass(frozen=True)
class NetworkConfig:
    """Physical and deployment parameters, SI units throughout.

    ``los_radius == 0`` means every link is NLOS; ``alpha_los`` is then
    irrelevant and is forced equal to ``alpha_nlos``.
    """

    lam: float  # BS intensity, 1/m^2
    speed: float  # m/s
    ssb_period: float  # s
    tx_power: float  # W
    bandwidth: float  # Hz
    noise_density: float  # W/Hz
    carrier_freq: float  # Hz
    alpha_los: float
    alpha_nlos: float
    los_radius: float  # m
    overhead_beam: float  # s
    overhead_cell: float  # s
    sinr_cap: float  # linear
    noise_convention: str = "sigma2"

    def __post_init__(self) -> None:
        positive = {
            "lam": self.lam,
            "ssb_period": self.ssb_period,
            "tx_power": self.tx_power,
            "bandwidth": self.bandwidth,
            "noise_density": self.noise_density,
            "carrier_freq": self.carrier_freq,
            "sinr_cap": self.sinr_cap,
        }
        for name, value in positive.items():
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        nonneg = {
            "speed": self.speed,
            "los_radius": self.los_radius,
            "overhead_beam": self.overhead_beam,
            "overhead_cell": self.overhead_cell,
        }
        for name, value in nonneg.items():
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"{name} must be non-negative and finite, got {value!r}")
        if self.noise_convention not in NOISE_CONVENTIONS:
            raise ConfigError(
                f"noise_convention must be one of {NOISE_CONVENTIONS}, got {self.noise_convention!r}"
            )
        if self.los_radius == 0 and self.alpha_los != self.alpha_nlos:
            object.__setattr__(self, "alpha_los", self.alpha_nlos)
        if not self.alpha_los > 0:
            raise ConfigError(f"alpha_los must be positive, got {self.alpha_los!r}")
        if self.alpha_nlos < self.alpha_los:
            raise ConfigError(
                f"alpha_nlos ({self.alpha_nlos}) must not be smaller than alpha_los ({self.alpha_los})"
            )
        # interference from an infinite plane is finite only for a far-field exponent above 2
        if not self.alpha_nlos > 2:
            raise ConfigError(f"alpha_nlos must exceed 2 for finite interference, got {self.alpha_nlos}")
        if self.los_radius > 0 and not 1.8 <= self.alpha_los <= 2.5:
            warnings.warn(
                f"alpha_los={self.alpha_los} is outside the typical LOS range [1.8, 2.5]",
                stacklevel=3,
            )

    @property
    def isd(self) -> float:
        return density_to_isd(self.lam)

    def with_(self, **changes) -> NetworkConfig:
        """Copy with some fields replaced (validation re-runs)."""
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedConstants:
    path_const: float  # K = (c / (4 pi f_c))^2
    noise_power: float  # W

    @classmethod
    def from_config(cls, cfg: NetworkConfig) -> DerivedConstants:
        k = (SPEED_OF_LIGHT / (4.0 * math.pi * cfg.carrier_freq)) ** 2
        if cfg.noise_convention == "sigma2":
            noise = cfg.bandwidth * cfg.noise_density
        else:
            noise = cfg.noise_density
        return cls(path_const=k, noise_power=noise)


@dataclass(frozen=True)
class BeamSetting:
    """Two-level sectorized pattern with ``2**n`` beams."""

    n: int
    beamwidth: float
    gain_main: float
    gain_side: float

    @property
    def num_beams(self) -> int:
        return 2**self.n

    @property
    def main_lobe_prob(self) -> float:
        """Probability that a randomly oriented interferer points its main lobe at the MT."""
        return self.beamwidth / (2.0 * math.pi)


def beam_setting(n: int, gain_main: float | None = None, gain_side: float | None = None) -> BeamSetting:
    """Beam setting for ``2**n`` beams.

    Without explicit gains the default law ``G_m = 2**n``, ``G_s = 2**-n`` is used.
    Custom gains must be given together.
    """
    if isinstance(n, bool) or int(n) != n:
        raise ConfigError(f"beam exponent must be an integer, got {n!r}")
    n = int(n)
    if not 1 <= n <= MAX_BEAM_EXPONENT:
        raise ConfigError(f"beam exponent must lie in [1, {MAX_BEAM_EXPONENT}], got {n}")
    if (gain_main is None) != (gain_side is None):
        raise ConfigError("custom gains need both gain_main and gain_side")
    if gain_main is None:
        gain_main, gain_side = float(2**n), 2.0**-n
    if not (gain_side > 0 and gain_main >= gain_side):
        raise ConfigError(f"need gain_main >= gain_side > 0, got {gain_main}, {gain_side}")
    return BeamSetting(n=n, beamwidth=math.pi / 2 ** (n - 1), gain_main=float(gain_main), gain_side=float(gain_side))


def config_from_deployment(
    isd: float,
    speed_kmh: float,
    freq_ghz: float,
    bw_mhz: float,
    tx_dbm: float,
    noise_dbm_hz: float,
    ssb_ms: float,
    tb_ms: float,
    tc_ms: float,
    alpha_los: float,
    alpha_nlos: float,
    los_radius: float,
    qmax_db: float,
    noise_convention: str = "sigma2",
) -> NetworkConfig:
    """Build a :class:`NetworkConfig` from human units."""
    values = dict(
        isd=isd, speed_kmh=speed_kmh, freq_ghz=freq_ghz, bw_mhz=bw_mhz, tx_dbm=tx_dbm,
        noise_dbm_hz=noise_dbm_hz, ssb_ms=ssb_ms, tb_ms=tb_ms, tc_ms=tc_ms,
        alpha_los=alpha_los, alpha_nlos=alpha_nlos, los_radius=los_radius, qmax_db=qmax_db,
    )
    for name, value in values.items():
        if not math.isfinite(value):
            raise ConfigError(f"{name} must be finite, got {value!r}")
    for name in ("bw_mhz", "ssb_ms"):
        if not values[name] > 0:
            raise ConfigError(f"{name} must be positive, got {values[name]!r}")
    return NetworkConfig(
        lam=isd_to_density(isd),
        speed=kmh_to_ms(speed_kmh),
        ssb_period=ssb_ms * 1e-3,
        tx_power=dbm_to_watts(tx_dbm),
        bandwidth=bw_mhz * 1e6,
        noise_density=dbm_to_watts(noise_dbm_hz),
        carrier_freq=freq_ghz * 1e9,
        alpha_los=alpha_los,
        alpha_nlos=alpha_nlos,
        los_radius=los_radius,
        overhead_beam=tb_ms * 1e-3,
        overhead_cell=tc_ms * 1e-3,
        sinr_cap=db_to_linear(qmax_db),
        noise_convention=noise_convention,
    )


@dataclass(frozen=True)
class BandPreset:
    """A frequency-range column of the deployment table, in human units."""

    name: str
    freq_ghz: float
    bw_mhz: float
    tx_dbm: float
    noise_dbm_hz: float
    ssb_ms: float
    tb_ms: float
    tc_ms: float
    alpha_los: float
    alpha_nlos: float
    los_radius: float
    qmax_db: float
    isds: tuple[float, ...] = field(default=())
    speeds_kmh: tuple[float, ...] = field(default=())

    def deployment(self) -> dict:
        return dict(
            freq_ghz=self.freq_ghz, bw_mhz=self.bw_mhz, tx_dbm=self.tx_dbm,
            noise_dbm_hz=self.noise_dbm_hz, ssb_ms=self.ssb_ms, tb_ms=self.tb_ms,
            tc_ms=self.tc_ms, alpha_los=self.alpha_los, alpha_nlos=self.alpha_nlos,
            los_radius=self.los_radius, qmax_db=self.qmax_db,
        )

    def config(self, isd: float, speed_kmh: float, **overrides) -> NetworkConfig:
        kw = self.deployment()
        kw.update(overrides)
        return config_from_deployment(isd=isd, speed_kmh=speed_kmh, **kw)


FR1 = BandPreset(
    name="fr1", freq_ghz=3.5, bw_mhz=100.0, tx_dbm=43.0, noise_dbm_hz=-174.0,
    ssb_ms=20.0, tb_ms=23.0, tc_ms=43.0, alpha_los=3.5, alpha_nlos=3.5,
    los_radius=0.0, qmax_db=30.0, isds=(250.0, 500.0, 1000.0), speeds_kmh=(3.0, 30.0, 120.0),
)

FR2 = BandPreset(
    name="fr2", freq_ghz=28.0, bw_mhz=400.0, tx_dbm=36.0, noise_dbm_hz=-174.0,
    ssb_ms=20.0, tb_ms=23.0, tc_ms=43.0, alpha_los=1.9, alpha_nlos=3.5,
    los_radius=75.0, qmax_db=30.0, isds=(75.0, 125.0, 250.0), speeds_kmh=(3.0, 30.0),
)

BANDS = {"fr1": FR1, "fr2": FR2}
