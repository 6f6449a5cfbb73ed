"""Command-line front end: evaluate, optimize, sweep and validate.

Everything on the command line is in human units (GHz, MHz, dBm, km/h, ms,
m). Results go out as CSV with a ``#schema=1`` first line.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .ase import AseResult, SweepGrid, effective_ase, optimal_n, sweep
from .config import BANDS, NOISE_CONVENTIONS, ConfigError, beam_setting, config_from_deployment
from .mobility import beam_reselection_intensity, handover_intensity
from .montecarlo import RefinementError, count_crossings, simulate_sinr
from .quadrature import QuadratureError, QuadratureSpec
from .sinr import LOG_BASES, ergodic_rate, success_probability

SCHEMA = 1
COLUMNS = ("band", "isd_m", "speed_kmh", "n", "p_bm", "mu_b", "mu_c", "T_o", "rate", "ase_eff")
DEPLOYMENT_KEYS = (
    "freq_ghz", "bw_mhz", "tx_dbm", "noise_dbm_hz", "ssb_ms", "tb_ms", "tc_ms",
    "alpha_los", "alpha_nlos", "los_radius", "qmax_db",
)
VALIDATE_NS = (2, 4, 6)
VALIDATE_BETAS_DB = (-10, -5, 0, 5, 10, 15, 20)
RATE_CHECK_N = 4

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ORACLE = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# Run configuration


@dataclass
class RunConfig:
    band: str = "fr1"
    isd: float | None = None
    speed_kmh: float = 30.0
    n: int = 4
    n_min: int = 1
    n_max: int = 10
    deployment: dict = field(default_factory=dict)
    tol: float = 1e-5
    samples: int = 100_000
    seed: int = 7
    trajectory_m: float = 1e6
    workers: int = 1
    log_base: str = "nats"
    noise_convention: str = "sigma2"
    out: str | None = None

    def __post_init__(self) -> None:
        if self.band != "custom" and self.band not in BANDS:
            raise ConfigError(f"band must be one of {sorted(BANDS) + ['custom']}, got {self.band!r}")
        unknown = set(self.deployment) - set(DEPLOYMENT_KEYS)
        if unknown:
            raise ConfigError(f"unknown deployment keys: {sorted(unknown)}")
        if self.band == "custom":
            missing = [k for k in DEPLOYMENT_KEYS if k not in self.deployment]
            if missing:
                raise ConfigError(f"custom band needs every deployment field; missing {missing}")
            if self.isd is None:
                raise ConfigError("custom band needs an explicit isd")
        if self.log_base not in LOG_BASES:
            raise ConfigError(f"log_base must be one of {LOG_BASES}, got {self.log_base!r}")
        if self.noise_convention not in NOISE_CONVENTIONS:
            raise ConfigError(f"noise_convention must be one of {NOISE_CONVENTIONS}")
        if not 0 < self.tol <= 1e-2:
            raise ConfigError(f"tol must lie in (0, 1e-2], got {self.tol}")
        if self.samples < 1000:
            raise ConfigError(f"samples must be at least 1000, got {self.samples}")
        if not self.trajectory_m > 0:
            raise ConfigError(f"trajectory_m must be positive, got {self.trajectory_m}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        beam_setting(self.n)
        if not 1 <= self.n_min <= self.n_max <= 20:
            raise ConfigError(f"need 1 <= n_min <= n_max <= 20, got [{self.n_min}, {self.n_max}]")

    @property
    def reference_isd(self) -> float:
        if self.isd is not None:
            return self.isd
        isds = BANDS[self.band].isds
        return isds[len(isds) // 2]

    def deployment_values(self) -> dict:
        """Preset deployment fields with explicit overrides applied."""
        base = {} if self.band == "custom" else BANDS[self.band].deployment()
        base.update(self.deployment)
        return base

    def network(self, speed_kmh: float | None = None, isd: float | None = None):
        return config_from_deployment(
            isd=self.reference_isd if isd is None else isd,
            speed_kmh=self.speed_kmh if speed_kmh is None else speed_kmh,
            noise_convention=self.noise_convention,
            **self.deployment_values(),
        )

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(rate_rtol=self.tol, outer_rtol=self.tol / 10, inner_rtol=self.tol / 100)


_SECTIONS = {
    "run": ("band", "isd", "speed_kmh", "n", "n_min", "n_max", "log_base", "noise_convention"),
    "quadrature": ("tol",),
    "montecarlo": ("samples", "seed", "trajectory_m", "workers"),
    "output": ("out",),
}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, text: str):
    kind = _TYPES[name]
    try:
        if kind == "int":
            return int(text)
        if kind in ("float", "float | None"):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r}") from exc
    return text


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def dump_run_config(rc: RunConfig) -> str:
    """Serialize to the sectioned ``key = value`` format."""
    parser = configparser.ConfigParser(interpolation=None)
    for section, keys in _SECTIONS.items():
        parser[section] = {k: _fmt(getattr(rc, k)) for k in keys if getattr(rc, k) is not None}
    parser["deployment"] = {k: _fmt(float(v)) for k, v in sorted(rc.deployment.items())}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def parse_run_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    values: dict = {}
    for section in parser.sections():
        if section == "deployment":
            try:
                values["deployment"] = {k: float(v) for k, v in parser[section].items()}
            except ValueError as exc:
                raise ConfigError(f"deployment: {exc}") from exc
            continue
        allowed = _SECTIONS.get(section)
        if allowed is None:
            raise ConfigError(f"unknown config section [{section}]")
        for key, text_value in parser[section].items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _coerce(key, text_value)
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# Sweep grids


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def parse_grid(text: str) -> list[SweepGrid]:
    """One :class:`SweepGrid` per section of a grid file."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed grid file: {exc}") from exc
    grids = []
    for name in parser.sections():
        sec = dict(parser[name])
        try:
            band = sec.pop("band")
            isds = _floats(sec.pop("isd_m"))
            speeds = _floats(sec.pop("speed_kmh"))
            n_min = int(sec.pop("n_min", 1))
            n_max = int(sec.pop("n_max", 10))
            overrides = {k: float(v) for k, v in sec.items()}
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"grid section [{name}]: {exc}") from exc
        unknown = set(overrides) - set(DEPLOYMENT_KEYS)
        if unknown:
            raise ConfigError(f"grid section [{name}]: unknown keys {sorted(unknown)}")
        try:
            grids.append(SweepGrid(band, isds, speeds, n_min, n_max, overrides))
        except ValueError as exc:
            raise ConfigError(f"grid section [{name}]: {exc}") from exc
    if not grids:
        raise ConfigError("grid file has no sections")
    return grids


def bundled_grids() -> list[str]:
    return sorted(p.name for p in resources.files("beamase.grids").iterdir() if p.name.endswith(".grid"))


def load_grid(name: str) -> list[SweepGrid]:
    """Read a grid file by path, or a bundled one by name (``fig_fr1`` or ``fig_fr1.grid``)."""
    path = Path(name)
    if path.is_file():
        return parse_grid(path.read_text())
    bundled = name if name.endswith(".grid") else f"{name}.grid"
    res = resources.files("beamase.grids") / bundled
    if res.is_file():
        return parse_grid(res.read_text())
    raise ConfigError(f"no grid file {name!r}; bundled grids are {bundled_grids()}")


# ---------------------------------------------------------------------------
# CSV output


def _num(x) -> str:
    return repr(float(x))


def csv_row(band: str, isd: float, speed_kmh: float, res: AseResult | None, n: int | None = None):
    if res is None:
        return [band, _num(isd), _num(speed_kmh), str(n)] + ["nan"] * (len(COLUMNS) - 4)
    m = res.mobility
    return [band, _num(isd), _num(speed_kmh), str(res.n), _num(res.p_bm), _num(m.mu_b_eff),
            _num(m.mu_cell), _num(res.overhead), _num(res.rate), _num(res.effective_ase)]


def header_lines(deployments: dict, log_base: str, noise_convention: str, extra=()) -> list[str]:
    unit = "nats" if log_base == "nats" else "bits"
    lines = [f"#schema={SCHEMA}"]
    for band, dep in deployments.items():
        pairs = " ".join(f"{k}={dep[k]:g}" for k in DEPLOYMENT_KEYS)
        lines.append(f"#band={band} {pairs} noise_convention={noise_convention}")
    lines.append(f"#units rate={unit}/s ase_eff={unit}/s/m^2 mu_b=1/s mu_c=1/s T_o=fraction")
    lines.extend(extra)
    return lines


def write_csv(target, comments, rows, append: bool = False) -> None:
    """Write comments, header and rows; with ``append`` to a non-empty file only rows are added."""
    if target is None:
        handle, close = sys.stdout, False
        fresh = True
    else:
        path = Path(target)
        fresh = not (append and path.exists() and path.stat().st_size > 0)
        handle, close = open(path, "a" if not fresh else "w", newline=""), True
    try:
        if fresh:
            for line in comments:
                handle.write(line + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        if fresh:
            writer.writerow(COLUMNS)
        writer.writerows(rows)
    finally:
        if close:
            handle.close()


# ---------------------------------------------------------------------------
# Commands


def cmd_evaluate(rc: RunConfig) -> int:
    cfg = rc.network()
    res = effective_ase(cfg, beam_setting(rc.n), rc.quadrature(), rc.log_base)
    m = res.mobility
    unit = rc.log_base
    print(f"band={rc.band} isd={rc.reference_isd:g} m speed={rc.speed_kmh:g} km/h n={res.n}")
    print(f"p_bm        = {res.p_bm:.6g}")
    print(f"mu_s_cell   = {m.mu_s_cell:.6g} 1/m    mu_c = {m.mu_cell:.6g} 1/s")
    print(f"mu_s_beam   = {m.mu_s_beam:.6g} 1/m    mu_t_beam = {m.mu_t_beam:.6g} 1/s")
    print(f"mu_b        = {m.mu_b_eff:.6g} 1/s")
    print(f"T_o         = {res.overhead:.6g}")
    print(f"R_n         = {res.rate:.6g} {unit}/s (+/- {res.rate_error:.2g})")
    print(f"R_eff       = {res.effective_ase:.6g} {unit}/s/m^2")
    comments = header_lines({rc.band: rc.deployment_values()}, rc.log_base, rc.noise_convention)
    write_csv(rc.out, comments, [csv_row(rc.band, rc.reference_isd, rc.speed_kmh, res)], append=True)
    return EXIT_OK


def cmd_optimize(rc: RunConfig) -> int:
    cfg = rc.network()
    opt = optimal_n(cfg, rc.quadrature(), (rc.n_min, rc.n_max), rc.log_base)
    flag = " (degenerate: every n has zero effective ASE)" if opt.degenerate else ""
    print(f"n* = {opt.n_star}{flag}", file=sys.stderr if rc.out is None else sys.stdout)
    extra = [f"#n_star={opt.n_star} degenerate={str(opt.degenerate).lower()}"]
    comments = header_lines({rc.band: rc.deployment_values()}, rc.log_base, rc.noise_convention, extra)
    rows = [csv_row(rc.band, rc.reference_isd, rc.speed_kmh, r) for r in opt.results]
    write_csv(rc.out, comments, rows)
    return EXIT_OK


def cmd_sweep(rc: RunConfig, grid_name: str | None) -> int:
    if grid_name is None:
        if rc.band == "custom":
            raise ConfigError("sweeping a custom band needs a grid file")
        grids = [SweepGrid.from_preset(rc.band, rc.n_min, rc.n_max)]
    else:
        grids = load_grid(grid_name)
    # Explicit deployment fields and the noise convention beat the grid file.
    grids = [
        replace(g, overrides={**g.overrides, **rc.deployment, "noise_convention": rc.noise_convention})
        for g in grids
    ]
    rows = sweep(grids, rc.quadrature(), rc.log_base, workers=rc.workers)
    failed = [r for r in rows if r.result is None]
    for r in failed:
        print(f"numerical failure at {r.band} isd={r.isd:g} v={r.speed_kmh:g} n={r.n}: {r.error}",
              file=sys.stderr)
    deployments = {}
    for g in sorted(grids, key=lambda g: g.band):
        dep = g.preset.deployment()
        dep.update({k: v for k, v in g.overrides.items() if k in DEPLOYMENT_KEYS})
        deployments.setdefault(g.band, dep)
    comments = header_lines(deployments, rc.log_base, rc.noise_convention)
    write_csv(rc.out, comments, [csv_row(r.band, r.isd, r.speed_kmh, r.result, r.n) for r in rows])
    return EXIT_NUMERICAL if failed else EXIT_OK


@dataclass(frozen=True)
class Check:
    name: str
    target: float
    estimate: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.estimate - self.target) <= self.tolerance

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}  {self.name:<34} target={self.target:.6g} estimate={self.estimate:.6g} "
                f"tol={self.tolerance:.3g}")


def _parse_factor(text: str) -> float:
    value = float(text.lower().rstrip("x"))
    if not value > 0:
        raise ValueError
    return value


def validation_checks(rc: RunConfig, perturb_gain: float = 1.0, ns=VALIDATE_NS) -> list[Check]:
    """Crossing intensities, the p_s grid and the rate at ``n=4`` against Monte Carlo.

    Tolerances follow ``max(floor, 3 SE)`` with floors of 2 % (crossings,
    relative), 0.01 (success probability) and 3 % (rate, relative).
    """
    cfg = rc.network()
    quad = rc.quadrature()
    checks = []
    for i, n in enumerate(ns):
        beams = beam_setting(n)
        counts = count_crossings(cfg, beams, rc.trajectory_m, rc.seed)
        if i == 0:
            target, _ = handover_intensity(cfg)
            est = counts.handover_intensity
            checks.append(Check("handover intensity [1/m]", target, est.estimate,
                                max(0.02 * target, 3 * est.standard_error)))
        target, _ = beam_reselection_intensity(cfg, beams)
        est = counts.reselection_intensity
        checks.append(Check(f"reselection intensity n={n} [1/m]", target, est.estimate,
                            max(0.02 * target, 3 * est.standard_error)))

    rate_ns = sorted(set(ns) | {RATE_CHECK_N})
    betas = 10.0 ** (np.asarray(VALIDATE_BETAS_DB) / 10)
    sims = simulate_sinr(cfg, rate_ns, betas, rc.samples, rc.seed, workers=rc.workers,
                         gain_scale=perturb_gain, log_base=rc.log_base, quad=quad)
    for sim in sims:
        beams = beam_setting(sim.n)
        if sim.n in ns:
            analytic = np.atleast_1d(success_probability(cfg, beams, betas, quad))
            for db, value, est in zip(VALIDATE_BETAS_DB, analytic, sim.success):
                checks.append(Check(f"p_s n={sim.n} beta={db:+d} dB", float(value), est.estimate,
                                    max(0.01, 3 * est.standard_error)))
        if sim.n == RATE_CHECK_N:
            rate = ergodic_rate(cfg, beams, quad, log_base=rc.log_base)
            checks.append(Check(f"rate n={sim.n} [{rc.log_base}/s]", rate, sim.rate.estimate,
                                max(0.03 * rate, 3 * sim.rate.standard_error)))
    return checks


def cmd_validate(rc: RunConfig, perturb_gain: float = 1.0, ns=VALIDATE_NS) -> int:
    print(f"validate band={rc.band} isd={rc.reference_isd:g} m speed={rc.speed_kmh:g} km/h "
          f"samples={rc.samples} seed={rc.seed} trajectory={rc.trajectory_m:g} m"
          + (f" perturb_gain={perturb_gain:g}" if perturb_gain != 1.0 else ""))
    checks = validation_checks(rc, perturb_gain, ns)
    for check in checks:
        print(check.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_ORACLE if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are validation errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


_FLAG_FIELDS = ("band", "isd", "speed_kmh", "n", "n_min", "n_max", "tol", "samples", "seed",
                "trajectory_m", "workers", "log_base", "noise_convention", "out")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--band", choices=sorted(BANDS) + ["custom"])
    common.add_argument("--isd", type=float, help="inter-site distance [m]")
    common.add_argument("--speed", dest="speed_kmh", type=float, help="MT speed [km/h]")
    common.add_argument("--n", type=int, help="beam exponent (2**n beams)")
    common.add_argument("--n-min", dest="n_min", type=int)
    common.add_argument("--n-max", dest="n_max", type=int)
    common.add_argument("--samples", type=int, help="Monte Carlo snapshots")
    common.add_argument("--seed", type=int)
    common.add_argument("--trajectory", dest="trajectory_m", type=float, help="crossing path length [m]")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--tol", type=float, help="relative tolerance of the rate integral")
    common.add_argument("--log-base", dest="log_base", choices=LOG_BASES)
    common.add_argument("--noise-convention", dest="noise_convention", choices=NOISE_CONVENTIONS)
    common.add_argument("--out", help="CSV output path (stdout if omitted)")
    dep = common.add_argument_group("deployment overrides")
    for key in DEPLOYMENT_KEYS:
        dep.add_argument("--" + key.replace("_", "-"), dest=key, type=float)

    parser = _Parser(prog="beamase", description="Effective ASE of beam-managed cellular downlinks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("evaluate", parents=[common], help="one beam exponent")
    sub.add_parser("optimize", parents=[common], help="search n over [n-min, n-max]")
    p = sub.add_parser("sweep", parents=[common], help="evaluate a grid of deployments")
    p.add_argument("--grid", help="grid file path or bundled name (%s)" % ", ".join(bundled_grids()))
    p = sub.add_parser("validate", parents=[common], help="check the analysis against Monte Carlo")
    p.add_argument("--perturb-gain", default="1", help="scale the simulated serving gain, e.g. 2x")
    return parser


def run_config_from_args(args) -> RunConfig:
    base = RunConfig()
    if args.config:
        try:
            base = parse_run_config(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    changes = {k: getattr(args, k) for k in _FLAG_FIELDS if getattr(args, k) is not None}
    deployment = dict(base.deployment)
    deployment.update({k: getattr(args, k) for k in DEPLOYMENT_KEYS if getattr(args, k) is not None})
    return replace(base, deployment=deployment, **changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = run_config_from_args(args)
        if args.command == "evaluate":
            return cmd_evaluate(rc)
        if args.command == "optimize":
            return cmd_optimize(rc)
        if args.command == "sweep":
            return cmd_sweep(rc, args.grid)
        try:
            factor = _parse_factor(args.perturb_gain)
        except ValueError:
            raise ConfigError(f"perturb-gain must look like '2x', got {args.perturb_gain!r}") from None
        ns = VALIDATE_NS if args.n is None else (rc.n,)
        return cmd_validate(rc, factor, ns)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, RefinementError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
