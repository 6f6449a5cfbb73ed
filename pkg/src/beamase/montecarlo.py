"""Monte Carlo checks on explicit Poisson networks.

Two independent simulators live here:

* SINR snapshots of the typical MT at the origin, used to check the success
  probability and the capped rate.
* A straight trajectory through a Poisson-Voronoi tessellation with randomly
  rotated beam sectors, used to count handovers and beam reselections.

Randomness is drawn from per-chunk streams keyed by ``(seed, chunk index)``,
and chunk results are reduced in index order, so the output depends on the
seed only, never on the number of workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.spatial import cKDTree

from .config import BeamSetting, DerivedConstants, NetworkConfig, beam_setting
from .mobility import beam_reselection_intensity, handover_intensity, misalignment_probability
from .quadrature import QuadratureSpec, power_integral

CHUNK = 1000


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    standard_error: float
    sample_count: int
    seed: int

    def agrees_with(self, target: float, floor: float = 0.0, k: float = 3.0) -> bool:
        return abs(self.estimate - target) <= max(floor, k * self.standard_error)


def _estimate(total: float, total_sq: float, count: int, seed: int, scale: float = 1.0) -> McEstimate:
    mean = total / count
    if count > 1:
        var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
        se = math.sqrt(var / count)
    else:
        se = 0.0
    return McEstimate(estimate=scale * mean, standard_error=scale * se, sample_count=count, seed=seed)


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


@dataclass(frozen=True)
class PppRealization:
    """BS positions of one Poisson draw with per-BS beam rotations.

    ``window`` is ``(x_min, x_max, y_min, y_max)``. Rotations lie in
    ``[0, beamwidth)``.
    """

    points: np.ndarray
    rotations: np.ndarray
    window: tuple[float, float, float, float]
    seed: int


def drop_ppp(lam: float, window: tuple[float, float, float, float], beams: BeamSetting,
             seed: int, stream: int = 0) -> PppRealization:
    x0, x1, y0, y1 = window
    rng = _rng(seed, stream)
    count = rng.poisson(lam * (x1 - x0) * (y1 - y0))
    xy = rng.random((count, 2))
    points = np.column_stack([x0 + (x1 - x0) * xy[:, 0], y0 + (y1 - y0) * xy[:, 1]])
    rotations = beams.beamwidth * rng.random(count)
    return PppRealization(points=points, rotations=rotations, window=window, seed=seed)


# ---------------------------------------------------------------------------
# SINR snapshots


def _path_exponent_integral(cfg: NetworkConfig, lo: float, hi: float) -> float:
    """``int_lo^hi w * w**-alpha(w) dw`` for the LOS-ball path loss (constant K dropped)."""
    rc = cfg.los_radius
    total = 0.0
    if lo < rc:
        total += float(power_integral(lo, min(hi, rc), 1 - cfg.alpha_los))
    start = max(lo, rc)
    if hi > start:
        total += float(power_integral(start, hi, 1 - cfg.alpha_nlos))
    return total


def interference_window(cfg: NetworkConfig, rel_tail: float = 1e-3,
                        quad: QuadratureSpec | None = None) -> float:
    """Simulation disk radius for SINR snapshots.

    Chosen so the mean interference beyond the disk is below ``rel_tail`` of
    the mean interference at the typical MT (averaged over the serving
    distance), and at least five outer truncation radii and ten LOS radii.
    """
    quad = quad or QuadratureSpec()
    lp = cfg.lam * math.pi
    r_max = quad.r_max or math.sqrt(-math.log(quad.tail_mass) / lp)

    def beyond(s):
        return _path_exponent_integral(cfg, math.sqrt(s / lp), math.inf)

    if max(cfg.alpha_los, cfg.alpha_nlos) < 4:
        knees = [lp * cfg.los_radius**2] if cfg.los_radius else None
        mean, _ = integrate.quad(lambda s: math.exp(-s) * beyond(s), 0, 60, points=knees, limit=200)
    else:
        # the average diverges at short range; fall back to the median serving distance
        mean = beyond(math.log(2))

    def excess(log_r):
        return math.log(_path_exponent_integral(cfg, math.exp(log_r), math.inf)) - math.log(rel_tail * mean)

    lo = math.log(max(cfg.los_radius, r_max))
    hi = lo + 1
    while excess(hi) > 0:
        hi += 1
    r_tail = math.exp(optimize.brentq(excess, lo - 20, hi)) if excess(lo) > 0 else math.exp(lo)
    return max(5 * r_max, 10 * cfg.los_radius, r_tail)


@dataclass(frozen=True)
class SinrSimulation:
    """Monte Carlo success probabilities and capped rate for one beam exponent."""

    n: int
    thresholds: tuple[float, ...]
    success: tuple[McEstimate, ...]
    rate: McEstimate
    resamples: int


def _sinr_chunk(args):
    (cfg, ns, p_bms, betas, size, seed, index, radius, interference, serving_distance,
     gain_scale) = args
    rng = _rng(seed, index)
    consts = DerivedConstants.from_config(cfg)
    amp = cfg.tx_power * consts.path_const
    noise = consts.noise_power
    resamples = 0

    if serving_distance is None:
        counts = rng.poisson(cfg.lam * math.pi * radius**2, size=size)
        empty = counts == 0
        while np.any(empty):
            resamples += int(empty.sum())
            counts[empty] = rng.poisson(cfg.lam * math.pi * radius**2, size=int(empty.sum()))
            empty = counts == 0
        total = int(counts.sum())
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        d2 = radius**2 * rng.random(total)
        fading = rng.standard_exponential(total)
        lobe_u = rng.random(total)
        nearest = np.minimum.reduceat(d2, starts)
        serving = d2 == np.repeat(nearest, counts)
        if np.add.reduceat(serving, starts).max() > 1:
            raise RuntimeError("tied nearest base stations in a snapshot")
        alpha = np.where(d2 < cfg.los_radius**2, cfg.alpha_los, cfg.alpha_nlos)
        loss = d2 ** (-alpha / 2)
        power = fading * loss
        serving_power = power[serving]
        other = np.where(serving, 0.0, power)
    else:
        r = serving_distance
        alpha = cfg.alpha_los if r < cfg.los_radius else cfg.alpha_nlos
        serving_power = rng.standard_exponential(size) * r ** (-alpha)

    align_u = rng.random(size)
    results = []
    for n, p_bm in zip(ns, p_bms):
        beams = beam_setting(n)
        g0 = np.where(align_u < p_bm, beams.gain_side, beams.gain_main) * gain_scale
        signal = amp * g0 * serving_power
        if serving_distance is None and interference:
            gains = np.where(lobe_u < beams.main_lobe_prob, beams.gain_main, beams.gain_side)
            interf = amp * np.add.reduceat(gains * other, starts)
        else:
            interf = 0.0
        sinr = signal / (noise + interf)
        hits = (sinr[:, None] > betas[None, :]).sum(axis=0)
        log_rate = np.log1p(np.minimum(sinr, cfg.sinr_cap))
        results.append((hits, float(log_rate.sum()), float((log_rate**2).sum())))
    return results, resamples


def simulate_sinr(cfg: NetworkConfig, ns, thresholds, samples: int, seed: int, *,
                  p_bm: float | None = None, workers: int = 1, chunk: int = CHUNK,
                  interference: bool = True, serving_distance: float | None = None,
                  gain_scale: float = 1.0, log_base: str = "nats",
                  quad: QuadratureSpec | None = None) -> list[SinrSimulation]:
    """Success probabilities and capped rate from explicit Poisson snapshots.

    The MT sits at the origin and attaches to the nearest BS of a Poisson
    draw in a disk of radius :func:`interference_window`. The serving gain
    is the side lobe with probability ``p_bm`` (the analytic misalignment
    probability unless overridden), each interferer points its main lobe at
    the MT with probability ``2**-n``, and every link gets independent
    unit-mean Rayleigh fading. The same snapshots serve all ``ns`` and all
    thresholds.

    ``serving_distance`` pins a lone serving BS at that distance, which must
    go with ``interference=False``. ``gain_scale`` multiplies the serving
    gain and exists to prove the checks can fail.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if serving_distance is not None and interference:
        raise ValueError("a pinned serving distance is only supported without interference")
    ns = [int(n) for n in np.atleast_1d(ns)]
    betas = np.atleast_1d(np.asarray(thresholds, dtype=float))
    p_bms = [misalignment_probability(cfg, beam_setting(n)) if p_bm is None else p_bm for n in ns]
    radius = interference_window(cfg, quad=quad)
    sizes = [min(chunk, samples - start) for start in range(0, samples, chunk)]
    jobs = [
        (cfg, ns, p_bms, betas, size, seed, i, radius, interference, serving_distance, gain_scale)
        for i, size in enumerate(sizes)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_sinr_chunk, jobs))
    else:
        outputs = [_sinr_chunk(job) for job in jobs]

    scale = cfg.bandwidth / (math.log(2) if log_base == "bits" else 1.0)
    resamples = sum(out[1] for out in outputs)
    sims = []
    for k, n in enumerate(ns):
        hits = np.zeros(len(betas), dtype=np.int64)
        rate_sum = rate_sq = 0.0
        for results, _ in outputs:
            h, s, s2 = results[k]
            hits += h
            rate_sum += s
            rate_sq += s2
        success = tuple(_estimate(float(h), float(h), samples, seed) for h in hits)
        sims.append(SinrSimulation(
            n=n,
            thresholds=tuple(float(b) for b in betas),
            success=success,
            rate=_estimate(rate_sum, rate_sq, samples, seed, scale=scale),
            resamples=resamples,
        ))
    return sims


def simulate_success_prob(cfg: NetworkConfig, beams: BeamSetting, beta, samples: int, seed: int,
                          **kwargs):
    """Fraction of snapshots with SINR above ``beta`` (one estimate per threshold)."""
    sim = simulate_sinr(cfg, [beams.n], beta, samples, seed, **kwargs)[0]
    return sim.success[0] if np.ndim(beta) == 0 else list(sim.success)


def simulate_rate(cfg: NetworkConfig, beams: BeamSetting, samples: int, seed: int, **kwargs) -> McEstimate:
    """``W * mean(log(1 + min(SINR, Q_max)))`` over snapshots."""
    return simulate_sinr(cfg, [beams.n], [1.0], samples, seed, **kwargs)[0].rate


# ---------------------------------------------------------------------------
# Boundary crossings along a straight trajectory


@dataclass(frozen=True)
class CrossingCounts:
    handovers: int
    reselections: int
    length: float
    handover_intensity: McEstimate  # per metre
    reselection_intensity: McEstimate  # per metre


def _lower_envelope(a: np.ndarray, b: np.ndarray):
    """Nearest-point sequence along the x-axis.

    Minimising ``(x - a)^2 + b^2`` over points is the lower envelope of the
    lines ``-2 a x + a^2 + b^2``. Returns the indices of the points owning
    successive pieces and the x-coordinates where ownership changes.
    """
    order = np.lexsort((a * a + b * b, a))
    slope = -2 * a[order]
    icpt = (a * a + b * b)[order]
    hull: list[int] = []
    for i in range(len(order)):
        if hull and slope[hull[-1]] == slope[i]:
            continue  # same slope, larger intercept: never lowest
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            x_jk = (icpt[k] - icpt[j]) / (slope[j] - slope[k])
            x_ki = (icpt[i] - icpt[k]) / (slope[k] - slope[i])
            if x_jk >= x_ki:
                hull.pop()
            else:
                break
        hull.append(i)
    hull_arr = np.asarray(hull)
    breaks = (icpt[hull_arr[1:]] - icpt[hull_arr[:-1]]) / (slope[hull_arr[:-1]] - slope[hull_arr[1:]])
    return order[hull_arr], breaks


def _beam_index(x, a, b, rot, direction: float, beamwidth: float):
    # angle of the MT seen from the BS, global frame; continuous along one piece
    theta = np.arctan2(-b, x - a) + direction
    return np.floor((theta - rot) / beamwidth)


def _exact_counts(a, b, rot, length: float, edges: np.ndarray, direction: float, beamwidth: float):
    owners, breaks = _lower_envelope(a, b)
    inside = (breaks > 0) & (breaks < length)
    handover_x = breaks[inside]
    cuts = np.union1d(np.concatenate([breaks[inside], edges]), [0.0, length])
    lo, hi = cuts[:-1], cuts[1:]
    mid = 0.5 * (lo + hi)
    piece = np.searchsorted(breaks, mid)
    own = owners[piece]
    jumps = np.abs(
        _beam_index(hi, a[own], b[own], rot[own], direction, beamwidth)
        - _beam_index(lo, a[own], b[own], rot[own], direction, beamwidth)
    )
    block = np.searchsorted(edges, mid, side="right") - 1
    nblocks = len(edges) - 1
    reselect = np.bincount(block, weights=jumps, minlength=nblocks)
    hand = np.bincount(np.searchsorted(edges, handover_x, side="right") - 1, minlength=nblocks)
    return hand[:nblocks].astype(float), reselect[:nblocks]


class RefinementError(RuntimeError):
    """Step refinement hit its floor without isolating single boundary events."""


def _stepped_counts(a, b, rot, length: float, edges: np.ndarray, direction: float,
                    beamwidth: float, nbeams: int, step: float, floor: float):
    tree = cKDTree(np.column_stack([a, b]))

    def state(x):
        _, idx = tree.query(np.column_stack([x, np.zeros_like(x)]))
        beam = _beam_index(x, a[idx], b[idx], rot[idx], direction, beamwidth) % nbeams
        return idx, beam

    def resolve(x0, x1, s0, s1):
        if s0 == s1:
            return 0, 0
        if s0[0] == s1[0]:
            jump = abs(s0[1] - s1[1])
            if min(jump, nbeams - jump) == 1:
                return 0, 1
        elif x1 - x0 <= floor:
            return 1, 0
        if x1 - x0 <= floor:
            raise RefinementError(f"two beam boundaries within {floor:g} m near x={x0:.3f}")
        xs = np.linspace(x0, x1, 9)
        idx, beam = state(xs)
        states = list(zip(idx.tolist(), beam.tolist()))
        h = r = 0
        for k in range(8):
            dh, dr = resolve(xs[k], xs[k + 1], states[k], states[k + 1])
            h += dh
            r += dr
        return h, r

    nblocks = len(edges) - 1
    hand = np.zeros(nblocks)
    reselect = np.zeros(nblocks)
    npts = int(math.ceil(length / step))
    for start in range(0, npts, 1_000_000):
        k = np.arange(start, min(start + 1_000_000, npts) + 1)
        xs = np.minimum(k * step, length)
        idx, beam = state(xs)
        changed = np.nonzero((idx[1:] != idx[:-1]) | (beam[1:] != beam[:-1]))[0]
        for j in changed:
            dh, dr = resolve(xs[j], xs[j + 1], (int(idx[j]), beam[j]), (int(idx[j + 1]), beam[j + 1]))
            blk = min(np.searchsorted(edges, 0.5 * (xs[j] + xs[j + 1]), side="right") - 1, nblocks - 1)
            hand[blk] += dh
            reselect[blk] += dr
    return hand, reselect


def count_crossings(cfg: NetworkConfig, beams: BeamSetting, trajectory_length: float, seed: int,
                    *, direction: float = 0.0, method: str = "exact", blocks: int = 20,
                    step: float | None = None) -> CrossingCounts:
    """Handovers and beam reselections along a straight path of given length.

    The MT runs from the origin in direction ``direction`` (radians). Base
    stations are dropped in a strip padded by ``10 / sqrt(lam)`` on every
    side; beam sectors of each BS are rotated uniformly. A change of nearest
    BS is a handover; a change of beam sector under the same BS is a
    reselection.

    ``method='exact'`` walks the nearest-BS envelope piece by piece.
    ``method='stepped'`` samples the path every ``step`` metres and refines
    steps where the state changes. Standard errors come from ``blocks``
    equal sub-paths.
    """
    if trajectory_length <= 0:
        raise ValueError("trajectory_length must be positive")
    if trajectory_length < 100 * 2 / math.sqrt(math.pi * cfg.lam):
        warnings.warn("trajectory shorter than 100 mean cell diameters", stacklevel=2)
    pad = 10 / math.sqrt(cfg.lam)
    window = (-pad, trajectory_length + pad, -pad, pad)
    ppp = drop_ppp(cfg.lam, window, beams, seed)
    a, b, rot = ppp.points[:, 0], ppp.points[:, 1], ppp.rotations
    edges = np.linspace(0.0, trajectory_length, blocks + 1)

    if method == "exact":
        hand, reselect = _exact_counts(a, b, rot, trajectory_length, edges, direction, beams.beamwidth)
    elif method == "stepped":
        if step is None:
            mu_b, _ = beam_reselection_intensity(cfg, beams)
            mu_c, _ = handover_intensity(cfg)
            step = min(0.05 / mu_b, 0.05 / mu_c)
        hand, reselect = _stepped_counts(a, b, rot, trajectory_length, edges, direction,
                                         beams.beamwidth, beams.num_beams, step, floor=step * 1e-6)
    else:
        raise ValueError(f"unknown method {method!r}")

    block_len = trajectory_length / blocks

    def intensity(per_block):
        rates = per_block / block_len
        return _estimate(float(rates.sum()), float((rates**2).sum()), blocks, seed)

    return CrossingCounts(
        handovers=int(hand.sum()),
        reselections=int(reselect.sum()),
        length=trajectory_length,
        handover_intensity=intensity(hand),
        reselection_intensity=intensity(reselect),
    )
