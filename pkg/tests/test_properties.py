"""Invariants checked over randomly drawn parameters."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from beamase import FR1, FR2, beam_setting, mobility_profile, optimal_n, success_probability
from beamase.ase import clamp_overhead
from beamase.cli import RunConfig, dump_run_config, parse_run_config
from beamase.config import density_to_isd, isd_to_density
from beamase.mobility import misalignment_probability
from beamase.quadrature import QuadratureSpec
from beamase.sinr import lobe_integral

isds = st.floats(min_value=30, max_value=3000)
speeds = st.floats(min_value=0.5, max_value=200)
exponents = st.integers(min_value=1, max_value=12)
bands = st.sampled_from([FR1, FR2])


@given(isds)
def test_density_round_trip(isd):
    assert math.isclose(density_to_isd(isd_to_density(isd)), isd, rel_tol=1e-12)


@given(bands, isds, speeds, exponents)
def test_misalignment_increases_with_beams_and_speed(band, isd, v, n):
    cfg = band.config(isd, v)
    p = misalignment_probability(cfg, beam_setting(n))
    assert 0 < p < 1 or p == 1.0
    p_more_beams = misalignment_probability(cfg, beam_setting(n + 1))
    p_faster = misalignment_probability(band.config(isd, v * 1.5), beam_setting(n))
    if p < 1.0:
        assert p_more_beams > p and p_faster > p


@given(bands, isds, speeds, exponents)
def test_overhead_nonnegative_and_monotone(band, isd, v, n):
    a = mobility_profile(band.config(isd, v), beam_setting(n))
    b = mobility_profile(band.config(isd, v), beam_setting(n + 1))
    assert 0 <= a.overhead <= b.overhead
    assert a.mu_b_eff <= 1 / band.ssb_ms * 1e3 + 1e-12


@given(st.floats(min_value=-5, max_value=5))
def test_clamp_idempotent(overhead):
    once = clamp_overhead(overhead)
    assert once >= 0
    assert max(0.0, once) == once
    assert clamp_overhead(1 - once) == once


@settings(max_examples=15)
@given(st.floats(min_value=-6, max_value=12), st.floats(min_value=0.5, max_value=200),
       st.floats(min_value=1.1, max_value=20), st.sampled_from([2.2, 3.0, 3.5, 4.0]))
def test_lobe_integral_is_additive(log_c, lo, ratio, alpha):
    c = 10.0**log_c
    mid, hi = lo * ratio, lo * ratio * ratio
    whole = float(lobe_integral(c, lo, hi, alpha))
    parts = float(lobe_integral(c, lo, mid, alpha)) + float(lobe_integral(c, mid, hi, alpha))
    assert math.isclose(whole, parts, rel_tol=1e-9)
    tail = float(lobe_integral(c, lo, np.inf, alpha))
    assert tail >= whole


@settings(max_examples=8)
@given(bands, st.floats(min_value=60, max_value=1200), st.integers(min_value=1, max_value=8))
def test_success_probability_is_a_decreasing_probability(band, isd, n):
    cfg = band.config(isd, 30)
    betas = np.logspace(-2, 3, 20)
    p = success_probability(cfg, beam_setting(n), betas)
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(np.diff(p) <= 1e-12)


@settings(max_examples=4)
@given(st.floats(min_value=0.1, max_value=10))
def test_bandwidth_scaling_keeps_the_optimum(scale):
    # with the n0 convention the noise power does not depend on W
    cfg = FR2.config(125, 30, noise_convention="n0")
    scaled = cfg.with_(bandwidth=cfg.bandwidth * scale)
    quad = QuadratureSpec(rate_rtol=1e-6, outer_rtol=1e-7, inner_rtol=1e-8)
    a = optimal_n(cfg, quad, (4, 8))
    b = optimal_n(scaled, quad, (4, 8))
    assert a.n_star == b.n_star
    for x, y in zip(a.results, b.results):
        assert math.isclose(y.effective_ase, scale * x.effective_ase, rel_tol=1e-5)


run_configs = st.builds(
    RunConfig,
    band=st.sampled_from(["fr1", "fr2"]),
    isd=st.one_of(st.none(), isds),
    speed_kmh=st.floats(min_value=0, max_value=300),
    n=exponents,
    deployment=st.dictionaries(st.sampled_from(["tx_dbm", "bw_mhz", "qmax_db"]),
                               st.floats(min_value=1, max_value=100), max_size=2),
    tol=st.floats(min_value=1e-9, max_value=1e-2),
    samples=st.integers(min_value=1000, max_value=10**7),
    seed=st.integers(min_value=0, max_value=2**32),
    log_base=st.sampled_from(["nats", "bits"]),
    noise_convention=st.sampled_from(["sigma2", "n0"]),
    out=st.one_of(st.none(), st.sampled_from(["a.csv", "out/b.csv"])),
)


@given(run_configs)
def test_run_config_round_trip(rc):
    assert parse_run_config(dump_run_config(rc)) == rc
