"""Success probability and capped ergodic rate of the typical MT.

The conditional success probability given the serving gain is a double
integral: an outer average over the nearest-BS distance and, inside it, the
log-Laplace transform of the interference, which is the integral of
:func:`interference_factor` over interferer distances. Both are evaluated
for a whole vector of SINR thresholds at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .config import BeamSetting, DerivedConstants, NetworkConfig
from .mobility import misalignment_probability
from .quadrature import (
    QuadratureSpec,
    fixed_panels,
    integrate_adaptive,
    strip_panels,
)

DEFAULT_QUAD = QuadratureSpec()
LOG_BASES = ("nats", "bits")


@dataclass(frozen=True)
class SuccessCurve:
    n: int
    thresholds: tuple[float, ...]
    values: tuple[float, ...]


def interference_factor(alpha_s, alpha_i, w, r, beta, g0, beams: BeamSetting, lam: float):
    """Integrand of the interference exponent at interferer distance ``w``.

    ``2 pi lam w (1 - p/(1 + beta r^aS G_m/(G0 w^aI)) - (1-p)/(1 + beta r^aS G_s/(G0 w^aI)))``
    with ``p`` the main-lobe hit probability. Evaluated as
    ``p x_m/(1+x_m) + (1-p) x_s/(1+x_s)`` in log space, which avoids the
    cancellation of the literal form when ``x`` is small.
    """
    w = np.asarray(w, dtype=float)
    log_x = (
        np.log(beta) + alpha_s * np.log(r) - np.log(g0) - alpha_i * np.log(w)
    )
    p = beams.main_lobe_prob
    bracket = p * expit(log_x + math.log(beams.gain_main)) + (1 - p) * expit(log_x + math.log(beams.gain_side))
    return 2 * math.pi * lam * bracket * w


def _series_terms(lo, hi, w0, alpha: float, sign: int, terms: int = 3):
    """Sum over k of ``int w (w/w0)^(sign*k*alpha) dw`` with alternating signs.

    ``sign=+1`` is the small-``w`` expansion of ``w c/(w^a + c)``; ``sign=-1``
    the large-``w`` one, where ``c = w0**alpha``.
    """
    total = np.zeros(np.broadcast(lo, hi, w0).shape)
    for k in range(terms):
        if sign > 0:
            e = k * alpha
        else:
            e = -(k + 1) * alpha
        coef = (-1.0) ** k
        if e + 2 == 0:
            piece = w0**2 * np.log(hi / lo)
        else:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                top = np.where(np.isinf(hi), 0.0, hi**2 * (hi / w0) ** e)
                bottom = lo**2 * (lo / w0) ** e
            piece = (top - bottom) / (e + 2)
        total = total + coef * np.where(hi > lo, piece, 0.0)
    return total


def lobe_integral(c, lo, hi, alpha: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``int_lo^hi w c / (w**alpha + c) dw`` element-wise for arrays ``c, lo, hi``.

    ``hi`` may be infinite when ``alpha > 2``. Integration runs in ``log w``
    around the knee ``w0 = c**(1/alpha)``; the head below
    ``w0 exp(-span/alpha)`` and the tail above ``w0 exp(span/alpha)`` use
    three-term power series whose truncation error is below ``exp(-3 span)``.
    """
    c, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (c, lo, hi)))
    w0 = c ** (1.0 / alpha)
    reach = math.exp(quad.tail_span / alpha)
    a = np.clip(w0 / reach, lo, hi)
    b = np.clip(w0 * reach, lo, hi)
    head = _series_terms(lo, a, w0, alpha, +1)
    tail = _series_terms(b, hi, w0, alpha, -1)

    panels = strip_panels(alpha, 2 * quad.tail_span / alpha)
    if quad.inner_rtol < 1e-9:
        panels *= 2
    with np.errstate(divide="ignore"):
        ya, yb = np.log(a), np.log(b)
    ya = np.where(np.isfinite(ya), ya, yb)
    y, wy = fixed_panels(ya, yb, panels, quad.order)
    log_c = np.log(c)[..., None]
    middle = (np.exp(2 * y) * expit(log_c - alpha * y) * wy).sum(axis=-1)
    return head + middle + tail


def interference_exponent(cfg: NetworkConfig, beams: BeamSetting, r, beta, g0: float,
                          quad: QuadratureSpec = DEFAULT_QUAD):
    """Integral of :func:`interference_factor` over interferers beyond ``r``.

    ``r`` and ``beta`` broadcast. Serving links shorter than the LOS radius
    use the LOS exponent and see LOS interferers up to the LOS radius and
    NLOS ones beyond it; longer serving links see NLOS interferers only.
    """
    r, beta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(beta, dtype=float))
    rc = cfg.los_radius
    los = r < rc
    alpha_s = np.where(los, cfg.alpha_los, cfg.alpha_nlos)
    scale = beta * r**alpha_s / g0
    p = beams.main_lobe_prob
    out = np.zeros(r.shape)
    for gain, weight in ((beams.gain_main, p), (beams.gain_side, 1 - p)):
        c = scale * gain
        part = np.zeros(r.shape)
        if np.any(los):
            cl, rl = c[los], r[los]
            part[los] = (
                lobe_integral(cl, rl, rc, cfg.alpha_los, quad)
                + lobe_integral(cl, rc, np.inf, cfg.alpha_nlos, quad)
            )
        nl = ~los
        if np.any(nl):
            part[nl] = lobe_integral(c[nl], r[nl], np.inf, cfg.alpha_nlos, quad)
        out += weight * part
    return 2 * math.pi * cfg.lam * out


def _outer_limit(cfg: NetworkConfig, quad: QuadratureSpec) -> float:
    """Scaled outer truncation ``u_max = r_max sqrt(pi lam)``."""
    if quad.r_max is not None:
        return quad.r_max * math.sqrt(math.pi * cfg.lam)
    return math.sqrt(-math.log(quad.tail_mass))


def conditional_success_with_error(cfg: NetworkConfig, beams: BeamSetting, beta, g0: float,
                                   quad: QuadratureSpec = DEFAULT_QUAD):
    """Conditional success probability and its quadrature error estimate.

    The outer integral runs over ``u = r sqrt(pi lam)``, for which the
    nearest-BS density becomes ``2 u exp(-u^2)``, with a breakpoint at the
    LOS radius.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if np.any(beta <= 0):
        raise ValueError("SINR thresholds must be positive")
    if not g0 > 0:
        raise ValueError(f"serving gain must be positive, got {g0}")
    consts = DerivedConstants.from_config(cfg)
    noise_scale = consts.noise_power / (cfg.tx_power * consts.path_const * g0)
    root = math.sqrt(math.pi * cfg.lam)
    u_max = _outer_limit(cfg, quad)
    u_c = min(cfg.los_radius * root, u_max)

    def integrand(u):
        r = u / root
        alpha_s = np.where(r < cfg.los_radius, cfg.alpha_los, cfg.alpha_nlos)[:, None]
        rr = r[:, None]
        noise = beta[None, :] * rr**alpha_s * noise_scale
        expo = interference_exponent(cfg, beams, rr, beta[None, :], g0, quad)
        return (2 * u * np.exp(-u * u))[:, None] * np.exp(-noise - expo)

    edges = [0.0, u_c, u_max] if u_c > 0 else [0.0, u_max]
    value, err = integrate_adaptive(
        integrand, edges, rtol=quad.outer_rtol, atol=quad.outer_rtol * 1e-2,
        order=quad.order, max_panels=quad.max_panels,
    )
    return np.clip(value, 0.0, 1.0), err


def conditional_success(cfg: NetworkConfig, beams: BeamSetting, beta, g0: float,
                        quad: QuadratureSpec = DEFAULT_QUAD):
    """P(SINR > beta | serving gain g0); scalar in, scalar out."""
    value, _ = conditional_success_with_error(cfg, beams, beta, g0, quad)
    return float(value[0]) if np.ndim(beta) == 0 else value


def success_probability(cfg: NetworkConfig, beams: BeamSetting, beta,
                        quad: QuadratureSpec = DEFAULT_QUAD, p_bm: float | None = None):
    """Mixture over the serving gain: main lobe w.p. ``1 - p_bm``, side lobe otherwise."""
    if p_bm is None:
        p_bm = misalignment_probability(cfg, beams)
    main = conditional_success(cfg, beams, beta, beams.gain_main, quad)
    if p_bm == 0:
        return main
    side = conditional_success(cfg, beams, beta, beams.gain_side, quad)
    return (1 - p_bm) * main + p_bm * side


def success_curve(cfg: NetworkConfig, beams: BeamSetting, thresholds,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> SuccessCurve:
    values = np.atleast_1d(success_probability(cfg, beams, np.asarray(thresholds, dtype=float), quad))
    return SuccessCurve(
        n=beams.n,
        thresholds=tuple(float(b) for b in np.atleast_1d(thresholds)),
        values=tuple(float(v) for v in values),
    )


def rate_from_success(success, cap: float, bandwidth: float, rtol: float = 1e-5,
                      z_rule: str = "log1p", order: int = 8, max_panels: int = 2000):
    """``bandwidth * int_0^cap success(z) / (1 + z) dz`` in nats/s.

    ``success`` maps a 1-D array of thresholds to success probabilities.
    With ``z_rule='log1p'`` the integral is taken in ``t = log(1 + z)``.
    Returns ``(rate, error)``.
    """
    if not cap > 0:
        raise ValueError(f"SINR cap must be positive, got {cap}")
    if z_rule == "log1p":
        def f(t):
            return np.asarray(success(np.expm1(t)), dtype=float)[:, None]
        upper = math.log1p(cap)
    else:
        def f(z):
            return (np.asarray(success(z), dtype=float) / (1 + z))[:, None]
        upper = cap
    value, err = integrate_adaptive(f, [0.0, upper], rtol=rtol, atol=rtol * 1e-3 * upper,
                                    order=order, max_panels=max_panels)
    return bandwidth * float(value[0]), bandwidth * float(err[0])


def ergodic_rate(cfg: NetworkConfig, beams: BeamSetting, quad: QuadratureSpec = DEFAULT_QUAD,
                 log_base: str = "nats", p_bm: float | None = None, full_output: bool = False):
    """Capped ergodic Shannon rate ``W E[log(1 + min(SINR, Q_max))]``.

    Natural-log units by default; ``log_base='bits'`` divides by ``ln 2``.
    With ``full_output`` the quadrature error estimate is returned as well.
    """
    if log_base not in LOG_BASES:
        raise ValueError(f"log_base must be one of {LOG_BASES}, got {log_base!r}")
    if p_bm is None:
        p_bm = misalignment_probability(cfg, beams)

    def success(z):
        z = np.maximum(z, np.finfo(float).tiny)
        return success_probability(cfg, beams, z, quad, p_bm=p_bm)

    rate, err = rate_from_success(success, cfg.sinr_cap, cfg.bandwidth, rtol=quad.rate_rtol,
                                  z_rule=quad.z_rule, order=quad.order,
                                  max_panels=quad.max_panels)
    if log_base == "bits":
        rate, err = rate / math.log(2), err / math.log(2)
    return (rate, err) if full_output else rate
