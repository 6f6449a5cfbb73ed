"""Vectorized Gauss-Legendre panel quadrature.

The integrands used in this package are cheap per point but are needed at
many thousands of parameter values at once, so every rule here evaluates a
whole batch of nodes in one call and integrates vector-valued functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


class QuadratureError(ArithmeticError):
    """Adaptive integration exhausted its panel budget.

    ``estimate`` and ``error`` hold the best partial result.
    """

    def __init__(self, message: str, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation rules for the success-probability integrals.

    ``r_max`` defaults to the serving distance whose nearest-BS tail mass is
    ``tail_mass``. Infinite interference tails are handled by integrating in
    ``log w`` and replacing the part beyond ``exp(tail_span / alpha)`` times
    the integrand's knee by its convergent power series. The rate integral is
    taken in ``t = log(1 + z)``, which flattens the ``1/(1+z)`` kernel.
    """

    inner_rtol: float = 1e-7
    outer_rtol: float = 1e-6
    rate_rtol: float = 1e-5
    r_max: float | None = None
    tail_mass: float = 1e-12
    tail_span: float = 8.0
    z_rule: str = "log1p"
    order: int = 8
    max_panels: int = 2000

    def __post_init__(self) -> None:
        for name in ("inner_rtol", "outer_rtol", "rate_rtol"):
            tol = getattr(self, name)
            if not 0 < tol <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {tol}")
        if self.r_max is not None and not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if not 0 < self.tail_mass < 1e-3:
            raise ValueError(f"tail_mass must lie in (0, 1e-3), got {self.tail_mass}")
        if self.z_rule not in ("log1p", "linear"):
            raise ValueError(f"unknown z_rule {self.z_rule!r}")
        if self.order < 2:
            raise ValueError("order must be at least 2")

    def scaled(self, factor: float) -> QuadratureSpec:
        """Same rules with every relative tolerance multiplied by ``factor``."""
        return QuadratureSpec(
            inner_rtol=self.inner_rtol * factor,
            outer_rtol=self.outer_rtol * factor,
            rate_rtol=self.rate_rtol * factor,
            r_max=self.r_max,
            tail_mass=self.tail_mass,
            tail_span=self.tail_span,
            z_rule=self.z_rule,
            order=self.order,
            max_panels=self.max_panels,
        )


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


def fixed_panels(lo, hi, panels: int, order: int):
    """Composite Gauss-Legendre nodes for element-wise intervals.

    ``lo`` and ``hi`` broadcast together to shape ``S``. Returns nodes and
    weights of shape ``S + (panels * order,)`` such that
    ``(f(nodes) * weights).sum(-1)`` integrates over ``[lo, hi]``.
    """
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    x, w = gauss_legendre(order)
    u = ((np.arange(panels)[:, None] + x[None, :]) / panels).ravel()
    wu = np.tile(w, panels) / panels
    span = hi - lo
    return lo + span * u, span * wu


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints,
    rtol: float,
    atol: float = 0.0,
    order: int = 8,
    initial: int = 2,
    max_panels: int = 2000,
):
    """Adaptive bisection for a vector-valued integrand.

    ``f`` maps a 1-D array of ``m`` nodes to an ``(m, k)`` array. Each panel
    is integrated once whole and once as two halves with the same rule; the
    difference is the panel's error estimate and the halves are kept. Panels
    carrying more than their share of the tolerance are split until the
    summed error estimate meets ``max(rtol * |I|, atol)`` componentwise.

    Returns ``(integral, error)``, both of shape ``(k,)``.
    """
    edges = np.asarray(breakpoints, dtype=float)
    lo = np.concatenate([np.linspace(a, b, initial + 1)[:-1] for a, b in zip(edges[:-1], edges[1:]) if b > a])
    hi = np.concatenate([np.linspace(a, b, initial + 1)[1:] for a, b in zip(edges[:-1], edges[1:]) if b > a])
    x, w = gauss_legendre(order)

    def rule(a, b):
        # returns per-interval integrals, shape (len(a), k)
        nodes = (a[:, None] + (b - a)[:, None] * x[None, :]).ravel()
        vals = np.asarray(f(nodes), dtype=float)
        vals = vals.reshape(len(a), len(x), -1)
        return np.einsum("pjk,j->pk", vals, w) * (b - a)[:, None]

    whole = rule(lo, hi)
    mid = 0.5 * (lo + hi)
    halves = rule(np.concatenate([lo, mid]), np.concatenate([mid, hi]))
    n = len(lo)
    left, right = halves[:n], halves[n:]

    while True:
        fine = left + right
        err = np.abs(fine - whole)
        total = fine.sum(axis=0)
        total_err = err.sum(axis=0)
        tol = np.maximum(rtol * np.abs(total), atol)
        tol = np.where(tol > 0, tol, np.finfo(float).tiny)
        if np.all(total_err <= tol):
            return total, total_err
        if len(lo) >= max_panels:
            raise QuadratureError(
                f"adaptive quadrature did not reach rtol={rtol:g} within {max_panels} panels",
                total, total_err,
            )
        share = (err / tol).max(axis=1)
        split = share > 1.0 / len(lo)
        split[np.argmax(share)] = True
        keep = ~split
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_whole = np.concatenate([left[split], right[split]])
        qmid = 0.5 * (new_lo + new_hi)
        m = len(new_lo)
        q = rule(np.concatenate([new_lo, qmid]), np.concatenate([qmid, new_hi]))
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        whole = np.concatenate([whole[keep], new_whole])
        left = np.concatenate([left[keep], q[:m]])
        right = np.concatenate([right[keep], q[m:]])


def power_integral(lo, hi, p: float):
    """``int_lo^hi w**p dw`` element-wise; ``hi`` may be ``inf`` when ``p < -1``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if p == -1.0:
        return np.log(hi / lo)
    q = p + 1.0
    with np.errstate(over="ignore", divide="ignore"):
        top = np.where(np.isinf(hi), 0.0 if q < 0 else np.inf, hi**q)
        return (top - lo**q) / q


def strip_panels(alpha: float, span: float) -> int:
    """Panels in ``log w`` keeping each half-width at or below ``pi / (2 alpha)``.

    The integrand ``w**2 c / (w**alpha + c)`` is analytic in the strip
    ``|Im log w| < pi / alpha``; half-widths of half that distance give
    8-point Gauss-Legendre a convergence factor near 1e-10.
    """
    return max(1, math.ceil(span * alpha / math.pi))
