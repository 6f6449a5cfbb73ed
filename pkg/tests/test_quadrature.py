import math

import numpy as np
import pytest

from beamase.quadrature import (
    QuadratureError,
    QuadratureSpec,
    fixed_panels,
    gauss_legendre,
    integrate_adaptive,
    power_integral,
    strip_panels,
)


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(8)
    for deg in range(16):
        assert (w * x**deg).sum() == pytest.approx(1 / (deg + 1), rel=1e-13)


def test_fixed_panels_broadcast():
    lo = np.array([0.0, 1.0])
    hi = np.array([1.0, 3.0])
    x, w = fixed_panels(lo, hi, 3, 6)
    assert x.shape == (2, 18)
    np.testing.assert_allclose((np.exp(x) * w).sum(-1), np.exp(hi) - np.exp(lo), rtol=1e-13)


def test_adaptive_vector_integrand():
    def f(x):
        return np.stack([np.sin(x), np.exp(-x), 1 / np.sqrt(x + 1e-3)], axis=1)

    val, err = integrate_adaptive(f, [0.0, 1.0, math.pi], rtol=1e-10)
    exact = [2.0, 1 - math.exp(-math.pi), 2 * (math.sqrt(math.pi + 1e-3) - math.sqrt(1e-3))]
    np.testing.assert_allclose(val, exact, rtol=1e-9)
    assert np.all(err <= 1e-10 * np.abs(val) + 1e-300)


def test_adaptive_budget_exhaustion():
    with pytest.raises(QuadratureError) as info:
        integrate_adaptive(lambda x: (1 / np.sqrt(x))[:, None], [0.0, 1.0], rtol=1e-14, max_panels=8)
    assert info.value.estimate.shape == (1,)


def test_power_integral():
    assert power_integral(1.0, 2.0, 2.0) == pytest.approx(7 / 3)
    assert power_integral(1.0, np.inf, -3.0) == pytest.approx(0.5)
    assert power_integral(1.0, math.e, -1.0) == pytest.approx(1.0)


def test_strip_panels():
    assert strip_panels(3.5, 0.1) == 1
    assert strip_panels(2.0, 10 * math.pi) == 20


@pytest.mark.parametrize("changes", [dict(inner_rtol=0), dict(outer_rtol=0.1), dict(r_max=-1.0),
                                     dict(tail_mass=0.5), dict(z_rule="cubic"), dict(order=1)])
def test_spec_validation(changes):
    with pytest.raises(ValueError):
        QuadratureSpec(**changes)


def test_spec_scaled():
    q = QuadratureSpec().scaled(0.5)
    assert (q.inner_rtol, q.outer_rtol, q.rate_rtol) == (5e-8, 5e-7, 5e-6)
