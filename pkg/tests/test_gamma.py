import math

import numpy as np
import pytest

from fracschro.gamma import (corollary_integral, gamma, gamma_defining_quadrature,
                             gamma_increment, gamma_sq_modulus, verify_gamma_bounds)


def test_value_at_origin():
    # integrand is identically 1 over [0, 1]
    assert complex(gamma(1.0, 0.0, 0.0)) == pytest.approx(1.0 + 0.0j, abs=1e-14)


def test_exact_resonance():
    t, xi = 0.8, 3.0
    got = complex(gamma(t, xi, math.sqrt(xi)))
    assert got == pytest.approx(np.exp(1j * xi * t) * t, abs=1e-14)


def test_against_defining_quadrature_spot():
    got = complex(gamma(1.0, 2.0, 1.0))
    ref = gamma_defining_quadrature(1.0, 2.0, 1.0)
    assert abs(got - ref) <= 1e-10 * abs(ref)


def test_against_defining_quadrature_random():
    rng = np.random.default_rng(7)
    for _ in range(200):
        t = rng.uniform(0.0, 2.0)
        xi = rng.uniform(-60.0, 60.0)
        r = rng.uniform(0.0, 7.0)
        got = complex(gamma(t, xi, r))
        ref = gamma_defining_quadrature(t, xi, r)
        assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-14)


def test_branch_agreement_at_guard():
    # the two evaluation branches agree where the guard switches
    rng = np.random.default_rng(1)
    for mag in (1e-3 * (1 - 1e-3), 1e-3 * (1 + 1e-3)):
        for _ in range(100):
            z = mag * np.exp(1j * rng.uniform(0, 2 * math.pi))
            taylor = 1 + z / 2 + z**2 / 6 + z**3 / 24
            closed = (np.exp(z) - 1) / z
            assert abs(taylor - closed) < 1e-9


def test_increment_properties():
    assert complex(gamma_increment(0.7, 0.7, 2.0, 1.0)) == 0.0
    assert complex(gamma_increment(0.0, 0.7, 2.0, 1.0)) == complex(gamma(0.7, 2.0, 1.0))
    with pytest.raises(ValueError):
        gamma_increment(0.8, 0.7, 2.0, 1.0)
    rng = np.random.default_rng(2)
    for _ in range(25):
        s = rng.uniform(0, 0.5)
        t = s + rng.uniform(0.1, 1.0)
        xi, r = rng.uniform(-30, 30), rng.uniform(0, 5)
        got = complex(gamma_increment(s, t, xi, r))
        ref = gamma_defining_quadrature(t, xi, r) - gamma_defining_quadrature(s, xi, r)
        assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-12)


def test_sq_modulus():
    t, xi = 0.9, 4.0
    assert float(gamma_sq_modulus(t, xi, math.sqrt(xi))) == pytest.approx(t**2, rel=1e-14)
    assert float(gamma_sq_modulus(0.0, 3.0, 1.0)) == 0.0
    rng = np.random.default_rng(3)
    ts = rng.uniform(0, 2, 1000)
    xis = rng.uniform(-100, 100, 1000)
    rs = rng.uniform(0, 10, 1000)
    assert np.max(np.abs(np.abs(gamma(ts, xis, rs)) ** 2 - gamma_sq_modulus(ts, xis, rs))) < 1e-12


def test_modulus_bounded_by_t():
    rng = np.random.default_rng(4)
    ts = rng.uniform(0, 3, 2000)
    xis = rng.uniform(-1e4, 1e4, 2000)
    rs = rng.uniform(0, 60, 2000)
    assert np.all(np.abs(gamma(ts, xis, rs)) <= ts * (1 + 1e-12) + 1e-15)


def test_bound_report_finite_at_zero_exponents():
    rep = verify_gamma_bounds(500, kappa=0.0, lam=0.0, T=1.0, seed=0)
    assert np.isfinite(rep.min_bound_constant)
    assert rep.min_bound_constant < 50.0


def test_bound_constant_mild_in_horizon():
    c1 = verify_gamma_bounds(500, 0.4, 0.5, T=1.0, seed=1).min_bound_constant
    c2 = verify_gamma_bounds(500, 0.4, 0.5, T=2.0, seed=1).min_bound_constant
    assert c2 <= 8.0 * c1 and c1 <= 8.0 * c2


def test_parameter_validation():
    with pytest.raises(ValueError):
        verify_gamma_bounds(10, kappa=1.5, lam=0.0)
    with pytest.raises(ValueError):
        verify_gamma_bounds(10, kappa=0.3, lam=0.0, corollary_samples=2, H=0.2)


def test_corollary_ratio_bounded_in_r():
    # fixed increment, growing radial frequency: the envelope absorbs the decay
    s, t, H, eps, kappa = 0.2, 0.9, 0.6, 0.1, 0.15
    rows = []
    for r in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0):
        val = corollary_integral(s, t, H, r)
        env = (t - s) ** (2 * kappa) / (1.0 + r ** (4 * (H - kappa) - 2 - 2 * eps))
        rows.append((math.log(r), math.log(val / env)))
    xs = np.array([a for a, _ in rows])
    ys = np.array([b for _, b in rows])
    slope = np.polyfit(xs, ys, 1)[0]
    assert slope < 0.1  # no growth trend
    assert all(np.isfinite(ys))


def test_corollary_requires_separated_times():
    with pytest.raises(ValueError):
        corollary_integral(0.5, 0.5005, 0.6, 1.0)
