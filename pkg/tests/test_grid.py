import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracschro.cutoff import symmetric_cutoff
from fracschro.grid import (ConfigError, Field, FieldPath, GridSpec, bessel_multiplier,
                            fit_decay_rate, local_sobolev_seminorm, lp_norm, plane_wave,
                            schrodinger_propagate, sobolev_norm, zero_path)


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return Field(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


GRID = GridSpec(1, 64, 20.0)
GRID2 = GridSpec(2, 16, 10.0)


def test_gridspec_validation():
    with pytest.raises(ConfigError):
        GridSpec(4, 64, 20.0)
    with pytest.raises(ConfigError):
        GridSpec(1, 48, 20.0)  # not a power of two
    with pytest.raises(ConfigError):
        GridSpec(1, 64, -1.0)
    with pytest.raises(ConfigError):
        GridSpec(1, 64, 20.0, M=1)


def test_bessel_identity_at_zero_order():
    f = random_field(GRID)
    g = bessel_multiplier(f, 0.0)
    assert np.array_equal(f.values, g.values)


@pytest.mark.parametrize("grid,k", [(GRID, [3]), (GRID2, [2, -5])])
def test_bessel_eigenfunction(grid, k):
    kvec = 2.0 * math.pi / grid.L * np.asarray(k, dtype=float)
    f = plane_wave(grid, kvec)
    s = 0.8
    g = bessel_multiplier(f, s)
    expect = (1.0 + float(np.sum(kvec**2))) ** (s / 2.0) * f.values
    assert np.max(np.abs(g.values - expect)) < 1e-12


def test_bessel_roundtrip():
    f = random_field(GRID, 3)
    g = bessel_multiplier(bessel_multiplier(f, 1.3), -1.3)
    assert np.max(np.abs(g.values - f.values)) / np.max(np.abs(f.values)) < 1e-12


def test_bessel_group_law():
    f = random_field(GRID, 4)
    a = bessel_multiplier(bessel_multiplier(f, 0.7), -1.9)
    b = bessel_multiplier(f, 0.7 - 1.9)
    assert np.max(np.abs(a.values - b.values)) / np.max(np.abs(b.values)) < 1e-12


def test_sobolev_zero_order_reduces_to_lp():
    f = random_field(GRID, 5)
    for p in (1.0, 2.0, math.inf):
        assert sobolev_norm(f, 0.0, p) == pytest.approx(lp_norm(f, p), rel=1e-13)


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_mode_norm_closed_form(p):
    k = 2.0 * math.pi / GRID.L * 4
    f = plane_wave(GRID, [k])
    s = 1.1
    expect = (1.0 + k**2) ** (s / 2.0)
    if not math.isinf(p):
        expect *= GRID.L ** (1.0 / p)
    assert sobolev_norm(f, s, p) == pytest.approx(expect, rel=1e-12)


def test_sobolev_monotone_in_order():
    for seed in range(100):
        f = random_field(GRID, seed)
        assert sobolev_norm(f, 0.3, 2.0) <= sobolev_norm(f, 0.9, 2.0) * (1 + 1e-12)


def test_parseval():
    f = random_field(GRID, 6)
    grid_norm = lp_norm(f, 2.0)
    coeff = np.fft.fftn(f.values) * grid.cell_volume if (grid := f.grid) else None
    freq_norm = math.sqrt(np.sum(np.abs(coeff) ** 2) * (2.0 * math.pi / f.grid.L) ** f.grid.d) / (
        2.0 * math.pi
    ) ** (f.grid.d / 2.0)
    assert grid_norm == pytest.approx(freq_norm, rel=1e-12)


def test_local_seminorm_trivial_window():
    # rho == 1 on the support of f (f localized well inside the plateau)
    rho = symmetric_cutoff(1, plateau=6.0, support=8.0)
    x = GRID.axis_points()
    x = np.where(x >= GRID.L / 2, x - GRID.L, x)
    f = Field(GRID, np.exp(-(x**2)) + 0j)
    assert local_sobolev_seminorm(f, 0.0, rho) == pytest.approx(lp_norm(f, 2.0), rel=1e-10)
    zero = Field(GRID, np.zeros(GRID.shape, dtype=complex))
    assert local_sobolev_seminorm(zero, 0.7, rho) == 0.0


def test_local_seminorm_dominated():
    rho = symmetric_cutoff(1, plateau=3.0, support=6.0)
    for seed in range(10):
        f = random_field(GRID, seed)
        assert local_sobolev_seminorm(f, 0.8, rho) <= sobolev_norm(f, 0.8, 2.0) * (1 + 1e-12)


def test_propagator_identity_and_unitarity():
    f = random_field(GRID, 7)
    assert np.array_equal(schrodinger_propagate(f, 0.0).values, f.values)
    g = schrodinger_propagate(f, 0.37)
    assert lp_norm(g, 2.0) == pytest.approx(lp_norm(f, 2.0), rel=1e-13)


def test_propagator_group_law():
    f = random_field(GRID, 8)
    a = schrodinger_propagate(schrodinger_propagate(f, 0.2), 0.5)
    b = schrodinger_propagate(f, 0.7)
    assert np.max(np.abs(a.values - b.values)) / np.max(np.abs(b.values)) < 1e-12


def test_propagator_gaussian_closed_form():
    # free evolution of exp(-x^2/2) has the complex-width closed form
    grid = GridSpec(1, 512, 40.0)
    x = grid.axis_points()
    x = np.where(x >= grid.L / 2, x - grid.L, x)
    phi = Field(grid, np.exp(-(x**2) / 2.0) + 0j)
    t = 0.5
    got = schrodinger_propagate(phi, t)
    w = 1.0 - 2.0j * t
    expect = np.exp(-(x**2) / (2.0 * w)) / np.sqrt(w)
    assert np.max(np.abs(got.values - expect)) < 1e-6


def test_fit_decay_rate_exact_and_noisy():
    fit = fit_decay_rate([(n, 2.0**-n) for n in range(3, 9)])
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    fit = fit_decay_rate([(n, 5.0) for n in range(3, 9)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    eps = 0.35
    vals = [(n, 3.0 * 2.0 ** (-2 * eps * n) * (1 + rng.uniform(-0.01, 0.01))) for n in range(2, 10)]
    fit = fit_decay_rate(vals)
    assert abs(fit.slope - (-2 * eps)) < 0.05


def test_fit_decay_rate_rejects_bad_input():
    with pytest.raises(ConfigError):
        fit_decay_rate([(1, 1.0), (2, 0.5)])
    with pytest.raises(ConfigError):
        fit_decay_rate([(1, 1.0), (2, -0.5), (3, 0.1)])


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-1.5, max_value=1.5), st.floats(min_value=-1.5, max_value=1.5))
def test_bessel_group_law_property(s1, s2):
    f = random_field(GRID, 11)
    a = bessel_multiplier(bessel_multiplier(f, s1), s2)
    b = bessel_multiplier(f, s1 + s2)
    assert np.max(np.abs(a.values - b.values)) <= 1e-11 * max(1.0, np.max(np.abs(b.values)))


def test_fieldpath_restrict_and_mismatch():
    times = np.linspace(0.0, 1.0, 5)
    p = zero_path(GRID, times)
    q = p.restricted(3)
    assert len(q) == 3 and q.times[-1] == pytest.approx(0.5)
    other = zero_path(GRID, np.linspace(0.0, 2.0, 5))
    with pytest.raises(ConfigError):
        _ = p + other
