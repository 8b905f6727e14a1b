import math

import numpy as np
import pytest
from scipy import integrate

from fracschro.grid import ConfigError, GridSpec
from fracschro.noise import (HurstIndex, Regime, bn_cell_amplitudes, bn_variance_quadrature,
                             build_cells, classify_regime, evaluate_bn, evaluate_bn_grid,
                             sample_noise)

H55 = HurstIndex(0.5, (0.5,))
H77 = HurstIndex(0.7, (0.7,))


def test_hurst_validation():
    with pytest.raises(ConfigError):
        HurstIndex(1.2, (0.5,))
    with pytest.raises(ConfigError):
        HurstIndex(0.5, ())
    assert HurstIndex(0.7, (0.55,)).alpha_gap == pytest.approx(-0.05)


@pytest.mark.parametrize(
    "h0,hs,expect",
    [
        (0.9, (0.9,), Regime.REGULAR),
        (0.7, (0.55,), Regime.ROUGH_SOLVABLE),
        (0.6, (0.6,), Regime.ROUGH_CONSTRUCTIBLE),
        (0.5, (0.5,), Regime.OUT_OF_SCOPE),
        (0.625, (0.75,), Regime.ROUGH_SOLVABLE),  # gap exactly 0
    ],
)
def test_classify_regime(h0, hs, expect):
    assert classify_regime(HurstIndex(h0, hs)) is expect


def test_cell_volume_tiles_domain():
    for d, H in ((1, H55), (2, HurstIndex(0.5, (0.5, 0.6)))):
        for n in (1, 2, 3):
            cells = build_cells(n, H, cells_per_octave=2)
            expect = 2.0 ** (2 * n + 1) * 2.0 ** ((n + 1) * d)
            assert float(np.sum(cells.volume)) == pytest.approx(expect, rel=1e-12)


def test_cells_nest_across_levels():
    a = build_cells(2, H55, cells_per_octave=2)
    b = build_cells(3, H55, cells_per_octave=2)
    inside = b.in_level(2)
    rows_b = {tuple(np.round(row, 12)) for row in np.c_[b.lows[inside], b.highs[inside]]}
    rows_a = {tuple(np.round(row, 12)) for row in np.c_[a.lows, a.highs]}
    assert rows_a == rows_b


def test_hand_computed_weight():
    # cell [1,2] x [1,2] at H0 = H1 = 0.5: both exponents vanish, weight = 1
    cells = build_cells(1, H55, cells_per_octave=1)
    pick = np.where(
        (np.abs(cells.lows[:, 0] - 1) < 1e-12)
        & (np.abs(cells.highs[:, 0] - 2) < 1e-12)
        & (np.abs(cells.lows[:, 1] - 1) < 1e-12)
        & (np.abs(cells.highs[:, 1] - 2) < 1e-12)
    )[0]
    assert len(pick) == 1
    assert cells.weight[pick[0]] == pytest.approx(1.0, rel=1e-14)


def test_shared_cells_share_gaussians():
    a = build_cells(3, H77, cells_per_octave=2)
    b = build_cells(4, H77, cells_per_octave=2)
    za = sample_noise(42, a)
    zb = sample_noise(42, b)
    inside = b.in_level(3)
    key_to_z = dict(zip(zb.cells.keys[inside], zb.gauss[inside]))
    matched = 0
    for k, z in zip(za.cells.keys, za.gauss):
        if k in key_to_z and np.isclose(abs(key_to_z[k]), abs(z)):
            matched += 1
    # every level-3 cell appears in the level-4 set with the same draw
    for i in range(a.ncells):
        assert za.gauss[i] == key_to_z[a.keys[i]] or za.gauss[i] == np.conj(key_to_z[a.keys[i]])
    assert matched == a.ncells


def test_determinism_and_seed_dependence():
    cells = build_cells(3, H77, cells_per_octave=2)
    z1 = sample_noise(7, cells).gauss
    z2 = sample_noise(7, cells).gauss
    z3 = sample_noise(8, cells).gauss
    assert np.array_equal(z1, z2)
    assert not np.allclose(z1, z3)


def test_gaussian_moments():
    cells = build_cells(4, H55, cells_per_octave=2)
    zs = np.stack([sample_noise(s, cells).gauss for s in range(400)])
    var = np.mean(np.abs(zs) ** 2)
    # complex standard: E|z|^2 = 1; stderr of the pooled estimate
    se = 1.0 / math.sqrt(zs.size)
    assert abs(var - 1.0) < 5 * se


def test_sheet_is_real_via_hermitian_pairing():
    cells = build_cells(3, H55, cells_per_octave=2)
    real = sample_noise(11, cells)
    amp = bn_cell_amplitudes(cells, 0.8, np.array([1.3]))
    total = np.sum(amp * real.gauss)
    assert abs(total.imag) <= 1e-12 * max(abs(total.real), 1e-30)


def test_sheet_vanishes_on_axes():
    cells = build_cells(3, H55, cells_per_octave=2)
    real = sample_noise(11, cells)
    assert evaluate_bn(real, 0.0, [1.0]) == 0.0
    assert evaluate_bn(real, 0.7, [0.0]) == 0.0


def test_variance_against_separable_quadrature():
    # independent oracle: the truncated spectral density factorizes per axis
    H, n, t, x = H55, 3, 1.0, 1.0

    def axis_integral(theta, hurst, bound):
        f = lambda w: (2.0 - 2.0 * math.cos(theta * w)) * w ** (-2.0 * hurst - 1.0)
        val, _ = integrate.quad(f, 0.0, bound, limit=400)
        return 2.0 * val  # even integrand

    expect = axis_integral(t, H.h0, 4.0**n) * axis_integral(x, H.hspace[0], 2.0**n)
    got = bn_variance_quadrature(H, n, t, [x], cells_per_octave=2)
    assert got == pytest.approx(expect, rel=1e-7)


def test_monte_carlo_variance_matches_quadrature():
    H, n = H55, 4
    cells = build_cells(n, H, cells_per_octave=4)
    amp = bn_cell_amplitudes(cells, 1.0, np.array([1.0]))
    nreal = 5000
    vals = np.empty(nreal)
    for s in range(nreal):
        vals[s] = np.real(np.sum(amp * sample_noise(s, cells).gauss))
    var = np.var(vals)
    se = var * math.sqrt(2.0 / nreal)
    expect = bn_variance_quadrature(H, n, 1.0, [1.0], cells_per_octave=4)
    assert abs(var - expect) < 4 * se


def test_variance_monotone_in_level():
    vals = [bn_variance_quadrature(H77, n, 1.0, [1.5], cells_per_octave=2) for n in (2, 3, 4)]
    assert vals[0] < vals[1] < vals[2]


def test_level_difference_lives_on_annulus():
    cells4 = build_cells(4, H77, cells_per_octave=2)
    real4 = sample_noise(5, cells4)
    cells3 = build_cells(3, H77, cells_per_octave=2)
    real3 = sample_noise(5, cells3)
    t, x = 0.9, [1.2]
    diff = evaluate_bn(real4, t, x) - evaluate_bn(real3, t, x)
    annulus_only = real4.with_cells_zeroed(cells4.in_level(3))
    assert evaluate_bn(annulus_only, t, x) == pytest.approx(diff, rel=1e-10, abs=1e-12)


def test_grid_evaluation_matches_pointwise():
    grid = GridSpec(1, 64, 20.0)
    cells = build_cells(2, H77, grid, cells_per_octave=2)
    real = sample_noise(3, cells)
    vals = evaluate_bn_grid(real, 0.6, grid)
    x = grid.axis_points()
    x = np.where(x >= grid.L / 2, x - grid.L, x)
    for j in (0, 5, 17, 40, 63):
        assert vals[j] == pytest.approx(evaluate_bn(real, 0.6, [x[j]]), rel=1e-10, abs=1e-12)


def test_build_cells_validates_nyquist():
    grid = GridSpec(1, 64, 20.0)  # nyquist ~ 10
    with pytest.raises(ConfigError):
        build_cells(4, H77, grid)
