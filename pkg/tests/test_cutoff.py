import numpy as np
import pytest

from fracschro.cutoff import BumpAxis, CutoffSpec, symmetric_cutoff
from fracschro.grid import ConfigError, GridSpec


def test_plateau_and_support():
    rho = symmetric_cutoff(1, plateau=2.0, support=4.0)
    x = np.array([-5.0, -4.0, -2.0, 0.0, 1.9, 2.0, 3.0, 4.0, 6.0])
    vals = rho(x)
    assert np.all(vals[np.abs(x) <= 2.0] == 1.0)
    assert np.all(vals[np.abs(x) >= 4.0] == 0.0)
    assert np.all((vals >= 0) & (vals <= 1))
    assert vals[x == 3.0][0] not in (0.0, 1.0)


def test_product_form():
    rho = symmetric_cutoff(2, plateau=1.5, support=3.0)
    grid = GridSpec(2, 32, 16.0)
    vals = rho.evaluate(grid)
    x = grid.axis_points()
    x = np.where(x >= grid.L / 2, x - grid.L, x)
    one_d = rho.axes[0].sample(x)
    assert np.allclose(vals, np.outer(one_d, one_d))


def test_spectral_decay():
    # smooth profile: coefficients keep dropping by orders of magnitude
    rho = symmetric_cutoff(1, plateau=2.5, support=4.0)
    grid = GridSpec(1, 1024, 40.0)
    coeff = np.abs(np.fft.fft(rho.evaluate(grid))) / grid.N
    assert coeff[grid.N // 8] < 1e-4
    assert coeff[grid.N // 4] < 1e-6
    assert np.max(coeff[3 * grid.N // 8 : grid.N // 2]) < 1e-7


def test_support_must_fit_box():
    rho = symmetric_cutoff(1, plateau=6.0, support=11.0)
    with pytest.raises(ConfigError):
        rho.evaluate(GridSpec(1, 64, 20.0))


def test_validation():
    with pytest.raises(ConfigError):
        BumpAxis(0.0, 3.0, 2.0)
    chi = symmetric_cutoff(1, 1.0, 2.0)
    rho = symmetric_cutoff(1, 2.5, 4.0)
    assert chi.inside_plateau_of(rho)
    assert not rho.inside_plateau_of(chi)
