"""Periodic-box spectral infrastructure.

A large periodic box of side L stands in for full space: every field the
lab manipulates is compactly supported well inside the box (all equation
terms carry a cut-off), so wrap-around interactions stay below roundoff
once L exceeds a few support diameters.

Conventions, fixed here and inherited by every other module:

* spatial grid: x_j = j * L / N, j = 0..N-1 per axis, row-major axis order;
* frequency lattice: 2*pi/L * {-N/2, ..., N/2 - 1} per axis, stored in
  ``numpy.fft`` order;
* forward transform = continuum integral against exp(-i<x, xi>), so the
  DFT approximates it up to the quadrature weight (L/N)^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class ConfigError(ValueError):
    """Raised when a grid / experiment configuration violates a contract."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: d dimensions, N points per axis, box side L.

    T and M describe the uniform time grid [0, T] with M nodes that
    time-dependent paths on this grid use.
    """

    d: int
    N: int
    L: float
    T: float = 1.0
    M: int = 2

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ConfigError(f"d must be 1, 2 or 3, got {self.d}")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ConfigError(f"N must be a power of two >= 8, got {self.N}")
        if not (self.L > 0):
            raise ConfigError(f"L must be positive, got {self.L}")
        if not (self.T > 0):
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.M < 2:
            raise ConfigError(f"M must be >= 2, got {self.M}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return (self.L / self.N) ** self.d

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def nyquist(self) -> float:
        """Largest resolved frequency magnitude per axis, pi*N/L."""
        return math.pi * self.N / self.L

    def axis_points(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    def axis_frequencies(self) -> np.ndarray:
        """1-d frequency lattice in fft order."""
        return 2.0 * math.pi * np.fft.fftfreq(self.N, d=self.dx / (2.0 * math.pi)) / (2.0 * math.pi)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M)


@lru_cache(maxsize=32)
def _freq_meshes(grid: GridSpec) -> tuple:
    k = 2.0 * math.pi * np.fft.fftfreq(grid.N, d=grid.dx)
    axes = np.meshgrid(*([k] * grid.d), indexing="ij")
    return tuple(a.copy() for a in axes)


@lru_cache(maxsize=32)
def _freq_sq(grid: GridSpec) -> np.ndarray:
    meshes = _freq_meshes(grid)
    out = np.zeros(grid.shape)
    for a in meshes:
        out += a * a
    return out


@dataclass
class Field:
    """Complex field values on the spatial grid of ``grid``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ConfigError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        self.values = vals

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)

    def __mul__(self, a) -> "Field":
        return Field(self.grid, self.values * a)

    __rmul__ = __mul__


def zero_field(grid: GridSpec) -> Field:
    return Field(grid, np.zeros(grid.shape, dtype=np.complex128))


def plane_wave(grid: GridSpec, kvec) -> Field:
    """exp(i<k, x>) for a lattice frequency k (given in physical units)."""
    kvec = np.atleast_1d(np.asarray(kvec, dtype=float))
    if kvec.shape != (grid.d,):
        raise ConfigError(f"kvec must have {grid.d} components")
    x = grid.axis_points()
    phase = np.zeros(grid.shape)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.N
        phase = phase + kvec[axis] * x.reshape(shape)
    return Field(grid, np.exp(1j * phase))


def bessel_multiplier(f: Field, s: float) -> Field:
    """Apply the Fourier multiplier (1 + |xi|^2)^(s/2)."""
    if s == 0.0:
        return f.copy()
    mult = (1.0 + _freq_sq(f.grid)) ** (0.5 * s)
    return Field(f.grid, np.fft.ifftn(mult * np.fft.fftn(f.values)))


def lp_norm(f: Field, p: float) -> float:
    """Grid-quadrature L^p norm; p = inf is the grid max modulus."""
    mags = np.abs(f.values)
    if np.isinf(p):
        return float(mags.max())
    if p <= 0:
        raise ConfigError(f"p must be in [1, inf], got {p}")
    return float((np.sum(mags**p) * f.grid.cell_volume) ** (1.0 / p))


def sobolev_norm(f: Field, s: float, p: float = 2.0) -> float:
    """W^{s,p} norm: L^p norm of the Bessel multiplier applied to f."""
    return lp_norm(bessel_multiplier(f, s), p)


def local_sobolev_seminorm(f: Field, s: float, rho) -> float:
    """L^2 norm of rho * (id - Laplacian)^{s/2} f, rho a cut-off."""
    g = bessel_multiplier(f, s)
    window = rho.evaluate(f.grid)
    return float(
        np.sqrt(np.sum(np.abs(window * g.values) ** 2) * f.grid.cell_volume)
    )


def schrodinger_propagate(f: Field, t: float) -> Field:
    """Free propagator: frequency coefficients multiplied by exp(i t |xi|^2)."""
    if t == 0.0:
        return f.copy()
    mult = np.exp(1j * t * _freq_sq(f.grid))
    return Field(f.grid, np.fft.ifftn(mult * np.fft.fftn(f.values)))


@dataclass
class DecayFit:
    """Least-squares fit of log2(value) against the level index."""

    slope: float
    intercept: float
    residual: float
    slope_se: float


def fit_decay_rate(values) -> DecayFit:
    """OLS of log2(value) vs level n for a sequence of (n, value) pairs.

    The slope sign is the convergence verdict: negative slope means the
    values decay (roughly) like 2^(slope * n).
    """
    pts = [(float(n), float(v)) for n, v in values]
    if len(pts) < 3:
        raise ConfigError("need at least 3 points to fit a decay rate")
    if any(v <= 0 for _, v in pts):
        raise ConfigError("all values must be positive")
    ns = np.array([n for n, _ in pts])
    ys = np.log2([v for _, v in pts])
    A = np.vstack([ns, np.ones_like(ns)]).T
    coef, _, _, _ = np.linalg.lstsq(A, ys, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = ys - (slope * ns + intercept)
    rss = float(np.sum(resid**2))
    dof = len(pts) - 2
    sxx = float(np.sum((ns - ns.mean()) ** 2))
    se = math.sqrt(rss / dof / sxx) if dof > 0 else float("nan")
    return DecayFit(slope, intercept, math.sqrt(rss), se)


@dataclass
class FieldPath:
    """Field values on (time nodes) x (spatial grid).

    ``values`` has shape (M,) + grid.shape with time as the leading axis.
    """

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (len(self.times),) + self.grid.shape:
            raise ConfigError(
                f"path shape {vals.shape} does not match {len(self.times)} times on grid {self.grid.shape}"
            )
        self.values = vals

    def __len__(self) -> int:
        return len(self.times)

    def field(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def copy(self) -> "FieldPath":
        return FieldPath(self.grid, self.times.copy(), self.values.copy())

    def restricted(self, n_nodes: int) -> "FieldPath":
        """First n_nodes time nodes (used by the solver's horizon halving)."""
        if not (2 <= n_nodes <= len(self.times)):
            raise ConfigError(f"cannot restrict path of length {len(self.times)} to {n_nodes} nodes")
        return FieldPath(self.grid, self.times[:n_nodes], self.values[:n_nodes])

    def __add__(self, other: "FieldPath") -> "FieldPath":
        _check_same_nodes(self, other)
        return FieldPath(self.grid, self.times, self.values + other.values)

    def __sub__(self, other: "FieldPath") -> "FieldPath":
        _check_same_nodes(self, other)
        return FieldPath(self.grid, self.times, self.values - other.values)

    def __mul__(self, a) -> "FieldPath":
        return FieldPath(self.grid, self.times, self.values * a)

    __rmul__ = __mul__


def _check_same_nodes(a: FieldPath, b: FieldPath):
    if a.grid != b.grid or len(a.times) != len(b.times) or not np.array_equal(a.times, b.times):
        raise ConfigError("field paths live on different time grids")


def zero_path(grid: GridSpec, times) -> FieldPath:
    times = np.asarray(times, dtype=float)
    return FieldPath(grid, times, np.zeros((len(times),) + grid.shape, dtype=np.complex128))
