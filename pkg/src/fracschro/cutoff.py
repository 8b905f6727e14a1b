"""Smooth compactly-supported cut-offs in product form.

rho(x) = rho_1(x_1) ... rho_d(x_d), each factor a plateau bump built from
the standard exp(-1/r) transition, so rho == 1 on its plateau, vanishes
outside its support, and is C-infinity in between.  Spectral decay of the
profile keeps multiplier products alias-safe at the grid sizes used here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import ConfigError, GridSpec


def _smoothstep(r: np.ndarray) -> np.ndarray:
    """C-infinity monotone step: 0 for r <= 0, 1 for r >= 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = (r > 0) & (r < 1)
    ri = r[inside]
    a = np.exp(-1.0 / ri)
    b = np.exp(-1.0 / (1.0 - ri))
    out[inside] = a / (a + b)
    out[r >= 1] = 1.0
    return out


@dataclass(frozen=True)
class BumpAxis:
    """One-dimensional plateau bump: 1 on |x-center| <= plateau, 0 outside support."""

    center: float
    plateau: float
    support: float

    def __post_init__(self):
        if not (0 < self.plateau < self.support):
            raise ConfigError(
                f"need 0 < plateau < support, got plateau={self.plateau}, support={self.support}"
            )

    def sample(self, x: np.ndarray) -> np.ndarray:
        r = (self.support - np.abs(np.asarray(x, dtype=float) - self.center)) / (
            self.support - self.plateau
        )
        return _smoothstep(r)


@dataclass(frozen=True)
class CutoffSpec:
    """Product-form cut-off, one BumpAxis per space dimension."""

    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        for a in self.axes:
            if not isinstance(a, BumpAxis):
                raise ConfigError("CutoffSpec axes must be BumpAxis instances")

    @property
    def d(self) -> int:
        return len(self.axes)

    def support_radius(self) -> float:
        return max(abs(a.center) + a.support for a in self.axes)

    def plateau_radius(self) -> float:
        return min(a.plateau - abs(a.center) for a in self.axes)

    def inside_plateau_of(self, outer: "CutoffSpec") -> bool:
        """True when this cut-off's support sits strictly inside outer's plateau."""
        if outer.d != self.d:
            return False
        return all(
            abs(a.center) + a.support < outer.axes[i].plateau - abs(outer.axes[i].center)
            for i, a in enumerate(self.axes)
        )

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        return _evaluate_cached(self, grid)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points given as an array with last axis of size d."""
        x = np.asarray(x, dtype=float)
        if self.d == 1 and x.ndim <= 1:
            return self.axes[0].sample(x)
        out = np.ones(x.shape[:-1])
        for i, axis in enumerate(self.axes):
            out = out * axis.sample(x[..., i])
        return out


@lru_cache(maxsize=64)
def _evaluate_cached(spec: CutoffSpec, grid: GridSpec) -> np.ndarray:
    if spec.d != grid.d:
        raise ConfigError(f"cut-off dimension {spec.d} does not match grid dimension {grid.d}")
    # the box is centered at 0 via periodic wrapping: fold x into [-L/2, L/2)
    x = grid.axis_points()
    x = np.where(x >= grid.L / 2, x - grid.L, x)
    for axis in spec.axes:
        if abs(axis.center) + axis.support >= grid.L / 2:
            raise ConfigError(
                f"cut-off support reaches the box boundary (extent {abs(axis.center) + axis.support} "
                f">= L/2 = {grid.L / 2})"
            )
    out = np.ones(grid.shape)
    for i, axis in enumerate(spec.axes):
        shape = [1] * grid.d
        shape[i] = grid.N
        out = out * axis.sample(x).reshape(shape)
    out.setflags(write=False)
    return out


def symmetric_cutoff(d: int, plateau: float, support: float) -> CutoffSpec:
    """Centered product bump with identical axes."""
    return CutoffSpec(tuple(BumpAxis(0.0, plateau, support) for _ in range(d)))
