"""Canonical desk-scale configurations shared by the CLI, scripts and tests.

The box side is at least four support diameters of the outer cut-off, so
wrap-around interactions of windowed fields sit below 1e-10.  The inner
window chi is supported strictly inside the plateau of rho.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cutoff import CutoffSpec, symmetric_cutoff
from .grid import GridSpec

BOX_L = 40.0


def default_rho(d: int) -> CutoffSpec:
    return symmetric_cutoff(d, plateau=2.5, support=4.0)


def default_chi(d: int) -> CutoffSpec:
    return symmetric_cutoff(d, plateau=1.0, support=2.0)


def study_grid(d: int, max_level: int, T: float = 1.0, M: int = 9, L: float = BOX_L) -> GridSpec:
    """Smallest power-of-two grid whose Nyquist clears 2^max_level by 10%."""
    N = 8
    while 3.141592653589793 * N / L < 2.0**max_level * 1.10:
        N *= 2
    return GridSpec(d, N, L, T, M)


@dataclass(frozen=True)
class StudyDefaults:
    """Knobs every sampling study shares."""

    cells_per_octave: int = 4
    seed: int = 2024


DEFAULTS = StudyDefaults()
