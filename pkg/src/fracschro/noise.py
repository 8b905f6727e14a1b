"""Truncated harmonizable noise: spectral cells, counter-based draws, sampling.

The driving sheet is represented by complex white noise on the truncated
frequency domain D_n = [-4^n, 4^n] x [-2^n, 2^n]^d, discretized into dyadic
cells that are level-independent: the tiling of D_n is exactly the tiling
of D_m restricted to D_n for n <= m, and each cell's Gaussian depends only
on (seed, canonical cell key).  Coupled levels therefore share noise, and
level differences live on the frequency annulus alone.

Per-cell variance weights are exact: the spectral density is a product of
one-dimensional powers, integrated in closed form on each cell (cells never
straddle a coordinate hyperplane, so each has a single sign per axis).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import ConfigError, GridSpec
from .quadrature import composite_gl, power_gl

ALPHA_D = {1: 3.0 / 20.0, 2: 1.0 / 10.0, 3: 1.0 / 24.0}


@dataclass(frozen=True)
class HurstIndex:
    """Hurst vector (H0; H1..Hd), each component strictly inside (0, 1)."""

    h0: float
    hspace: tuple

    def __post_init__(self):
        object.__setattr__(self, "hspace", tuple(float(h) for h in self.hspace))
        for h in (self.h0, *self.hspace):
            if not (0.0 < h < 1.0):
                raise ConfigError(f"Hurst components must lie in (0,1), got {h}")
        if not self.hspace:
            raise ConfigError("need at least one spatial Hurst component")

    @property
    def d(self) -> int:
        return len(self.hspace)

    @property
    def alpha_gap(self) -> float:
        """(2 H0 + sum Hi) - (d + 1); positive in the regular regime."""
        return 2.0 * self.h0 + sum(self.hspace) - (self.d + 1)

    @classmethod
    def parse(cls, text: str) -> "HurstIndex":
        parts = [float(p) for p in text.split(",")]
        if len(parts) < 2:
            raise ConfigError("hurst must be 'H0,H1[,H2[,H3]]'")
        return cls(parts[0], tuple(parts[1:]))


class Regime(enum.Enum):
    REGULAR = "regular"
    ROUGH_SOLVABLE = "rough_solvable"
    ROUGH_CONSTRUCTIBLE = "rough_constructible"
    OUT_OF_SCOPE = "out_of_scope"


def classify_regime(H: HurstIndex, d: int | None = None) -> Regime:
    """Place a Hurst vector in the lab's solvability chart.

    Regular: total index above d+1, so the linear solution is a function and
    no renormalization is needed.  Rough-solvable: gap within the
    d-dependent margin where the renormalized fixed point closes.
    Rough-constructible: the renormalized square exists (gap above -1/4)
    but the solver margin fails.
    """
    d = H.d if d is None else d
    if d != H.d:
        raise ConfigError(f"dimension mismatch: {d} vs Hurst index with d={H.d}")
    gap = H.alpha_gap
    if gap > 0:
        return Regime.REGULAR
    if gap > -ALPHA_D[d]:
        return Regime.ROUGH_SOLVABLE
    if gap > -0.25:
        return Regime.ROUGH_CONSTRUCTIBLE
    return Regime.OUT_OF_SCOPE


# ---------------------------------------------------------------------------
# Dyadic axis segments and their exact power weights
# ---------------------------------------------------------------------------


def _axis_segments(max_octave: int, cells_per_octave: int):
    """Positive-side segment edges, level-independent.

    Octave -1 is the base interval [0, 1] split into cells_per_octave equal
    parts; octave k >= 0 is [2^k, 2^(k+1)] split equally.  A level-n axis
    uses octaves up to max_octave = (resolution exponent) - 1.
    """
    segs = []
    cpo = cells_per_octave
    for j in range(cpo):
        segs.append((-1, j, j / cpo, (j + 1) / cpo))
    for k in range(max_octave + 1):
        lo, w = 2.0**k, 2.0**k / cpo
        for j in range(cpo):
            segs.append((k, j, lo + j * w, lo + (j + 1) * w))
    return segs


def _axis_power_weight(a: np.ndarray, b: np.ndarray, expo: float) -> np.ndarray:
    """int_a^b w^expo dw for 0 <= a < b (expo > -1)."""
    return (b ** (expo + 1.0) - a ** (expo + 1.0)) / (expo + 1.0)


@dataclass
class SpectralCellSet:
    """Dyadic tiling of D_n with per-cell exact variance weights.

    Arrays are cell-major: centers[:, 0] is the time-frequency (xi) axis,
    centers[:, 1:] the space axes.  ``weight`` is the linear-solution
    variance weight  int_cell |xi|^(1-2H0) prod |eta_i|^(1-2Hi).
    """

    level: int
    hurst: HurstIndex
    cells_per_octave: int
    centers: np.ndarray   # (ncells, 1+d)
    lows: np.ndarray      # (ncells, 1+d) signed lower-magnitude endpoints
    highs: np.ndarray     # (ncells, 1+d)
    weight: np.ndarray    # (ncells,)
    volume: np.ndarray    # (ncells,)
    keys: np.ndarray      # (ncells,) canonical uint64 RNG keys
    signs: np.ndarray     # (ncells,) product of axis signs (+-1)
    xi_positive: np.ndarray  # (ncells,) bool, True on canonical representatives
    axis_seg_index: np.ndarray  # (ncells, 1+d) int index into the axis segment tables
    axis_tables: list     # per axis: (octave, sub, a, b) arrays for |.|-segments

    @property
    def d(self) -> int:
        return self.hurst.d

    @property
    def ncells(self) -> int:
        return len(self.weight)

    def radial_centers(self) -> np.ndarray:
        """|eta| of the cell centers."""
        return np.sqrt(np.sum(self.centers[:, 1:] ** 2, axis=1))

    def in_level(self, n: int) -> np.ndarray:
        """Mask of cells lying inside D_n (exact, by segment endpoints)."""
        bounds = [4.0**n] + [2.0**n] * self.d
        mask = np.ones(self.ncells, dtype=bool)
        for axis, bnd in enumerate(bounds):
            mag = np.maximum(np.abs(self.lows[:, axis]), np.abs(self.highs[:, axis]))
            mask &= mag <= bnd * (1.0 + 1e-12)
        return mask


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized on uint64 (wraparound intended)."""
    with np.errstate(over="ignore"):
        x = (x + np.uint64(0x9E3779B97F4A7C15)).astype(np.uint64)
        x ^= x >> np.uint64(30)
        x = (x * np.uint64(0xBF58476D1CE4E5B9)).astype(np.uint64)
        x ^= x >> np.uint64(27)
        x = (x * np.uint64(0x94D049BB133111EB)).astype(np.uint64)
        x ^= x >> np.uint64(31)
    return x


def build_cells(n: int, H: HurstIndex, grid: GridSpec | None = None,
                cells_per_octave: int = 4) -> SpectralCellSet:
    """Tile D_n = [-4^n, 4^n] x [-2^n, 2^n]^d into single-sign dyadic cells.

    When a grid is supplied, its Nyquist frequency must clear the spatial
    truncation radius 2^n with a 5% margin (sampling precondition).
    """
    if n < 1:
        raise ConfigError(f"level must be >= 1, got {n}")
    if grid is not None:
        if grid.d != H.d:
            raise ConfigError("grid dimension does not match Hurst index")
        if grid.nyquist < 2.0**n * 1.05:
            raise ConfigError(
                f"grid Nyquist {grid.nyquist:.2f} below 1.05 * 2^n = {1.05 * 2.0 ** n:.2f}"
            )
    d = H.d
    cpo = cells_per_octave
    exps = [1.0 - 2.0 * H.h0] + [1.0 - 2.0 * h for h in H.hspace]
    max_oct = [2 * n - 1] + [n - 1] * d

    tables = []
    per_axis = []  # (signed_lo, signed_hi, weight, seg_index, axis_code)
    for axis in range(1 + d):
        segs = _axis_segments(max_oct[axis], cpo)
        oc = np.array([s[0] for s in segs])
        sub = np.array([s[1] for s in segs])
        a = np.array([s[2] for s in segs])
        b = np.array([s[3] for s in segs])
        tables.append((oc, sub, a, b))
        w = _axis_power_weight(a, b, exps[axis])
        # positive then mirrored negative segments
        lo = np.concatenate([a, -b])
        hi = np.concatenate([b, -a])
        ww = np.concatenate([w, w])
        idx = np.concatenate([np.arange(len(segs)), np.arange(len(segs))])
        code = ((oc + 1).astype(np.uint64) << np.uint64(16)) | sub.astype(np.uint64)
        sign_bit = np.concatenate(
            [np.zeros(len(segs), np.uint64), np.ones(len(segs), np.uint64)]
        )
        codes = (np.concatenate([code, code]) << np.uint64(1)) | sign_bit
        per_axis.append((lo, hi, ww, idx, codes))

    shapes = [len(p[0]) for p in per_axis]
    grids = np.meshgrid(*[np.arange(s) for s in shapes], indexing="ij")
    flat = [g.ravel() for g in grids]
    ncells = flat[0].size

    lows = np.empty((ncells, 1 + d))
    highs = np.empty((ncells, 1 + d))
    weight = np.ones(ncells)
    volume = np.ones(ncells)
    signs = np.ones(ncells)
    seg_index = np.empty((ncells, 1 + d), dtype=np.int64)
    codes = np.empty((ncells, 1 + d), dtype=np.uint64)
    for axis, (lo, hi, ww, idx, cd) in enumerate(per_axis):
        sel = flat[axis]
        lows[:, axis] = lo[sel]
        highs[:, axis] = hi[sel]
        weight *= ww[sel]
        volume *= hi[sel] - lo[sel]
        signs *= np.sign(lo[sel] + hi[sel])
        seg_index[:, axis] = idx[sel]
        codes[:, axis] = cd[sel]

    centers = 0.5 * (lows + highs)
    xi_positive = centers[:, 0] > 0
    # canonical key: full sign flip maps a cell onto its conjugate partner,
    # so flip every axis sign bit when xi < 0 before hashing
    canon = np.where(xi_positive[:, None], codes, codes ^ np.uint64(1))
    key = np.zeros(ncells, dtype=np.uint64)
    for axis in range(1 + d):
        key = _mix64(key ^ (canon[:, axis] + np.uint64(axis) * np.uint64(0x51ED2701)))

    return SpectralCellSet(
        level=n,
        hurst=H,
        cells_per_octave=cpo,
        centers=centers,
        lows=lows,
        highs=highs,
        weight=weight,
        volume=volume,
        keys=key,
        signs=signs,
        xi_positive=xi_positive,
        axis_seg_index=seg_index,
        axis_tables=tables,
    )


# ---------------------------------------------------------------------------
# Counter-based Gaussian draws
# ---------------------------------------------------------------------------


def _keyed_normals(seed: int, keys: np.ndarray, stream: int) -> np.ndarray:
    """Standard normals keyed by (seed, key, stream); pure uint64 pipeline."""
    base = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ np.uint64(0xA5A5A5A55A5A5A5A))
    h = _mix64(keys ^ base)
    u1 = _mix64(h ^ np.uint64(2 * stream + 1))
    u2 = _mix64(h ^ np.uint64(2 * stream + 2))
    # 53-bit mantissas strictly inside (0, 1)
    f1 = ((u1 >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    f2 = ((u2 >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return np.sqrt(-2.0 * np.log(f1)) * np.cos(2.0 * math.pi * f2)


@dataclass
class NoiseRealization:
    """Per-cell complex standard Gaussians with Hermitian pairing.

    The Gaussian attached to a cell depends only on (seed, canonical cell
    key); the mirror cell (all axis signs flipped) carries the conjugate, so
    the synthesized sheet is real and levels sharing cells share noise.
    """

    seed: int
    cells: SpectralCellSet
    gauss: np.ndarray  # (ncells,) complex

    def with_cells_zeroed(self, mask: np.ndarray) -> "NoiseRealization":
        g = self.gauss.copy()
        g[mask] = 0.0
        return NoiseRealization(self.seed, self.cells, g)


def sample_noise(seed: int, cells: SpectralCellSet) -> NoiseRealization:
    a = _keyed_normals(seed, cells.keys, 0)
    b = _keyed_normals(seed, cells.keys, 1)
    z = (a + 1j * b) / math.sqrt(2.0)
    z = np.where(cells.xi_positive, z, np.conj(z))
    return NoiseRealization(seed, cells, z)


# ---------------------------------------------------------------------------
# Evaluation of the smooth sheet approximation
# ---------------------------------------------------------------------------


def _noise_axis_integrals(table, expo: float, theta: float) -> np.ndarray:
    """Per-segment int_a^b 4 sin^2(theta w / 2) w^(-expo... ) dw.

    The integrand is 4 sin^2(theta w / 2) * w^(2 h - ...):  concretely,
    |e^{i theta w} - 1|^2 w^{-2H-1} with expo = -2H-1 passed by the caller.
    The base segment touching 0 uses the power-absorbing substitution on
    the smooth factor 4 sin^2 / w^2 * w^(2+expo).
    """
    oc, sub, a, b = table
    out = np.empty(len(a))
    for i in range(len(a)):
        ai, bi = a[i], b[i]
        if theta == 0.0:
            out[i] = 0.0
            continue
        if ai == 0.0:
            # absorb w^(2+expo); the remaining factor is smooth
            nodes, wts = power_gl(bi, expo + 2.0, order=32)
            vals = (theta * np.sinc(theta * nodes / (2.0 * math.pi))) ** 2
            out[i] = float(np.sum(wts * vals))
        else:
            npan = max(1, int(math.ceil(abs(theta) * (bi - ai) / math.pi)))
            nodes, wts = composite_gl(np.linspace(ai, bi, npan + 1), 12)
            vals = 4.0 * np.sin(0.5 * theta * nodes) ** 2 * nodes**expo
            out[i] = float(np.sum(wts * vals))
    return out


def bn_cell_amplitudes(cells: SpectralCellSet, t: float, x) -> np.ndarray:
    """Per-cell complex amplitude b_C(t, x) of the sheet synthesis.

    |b_C|^2 is the exact cell integral of the truncated spectral density at
    (t, x); the unit phase is taken at the cell center.  The sheet sample is
    Re(sum b_C * gauss_C), and Var = sum |b_C|^2 tiles the defining integral
    over D_n exactly.
    """
    H = cells.hurst
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (cells.d,):
        raise ConfigError(f"x must have {cells.d} components")
    thetas = [t, *x]
    exps = [-2.0 * H.h0 - 1.0] + [-2.0 * h - 1.0 for h in H.hspace]
    var = np.ones(cells.ncells)
    phase = np.ones(cells.ncells, dtype=np.complex128)
    for axis in range(1 + cells.d):
        seg_var = _noise_axis_integrals(cells.axis_tables[axis], exps[axis], thetas[axis])
        var = var * seg_var[cells.axis_seg_index[:, axis]]
        fac = np.exp(1j * thetas[axis] * cells.centers[:, axis]) - 1.0
        mag = np.abs(fac)
        phase = phase * np.where(mag > 0, fac / np.where(mag > 0, mag, 1.0), 0.0)
    return np.sqrt(var) * phase


def evaluate_bn(real: NoiseRealization, t: float, x) -> float:
    """Sample of the level-n sheet at (t, x).

    Midpoint cell sum: per-cell modulus calibrated so the variance at (t, x)
    equals the composite quadrature of the truncated spectral integral, with
    the unit phase taken at the cell center.  Exactly 0 at t = 0 or any
    x_i = 0 (the per-axis weight vanishes).
    """
    return float(np.real(np.sum(bn_cell_amplitudes(real.cells, t, x) * real.gauss)))


def bn_variance_quadrature(H: HurstIndex, n: int, t: float, x,
                           cells_per_octave: int = 4) -> float:
    """Exact-weight composite quadrature of Var B_n(t, x) over D_n."""
    cells = build_cells(n, H, cells_per_octave=cells_per_octave)
    amp = bn_cell_amplitudes(cells, t, x)
    return float(np.sum(np.abs(amp) ** 2))


def evaluate_bn_grid(real: NoiseRealization, t: float, grid: GridSpec) -> np.ndarray:
    """Sheet sample on the whole spatial grid at time t.

    Exploits the per-axis factorization of the amplitudes: cells are grouped
    by their space-segment indices, so the cost is one small tensor
    contraction per axis instead of a per-point cell sum.  Grid points are
    taken at the box coordinates folded into [-L/2, L/2).
    """
    cells = real.cells
    H = cells.hurst
    if grid.d != cells.d:
        raise ConfigError("grid dimension does not match cell set")
    x = grid.axis_points()
    x = np.where(x >= grid.L / 2, x - grid.L, x)

    def axis_factor(axis: int, thetas: np.ndarray) -> np.ndarray:
        """(npoints, nsegs) array of sqrt(weight) * unit phase per segment."""
        table = cells.axis_tables[axis]
        expo = (-2.0 * H.h0 - 1.0) if axis == 0 else (-2.0 * H.hspace[axis - 1] - 1.0)
        _, _, a, b = table
        centers = 0.5 * (a + b)
        out = np.empty((len(thetas), len(a)), dtype=np.complex128)
        for i, th in enumerate(thetas):
            w = _noise_axis_integrals(table, expo, float(th))
            fac = np.exp(1j * th * centers) - 1.0
            mag = np.abs(fac)
            out[i] = np.sqrt(w) * np.where(mag > 0, fac / np.where(mag > 0, mag, 1.0), 0.0)
        return out

    # time factor at the positive-side segment of each cell, sign-corrected:
    # a segment mirrored to the negative axis conjugates its phase factor
    tfac_pos = axis_factor(0, np.array([t]))[0]
    seg0 = cells.axis_seg_index[:, 0]
    neg0 = np.sign(cells.centers[:, 0]) < 0
    tfac = np.where(neg0, np.conj(tfac_pos[seg0]), tfac_pos[seg0])
    core = tfac * real.gauss
    # group per space-axis (segment, sign) pairs and contract axis by axis
    nseg = [len(cells.axis_tables[ax][2]) for ax in range(1, 1 + cells.d)]
    codes = np.zeros(cells.ncells, dtype=np.int64)
    for ax in range(cells.d):
        seg = cells.axis_seg_index[:, 1 + ax]
        sgn = (np.sign(cells.centers[:, 1 + ax]) < 0).astype(np.int64)
        codes = codes * (2 * nseg[ax]) + seg * 2 + sgn
    total = int(np.prod([2 * s for s in nseg]))
    g = np.bincount(codes, weights=core.real, minlength=total) + 1j * np.bincount(
        codes, weights=core.imag, minlength=total
    )
    g = g.reshape([2 * s for s in nseg])
    out = g
    for ax in range(cells.d):
        fac_pos = axis_factor(1 + ax, x)  # (N, nseg)
        fac = np.empty((grid.N, 2 * nseg[ax]), dtype=np.complex128)
        fac[:, 0::2] = fac_pos
        fac[:, 1::2] = np.conj(fac_pos)
        # the segment axis to contract sits at position ax; the new spatial
        # axis lands in front, so after d passes axes come out reversed
        out = np.tensordot(fac, out, axes=([1], [ax]))
    out = np.transpose(out, axes=tuple(reversed(range(cells.d))))
    return np.real(out)
