"""Renormalization constant, Wick square, and divergence asymptotics.

The subtracted mean sigma_n(t) = E|Psi_n(t,x)|^2 is x-independent and, in
the rough regimes, diverges with the truncation level like 4^(n kappa) t
(kappa > 0) or n t (kappa = 0, logarithmic case), where
kappa = d + 1 - (2 H0 + sum Hi).  The reduced integral behind this law,

    J_n(t) = int_0^{2^n} r^(2a+2k-3) int_{|xi|<=4^n} |xi|^(1-a)
             |gamma_t(xi, r)|^2 dxi dr ,

has the explicit limits (pi/k) 4^(n k) t and pi ln(4) n t, which the lab
verifies quantitatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cutoff import CutoffSpec
from .gamma import gamma_sq_modulus
from .grid import ConfigError, Field, FieldPath, GridSpec, sobolev_norm
from .linear import RateReport, sample_psi
from .noise import HurstIndex, Regime, build_cells, classify_regime, sample_noise
from .quadrature import QuadResult, power_gl, ridge_integral


def angular_constant(H: HurstIndex) -> float:
    """Surface integral of prod |omega_i|^(1-2Hi) over the unit sphere.

    Evaluated by quadrature with power-absorbing panels at the coordinate
    hyperplanes (d = 1 reduces to the counting measure: value 2).
    """
    d = H.d
    if d == 1:
        return 2.0

    def quarter_circle(p1: float, p2: float) -> float:
        # int_0^(pi/2) cos^p1 sin^p2, split at pi/4, powers absorbed at ends
        def half(pa, pb):
            # int_0^(pi/4) cos^pa sin^pb: sin singular at 0
            nodes, wts = power_gl(math.pi / 4.0, pb, order=32)
            g = (np.sin(nodes) / nodes) ** pb * np.cos(nodes) ** pa
            return float(np.sum(wts * g))

        return half(p1, p2) + half(p2, p1)

    p = [1.0 - 2.0 * h for h in H.hspace]
    if d == 2:
        return 4.0 * quarter_circle(p[0], p[1])
    # d = 3: factor the azimuthal integral, then the polar one
    azim = 4.0 * quarter_circle(p[0], p[1])
    s_expo = p[0] + p[1] + 1.0  # sin(phi)^(p1+p2) * Jacobian sin(phi)
    c_expo = p[2]

    def polar_half(pa, pb):
        nodes, wts = power_gl(math.pi / 4.0, pb, order=32)
        g = (np.sin(nodes) / nodes) ** pb * np.cos(nodes) ** pa
        return float(np.sum(wts * g))

    polar = polar_half(s_expo, c_expo) + polar_half(c_expo, s_expo)
    return azim * 2.0 * polar


_SIGMA_CACHE: dict = {}


def sigma_n(t: float, H: HurstIndex, n: int, refine: float = 1.0) -> float:
    """Renormalization constant at level n: the radial reduction

        (C_H / 2) * int_0^{4^n} u^(d-1-sum Hi) int_{|xi|<=4^n}
                    |xi|^(1-2H0) K_t(xi - u) dxi du

    with C_H the angular constant and K_t the squared kernel modulus."""
    if n < 1:
        raise ConfigError(f"level must be >= 1, got {n}")
    if not (0.0 <= t):
        raise ConfigError(f"time must be nonnegative, got {t}")
    key = (H, n, float(t), refine)
    if key not in _SIGMA_CACHE:
        if t == 0.0:
            _SIGMA_CACHE[key] = 0.0
        else:
            q = H.d - 1.0 - sum(H.hspace)
            res = ridge_integral(1.0 - 2.0 * H.h0, q, t, 4.0**n, refine=refine)
            _SIGMA_CACHE[key] = 0.5 * angular_constant(H) * res.value
    return _SIGMA_CACHE[key]


@dataclass
class RenormConstant:
    """sigma_n(t) tabulated on the solver's time nodes."""

    hurst: HurstIndex
    level: int
    times: np.ndarray
    values: np.ndarray

    @classmethod
    def from_quadrature(cls, H: HurstIndex, n: int, times) -> "RenormConstant":
        times = np.asarray(times, dtype=float)
        vals = np.array([sigma_n(t, H, n) for t in times])
        return cls(H, n, times, vals)

    @classmethod
    def from_cells(cls, cells, times) -> "RenormConstant":
        """Exact second moment of the discrete sampler, sum_C w_C |gamma_t|^2.

        Matches the cell synthesis identically (useful to separate Monte
        Carlo noise from the midpoint discretization bias of the continuum
        constant)."""
        times = np.asarray(times, dtype=float)
        xi_c = cells.centers[:, 0]
        r_c = cells.radial_centers()
        vals = np.array(
            [float(np.sum(cells.weight * gamma_sq_modulus(t, xi_c, r_c))) for t in times]
        )
        return cls(cells.hurst, cells.level, times, vals)

    def interpolated(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))


def wick_square(path: FieldPath, sigma: RenormConstant) -> FieldPath:
    """|Psi_n(t, x)|^2 - sigma_n(t), stored complex with zero imaginary part."""
    if len(path.times) != len(sigma.times) or not np.allclose(
        path.times, sigma.times, rtol=0.0, atol=1e-12
    ):
        raise ConfigError("renormalization constant tabulated on a different time grid")
    vals = np.abs(path.values) ** 2 - sigma.values[(...,) + (None,) * path.grid.d]
    return FieldPath(path.grid, path.times, vals.astype(np.complex128))


# ---------------------------------------------------------------------------
# Quantitative divergence law
# ---------------------------------------------------------------------------


@dataclass
class AsymptoticsReport:
    alpha: float
    kappa: float
    t: float
    levels: list
    values: list
    predicted: list
    ratios: list
    error_estimates: list = field(default_factory=list)

    def deviations(self) -> list:
        return [abs(r - 1.0) for r in self.ratios]


def reduced_divergence_integral(alpha: float, kappa: float, t: float, n: int,
                                refine: float = 1.0) -> QuadResult:
    """J_n(t) for exponents (alpha, kappa); requires alpha in (0,2), kappa >= 0,
    alpha + kappa > 1."""
    if not (0.0 < alpha < 2.0):
        raise ConfigError(f"alpha must lie in (0,2), got {alpha}")
    if kappa < 0.0:
        raise ConfigError(f"kappa must be >= 0, got {kappa}")
    if alpha + kappa <= 1.0:
        raise ConfigError(f"need alpha + kappa > 1, got {alpha + kappa}")
    res = ridge_integral(1.0 - alpha, alpha + kappa - 2.0, t, 4.0**n, refine=refine)
    return QuadResult(0.5 * res.value, 0.5 * res.error_estimate)


def predicted_divergence(alpha: float, kappa: float, t: float, n: int) -> float:
    """Limit equivalent: (pi/kappa) 4^(n kappa) t for kappa > 0, pi ln4 n t at kappa = 0."""
    if kappa > 0.0:
        return math.pi / kappa * 4.0 ** (n * kappa) * t
    return math.pi * math.log(4.0) * n * t


def verify_asymptotics(alpha: float, kappa: float, t: float, n_range) -> AsymptoticsReport:
    """Ratio of J_n to the predicted equivalent across levels."""
    levels = list(n_range)
    values, predicted, ratios, errs = [], [], [], []
    for n in levels:
        res = reduced_divergence_integral(alpha, kappa, t, n)
        pred = predicted_divergence(alpha, kappa, t, n)
        values.append(res.value)
        predicted.append(pred)
        ratios.append(res.value / pred)
        errs.append(res.error_estimate)
    return AsymptoticsReport(alpha, kappa, t, levels, values, predicted, ratios, errs)


# ---------------------------------------------------------------------------
# Wick-square convergence study
# ---------------------------------------------------------------------------


def wick_convergence_study(H: HurstIndex, alpha: float, p: float, levels, realizations: int,
                           chi: CutoffSpec, grid: GridSpec, times=None, seed: int = 0,
                           cells_per_octave: int = 4) -> RateReport:
    """Decay of sup_t ||chi^2 (Wick_{n+1} - Wick_n)(t)||_{W^{-2 alpha, p}}.

    Same protocol as the linear study, on the renormalized squares.  Runs
    flagged when the Hurst vector is outside the constructible regimes or
    alpha is at or below the convergence threshold.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ConfigError("need at least 3 levels for a rate study")
    times = grid.times() if times is None else np.asarray(times, dtype=float)
    regime = classify_regime(H)
    flags = []
    if regime not in (Regime.ROUGH_SOLVABLE, Regime.ROUGH_CONSTRUCTIBLE):
        flags.append(f"regime_mismatch:{regime.value}")
    if alpha <= -H.alpha_gap:
        flags.append("divergence_expected")
    chi_sq = chi.evaluate(grid) ** 2
    cellsets = {n: build_cells(n, H, grid, cells_per_octave) for n in levels}
    sigmas = {
        n: np.array([sigma_n(t, H, n) for t in times]) for n in levels
    }
    diffs = [[] for _ in levels[:-1]]
    from .parallel import thread_map

    def one_realization(r):
        seed_r = seed * 1000003 + r
        squares = {}
        for n in levels:
            real = sample_noise(seed_r, cellsets[n])
            path = sample_psi(real, times, grid)
            squares[n] = np.abs(path.values) ** 2 - sigmas[n][(...,) + (None,) * grid.d]
        out = []
        for n_lo, n_hi in zip(levels[:-1], levels[1:]):
            delta = squares[n_hi] - squares[n_lo]
            sup = 0.0
            for k in range(len(times)):
                f = Field(grid, chi_sq * delta[k])
                sup = max(sup, sobolev_norm(f, -2.0 * alpha, p))
            out.append(sup)
        return out

    for vals in thread_map(one_realization, range(realizations)):
        for i, v in enumerate(vals):
            diffs[i].append(v)
    report = RateReport.from_level_samples(levels[:-1], diffs, ";".join(flags))
    report.rows = [
        (levels[i], report.means[i], report.stderrs[i]) for i in range(len(levels) - 1)
    ]
    return report
