"""Numerical verification of the functional inequalities behind the solver.

"Fitted constant" means the empirical supremum of lhs/rhs over a declared
random ensemble (band-limited Gaussian fields with flat, high-frequency
concentrated, and power-law spectral profiles) -- a measurement, not a
proof.  Every report carries a refinement trace: the constant recomputed at
doubled resolution on the same draws (coefficients live on the coarse
lattice and are embedded, so both resolutions see the same continuum
field).  The lab's acceptance notion is constant(2N) <= 2 constant(N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cutoff import CutoffSpec
from .grid import (ConfigError, Field, FieldPath, GridSpec, bessel_multiplier,
                   local_sobolev_seminorm, lp_norm, plane_wave, sobolev_norm)
from .solver import duhamel, propagator_path


@dataclass
class InequalityReport:
    inequality: str
    params: dict
    samples: int
    constant: float
    refinement: dict = field(default_factory=dict)  # N -> constant
    scan: list = field(default_factory=list)        # optional (K, ratio) rows

    def refinement_stable(self, factor: float = 2.0) -> bool:
        ns = sorted(self.refinement)
        return all(
            self.refinement[b] <= factor * self.refinement[a]
            for a, b in zip(ns, ns[1:])
        )


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

PROFILES = ("flat", "concentrated", "powerlaw")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _coeff_lattice(N: int, d: int, kmax: int, profile: str, seed: int) -> np.ndarray:
    """Complex Gaussian coefficients on the fft-ordered lattice, band-limited.

    The array is indexed by integer frequencies of an N-point grid but only
    modes with |k_i| <= kmax are populated, so it can be embedded losslessly
    into any finer grid with the same box.
    """
    rng = _rng(seed)
    shape = (N,) * d
    coeff = np.zeros(shape, dtype=np.complex128)
    k1 = np.fft.fftfreq(N, d=1.0 / N).astype(int)
    mesh = np.meshgrid(*([k1] * d), indexing="ij")
    radius = np.sqrt(sum(m.astype(float) ** 2 for m in mesh))
    inside = np.ones(shape, dtype=bool)
    for m in mesh:
        inside &= np.abs(m) <= kmax
    if profile == "flat":
        weight = np.where(inside, 1.0, 0.0)
    elif profile == "concentrated":
        weight = np.where(inside & (radius >= 0.7 * kmax), 1.0, 0.0)
    elif profile == "powerlaw":
        weight = np.where(inside, (1.0 + radius) ** -1.0, 0.0)
    else:
        raise ConfigError(f"unknown spectral profile {profile!r}")
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return weight * z


def _field_from_coeffs(grid: GridSpec, coeff_small: np.ndarray) -> Field:
    Ns = coeff_small.shape[0]
    vals = np.zeros(grid.shape, dtype=np.complex128)
    k1 = np.fft.fftfreq(Ns, d=1.0 / Ns).astype(int)
    idx = np.ix_(*([k1 % grid.N] * grid.d))
    src = np.ix_(*([np.arange(Ns)] * grid.d))
    vals[idx] = coeff_small[src]
    return Field(grid, np.fft.ifftn(vals) * grid.N**grid.d / Ns**grid.d)


def band_limited_field(grid: GridSpec, kmax: int, profile: str, seed: int,
                       coeff_n: int = 64) -> Field:
    """Random band-limited field; identical continuum content at any N >= coeff_n."""
    return _field_from_coeffs(grid, _coeff_lattice(coeff_n, grid.d, kmax, profile, seed))


def band_limited_path(grid: GridSpec, times, kmax: int, profile: str, seed: int,
                      coeff_n: int = 64) -> FieldPath:
    """Forcing path with smooth time dependence: three modulated band-limited fields."""
    times = np.asarray(times, dtype=float)
    rng = _rng(seed ^ 0x5EED)
    vals = np.zeros((len(times),) + grid.shape, dtype=np.complex128)
    for j in range(3):
        f = band_limited_field(grid, kmax, profile, seed * 7 + j, coeff_n)
        om, ph = rng.uniform(-3.0, 3.0), rng.uniform(0.0, 2.0 * math.pi)
        vals += np.exp(1j * (om * times + ph))[(...,) + (None,) * grid.d] * f.values[None]
    return FieldPath(grid, times, vals)


# ---------------------------------------------------------------------------
# Exponent arithmetic
# ---------------------------------------------------------------------------


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if np.isinf(x):
        raise ValueError("infinite exponent has no Fraction form")
    return Fraction(str(x))


def is_admissible(p, q, d: int) -> bool:
    """Exact check of 2/p + d/q = d/2 with (p, q, d) != (2, inf, 2), p,q >= 2."""
    pi, qi = (math.inf if np.isinf(p) else _frac(p)), (math.inf if np.isinf(q) else _frac(q))
    if (pi, qi, d) == (2, math.inf, 2):
        return False
    for e in (pi, qi):
        if e != math.inf and e < 2:
            return False
    lhs = (0 if pi == math.inf else Fraction(2, 1) / pi) + (
        0 if qi == math.inf else Fraction(d, 1) / qi
    )
    return lhs == Fraction(d, 2)


def _holder_conjugate(a: float) -> float:
    if np.isinf(a):
        return 1.0
    if a == 1.0:
        return math.inf
    return a / (a - 1.0)


# ---------------------------------------------------------------------------
# Time-space norms on discrete paths
# ---------------------------------------------------------------------------


def path_space_time_norm(path: FieldPath, p_time: float, s: float, q_space: float) -> float:
    """L^p([0,T]; W^{s,q}) by the trapezoid rule (sup at p = inf)."""
    vals = np.array([sobolev_norm(path.field(k), s, q_space) for k in range(len(path))])
    if np.isinf(p_time):
        return float(vals.max())
    dt = float(path.times[1] - path.times[0])
    w = np.full(len(vals), dt)
    w[0] = w[-1] = 0.5 * dt
    return float(np.sum(w * vals**p_time) ** (1.0 / p_time))


def _solve_inhomogeneous(grid: GridSpec, times, phi: Field, F: FieldPath) -> FieldPath:
    return propagator_path(phi, times) + duhamel(F)


# ---------------------------------------------------------------------------
# The checks
# ---------------------------------------------------------------------------

_DEF_L = 40.0
_DEF_T = 0.5
_DEF_M = 33


def _grid_pair(d: int, N: int, L: float = _DEF_L) -> tuple:
    return (GridSpec(d, N, L, _DEF_T, _DEF_M), GridSpec(d, 2 * N, L, _DEF_T, _DEF_M))


def strichartz_check(d: int, pair, s: float, samples: int, N: int = 256,
                     seed: int = 0, kmax: int = 24) -> InequalityReport:
    """sup over random (phi, F) of ||u||_{L^p W^{s,q}} / (||phi||_{H^s} + ||F||_{L^1 H^s}).

    u solves the linear inhomogeneous problem on the grid; the dual pair on
    the right-hand side is (infinity, 2), admissible in every dimension.
    """
    p, q = pair
    if not is_admissible(p, q, d):
        raise ConfigError(f"pair {pair} violates 2/p + d/q = d/2 (or is the forbidden endpoint)")
    grids = _grid_pair(d, N)
    times = grids[0].times()
    constants = {}
    for g in grids:
        ratios = []
        for i in range(samples):
            prof = PROFILES[i % len(PROFILES)]
            phi = band_limited_field(g, kmax, prof, seed + 11 * i)
            F = band_limited_path(g, times, kmax, prof, seed + 11 * i + 5)
            u = _solve_inhomogeneous(g, times, phi, F)
            lhs = path_space_time_norm(u, p, s, q)
            rhs = sobolev_norm(phi, s, 2.0) + path_space_time_norm(F, 1.0, s, 2.0)
            ratios.append(lhs / rhs)
        constants[g.N] = max(ratios)
    return InequalityReport(
        "strichartz", {"d": d, "p": p, "q": q, "s": s}, samples, constants[grids[1].N], constants
    )


def leibniz_check(s: float, r: float, p1: float, p2: float, q1: float, q2: float,
                  samples: int, d: int = 1, N: int = 256, seed: int = 0,
                  kmax: int = 24) -> InequalityReport:
    """Product rule  ||uv||_{W^{s,r}} <= C (||u||_{W^{s,p1}} ||v||_{p2}
    + ||u||_{q1} ||v||_{W^{s,q2}})  for s >= 0 and Hoelder-consistent exponents."""
    if s < 0:
        raise ConfigError("product rule requires s >= 0")
    for a, b in ((p1, p2), (q1, q2)):
        if _frac(1) / _frac(r) != _frac(1) / _frac(a) + _frac(1) / _frac(b):
            raise ConfigError(f"violated: 1/r = 1/{a} + 1/{b}")
    for e in (r, p1, p2, q1, q2):
        if not (1.0 < e < math.inf):
            raise ConfigError("exponents must lie in (1, inf)")
    grids = _grid_pair(d, N)
    constants = {}
    for g in grids:
        ratios = []
        for i in range(samples):
            prof = PROFILES[i % len(PROFILES)]
            u = band_limited_field(g, kmax, prof, seed + 31 * i)
            v = band_limited_field(g, kmax, PROFILES[(i + 1) % 3], seed + 31 * i + 7)
            lhs = sobolev_norm(Field(g, u.values * v.values), s, r)
            rhs = sobolev_norm(u, s, p1) * lp_norm(v, p2) + lp_norm(u, q1) * sobolev_norm(v, s, q2)
            ratios.append(lhs / rhs)
        constants[g.N] = max(ratios)
    return InequalityReport(
        "leibniz", {"s": s, "r": r, "p1": p1, "p2": p2, "q1": q1, "q2": q2},
        samples, constants[grids[1].N], constants,
    )


def product_check(alpha: float, beta: float, p: float, p1: float, p2: float,
                  samples: int, d: int = 1, N: int = 256, seed: int = 0,
                  kmax: int = 24) -> InequalityReport:
    """Negative-order product  ||f g||_{W^{-alpha,p}} <= C ||f||_{W^{-alpha,p1}}
    ||g||_{W^{beta,p2}}  under 0 < alpha < beta < d/p2.

    The rough factor is synthesized by negative-order spectral weighting of a
    white field, which prescribes its Sobolev scaling exactly on the grid.
    """
    if not (0.0 < alpha < beta < d / p2):
        raise ConfigError(f"violated: 0 < alpha < beta < d/p2 = {d / p2}")
    if _frac(1) / _frac(p) != (0 if np.isinf(p1) else _frac(1) / _frac(p1)) + _frac(1) / _frac(p2):
        raise ConfigError(f"violated: 1/p = 1/p1 + 1/p2")
    grids = _grid_pair(d, N)
    constants = {}
    for g in grids:
        ratios = []
        for i in range(samples):
            rough_seed = seed + 17 * i
            white = band_limited_field(g, g.N // 4, "flat", rough_seed, coeff_n=g.N)
            f = bessel_multiplier(white, -(alpha + 0.5 * d + 0.25))
            gsm = band_limited_field(g, kmax, PROFILES[i % 3], rough_seed + 3)
            lhs = sobolev_norm(Field(g, f.values * gsm.values), -alpha, p)
            rhs = sobolev_norm(f, -alpha, p1) * sobolev_norm(gsm, beta, p2)
            ratios.append(lhs / rhs)
        constants[g.N] = max(ratios)
    return InequalityReport(
        "product", {"alpha": alpha, "beta": beta, "p": p, "p1": p1, "p2": p2},
        samples, constants[grids[1].N], constants,
    )


def interpolation_check(s1: float, s2: float, p1: float, p2: float, theta: float,
                        samples: int, d: int = 1, N: int = 256, seed: int = 0,
                        kmax: int = 24) -> InequalityReport:
    """||v||_{W^{s,p}} <= ||v||^theta_{W^{s1,p1}} ||v||^(1-theta)_{W^{s2,p2}}
    at s = theta s1 + (1-theta) s2, 1/p = theta/p1 + (1-theta)/p2."""
    if not (0.0 < theta <= 1.0):
        raise ConfigError("theta must lie in (0, 1]")
    s = theta * s1 + (1.0 - theta) * s2
    inv_p = theta / p1 + (1.0 - theta) / p2
    p = 1.0 / inv_p
    grids = _grid_pair(d, N)
    constants = {}
    for g in grids:
        ratios = []
        for i in range(samples):
            v = band_limited_field(g, kmax, PROFILES[i % 3], seed + 13 * i)
            lhs = sobolev_norm(v, s, p)
            rhs = sobolev_norm(v, s1, p1) ** theta * sobolev_norm(v, s2, p2) ** (1.0 - theta)
            ratios.append(lhs / rhs)
        constants[g.N] = max(ratios)
    return InequalityReport(
        "interpolation", {"s1": s1, "s2": s2, "p1": p1, "p2": p2, "theta": theta},
        samples, constants[grids[1].N], constants,
    )


def local_smoothing_check(d: int, rho: CutoffSpec, alpha: float, kappa: float,
                          samples: int, N: int = 256, seed: int = 0,
                          kmax: int = 24) -> InequalityReport:
    """Windowed smoothing gain of the propagator:

        ||u||_{L^{1/kappa}_T H^{-alpha+kappa}_rho}
            <= C (||phi||_{H^{-alpha}} + ||F||_{L^1_T H^{-alpha}})

    for 0 <= alpha, kappa <= 1/2 (kappa = 1/2 is the endpoint gain)."""
    if not (0.0 <= alpha <= 0.5):
        raise ConfigError("alpha must lie in [0, 1/2]")
    if not (0.0 <= kappa <= 0.5):
        raise ConfigError("kappa must lie in [0, 1/2]")
    grids = _grid_pair(d, N)
    times = grids[0].times()
    p_time = math.inf if kappa == 0.0 else 1.0 / kappa
    constants = {}
    for g in grids:
        ratios = []
        for i in range(samples):
            prof = PROFILES[i % 3]
            phi = band_limited_field(g, kmax, prof, seed + 19 * i)
            F = band_limited_path(g, times, kmax, prof, seed + 19 * i + 9)
            u = _solve_inhomogeneous(g, times, phi, F)
            loc = np.array(
                [local_sobolev_seminorm(u.field(k), -alpha + kappa, rho) for k in range(len(u))]
            )
            if np.isinf(p_time):
                lhs = float(loc.max())
            else:
                dt = float(times[1] - times[0])
                w = np.full(len(loc), dt)
                w[0] = w[-1] = 0.5 * dt
                lhs = float(np.sum(w * loc**p_time) ** (1.0 / p_time))
            rhs = sobolev_norm(phi, -alpha, 2.0) + path_space_time_norm(F, 1.0, -alpha, 2.0)
            ratios.append(lhs / rhs)
        constants[g.N] = max(ratios)
    return InequalityReport(
        "local_smoothing", {"d": d, "alpha": alpha, "kappa": kappa},
        samples, constants[grids[1].N], constants,
    )


def local_smoothing_frequency_scan(rho: CutoffSpec, alpha: float, k_values,
                                   N: int = 1024, L: float = 80.0) -> list:
    """Moving-packet scan at the endpoint gain kappa = 1/2.

    For a frequency-K wave packet started on the plateau of rho, the packet
    exits the window at group speed 2K, so the windowed L^2_T H^{-alpha+1/2}
    norm stays bounded in K while the global H^{-alpha+1/2} norm grows like
    K^(1/2).  The horizon is chosen so the fastest packet stops short of the
    box edge (no periodic wrap-around re-entry).

    Returns rows (K, local_ratio, global_ratio).
    """
    kmaxv = max(k_values)
    width = 1.5
    T = (L / 2.0 - rho.support_radius() - 4.0 * width) / (2.0 * kmaxv)
    M = 65
    grid = GridSpec(1, N, L, T, M)
    times = grid.times()
    x = grid.axis_points()
    x = np.where(x >= L / 2, x - L, x)
    rows = []
    for K in k_values:
        packet = np.exp(-(x**2) / (2.0 * width**2)) * np.exp(1j * K * x)
        phi = Field(grid, packet)
        u = propagator_path(phi, times)
        loc = np.array(
            [local_sobolev_seminorm(u.field(k), -alpha + 0.5, rho) for k in range(len(u))]
        )
        dt = float(times[1] - times[0])
        w = np.full(len(loc), dt)
        w[0] = w[-1] = 0.5 * dt
        lhs_local = float(np.sqrt(np.sum(w * loc**2)))
        glob = np.array([sobolev_norm(u.field(k), -alpha + 0.5, 2.0) for k in range(len(u))])
        lhs_global = float(np.sqrt(np.sum(w * glob**2)))
        rhs = sobolev_norm(phi, -alpha, 2.0)
        rows.append((float(K), lhs_local / rhs, lhs_global / rhs))
    return rows


def commutator_check(rho: CutoffSpec, s: float, samples: int, d: int = 1, N: int = 256,
                     seed: int = 0, kmax: int = 24, k_scan=None) -> InequalityReport:
    """Window-multiplier commutator gain of one full derivative:

        ||(id-Lap)^{s/2}(rho g) - rho (id-Lap)^{s/2} g||_{L^2} <= C ||g||_{H^{s-1}}

    for s > 0.  The ensemble includes high-frequency-concentrated draws (the
    hard family); with k_scan, single-mode ratios are recorded so the
    absence of growth in K can be regressed.
    """
    if s <= 0:
        raise ConfigError("commutator check requires s > 0")
    grids = _grid_pair(d, N)
    constants = {}

    def commutator_ratio(g: GridSpec, fld: Field) -> float:
        rvals = rho.evaluate(g)
        lhs_f = bessel_multiplier(Field(g, rvals * fld.values), s).values - rvals * bessel_multiplier(
            fld, s
        ).values
        lhs = float(np.sqrt(np.sum(np.abs(lhs_f) ** 2) * g.cell_volume))
        return lhs / sobolev_norm(fld, s - 1.0, 2.0)

    for g in grids:
        ratios = []
        for i in range(samples):
            fld = band_limited_field(g, kmax, PROFILES[i % 3], seed + 23 * i)
            ratios.append(commutator_ratio(g, fld))
        constants[g.N] = max(ratios)
    report = InequalityReport(
        "commutator", {"s": s, "d": d}, samples, constants[grids[1].N], constants
    )
    if k_scan is not None:
        gbig = grids[1]
        for K in k_scan:
            mode = plane_wave(gbig, [K * 2.0 * math.pi / gbig.L] * d)
            report.scan.append((float(K), commutator_ratio(gbig, mode)))
    return report
