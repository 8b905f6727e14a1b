"""Picard fixed point for the mild quadratic equation, both regimes.

The map assembled here is

    v  ->  S_t phi + G(rho^2 |v|^2) + G(rho conj(v) * ell)
           + G(rho v * conj(ell)) + G(last)

with G(F)_t = -i int_0^t S_(t-tau) F_tau dtau, ell the windowed linear
solution, and last = |ell|^2 in the regular regime or the given
renormalized square in the rough (Wick) regime -- so the two assemblies
differ exactly by G of the windowed renormalization constant.

Iteration runs on a shrinking time horizon: if three successive
contraction ratios exceed 0.9 the horizon is halved (drivers re-restricted
in time, never resampled) and the iteration restarts, up to ten halvings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cutoff import CutoffSpec
from .grid import (ConfigError, Field, FieldPath, GridSpec, local_sobolev_seminorm,
                   sobolev_norm, _freq_sq)
from .linear import RateReport, sample_psi
from .noise import ALPHA_D, HurstIndex, build_cells, sample_noise
from .renorm import sigma_n


class ParameterError(ConfigError):
    """A regime exponent violates its admissible range (names the inequality)."""


class NoContraction(RuntimeError):
    """Ten horizon halvings exhausted without contraction."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SolverParams:
    """Regime, exponents and Picard controls.

    Regular regime: exponent is the positive regularity beta, with the
    admissible pair p = 12/(d - beta), q = 6d/(2d + beta).  Rough regime:
    exponent is alpha, with the d-dependent pair, smoothing exponent kappa
    (midpoint of its admissible interval for d = 1, 2; 4 alpha for d = 3)
    and interpolation weight theta.
    """

    regime: str
    d: int
    exponent: float
    p: float
    q: float
    kappa: float = 0.0
    theta: float = 0.0
    max_iters: int = 25
    contraction_tol: float = 1e-8
    residual_tol: float = 1e-6
    max_halvings: int = 10


def select_parameters(d: int, regime: str, exponent: float,
                      hurst: HurstIndex | None = None) -> SolverParams:
    if d not in (1, 2, 3):
        raise ParameterError(f"d must be 1, 2 or 3, got {d}")
    if regime == "regular":
        beta = exponent
        if not (0.0 < beta < 1.0):
            raise ParameterError(f"violated: 0 < beta < 1 (beta = {beta})")
        if hurst is not None and not (beta < hurst.alpha_gap):
            raise ParameterError(
                f"violated: beta < (2 H0 + sum Hi) - (d + 1) = {hurst.alpha_gap} (beta = {beta})"
            )
        return SolverParams("regular", d, beta, 12.0 / (d - beta), 6.0 * d / (2.0 * d + beta))
    if regime == "rough":
        alpha = exponent
        bound = ALPHA_D[d]
        if not (0.0 < alpha < bound):
            raise ParameterError(f"violated: 0 < alpha < {bound} for d = {d} (alpha = {alpha})")
        if hurst is not None and not (-hurst.alpha_gap < alpha):
            raise ParameterError(
                f"violated: d + 1 - (2 H0 + sum Hi) = {-hurst.alpha_gap} < alpha (alpha = {alpha})"
            )
        if d == 1:
            lo, hi = 3.0 * alpha, min(0.5, 0.75 - 2.0 * alpha)
            kappa = 0.5 * (lo + hi)
            p, q, theta = math.inf, 2.0, 2.0 * alpha / kappa
        elif d == 2:
            lo, hi = 3.0 * alpha, 0.5 - 2.0 * alpha
            kappa = 0.5 * (lo + hi)
            p, q, theta = 4.0, 4.0, 2.0 * alpha / kappa
        else:
            kappa = 4.0 * alpha
            p, q, theta = 2.0, 6.0, 0.5
        return SolverParams("rough", d, alpha, p, q, kappa, theta)
    raise ParameterError(f"regime must be 'regular' or 'rough', got {regime!r}")


@dataclass
class MildProblem:
    """Data of one mild solve: initial field, cut-offs, drivers."""

    grid: GridSpec
    phi: Field
    rho: CutoffSpec
    chi: CutoffSpec
    ell: FieldPath                 # windowed linear solution rho * Psi
    wick: FieldPath | None = None  # rho^2 * (renormalized square), rough regime

    def __post_init__(self):
        if self.wick is not None:
            if len(self.wick.times) != len(self.ell.times) or not np.allclose(
                self.wick.times, self.ell.times
            ):
                raise ConfigError("drivers must share one time grid")

    def restricted(self, n_nodes: int) -> "MildProblem":
        return MildProblem(
            self.grid,
            self.phi,
            self.rho,
            self.chi,
            self.ell.restricted(n_nodes),
            None if self.wick is None else self.wick.restricted(n_nodes),
        )


@dataclass
class SolveReport:
    v: FieldPath
    u: FieldPath | None
    iterations: int
    ratios: list
    residual: float
    T_used: float
    halvings: int
    trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Duhamel integral and the fixed-point map
# ---------------------------------------------------------------------------


def _check_uniform(times: np.ndarray) -> float:
    dts = np.diff(times)
    if len(dts) == 0 or not np.allclose(dts, dts[0], rtol=1e-10, atol=0.0):
        raise ConfigError("duhamel requires a uniform time grid")
    return float(dts[0])


def duhamel(F: FieldPath) -> FieldPath:
    """G(F)_t = -i int_0^t S_(t-tau) F_tau dtau by trapezoidal prefix sums.

    Worked in the interaction picture: one FFT per node in, a cumulative
    sum over nodes, one FFT per node out (order-2 accurate in the step).
    """
    dt = _check_uniform(F.times)
    grid = F.grid
    ksq = _freq_sq(grid)
    fhat = np.fft.fftn(F.values, axes=tuple(range(1, grid.d + 1)))
    phases = np.exp(-1j * F.times[(...,) + (None,) * grid.d] * ksq[None])
    a = phases * fhat
    b = np.cumsum(a, axis=0)
    trap = dt * (b - 0.5 * a - 0.5 * a[0:1])
    ghat = -1j * np.conj(phases) * trap
    out = np.fft.ifftn(ghat, axes=tuple(range(1, grid.d + 1)))
    out[0] = 0.0
    return FieldPath(grid, F.times, out)


def propagator_path(phi: Field, times) -> FieldPath:
    """S_t phi along the time nodes."""
    times = np.asarray(times, dtype=float)
    ksq = _freq_sq(phi.grid)
    phat = np.fft.fftn(phi.values)
    vals = np.fft.ifftn(
        np.exp(1j * times[(...,) + (None,) * phi.grid.d] * ksq[None]) * phat[None],
        axes=tuple(range(1, phi.grid.d + 1)),
    )
    return FieldPath(phi.grid, times, vals)


def gamma_map(v: FieldPath, problem: MildProblem, params: SolverParams) -> FieldPath:
    """One application of the mild fixed-point map to v."""
    grid = problem.grid
    rho = problem.rho.evaluate(grid)
    ell = problem.ell
    if len(v.times) != len(ell.times) or not np.allclose(v.times, ell.times):
        raise ConfigError("iterate and drivers live on different time grids")
    rv = rho[None] * v.values
    quad = (rho**2)[None] * np.abs(v.values) ** 2
    cross = np.conj(rv) * ell.values + rv * np.conj(ell.values)
    if params.regime == "regular":
        last = np.abs(ell.values) ** 2
    else:
        if problem.wick is None:
            raise ConfigError("rough-regime problem needs the renormalized square driver")
        last = problem.wick.values
    source = FieldPath(grid, v.times, quad + cross + last)
    out = propagator_path(problem.phi, v.times) + duhamel(source)
    return out


def x_norm(v: FieldPath, params: SolverParams, rho: CutoffSpec) -> float:
    """Solution-space norm of the active regime.

    Regular: sup_t H^beta + L^p_T W^(beta,q).  Rough: sup_t H^(-2 alpha)
    + L^p_T W^(-2 alpha،q) + L^(1/kappa)_T of the windowed H^(-2 alpha + kappa)
    seminorm.  Time integrals by the trapezoid rule, sup by grid max.
    """
    times = v.times
    dt = _check_uniform(times) if len(times) > 1 else 0.0
    w = np.full(len(times), dt)
    if len(times) > 1:
        w[0] = w[-1] = 0.5 * dt

    def lp_time(vals: np.ndarray, p: float) -> float:
        if np.isinf(p):
            return float(np.max(vals))
        return float(np.sum(w * vals**p) ** (1.0 / p))

    if params.regime == "regular":
        s = params.exponent
        sup_h = max(sobolev_norm(v.field(k), s, 2.0) for k in range(len(times)))
        wq = np.array([sobolev_norm(v.field(k), s, params.q) for k in range(len(times))])
        return sup_h + lp_time(wq, params.p)
    s = -2.0 * params.exponent
    sup_h = max(sobolev_norm(v.field(k), s, 2.0) for k in range(len(times)))
    wq = np.array([sobolev_norm(v.field(k), s, params.q) for k in range(len(times))])
    loc = np.array(
        [local_sobolev_seminorm(v.field(k), s + params.kappa, rho) for k in range(len(times))]
    )
    return sup_h + lp_time(wq, params.p) + lp_time(loc, 1.0 / params.kappa)


def picard_solve(problem: MildProblem, params: SolverParams,
                 psi: FieldPath | None = None) -> SolveReport:
    """Iterate v <- Gamma(v) from v_0 = S phi until the X-norm increment
    drops below contraction_tol; halve the horizon after three successive
    ratios above 0.9.  Raises NoContraction when ten halvings are spent.
    """
    trace = []
    current = problem
    halvings = 0
    while True:
        times = current.ell.times
        v = propagator_path(current.phi, times)
        diffs, ratios = [], []
        stalled = 0
        converged = False
        for it in range(params.max_iters):
            v_next = gamma_map(v, current, params)
            diff = x_norm(v_next - v, params, current.rho)
            diffs.append(diff)
            if len(diffs) >= 2 and diffs[-2] > 0:
                ratios.append(diff / diffs[-2])
                stalled = stalled + 1 if ratios[-1] > 0.9 else 0
            v = v_next
            if diff < params.contraction_tol:
                converged = True
                break
            if stalled >= 3:
                break
        trace.append({"T": float(times[-1]), "diffs": diffs, "ratios": ratios})
        if converged:
            residual = x_norm(v - gamma_map(v, current, params), params, current.rho)
            u = None
            if psi is not None:
                u = v + psi.restricted(len(times))
            return SolveReport(v, u, len(diffs), ratios, residual, float(times[-1]), halvings, trace)
        halvings += 1
        if halvings > params.max_halvings:
            raise NoContraction(
                f"no contraction after {params.max_halvings} horizon halvings", trace
            )
        n_nodes = (len(times) - 1) // 2 + 1
        if n_nodes < 3:
            raise NoContraction("time grid exhausted before contraction", trace)
        current = current.restricted(n_nodes)


# ---------------------------------------------------------------------------
# Coupled-level solution convergence
# ---------------------------------------------------------------------------


def smooth_convergence_experiment(H: HurstIndex, levels, seed: int, grid: GridSpec,
                                  phi: Field, rho: CutoffSpec, chi: CutoffSpec,
                                  params: SolverParams, times=None,
                                  cells_per_octave: int = 4) -> RateReport:
    """Solve at consecutive truncation levels with shared noise and regress
    sup_t ||chi (u_(n+1) - u_n)(t)|| on the common converged horizon.

    The norm is H^beta in the regular regime and H^(-2 alpha) in the rough
    one.  Any NoContraction aborts the study, annotated with the level.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ConfigError("need at least 3 levels for a rate study")
    times = grid.times() if times is None else np.asarray(times, dtype=float)
    s_norm = params.exponent if params.regime == "regular" else -2.0 * params.exponent
    rho_vals = rho.evaluate(grid)
    chi_vals = chi.evaluate(grid)
    runs = {}
    for n in levels:
        cells = build_cells(n, H, grid, cells_per_octave)
        real = sample_noise(seed, cells)
        psi = sample_psi(real, times, grid)
        ell = FieldPath(grid, times, rho_vals[None] * psi.values)
        wick = None
        if params.regime == "rough":
            sig = np.array([sigma_n(t, H, n) for t in times])
            wick_vals = (rho_vals**2)[None] * (
                np.abs(psi.values) ** 2 - sig[(...,) + (None,) * grid.d]
            )
            wick = FieldPath(grid, times, wick_vals.astype(np.complex128))
        prob = MildProblem(grid, phi, rho, chi, ell, wick)
        try:
            runs[n] = picard_solve(prob, params, psi=psi)
        except NoContraction as exc:
            raise NoContraction(f"level {n}: {exc}", exc.trace) from exc
    n_common = min(len(runs[n].v.times) for n in levels)
    sups = []
    for n_lo, n_hi in zip(levels[:-1], levels[1:]):
        u_lo = runs[n_lo].u.restricted(n_common)
        u_hi = runs[n_hi].u.restricted(n_common)
        delta = u_hi.values - u_lo.values
        sup = 0.0
        for k in range(n_common):
            sup = max(sup, sobolev_norm(Field(grid, chi_vals * delta[k]), s_norm, 2.0))
        sups.append([sup])
    report = RateReport.from_level_samples(levels[:-1], sups)
    report.rows = [
        (levels[i], report.means[i], float(runs[levels[i]].T_used)) for i in range(len(levels) - 1)
    ]
    report.T0 = float(runs[levels[0]].v.times[n_common - 1])
    return report
