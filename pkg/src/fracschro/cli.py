"""Experiment orchestration: every study behind one `fracschro` entry point.

Outputs are deterministic given (config, seed): CSV files carry a header
row and a trailing comment with the config hash, and each run writes a
manifest recording the code version, config hash and wall time.  Exit
codes: 0 success, 1 numerical failure (no contraction / tolerance), 2
invalid configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .configs import DEFAULTS, default_chi, default_rho, study_grid
from .cutoff import symmetric_cutoff
from .estimates import (commutator_check, interpolation_check, leibniz_check,
                        local_smoothing_check, product_check, strichartz_check)
from .gamma import verify_gamma_bounds
from .grid import ConfigError, Field, FieldPath, GridSpec
from .linear import convergence_study, sample_psi
from .noise import HurstIndex, build_cells, evaluate_bn_grid, sample_noise
from .renorm import predicted_divergence, sigma_n, verify_asymptotics, wick_convergence_study
from .snapshot import write_snapshot
from .solver import (MildProblem, NoContraction, ParameterError, picard_solve,
                     select_parameters, smooth_convergence_experiment)


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: Path, header, rows, cfg_hash: str) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    lines.append(f"# config_hash={cfg_hash}")
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(outdir: Path, command: str, cfg: dict, cfg_hash: str,
                    t0: float, outputs) -> None:
    manifest = {
        "command": command,
        "config": cfg,
        "config_hash": cfg_hash,
        "code_version": __version__,
        "wall_time_s": time.time() - t0,
        "outputs": [str(o) for o in outputs],
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def _parse_levels(text: str):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",")]


def _parse_times(text: str):
    return [float(p) for p in text.split(",")]


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_sample_noise(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    H = HurstIndex.parse(args.hurst)
    grid = GridSpec(args.d, args.grid_n, args.grid_l, args.t_max, args.time_nodes)
    cells = build_cells(args.level, H, grid, DEFAULTS.cells_per_octave)
    real = sample_noise(args.seed, cells)
    times = grid.times()
    vals = np.stack([evaluate_bn_grid(real, t, grid) for t in times]).astype(np.complex128)
    fp = FieldPath(grid, times, vals)
    out = _outdir(args)
    snap = out / "noise.frsc"
    write_snapshot(snap, fp)
    _write_manifest(out, "sample-noise", cfg, h, t0, [snap])
    return 0


def cmd_linear_solution(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    H = HurstIndex.parse(args.hurst)
    grid = GridSpec(args.d, args.grid_n, args.grid_l, args.t_max, args.time_nodes)
    cells = build_cells(args.level, H, grid, DEFAULTS.cells_per_octave)
    real = sample_noise(args.seed, cells)
    fp = sample_psi(real, grid.times(), grid)
    out = _outdir(args)
    snap = out / "linear_solution.frsc"
    write_snapshot(snap, fp)
    _write_manifest(out, "linear-solution", cfg, h, t0, [snap])
    return 0


def cmd_psi_convergence(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    H = HurstIndex.parse(args.hurst)
    levels = _parse_levels(args.levels)
    grid = study_grid(args.d, max(levels), T=args.t_max, M=args.time_nodes)
    chi = default_chi(args.d)
    report = convergence_study(
        H, args.alpha, args.p, levels, args.realizations, chi, grid,
        seed=args.seed, cells_per_octave=DEFAULTS.cells_per_octave,
    )
    out = _outdir(args)
    csv = out / "psi_convergence.csv"
    rows = [
        (n, report.means[i], report.stderrs[i], report.slope)
        for i, n in enumerate(report.levels)
    ]
    _write_csv(csv, ["n", "mean_norm", "stderr", "slope"], rows, h)
    _write_manifest(out, "psi-convergence", cfg, h, t0, [csv])
    if report.flag:
        print(f"note: {report.flag}")
    return 0


def cmd_renorm_constant(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    H = HurstIndex.parse(args.hurst)
    if H.d != args.d:
        raise ConfigError(f"--d {args.d} does not match Hurst vector of dimension {H.d}")
    levels = _parse_levels(args.levels)
    kappa_div = -H.alpha_gap
    from .renorm import angular_constant

    c_ang = angular_constant(H)
    rows = []
    for n in levels:
        sig = sigma_n(args.t, H, n)
        pred = c_ang * predicted_divergence(2.0 * H.h0, max(kappa_div, 0.0), args.t, n)
        rows.append((n, args.t, sig, pred, sig / pred))
    out = _outdir(args)
    csv = out / "renorm_constant.csv"
    _write_csv(csv, ["n", "t", "sigma", "predicted", "ratio"], rows, h)
    _write_manifest(out, "renorm-constant", cfg, h, t0, [csv])
    return 0


def cmd_verify_asymptotics(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    report = verify_asymptotics(args.alpha, args.kappa, args.t, _parse_levels(args.levels))
    rows = list(zip(report.levels, report.values, report.predicted, report.ratios))
    out = _outdir(args)
    csv = out / "asymptotics.csv"
    _write_csv(csv, ["n", "value", "predicted", "ratio"], rows, h)
    _write_manifest(out, "verify-asymptotics", cfg, h, t0, [csv])
    return 0


def cmd_wick_convergence(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    H = HurstIndex.parse(args.hurst)
    levels = _parse_levels(args.levels)
    grid = study_grid(args.d, max(levels), T=args.t_max, M=args.time_nodes)
    chi = default_chi(args.d)
    report = wick_convergence_study(
        H, args.alpha, args.p, levels, args.realizations, chi, grid,
        seed=args.seed, cells_per_octave=DEFAULTS.cells_per_octave,
    )
    out = _outdir(args)
    csv = out / "wick_convergence.csv"
    rows = [
        (n, report.means[i], report.stderrs[i], report.slope)
        for i, n in enumerate(report.levels)
    ]
    _write_csv(csv, ["n", "mean_norm", "stderr", "slope"], rows, h)
    _write_manifest(out, "wick-convergence", cfg, h, t0, [csv])
    if report.flag:
        print(f"note: {report.flag}")
    return 0


def cmd_verify_gamma(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    report = verify_gamma_bounds(
        args.samples, args.kappa, args.lam, T=args.t_max, seed=args.seed,
        corollary_samples=args.corollary_samples,
    )
    rows = [
        (s, t, xi, r, args.kappa, args.lam, v, b, ratio)
        for (s, t, xi, r, v, b, ratio) in report.rows
    ]
    out = _outdir(args)
    csv = out / "gamma_bounds.csv"
    _write_csv(csv, ["s", "t", "xi", "r", "kappa", "lambda", "value", "bound_min", "ratio"], rows, h)
    outputs = [csv]
    if report.corollary_rows:
        csv2 = out / "gamma_corollary.csv"
        _write_csv(csv2, ["s", "t", "r", "integral", "envelope", "ratio"],
                   report.corollary_rows, h)
        outputs.append(csv2)
    _write_manifest(out, "verify-gamma", cfg, h, t0, outputs)
    return 0


_INEQUALITIES = ("strichartz", "leibniz", "product", "interpolation",
                 "local-smoothing", "commutator")


def cmd_inequality_lab(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    rho = default_rho(1)
    reports = []
    which = _INEQUALITIES if args.which == "all" else (args.which,)
    for name in which:
        if name == "strichartz":
            reports.append(strichartz_check(1, (8.0, 4.0), 0.0, args.samples, N=args.grid_n,
                                            seed=args.seed))
        elif name == "leibniz":
            reports.append(leibniz_check(0.5, 2.0, 4.0, 4.0, 4.0, 4.0, args.samples,
                                         N=args.grid_n, seed=args.seed))
        elif name == "product":
            reports.append(product_check(0.1, 0.3, 2.0, math.inf, 2.0, args.samples,
                                         N=args.grid_n, seed=args.seed))
        elif name == "interpolation":
            reports.append(interpolation_check(-0.4, 0.6, 2.0, 4.0, 0.5, args.samples,
                                               N=args.grid_n, seed=args.seed))
        elif name == "local-smoothing":
            reports.append(local_smoothing_check(1, rho, 0.2, 0.5, args.samples,
                                                 N=args.grid_n, seed=args.seed))
            reports.append(local_smoothing_check(1, rho, 0.2, 0.3, args.samples,
                                                 N=args.grid_n, seed=args.seed))
        elif name == "commutator":
            reports.append(commutator_check(rho, 0.5, args.samples, N=args.grid_n,
                                            seed=args.seed, k_scan=range(2, args.grid_n // 2, 8)))
            reports.append(commutator_check(rho, 1.3, args.samples, N=args.grid_n,
                                            seed=args.seed))
        else:
            raise ConfigError(f"unknown inequality {name!r} (choose from {_INEQUALITIES})")
    out = _outdir(args)
    rows = []
    stable = True
    for rep in reports:
        stable &= rep.refinement_stable()
        ns = sorted(rep.refinement)
        rows.append((rep.inequality, json.dumps(rep.params, sort_keys=True, default=str),
                     rep.samples, rep.constant, rep.refinement[ns[0]], rep.refinement[ns[-1]],
                     int(rep.refinement_stable())))
    csv = out / "inequalities.csv"
    _write_csv(csv, ["inequality", "params", "samples", "constant", "constant_coarse",
                     "constant_fine", "refinement_stable"], rows, h)
    outputs = [csv]
    scans = [rep for rep in reports if rep.scan]
    if scans:
        csv2 = out / "commutator_scan.csv"
        _write_csv(csv2, ["K", "ratio"], scans[0].scan, h)
        outputs.append(csv2)
    _write_manifest(out, "inequality-lab", cfg, h, t0, outputs)
    return 0 if stable else 1


def _load_solve_config(path: str) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def cmd_solve(args) -> int:
    cfg = _load_solve_config(args.config)
    h = _config_hash(cfg)
    t0 = time.time()
    try:
        hs = cfg["hurst"]
        gs = cfg["grid"]
        ss = cfg["solver"]
        out_cfg = cfg.get("output", {})
    except KeyError as exc:
        raise ConfigError(f"missing config section {exc}") from exc
    H = HurstIndex(hs["h0"], tuple(hs["hspace"]))
    grid = GridSpec(gs["d"], gs["n"], gs["l"], gs.get("t", 0.5), gs.get("m", 33))
    params = select_parameters(gs["d"], ss["regime"], ss["exponent"], hurst=H)
    rho = symmetric_cutoff(gs["d"], ss.get("rho_plateau", 2.5), ss.get("rho_support", 4.0))
    chi = symmetric_cutoff(gs["d"], ss.get("chi_plateau", 1.0), ss.get("chi_support", 2.0))
    level = ss.get("level", 3)
    seed = ss.get("seed", DEFAULTS.seed)
    cells = build_cells(level, H, grid, DEFAULTS.cells_per_octave)
    real = sample_noise(seed, cells)
    times = grid.times()
    psi = sample_psi(real, times, grid)
    rho_vals = rho.evaluate(grid)
    ell = FieldPath(grid, times, rho_vals[None] * psi.values)
    wick = None
    if params.regime == "rough":
        sig = np.array([sigma_n(t, H, level) for t in times])
        wick_vals = (rho_vals**2)[None] * (np.abs(psi.values) ** 2 - sig[(...,) + (None,) * grid.d])
        wick = FieldPath(grid, times, wick_vals.astype(np.complex128))
    phi = _phi_from_config(grid, params, ss)
    problem = MildProblem(grid, phi, rho, chi, ell, wick)
    out = Path(out_cfg.get("dir", "solve_out"))
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = picard_solve(problem, params, psi=psi)
    except NoContraction as exc:
        (out / "report.json").write_text(
            json.dumps({"status": "no_contraction", "trace": exc.trace}, indent=2, default=str)
        )
        print(f"no contraction: {exc}", file=sys.stderr)
        return 1
    snap_v = out / "solution_v.frsc"
    write_snapshot(snap_v, report.v)
    snap_u = out / "solution_u.frsc"
    write_snapshot(snap_u, report.u)
    payload = {
        "status": "ok",
        "iterations": report.iterations,
        "contraction_ratios": report.ratios,
        "residual": report.residual,
        "T_used": report.T_used,
        "halvings": report.halvings,
        "config_hash": h,
    }
    (out / "report.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_manifest(out, "solve", cfg, h, t0, [snap_v, snap_u, out / "report.json"])
    return 0


def _phi_from_config(grid: GridSpec, params, ss: dict) -> Field:
    x = grid.axis_points()
    x = np.where(x >= grid.L / 2, x - grid.L, x)
    prof = np.ones(grid.shape)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.N
        prof = prof * np.exp(-0.5 * x**2).reshape(shape)
    phi = Field(grid, prof.astype(np.complex128))
    amp = ss.get("phi_amplitude", 0.1)
    s = params.exponent if params.regime == "regular" else -2.0 * params.exponent
    from .grid import sobolev_norm

    norm = sobolev_norm(phi, s, 2.0)
    return Field(grid, phi.values * (amp / norm))


def cmd_solution_convergence(args) -> int:
    cfg = vars(args).copy()
    cfg.pop("func", None)
    h = _config_hash(cfg)
    t0 = time.time()
    H = HurstIndex.parse(args.hurst)
    levels = _parse_levels(args.levels)
    grid = study_grid(args.d, max(levels), T=args.t_max, M=args.time_nodes)
    params = select_parameters(args.d, args.regime, args.exponent, hurst=H)
    rho = default_rho(args.d)
    chi = default_chi(args.d)
    phi = _phi_from_config(grid, params, {"phi_amplitude": args.phi_amplitude})
    out = _outdir(args)
    try:
        report = smooth_convergence_experiment(
            H, levels, args.seed, grid, phi, rho, chi, params,
            cells_per_octave=DEFAULTS.cells_per_octave,
        )
    except NoContraction as exc:
        print(f"no contraction: {exc}", file=sys.stderr)
        return 1
    csv = out / "solution_convergence.csv"
    rows = [(n, report.means[i], report.slope, report.T0) for i, n in enumerate(report.levels)]
    _write_csv(csv, ["n", "diff_norm", "slope", "T0"], rows, h)
    _write_manifest(out, "solution-convergence", cfg, h, t0, [csv])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(sp, *, grid_args=True, hurst=True):
    if hurst:
        sp.add_argument("--hurst", required=True, help="H0,H1[,H2[,H3]]")
        sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--seed", type=int, default=DEFAULTS.seed)
    sp.add_argument("--out", default="out")
    if grid_args:
        sp.add_argument("--t-max", type=float, default=1.0)
        sp.add_argument("--time-nodes", type=int, default=9)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracschro",
                                 description="numerical laboratory for the fractional quadratic "
                                             "stochastic Schrodinger equation")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample-noise", help="snapshot of the smooth sheet approximation")
    _add_common(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--grid-n", type=int, default=256)
    sp.add_argument("--grid-l", type=float, default=40.0)
    sp.set_defaults(func=cmd_sample_noise)

    sp = sub.add_parser("linear-solution", help="snapshot of the sampled linear solution")
    _add_common(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--grid-n", type=int, default=256)
    sp.add_argument("--grid-l", type=float, default=40.0)
    sp.set_defaults(func=cmd_linear_solution)

    sp = sub.add_parser("psi-convergence", help="multilevel decay of the linear solution")
    _add_common(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--levels", default="2..6")
    sp.add_argument("--realizations", type=int, default=200)
    sp.set_defaults(func=cmd_psi_convergence)

    sp = sub.add_parser("renorm-constant", help="renormalization constant across levels")
    _add_common(sp, grid_args=False)
    sp.add_argument("--levels", default="4..10")
    sp.add_argument("--t", type=float, default=1.0)
    sp.set_defaults(func=cmd_renorm_constant)

    sp = sub.add_parser("verify-asymptotics", help="reduced divergence integral vs its limit")
    _add_common(sp, grid_args=False, hurst=False)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--kappa", type=float, required=True)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--levels", default="4..10")
    sp.set_defaults(func=cmd_verify_asymptotics)

    sp = sub.add_parser("wick-convergence", help="multilevel decay of the renormalized square")
    _add_common(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--levels", default="2..6")
    sp.add_argument("--realizations", type=int, default=200)
    sp.set_defaults(func=cmd_wick_convergence)

    sp = sub.add_parser("verify-gamma", help="empirical constants for the kernel bounds")
    _add_common(sp, grid_args=False, hurst=False)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--kappa", type=float, default=0.3)
    sp.add_argument("--lam", type=float, default=0.5)
    sp.add_argument("--t-max", type=float, default=1.0)
    sp.add_argument("--corollary-samples", type=int, default=0)
    sp.set_defaults(func=cmd_verify_gamma)

    sp = sub.add_parser("inequality-lab", help="fitted constants for the solver inequalities")
    _add_common(sp, grid_args=False, hurst=False)
    sp.add_argument("--which", default="all",
                    help=f"one of {', '.join(_INEQUALITIES)} or 'all'")
    sp.add_argument("--samples", type=int, default=12)
    sp.add_argument("--grid-n", type=int, default=256)
    sp.set_defaults(func=cmd_inequality_lab)

    sp = sub.add_parser("solve", help="one Picard solve from a TOML problem config")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("solution-convergence", help="coupled-level solution differences")
    _add_common(sp)
    sp.add_argument("--regime", choices=("regular", "rough"), required=True)
    sp.add_argument("--exponent", type=float, required=True)
    sp.add_argument("--levels", default="2..5")
    sp.add_argument("--phi-amplitude", type=float, default=0.1)
    sp.set_defaults(func=cmd_solution_convergence)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, ValueError, KeyError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except NoContraction as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
