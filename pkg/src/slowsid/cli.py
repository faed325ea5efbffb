"""Command-line front end: ``slowsid {check,frf,pem,mc} CONFIG``.

Exit codes: 0 success, 1 failed check / estimation / convergence, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .exceptions import IdentifiabilityError, IllConditioned, LeakagePresent, Overlap
from .experiments import derive_seed, noise_sigma, run_monte_carlo_frf, run_monte_carlo_pem
from .frf import etfe_frf, ls_frf
from .lti import NoiseSpec, add_noise, simulate_stationary, true_frf_vector
from .pem import ParameterVector, gauss_newton, identifiability_rank
from .signals import check_no_leakage, check_non_overlap, default_tolerance, fold_frequency

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

FRF_HEADER = ["omega_rad_s", "re_true", "im_true", "re_est", "im_est", "var_re", "var_im", "cond"]
MC_FRF_HEADER = ["omega_rad_s", "re_true", "im_true", "re_mean", "im_mean", "re_bias", "im_bias",
                 "abs_bias", "std_error", "var_empirical", "var_theory", "half_width_95"]
MC_PEM_HEADER = ["row_type", "N", "parameter", "true_value", "mean", "mse", "std_error",
                 "runs_used", "runs_excluded", "slope"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    return format(x, ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out: Path, cfg, started, outputs, extra=None):
    manifest = {
        "config_digest": cfgmod.digest(cfg),
        "tool_version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def read_samples(path) -> np.ndarray:
    """Output samples from a CSV: a column named ``y``, else the first column."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise cfgmod.ConfigError(f"{path}: no data")
    col = 0
    try:
        float(rows[0][0])
    except ValueError:
        header = [c.strip().lower() for c in rows[0]]
        col = header.index("y") if "y" in header else 0
        rows = rows[1:]
    try:
        return np.array([float(r[col]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise cfgmod.ConfigError(f"{path}: bad sample row ({exc})") from None


def _load(args):
    cfg = cfgmod.load(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def _measurements(cfg, args):
    """``(y, sigma)``; ``sigma`` is None when it must be estimated from data."""
    if args.simulate:
        if cfg.system is None:
            raise cfgmod.ConfigError("--simulate needs a system in the config")
        x = simulate_stationary(cfg.system, cfg.input, cfg.grid)
        sigma = noise_sigma(cfg, x)
        return add_noise(x, NoiseSpec(sigma, derive_seed(cfg.master_seed, 0, 0))), sigma
    if not args.data:
        raise cfgmod.ConfigError("give a data file or --simulate")
    y = read_samples(args.data)
    if y.size != cfg.grid.count:
        raise cfgmod.ConfigError(f"data has {y.size} samples, grid expects {cfg.grid.count}")
    return y, cfg.noise_std


def cmd_check(cfg, args) -> int:
    u, h = cfg.input, cfg.grid.period
    tol = cfg.tol if cfg.tol is not None else default_tolerance(h)
    ok = True
    print(f"sampling period h = {h:g} s, Nyquist frequency = {np.pi / h:.6g} rad/s, "
          f"N = {cfg.grid.count}, M = {u.M}")

    rank = identifiability_rank(u, h, tol)
    print("\n  l  omega_rad_s        folded_rad_s       line")
    for l, line in enumerate(rank.lines, start=1):
        if line.classification == "overlaps":
            note = f"overlaps with component {line.overlaps_with}"
        elif line.classification == "at_nyquist_multiple":
            note = f"at_nyquist_multiple (n = {fold_frequency(line.original_frequency, h, tol).nyquist_multiple})"
        else:
            note = "distinct"
        print(f"{l:3d}  {line.original_frequency:<17.10g}  {line.folded_frequency:<17.10g}  {note}")

    report = check_non_overlap(u, h, tol)
    print(f"\nnon-overlap after aliasing: {'PASS' if report.satisfied else 'FAIL'}")
    for v in report.violations:
        if v.kind == "nyquist":
            print(f"  component {v.first} at {v.n} * pi/h (at_nyquist_multiple)")
        else:
            op = "-" if v.kind == "difference" else "+"
            print(f"  w{v.second} {op} w{v.first} = {v.n} * 2pi/h")
    ok &= report.satisfied

    leak = check_no_leakage(u, cfg.grid, tol)
    requested = cfg.check_leakage
    print(f"no spectral leakage: {'PASS' if leak else 'FAIL'}"
          + ("" if requested else " (informational)"))
    if requested:
        ok &= leak

    print(f"identifiability rank: {rank.rank}")
    if cfg.mode == "pem":
        try:
            n_theta = cfg.model_structure().n_params
        except ValueError as exc:
            raise cfgmod.ConfigError(str(exc)) from None
        fits = n_theta <= rank.rank
        print(f"model parameters n_theta = {n_theta}: {'PASS' if fits else 'FAIL'}")
        ok &= fits
        if not report.satisfied and fits:
            print(f"note: lines overlap, so the FRF least-squares estimate is not defined, but the "
                  f"prediction-error estimate remains consistent for n_theta <= {rank.rank}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_frf(cfg, args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    y, sigma = _measurements(cfg, args)
    try:
        est = ls_frf(cfg.input, cfg.grid, y, sigma=sigma, tol=cfg.tol)
        values = etfe_frf(cfg.input, cfg.grid, y, tol=cfg.tol) if args.etfe else est.values
    except (IllConditioned, Overlap, LeakagePresent) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    truth = true_frf_vector(cfg.system, cfg.input) if cfg.system is not None else None
    var_re, var_im = est.part_variances()
    rows = []
    for i, w in enumerate(est.omegas):
        t = truth[i] if truth is not None else None
        rows.append([w, None if t is None else t.real, None if t is None else t.imag,
                     values[i].real, values[i].imag, var_re[i], var_im[i], est.condition_number])
    path = out / "frf.csv"
    _write_csv(path, FRF_HEADER, rows)
    _write_manifest(out, cfg, started, [path],
                    {"command": "frf", "estimator": "etfe" if args.etfe else "ls",
                     "sigma": est.sigma_used})
    print(f"wrote {path} ({len(rows)} rows, cond = {est.condition_number:.4g})")
    return EXIT_OK


def cmd_pem(cfg, args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        structure = cfg.model_structure()
    except ValueError as exc:
        raise cfgmod.ConfigError(str(exc)) from None
    rank = identifiability_rank(cfg.input, cfg.grid.period, cfg.tol).rank
    if structure.n_params > rank:
        msg = (f"{structure.n_params} parameters exceed the identifiability rank {rank} "
               "of this input")
        if not args.force:
            print(f"error: {msg}; use --force to fit anyway", file=sys.stderr)
            return EXIT_FAIL
        print(f"warning: {msg}", file=sys.stderr)

    if cfg.pem.theta_init is not None:
        init = np.asarray(cfg.pem.theta_init, float)
    elif cfg.system is not None:
        theta0 = structure.theta_of(cfg.system)
        rng = np.random.default_rng(derive_seed(cfg.master_seed, 0, 0, 1))
        init = theta0 * (1 + cfg.pem.init_perturbation * rng.uniform(-1, 1, theta0.size))
    else:
        raise cfgmod.ConfigError("pem needs pem.theta_init or a system to perturb")
    try:
        init_pv = ParameterVector(structure, init)
    except ValueError as exc:
        raise cfgmod.ConfigError(str(exc)) from None

    y, _ = _measurements(cfg, args)
    fit = gauss_newton(init_pv, cfg.input, cfg.grid, y, cfg.pem.options)
    pem_path = out / "pem.csv"
    header = structure.names + ["final_cost", "iterations", "converged", "stable"]
    _write_csv(pem_path, header,
               [list(fit.theta_hat.theta) + [fit.final_cost, fit.iterations_used,
                                             fit.converged, fit.stable]])
    traj_path = out / "pem_trajectory.csv"
    _write_csv(traj_path, ["iteration", "cost"], list(enumerate(fit.cost_trajectory)))
    _write_manifest(out, cfg, started, [pem_path, traj_path],
                    {"command": "pem", "message": fit.message, "damping_used": fit.damping_used})
    print(f"wrote {pem_path} and {traj_path}: {fit.message} after {fit.iterations_used} iterations")
    if not fit.stable:
        print("warning: fitted model is not asymptotically stable", file=sys.stderr)
    if fit.diverged or not fit.converged:
        print("error: Gauss-Newton did not converge", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_mc(cfg, args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "mc_summary.csv"
    try:
        if cfg.mode == "frf":
            s = run_monte_carlo_frf(cfg)
            var_emp = np.real(np.diag(s.empirical_covariance))
            var_th = np.real(np.diag(s.theoretical_covariance))
            rows = []
            for i, w in enumerate(s.omegas):
                t, m = s.true_values[i], s.mean[i]
                rows.append([w, t.real, t.imag, m.real, m.imag, (m - t).real, (m - t).imag,
                             abs(m - t), s.standard_error[i], var_emp[i], var_th[i],
                             s.half_width_95[i]])
            _write_csv(path, MC_FRF_HEADER, rows)
        else:
            s = run_monte_carlo_pem(cfg)
            rows = []
            for i, N in enumerate(s.n_grid):
                excluded = s.runs_diverged[i] + s.runs_unstable[i]
                for j, name in enumerate(s.parameter_names):
                    rows.append(["estimate", N, name, s.theta_true[j], s.mean[i, j], s.mse[i, j],
                                 s.std_error[i, j], s.runs_used[i], excluded, None])
            for j, name in enumerate(s.parameter_names):
                rows.append(["slope", None, name, s.theta_true[j], None, None, None, None, None,
                             s.slopes[j]])
            _write_csv(path, MC_PEM_HEADER, rows)
            for w in s.warnings:
                print(f"warning: {w}", file=sys.stderr)
    except (Overlap, IllConditioned, IdentifiabilityError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write_manifest(out, cfg, started, [path], {"command": "mc", "mode": cfg.mode})
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slowsid",
        description="Identify continuous-time systems from slow-sampled multisine data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        if data:
            p.add_argument("data", nargs="?", help="CSV of output samples y(kh), k=1..N")
            p.add_argument("--simulate", action="store_true",
                           help="simulate noisy data from the config's system instead")

    p = sub.add_parser("check", help="aliasing, leakage and identifiability checks")
    common(p)
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("frf", help="least-squares FRF estimate")
    common(p, data=True)
    p.add_argument("--etfe", action="store_true", help="use the DTFT-quotient form")
    p.set_defaults(func=cmd_frf)
    p = sub.add_parser("pem", help="prediction-error parametric fit")
    common(p, data=True)
    p.add_argument("--force", action="store_true",
                   help="fit even if n_theta exceeds the identifiability rank")
    p.set_defaults(func=cmd_pem)
    p = sub.add_parser("mc", help="Monte Carlo study per the config's mode")
    common(p)
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _load(args)
        return args.func(cfg, args)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
