"""Command-line entry point: simulate, check, sweep, spectrum, picard.

Exit codes: 0 ok, 1 runtime failure, 2 configuration error, 3 invariant
failure (check only).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import SWEEPABLE, ConfigError, RunConfig, parse_config, with_value
from .dynamics import assemble_linear, run
from .spectral import assemble_B, lambda_paper, rayleigh_sup, rayleigh_sup_interior, spectrum
from .wellposedness import NonContractionError, f_norm, picard_solve, sample_trajectory

CSV_COLUMNS = ("t", "E", "L2b_sq", "lyapunov", "ux0", "vx0", "Q", "damping_integral")
SUMMARY_KEYS = ("C", "eta", "r_squared", "residual_10", "residual_11", "smoothing_ratio")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3


def fmt(v) -> str:
    return format(float(v), ".17g")


def simulate_config(cfg: RunConfig, store_states: bool = False):
    grid = cfg.grid()
    traj = run(cfg.initial_state(grid), cfg.T, cfg.stepper(), cfg.params(), cfg.profile(),
               cfg.weight(), grid, linear=cfg.linear, store_states=store_states)
    return traj


def summarize(cfg: RunConfig, traj) -> dict:
    params, profile, weight, grid = cfg.params(), cfg.profile(), cfg.weight(), cfg.grid()
    out = dict.fromkeys(SUMMARY_KEYS, math.nan)
    t = np.array([d.t for d in traj.diagnostics])
    nrm = np.sqrt([d.weighted_norm_sq for d in traj.diagnostics])
    try:
        fit = dg.fit_decay(t, nrm, cfg.fit_window())
        out.update(C=fit.C, eta=fit.eta, r_squared=fit.r_squared)
    except ValueError:
        pass
    if len(traj.series) >= 2:
        out["residual_10"] = dg.dissipation_identity_residual(traj, params, profile, grid).relative
        out["residual_11"] = dg.weighted_identity_residual(traj, params, profile, weight, grid).relative
        try:
            out["smoothing_ratio"] = dg.smoothing_ratio(traj, weight, grid)
        except ValueError:
            pass
    return out


def write_csv(path: Path, traj) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for d in traj.diagnostics:
            row = (d.t, d.energy, d.weighted_norm_sq, d.lyapunov, d.ux0, d.vx0,
                   d.boundary_form, d.damping_integral)
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_summary(path: Path, items: dict) -> None:
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={fmt(v) if isinstance(v, (float, int, np.floating)) and not isinstance(v, bool) else v}\n")


def cmd_simulate(cfg: RunConfig, out: Path, say) -> int:
    traj = simulate_config(cfg)
    summary = summarize(cfg, traj)
    write_csv(out / "trajectory.csv", traj)
    write_summary(out / "summary.txt", summary)
    for k, v in summary.items():
        say(f"{k} = {fmt(v)}")
    return EXIT_OK


def random_decaying_state(rng: np.random.Generator, grid, b: float):
    """Smooth field decaying faster than e^{-bx}, with u(0) = v(0) = 0."""
    x = grid.x
    fields = []
    for _ in range(2):
        f = np.zeros_like(x)
        for _ in range(rng.integers(1, 4)):
            kappa = b + rng.uniform(0.5, 3.0)
            p = rng.integers(1, 4)
            f += rng.normal() * x ** p * np.exp(-kappa * x)
        c = rng.uniform(0.5, 0.6 * grid.L)
        f += rng.normal() * (1 - np.exp(-x)) * np.exp(-((x - c) / rng.uniform(0.3, 2.0)) ** 2)
        f[-1] = 0.0
        fields.append(f)
    return dg.State(0.0, fields[0], fields[1])


def random_compact_state(rng: np.random.Generator, grid):
    """Sum of cos^2 bumps supported inside (0, 0.8 L)."""
    x = grid.x
    fields = []
    for _ in range(2):
        f = np.zeros_like(x)
        for _ in range(rng.integers(1, 5)):
            w = rng.uniform(0.3, 3.0)
            c = rng.uniform(w, 0.8 * grid.L - w)
            z = (x - c) / w
            f += rng.normal() * np.where(np.abs(z) < 1, np.cos(0.5 * np.pi * z) ** 2, 0.0)
        fields.append(f)
    return dg.State(0.0, fields[0], fields[1])


def run_checks(cfg: RunConfig, seed: int) -> list:
    """Evaluate the invariant suite; returns rows (name, passed, detail)."""
    params, profile, weight, grid = cfg.params(), cfg.profile(), cfg.weight(), cfg.grid()
    rows = []
    bad = cfg.violations()
    rows.append(("validation", not bad, "; ".join(bad) or "ok"))
    try:
        traj = simulate_config(cfg)
    except (FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        traj = None
        rows.append(("simulation", False, str(exc)))
    if traj is not None:
        ev = dg.energy_violation(traj, params, grid)
        rows.append(("energy_monotone", ev <= 1e-8, f"max increase/E0 = {ev:.3e}"))
        r10 = dg.dissipation_identity_residual(traj, params, profile, grid).relative
        rows.append(("identity_10", r10 <= 5e-3, f"relative residual = {r10:.3e}"))
        r11 = dg.weighted_identity_residual(traj, params, profile, weight, grid).relative
        rows.append(("identity_11", r11 <= 5e-3, f"relative residual = {r11:.3e}"))
        t = np.array([d.t for d in traj.diagnostics])
        nrm = np.sqrt([d.weighted_norm_sq for d in traj.diagnostics])
        try:
            fit = dg.fit_decay(t, nrm, cfg.fit_window())
            lo, hi = fit.window
            m = (t >= lo - 1e-12) & (t <= hi + 1e-12) & (nrm > 0)
            over = float(np.max(fit.envelope(t[m]) / nrm[m]) - 1)
            ok = fit.eta > 0 and fit.r_squared >= 0.98 and over <= 0.10
            rows.append(("decay_fit", ok, f"eta = {fit.eta:.4g}, r2 = {fit.r_squared:.4f}, "
                                          f"over-prediction = {over:.3f}"))
        except ValueError as exc:
            rows.append(("decay_fit", False, str(exc)))
        lyap = dg.series_lyapunov(traj, weight, grid)
        rows.append(("lyapunov_decrease", lyap[-1] < lyap[0],
                     f"L(T) = {lyap[-1]:.4e}, L(0) = {lyap[0]:.4e}"))
        if weight.b > 0:
            rep = dg.lyapunov_bound_checks(traj, params, profile, weight, grid)
            rows.append(("c7_bound", rep["c7_ratio"] <= 1, f"ratio = {rep['c7_ratio']:.4f}"))
        else:
            rows.append(("c7_bound", True, "skipped (b = 0)"))
    rng = np.random.default_rng(seed)
    worst = max(dg.agmon_check(random_decaying_state(rng, grid, weight.b), weight, grid)[2]
                for _ in range(cfg.check_trials))
    rows.append(("agmon", worst < 1, f"max ratio over {cfg.check_trials} fields = {worst:.4f}"))
    if weight.b > 0:
        fails = 0
        for _ in range(cfg.check_trials):
            lhs, rhs = dg.poincare_check(random_compact_state(rng, grid), weight, grid)
            fails += lhs > rhs
        rows.append(("poincare", fails == 0, f"{cfg.check_trials - fails}/{cfg.check_trials} hold"))
    else:
        rows.append(("poincare", True, "skipped (b = 0)"))
    sgrid = cfg.grid(cfg.spectrum_N)
    B = assemble_B(params, profile, weight, sgrid)
    lam = lambda_paper(params, weight)
    sup = rayleigh_sup(B, params, sgrid)
    rows.append(("certificate", sup <= lam + cfg.certificate_tol,
                 f"rayleigh_sup = {sup:.6g}, lambda_paper = {lam:.6g}, "
                 f"interior-only = {rayleigh_sup_interior(B):.6g}"))
    return rows


def cmd_check(cfg: RunConfig, out: Path, say, seed: int) -> int:
    rows = run_checks(cfg, seed)
    width = max(len(r[0]) for r in rows)
    lines = [f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}" for name, ok, detail in rows]
    for line in lines:
        say(line)
    (out / "check.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_INVARIANT


def _sweep_row(args):
    cfg, key, value = args
    row = {"param": key, "value": value}
    try:
        c = with_value(cfg, key, value)
        bad = [] if c.bypass_validation else c.violations()
        if bad:
            raise ConfigError("; ".join(bad))
        row.update(summarize(c, simulate_config(c)))
        row["status"] = "ok"
    except Exception as exc:  # rows fail independently
        row.update(dict.fromkeys(SUMMARY_KEYS, math.nan))
        row["status"] = f"error: {exc}".replace(",", ";")
    return row


def sweep_rows(cfg: RunConfig, workers: int | None = None) -> list:
    key = cfg.sweep_param
    values = cfg.sweep_list()
    if key not in SWEEPABLE or not values:
        raise ConfigError("sweep needs sweep_param in {%s} and sweep_values" % ", ".join(SWEEPABLE))
    jobs = [(cfg, key, v) for v in values]
    workers = workers or cfg.sweep_workers or min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        return [_sweep_row(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_sweep_row, jobs))


def cmd_sweep(cfg: RunConfig, out: Path, say) -> int:
    rows = sweep_rows(cfg)
    cols = ("param", "value") + SUMMARY_KEYS + ("status",)
    with open(out / "sweep.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(fmt(r[c]) if c in SUMMARY_KEYS or c == "value" else str(r[c])
                              for c in cols) + "\n")
    for r in rows:
        say(f"{r['param']}={r['value']:g}  eta={r['eta']:.6g}  r2={r['r_squared']:.4f}  {r['status']}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out: Path, say) -> int:
    params, profile, weight = cfg.params(), cfg.profile(), cfg.weight()
    grid = cfg.grid(cfg.spectrum_N)
    B = assemble_B(params, profile, weight, grid)
    lam = lambda_paper(params, weight)
    dense = rayleigh_sup(B, params, grid, method="dense")
    power = rayleigh_sup(B, params, grid, method="power")
    items = {
        "lambda_paper": lam,
        "rayleigh_sup": dense,
        "rayleigh_sup_power": power,
        "margin": lam - dense,
        "passed": str(dense <= lam + cfg.certificate_tol).lower(),
        "rayleigh_sup_interior": rayleigh_sup_interior(B),
    }
    for k, ev in enumerate(spectrum(B, cfg.spectrum_count)):
        items[f"eig_{k}"] = f"{fmt(ev.real)}{'+' if ev.imag >= 0 else '-'}{fmt(abs(ev.imag))}j"
    write_summary(out / "spectrum.txt", items)
    for k, v in items.items():
        say(f"{k} = {v}")
    return EXIT_OK


def cmd_picard(cfg: RunConfig, out: Path, say) -> int:
    params, profile, weight = cfg.params(), cfg.profile(), cfg.weight()
    grid = cfg.grid(cfg.picard_N)
    dt, T = cfg.picard_dt, cfg.picard_T
    U0 = cfg.initial_state(grid)
    matrix = assemble_linear(params, profile, grid, dt)
    res = picard_solve(U0, T, params, profile, weight, grid, dt, tol=cfg.picard_tol,
                       max_iter=cfg.picard_max_iter, matrix=matrix)
    from .dynamics import StepperConfig
    traj = run(U0, T, StepperConfig(dt=dt, stride=1), params, profile, weight, grid, matrix=matrix)
    imex = sample_trajectory(traj.states, grid)
    ref = f_norm(imex, weight, grid)
    diff = f_norm(res.field - imex, weight, grid) / ref if ref > 0 else 0.0
    items = {
        "iterations": res.iterations,
        "converged": str(res.converged).lower(),
        "increments": ";".join(fmt(v) for v in res.increments),
        "ratios": ";".join(fmt(v) for v in res.ratios),
        "imex_rel_diff": diff,
    }
    write_summary(out / "picard.txt", items)
    for k, v in items.items():
        say(f"{k} = {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gearkdv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "check", "sweep", "spectrum", "picard"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", default="out", metavar="DIR")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = (lambda *a: None) if args.quiet else print
    try:
        text = Path(args.config).read_text()
        overrides = list(args.override)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = parse_config(text, overrides)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, out, say)
        if args.command == "check":
            return cmd_check(cfg, out, say, cfg.seed)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, say)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out, say)
        if args.command == "picard":
            return cmd_picard(cfg, out, say)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError, RuntimeError, NonContractionError,
            ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
