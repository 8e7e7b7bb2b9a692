"""
``rpf`` command-line interface.

    rpf bode|design|sweep|validate [--config PATH] [--axis delta1|delta2]
        [--include-sql] [--out DIR] [--seed N] [--svg]

Each command computes everything first and only then writes its files
under the output directory, so a failing run leaves no partial output.

Exit codes: 0 success, 1 config/validation error, 2 solver infeasibility,
3 I/O error, 4 Monte-Carlo check failed (``validate`` only).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..analysis import SweepAxis, augment, closed_loop_error, sweep
from ..errors import InvalidConfigError, RpfError, SolverError, UnstableLoopError
from ..filters import design_kalman, design_robust, optimize_epsilon
from ..model import (
    Delta,
    build_homodyne_measurement,
    build_process_model,
    build_uncertainty,
    frequency_response,
    realize_plant,
)
from ..sim import simulate
from . import svg
from .config import RunConfig, load_config, rad_s_to_hz

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3, 4

# (mu1, mu2, axis) of the six robust-vs-Kalman comparison sweeps
SWEEP_CONFIGS = (
    (0.2, 0.0, SweepAxis.DELTA1),
    (0.5, 0.0, SweepAxis.DELTA1),
    (0.8, 0.0, SweepAxis.DELTA1),
    (0.0, 0.3, SweepAxis.DELTA2),
    (0.0, 0.5, SweepAxis.DELTA2),
    (0.0, 0.9, SweepAxis.DELTA2),
)
VALIDATE_TOL = 0.05


@dataclass
class Outputs:
    files: dict = field(default_factory=dict)
    report: str = ""
    ok: bool = True


def num(v) -> str:
    """Lowercase scientific notation with 9 significant digits."""
    return f"{v:.8e}"


def _csv(header, rows) -> str:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


def _tag(v) -> str:
    return f"{v:g}"


def cmd_bode(cfg: RunConfig, svg_out=False) -> Outputs:
    params = cfg.params
    lo, hi = cfg.bode_range
    omegas = np.logspace(math.log10(lo), math.log10(hi), cfg.bode_points)
    resp = frequency_response(params, omegas)
    rows = [
        (num(w), num(rad_s_to_hz(w)), num(mag), num(ph)) for w, (mag, ph) in zip(omegas, resp)
    ]
    out = Outputs()
    out.files["bode.csv"] = _csv(("omega_rad_s", "freq_hz", "mag_db", "phase_deg"), rows)
    i_peak = int(np.argmax([m for m, _ in resp]))
    out.report = (
        f"bode: {len(rows)} points over [{lo:.6g}, {hi:.6g}] rad/s; "
        f"peak {resp[i_peak][0]:.4f} dB at {omegas[i_peak]:.6g} rad/s\n"
    )
    if svg_out:
        hz = [rad_s_to_hz(w) for w in omegas]
        out.files["bode.svg"] = svg.render(
            [
                svg.Panel([svg.Series("|G|", hz, [m for m, _ in resp])], "", "magnitude (dB)", xlog=True,
                          title="Resonant noise process"),
                svg.Panel([svg.Series("arg G", hz, [p for _, p in resp])], "frequency (Hz)", "phase (deg)", xlog=True),
            ]
        )
    return out


def cmd_design(cfg: RunConfig, svg_out=False) -> Outputs:
    proc = build_process_model(cfg.params)
    meas = build_homodyne_measurement(cfg.alpha_mag)
    unc = build_uncertainty(cfg.params, cfg.mu1, cfg.mu2)
    kal = design_kalman(proc, meas)
    scan = optimize_epsilon(proc, meas, unc, cfg.eps_lo, cfg.eps_hi, cfg.eps_points)
    rob = design_robust(proc, meas, unc, scan.epsilon_opt)
    P, K, Qt = kal.design_cov, kal.gain.ravel(), rob.design_cov

    items = [
        ("P11", num(P[0, 0])), ("P12", num(P[0, 1])), ("P22", num(P[1, 1])),
        ("K1", num(K[0])), ("K2", num(K[1])),
        ("mu1", num(cfg.mu1)), ("mu2", num(cfg.mu2)),
        ("epsilon_opt", num(scan.epsilon_opt)), ("q_plus_opt", num(scan.q_plus_opt)),
        ("Qt11", num(Qt[0, 0])), ("Qt12", num(Qt[0, 1])), ("Qt22", num(Qt[1, 1])),
        ("boundary_flag", "1" if scan.boundary_flag else "0"),
    ]
    scan_rows = [
        (num(e), num(q) if math.isfinite(q) else "", "1" if math.isfinite(q) else "0")
        for e, q in zip(scan.epsilons, scan.q_plus)
    ]
    out = Outputs()
    out.files["design.csv"] = _csv(("name", "value"), items)
    out.files["eps_scan.csv"] = _csv(("epsilon", "q_plus", "feasible"), scan_rows)
    lines = [
        "Kalman filter (homodyne)",
        f"  P = [[{num(P[0, 0])}, {num(P[0, 1])}], [{num(P[1, 0])}, {num(P[1, 1])}]]",
        f"  K = [{num(K[0])}, {num(K[1])}]",
        f"Robust filter (mu1={_tag(cfg.mu1)}, mu2={_tag(cfg.mu2)})",
        f"  epsilon_opt = {num(scan.epsilon_opt)}   Q+ = {num(scan.q_plus_opt)}",
        f"  Q~ = [[{num(Qt[0, 0])}, {num(Qt[0, 1])}], [{num(Qt[1, 0])}, {num(Qt[1, 1])}]]",
        f"  feasible epsilons: {int(scan.feasible.sum())}/{scan.epsilons.size}",
    ]
    if scan.boundary_flag:
        lines.append("  note: optimum lies on the scan boundary (no interior minimum)")
    out.report = "\n".join(lines) + "\n"
    if svg_out:
        out.files["eps_scan.svg"] = svg.render(
            [svg.Panel([svg.Series("Q+", scan.epsilons, scan.q_plus)], "epsilon", "Q+ (rad^2)",
                       xlog=True, ylog=True, title=f"Q+ vs epsilon, mu1={_tag(cfg.mu1)}, mu2={_tag(cfg.mu2)}")]
        )
    return out


def sweep_filename(axis, mu1, mu2) -> str:
    return f"sweep_{SweepAxis(axis).value}_mu1_{_tag(mu1)}_mu2_{_tag(mu2)}.csv"


def cmd_sweep(cfg: RunConfig, axis="delta1", include_sql=False, svg_out=False) -> Outputs:
    axis = SweepAxis(axis)
    unc = build_uncertainty(cfg.params, cfg.mu1, cfg.mu2)
    grid = np.linspace(-1.0, 1.0, cfg.delta_points)
    res = sweep(cfg.params, cfg.alpha_mag, unc, axis, grid, include_sql,
                scan_lo=cfg.eps_lo, scan_hi=cfg.eps_hi, scan_points=cfg.eps_points)
    rows = []
    for p in res.points:
        if p.is_gap:
            rows.append((num(p.delta), "gap", "gap", "gap" if include_sql else ""))
            continue
        sql = num(p.sigma2_sql) if p.sigma2_sql is not None else ""
        rows.append((num(p.delta), num(p.sigma2_robust), num(p.sigma2_kalman), sql))
    name = sweep_filename(axis, cfg.mu1, cfg.mu2)
    out = Outputs()
    out.files[name] = _csv(("delta", "sigma2_robust", "sigma2_kalman", "sigma2_sql"), rows)
    n_gap = sum(p.is_gap for p in res.points)
    out.report = (
        f"sweep {axis.value}: mu1={_tag(cfg.mu1)} mu2={_tag(cfg.mu2)} epsilon={num(res.epsilon_opt)} "
        f"Q~11={num(res.q_bound)} points={len(rows)} gaps={n_gap} -> {name}\n"
    )
    if svg_out:
        series = [
            svg.Series("robust filter", res.deltas, res.column("sigma2_robust")),
            svg.Series("Kalman filter", res.deltas, res.column("sigma2_kalman")),
        ]
        if include_sql:
            series.append(svg.Series("SQL", res.deltas, res.column("sigma2_sql")))
        out.files[name[:-4] + ".svg"] = svg.render(
            [svg.Panel(series, axis.value, "sigma^2 (rad^2)", ylog=True,
                       title=f"mu1={_tag(cfg.mu1)}, mu2={_tag(cfg.mu2)}")]
        )
    return out


def spot_points(cfg: RunConfig):
    """Closed loops checked by ``validate``: nominal Kalman, then robust at delta=-1 per sweep configuration."""
    params = cfg.params
    proc = build_process_model(params)
    meas = build_homodyne_measurement(cfg.alpha_mag)
    pts = [("nominal", "kalman", 0.0, 0.0, Delta(0.0, 0.0), augment(proc, design_kalman(proc, meas)))]
    for mu1, mu2, axis in SWEEP_CONFIGS:
        unc = build_uncertainty(params, mu1, mu2)
        eps = optimize_epsilon(proc, meas, unc, cfg.eps_lo, cfg.eps_hi, cfg.eps_points).epsilon_opt
        rob = design_robust(proc, meas, unc, eps)
        d = Delta(-1.0, 0.0) if axis == SweepAxis.DELTA1 else Delta(0.0, -1.0)
        label = f"{axis.value}_mu1_{_tag(mu1)}_mu2_{_tag(mu2)}"
        pts.append((label, "robust", mu1, mu2, d, augment(realize_plant(proc, unc, d), rob)))
    return pts


def cmd_validate(cfg: RunConfig) -> Outputs:
    sim_cfg = cfg.sim_config()
    pts = spot_points(cfg)
    for label, *_, aug in pts:
        try:
            sim_cfg.check_stability(aug.A_bar)
        except InvalidConfigError as exc:
            raise InvalidConfigError(f"sim_dt: {exc} (point {label})") from None

    header = ("point", "filter", "mu1", "mu2", "delta1", "delta2", "sigma2_lyapunov",
              "sigma2_hat", "stderr", "rel_dev", "status")
    rows, ok = [], True
    for label, kind, mu1, mu2, d, aug in pts:
        base = [label, kind, _tag(mu1), _tag(mu2), _tag(d.delta1), _tag(d.delta2)]
        try:
            ly = closed_loop_error(aug, d).sigma2
            r = simulate(aug, sim_cfg)
        except (UnstableLoopError, SolverError) as exc:
            ok = False
            rows.append(base + ["", "", "", "", f"fail: {exc}"])
            continue
        rel = (r.sigma2_hat - ly) / ly
        passed = abs(rel) <= VALIDATE_TOL and abs(r.sigma2_hat - ly) <= 3.0 * r.stderr
        ok &= passed
        rows.append(base + [num(ly), num(r.sigma2_hat), num(r.stderr), f"{rel:+.4f}",
                            "pass" if passed else "fail"])
    out = Outputs(ok=ok)
    out.files["validate.csv"] = _csv(header, rows)
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    table = [" ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header, *rows]]
    table.append(
        f"seed={sim_cfg.seed} dt={sim_cfg.dt:g} t_measure={sim_cfg.t_measure:g} "
        f"batches={sim_cfg.n_batches} -> {'all pass' if ok else 'FAIL'}"
    )
    out.report = "\n".join(table) + "\n"
    return out


def write_outputs(out_dir, files: dict):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        tmp = out_dir / (name + ".tmp")
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp, out_dir / name)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rpf", description="Robust phase-tracking filter design and analysis.")
    ap.add_argument("command", choices=("bode", "design", "sweep", "validate"))
    ap.add_argument("--config", help="key = value configuration file (defaults: nominal values)")
    ap.add_argument("--axis", choices=("delta1", "delta2"), default="delta1")
    ap.add_argument("--include-sql", action="store_true", help="add the SQL column to sweeps")
    ap.add_argument("--out", help="output directory (overrides out_dir)")
    ap.add_argument("--seed", type=int, help="Monte-Carlo seed (overrides seed)")
    ap.add_argument("--svg", action="store_true", help="also write SVG plots")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(out_dir=args.out, seed=args.seed)
    except InvalidConfigError as exc:
        print(f"rpf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "bode":
            out = cmd_bode(cfg, args.svg)
        elif args.command == "design":
            out = cmd_design(cfg, args.svg)
        elif args.command == "sweep":
            out = cmd_sweep(cfg, args.axis, args.include_sql, args.svg)
        else:
            out = cmd_validate(cfg)
    except InvalidConfigError as exc:
        print(f"rpf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"rpf: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except RpfError as exc:
        print(f"rpf: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        write_outputs(cfg.out_dir, out.files)
    except OSError as exc:
        print(f"rpf: cannot write to {cfg.out_dir}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(out.report)
    return EXIT_OK if out.ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
