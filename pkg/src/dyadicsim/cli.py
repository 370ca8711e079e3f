"""Command-line front end: experiments, sweeps, verification reports.

Subcommands map one-to-one onto the library surface:

    simulate       integrate one configuration, write CSV + report
    verify-region  certify the control polynomials and spot-check invariance
    positivity     measure the positivization time and its schedule bound
    regularity     occupation measures, cube integrals, weighted sups
    sweep          grid of runs over beta x seeds, hash-named outputs
    compare        two variants from one initial condition, psi series

Every command writes a JSON report (and PNG figures unless --no-plot)
into the output directory; exit status is nonzero iff an asserted
invariant failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import plots
from .config import ConfigError, ExperimentConfig, config_hash
from .integrate import IntegrationError, IntegratorConfig, integrate, residual_scan
from .model import Closure, ModelParams
from .positivity import GammaUndefined, build_schedule, measure_tau
from .regularity import (
    BetaCritical,
    OccupationQuery,
    OccupationScan,
    cube_integral_check,
    psi_series,
    sup_weights,
)
from .region import (
    RegionParams,
    build_polynomials,
    certify_signs,
    check_invariance,
    critical_rescale,
    decay_bounds_check,
    sample_in_region,
)
from .reports import write_report, write_series_csv, write_trajectory_csv

__all__ = ["main"]


def _add_common(sp: argparse.ArgumentParser, config_required: bool = True):
    sp.add_argument("--config", type=Path, required=config_required,
                    help="experiment config file (flat key = value)")
    sp.add_argument("--out", type=Path, default=None, help="output directory")
    sp.add_argument("--seed", type=int, default=None, help="override run.seed")
    sp.add_argument("--tol-scale", type=float, default=1.0,
                    help="multiply both integrator tolerances by this factor")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker processes for sweeps (env DYADIC_THREADS)")
    sp.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("DYADIC_THREADS")
    return max(1, int(env)) if env else 1


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        return ExperimentConfig()
    try:
        text = Path(args.config).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {args.config}: {e}") from e
    cfg = ExperimentConfig.from_text(text)
    if args.seed is not None:
        cfg = cfg.with_updates(seed=args.seed)
    return cfg


def _outdir(args, cfg: ExperimentConfig) -> Path:
    out = args.out or (Path(cfg.output) if cfg.output else Path("."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_trajectory(cfg: ExperimentConfig, tol_scale: float):
    p = cfg.model_params()
    icfg = cfg.integrator_config(tol_scale)
    x0 = cfg.initial_condition()
    traj = integrate(p, icfg, x0, cfg.t_end)
    return p, traj


def _simulate_checks(cfg: ExperimentConfig, p: ModelParams, traj) -> dict:
    checks: dict[str, dict] = {}
    ts, E = traj.energy_series()
    tol = traj.config.rtol * E[0] + traj.config.atol
    if "energy" in cfg.diagnostics:
        if p.closure is Closure.GALERKIN_ZERO:
            drift = float(np.abs(E - E[0]).max())
            checks["energy_conserved"] = {
                "passed": drift <= 100 * tol,
                "max_drift": drift,
                "allowance": 100 * tol,
            }
        elif np.all(traj.ys[0] >= 0):
            growth = float(np.diff(E).max()) if len(E) > 1 else 0.0
            checks["energy_nonincreasing"] = {
                "passed": growth <= 100 * tol,
                "max_growth": growth,
                "allowance": 100 * tol,
            }
    if "residual" in cfg.diagnostics and traj.has_dense:
        worst = residual_scan(traj)
        checks["residual"] = {"passed": worst <= 10.0, "max_scaled_defect": worst}
    if "positivity" in cfg.diagnostics and np.all(traj.ys[0] >= 0):
        floor = -1e-10 * float(np.linalg.norm(traj.ys[0]))
        worst = float(traj.ys.min())
        checks["positivity_preserved"] = {"passed": worst >= floor, "min_component": worst}
    if "sup" in cfg.diagnostics:
        rep = decay_bounds_check(traj, p)
        entry = {
            "asserted": rep.asserted,
            "uniform_ok": rep.uniform_ok,
            "decay_ok": rep.decay_ok,
            "uniform_ratio": rep.uniform_ratio,
            "decay_ratio": rep.decay_ratio,
        }
        entry["passed"] = (rep.uniform_ok and rep.decay_ok) if rep.asserted else True
        checks["weighted_sup_bounds"] = entry
    return checks


def _passed(checks: dict) -> bool:
    return all(c.get("passed", True) for c in checks.values())


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    p, traj = _run_trajectory(cfg, args.tol_scale)
    csv = write_trajectory_csv(out / "trajectory.csv", traj)
    checks = _simulate_checks(cfg, p, traj)
    artifacts = {"trajectory": str(csv)}
    if not args.no_plot:
        artifacts["shells_png"] = str(plots.plot_shells(traj, out / "shells.png"))
        ts, E = traj.energy_series()
        artifacts["energy_png"] = str(plots.plot_energy(ts, E, out / "energy.png"))
    write_report(
        out / "report.json",
        {
            "command": "simulate",
            "config": cfg.to_mapping(),
            "stats": traj.stats,
            "t_end": traj.t_end,
            "final_state": traj.ys[-1],
            "final_energy": float(np.dot(traj.ys[-1], traj.ys[-1])),
            "checks": checks,
        },
    )
    return 0 if _passed(checks) else 1


def cmd_verify_region(args) -> int:
    cfg = ExperimentConfig() if args.defaults else _load_config(args)
    out = _outdir(args, cfg)
    r = RegionParams(
        delta=cfg.extra("region.delta", "1/12"),
        c=cfg.extra("region.c", "1/2"),
        theta=cfg.extra("region.theta", "1/2"),
        m=cfg.extra("region.m", "4/5"),
    )
    cp = build_polynomials(r)
    report = certify_signs(cp)
    (out / "certificates.txt").write_text(report.to_text())

    betas = [float(s) for s in cfg.extra("region.betas", "1, 2").split(",")]
    n_maxes = [int(s) for s in cfg.extra("region.n_maxes", "5, 10").split(",")]
    samples = int(cfg.extra("region.samples", "5"))
    fast_times = float(cfg.extra("region.fast_times", "400"))
    t_cap = float(cfg.extra("region.t_end", "5.0"))

    rng = np.random.default_rng(cfg.seed)
    runs = []
    all_pass = True
    from .region import YParams

    for beta in betas:
        for n in n_maxes:
            yp = YParams(beta=beta, n_max=n)
            # horizon covering a fixed number of relaxations of the
            # stiffest shell, capped for the slow cells
            t_end = min(t_cap, fast_times / float(yp.lam[-1]))
            for _ in range(samples):
                y0 = sample_in_region(r, n, rng)
                rep = check_invariance(yp, r, y0, t_end)
                runs.append(
                    {
                        "beta": beta,
                        "n_max": n,
                        "t_end": t_end,
                        "passed": rep.passed,
                        "asserted": rep.asserted,
                        "min_margin": rep.min_margin,
                    }
                )
                if rep.asserted and not rep.passed:
                    all_pass = False

    ok = report.proves_invariance and all_pass
    artifacts = {"certificates": str(out / "certificates.txt")}
    if not args.no_plot:
        artifacts["polys_png"] = str(
            plots.plot_control_polynomials(cp, out / "control_polynomials.png")
        )
        artifacts["region_png"] = str(plots.plot_region(r, out / "region.png"))
    write_report(
        out / "report.json",
        {
            "command": "verify-region",
            "region": {"delta": r.delta, "c": r.c, "theta": r.theta, "m": r.m},
            "verdicts": {k: v.value for k, v in report.verdicts().items()},
            "proves_invariance": report.proves_invariance,
            "invariance_runs": runs,
            "checks": {"region_verified": {"passed": ok}},
        },
    )
    return 0 if ok else 1


def cmd_positivity(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    p, traj = _run_trajectory(cfg, args.tol_scale)
    tau = measure_tau(traj)
    x0 = traj.ys[0]
    schedule_info: dict = {}
    if x0[0] > 0:
        try:
            sched = build_schedule(
                p,
                x0,
                a=float(cfg.extra("positivity.a", "1.0")),
                C=float(cfg.extra("positivity.C", "1.0")),
                delta=float(cfg.extra("positivity.delta", repr(1 / 12))),
                eps=float(cfg.extra("positivity.eps", "0.1")),
            )
            schedule_info = {
                "tau_bound_conditional": sched.tau_bound,
                "gamma": sched.gamma,
                "C": sched.C,
                "eps": sched.eps,
                "delta": sched.delta,
                "note": "bound is conditional on the schedule constant C",
            }
        except GammaUndefined as e:
            schedule_info = {"error": str(e)}
    checks = {
        "positivized": {"passed": tau is not None, "tau": tau},
    }
    if tau is not None:
        floor = -1e-10 * float(np.linalg.norm(x0))
        after = traj.ys[traj.ts >= tau]
        worst = float(after.min()) if after.size else 0.0
        checks["stays_nonnegative"] = {"passed": worst >= floor, "min_after_tau": worst}
    artifacts = {"trajectory": str(write_trajectory_csv(out / "trajectory.csv", traj))}
    if not args.no_plot:
        artifacts["min_png"] = str(
            plots.plot_min_component(traj.ts, traj.ys.min(axis=1), out / "min_component.png", tau)
        )
    write_report(
        out / "report.json",
        {
            "command": "positivity",
            "config": cfg.to_mapping(),
            "tau_observed": tau,
            "schedule": schedule_info,
            "checks": checks,
        },
    )
    return 0 if _passed(checks) else 1


def cmd_regularity(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    p, traj = _run_trajectory(cfg, args.tol_scale)
    T = float(cfg.extra("regularity.T", repr(cfg.t_end)))
    Ms = [float(s) for s in cfg.extra("regularity.M", "1.0").split(",")]
    eps_exp = float(cfg.extra("regularity.eps_exp", "0.1"))
    comp_Ms = [float(s) for s in cfg.extra("regularity.thresholds", "0.5").split(",")]
    cube_shells = [
        int(s) for s in cfg.extra("regularity.cube_shells", "").split(",") if s.strip()
    ]

    checks: dict[str, dict] = {}
    kn = p.k[1 : p.n_max + 1]
    occ_rows = []
    scan = OccupationScan(traj, T)
    for M in Ms:
        a_seq = M * kn ** (-(1.0 - eps_exp) / 3.0)
        res = scan.profile_measure(OccupationQuery(a_seq=a_seq, horizon=T))
        occ_rows.append(("profile M=%g" % M, res.measured, res.bound))
        checks[f"occupation_M{M:g}"] = {
            "passed": res.satisfied,
            "measured": res.measured,
            "bound": res.bound,
        }
    for M in comp_Ms:
        worst = None
        ok = True
        for n in range(1, p.n_max + 1):
            res = scan.component_measure(n, M)
            if not res.satisfied:
                ok = False
            if worst is None or res.measured - res.bound > worst[0]:
                worst = (res.measured - res.bound, n, res.measured, res.bound)
        checks[f"component_occupation_M{M:g}"] = {
            "passed": ok,
            "worst_shell": worst[1],
            "worst_measured": worst[2],
            "worst_bound": worst[3],
        }
    for n in cube_shells:
        res = cube_integral_check(traj, n, T)
        entry = {
            "hypothesis_ok": res.hypothesis_ok,
            "integral": res.integral,
            "bound": res.bound,
            "companion": res.companion,
            "companion_bound": res.companion_bound,
        }
        entry["passed"] = bool(res.satisfied) if res.hypothesis_ok else True
        if not res.hypothesis_ok:
            entry["note"] = "hypothesis not satisfied; no claim"
        checks[f"cube_integral_n{n}"] = entry

    w = sup_weights(p, BetaCritical())
    sup_series = (traj.ys * w[None, :]).max(axis=1)
    write_series_csv(out / "weighted_sup.csv", {"t": traj.ts, "sup": sup_series})
    artifacts = {"trajectory": str(write_trajectory_csv(out / "trajectory.csv", traj))}
    if not args.no_plot and occ_rows:
        names, meas, bnds = zip(*occ_rows)
        artifacts["occupation_png"] = str(
            plots.plot_occupation(names, meas, bnds, out / "occupation.png")
        )
        rep = decay_bounds_check(traj, p)
        envelope = rep.c_decay * float(np.linalg.norm(traj.ys[0])) ** (2 / 3) * np.maximum(
            traj.ts, 1e-300
        ) ** (-1 / 3)
        artifacts["sup_png"] = str(
            plots.plot_weighted_sup(
                traj.ts, sup_series, out / "weighted_sup.png",
                envelope=envelope, uniform_level=12 * sup_series[0],
            )
        )
    write_report(
        out / "report.json",
        {
            "command": "regularity",
            "config": cfg.to_mapping(),
            "horizon": T,
            "checks": checks,
        },
    )
    return 0 if _passed(checks) else 1


def _sweep_run(payload) -> dict:
    text, out_dir, plot, write_traj = payload
    cfg = ExperimentConfig.from_text(text)
    run_dir = Path(out_dir) / f"run_{config_hash(cfg)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    p = cfg.model_params()
    traj = integrate(p, cfg.integrator_config(), cfg.initial_condition(), cfg.t_end)
    checks = _simulate_checks(cfg, p, traj)
    if write_traj:
        write_trajectory_csv(run_dir / "trajectory.csv", traj)
    rep = {
        "command": "sweep-run",
        "config": cfg.to_mapping(),
        "hash": config_hash(cfg),
        "final_energy": float(np.dot(traj.ys[-1], traj.ys[-1])),
        "stats": traj.stats,
        "checks": checks,
    }
    write_report(run_dir / "report.json", rep)
    return {
        "hash": rep["hash"],
        "beta": cfg.beta,
        "seed": cfg.seed,
        "final_energy": rep["final_energy"],
        "passed": _passed(checks),
    }


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    betas = [float(s) for s in cfg.extra("sweep.betas", "1").split(",")]
    n_seeds = int(cfg.extra("sweep.seeds", "1"))
    write_traj = cfg.extra("sweep.write_trajectories", "false").lower() == "true"

    jobs = []
    for beta in betas:
        for rep in range(n_seeds):
            run_cfg = cfg.with_updates(
                beta=beta,
                ic_kind="random_nonneg",
                seed=cfg.seed * 1_000_003 + rep,
                diagnostics=cfg.diagnostics or ("energy", "positivity"),
            )
            jobs.append((run_cfg.to_text(), str(out), not args.no_plot, write_traj))

    k = _threads(args)
    if k > 1:
        with ProcessPoolExecutor(max_workers=k) as ex:
            results = list(ex.map(_sweep_run, jobs))
    else:
        results = [_sweep_run(j) for j in jobs]

    ok = all(r["passed"] for r in results)
    write_report(
        out / "sweep_summary.json",
        {
            "command": "sweep",
            "betas": betas,
            "seeds": n_seeds,
            "runs": results,
            "checks": {"all_runs": {"passed": ok}},
        },
    )
    return 0 if ok else 1


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args, cfg)
    variant = cfg.extra("compare.variant", "tolerance")
    p = cfg.model_params()
    x0 = cfg.initial_condition()
    traj_a = integrate(p, cfg.integrator_config(args.tol_scale), x0, cfg.t_end)
    if variant == "tolerance":
        rtol_b = float(cfg.extra("compare.rtol_b", repr(cfg.rtol)))
        atol_b = float(cfg.extra("compare.atol_b", repr(cfg.atol)))
        cfg_b = cfg.with_updates(rtol=rtol_b, atol=atol_b)
        p_b = p
    elif variant == "closure":
        closure_b = cfg.extra("compare.closure_b", cfg.closure)
        cfg_b = cfg.with_updates(closure=closure_b)
        p_b = cfg_b.model_params()
    else:
        raise ConfigError(f"field compare.variant: unknown variant {variant!r}")
    traj_b = integrate(p_b, cfg_b.integrator_config(args.tol_scale), x0, cfg.t_end)

    n_pts = int(cfg.extra("compare.points", "200"))
    ts = np.linspace(0.0, cfg.t_end, n_pts)
    psi = psi_series(traj_a, traj_b, ts)
    write_series_csv(out / "psi.csv", {"t": ts, "psi": psi})
    artifacts = {}
    if not args.no_plot:
        artifacts["psi_png"] = str(plots.plot_psi(ts, psi, out / "psi.png"))
    write_report(
        out / "report.json",
        {
            "command": "compare",
            "config": cfg.to_mapping(),
            "variant": variant,
            "psi_final": float(psi[-1]),
            "psi_max": float(psi.max()),
            "norm2_x0": float(np.dot(x0, x0)),
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dyadicsim",
        description="simulation and verification workbench for dyadic shell cascades",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate one configuration")
    _add_common(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("verify-region", help="certify the invariant region")
    _add_common(sp, config_required=False)
    sp.add_argument("--defaults", action="store_true",
                    help="use the certified default region parameters")
    sp.set_defaults(fn=cmd_verify_region)

    sp = sub.add_parser("positivity", help="positivization time and schedule")
    _add_common(sp)
    sp.set_defaults(fn=cmd_positivity)

    sp = sub.add_parser("regularity", help="occupation and integral bounds")
    _add_common(sp)
    sp.set_defaults(fn=cmd_regularity)

    sp = sub.add_parser("sweep", help="grid of runs over beta x seeds")
    _add_common(sp)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("compare", help="two variants from one initial condition")
    _add_common(sp)
    sp.set_defaults(fn=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "verify-region" and not args.defaults and args.config is None:
        print("verify-region needs --config or --defaults", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except IntegrationError as e:
        print(f"integration failed: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
