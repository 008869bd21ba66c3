"""Command-line interface.

Subcommands:

  simulate    forward-only run; writes trajectory.csv and probe.csv
  twin        full twin experiment; writes errors.csv, summary.csv,
              opt_log.csv, initial_states.csv, observations.csv,
              cost_breakdown.csv, run_meta.txt
  sweep       twin experiments over a list of observation counts
  assimilate  minimize J against an externally supplied observation CSV
  grad-check  adjoint gradient vs finite differences, tabulated

Exit codes: 0 success, 1 internal check failed (grad-check exceedance),
2 configuration error, 3 numerical failure. The default output directory
is $RIJKEDA_OUTDIR (falling back to ./rijkeda_out); --out overrides it.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import csvio
from .adjoint import fd_gradient, fd_relative_errors, gradient
from .config import RunConfig, load_run_config
from .cost import (
    AssimilationProblem,
    BackgroundSpec,
    ObservationSet,
    cost_breakdown,
)
from .errors import ConfigError, NumericalError
from .integrator import integrate
from .model import state_vector
from .optimize import minimize
from .twin import run_twin, sweep_n_obs, synthesize_observations

GRAD_CHECK_GATE = 1e-4

__all__ = ["main"]


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get("RIJKEDA_OUTDIR", "rijkeda_out"))


def _load(args) -> RunConfig:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"twin.rng_seed={args.seed}")
    return load_run_config(args.config, overrides)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI-style configuration file")
    sub.add_argument("--out", help="output directory (default: $RIJKEDA_OUTDIR)")
    sub.add_argument("--seed", type=int, help="override twin.rng_seed")
    sub.add_argument(
        "--set",
        action="append",
        metavar="SECTION.KEY=VALUE",
        help="override one config value (repeatable; wins over the file)",
    )


def _meta(cfg: RunConfig, **extra) -> dict:
    meta = cfg.as_mapping()
    if extra:
        meta["run"] = extra
    return meta


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    params = cfg.model_params()
    x0 = state_vector(
        np.full(params.n_modes, cfg.truth_perturbation), np.zeros(params.n_modes)
    )
    traj = integrate(x0, params, cfg.integrator())
    meta = _meta(cfg, command="simulate")
    csvio.write_trajectory(out / "trajectory.csv", traj, cfg.x_m, meta)
    csvio.write_probe(out / "probe.csv", traj, cfg.x_m, meta)
    csvio.write_run_meta(out / "run_meta.txt", meta)
    print(f"simulate: {traj.n_nodes} nodes over [0, {traj.t_end}] -> {out}")
    return 0


def _write_twin_outputs(out: Path, cfg: RunConfig, result, meta: dict) -> None:
    csvio.write_errors(out / "errors.csv", result, meta)
    csvio.write_summary(out / "summary.csv", result, meta)
    csvio.write_opt_log(out / "opt_log.csv", result.optimization, meta)
    csvio.write_states(
        out / "initial_states.csv",
        {
            "truth": result.x0_true,
            "background": result.x0_bg,
            "analysis": result.x0_analysis,
        },
        cfg.n_modes,
        meta,
    )
    csvio.write_observations(out / "observations.csv", result.observations, meta)
    breakdown = cost_breakdown(result.x0_analysis, result.problem)
    csvio.write_cost_breakdown(
        out / "cost_breakdown.csv", breakdown, result.observations.times, meta
    )
    csvio.write_run_meta(out / "run_meta.txt", meta)


def cmd_twin(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    twin_cfg = cfg.twin_config()
    result = run_twin(twin_cfg, verbose=args.verbose)
    problem = result.problem
    meta = _meta(
        cfg,
        command="twin",
        consistent_pairing=problem.consistent_pairing,
        norm_constant=result.norm_constant,
        norm_fallback=result.norm_fallback,
        converged=result.optimization.converged,
        iterations=result.optimization.iterations,
    )
    _write_twin_outputs(out, cfg, result, meta)
    s = result.summary
    print(
        f"twin: J {result.optimization.j_history[0]:.6g} -> "
        f"{result.optimization.j_final:.6g} in {result.optimization.iterations} iterations "
        f"(converged={result.optimization.converged})"
    )
    print(
        f"twin: forecast rms background={s.forecast_rms_bg:.6g} "
        f"analysis={s.forecast_rms_analysis:.6g} -> {out}"
    )
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    try:
        n_obs_list = [int(tok) for tok in args.n_obs.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"--n-obs: {exc}") from exc
    if not n_obs_list:
        raise ConfigError("--n-obs must list at least one observation count")
    results = sweep_n_obs(cfg.twin_config(), n_obs_list, verbose=args.verbose)
    meta = _meta(cfg, command="sweep", n_obs_list=", ".join(map(str, n_obs_list)))
    for result in results:
        sub = out / f"n_obs_{result.config.n_obs}"
        sub_cfg = replace(cfg, n_obs=result.config.n_obs)
        _write_twin_outputs(sub, sub_cfg, result, _meta(sub_cfg, command="sweep"))
    csvio.write_sweep_summary(out / "sweep_summary.csv", results, meta)
    print(f"sweep: {len(results)} runs -> {out}")
    return 0


def cmd_assimilate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    params = cfg.model_params()
    observations = csvio.read_observations(args.obs, cfg.obs_kind, cfg.x_m)
    if args.background:
        states = csvio.read_states(args.background)
        if len(states) == 1:
            x0_bg = next(iter(states.values()))
        elif "background" in states:
            x0_bg = states["background"]
        else:
            raise ConfigError(
                f"{args.background}: several state rows but none labeled 'background'"
            )
        if x0_bg.size != params.state_dim:
            raise ConfigError(
                f"{args.background}: state has {x0_bg.size} entries, "
                f"model expects {params.state_dim}"
            )
    else:
        x0_bg = np.zeros(params.state_dim)
    problem = AssimilationProblem(
        params=params,
        integrator=cfg.integrator(cfg.t_assim),
        background=BackgroundSpec(kind=cfg.bg_kind, x0_bg=x0_bg, x_m=cfg.x_m),
        observations=observations,
        covariance=cfg.covariance(),
    )
    opt = minimize(problem, config=cfg.optimizer_config(), verbose=args.verbose)
    meta = _meta(
        cfg,
        command="assimilate",
        consistent_pairing=problem.consistent_pairing,
        converged=opt.converged,
        iterations=opt.iterations,
    )
    csvio.write_states(
        out / "analysis_state.csv",
        {"background": x0_bg, "analysis": opt.x0_analysis},
        params.n_modes,
        meta,
    )
    csvio.write_opt_log(out / "opt_log.csv", opt, meta)
    traj = integrate(opt.x0_analysis, params, cfg.integrator())
    csvio.write_trajectory(out / "analysis_trajectory.csv", traj, cfg.x_m, meta)
    breakdown = cost_breakdown(opt.x0_analysis, problem)
    csvio.write_cost_breakdown(
        out / "cost_breakdown.csv", breakdown, observations.times, meta
    )
    csvio.write_run_meta(out / "run_meta.txt", meta)
    print(
        f"assimilate: J {opt.j_history[0]:.6g} -> {opt.j_final:.6g} "
        f"in {opt.iterations} iterations (converged={opt.converged}) -> {out}"
    )
    return 0


def _grad_check_problem(cfg: RunConfig):
    """Twin-style problem plus a reproducible off-background evaluation point."""
    twin_cfg = replace(cfg, n_obs=max(cfg.n_obs, 1)).twin_config()
    rng_bg = np.random.default_rng([cfg.rng_seed, 0x1A])
    rng_obs = np.random.default_rng([cfg.rng_seed, twin_cfg.n_obs, 0x0B])
    params = twin_cfg.params
    x0_true = state_vector(
        np.full(params.n_modes, cfg.truth_perturbation), np.zeros(params.n_modes)
    )
    truth = integrate(x0_true, params, twin_cfg.integrator)
    x0_bg = x0_true + np.sqrt(cfg.b_var) * rng_bg.standard_normal(params.state_dim)
    if cfg.n_obs > 0:
        observations = synthesize_observations(twin_cfg, truth, rng_obs)
    else:
        observations = ObservationSet.empty(cfg.obs_kind, cfg.x_m, params.n_modes)
    problem = AssimilationProblem(
        params=params,
        integrator=cfg.integrator(cfg.t_assim),
        background=BackgroundSpec(kind=cfg.bg_kind, x0_bg=x0_bg, x_m=cfg.x_m),
        observations=observations,
        covariance=cfg.covariance(),
    )
    rng_x0 = np.random.default_rng([cfg.rng_seed, 0xF0])
    x0 = x0_bg + 0.01 * rng_x0.standard_normal(params.state_dim)
    return problem, x0


def cmd_grad_check(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    problem, x0 = _grad_check_problem(cfg)
    report = gradient(x0, problem)
    fd = fd_gradient(x0, problem, step=args.fd_step)
    rel = fd_relative_errors(report.grad, fd)
    print(f"{'component':>9}  {'adjoint':>24}  {'finite-diff':>24}  {'rel-error':>12}")
    for k in range(rel.size):
        print(f"{k:9d}  {report.grad[k]:24.15e}  {fd[k]:24.15e}  {rel[k]:12.3e}")
    worst = float(rel.max()) if rel.size else 0.0
    print(f"max relative error: {worst:.3e} (gate {GRAD_CHECK_GATE:g})")
    meta = _meta(cfg, command="grad-check", fd_step=args.fd_step, max_rel_error=worst)
    csvio.write_grad_check(out / "grad_check.csv", report.grad, fd, rel, meta)
    csvio.write_run_meta(out / "run_meta.txt", meta)
    return 0 if worst <= GRAD_CHECK_GATE else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rijkeda",
        description=(
            "State estimation for a time-delayed Galerkin model of a Rijke tube: "
            "forward simulation, twin experiments, and adjoint-based assimilation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="forward run; trajectory and probe CSVs")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("twin", help="full twin experiment")
    _add_common(p)
    p.add_argument("--verbose", action="store_true", help="per-iteration optimizer log")
    p.set_defaults(func=cmd_twin)

    p = sub.add_parser("sweep", help="twin experiments over several n_obs values")
    _add_common(p)
    p.add_argument("--n-obs", required=True, help="comma-separated list, e.g. 50,100,250")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("assimilate", help="assimilate an external observation CSV")
    _add_common(p)
    p.add_argument("--obs", required=True, help="observation CSV (see README schema)")
    p.add_argument("--background", help="background state CSV (one initial_states.csv row)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_assimilate)

    p = sub.add_parser("grad-check", help="adjoint gradient vs central differences")
    _add_common(p)
    p.add_argument("--fd-step", type=float, default=1e-6, help="central-difference step")
    p.set_defaults(func=cmd_grad_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
