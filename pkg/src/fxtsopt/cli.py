"""Command-line harness: run, sweep, compare, and audit scenarios.

Configs are INI-style files with sections [scenario], [gains],
[integration], [disturbance], [output]; unknown sections or keys are
rejected so gain-name typos cannot silently fall back to defaults.

Exit codes: 0 all checks passed, 1 one or more checks failed, 2 usage or
configuration error, 3 numerical error during integration or an oracle.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .controllers import (
    ConvexFlowGains,
    DisturbanceSpec,
    FxtsGains,
    Law,
    settling_bound_convex,
    settling_bound_nonconvex,
    settling_bound_robust,
    sin_disturbance,
)
from .errors import ConfigurationError, FxtsoptError, NumericalBlowupError, OracleFailureError
from .integrator import (
    IntegrationConfig,
    Trajectory,
    log_radius_sampler,
    simulate,
    sweep_initial_conditions,
)
from .problem import finite_difference_audit
from .scenarios import Scenario, get_scenario

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_GAIN_KEYS = {
    "alpha", "beta", "p", "q", "rho", "eta_bar", "boundary_layer",
    "gamma1", "gamma2", "r1", "r2", "epsilon", "mu",
    "law", "switching", "mu_pgf",
}
_INTEGRATION_KEYS = {"step", "t_end", "record_stride", "reach_tol", "kkt_tol", "sustain_steps"}
_DISTURBANCE_KEYS = {"amplitude", "frequency", "bound"}
_OUTPUT_KEYS = {"dir"}
_SECTIONS = {"scenario", "gains", "integration", "disturbance", "output"}


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.replace(",", " ").split()])


class RunSetup:
    """Everything parsed from one config file."""

    def __init__(self, scenario: Scenario, law: Law, fxts: FxtsGains,
                 convex: Optional[ConvexFlowGains], config: IntegrationConfig,
                 disturbance: Optional[DisturbanceSpec], outdir: Path):
        self.scenario = scenario
        self.law = law
        self.fxts = fxts
        self.convex = convex
        self.config = config
        self.disturbance = disturbance
        self.outdir = outdir


def load_setup(config_path: str, overrides: argparse.Namespace) -> RunSetup:
    parser = configparser.ConfigParser()
    read = parser.read(config_path)
    if not read:
        raise ConfigurationError(f"config file not found: {config_path}")
    unknown_sections = set(parser.sections()) - _SECTIONS
    if unknown_sections:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown_sections)}")
    if "scenario" not in parser or "name" not in parser["scenario"]:
        raise ConfigurationError("config needs a [scenario] section with a name key")

    scenario_opts = dict(parser["scenario"])
    name = scenario_opts.pop("name")
    scenario = get_scenario(name, **scenario_opts)

    gains_raw = dict(parser["gains"]) if "gains" in parser else {}
    unknown = set(gains_raw) - _GAIN_KEYS
    if unknown:
        raise ConfigurationError(f"unknown [gains] keys: {sorted(unknown)}")

    fxts_fields = {}
    for key in ("alpha", "beta"):
        if key in gains_raw:
            fxts_fields[key] = _parse_vector(gains_raw[key])
    for key in ("p", "q", "rho", "eta_bar", "boundary_layer"):
        if key in gains_raw:
            fxts_fields[key] = float(gains_raw[key])
    base = scenario.fxts
    fxts = FxtsGains(
        alpha=fxts_fields.get("alpha", base.alpha),
        beta=fxts_fields.get("beta", base.beta),
        p=fxts_fields.get("p", base.p),
        q=fxts_fields.get("q", base.q),
        rho=fxts_fields.get("rho", base.rho),
        eta_bar=fxts_fields.get("eta_bar", base.eta_bar),
        boundary_layer=fxts_fields.get("boundary_layer", base.boundary_layer),
    )

    convex = scenario.convex
    convex_keys = {"gamma1", "gamma2", "r1", "r2", "epsilon", "mu"}
    if convex is not None or convex_keys & set(gains_raw):
        cbase = convex if convex is not None else ConvexFlowGains()
        convex = ConvexFlowGains(
            gamma1=float(gains_raw.get("gamma1", cbase.gamma1)),
            gamma2=float(gains_raw.get("gamma2", cbase.gamma2)),
            r1=float(gains_raw.get("r1", cbase.r1)),
            r2=float(gains_raw.get("r2", cbase.r2)),
            epsilon=float(gains_raw.get("epsilon", cbase.epsilon)),
            mu=float(gains_raw.get("mu", cbase.mu)),
        )

    law = scenario.law
    law = Law(
        name=gains_raw.get("law", law.name),
        switching=gains_raw.get("switching", law.switching),
        mu_pgf=float(gains_raw.get("mu_pgf", law.mu_pgf)),
    )

    integ_raw = dict(parser["integration"]) if "integration" in parser else {}
    unknown = set(integ_raw) - _INTEGRATION_KEYS
    if unknown:
        raise ConfigurationError(f"unknown [integration] keys: {sorted(unknown)}")
    config = IntegrationConfig(
        step=float(integ_raw.get("step", 1e-4)),
        t_end=float(integ_raw.get("t_end", 2.0)),
        record_stride=int(integ_raw.get("record_stride", 10)),
        reach_tol=float(integ_raw.get("reach_tol", 1e-3)),
        kkt_tol=float(integ_raw.get("kkt_tol", 1e-3)),
        sustain_steps=int(integ_raw.get("sustain_steps", 50)),
    )
    if overrides.step is not None:
        config = IntegrationConfig(
            step=overrides.step, t_end=config.t_end, record_stride=config.record_stride,
            reach_tol=config.reach_tol, kkt_tol=config.kkt_tol, sustain_steps=config.sustain_steps,
        )

    disturbance = None
    if "disturbance" in parser:
        dist_raw = dict(parser["disturbance"])
        unknown = set(dist_raw) - _DISTURBANCE_KEYS
        if unknown:
            raise ConfigurationError(f"unknown [disturbance] keys: {sorted(unknown)}")
        amplitude = float(dist_raw.get("amplitude", 0.0))
        frequency = float(dist_raw.get("frequency", 1.0))
        if amplitude != 0.0:
            disturbance = sin_disturbance(amplitude, frequency, scenario.problem.m)
            if "bound" in dist_raw:
                disturbance = DisturbanceSpec(eta=disturbance.eta, bound=float(dist_raw["bound"]))

    out_raw = dict(parser["output"]) if "output" in parser else {}
    unknown = set(out_raw) - _OUTPUT_KEYS
    if unknown:
        raise ConfigurationError(f"unknown [output] keys: {sorted(unknown)}")
    outdir = Path(overrides.out if overrides.out is not None else out_raw.get("dir", "out"))

    return RunSetup(scenario, law, fxts, convex, config, disturbance, outdir)


def _bounds(setup: RunSetup) -> dict:
    out = {}
    if setup.law.name == "robust-fxts" and setup.fxts.eta_bar > 0:
        out["T_c"] = settling_bound_robust(setup.fxts)
    else:
        out["T_c"] = settling_bound_nonconvex(setup.fxts)
    if setup.law.name == "convex-fxts" and setup.convex is not None:
        t_c, t_o, t_total = settling_bound_convex(setup.fxts, setup.convex)
        out.update({"T_c": t_c, "T_o": t_o, "T_total": t_total})
    return out


def _gain_echo(setup: RunSetup) -> dict:
    g = {
        "alpha": setup.fxts.alpha.tolist(),
        "beta": setup.fxts.beta.tolist(),
        "p": setup.fxts.p,
        "q": setup.fxts.q,
        "rho": setup.fxts.rho,
        "eta_bar": setup.fxts.eta_bar,
        "boundary_layer": setup.fxts.boundary_layer,
        "law": setup.law.name,
        "switching": setup.law.switching,
        "mu_pgf": setup.law.mu_pgf,
    }
    if setup.convex is not None:
        g.update({
            "gamma1": setup.convex.gamma1, "gamma2": setup.convex.gamma2,
            "r1": setup.convex.r1, "r2": setup.convex.r2,
            "epsilon": setup.convex.epsilon, "mu": setup.convex.mu,
        })
    return g


def _scenario_checks(setup: RunSetup, traj: Trajectory, bounds: dict,
                     x_star, phi_star) -> dict:
    """Per-scenario pass/fail rules; keys map to booleans."""
    checks = {}
    reach_bound = bounds.get("T_total", bounds["T_c"])
    checks["reached_manifold"] = traj.reach_time is not None
    if traj.reach_time is not None:
        checks["reach_within_bound"] = bool(traj.reach_time <= reach_bound)
        post = traj.feasibility_inf[traj.times >= traj.reach_time]
        allowance = setup.config.reach_tol + 10.0 * setup.config.step
        checks["manifold_invariant_post_reach"] = bool(post.max() <= allowance)

    name = setup.scenario.name
    term = traj.states[-1]
    if name == "sphere":
        if x_star is not None:
            angle_err = abs(np.arctan2(term[1], term[0]) - np.arctan2(x_star[1], x_star[0]))
            angle_err = min(angle_err, 2 * np.pi - angle_err)
            checks["terminal_matches_reference_angle"] = bool(angle_err <= 1e-2)
    elif name == "acopf3":
        checks["terminal_feasibility"] = bool(traj.feasibility[-1] <= 1e-3)
        checks["terminal_stationarity"] = bool(traj.stationarity[-1] <= 1e-2)
        checks["terminal_pg3_nominal"] = bool(abs(term[4] - 1.0) <= 0.05)
        checks["terminal_objective_nominal"] = bool(abs(traj.objective[-1] - 1.2) <= 0.05)
    elif name == "estimation":
        if x_star is not None:
            checks["terminal_matches_centralized_ls"] = bool(np.abs(term - x_star).max() <= 1e-3)
    elif name == "convex-quadratic":
        if x_star is not None:
            checks["terminal_matches_optimum"] = bool(np.abs(term - x_star).max() <= 1e-3)
        checks["kkt_within_total_bound"] = bool(
            traj.kkt_time is not None and traj.kkt_time <= bounds["T_total"]
        )
    return checks


def _write_report(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _report_payload(setup: RunSetup, traj: Trajectory, bounds: dict,
                    x_star, phi_star, checks: dict, wall: float) -> dict:
    oracle_cmp = None
    if phi_star is not None:
        oracle_cmp = {
            "reference_objective": phi_star,
            "absolute_error": abs(float(traj.objective[-1]) - phi_star),
        }
    return {
        "scenario": setup.scenario.name,
        "gains": _gain_echo(setup),
        "bounds": bounds,
        "measured": {
            "reach_time": traj.reach_time,
            "kkt_time": traj.kkt_time,
            "terminal_feasibility": float(traj.feasibility[-1]),
            "terminal_stationarity": float(traj.stationarity[-1]),
            "terminal_objective": float(traj.objective[-1]),
        },
        "oracle_comparison": oracle_cmp,
        "checks": checks,
        "passed": all(checks.values()),
        "wall_clock_seconds": wall,
    }


def cmd_run(setup: RunSetup, args: argparse.Namespace) -> int:
    start = time.perf_counter()
    traj = simulate(setup.scenario.problem, setup.law, setup.scenario.x0,
                    setup.fxts, setup.convex, setup.disturbance, setup.config)
    try:
        x_star, phi_star = setup.scenario.reference()
    except OracleFailureError:
        x_star, phi_star = None, None
    wall = time.perf_counter() - start
    bounds = _bounds(setup)
    checks = _scenario_checks(setup, traj, bounds, x_star, phi_star)

    setup.outdir.mkdir(parents=True, exist_ok=True)
    traj.to_csv(setup.outdir / "trace.csv")
    payload = _report_payload(setup, traj, bounds, x_star, phi_star, checks, wall)
    _write_report(setup.outdir / "report.json", payload)
    if args.plot:
        from . import plots
        plots.render_run(traj, setup.outdir)
    print_summary(payload)
    return EXIT_PASS if payload["passed"] else EXIT_FAIL


def cmd_sweep(setup: RunSetup, args: argparse.Namespace) -> int:
    start = time.perf_counter()
    count = args.count if args.count is not None else 100
    seed = args.seed if args.seed is not None else 0
    base = log_radius_sampler(setup.scenario.problem.n, 1e-2, 1e2, seed=seed)
    if setup.scenario.name == "sphere":
        sampler = base
    else:
        # Non-sphere scenarios sample around the scenario's nominal start.
        center = setup.scenario.x0

        def sampler(count):
            return center + base(count)

    result = sweep_initial_conditions(
        setup.scenario.problem, setup.law, sampler, count,
        fxts=setup.fxts, convex=setup.convex,
        config=setup.config, disturbance=setup.disturbance,
    )
    wall = time.perf_counter() - start
    bounds = _bounds(setup)
    reach_bound = bounds.get("T_total", bounds["T_c"])
    reach_times = [r.reach_time for r in result.rows]
    ok = all(t is not None and t <= reach_bound for t in reach_times)
    max_reach = max((t for t in reach_times if t is not None), default=None)

    setup.outdir.mkdir(parents=True, exist_ok=True)
    result.to_csv(setup.outdir / "sweep.csv")
    payload = {
        "scenario": setup.scenario.name,
        "gains": _gain_echo(setup),
        "bounds": bounds,
        "count": count,
        "seed": seed,
        "max_reach_time": max_reach,
        "checks": {"all_reach_within_bound": ok},
        "passed": ok,
        "wall_clock_seconds": wall,
    }
    _write_report(setup.outdir / "report.json", payload)
    if args.plot:
        from . import plots
        plots.render_sweep(result, reach_bound, setup.outdir)
    print_summary(payload)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_compare(setup: RunSetup, args: argparse.Namespace) -> int:
    start = time.perf_counter()
    fxts_traj = simulate(setup.scenario.problem, setup.law, setup.scenario.x0,
                         setup.fxts, setup.convex, setup.disturbance, setup.config)
    pgf_law = Law("projected-gradient-baseline", mu_pgf=setup.law.mu_pgf)
    pgf_traj = simulate(setup.scenario.problem, pgf_law, setup.scenario.x0,
                        setup.fxts, setup.convex, setup.disturbance, setup.config)
    wall = time.perf_counter() - start

    setup.outdir.mkdir(parents=True, exist_ok=True)
    with open(setup.outdir / "compare.csv", "w") as fh:
        fh.write("t,fxts_feas,fxts_stat,pgf_feas,pgf_stat\n")
        for i, t in enumerate(fxts_traj.times):
            fh.write("%.12e,%.12e,%.12e,%.12e,%.12e\n" % (
                t, fxts_traj.feasibility[i], fxts_traj.stationarity[i],
                pgf_traj.feasibility[i], pgf_traj.stationarity[i]))

    # A baseline that never meets the tolerance within the horizon counts
    # as strictly slower.
    ok = fxts_traj.kkt_time is not None and (
        pgf_traj.kkt_time is None or fxts_traj.kkt_time < pgf_traj.kkt_time
    )
    payload = {
        "scenario": setup.scenario.name,
        "gains": _gain_echo(setup),
        "bounds": _bounds(setup),
        "fxts": {"reach_time": fxts_traj.reach_time, "kkt_time": fxts_traj.kkt_time},
        "pgf": {"reach_time": pgf_traj.reach_time, "kkt_time": pgf_traj.kkt_time},
        "checks": {"fxts_kkt_faster_than_pgf": ok},
        "passed": ok,
        "wall_clock_seconds": wall,
    }
    _write_report(setup.outdir / "report.json", payload)
    if args.plot:
        from . import plots
        plots.render_compare(fxts_traj, pgf_traj, setup.outdir)
    print_summary(payload)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_audit(setup: RunSetup, args: argparse.Namespace) -> int:
    start = time.perf_counter()
    count = args.count if args.count is not None else 20
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    step = args.step if args.step is not None else 1e-6
    rows = []
    for _ in range(count):
        x = setup.scenario.x0 + 0.25 * rng.standard_normal(setup.scenario.problem.n)
        if setup.scenario.name == "acopf3":
            x[2:4] = np.abs(x[2:4]) + 0.5  # keep voltage magnitudes positive
        ge, je = finite_difference_audit(setup.scenario.problem, x, step)
        rows.append((ge, je))
    wall = time.perf_counter() - start
    worst_grad = max(r[0] for r in rows)
    worst_jac = max(r[1] for r in rows)
    ok = worst_grad <= 1e-4 and worst_jac <= 1e-4

    setup.outdir.mkdir(parents=True, exist_ok=True)
    with open(setup.outdir / "audit.csv", "w") as fh:
        fh.write("sample,grad_error,jac_error\n")
        for i, (ge, je) in enumerate(rows):
            fh.write("%d,%.12e,%.12e\n" % (i, ge, je))
    payload = {
        "scenario": setup.scenario.name,
        "count": count,
        "seed": seed,
        "fd_step": step,
        "worst_gradient_error": worst_grad,
        "worst_jacobian_error": worst_jac,
        "checks": {"derivatives_match_finite_differences": ok},
        "passed": ok,
        "wall_clock_seconds": wall,
    }
    _write_report(setup.outdir / "report.json", payload)
    print_summary(payload)
    return EXIT_PASS if ok else EXIT_FAIL


def print_summary(payload: dict) -> None:
    name = payload["scenario"]
    for key, value in payload.get("checks", {}).items():
        print(f"[{name}] {key}: {'pass' if value else 'FAIL'}")
    print(f"[{name}] overall: {'pass' if payload['passed'] else 'FAIL'}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fxtsopt",
        description="Sliding-mode fixed-time flows for equality-constrained optimization",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "sweep", "compare", "audit"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--count", type=int, default=None)
        p.add_argument("--step", type=float, default=None,
                       help="override integration step (audit: finite-difference step)")
        p.add_argument("--plot", action="store_true",
                       help="also render figures next to the CSV output")
    return parser


_COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare, "audit": cmd_audit}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        setup = load_setup(args.config, args)
        return _COMMANDS[args.verb](setup, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowupError as exc:
        print(f"numerical blowup at t={exc.t}: last finite state {exc.x}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OracleFailureError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FxtsoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
