"""Command-line interface: scenario execution, comparison, sweeps, validation.

Outputs are deterministic given the same scenario and seed; all floats are
written with 9 significant digits.
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import validate as validation_suite
from .config import ConfigError, load_scenario
from .engine import SimulationError, run
from .trace import FLOAT_FMT, write_summary
from .validation import ValidationError


def _add_common(parser):
    parser.add_argument("scenario", help="scenario file path or shipped scenario name")
    parser.add_argument("--out-dir", default=".", help="directory for output files")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the random-init seed")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY.PATH=VALUE",
                        help="override any scenario key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covsim", description="multi-agent coverage control simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and write trace + summary")
    _add_common(p)

    p = sub.add_parser("compare",
                       help="run proposed and lloyd from identical initial positions")
    _add_common(p)

    p = sub.add_parser("sweep", help="re-run a scenario over a parameter list")
    _add_common(p)
    p.add_argument("--param", required=True, help="dot-path of the swept key")
    p.add_argument("--values", required=True,
                   help="comma-separated list of values")
    p.add_argument("--threads", type=int, default=1,
                   help="parallel workers (one run per value)")

    p = sub.add_parser("validate", help="run the built-in invariant suite")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("export-grid", help="write the scenario density grid")
    _add_common(p)

    return parser


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario, args.overrides)
    trace = run(cfg, seed=args.seed)
    out = _out_dir(args)
    trace.write_csv(out / "trace.csv")
    write_summary(out / "summary.toml", trace.summary())
    for key, value in trace.summary().items():
        print(f"{key} = {value}")
    return 0


def cmd_compare(args) -> int:
    overrides = list(args.overrides)
    cfg_p = load_scenario(args.scenario, overrides + ["engine.method=proposed"])
    cfg_l = load_scenario(args.scenario, overrides + ["engine.method=lloyd"])
    trace_p = run(cfg_p, seed=args.seed)
    trace_l = run(cfg_l, seed=args.seed)
    out = _out_dir(args)
    trace_p.write_csv(out / "trace_proposed.csv")
    trace_l.write_csv(out / "trace_lloyd.csv")
    summary = {
        "name": cfg_p.name,
        "cost_advantage_proposed": float(trace_l.cost_conventional[-1]
                                         - trace_p.cost_conventional[-1]),
        "proposed": trace_p.summary(),
        "lloyd": trace_l.summary(),
    }
    write_summary(out / "summary.toml", summary)
    print(f"proposed: final cost {FLOAT_FMT % trace_p.cost_conventional[-1]}, "
          f"l_p {FLOAT_FMT % trace_p.path_length()}, "
          f"converged_at {trace_p.converged_at_step}")
    print(f"lloyd:    final cost {FLOAT_FMT % trace_l.cost_conventional[-1]}, "
          f"l_p {FLOAT_FMT % trace_l.path_length()}, "
          f"converged_at {trace_l.converged_at_step}")
    return 0


def _sweep_one(task):
    scenario, overrides, param, value, seed = task
    cfg = load_scenario(scenario, list(overrides) + [f"{param}={value}"])
    trace = run(cfg, seed=seed)
    steps = trace.converged_at_step if trace.converged_at_step is not None else -1
    return value, steps, float(trace.cost_conventional[-1])


def cmd_sweep(args) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    # fail fast on an unresolvable param path before launching workers
    load_scenario(args.scenario, list(args.overrides) + [f"{args.param}={values[0]}"])
    tasks = [(args.scenario, tuple(args.overrides), args.param, v, args.seed)
             for v in values]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(_sweep_one, tasks))
    else:
        rows = [_sweep_one(t) for t in tasks]
    out = _out_dir(args)
    lines = [f"{args.param},converged_at_step,final_cost_conventional"]
    for value, steps, cost in rows:
        lines.append(f"{value},{steps},{FLOAT_FMT % cost}")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def cmd_validate(args) -> int:
    return validation_suite.run_all(seed=args.seed)


def cmd_export_grid(args) -> int:
    cfg = load_scenario(args.scenario, args.overrides)
    density = cfg.build_density()
    out = _out_dir(args)
    path = out / "grid.csv"
    basis = density.basis
    domain = density.domain
    means = "; ".join(FLOAT_FMT % mu[0] + " " + FLOAT_FMT % mu[1]
                      for mu in basis.means)
    header = [
        "# covsim density grid",
        f"# lower = {FLOAT_FMT % domain.lower[0]} {FLOAT_FMT % domain.lower[1]}",
        f"# upper = {FLOAT_FMT % domain.upper[0]} {FLOAT_FMT % domain.upper[1]}",
        f"# resolution = {domain.grid_resolution}",
        f"# sigma = {FLOAT_FMT % basis.sigma}",
        f"# rho_trunc = {FLOAT_FMT % basis.rho_trunc}",
        f"# means = {means}",
        "x,y,phi",
    ]
    rows = [
        f"{FLOAT_FMT % q[0]},{FLOAT_FMT % q[1]},{FLOAT_FMT % phi}"
        for q, phi in zip(domain.points, density.phi_grid)
    ]
    path.write_text("\n".join(header + rows) + "\n")
    print(f"wrote {path} ({domain.n_points} points)")
    return 0


_COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "export-grid": cmd_export_grid,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValidationError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
