"""Experiment runner: every capability as a reproducible subcommand.

Outputs are CSV (data) or JSON (reports) with the fully resolved config
echoed in `# key=value` header comments, so re-running the header reproduces
the file byte for byte.  Numeric formatting uses shortest round-trip floats;
an empty measure's maximum is written as the string -inf.

Exit codes: 0 ok, 1 failed verification check, 2 usage error, 3 resource
cap, 4 numerical failure, 5 rejection budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .checks import reports_to_json
from .cloud import simulate_forest, additive_martingale_per_rep, \
    derivative_martingale_per_rep
from .errors import NumericalFailureError, RejectionBudgetError, ResourceLimitError
from .kpp import KppParams, dump_checkpoints, estimate_C_pde, prefactor_of_t, \
    front_tail, solve_kpp
from .measure import Centering
from .rng import substream
from .spine import estimate_C, estimate_C_curve, sample_decoration, \
    sample_limit_process, truncation_horizon
from .suite import run_suite, suite_names
from .window import windowed_extremal_atoms

SCHEMA = 1


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))  # shortest round-trip decimal
    return str(v)


def _write_table(path, header_kv, columns, rows):
    lines = [f"# schema={SCHEMA}"]
    lines += [f"# {k}={_fmt(v)}" for k, v in header_kv]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _config_pairs(args, keys):
    return [(k, getattr(args, k)) for k in keys]


def cmd_estimate_c(args) -> int:
    grid = np.linspace(args.rho_min, args.rho_max, args.steps)
    rows = []
    if args.coupled:
        horizon = args.horizon_t if args.horizon_t is not None else \
            _default_horizon(float(grid[0]), args.horizon_eps)
        results = estimate_C_curve(grid, horizon, args.replicas, args.seed)
        estimates = [r.estimate for r in results]
        if any(b < a for a, b in zip(estimates, estimates[1:])):
            raise AssertionError("coupled estimates must be monotone")
        horizons = [horizon] * len(results)
    else:
        results, horizons = [], []
        for rho in grid:
            horizon = args.horizon_t if args.horizon_t is not None else \
                _default_horizon(float(rho), args.horizon_eps)
            results.append(estimate_C(float(rho), horizon, args.replicas, args.seed))
            horizons.append(horizon)
    for rho, horizon, res in zip(grid, horizons, results):
        rows.append([float(rho), res.estimate, res.stderr, res.n_samples,
                     horizon, res.n_accepted, res.warning or ""])
    keys = ["rho_min", "rho_max", "steps", "horizon_eps", "replicas", "seed",
            "coupled"]
    _write_table(args.output, [("command", "estimate-c")] + _config_pairs(args, keys),
                 ["rho", "c_estimate", "stderr", "n", "horizon_T", "accepted",
                  "warning"], rows)
    return 0


def _default_horizon(rho: float, eps: float, at_one: float = 10.0) -> float:
    if rho <= 1.0 + 1e-12:
        return at_one
    return truncation_horizon(rho, 0.0, eps)


def cmd_kpp(args) -> int:
    rhos = args.rho
    params = KppParams(dx=args.dx, dt=args.dt, t_max=args.t_max,
                       rho_max=max(rhos), ic_mode=args.ic_mode,
                       ic_slope=args.ic_slope,
                       checkpoints=tuple(args.checkpoints or ()))
    field = solve_kpp(params)
    if args.dump_field:
        dump_checkpoints(field, args.dump_field)
    rows = []
    for rho in rhos:
        res = estimate_C_pde(field, rho)
        for t in field.times:
            rows.append([rho, t, front_tail(field, rho, t),
                         prefactor_of_t(field, rho, t), res.estimate, res.stderr])
    keys = ["t_max", "dx", "dt", "ic_mode", "ic_slope"]
    _write_table(args.output,
                 [("command", "kpp"), ("rho", ",".join(map(_fmt, rhos)))]
                 + _config_pairs(args, keys),
                 ["rho", "t", "w_probe", "c_of_t", "c_extrapolated", "uncertainty"],
                 rows)
    return 0


def cmd_simulate(args) -> int:
    centering = Centering(args.centering, args.t)
    rows = []
    columns = []
    if args.emit == "max":
        columns = ["replica", "max"]
        done = 0
        j = 0
        while done < args.replicas:
            m = min(4096, args.replicas - done)
            res = windowed_extremal_atoms(args.mu, args.t, centering, args.window,
                                          m, substream(args.seed, j))
            mx = np.full(m, -math.inf)
            if res.group.size:
                np.maximum.at(mx, res.group, res.atoms)
            rows += [[done + i, float(mx[i])] for i in range(m)]
            done += m
            j += 1
    elif args.emit == "atoms-above":
        columns = ["replica", "atom"]
        done = 0
        j = 0
        while done < args.replicas:
            m = min(4096, args.replicas - done)
            res = windowed_extremal_atoms(args.mu, args.t, centering, args.window,
                                          m, substream(args.seed, j))
            order = np.lexsort((res.atoms, res.group))
            rows += [[done + int(res.group[i]), float(res.atoms[i])] for i in order]
            done += m
            j += 1
    else:  # martingales
        if args.mu != 0.0:
            raise SystemExit("martingales require --mu 0")
        betas = args.betas
        columns = ["replica"] + [f"W_beta_{_fmt(b)}" for b in betas] + ["Z"]
        done = 0
        j = 0
        while done < args.replicas:
            m = min(1024, args.replicas - done)
            forest = simulate_forest(0.0, args.t, m, substream(args.seed, j))
            ws = [additive_martingale_per_rep(forest, b) for b in betas]
            z = derivative_martingale_per_rep(forest)
            for i in range(m):
                rows.append([done + i] + [float(w[i]) for w in ws] + [float(z[i])])
            done += m
            j += 1
    keys = ["mu", "t", "replicas", "centering", "emit", "window", "seed"]
    _write_table(args.output, [("command", "simulate")] + _config_pairs(args, keys),
                 columns, rows)
    return 0


def cmd_decorate(args) -> int:
    horizon = args.horizon_t if args.horizon_t is not None else \
        truncation_horizon(args.rho, args.window_a, args.horizon_eps)
    rng = substream(args.seed, 0)
    rows = []
    attempts_used = 0
    for k in range(args.samples):
        measure = sample_decoration(args.rho, horizon, args.window_a,
                                    args.max_attempts, rng)
        attempts_used += 1
        rows += [[k, float(a)] for a in measure.atoms]
    keys = ["rho", "window_a", "samples", "max_attempts", "seed"]
    _write_table(args.output, [("command", "decorate"), ("horizon_T", horizon)]
                 + _config_pairs(args, keys), ["sample_id", "atom"], rows)
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump({"schema": SCHEMA, "samples": args.samples,
                       "horizon_T": horizon}, fh)
    return 0


def cmd_limit_process(args) -> int:
    gamma = math.inf if args.gamma in ("inf", "Inf", "INF") else float(args.gamma)
    rng = substream(args.seed, 0)
    rows = []
    for k in range(args.samples):
        sample = sample_limit_process(gamma, args.window_a, rng,
                                      c_value=args.c_value,
                                      proxy_horizon=args.proxy_horizon,
                                      max_attempts=args.max_attempts)
        rows += [[k, float(a)] for a in sample.atoms.atoms]
    keys = ["gamma", "window_a", "samples", "seed", "proxy_horizon"]
    _write_table(args.output, [("command", "limit-process")]
                 + _config_pairs(args, keys), ["sample_id", "atom"], rows)
    return 0


def cmd_verify(args) -> int:
    def progress(report):
        status = "PASS" if report.passed else \
            ("INCONCLUSIVE" if report.inconclusive else "FAIL")
        print(f"[{status}] {report.name}: statistic={report.statistic:.4g} "
              f"threshold={report.threshold:.4g} n={report.n}", file=sys.stderr)

    reports = run_suite(args.suite, args.seed, progress=progress)
    text = reports_to_json(reports)
    if args.output in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    return 1 if any(r.failed for r in reports) else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bouex",
        description="Branching Ornstein-Uhlenbeck / Brownian extremes toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int,
                       default=int(os.environ.get("BOUEX_SEED", "20240801")))
        p.add_argument("--config", type=str, default=None,
                       help="JSON file with default parameter values")
        p.add_argument("--output", "-o", type=str, default="-")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("estimate-c", help="spine Monte Carlo prefactor curve")
    p.add_argument("--rho-min", type=float, required=True)
    p.add_argument("--rho-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--horizon-eps", type=float, default=1e-2)
    p.add_argument("--horizon-t", type=float, default=None,
                   help="override the certified truncation horizon")
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--coupled", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_estimate_c)

    p = sub.add_parser("kpp", help="Fisher-KPP front oracle")
    p.add_argument("--rho", type=float, action="append", required=True)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--dx", type=float, default=0.05)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--checkpoints", type=float, nargs="*", default=None)
    p.add_argument("--ic-mode", choices=("step", "ramp", "uniform"), default="step")
    p.add_argument("--ic-slope", type=float, default=50.0)
    p.add_argument("--dump-field", type=str, default=None)
    add_common(p)
    p.set_defaults(func=cmd_kpp)

    p = sub.add_parser("simulate", help="branching-diffusion extremal output")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--centering", choices=("bbm", "bou", "tilde"), default="tilde")
    p.add_argument("--emit", choices=("max", "atoms-above", "martingales"),
                   required=True)
    p.add_argument("--window", type=float, default=-8.0,
                   help="lower cutoff for max / atoms-above")
    p.add_argument("--betas", type=float, nargs="*", default=[0.0, 0.5, 1.0])
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decorate", help="rejection-sample the decoration law")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--window-a", type=float, default=-4.0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--max-attempts", type=int, default=10_000)
    p.add_argument("--horizon-eps", type=float, default=1e-2)
    p.add_argument("--horizon-t", type=float, default=None)
    p.add_argument("--summary", type=str, default=None)
    add_common(p)
    p.set_defaults(func=cmd_decorate)

    p = sub.add_parser("limit-process", help="sample the limiting point process")
    p.add_argument("--gamma", type=str, required=True, help="float or 'inf'")
    p.add_argument("--window-a", type=float, default=-4.0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--max-attempts", type=int, default=10_000)
    p.add_argument("--c-value", type=float, default=None)
    p.add_argument("--proxy-horizon", type=float, default=12.0)
    add_common(p)
    p.set_defaults(func=cmd_limit_process)

    p = sub.add_parser("verify", help="run a named check suite")
    p.add_argument("--suite", choices=("smoke", "fast", "full"), default="fast")
    add_common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _merge_config(argv, parser):
    """Apply --config file values as defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    with open(path) as fh:
        values = json.load(fh)
    args, _ = parser.parse_known_args(argv)
    sub = next(a for a in parser._subparsers._group_actions)  # noqa: SLF001
    subparser = sub.choices[args.command]
    subparser.set_defaults(**{k.replace("-", "_"): v for k, v in values.items()})
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _merge_config(argv, parser)
        args = parser.parse_args(argv)
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except RejectionBudgetError as exc:
        print(f"rejection budget: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
