"""Command-line interface.

Commands: estimate, divergence, influence, region, simulate, tune.
Exit codes: 0 success/converged, 2 input error, 3 numerical failure,
4 non-convergence. GSB_SEED serves as the seed fallback. Every JSON output
embeds the run config; re-running with --config on that block reproduces the
output bit-identically under a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import dataio
from .densities import DiscreteDensity
from .errors import DomainError, EstimationError, GsbError, InputError, SingularMatrixError
from .estimation import EmpiricalDensity, estimate
from .divergences import gsb_divergence, named_divergence
from .influence import boundedness_scan, classify_boundedness, influence_at_model
from .models import get_family
from .simulation import run_mse_grid
from .triplet import TuningTriplet
from .tuning import TuningGrid, select_with_refinement

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_NOCONV = 4


def _add_triplet_flags(p):
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)


def _triplet_from(args) -> TuningTriplet:
    if args.alpha is None or args.lam is None or args.beta is None:
        raise InputError("--alpha, --lambda and --beta are all required")
    return TuningTriplet(args.alpha, args.lam, args.beta)


def _seed_from(args):
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("GSB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"GSB_SEED must be an integer, got {env!r}")
    return 0


def _load_data(args) -> EmpiricalDensity:
    if getattr(args, "data", None):
        from .estimation import empirical_density

        return empirical_density(dataio.read_sample(args.data))
    if getattr(args, "freq", None):
        return dataio.read_frequency(args.freq)
    raise InputError("provide --data (raw sample) or --freq (value,count CSV)")


def _write_out(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config_of(args, keys):
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_estimate(args):
    t = _triplet_from(args)
    if t.A <= 0.0:
        raise InputError(
            f"invalid triplet {t.label()}: A = 1 + lambda(1 - alpha) = {t.A:g} <= 0"
        )
    family = get_family(args.model)
    data = _load_data(args)
    res = estimate(t, family, data)
    payload = {
        "config": _config_of(args, ["command", "model", "alpha", "lam", "beta",
                                    "data", "freq", "format"]),
        "theta_hat": res.theta_hat,
        "std_error": res.std_error,
        "objective_at_min": res.objective_at_min,
        "estimating_function": res.esteq_at_min,
        "iterations": res.iterations,
        "converged": res.converged,
        "n": data.n,
        "message": res.message,
    }
    if args.format == "table":
        lines = [f"theta_hat      {res.theta_hat!r}",
                 f"std_error      {res.std_error!r}",
                 f"objective      {res.objective_at_min!r}",
                 f"esteq          {res.esteq_at_min!r}",
                 f"iterations     {res.iterations}",
                 f"converged      {res.converged}"]
        _write_out(args, "\n".join(lines) + "\n")
    else:
        _write_out(args, dataio.to_json(payload))
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_divergence(args):
    family = get_family(args.model)
    if args.theta is None:
        raise InputError("--theta is required")
    f = DiscreteDensity.from_model(family, args.theta)
    if args.theta2 is not None:
        g = DiscreteDensity.from_model(get_family(args.model2 or args.model), args.theta2)
        n_g = None
    else:
        emp = _load_data(args)
        g = emp.density()
        n_g = emp.n
    if args.name:
        params = tuple(float(p) for p in (args.params or "").split(",") if p != "")
        value = named_divergence(args.name, g, f, *params)
        label = args.name
    else:
        t = _triplet_from(args)
        value = gsb_divergence(g, f, t)
        label = f"GSB{t.label()}"
    payload = {
        "config": _config_of(args, ["command", "model", "theta", "model2", "theta2",
                                    "data", "freq", "alpha", "lam", "beta", "name",
                                    "params"]),
        "divergence": label,
        "value": value,
        "n": n_g,
    }
    _write_out(args, dataio.to_json(payload))
    return EXIT_OK


def cmd_influence(args):
    t = _triplet_from(args)
    family = get_family(args.model)
    verdict = classify_boundedness(t)
    payload = {
        "config": _config_of(args, ["command", "model", "theta", "alpha", "lam",
                                    "beta", "y_max", "out"]),
        "bounded": verdict.bounded,
        "region": verdict.region,
        "witness": verdict.witness,
    }
    if args.y_max is None:
        # Verdict only, no curve.
        sys.stdout.write(dataio.to_json(payload))
        return EXIT_OK
    ys = np.arange(int(args.y_max) + 1)
    vals = [influence_at_model(t, family, args.theta, int(y)).value[0] for y in ys]
    csv_text = dataio.curve_csv(ys, vals)
    payload["curve_rows"] = len(ys)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
        sys.stdout.write(dataio.to_json(payload))
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(dataio.to_json(payload))
    return EXIT_OK


def cmd_region(args):
    t = _triplet_from(args)
    verdict = classify_boundedness(t)
    payload = {
        "config": _config_of(args, ["command", "alpha", "lam", "beta"]),
        "bounded": verdict.bounded,
        "region": verdict.region,
        "witness": verdict.witness,
    }
    if getattr(args, "scan", False):
        scan = boundedness_scan(t, get_family(args.model), args.theta, args.y_max or 200)
        payload["scan_stabilized"] = scan.stabilized
        payload["scan_sup"] = float(scan.running_sup[-1])
    _write_out(args, dataio.to_json(payload))
    return EXIT_OK


def cmd_simulate(args):
    with open(args.grid) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.grid}: invalid JSON ({exc})")
    required = ["triplets", "epsilons", "n", "reps", "target"]
    missing = [k for k in required if k not in cfg]
    if missing:
        raise InputError(f"{args.grid}: missing config fields: {', '.join(missing)}")
    seed = _seed_from(args) if args.seed is not None or "seed" not in cfg else int(cfg["seed"])
    grid = run_mse_grid(
        [tuple(t) for t in cfg["triplets"]],
        cfg["epsilons"], cfg["n"], cfg["reps"], cfg["target"], seed,
        base=tuple(cfg.get("base", ("poisson", 3.0))),
        contaminant=tuple(cfg.get("contaminant", ("poisson", 10.0))),
        fit_family=cfg.get("fit_family", "poisson"),
        workers=args.workers,
    )
    if args.format == "table":
        _write_out(args, dataio.grid_table(grid))
    else:
        _write_out(args, dataio.grid_csv(grid))
    if grid.invalid_cells:
        sys.stderr.write(f"invalid cells (>1% failures): {grid.invalid_cells}\n")
    return EXIT_OK


def cmd_tune(args):
    family = get_family(args.model)
    data = _load_data(args)
    if args.grid:
        with open(args.grid) as fh:
            cfg = json.load(fh)
        for key in ("alphas", "lambdas", "betas"):
            if key not in cfg:
                raise InputError(f"{args.grid}: missing grid field {key!r}")
        grid = TuningGrid(cfg["alphas"], cfg["lambdas"], cfg["betas"])
    else:
        grid = TuningGrid.default()
    sel = select_with_refinement(args.method, grid, family, data,
                                 passes=args.refine,
                                 **({"max_iter": args.max_iter}
                                    if args.method == "iwj" else {}))
    payload = {
        "config": _config_of(args, ["command", "model", "data", "freq", "method",
                                    "grid", "refine", "max_iter"]),
        "triplet": list(sel.triplet.astuple()),
        "theta_hat": sel.theta_hat,
        "criterion_value": sel.criterion_value,
        "variant": sel.variant,
        "converged": sel.converged,
        "pilot_trace": [[p, list(tr)] for p, tr in sel.pilot_trace],
        "grid_size": sel.grid_size,
        "grid_resolution": {"alphas": grid.alphas, "lambdas": grid.lambdas,
                            "betas": grid.betas},
        "infeasible": [[list(k), msg] for k, msg in sel.infeasible],
    }
    _write_out(args, dataio.to_json(payload))
    return EXIT_OK if sel.converged else EXIT_NOCONV


def build_parser():
    parser = argparse.ArgumentParser(prog="gsbdiv",
                                     description="Minimum GSB divergence estimation")
    parser.add_argument("--config", help="JSON config emitted by a previous run")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="fit a model by minimum GSB divergence")
    p.add_argument("--data")
    p.add_argument("--freq")
    p.add_argument("--model", default="poisson")
    _add_triplet_flags(p)
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("divergence", help="evaluate a divergence value")
    p.add_argument("--data")
    p.add_argument("--freq")
    p.add_argument("--model", default="poisson")
    p.add_argument("--theta", type=float)
    p.add_argument("--model2")
    p.add_argument("--theta2", type=float)
    _add_triplet_flags(p)
    p.add_argument("--name", help="named divergence (LD, KLD, HD, L2, PD, DPD, BED, SHD, SD, ItakuraSaito)")
    p.add_argument("--params", help="comma-separated parameters for --name")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_divergence)

    p = sub.add_parser("influence", help="influence curve and boundedness verdict")
    p.add_argument("--model", default="poisson")
    p.add_argument("--theta", type=float, required=True)
    _add_triplet_flags(p)
    p.add_argument("--y-max", dest="y_max", type=int, default=None)
    p.add_argument("--out", help="write the curve CSV here")
    p.set_defaults(fn=cmd_influence)

    p = sub.add_parser("region", help="classify a triplet's boundedness region")
    _add_triplet_flags(p)
    p.add_argument("--model", default="poisson")
    p.add_argument("--theta", type=float, default=3.0)
    p.add_argument("--scan", action="store_true", help="corroborate with a sup scan")
    p.add_argument("--y-max", dest="y_max", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_region)

    p = sub.add_parser("simulate", help="run an MSE grid from a JSON config")
    p.add_argument("--grid", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=["csv", "table"], default="csv")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("tune", help="select (alpha, lambda, beta) from data")
    p.add_argument("--data")
    p.add_argument("--freq")
    p.add_argument("--model", default="poisson")
    p.add_argument("--method", choices=["hk", "owj", "iwj"], default="iwj")
    p.add_argument("--grid", help="JSON file with alphas/lambdas/betas lists")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=50)
    p.add_argument("--refine", type=int, default=0,
                   help="refinement passes around the incumbent")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_tune)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # A config file supplies defaults; explicit flags still win on re-parse.
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            with open(argv[idx + 1]) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError, IndexError) as exc:
            sys.stderr.write(f"error: cannot read --config: {exc}\n")
            return EXIT_INPUT
        command = cfg.pop("command", None)
        rest = [a for i, a in enumerate(argv) if i not in (idx, idx + 1)]
        if command and (not rest or rest[0] != command):
            rest.insert(0, command)
        args = parser.parse_args(rest)
        for k, v in cfg.items():
            if getattr(args, k, None) is None:
                setattr(args, k, v)
    else:
        args = parser.parse_args(argv)

    try:
        return args.fn(args)
    except (InputError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (DomainError, SingularMatrixError) as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERIC
    except EstimationError as exc:
        sys.stderr.write(f"non-convergence: {exc}\n")
        return EXIT_NOCONV
    except GsbError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
