"""Command-line front end: ``sprintsim <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (critical_coupling, four_level_TR, optimal_detuned_approx, optimal_detuned_exact,
                       three_level_TR)
from .branching import branching_matrix
from .config import RunConfig, parse_config
from .dynamics import integrate, write_trace
from .ensemble import SWEEP_AXES, optimize, run_ensemble, sweep
from .generator import build_generator
from .outcomes import classify
from .params import SystemParams


def _emit(doc):
    print(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _load(args) -> RunConfig:
    cfg = parse_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "n", None) is not None:
        cfg.ensemble["n"] = args.n
    if getattr(args, "seed", None) is not None:
        cfg.ensemble["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        cfg.ensemble["workers"] = args.workers
    if getattr(args, "initial", None) is not None:
        cfg.scheme["initial_ground"] = args.initial
    if getattr(args, "scheme", None) is not None:
        cfg.scheme["name"] = args.scheme
    overrides = {k: getattr(args, k) for k in ("kappa_ex", "delta_C", "g_mag")
                 if getattr(args, k, None) is not None}
    if overrides:
        cfg.params = cfg.params.replace(**overrides)
    sys.stderr.write(cfg.echo())
    return cfg


def _analytic_params(args):
    p = SystemParams(
        kappa_ex=args.kex, kappa_i=args.ki, gamma=args.gamma, gamma_prime=args.gamma_prime,
        delta_C=args.delta_c, delta_a=0.0, delta_a_prime=args.delta_a_prime, g_mag=args.g,
        g_phase=0.0, g_prime_ratio=args.eta, h=0.0, r_sigma=0.0, r_pi=0.0)
    return p


def cmd_analytic(args):
    p = _analytic_params(args)
    if args.which == "three-level":
        T, R = three_level_TR(p)
        doc = {"T": T, "R": R, "fidelity": R / (R + T), "kappa": p.kappa}
    elif args.which == "critical":
        kex = critical_coupling(args.g, args.ki, args.gamma)
        T, R = three_level_TR(p.replace(kappa_ex=kex, delta_C=0.0))
        doc = {"kappa_ex": kex, "C_i": args.g ** 2 / (args.ki * args.gamma), "T": T, "R": R,
               "fidelity": R / (R + T)}
        print(f"kappa_ex = {kex:.2f} MHz, R = {R:.3f}", file=sys.stderr)
    elif args.which == "four-level":
        T, R = four_level_TR(p, args.s)
        doc = {"s": args.s, "T": T, "R": R, "fidelity": R / (R + T)}
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            approx = optimal_detuned_approx(p)
        exact = optimal_detuned_exact(p)
        doc = {
            name: {"kappa_ex": d.kappa_ex, "delta_C": d.delta_C, "T": d.predicted_T,
                   "R": d.predicted_R, "fidelity": d.fidelity, "efficiency": d.efficiency}
            for name, d in (("approx", approx), ("exact", exact))
        }
        doc["warnings"] = [str(w.message) for w in caught]
    _emit(doc)


def cmd_simulate(args):
    cfg = _load(args)
    scheme = cfg.level_scheme()
    gen = build_generator(cfg.params, scheme)
    sched = cfg.schedule()
    traj = integrate(gen, sched, tol=(cfg.integrator["rtol"], cfg.integrator["atol"]),
                     trace_stride=args.stride if args.trace else None)
    table = classify(traj, branching_matrix(scheme))
    if args.trace:
        write_trace(traj, args.trace)
    doc = {"T": traj.T, "R": traj.R, "L": traj.L, "residual_norm": traj.residual_norm,
           "conservation_error": traj.total() - 1.0, "steps": traj.n_steps,
           "flux": {"T": traj.flux_T, "R": traj.flux_R, "Li": traj.flux_Li, "sp": traj.flux_sp},
           "table": table.to_dict(), "config": cfg.to_dict()}
    _emit(doc)


def cmd_ensemble(args):
    cfg = _load(args)
    table = run_ensemble(cfg.ensemble_config())
    table.metadata["config"] = cfg.to_dict()
    if args.out:
        out = Path(args.out)
        out.with_suffix(".json").write_text(table.to_json())
        out.with_suffix(".csv").write_text(table.to_csv())
    sys.stdout.write(table.to_csv())


def _grid(text):
    if ":" in text:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n)).tolist()
    return [float(v) for v in text.split(",")]


def cmd_sweep(args):
    cfg = _load(args)
    rows = sweep(cfg.ensemble_config(), args.axis, _grid(args.grid))
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2))
    _emit(rows)


def cmd_optimize(args):
    cfg = _load(args)
    ec = cfg.ensemble_config()
    x0 = None if args.start is None else [float(v) for v in args.start.split(",")]
    d = optimize(ec, x0=x0, analytic=args.analytic)
    _emit({"kappa_ex": d.kappa_ex, "delta_C": d.delta_C, "T": d.predicted_T, "R": d.predicted_R,
           "fidelity": d.fidelity, "efficiency": d.efficiency})


def build_parser():
    ap = argparse.ArgumentParser(prog="sprintsim", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analytic", help="closed-form steady-state results")
    an.add_argument("which", choices=("three-level", "critical", "four-level", "optimal"))
    an.add_argument("--g", type=float, default=16.0)
    an.add_argument("--ki", type=float, default=6.0)
    an.add_argument("--kex", type=float, default=30.0)
    an.add_argument("--gamma", type=float, default=3.0)
    an.add_argument("--gamma-prime", type=float, default=3.0)
    an.add_argument("--delta-a-prime", type=float, default=-72.0)
    an.add_argument("--delta-c", type=float, default=0.0)
    an.add_argument("--eta", type=float, default=math.sqrt(5 / 4))
    an.add_argument("--s", type=int, choices=(1, -1), default=-1)
    an.set_defaults(func=cmd_analytic)

    def common(p, ensemble=False):
        p.add_argument("--config", help="sectioned key = value configuration file")
        p.add_argument("--initial", choices=("G1", "G2"))
        p.add_argument("--scheme", choices=("three_level", "four_level", "four_level_plus",
                                            "four_level_minus", "rb87"))
        p.add_argument("--kappa-ex", dest="kappa_ex", type=float)
        p.add_argument("--delta-c", dest="delta_C", type=float)
        if ensemble:
            p.add_argument("--n", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--workers", type=int)
        else:
            p.add_argument("--g", dest="g_mag", type=float)

    sim = sub.add_parser("simulate", help="one deterministic trajectory")
    common(sim)
    sim.add_argument("--trace", help="write a tab-separated trace to this path")
    sim.add_argument("--stride", type=float, default=1.0, help="trace sampling interval, ns")
    sim.set_defaults(func=cmd_simulate)

    ens = sub.add_parser("ensemble", help="outcome table over sampled couplings")
    common(ens, ensemble=True)
    ens.add_argument("--out", help="path prefix for the .json result document and .csv table")
    ens.set_defaults(func=cmd_ensemble)

    sw = sub.add_parser("sweep", help="ensembles along one parameter axis")
    common(sw, ensemble=True)
    sw.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sw.add_argument("--grid", required=True, help="comma list or start:stop:count")
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    op = sub.add_parser("optimize", help="simplex search for the best (kappa_ex, delta_C)")
    common(op, ensemble=True)
    op.add_argument("--analytic", action="store_true", help="use the steady-state objective")
    op.add_argument("--start", help="kappa_ex,delta_C starting point")
    op.set_defaults(func=cmd_optimize)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # reported as a machine-readable error document
        err = {"error": type(exc).__name__, "message": str(exc)}
        if hasattr(exc, "problems"):
            err["problems"] = exc.problems
        print(json.dumps(err), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
