"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 failed experiment verdict.  Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import experiments as exps
from .alternating import burns_from_gel_times, solve_alternating, solve_random_alternating
from .config import CliConfig, load_config, write_config
from .errors import (
    BurnBeforeAnyGiant,
    ConfigError,
    EmptyAfterRounding,
    FplabError,
    InsufficientEvents,
    NumericFailure,
)
from .gillespie import Regime, ensemble_mean, pooled_frozen, run
from .io import (
    Manifest,
    write_burns,
    write_events,
    write_histogram,
    write_sim_output,
    write_table,
    write_trajectory,
)
from .solvers import solve_critical, solve_subcritical
from .spectrum import parse_spectrum_source
from .trajectory import SolverConfig
from .transforms import build_bundle

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERDICT = 0, 2, 3, 4
SOLVE_MODES = ("critical", "subcritical", "alternating", "random-alternating")
EXPERIMENTS = ("gamma", "rayleigh", "extremum", "tail", "scan", "sim-vs-solver")


def _add(p, *names, **kw):
    for n in names:
        dest = n.replace("-", "_")
        p.add_argument(f"--{n}", dest=dest, default=None, metavar=dest.upper(), **kw)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fplab", description="Mean-field frozen percolation laboratory")
    ap.add_argument("--version", action="version", version=f"fplab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="flat key = value config file")
        _add(p, "init", help="initial spectrum: mono:<mass>, pairs:k:v,... or a k,v CSV path")
        _add(p, "out", help="output directory")
        _add(p, "seed", "jobs")

    ps = sub.add_parser("solve", help="deterministic solvers")
    ps.add_argument("target", choices=SOLVE_MODES)
    common(ps)
    _add(ps, "K", "T", "grid", "spectra-at", "burns", "gels", "schedule")
    ps.add_argument("--lambda", dest="lambda_", default=None, metavar="LAMBDA")
    ps.add_argument("--h", dest="grid_h", default=None, metavar="H", help="alias of --grid")

    pm = sub.add_parser("simulate", help="finite-N Gillespie simulation")
    common(pm)
    _add(pm, "N", "T", "alpha", "schedule", "replicas", "K-obs", "samples")
    pm.add_argument("--lambda", dest="lambda_", default=None, metavar="LAMBDA")
    pm.add_argument("--debug", action="store_const", const="true", default=None)
    pm.add_argument("--record-events", dest="record_events", action="store_const",
                    const="true", default=None)

    pt = sub.add_parser("transform", help="tabulate E, F0, G0 on a w grid")
    common(pt)
    _add(pt, "w", help="w grid: list or start:stop:num")

    pe = sub.add_parser("experiment", help="limit-law checks and the exponent scan")
    pe.add_argument("target", choices=EXPERIMENTS)
    common(pe)
    _add(pe, "K", "T", "grid", "N", "alpha", "schedule", "replicas", "K-obs", "samples", "t",
         "lambdas", "threshold", "eps", "n-controls", "alphas", "N-list", "K-big", "times",
         "min-events")
    pe.add_argument("--lambda", dest="lambda_", default=None, metavar="LAMBDA")
    return ap


def _flags(ns: argparse.Namespace) -> dict:
    skip = {"command", "target", "config", "lambda_", "grid_h"}
    flags = {k: v for k, v in vars(ns).items() if k not in skip}
    lam = getattr(ns, "lambda_", None)
    if lam is not None:
        if flags.get("schedule") is not None:
            raise ConfigError("lambda", "give either --lambda or --schedule, not both")
        flags["lambda"] = lam
    if getattr(ns, "grid_h", None) is not None:
        flags["grid"] = ns.grid_h
    return flags


def _solver_config(cfg: CliConfig) -> SolverConfig:
    sa = cfg.spectra_at if cfg.spectra_at else (cfg.T,)
    return SolverConfig(K=cfg.K, h=cfg.grid, T=cfg.T, schedule=cfg.schedule, seed=cfg.seed,
                        spectra_at=sa)


def _cmd_solve(cfg: CliConfig, flags: dict, man: Manifest) -> int:
    bundle = build_bundle(parse_spectrum_source(cfg.init))
    scfg = _solver_config(cfg)
    burns = None
    if cfg.target == "critical":
        traj = solve_critical(bundle, scfg)
    elif cfg.target == "subcritical":
        traj = solve_subcritical(bundle, scfg)
    elif cfg.target == "alternating":
        if cfg.burns and cfg.gels:
            raise ConfigError("burns", "give either burns or gels, not both")
        bts = list(cfg.burns) or burns_from_gel_times(bundle, cfg.gels)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BurnBeforeAnyGiant)
            traj, burns = solve_alternating(bundle, bts, scfg)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    else:
        if len(cfg.schedule) != 1:
            raise ConfigError("schedule", "random-alternating needs a constant rate")
        traj, burns = solve_random_alternating(bundle, cfg.lam, cfg.T, cfg.seed, scfg)
    path = os.path.join(cfg.out, "trajectory.csv")
    man.add(path, write_trajectory(traj, path))
    if burns is not None:
        path = os.path.join(cfg.out, "burns.csv")
        man.add(path, write_burns(burns, path))
    print(f"{cfg.target}: {traj.times.size} grid rows, {len(traj.burns)} burns, "
          f"Phi(T)={traj.value_at('Phi', cfg.T):.10g}", file=sys.stderr)
    return EXIT_OK


def _cmd_simulate(cfg: CliConfig, flags: dict, man: Manifest) -> int:
    spec0 = parse_spectrum_source(cfg.init)
    regime = Regime(cfg.alpha, cfg.schedule)
    ts = np.linspace(0.0, cfg.T, cfg.samples)

    def one(r):
        return run(spec0, cfg.N, regime, cfg.seed, ts, cfg.K_obs, replica=r,
                   debug=cfg.debug, record_events=cfg.record_events)

    if cfg.jobs > 1 and cfg.replicas > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            outs = list(ex.map(one, range(cfg.replicas)))
    else:
        outs = [one(r) for r in range(cfg.replicas)]
    series = {n: ensemble_mean(outs, n) for n in ("m0", "Phi", "m1", "m2", "cmax")}
    path = os.path.join(cfg.out, "trajectory.csv")
    man.add(path, write_sim_output(ts, series, ensemble_mean(outs, "w"), path))
    if cfg.replicas > 1:
        per = {"replica": [], "t": [], "Phi": [], "m0": [], "cmax": []}
        for r, o in enumerate(outs):
            per["replica"] += [r] * ts.size
            per["t"] += ts.tolist()
            per["Phi"] += o.Phi.tolist()
            per["m0"] += o.m0.tolist()
            per["cmax"] += o.cmax.tolist()
        path = os.path.join(cfg.out, "replicas.csv")
        man.add(path, write_table(per, path))
    hist = pooled_frozen(outs)
    path = os.path.join(cfg.out, "histogram.csv")
    man.add(path, write_histogram(hist.binned(ts), path))
    if cfg.record_events:
        for r, o in enumerate(outs):
            name = "events.csv" if cfg.replicas == 1 else f"events_{r}.csv"
            path = os.path.join(cfg.out, name)
            man.add(path, write_events(o.events, path))
    n_ev = sum(o.n_events for o in outs)
    wall = sum(o.wall_time for o in outs)
    man.data["events"] = n_ev
    man.data["m0N_initial"] = outs[0].m0_initial
    print(f"simulate: {cfg.replicas} replicas, {n_ev} events, "
          f"{n_ev / wall if wall > 0 else float('nan'):.3g} events/s, "
          f"mean Phi(T)={series['Phi'][-1]:.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_transform(cfg: CliConfig, flags: dict, man: Manifest) -> int:
    bundle = build_bundle(parse_spectrum_source(cfg.init))
    ws = np.asarray(cfg.w if cfg.w else np.linspace(bundle.gel_time, 4 * bundle.gel_time, 31))
    _, E, F0, G0 = bundle.core_arrays(ws)
    path = os.path.join(cfg.out, "transform.csv")
    man.add(path, write_table({"w": ws, "E": E, "F": F0, "G": G0}, path))
    return EXIT_OK


def _cmd_experiment(cfg: CliConfig, flags: dict, man: Manifest) -> int:
    spec0 = parse_spectrum_source(cfg.init)
    bundle = build_bundle(spec0)
    name = cfg.target
    if name == "gamma":
        rep = exps.gamma_limit_check(bundle, cfg.t, cfg.lambdas, threshold=cfg.threshold or 0.05)
    elif name == "rayleigh":
        rep = exps.rayleigh_limit_check(bundle, cfg.t, cfg.lam, cfg.replicas,
                                        threshold=cfg.threshold or 0.08, eps=cfg.eps,
                                        seed=cfg.seed, min_events=cfg.min_events,
                                        h=cfg.grid, jobs=cfg.jobs)
    elif name == "extremum":
        rep = exps.extremum_check(bundle, cfg.T, cfg.n_controls, seed=cfg.seed, h=cfg.grid,
                                  eps=cfg.eps if cfg.eps is not None else 0.5)
    elif name == "tail":
        rep = exps.tail_and_selfsimilarity_check(bundle, cfg.times, cfg.K_big, h=cfg.grid)
    elif name == "scan":
        rep = exps.beta_alpha_scan(spec0, cfg.alphas, cfg.N_list, cfg.t, cfg.replicas,
                                   lam=cfg.lam, seed=cfg.seed, jobs=cfg.jobs)
    else:
        regime = Regime(cfg.alpha, cfg.schedule)
        rep = exps.sim_vs_solver_check(spec0, cfg.N, regime, cfg.T, cfg.replicas, cfg.K_obs,
                                       seed=cfg.seed, n_times=cfg.samples, h=cfg.grid,
                                       jobs=cfg.jobs)
    for path in rep.write(cfg.out):
        man.add(path)
    man.data["verdict"] = rep.verdict
    print(rep.summary(), file=sys.stderr)
    return EXIT_VERDICT if rep.verdict is False else EXIT_OK


_DISPATCH = {"solve": _cmd_solve, "simulate": _cmd_simulate, "transform": _cmd_transform,
             "experiment": _cmd_experiment}


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        flags = _flags(ns)
        cfg = load_config(ns.config, flags, command=ns.command,
                          target=getattr(ns, "target", "") or "")
        os.makedirs(cfg.out, exist_ok=True)
        man = Manifest(["fplab", *argv], cfg.as_dict(), cfg.seed)
        code = _DISPATCH[ns.command](cfg, flags, man)
        cfg_path = os.path.join(cfg.out, "config.cfg")
        write_config(cfg, cfg_path)
        man.add(cfg_path)
        man.write(cfg.out)
        return code
    except (ConfigError, EmptyAfterRounding) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InsufficientEvents as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except (FplabError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
