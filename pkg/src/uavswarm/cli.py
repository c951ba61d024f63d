"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 some episode exhausted the
horizon before every UAV arrived. Output goes to ``--out``, else to
``$UAVSWARM_OUT``, else to ``./out``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .association import cluster_benchmark
from .channel import link_gains, nearest_neighbours
from .config import SimConfig, default_config, load_config
from .core import ConfigError, build_scenario
from .orchestrator import POLICIES, compare_policies, run_episode, slot_game
from .powerctl import solve_mfg
from .scenarios import uniform_instances

EXIT_OK, EXIT_CONFIG, EXIT_HORIZON = 0, 2, 3


def _outdir(args) -> Path:
    return Path(args.out or os.environ.get("UAVSWARM_OUT") or "out")


def _load(args) -> SimConfig:
    return load_config(args.config) if args.config else default_config()


def _seeds(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out += list(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def cmd_run(args) -> int:
    cfg = _load(args)
    seed = cfg.scenario.seed if args.seed is None else args.seed
    cfg = cfg.with_seed(seed)
    collab = cfg.collab if args.policy is None else replace(cfg.collab, policy=args.policy)
    log = run_episode(build_scenario(cfg.scenario), collab, seed=seed)
    out = _outdir(args)
    header = io.provenance(cfg.config_hash, seed, subcommand="run", policy=collab.label)
    io.write_episode(out, log, header)
    s = log.summary()
    _say(args, " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in s.items()))
    for v in log.violations:
        print(f"constraint violation: {v}", file=sys.stderr)
    return EXIT_OK if log.arrived else EXIT_HORIZON


def cmd_compare(args) -> int:
    cfg = _load(args)
    seeds = _seeds(args.seeds) if args.seeds else [cfg.scenario.seed]
    policies = args.policy.split(",") if args.policy else list(POLICIES)
    for p in policies:
        if p not in POLICIES:
            raise ConfigError("policy", f"unknown policy {p!r}")
    report = compare_policies(cfg.scenario, [replace(cfg.collab, policy=p) for p in policies], seeds)
    header = io.provenance(cfg.config_hash, ",".join(map(str, seeds)), subcommand="compare")
    io.write_comparison(_outdir(args), report, header)
    _say(args, report.table())
    exhausted = any(not lg.arrived for logs in report.logs.values() for lg in logs)
    return EXIT_HORIZON if exhausted else EXIT_OK


def cmd_mfg_solve(args) -> int:
    cfg = _load(args)
    seed = cfg.scenario.seed if args.seed is None else args.seed
    sc = build_scenario(cfg.with_seed(seed).scenario)
    c = cfg.collab
    ch = c.channel
    grid = replace(c.grid, n_time=sc.subslots_per_slot, dt=sc.dt, e0=c.e0)
    pos = sc.uav_start
    g = link_gains(pos, sc.jammer_positions(0.0), ch.alpha)
    nn = nearest_neighbours(pos)
    game = slot_game(c, sc.n_uavs, sc.n_targets, g.uu[np.arange(len(pos)), nn], g, nn)
    sol = solve_mfg(grid.uniform_density(), grid, game.channel, game.cost, max_iter=c.mfg_max_iter,
                    tol=c.mfg_tol, p_max=ch.p_max_uav)
    header = io.provenance(cfg.config_hash, seed, subcommand="mfg-solve", iterations=sol.iterations,
                           converged=sol.converged)
    io.write_mfg(_outdir(args), sol, grid, header, slot=0, config_hash=cfg.config_hash)
    mass_err = float(np.max(np.abs(sol.mass(grid) - 1.0)))
    _say(args, f"iterations={sol.iterations} converged={sol.converged} max_mass_error={mass_err:.3e} "
               f"max_repair={float(sol.repair.max()):.3e}")
    return EXIT_OK


def cmd_cluster_bench(args) -> int:
    cfg = _load(args)
    b = cfg.bench
    seed = cfg.scenario.seed if args.seed is None else args.seed
    inst = uniform_instances(b.n_instances, b.n_uavs, seed=seed, side=b.side, planar=b.planar)
    rows, raw = cluster_benchmark(inst, b.n_clusters, seed=seed)
    out = _outdir(args)
    header = io.provenance(cfg.config_hash, seed, subcommand="cluster-bench", n_instances=b.n_instances)
    io._write(out / "cluster_bench.csv", header,
              ["method", "sse_mean", "sse_std", "sc_mean", "sc_std", "iterations_mean", "max_passes"],
              ([r.method, r.sse_mean, r.sse_std, r.sc_mean, r.sc_std, r.iterations_mean, r.max_passes] for r in rows))
    io._write(out / "cluster_bench_instances.csv", header, ["instance", "method", "sse", "sc", "iterations"],
              ([j, name, *a[j]] for name, a in raw.items() for j in range(len(a))))
    lines = [f"{'method':<8}{'SSE':>14}{'SC':>10}{'iterations':>12}"]
    lines += [f"{r.method:<8}{r.sse_mean:>14.1f}{r.sc_mean:>10.4f}{r.iterations_mean:>12.2f}" for r in rows]
    _say(args, "\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavswarm", description="UAV swarm tracking under mobile jammers")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seeds=False):
        p.add_argument("--config", help="INI configuration file (default: desk-scale preset)")
        if seeds:
            p.add_argument("--seeds", help="seed list, e.g. 0-19 or 1,4,7")
        else:
            p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("run", help="fly one episode")
    common(p)
    p.add_argument("--policy", choices=POLICIES)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("compare", help="compare policies over seeds")
    common(p, seeds=True)
    p.add_argument("--policy", help="comma-separated policies (default: all four)")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("mfg-solve", help="solve one slot of the power game and export m/u/p")
    common(p)
    p.set_defaults(func=cmd_mfg_solve)
    p = sub.add_parser("cluster-bench", help="CETA vs k-means vs FCM on uniform layouts")
    common(p)
    p.set_defaults(func=cmd_cluster_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
