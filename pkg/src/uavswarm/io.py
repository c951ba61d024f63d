"""Plot-ready CSV exports. Every file starts with a ``#`` provenance line."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .association import Partition
from .orchestrator import ComparisonReport, EpisodeLog
from .powerctl import MfgGrid, MfgSolution

__version__ = "0.1.0"


def provenance(config_hash: str, seed, **extra) -> str:
    items = {"tool": f"uavswarm {__version__}", "config_hash": config_hash, "seed": seed, **extra}
    return "# " + " ".join(f"{k}={v}" for k, v in items.items())


def _write(path: Path, header: str, columns: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """Returns (provenance line, column names, rows)."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        rows = list(csv.reader(fh))
    return header, rows[0], rows[1:]


def write_partition(path, partition: Partition, header: str) -> Path:
    assigned = partition.assigned_targets()
    rows = ((i, int(partition.labels[i]), int(assigned[i])) for i in range(len(partition.labels)))
    return _write(Path(path), header, ["uav_id", "label", "assigned_target"], rows)


def write_episode(outdir, log: EpisodeLog, header: str) -> list[Path]:
    out = Path(outdir)
    n = log.positions.shape[1]
    traj = []
    for k in range(log.n_subslots):
        for i in range(n):
            x, y, z = log.positions[k + 1, i]
            traj.append((k, i, x, y, z, log.f_tot[k, i], log.turning_angle[k, i],
                         log.used_external[k, i], log.used_jitter_fix[k, i]))
    links = []
    for k in range(log.n_subslots):
        for i in range(n):
            links.append((k, i, int(log.assigned[k + 1, i]), log.energies[k + 1, i], log.powers[k, i],
                          log.i_u[k, i], log.i_j[k, i], log.sinr[k, i]))
    files = [
        _write(out / "trajectory.csv", header,
               ["t", "uav_id", "x", "y", "z", "f_tot", "turning_angle", "used_external", "used_jitter_fix"], traj),
        _write(out / "links.csv", header,
               ["t", "uav_id", "assigned_target", "energy", "power", "i_u", "i_j", "sinr"], links),
        _write(out / "slots.csv", header, ["slot", "i_bar_u", "i_bar_j", "k_rep", "k_jam"],
               ((s, a, b, *log.gain_history[s + 1]) for s, (a, b) in enumerate(log.slot_averages))),
        _write(out / "events.csv", header, ["t", "kind", "detail"],
               ((e.subslot, e.kind, ";".join(f"{k}:{v}" for k, v in e.detail.items())) for e in log.events)),
        _write(out / "violations.csv", header, ["t", "constraint", "entities", "value"],
               ((v.subslot, v.constraint, " ".join(map(str, v.entities)), v.value) for v in log.violations)),
    ]
    summary = out / "summary.txt"
    with open(summary, "w") as fh:
        fh.write(header + "\n")
        for k, v in log.summary().items():
            fh.write(f"{k} = {_fmt(v)}\n")
    files.append(summary)
    return files


def write_mfg(outdir, sol: MfgSolution, grid: MfgGrid, header: str, slot: int, config_hash: str) -> list[Path]:
    out = Path(outdir)
    energies = grid.energies()
    cols = ["t"] + [f"e{z}" for z in range(grid.n_energy)]
    files = []
    for name, mat in (("m", sol.m), ("u", sol.u), ("p", sol.p)):
        rows = ([t * grid.dt, *mat[t]] for t in range(mat.shape[0]))
        files.append(_write(out / f"mfg_{name}_slot{slot}_{config_hash}.csv",
                            header + f" energy_levels={energies[0]:.4g}..{energies[-1]:.4g}", cols, rows))
    return files


def write_comparison(outdir, report: ComparisonReport, header: str) -> list[Path]:
    out = Path(outdir)
    cols = ["policy", "n_runs", "interference_mean", "interference_std", "sinr_mean", "sinr_std", "steps_mean",
            "steps_std", "uav_steps_mean", "switches_mean", "switches_std", "arrived_fraction", "violations"]
    rows = ([getattr(r, c if c != "policy" else "label") for c in cols] for r in report.rows)
    table = _write(out / "comparison.csv", header, cols, rows)
    per_run = _write(out / "comparison_runs.csv", header,
                     ["policy", "seed", "arrived", "steps", "uav_steps", "mean_switches", "mean_total_interference",
                      "mean_sinr", "sinr_ok_fraction"],
                     ([lab, lg.seed, lg.arrived, lg.steps, lg.uav_steps, lg.mean_switches, lg.mean_total_interference,
                       float(lg.mean_sinr.mean()) if lg.n_subslots else 0.0, lg.sinr_ok_fraction()]
                      for lab, logs in report.logs.items() for lg in logs))
    txt = out / "comparison.txt"
    txt.write_text(header + "\n" + report.table() + "\n")
    return [table, per_run, txt]
