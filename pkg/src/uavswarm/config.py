"""INI-style configuration files.

Sections: ``[scenario]``, ``[target.<n>]``, ``[obstacle.<n>]``, ``[channel]``,
``[apf]``, ``[mfg]``, ``[collab]`` and ``[bench]``. Vectors are written as
comma-separated numbers and ``;`` or ``#`` starts a comment. Every key is
optional; unknown sections or keys are rejected with a
:class:`~uavswarm.core.ConfigError` naming them.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import scenarios
from .channel import ChannelParams, db_to_linear
from .core import ConfigError, Obstacle, ScenarioConfig, TargetTrack
from .orchestrator import CollabConfig
from .powerctl import MfgGrid
from .trajectory import ApfGains

PRESETS = {
    "desk_scale": scenarios.desk_scale,
    "crossing_targets": scenarios.crossing_targets,
    "single_target": scenarios.single_target,
}

_SCENARIO_KEYS = {
    "preset": str, "n_uavs": int, "n_slots": int, "subslots_per_slot": int, "dt": float, "horizon": float,
    "d_max": float, "v_max": float, "seed": int, "jammer_offset": "vec", "start_box_lo": "vec",
    "start_box_hi": "vec", "min_start_separation": float,
}
_TARGET_KEYS = {"start": "vec", "direction": "vec", "speed": float}
_OBSTACLE_KEYS = {"center": "vec", "radius": float}
_CHANNEL_KEYS = {
    "alpha": float, "nakagami_m": float, "noise_power": float, "p_max_uav": float, "p_max_jam": float,
    "gamma_th_db": float, "probe1": "vec", "probe2": "vec", "resample_fading": bool,
}
_APF_KEYS = {k: float for k in ("k_att", "k_rep", "k_obs", "k_jam", "k_ext", "d0", "q", "step_len")}
_MFG_KEYS = {
    "n_energy": int, "nu": float, "legacy_diffusion": bool, "omega1": float, "omega2": float, "e0": float,
    "tol": float, "max_iter": int,
}
_COLLAB_KEYS = {
    "policy": str, "association": str, "planner": str, "i_th_u": float, "i_th_j": float, "frac_p0": float,
    "frac_tau": float, "eps_coll": float, "safety_hold": bool,
}
_BENCH_KEYS = {"n_instances": int, "n_uavs": int, "n_clusters": int, "side": float, "planar": bool}

_SECTIONS = {"scenario": _SCENARIO_KEYS, "channel": _CHANNEL_KEYS, "apf": _APF_KEYS, "mfg": _MFG_KEYS,
             "collab": _COLLAB_KEYS, "bench": _BENCH_KEYS}


@dataclass
class BenchConfig:
    n_instances: int = 1000
    n_uavs: int = 100
    n_clusters: int = 5
    side: float = 100.0
    planar: bool = True


@dataclass
class SimConfig:
    scenario: ScenarioConfig
    collab: CollabConfig
    bench: BenchConfig = field(default_factory=BenchConfig)
    config_hash: str = ""

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, scenario=replace(self.scenario, seed=seed))


def _convert(section: str, key: str, raw: str, kind):
    where = f"{section}.{key}"
    try:
        if kind == "vec":
            return tuple(float(v) for v in raw.replace(" ", "").split(",") if v != "")
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(where, f"cannot parse {raw!r}") from None


def _read_section(parser, section: str, schema: dict) -> dict:
    out = {}
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"{section}.{key}", "unknown key")
        out[key] = _convert(section, key, raw, schema[key])
    return out


def _canonical(parser: configparser.ConfigParser) -> str:
    lines = []
    for sec in sorted(parser.sections()):
        lines.append(f"[{sec}]")
        for k, v in sorted(parser.items(sec)):
            lines.append(f"{k}={v.strip()}")
    return "\n".join(lines)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def parse_config(text: str) -> SimConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                       inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None

    values: dict[str, dict] = {k: {} for k in _SECTIONS}
    targets: dict[int, dict] = {}
    obstacles: dict[int, dict] = {}
    for sec in parser.sections():
        head, _, idx = sec.partition(".")
        if head in _SECTIONS and not idx:
            values[head] = _read_section(parser, sec, _SECTIONS[head])
        elif head in ("target", "obstacle") and idx.isdigit():
            schema = _TARGET_KEYS if head == "target" else _OBSTACLE_KEYS
            (targets if head == "target" else obstacles)[int(idx)] = _read_section(parser, sec, schema)
        else:
            raise ConfigError(sec, "unknown section")

    sc = dict(values["scenario"])
    preset = sc.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("scenario.preset", f"unknown preset {preset!r}")
        base = PRESETS[preset](seed=sc.get("seed", 0), **({"n_uavs": sc["n_uavs"]} if "n_uavs" in sc else {}))
    else:
        base = ScenarioConfig()
    for key in ("jammer_offset", "start_box_lo", "start_box_hi"):
        if key in sc and len(sc[key]) != 3:
            raise ConfigError(f"scenario.{key}", "expected three numbers")
    scen = replace(base, **sc)
    try:
        if targets:
            scen.targets = [TargetTrack(t["start"], t["direction"], t["speed"])
                            for _, t in sorted(targets.items())]
        if obstacles:
            scen.obstacles = [Obstacle(o["center"], o["radius"]) for _, o in sorted(obstacles.items())]
    except KeyError as exc:
        raise ConfigError("target/obstacle", f"missing key {exc.args[0]}") from None

    ch = dict(values["channel"])
    if "gamma_th_db" in ch:
        ch["gamma_th"] = db_to_linear(ch.pop("gamma_th_db"))
    for key in ("probe1", "probe2"):
        if key in ch and len(ch[key]) != 2:
            raise ConfigError(f"channel.{key}", "expected two powers (uav, jammer)")
    mfg = dict(values["mfg"])
    grid_kw = {k: mfg.pop(k) for k in ("n_energy", "nu", "legacy_diffusion") if k in mfg}
    collab_kw = dict(values["collab"])
    for src, dst in (("tol", "mfg_tol"), ("max_iter", "mfg_max_iter")):
        if src in mfg:
            collab_kw[dst] = mfg.pop(src)
    collab_kw.update(mfg)  # omega1, omega2, e0
    try:
        collab = CollabConfig(channel=ChannelParams(**ch), gains=ApfGains(**values["apf"]),
                              grid=MfgGrid(**grid_kw), **collab_kw)
    except ValueError as exc:
        raise ConfigError("config", str(exc)) from None
    bench = BenchConfig(**values["bench"])
    return SimConfig(scenario=scen, collab=collab, bench=bench, config_hash=config_hash(_canonical(parser)))


def load_config(path) -> SimConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("file", f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text)


def default_config() -> SimConfig:
    return parse_config("[scenario]\npreset = desk_scale\n")

