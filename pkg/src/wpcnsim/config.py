"""Experiment configuration files: schema, validation, overrides, round-trip.

A config is a TOML document with fixed sections. All physical quantities use
SI units noted in the schema below: powers in watts, bandwidth in hertz,
noise in watts/hertz, traffic in bits per slot, angles in radians, channel
gains as linear power gains. Node and stream ids are 0-based.
"""

import dataclasses
import json
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .capacity import CapacityParams
from .channel import ChannelConfig
from .lyapunov import SystemConstants
from .model import NetworkTopology
from .simulator import ArrivalConfig, RunConfig

BUNDLED_CONFIG = "benchmark.toml"

_INT = "int"
_FLOAT = "float"
_STR = "str"
_INT_PAIRS = "int_pairs"
_FLOAT_LIST = "float_list"

# section -> key -> (type, required, unit note)
SCHEMA = {
    "topology": {
        "nodes": (_INT, True, "node count"),
        "antennas": (_INT, True, "EAP antenna count"),
        "links": (_INT_PAIRS, True, "directed data links [tx, rx], 0-based"),
        "streams": (_INT_PAIRS, True, "streams [source, sink], 0-based"),
        "angles": (_FLOAT_LIST, True, "node bearings from the array, radians"),
    },
    "constants": {
        "p_max": (_FLOAT, True, "node transmit power ceiling, watts"),
        "p_ap_max": (_FLOAT, True, "energy beacon power ceiling, watts"),
        "a_max": (_FLOAT, True, "per-stream arrival bound, bits/slot"),
        "alpha": (_FLOAT, False, "battery-margin shape, > 1"),
    },
    "capacity": {
        "bandwidth": (_FLOAT, True, "link bandwidth, hertz"),
        "noise_psd": (_FLOAT, True, "noise power spectral density, watts/hertz"),
        "g_max_sq": (_FLOAT, True, "power-gain clip, linear"),
    },
    "channel": {
        "data_gains": (_FLOAT_LIST, True, "mean power gain per link, linear"),
        "energy_gains": (_FLOAT_LIST, True, "mean power gain per node, linear"),
        "rician_k": (_FLOAT, False, "Rician factor, linear"),
        "spacing": (_FLOAT, False, "antenna spacing, wavelengths"),
    },
    "arrivals": {
        "rates": (_FLOAT_LIST, True, "mean arrival rate per stream, bits/slot"),
        "kind": (_STR, False, "uniform | constant | bernoulli"),
    },
    "run": {
        "T": (_INT, True, "horizon, slots"),
        "seed": (_INT, False, "RNG seed"),
        "V": (_FLOAT, False, "backlog-vs-power tradeoff weight"),
        "V_list": (_FLOAT_LIST, False, "sweep values for the tradeoff weight"),
        "drift_check_every": (_INT, False, "slot stride for the bound checker, 0 = off"),
    },
    "output": {
        "directory": (_STR, False, "output directory"),
        "trace": (_STR, False, "off | scalar | full"),
    },
}

_DEFAULTS = {
    ("constants", "alpha"): float(SystemConstants.DEFAULT_ALPHA),
    ("channel", "rician_k"): 1.0,
    ("channel", "spacing"): 0.5,
    ("arrivals", "kind"): "uniform",
    ("run", "seed"): 0,
    ("run", "drift_check_every"): 0,
    ("output", "directory"): "out",
    ("output", "trace"): "off",
}


class ConfigError(ValueError):
    """Malformed or semantically invalid experiment configuration."""


@dataclasses.dataclass(frozen=True)
class Experiment:
    """Everything the CLI needs: a run recipe plus sweep and output settings."""

    run_config: RunConfig
    v_list: tuple | None
    out_dir: str
    trace: str


def _coerce(section, key, kind, value):
    where = f"{section}.{key}"
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if kind == _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    if kind == _FLOAT_LIST:
        if not isinstance(value, list) or not value or any(
                isinstance(x, bool) or not isinstance(x, (int, float)) for x in value):
            raise ConfigError(f"{where}: expected a non-empty list of numbers")
        return [float(x) for x in value]
    if kind == _INT_PAIRS:
        ok = isinstance(value, list) and all(
            isinstance(p, list) and len(p) == 2
            and all(not isinstance(x, bool) and isinstance(x, int) for x in p)
            for p in value)
        if not ok:
            raise ConfigError(f"{where}: expected a list of [int, int] pairs")
        return [list(p) for p in value]
    raise AssertionError(kind)


def validate_raw(raw) -> dict:
    """Check a parsed document against the schema; return a normalized copy.

    Normalization fills defaults and coerces ints to floats where the schema
    says float, so two documents with the same effective config compare equal.
    """
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a table")
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in raw[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    out = {}
    for section, keys in SCHEMA.items():
        got = raw.get(section, {})
        sec = {}
        for key, (kind, required, _unit) in keys.items():
            if key in got:
                sec[key] = _coerce(section, key, kind, got[key])
            elif (section, key) in _DEFAULTS:
                sec[key] = _DEFAULTS[section, key]
            elif required:
                raise ConfigError(f"missing required key {section}.{key}")
        out[section] = sec
    _check_semantics(out)
    return out


def _check_semantics(cfg):
    topo = cfg["topology"]
    n = topo["nodes"]
    if len(topo["angles"]) != n:
        raise ConfigError("topology.angles: need one angle per node")
    if len(cfg["channel"]["data_gains"]) != len(topo["links"]):
        raise ConfigError("channel.data_gains: need one gain per link")
    if len(cfg["channel"]["energy_gains"]) != n:
        raise ConfigError("channel.energy_gains: need one gain per node")
    if len(cfg["arrivals"]["rates"]) != len(topo["streams"]):
        raise ConfigError("arrivals.rates: need one rate per stream")
    run = cfg["run"]
    if run["T"] < 1:
        raise ConfigError("run.T: horizon must be at least 1")
    if run["seed"] < 0:
        raise ConfigError("run.seed: seed must be nonnegative")
    if "V" in run and run["V"] <= 0.0:
        raise ConfigError("run.V: tradeoff weight must be positive")
    if "V_list" in run and any(v <= 0.0 for v in run["V_list"]):
        raise ConfigError("run.V_list: tradeoff weights must be positive")
    if "V" not in run and "V_list" not in run:
        raise ConfigError("run: need V or V_list")
    if run["drift_check_every"] < 0:
        raise ConfigError("run.drift_check_every: stride must be nonnegative")
    if cfg["output"]["trace"] not in ("off", "scalar", "full"):
        raise ConfigError("output.trace: expected off, scalar or full")


def parse_config(text: str) -> dict:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return validate_raw(raw)


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def bundled_config_text() -> str:
    return resources.files("wpcnsim.data").joinpath(BUNDLED_CONFIG).read_text()


def apply_overrides(cfg: dict, assignments) -> dict:
    """Apply "section.key=value" assignments on top of a validated config."""
    out = {sec: dict(keys) for sec, keys in cfg.items()}
    for item in assignments:
        key, sep, value = item.partition("=")
        if not sep or key.count(".") != 1:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        section, name = key.split(".")
        try:
            parsed = tomllib.loads(f"x = {value}")["x"]
        except tomllib.TOMLDecodeError:
            parsed = value  # bare string
        out.setdefault(section, {})[name] = parsed
    return validate_raw(out)


def _toml_value(kind, value):
    if kind == _STR:
        return json.dumps(value)
    if kind == _INT:
        return repr(value)
    if kind == _FLOAT:
        return repr(value)
    if kind == _FLOAT_LIST:
        return "[" + ", ".join(repr(x) for x in value) + "]"
    if kind == _INT_PAIRS:
        return "[" + ", ".join(f"[{a}, {b}]" for a, b in value) + "]"
    raise AssertionError(kind)


def serialize_config(cfg: dict) -> str:
    """Canonical TOML text; parse(serialize(c)) == c for validated configs."""
    lines = []
    for section, keys in SCHEMA.items():
        sec = cfg.get(section, {})
        lines.append(f"[{section}]")
        for key, (kind, _req, unit) in keys.items():
            if key in sec:
                lines.append(f"{key} = {_toml_value(kind, sec[key])}  # {unit}")
        lines.append("")
    return "\n".join(lines)


def build_experiment(cfg: dict) -> Experiment:
    """Turn a validated config dict into simulator-ready objects."""
    t = cfg["topology"]
    try:
        topo = NetworkTopology(
            n_nodes=t["nodes"],
            n_antennas=t["antennas"],
            links=tuple(tuple(l) for l in t["links"]),
            streams=tuple(tuple(s) for s in t["streams"]),
            node_angles=tuple(t["angles"]),
        )
        cap = CapacityParams(**cfg["capacity"])
        run = cfg["run"]
        v_list = tuple(run["V_list"]) if "V_list" in run else None
        v = run.get("V", v_list[0] if v_list else None)
        constants = SystemConstants.build(
            p_max=cfg["constants"]["p_max"],
            p_ap_max=cfg["constants"]["p_ap_max"],
            a_max=cfg["constants"]["a_max"],
            v=v,
            cap_params=cap,
            alpha=cfg["constants"]["alpha"],
        )
        chan = cfg["channel"]
        channel = ChannelConfig(
            data_mean_gains=tuple(chan["data_gains"]),
            energy_mean_gains=tuple(chan["energy_gains"]),
            rician_k=chan["rician_k"],
            antenna_spacing=chan["spacing"],
        )
        arrivals = ArrivalConfig(rates=tuple(cfg["arrivals"]["rates"]),
                                 kind=cfg["arrivals"]["kind"])
        if arrivals.peak(constants.a_max) > constants.a_max:
            raise ConfigError("arrivals.rates: peak arrival exceeds constants.a_max")
        out = cfg["output"]
        run_config = RunConfig(
            topology=topo,
            constants=constants,
            cap_params=cap,
            channel=channel,
            arrivals=arrivals,
            horizon=run["T"],
            seed=run["seed"],
            drift_check_every=run["drift_check_every"],
            trace=out["trace"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Experiment(run_config=run_config, v_list=v_list,
                      out_dir=out["directory"], trace=out["trace"])


def load_experiment(path=None, overrides=()) -> Experiment:
    """Load, override, validate and build in one step; None = bundled config."""
    cfg = parse_config(bundled_config_text()) if path is None else load_config(path)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return build_experiment(cfg)
