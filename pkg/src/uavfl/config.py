"""Experiment configuration: dataclasses, validation and the TOML file format.

A config file has the flat sections ``[scheme]``, ``[topology]``,
``[channel]``, ``[training]``, ``[data]`` and ``[failures]``. Every key is
optional; omitted keys take the defaults below. Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from uavfl.airnet import ChannelParams, FailureEvent
from uavfl.errors import ConfigError
from uavfl.model import MlpArchitecture, TrainingConfig

SCHEMES = ("dfl", "fedavg")
ACCESS_MODES = ("fdma", "tdma")
MIXING_RULES = ("uniform_self_inclusive", "data_weighted", "metropolis")

# D2D links among the five training UAVs once the server (UAV 1) is gone:
# a ring with one chord.
DEFAULT_D2D_EDGES = ((2, 3), (3, 4), (4, 5), (5, 6), (2, 6), (2, 4))


@dataclass(frozen=True)
class TopologySpec:
    num_uavs: int = 6
    server_id: int | None = 1
    edges: tuple[tuple[int, int], ...] = DEFAULT_D2D_EDGES
    cpu_freq_hz: tuple[float, ...] = ()
    cpu_freq_range_hz: tuple[float, float] = (1e9, 2e9)
    cycles_per_sample: float = 6e4
    altitude_m: float = 100.0
    spacing_range_m: tuple[float, float] = (80.0, 120.0)

    @property
    def ids(self) -> list[int]:
        return list(range(1, self.num_uavs + 1))

    @property
    def trainer_ids(self) -> list[int]:
        return [i for i in self.ids if i != self.server_id]


@dataclass(frozen=True)
class DataSpec:
    num_classes: int = 5
    input_dim: int = 16
    n_per_class: int = 25
    spread: float = 0.6
    samples_per_uav: int = 25
    shards_per_uav: int = 2
    dataset_path: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str = "dfl"
    max_rounds: int = 60
    master_seed: int = 0
    access_mode: str = "tdma"
    mixing: str = "uniform_self_inclusive"
    broadcast: bool = True
    shared_init: bool = False
    convergence_epsilon: float | None = None
    convergence_window: int = 5
    hidden_dims: tuple[int, ...] = (79,)
    topology: TopologySpec = field(default_factory=TopologySpec)
    channel: ChannelParams = field(default_factory=ChannelParams)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    data: DataSpec = field(default_factory=DataSpec)
    failures: tuple[FailureEvent, ...] = ()

    @property
    def arch(self) -> MlpArchitecture:
        return MlpArchitecture(self.data.input_dim, self.hidden_dims, self.data.num_classes)

    def with_(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "ExperimentConfig":
        _validate(self)
        return self


def _check(cond, path, msg):
    if not cond:
        raise ConfigError(path, msg)


def _validate(cfg: ExperimentConfig) -> None:
    _check(cfg.scheme in SCHEMES, "scheme.name", f"must be one of {SCHEMES}")
    _check(cfg.max_rounds >= 0, "scheme.max_rounds", "must be >= 0")
    _check(cfg.access_mode in ACCESS_MODES, "scheme.access_mode", f"must be one of {ACCESS_MODES}")
    _check(cfg.mixing in MIXING_RULES, "scheme.mixing", f"must be one of {MIXING_RULES}")
    if cfg.convergence_epsilon is not None:
        _check(cfg.convergence_epsilon > 0, "scheme.convergence_epsilon", "must be > 0")
    _check(cfg.convergence_window >= 1, "scheme.convergence_window", "must be >= 1")
    _check(all(h >= 1 for h in cfg.hidden_dims), "training.hidden_dims", "sizes must be >= 1")

    t = cfg.topology
    _check(t.num_uavs >= 1, "topology.num_uavs", "must be >= 1")
    ids = set(t.ids)
    if t.server_id is not None:
        _check(t.server_id in ids, "topology.server_id", f"unknown node {t.server_id}")
    _check(len(t.trainer_ids) >= 1, "topology.num_uavs", "need at least one training UAV")
    if cfg.scheme == "fedavg":
        _check(t.server_id is not None, "topology.server_id", "fedavg needs a server")
    for a, b in t.edges:
        _check(a in ids and b in ids, "topology.edges", f"edge ({a}, {b}) names an unknown node")
        _check(a != b, "topology.edges", f"self-loop on node {a}")
    lo, hi = t.cpu_freq_range_hz
    _check(0 < lo <= hi, "topology.cpu_freq_range_hz", "need 0 < low <= high")
    if t.cpu_freq_hz:
        _check(len(t.cpu_freq_hz) == t.num_uavs, "topology.cpu_freq_hz",
               f"need one value per UAV ({t.num_uavs})")
        _check(all(lo <= f <= hi for f in t.cpu_freq_hz), "topology.cpu_freq_hz",
               f"values must lie in [{lo:g}, {hi:g}]")
    _check(t.cycles_per_sample > 0, "topology.cycles_per_sample", "must be > 0")
    s_lo, s_hi = t.spacing_range_m
    _check(0 < s_lo <= s_hi, "topology.spacing_range_m", "need 0 < low <= high")

    ch = cfg.channel
    _check(ch.bandwidth_hz > 0, "channel.bandwidth_hz", "must be > 0")
    _check(ch.payload_bits > 0, "channel.payload_bits", "must be > 0")
    for name in ("tx_power_dbm", "channel_gain_db", "noise_power_dbm"):
        _check(math.isfinite(getattr(ch, name)), f"channel.{name}", "must be finite")

    tr = cfg.training
    _check(tr.learning_rate > 0, "training.learning_rate", "must be > 0")
    _check(tr.local_epochs >= 0, "training.local_epochs", "must be >= 0")
    _check(tr.batch_size >= 1, "training.batch_size", "must be >= 1")

    d = cfg.data
    for name in ("num_classes", "input_dim", "n_per_class", "samples_per_uav", "shards_per_uav"):
        _check(getattr(d, name) >= 1, f"data.{name}", "must be >= 1")
    _check(d.spread > 0, "data.spread", "must be > 0")
    _check(d.shards_per_uav <= d.samples_per_uav, "data.shards_per_uav",
           "cannot exceed samples_per_uav")
    if not d.dataset_path:
        need = len(t.trainer_ids) * d.samples_per_uav
        have = d.num_classes * d.n_per_class
        _check(need <= have, "data.samples_per_uav",
               f"{len(t.trainer_ids)} UAVs x {d.samples_per_uav} samples exceeds dataset size {have}")

    for k, f in enumerate(cfg.failures):
        if isinstance(f.target, tuple):
            _check(all(x in ids for x in f.target), f"failures.links[{k}]", "unknown node")
        else:
            _check(f.target in ids, f"failures.nodes[{k}]", f"unknown node {f.target}")


# ---------------------------------------------------------------- file format

# section -> key -> (attribute path on ExperimentConfig, kind)
_SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "scheme": {
        "name": ("scheme", "str"),
        "max_rounds": ("max_rounds", "int"),
        "master_seed": ("master_seed", "int"),
        "access_mode": ("access_mode", "str"),
        "mixing": ("mixing", "str"),
        "broadcast": ("broadcast", "bool"),
        "shared_init": ("shared_init", "bool"),
        "convergence_epsilon": ("convergence_epsilon", "float?"),
        "convergence_window": ("convergence_window", "int"),
    },
    "topology": {
        "num_uavs": ("topology.num_uavs", "int"),
        "server_id": ("topology.server_id", "int?"),
        "edges": ("topology.edges", "pairs"),
        "cpu_freq_hz": ("topology.cpu_freq_hz", "floats"),
        "cpu_freq_range_hz": ("topology.cpu_freq_range_hz", "range"),
        "cycles_per_sample": ("topology.cycles_per_sample", "float"),
        "altitude_m": ("topology.altitude_m", "float"),
        "spacing_range_m": ("topology.spacing_range_m", "range"),
    },
    "channel": {
        "tx_power_dbm": ("channel.tx_power_dbm", "float"),
        "channel_gain_db": ("channel.channel_gain_db", "float"),
        "noise_power_dbm": ("channel.noise_power_dbm", "float"),
        "bandwidth_hz": ("channel.bandwidth_hz", "float"),
        "payload_bits": ("channel.payload_bits", "int"),
    },
    "training": {
        "learning_rate": ("training.learning_rate", "float"),
        "local_epochs": ("training.local_epochs", "int"),
        "batch_size": ("training.batch_size", "int"),
        "hidden_dims": ("hidden_dims", "ints"),
    },
    "data": {
        "num_classes": ("data.num_classes", "int"),
        "input_dim": ("data.input_dim", "int"),
        "n_per_class": ("data.n_per_class", "int"),
        "spread": ("data.spread", "float"),
        "samples_per_uav": ("data.samples_per_uav", "int"),
        "shards_per_uav": ("data.shards_per_uav", "int"),
        "dataset_path": ("data.dataset_path", "str"),
    },
    "failures": {
        "nodes": ("failures", "node_events"),
        "links": ("failures", "link_events"),
    },
}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return (_is_int(v) or isinstance(v, float))


def _coerce(kind: str, value, path: str):
    bad = ConfigError(path, f"invalid value {value!r} (expected {kind})")
    if kind.endswith("?"):
        kind = kind[:-1]
    if kind == "str":
        if not isinstance(value, str):
            raise bad
        return value
    if kind == "int":
        if not _is_int(value):
            raise bad
        return value
    if kind == "float":
        if not _is_num(value):
            raise bad
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise bad
        return value
    if kind == "ints":
        if not isinstance(value, list) or not all(_is_int(v) for v in value):
            raise bad
        return tuple(value)
    if kind == "floats":
        if not isinstance(value, list) or not all(_is_num(v) for v in value):
            raise bad
        return tuple(float(v) for v in value)
    if kind == "range":
        if not isinstance(value, list) or len(value) != 2 or not all(_is_num(v) for v in value):
            raise bad
        return (float(value[0]), float(value[1]))
    if kind == "pairs":
        if not isinstance(value, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(_is_int(x) for x in p) for p in value
        ):
            raise bad
        return tuple((p[0], p[1]) for p in value)
    raise AssertionError(kind)


def _events(kind: str, value, path: str) -> list[FailureEvent]:
    if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
        raise ConfigError(path, "expected an array of inline tables")
    allowed = {"id", "start", "end"} if kind == "node_events" else {"a", "b", "start", "end"}
    out = []
    for k, ev in enumerate(value):
        extra = set(ev) - allowed
        if extra:
            raise ConfigError(f"{path}[{k}].{sorted(extra)[0]}", "unknown key")
        missing = {"start", *(("id",) if kind == "node_events" else ("a", "b"))} - set(ev)
        if missing:
            raise ConfigError(f"{path}[{k}].{sorted(missing)[0]}", "missing key")
        for key, v in ev.items():
            if not _is_int(v):
                raise ConfigError(f"{path}[{k}].{key}", f"invalid value {v!r} (expected int)")
        target = ev["id"] if kind == "node_events" else (ev["a"], ev["b"])
        if kind == "link_events" and ev["a"] == ev["b"]:
            raise ConfigError(f"{path}[{k}]", "link endpoints must differ")
        try:
            out.append(FailureEvent(target, ev["start"], ev.get("end")))
        except ConfigError as exc:
            raise ConfigError(f"{path}[{k}]", str(exc)) from None
    return out


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]", s)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return lineno
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", s):
            return lineno
    return None


def _set_path(sections: dict, path: str, value) -> None:
    head, _, rest = path.partition(".")
    if rest:
        sections.setdefault(head, {})[rest] = value
    else:
        sections.setdefault("", {})[head] = value


def config_from_dict(raw: dict, text: str = "") -> ExperimentConfig:
    """Build and validate a config from parsed TOML. ``text`` only feeds line numbers."""
    values: dict = {}
    failures: list[FailureEvent] = []
    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section", _locate(text, section))
        if not isinstance(body, dict):
            raise ConfigError(section, "expected a table", _locate(text, section))
        for key, value in body.items():
            path = f"{section}.{key}"
            line = _locate(text, section, key)
            if key not in _SCHEMA[section]:
                raise ConfigError(path, "unknown key", line)
            attr, kind = _SCHEMA[section][key]
            try:
                if kind.endswith("_events"):
                    failures.extend(_events(kind, value, path))
                else:
                    _set_path(values, attr, _coerce(kind, value, path))
            except ConfigError as exc:
                raise ConfigError(exc.field, str(exc).split(": ", 1)[1], line) from None

    top = values.pop("", {})
    try:
        cfg = ExperimentConfig(
            **top,
            topology=TopologySpec(**values.get("topology", {})),
            channel=ChannelParams(**values.get("channel", {})),
            training=TrainingConfig(**values.get("training", {})),
            data=DataSpec(**values.get("data", {})),
            failures=tuple(failures),
        )
        return cfg.validate()
    except ConfigError as exc:
        section, _, key = exc.field.partition(".")
        key = re.split(r"[\[.]", key)[0] if key else None
        line = _locate(text, section, key) if key else _locate(text, section)
        if exc.line is None and line is not None:
            raise ConfigError(exc.field, str(exc).split(": ", 1)[1], line) from None
        raise


def parse_config_text(text: str) -> ExperimentConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError("<syntax>", str(exc), int(m.group(1)) if m else None) from None
    return config_from_dict(raw, text)


def parse_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("<file>", f"config file not found: {path}")
    return parse_config_text(p.read_text())


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out: dict = {section: {} for section in _SCHEMA}
    for section, keys in _SCHEMA.items():
        for key, (attr, kind) in keys.items():
            if kind.endswith("_events"):
                continue
            obj = cfg
            for part in attr.split("."):
                obj = getattr(obj, part)
            if obj is None:
                continue
            if isinstance(obj, tuple):
                obj = [list(v) if isinstance(v, tuple) else v for v in obj]
            out[section][key] = obj
    nodes = []
    links = []
    for f in cfg.failures:
        ev = {"start": f.start_round}
        if f.end_round is not None:
            ev["end"] = f.end_round
        if isinstance(f.target, tuple):
            links.append({"a": f.target[0], "b": f.target[1], **ev})
        else:
            nodes.append({"id": f.target, **ev})
    if nodes:
        out["failures"]["nodes"] = nodes
    if links:
        out["failures"]["links"] = links
    return {k: v for k, v in out.items() if v}


def serialize_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))
