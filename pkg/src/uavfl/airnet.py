"""UAV network model: nodes, links, air-to-air rate/latency and failures."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from uavfl.errors import ConfigError


@dataclass(frozen=True)
class UavNode:
    id: int
    position: tuple[float, float, float] = (0.0, 0.0, 100.0)
    cpu_freq: float = 1.5e9
    cycles_per_sample: float = 6e4
    alive: bool = True

    def __post_init__(self):
        if not self.cpu_freq > 0:
            raise ConfigError(f"topology.cpu_freq_hz[{self.id}]", "must be > 0")
        if not self.cycles_per_sample > 0:
            raise ConfigError("topology.cycles_per_sample", "must be > 0")


@dataclass(frozen=True)
class ChannelParams:
    tx_power_dbm: float = 30.0
    channel_gain_db: float = -50.0
    noise_power_dbm: float = -90.0
    bandwidth_hz: float = 4e5
    payload_bits: int = 56_000

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ConfigError("channel.bandwidth_hz", "must be > 0")
        if not self.payload_bits > 0:
            raise ConfigError("channel.payload_bits", "must be > 0")


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Topology:
    nodes: tuple[UavNode, ...]
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    server_id: int | None = None

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("topology", "duplicate node ids")
        known = set(ids)
        norm = set()
        for a, b in self.edges:
            if a == b:
                raise ConfigError("topology.edges", f"self-loop on node {a}")
            if a not in known or b not in known:
                raise ConfigError("topology.edges", f"edge ({a}, {b}) names an unknown node")
            norm.add(_edge(a, b))
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.server_id is not None and self.server_id not in known:
            raise ConfigError("topology.server_id", f"unknown node {self.server_id}")

    @property
    def ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def node(self, uid: int) -> UavNode:
        for n in self.nodes:
            if n.id == uid:
                return n
        raise KeyError(uid)

    def is_alive(self, uid: int) -> bool:
        return self.node(uid).alive

    def neighbors(self, uid: int) -> list[int]:
        """Alive neighbors, ascending."""
        if not self.is_alive(uid):
            return []
        out = []
        for a, b in self.edges:
            other = b if a == uid else a if b == uid else None
            if other is not None and self.is_alive(other):
                out.append(other)
        return sorted(out)

    def adjacency_matrix(self) -> np.ndarray:
        index = {uid: k for k, uid in enumerate(self.ids)}
        A = np.zeros((len(self.nodes), len(self.nodes)))
        for a, b in self.edges:
            A[index[a], index[b]] = A[index[b], index[a]] = 1.0
        return A


@dataclass(frozen=True)
class FailureEvent:
    """A node (int) or a link (pair) is down for rounds start..end inclusive."""

    target: int | tuple[int, int]
    start_round: int
    end_round: int | None = None

    def __post_init__(self):
        if self.start_round < 0:
            raise ConfigError("failures.start", "must be >= 0")
        if self.end_round is not None and self.end_round < self.start_round:
            raise ConfigError("failures.end", "must be >= start")
        if isinstance(self.target, (tuple, list)):
            object.__setattr__(self, "target", _edge(*self.target))

    def covers(self, round_index: int) -> bool:
        return self.start_round <= round_index and (
            self.end_round is None or round_index <= self.end_round
        )


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def snr(ch: ChannelParams) -> float:
    gain = 10.0 ** (ch.channel_gain_db / 10.0)
    return dbm_to_watt(ch.tx_power_dbm) * gain / dbm_to_watt(ch.noise_power_dbm)


def link_rate(ch: ChannelParams) -> float:
    """Shannon capacity of one A2A link in bits/s.

    The gain is distance-independent and the noise power is the total over the
    allocated band, so every link in the network runs at this same rate.
    """
    return ch.bandwidth_hz * math.log2(1.0 + snr(ch))


def tx_latency(payload_bits: float, rate: float) -> float:
    if not rate > 0:
        raise ValueError("rate must be > 0")
    return payload_bits / rate


def compute_latency(
    num_samples: int, local_epochs: int, cycles_per_sample: float, cpu_freq: float
) -> float:
    if not cpu_freq > 0:
        raise ValueError("cpu_freq must be > 0")
    return num_samples * local_epochs * cycles_per_sample / cpu_freq


def place_uavs(
    n: int,
    rng: np.random.Generator,
    neighbor_dist_range_m: tuple[float, float] = (80.0, 120.0),
    altitude_m: float = 100.0,
) -> list[tuple[float, float, float]]:
    """Place ``n`` UAVs on a closed ring with random adjacent spacing.

    Consecutive spacings (including the closing one) are drawn uniformly from
    ``neighbor_dist_range_m`` and the nodes are put on the circumscribed circle
    of that cyclic polygon. Positions are cosmetic; link rates ignore them.
    """
    if n < 1:
        raise ConfigError("topology.num_uavs", "must be >= 1")
    lo, hi = neighbor_dist_range_m
    if n == 1:
        return [(0.0, 0.0, float(altitude_m))]
    if n == 2:
        d = rng.uniform(lo, hi)
        return [(0.0, 0.0, float(altitude_m)), (float(d), 0.0, float(altitude_m))]

    sides = rng.uniform(lo, hi, size=n)
    k_max = int(np.argmax(sides))
    d_max = sides[k_max]
    others = np.delete(sides, k_max)
    r_min = d_max / 2.0

    def half_angles(r, d):
        return np.arcsin(np.clip(d / (2.0 * r), -1.0, 1.0))

    if 2.0 * half_angles(r_min, sides).sum() >= 2.0 * math.pi:
        # circumcenter inside the polygon
        f = lambda r: 2.0 * half_angles(r, sides).sum() - 2.0 * math.pi  # noqa: E731
        radius = brentq(f, r_min, sides.sum())
        arcs = 2.0 * half_angles(radius, sides)
    else:
        # circumcenter outside: the longest side subtends the major arc
        g = lambda r: half_angles(r, others).sum() - half_angles(r, d_max)  # noqa: E731
        radius = brentq(g, r_min, 1e3 * sides.sum())
        arcs = 2.0 * half_angles(radius, sides)
        arcs[k_max] = 2.0 * math.pi - 2.0 * half_angles(radius, others).sum()

    theta = np.concatenate([[0.0], np.cumsum(arcs[:-1])])
    return [
        (float(radius * math.cos(t)), float(radius * math.sin(t)), float(altitude_m))
        for t in theta
    ]


def effective_topology(topology: Topology, failures, round_index: int) -> Topology:
    """Apply every failure active at ``round_index``.

    Failed nodes are marked dead; failed links and all links touching a dead
    node are dropped.
    """
    if round_index < 0:
        raise ValueError("round must be >= 0")
    active = [f for f in failures if f.covers(round_index)]
    if not active:
        return topology
    dead_nodes = {f.target for f in active if isinstance(f.target, int)}
    dead_links = {f.target for f in active if isinstance(f.target, tuple)}
    nodes = tuple(
        replace(n, alive=False) if n.id in dead_nodes else n for n in topology.nodes
    )
    alive = {n.id for n in nodes if n.alive}
    edges = frozenset(
        e for e in topology.edges if e not in dead_links and e[0] in alive and e[1] in alive
    )
    return replace(topology, nodes=nodes, edges=edges)
