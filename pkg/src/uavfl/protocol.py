"""Round engines for decentralized (DFL) and server-based (FedAvg) training.

A DFL round, for every alive UAV at once: receive the neighbors' current
weights, mix them with its own, run local SGD from the mixture, then
broadcast the result. A FedAvg round: workers train from the global model,
upload to the server, the server averages by shard size and broadcasts.
Both engines are barrier-synchronous; the round lasts as long as the slowest
participant.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from uavfl.airnet import (
    ChannelParams,
    Topology,
    UavNode,
    compute_latency,
    link_rate,
    place_uavs,
    tx_latency,
)
from uavfl.config import MIXING_RULES, ExperimentConfig
from uavfl.data import Dataset, eval_loss, gen_synthetic, load_dataset, partition_noniid
from uavfl.errors import ConfigError, ProtocolError
from uavfl.model import MlpArchitecture, TrainingConfig, init_params, local_train
from uavfl.seeding import stream

log = logging.getLogger(__name__)

RUNNING, CONVERGED, HALTED, BUDGET_EXHAUSTED = "running", "converged", "halted", "budget_exhausted"


@dataclass
class FleetState:
    round: int
    params: dict[int, np.ndarray]
    shards: dict[int, np.ndarray]
    dataset: Dataset
    arch: MlpArchitecture
    topology: Topology
    status: str = RUNNING
    global_params: np.ndarray | None = None

    @property
    def trainer_ids(self) -> list[int]:
        return sorted(self.params)

    def shard(self, uid: int) -> tuple[np.ndarray, np.ndarray]:
        return self.dataset.subset(self.shards[uid])

    def losses(self, topo: Topology | None = None) -> dict[int, float]:
        """Each trainer's current model on its own shard; NaN for dead UAVs."""
        topo = self.topology if topo is None else topo
        return {
            i: eval_loss(self.arch, self.params[i], *self.shard(i)) if topo.is_alive(i) else float("nan")
            for i in self.trainer_ids
        }


@dataclass
class RoundReport:
    round: int
    scheme: str
    losses: dict[int, float]
    latencies: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    round_latency: float = 0.0

    @property
    def avg_loss(self) -> float:
        return mean_alive(self.losses)


def mean_alive(losses: dict[int, float]) -> float:
    vals = [v for v in losses.values() if not np.isnan(v)]
    return float(np.mean(vals)) if vals else float("nan")


# ---------------------------------------------------------------- mixing

def mixing_weights(
    rule: str,
    num_neighbors: int,
    shard_sizes=None,
    degrees=None,
) -> np.ndarray:
    """Convex coefficients for [own, *neighbors].

    ``shard_sizes`` and ``degrees`` are aligned with that same order.
    Metropolis uses 1 / (1 + max(deg_i, deg_j)) for each neighbor and puts
    the remainder on self.
    """
    k = num_neighbors + 1
    if rule == "uniform_self_inclusive":
        return np.full(k, 1.0 / k)
    if rule == "data_weighted":
        if shard_sizes is None or len(shard_sizes) != k:
            raise ProtocolError("data_weighted mixing needs one shard size per participant")
        sizes = np.asarray(shard_sizes, dtype=np.float64)
        if np.any(sizes < 0) or sizes.sum() <= 0:
            raise ProtocolError("shard sizes must be nonnegative with a positive total")
        return sizes / sizes.sum()
    if rule == "metropolis":
        if degrees is None or len(degrees) != k:
            raise ProtocolError("metropolis mixing needs one degree per participant")
        w = np.array([1.0 / (1.0 + max(degrees[0], d)) for d in degrees[1:]])
        return np.concatenate([[1.0 - w.sum()], w])
    raise ProtocolError(f"unknown mixing rule {rule!r}; expected one of {MIXING_RULES}")


def aggregate(
    own: np.ndarray,
    neighbor_params,
    rule: str = "uniform_self_inclusive",
    shard_sizes=None,
    degrees=None,
) -> np.ndarray:
    """Convex combination of ``own`` and the neighbors' weights.

    Neighbors must already be in ascending id order; the sum runs own first,
    then neighbors, so results are reproducible bit for bit.
    """
    own = np.asarray(own, dtype=np.float64)
    neighbor_params = [np.asarray(p, dtype=np.float64) for p in neighbor_params]
    for p in neighbor_params:
        if p.shape != own.shape:
            raise ProtocolError(f"parameter length mismatch: {p.shape} vs {own.shape}")
    if not neighbor_params:
        return own.copy()
    coef = mixing_weights(rule, len(neighbor_params), shard_sizes, degrees)
    out = coef[0] * own
    for c, p in zip(coef[1:], neighbor_params):
        out += c * p
    return out


# ---------------------------------------------------------------- rounds

def _recv_latency(tx: float, n_senders: int, access_mode: str) -> float:
    if n_senders == 0:
        return 0.0
    if access_mode == "fdma":
        return tx
    if access_mode == "tdma":
        return tx * n_senders
    raise ProtocolError(f"unknown access mode {access_mode!r}")


def dfl_round(
    state: FleetState,
    topo: Topology,
    ch: ChannelParams,
    cfg: TrainingConfig,
    rule: str,
    access_mode: str,
    rngs: dict[int, np.random.Generator],
    broadcast: bool = True,
) -> tuple[FleetState, RoundReport | None]:
    """One synchronous DFL round on the (failure-adjusted) topology ``topo``.

    Every alive trainer mixes its round-t weights with those of its alive
    trainer neighbors and trains from the mixture. Dead trainers keep their
    weights untouched. Returns ``(halted state, None)`` when no trainer is
    alive.
    """
    if state.status != RUNNING:
        raise ProtocolError(f"fleet is {state.status}, not running")
    alive = [i for i in state.trainer_ids if topo.is_alive(i)]
    if not alive:
        log.warning("round %d: every training UAV is down, halting", state.round)
        return dataclasses.replace(state, status=HALTED), None

    trainers = set(state.trainer_ids)
    nbrs = {i: [j for j in topo.neighbors(i) if j in trainers] for i in alive}
    tx = tx_latency(ch.payload_bits, link_rate(ch))

    new_params = dict(state.params)
    latencies = {}
    for i in alive:
        mixed = aggregate(
            state.params[i],
            [state.params[j] for j in nbrs[i]],
            rule,
            shard_sizes=[len(state.shards[j]) for j in (i, *nbrs[i])],
            degrees=[len(nbrs[j]) for j in (i, *nbrs[i])],
        )
        X, y = state.shard(i)
        new_params[i], _ = local_train(state.arch, mixed, X, y, cfg, rngs[i])

        node = topo.node(i)
        recv = _recv_latency(tx, len(nbrs[i]), access_mode)
        comp = compute_latency(len(y), cfg.local_epochs, node.cycles_per_sample, node.cpu_freq)
        if not nbrs[i]:
            send = 0.0
        else:
            send = tx if broadcast else tx * len(nbrs[i])
        latencies[i] = (recv, comp, send)

    nxt = dataclasses.replace(state, round=state.round + 1, params=new_params)
    report = RoundReport(
        round=state.round,
        scheme="dfl",
        losses=nxt.losses(topo),
        latencies=latencies,
        round_latency=max(sum(v) for v in latencies.values()),
    )
    return nxt, report


def fedavg_round(
    state: FleetState,
    topo: Topology,
    ch: ChannelParams,
    cfg: TrainingConfig,
    access_mode: str,
    rngs: dict[int, np.random.Generator],
) -> tuple[FleetState, RoundReport | None]:
    """One FedAvg round through the server ``topo.server_id``.

    Workers are the alive trainers with a live link to the server. If the
    server is down, or nobody can reach it, the round is not executed and the
    returned state is halted.
    """
    if state.status != RUNNING:
        raise ProtocolError(f"fleet is {state.status}, not running")
    server = topo.server_id
    if server is None:
        raise ProtocolError("fedavg needs a server node")
    if not topo.is_alive(server):
        log.warning("round %d: server UAV %d is down, training terminates", state.round, server)
        return dataclasses.replace(state, status=HALTED), None
    workers = [i for i in topo.neighbors(server) if i in state.params]
    if not workers:
        log.warning("round %d: no worker can reach the server, halting", state.round)
        return dataclasses.replace(state, status=HALTED), None

    tx = tx_latency(ch.payload_bits, link_rate(ch))
    start = state.global_params if state.global_params is not None else state.params[workers[0]]

    trained = {}
    computes = {}
    for i in workers:
        X, y = state.shard(i)
        trained[i], _ = local_train(state.arch, start, X, y, cfg, rngs[i])
        node = topo.node(i)
        computes[i] = compute_latency(len(y), cfg.local_epochs, node.cycles_per_sample, node.cpu_freq)

    sizes = np.array([len(state.shards[i]) for i in workers], dtype=np.float64)
    weights = sizes / sizes.sum()
    global_params = weights[0] * trained[workers[0]]
    for w, i in zip(weights[1:], workers[1:]):
        global_params += w * trained[i]

    new_params = dict(state.params)
    for i in workers:
        new_params[i] = global_params.copy()

    upload = _recv_latency(tx, len(workers), access_mode)
    nxt = dataclasses.replace(
        state, round=state.round + 1, params=new_params, global_params=global_params
    )
    report = RoundReport(
        round=state.round,
        scheme="fedavg",
        losses=nxt.losses(topo),
        # per worker: (global-model download, training, own upload)
        latencies={i: (tx, computes[i], tx) for i in workers},
        round_latency=max(computes.values()) + upload + tx,
    )
    return nxt, report


# ---------------------------------------------------------------- coordinator

def build_topology(config: ExperimentConfig) -> Topology:
    t = config.topology
    positions = place_uavs(t.num_uavs, stream(config.master_seed, "placement"),
                           t.spacing_range_m, t.altitude_m)
    if t.cpu_freq_hz:
        freqs = list(t.cpu_freq_hz)
    else:
        lo, hi = t.cpu_freq_range_hz
        freqs = list(stream(config.master_seed, "cpu").uniform(lo, hi, size=t.num_uavs))
    nodes = tuple(
        UavNode(uid, positions[k], float(freqs[k]), t.cycles_per_sample)
        for k, uid in enumerate(t.ids)
    )
    if config.scheme == "fedavg":
        edges = frozenset((t.server_id, j) for j in t.ids if j != t.server_id)
    else:
        edges = frozenset(t.edges)
    return Topology(nodes, edges, t.server_id)


def build_dataset(config: ExperimentConfig) -> Dataset:
    d = config.data
    if d.dataset_path:
        ds = load_dataset(d.dataset_path, d.num_classes)
        if ds.X.shape[1] != d.input_dim:
            raise ConfigError("data.input_dim", f"dataset file has {ds.X.shape[1]} features")
        return ds
    return gen_synthetic(d.num_classes, d.input_dim, d.n_per_class, d.spread,
                         stream(config.master_seed, "data"))


def coordinator_init(config: ExperimentConfig) -> FleetState:
    """Set up the task: topology, data shards and W_{i,0} for every trainer.

    DFL trainers draw independent initial weights; FedAvg (or ``shared_init``)
    gives everyone the first trainer's draw. Control traffic is free.
    """
    config.validate()
    topo = build_topology(config)
    dataset = build_dataset(config)
    trainers = config.topology.trainer_ids
    parts = partition_noniid(
        dataset,
        len(trainers),
        config.data.shards_per_uav,
        config.data.samples_per_uav,
        stream(config.master_seed, "partition"),
    )
    arch = config.arch
    params = {i: init_params(arch, stream(config.master_seed, f"init/{i}")) for i in trainers}
    global_params = None
    if config.scheme == "fedavg" or config.shared_init:
        shared = params[trainers[0]]
        params = {i: shared.copy() for i in trainers}
        if config.scheme == "fedavg":
            global_params = shared.copy()
    return FleetState(
        round=0,
        params=params,
        shards=dict(zip(trainers, parts)),
        dataset=dataset,
        arch=arch,
        topology=topo,
        global_params=global_params,
    )


def shuffle_streams(config: ExperimentConfig, ids) -> dict[int, np.random.Generator]:
    return {i: stream(config.master_seed, f"shuffle/{i}") for i in ids}


def check_convergence(loss_history, epsilon: float | None, window: int, max_rounds: int) -> str:
    """``converged`` once the last ``window`` successive changes of the
    average loss are all below ``epsilon``; ``budget_exhausted`` at
    ``max_rounds``. ``epsilon=None`` disables the convergence test.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if epsilon is not None:
        if not epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if len(loss_history) > window:
            tail = np.asarray(loss_history[-(window + 1):], dtype=np.float64)
            if np.max(np.abs(np.diff(tail))) < epsilon:
                return CONVERGED
    if len(loss_history) >= max_rounds:
        return BUDGET_EXHAUSTED
    return "continue"
