"""Run experiments end to end and compare two schemes round by round."""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from uavfl.airnet import effective_topology
from uavfl.config import ExperimentConfig
from uavfl.errors import ComparisonError
from uavfl.protocol import (
    BUDGET_EXHAUSTED,
    RUNNING,
    check_convergence,
    coordinator_init,
    dfl_round,
    fedavg_round,
    mean_alive,
    shuffle_streams,
)

log = logging.getLogger(__name__)

# Round latencies are snapped to multiples of 2**-40 s (< 1 ps). On that grid
# every partial sum is exact in float64, so cumulative latency is exactly
# t * per-round latency and successive differences recover each round.
LATENCY_TICK = 2.0**-40


def quantize_latency(seconds: float) -> float:
    return round(seconds / LATENCY_TICK) * LATENCY_TICK


def fmt(x: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


@dataclass
class MetricsRow:
    round: int
    scheme: str
    losses: dict[int, float]
    avg_loss: float
    round_latency_s: float
    cumulative_latency_s: float
    status: str = RUNNING


@dataclass
class MetricsTable:
    scheme: str
    uav_ids: list[int]
    rows: list[MetricsRow] = field(default_factory=list)
    status: str = RUNNING
    initial_losses: dict[int, float] = field(default_factory=dict)

    @property
    def initial_avg_loss(self) -> float:
        return mean_alive(self.initial_losses)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=np.float64)

    @property
    def final_losses(self) -> dict[int, float]:
        return self.rows[-1].losses if self.rows else dict(self.initial_losses)

    def header(self) -> list[str]:
        return [
            "round", "scheme", "avg_loss",
            *(f"loss_uav_{i}" for i in self.uav_ids),
            "round_latency_s", "cumulative_latency_s", "status",
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for r in self.rows:
            cells = [
                str(r.round), r.scheme, fmt(r.avg_loss),
                *(fmt(r.losses[i]) for i in self.uav_ids),
                fmt(r.round_latency_s), fmt(r.cumulative_latency_s), r.status,
            ]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def run_experiment(config: ExperimentConfig) -> MetricsTable:
    """Initialize, then run rounds until convergence, budget or a halt.

    Row ``k`` (1-based ``round`` column) describes the fleet after k completed
    rounds. Failure intervals refer to 0-based round indices, so a server
    failure starting at index 10 leaves exactly 10 rows.
    """
    state = coordinator_init(config)
    rngs = shuffle_streams(config, state.trainer_ids)
    table = MetricsTable(config.scheme, state.trainer_ids)
    table.initial_losses = state.losses(effective_topology(state.topology, config.failures, 0))

    history: list[float] = []
    cumulative = 0.0
    status = RUNNING
    while True:
        verdict = check_convergence(
            history, config.convergence_epsilon, config.convergence_window, config.max_rounds
        )
        if verdict != "continue":
            status = verdict
            break
        topo = effective_topology(state.topology, config.failures, state.round)
        if config.scheme == "dfl":
            state, report = dfl_round(
                state, topo, config.channel, config.training, config.mixing,
                config.access_mode, rngs, config.broadcast,
            )
        else:
            state, report = fedavg_round(
                state, topo, config.channel, config.training, config.access_mode, rngs
            )
        if report is None:
            status = state.status
            break
        latency = quantize_latency(report.round_latency)
        cumulative += latency
        avg = report.avg_loss
        history.append(avg)
        table.rows.append(
            MetricsRow(report.round + 1, config.scheme, report.losses, avg, latency, cumulative)
        )
        log.debug("%s round %d: avg loss %.6f, latency %.6f s",
                  config.scheme, report.round + 1, avg, latency)

    table.status = status
    if table.rows:
        table.rows[-1].status = status
    if config.max_rounds == 0:
        table.status = BUDGET_EXHAUSTED
    log.info("%s finished after %d rounds: %s", config.scheme, len(table.rows), table.status)
    return table


@dataclass
class ComparisonSummary:
    label_a: str
    label_b: str
    table_a: MetricsTable
    table_b: MetricsTable
    rounds: list[int]
    avg_loss_a: np.ndarray
    avg_loss_b: np.ndarray
    cumulative_latency_a: np.ndarray
    cumulative_latency_b: np.ndarray
    individual_gap: np.ndarray

    @property
    def avg_loss_gap(self) -> np.ndarray:
        return self.avg_loss_a - self.avg_loss_b

    @property
    def latency_delta(self) -> np.ndarray:
        return self.cumulative_latency_a - self.cumulative_latency_b

    @property
    def final_avg_loss_gap(self) -> float:
        return float(self.avg_loss_gap[-1]) if self.rounds else 0.0

    @property
    def final_max_individual_gap(self) -> float:
        return float(self.individual_gap[-1]) if self.rounds else 0.0

    @property
    def final_latency_delta(self) -> float:
        return float(self.latency_delta[-1]) if self.rounds else 0.0

    def to_csv(self) -> str:
        a, b = self.label_a, self.label_b
        buf = io.StringIO()
        buf.write(
            f"round,avg_loss_{a},avg_loss_{b},avg_loss_gap,max_individual_gap,"
            f"cumulative_latency_{a}_s,cumulative_latency_{b}_s,latency_delta_s\n"
        )
        for k, r in enumerate(self.rounds):
            cells = [
                str(r), fmt(self.avg_loss_a[k]), fmt(self.avg_loss_b[k]),
                fmt(self.avg_loss_gap[k]), fmt(self.individual_gap[k]),
                fmt(self.cumulative_latency_a[k]), fmt(self.cumulative_latency_b[k]),
                fmt(self.latency_delta[k]),
            ]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def _max_gap(la: dict[int, float], lb: dict[int, float]) -> float:
    diffs = [abs(la[i] - lb[i]) for i in la if i in lb and not (math.isnan(la[i]) or math.isnan(lb[i]))]
    return max(diffs) if diffs else 0.0


def compare(config_a: ExperimentConfig, config_b: ExperimentConfig) -> ComparisonSummary:
    """Run both configs and line their metrics up round by round.

    Gaps are signed a - b. If one run halts early, curves cover the rounds
    both runs completed.
    """
    if config_a.max_rounds != config_b.max_rounds:
        raise ComparisonError(
            f"round budgets differ: {config_a.max_rounds} vs {config_b.max_rounds}"
        )
    ta = run_experiment(config_a)
    tb = run_experiment(config_b)
    n = min(len(ta.rows), len(tb.rows))
    label_a, label_b = config_a.scheme, config_b.scheme
    if label_a == label_b:
        label_a, label_b = f"{label_a}_a", f"{label_b}_b"
    return ComparisonSummary(
        label_a=label_a,
        label_b=label_b,
        table_a=ta,
        table_b=tb,
        rounds=[r.round for r in ta.rows[:n]],
        avg_loss_a=ta.column("avg_loss")[:n],
        avg_loss_b=tb.column("avg_loss")[:n],
        cumulative_latency_a=ta.column("cumulative_latency_s")[:n],
        cumulative_latency_b=tb.column("cumulative_latency_s")[:n],
        individual_gap=np.array(
            [_max_gap(ra.losses, rb.losses) for ra, rb in zip(ta.rows[:n], tb.rows[:n])]
        ),
    )
