import numpy as np
import pytest

from uavfl.airnet import FailureEvent
from uavfl.config import ExperimentConfig
from uavfl.errors import ComparisonError
from uavfl.harness import LATENCY_TICK, compare, quantize_latency, run_experiment


@pytest.fixture(scope="module")
def dfl_table():
    return run_experiment(ExperimentConfig())


@pytest.fixture(scope="module")
def fedavg_table():
    return run_experiment(ExperimentConfig(scheme="fedavg"))


def test_zero_rounds():
    t = run_experiment(ExperimentConfig(max_rounds=0))
    assert t.rows == [] and t.status == "budget_exhausted"
    assert t.to_csv().count("\n") == 1


def test_default_run_shape(dfl_table):
    assert len(dfl_table.rows) == 60
    assert [r.round for r in dfl_table.rows] == list(range(1, 61))
    assert dfl_table.status == "budget_exhausted"
    assert dfl_table.rows[-1].status == "budget_exhausted"
    assert all(r.status == "running" for r in dfl_table.rows[:-1])


def test_csv_header(dfl_table):
    header = dfl_table.to_csv().splitlines()[0]
    assert header == (
        "round,scheme,avg_loss,loss_uav_2,loss_uav_3,loss_uav_4,loss_uav_5,loss_uav_6,"
        "round_latency_s,cumulative_latency_s,status"
    )


def test_csv_floats_roundtrip(dfl_table):
    line = dfl_table.to_csv().splitlines()[5].split(",")
    row = dfl_table.rows[4]
    assert float(line[2]) == row.avg_loss
    assert float(line[-2]) == row.cumulative_latency_s


def test_deterministic(dfl_table):
    assert run_experiment(ExperimentConfig()).to_csv() == dfl_table.to_csv()


@pytest.mark.parametrize("which", ["dfl_table", "fedavg_table"])
def test_latency_bookkeeping(which, request):
    t = request.getfixturevalue(which)
    cum = t.column("cumulative_latency_s")
    per = t.column("round_latency_s")
    assert np.all(np.diff(cum) >= 0)
    assert np.array_equal(np.diff(cum), per[1:])
    assert cum[0] == per[0]
    assert np.array_equal(cum, per[0] * np.arange(1, len(cum) + 1))


@pytest.mark.parametrize("which", ["dfl_table", "fedavg_table"])
def test_average_is_mean_of_uav_columns(which, request):
    t = request.getfixturevalue(which)
    for r in t.rows:
        assert abs(np.mean([r.losses[i] for i in t.uav_ids]) - r.avg_loss) <= 1e-12


@pytest.mark.parametrize("which", ["dfl_table", "fedavg_table"])
def test_training_reduces_loss(which, request):
    t = request.getfixturevalue(which)
    assert t.rows[-1].avg_loss < t.initial_avg_loss


def test_quantization_is_tiny():
    x = 0.0275754370477
    assert abs(quantize_latency(x) - x) <= LATENCY_TICK / 2
    q = quantize_latency(x)
    assert sum([q] * 1000) == 1000 * q


def test_convergence_stops_early():
    t = run_experiment(ExperimentConfig(convergence_epsilon=0.05, convergence_window=2))
    assert 2 < len(t.rows) < 60
    assert t.status == "converged" and t.rows[-1].status == "converged"


def test_fedavg_halt_recorded_in_table():
    t = run_experiment(ExperimentConfig(scheme="fedavg", failures=(FailureEvent(1, 10),)))
    assert len(t.rows) == 10
    assert t.status == "halted" and t.rows[-1].status == "halted"


def test_compare_with_itself_is_all_zero():
    cfg = ExperimentConfig(max_rounds=5)
    s = compare(cfg, cfg)
    assert np.all(s.avg_loss_gap == 0) and np.all(s.latency_delta == 0)
    assert np.all(s.individual_gap == 0)
    assert s.final_avg_loss_gap == 0 and s.final_max_individual_gap == 0
    assert s.final_latency_delta == 0


def test_compare_rejects_mismatched_budgets():
    with pytest.raises(ComparisonError):
        compare(ExperimentConfig(max_rounds=5), ExperimentConfig(max_rounds=6))


def test_compare_default_pair():
    cfg = ExperimentConfig()
    s = compare(cfg, cfg.with_(scheme="fedavg"))
    assert len(s.rounds) == 60
    assert np.all(s.latency_delta < 0)
    assert s.final_max_individual_gap == pytest.approx(
        max(abs(s.table_a.final_losses[i] - s.table_b.final_losses[i]) for i in s.table_a.uav_ids)
    )
    last = s.to_csv().splitlines()[-1].split(",")
    assert float(last[3]) == s.final_avg_loss_gap
    assert float(last[4]) == s.final_max_individual_gap
    assert float(last[-1]) == s.final_latency_delta
