import csv
import json

import pytest

from uavfl.cli import main

SERVER_DOWN = "[failures]\nnodes = [{id = 1, start = 10}]\n"


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def cfg_file(tmp_path):
    def make(text=""):
        p = tmp_path / f"cfg{len(list(tmp_path.glob('cfg*')))}.toml"
        p.write_text(text)
        return p
    return make


def test_run_default(tmp_path, cfg_file):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file()), "--seed", "3", "--out", str(out)]) == 0
    rows = _rows(out / "metrics.csv")
    assert len(rows) == 60
    assert rows[-1]["status"] == "budget_exhausted"
    for name in ("loss.svg", "latency.svg", "manifest.json", "config.toml"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 3
    assert manifest["resolved_config"]["channel"]["bandwidth_hz"] == 4e5


def test_run_fedavg_server_failure_exits_3(tmp_path, cfg_file):
    out = tmp_path / "halt"
    code = main(["run", "--config", str(cfg_file(SERVER_DOWN)), "--seed", "0",
                 "--out", str(out), "--scheme", "fedavg"])
    assert code == 3
    rows = _rows(out / "metrics.csv")
    assert len(rows) == 10 and rows[-1]["status"] == "halted"


def test_run_is_reproducible_and_rerunnable_from_manifest(tmp_path, cfg_file):
    cfg = cfg_file("[scheme]\nmax_rounds = 12\n")
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out in (a, b):
        assert main(["run", "--config", str(cfg), "--seed", "5", "--out", str(out)]) == 0
    assert main(["run", "--config", str(a / "config.toml"), "--out", str(c)]) == 0
    for name in ("metrics.csv", "loss.svg", "latency.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_config_error_exits_2(tmp_path, cfg_file, capsys):
    bad = cfg_file("[channel]\nbandwidth_hz = -1\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "channel.bandwidth_hz" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path / "x")]) == 2


def test_validate_config(cfg_file, capsys):
    assert main(["validate-config", "--config", str(cfg_file())]) == 0
    assert "bandwidth_hz = 400000.0" in capsys.readouterr().out
    assert main(["validate-config", "--config", str(cfg_file("[x]\n"))]) == 2


def test_compare_outputs(tmp_path, cfg_file):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(cfg_file()), "--seed", "0", "--out", str(out)]) == 0
    for name in ("avg_loss.svg", "individual_loss.svg", "latency.svg", "compare.csv", "manifest.json"):
        assert (out / name).exists()
    rows = _rows(out / "compare.csv")
    assert len(rows) == 60
    last = rows[-1]
    assert {"avg_loss_gap", "max_individual_gap", "latency_delta_s"} <= set(last)
    assert float(last["latency_delta_s"]) < 0


def test_compare_single_trainer_has_zero_loss_gaps(tmp_path, cfg_file):
    # one trainer and no D2D links: both schemes reduce to plain local training
    text = "[scheme]\nmax_rounds = 4\n[topology]\nnum_uavs = 2\nedges = []\n[data]\nn_per_class = 5\n"
    out = tmp_path / "self"
    assert main(["compare", "--config", str(cfg_file(text)), "--out", str(out)]) == 0
    last = _rows(out / "compare.csv")[-1]
    assert float(last["avg_loss_gap"]) == 0.0
    assert float(last["max_individual_gap"]) == 0.0


def test_compare_deterministic(tmp_path, cfg_file):
    cfg = cfg_file("[scheme]\nmax_rounds = 6\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["compare", "--config", str(cfg), "--seed", "2", "--out", str(out)]) == 0
    for name in ("compare.csv", "avg_loss.svg", "individual_loss.svg", "latency.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
