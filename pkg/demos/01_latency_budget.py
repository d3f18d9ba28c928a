"""How long one training round takes on the air.

Walks through the radio and compute arithmetic behind every row of
metrics.csv, then shows why scheduling (TDMA vs FDMA) decides which
scheme is faster.
"""
# %%
from uavfl.airnet import ChannelParams, compute_latency, link_rate, tx_latency
from uavfl.config import ExperimentConfig
from uavfl.harness import run_experiment

ch = ChannelParams()
rate = link_rate(ch)
tx = tx_latency(ch.payload_bits, rate)
print(f"link rate       {rate / 1e6:.4f} Mb/s")
print(f"one model hop   {tx * 1e3:.4f} ms for {ch.payload_bits} bits")

# %% Local work is cheap next to the radio: 25 samples, 3 epochs, 60k cycles each.
for ghz in (1.0, 1.5, 2.0):
    print(f"compute at {ghz} GHz: {compute_latency(25, 3, 6e4, ghz * 1e9) * 1e3:.3f} ms")

# %% Under TDMA the server's uplink slots queue up, under FDMA they overlap.
for mode in ("tdma", "fdma"):
    lat = {}
    for scheme in ("dfl", "fedavg"):
        t = run_experiment(ExperimentConfig(scheme=scheme, access_mode=mode, max_rounds=1))
        lat[scheme] = t.rows[0].round_latency_s
    print(f"{mode}: dfl {lat['dfl'] * 1e3:.2f} ms, fedavg {lat['fedavg'] * 1e3:.2f} ms per round")
