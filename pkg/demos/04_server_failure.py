"""What happens when the server UAV goes down at round 10.

FedAvg has nowhere to send its updates and stops. The gossip swarm never
used the server, so it keeps going.
"""
# %%
from uavfl.airnet import FailureEvent
from uavfl.config import ExperimentConfig
from uavfl.harness import run_experiment

down = (FailureEvent(1, 10),)
fed = run_experiment(ExperimentConfig(scheme="fedavg", failures=down))
dfl = run_experiment(ExperimentConfig(scheme="dfl", failures=down))
print(f"fedavg: {len(fed.rows)} rounds, status {fed.status}")
print(f"dfl:    {len(dfl.rows)} rounds, loss {dfl.initial_avg_loss:.3f} -> {dfl.rows[-1].avg_loss:.3f}")

# %% A trainer dropping out and a broken D2D link only slow the gossip down.
worse = down + (FailureEvent(4, 20, 39), FailureEvent((2, 3), 0))
t = run_experiment(ExperimentConfig(failures=worse))
for r in (19, 20, 40, 60):
    row = t.rows[r - 1]
    print(f"round {r}: avg loss {row.avg_loss:.4f}  (UAV 4 {row.losses[4]:.4f})")
