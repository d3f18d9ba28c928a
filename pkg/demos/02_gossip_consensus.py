"""Pure gossip on a ring: no training, only mixing.

With local training switched off, repeated neighbor averaging should pull
all five models to the same point while leaving their mean untouched.
"""
# %%
import numpy as np

from uavfl.config import ExperimentConfig, TopologySpec
from uavfl.model import TrainingConfig
from uavfl.protocol import coordinator_init, dfl_round, shuffle_streams

ring = ((2, 3), (3, 4), (4, 5), (5, 6), (2, 6))
cfg = ExperimentConfig(training=TrainingConfig(local_epochs=0), topology=TopologySpec(edges=ring))
state = coordinator_init(cfg)
rngs = shuffle_streams(cfg, state.trainer_ids)
mean0 = np.mean([state.params[i] for i in state.trainer_ids], axis=0)

# %%
for r in range(1, 201):
    state, _ = dfl_round(state, state.topology, cfg.channel, cfg.training, cfg.mixing,
                         cfg.access_mode, rngs)
    if r in (1, 5, 20, 50, 100, 200):
        X = np.stack([state.params[i] for i in state.trainer_ids])
        spread = np.max(np.linalg.norm(X - X.mean(axis=0), axis=1))
        drift = np.max(np.abs(X.mean(axis=0) - mean0))
        print(f"round {r:3d}: spread {spread:.2e}   mean drift {drift:.1e}")

# %% The spread shrinks by the second eigenvalue of the mixing matrix each round.
W = np.eye(5) / 3
for a, b in ring:
    W[a - 2, b - 2] = W[b - 2, a - 2] = 1 / 3
print("second eigenvalue:", sorted(np.abs(np.linalg.eigvalsh(W)))[-2])
