"""Sanity-checking the hand-written backprop against finite differences."""
# %%
import numpy as np

from uavfl.model import MlpArchitecture, batch_loss, gradient, init_params

rng = np.random.default_rng(7)
arch = MlpArchitecture(6, (5,), 4)
params = init_params(arch, rng)
X = rng.normal(size=(8, 6))
y = rng.integers(0, 4, size=8)

g = gradient(arch, params, X, y)
h = 1e-6
fd = np.empty_like(params)
for k in range(params.size):
    e = np.zeros_like(params)
    e[k] = h
    fd[k] = (batch_loss(arch, params + e, X, y) - batch_loss(arch, params - e, X, y)) / (2 * h)

# %%
rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-8)
print(f"{params.size} parameters, worst relative error {rel.max():.2e}")
