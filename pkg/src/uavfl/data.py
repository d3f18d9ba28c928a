"""Synthetic Gaussian-blob data and label-skewed (non-IID) sharding."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from uavfl.errors import ConfigError
from uavfl.model import MlpArchitecture, Sample, batch_loss

CENTER_RADIUS = 2.0


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ConfigError("data", "features must be 2-D with one row per label")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.num_classes):
            raise ConfigError("data", f"labels must lie in [0, {self.num_classes})")

    def __len__(self):
        return len(self.y)

    def samples(self) -> list[Sample]:
        return [Sample(x, int(c)) for x, c in zip(self.X, self.y)]

    def subset(self, idx) -> tuple[np.ndarray, np.ndarray]:
        return self.X[idx], self.y[idx]


def class_centers(num_classes: int, input_dim: int) -> np.ndarray:
    """Fixed, seed-independent class centers at distance 2 from the origin."""
    if num_classes <= input_dim:
        return CENTER_RADIUS * np.eye(num_classes, input_dim)
    dirs = np.random.default_rng(0).normal(size=(num_classes, input_dim))
    return CENTER_RADIUS * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def gen_synthetic(
    num_classes: int = 5,
    input_dim: int = 16,
    n_per_class: int = 25,
    spread: float = 0.6,
    rng: np.random.Generator | None = None,
) -> Dataset:
    if min(num_classes, input_dim, n_per_class) < 1:
        raise ConfigError("data", "class count, input_dim and n_per_class must be >= 1")
    if not spread > 0:
        raise ConfigError("data.spread", "must be > 0")
    rng = np.random.default_rng() if rng is None else rng
    centers = class_centers(num_classes, input_dim)
    y = np.repeat(np.arange(num_classes), n_per_class)
    X = centers[y] + spread * rng.standard_normal((len(y), input_dim))
    return Dataset(X, y, num_classes)


def partition_noniid(
    dataset: Dataset,
    num_uavs: int,
    shards_per_uav: int = 2,
    samples_per_uav: int = 25,
    rng: np.random.Generator | None = None,
) -> list[np.ndarray]:
    """Label-sorted sharding.

    Indices are stable-sorted by label and cut into ``num_uavs * shards_per_uav``
    contiguous shards; every UAV is dealt ``shards_per_uav`` of them at random.
    When ``samples_per_uav`` is not a multiple of ``shards_per_uav`` the shard
    sizes follow ``np.array_split`` (e.g. 13 + 12), and shards are dealt within
    equal-size groups so that every UAV still ends up with exactly
    ``samples_per_uav`` samples.
    """
    if num_uavs < 1 or shards_per_uav < 1 or samples_per_uav < 1:
        raise ConfigError("data", "num_uavs, shards_per_uav and samples_per_uav must be >= 1")
    if shards_per_uav > samples_per_uav:
        raise ConfigError("data.shards_per_uav", "cannot exceed samples_per_uav")
    if num_uavs * samples_per_uav > len(dataset):
        raise ConfigError(
            "data.samples_per_uav",
            f"{num_uavs} UAVs x {samples_per_uav} samples exceeds dataset size {len(dataset)}",
        )
    rng = np.random.default_rng() if rng is None else rng

    order = np.argsort(dataset.y, kind="stable")[: num_uavs * samples_per_uav]
    slot_sizes = [len(a) for a in np.array_split(np.arange(samples_per_uav), shards_per_uav)]
    sizes = slot_sizes * num_uavs
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    shards = [order[bounds[k] : bounds[k + 1]] for k in range(len(sizes))]

    # pool shards by size; each UAV draws as many of each size as its slots need
    pools: dict[int, list[int]] = {}
    for k, s in enumerate(sizes):
        pools.setdefault(s, []).append(k)
    for s in sorted(pools):
        pools[s] = list(rng.permutation(pools[s]))
    out = []
    for _ in range(num_uavs):
        picked = [pools[s].pop() for s in slot_sizes]
        out.append(np.sort(np.concatenate([shards[k] for k in picked])))
    return out


def eval_loss(arch: MlpArchitecture, params: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy over a nonempty shard."""
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("eval_loss on an empty shard")
    return batch_loss(arch, params, X, y)


def distinct_labels(dataset: Dataset, shards: list[np.ndarray]) -> list[int]:
    return [len(np.unique(dataset.y[s])) for s in shards]


def save_dataset(dataset: Dataset, path) -> None:
    """Write one sample per line: comma-separated features, then the integer label."""
    lines = []
    for x, c in zip(dataset.X, dataset.y):
        lines.append(",".join([*(repr(float(v)) for v in x), str(int(c))]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path, num_classes: int | None = None) -> Dataset:
    X, y = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            X.append([float(v) for v in parts[:-1]])
            y.append(int(parts[-1]))
        except ValueError as exc:
            raise ConfigError("data.dataset_path", f"bad row: {exc}", line=lineno) from None
    if not y:
        raise ConfigError("data.dataset_path", "dataset file is empty")
    if len({len(r) for r in X}) != 1:
        raise ConfigError("data.dataset_path", "rows have differing feature counts")
    if num_classes is None:
        num_classes = max(y) + 1
    return Dataset(np.array(X), np.array(y), num_classes)
