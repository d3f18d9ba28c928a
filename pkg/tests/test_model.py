import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import central_difference, scalar_forward, scalar_mean_loss
from uavfl.errors import ConfigError
from uavfl.model import (
    MlpArchitecture,
    TrainingConfig,
    cross_entropy,
    forward,
    gradient,
    init_params,
    local_train,
    predict_proba,
)


def test_default_architecture_parameter_count():
    # 16*79 + 79 + 79*5 + 5
    assert MlpArchitecture(16, [79], 5).num_params == 1743


def test_init_biases_zero_and_deterministic():
    arch = MlpArchitecture(1, [], 1)
    p = init_params(arch, np.random.default_rng(3))
    assert p.shape == (2,)
    assert p[1] == 0.0

    arch = MlpArchitecture(4, [3], 2)
    a = init_params(arch, np.random.default_rng(7))
    b = init_params(arch, np.random.default_rng(7))
    assert np.array_equal(a, b)
    for w, bias in arch.unpack(a):
        assert np.all(bias == 0.0)
        limit = math.sqrt(6.0 / sum(w.shape))
        assert np.all(np.abs(w) <= limit)


def test_invalid_architecture():
    with pytest.raises(ConfigError):
        MlpArchitecture(0, [3], 2)
    with pytest.raises(ConfigError):
        MlpArchitecture(3, [0], 2)


def test_zero_params_give_uniform_probabilities():
    arch = MlpArchitecture(6, [4], 10)
    p = forward(arch, np.zeros(arch.num_params), np.arange(6.0))
    np.testing.assert_allclose(p, 0.1, rtol=0, atol=1e-15)


def test_softmax_shift_invariance(rng):
    arch = MlpArchitecture(5, [7], 4)
    params = init_params(arch, rng)
    x = rng.normal(size=5)
    shifted = params.copy()
    # output bias is the final num_classes entries
    shifted[-4:] += 3.7
    np.testing.assert_allclose(forward(arch, params, x), forward(arch, shifted, x), atol=1e-14)


def test_forward_matches_scalar_oracle(rng):
    for dims in ([5, 7, 3], [4, 6, 5, 2], [3, 2]):
        arch = MlpArchitecture(dims[0], dims[1:-1], dims[-1])
        params = rng.normal(size=arch.num_params)
        x = rng.normal(size=dims[0])
        np.testing.assert_allclose(
            forward(arch, params, x), scalar_forward(dims, params, x), rtol=0, atol=1e-12
        )


def test_forward_dimension_mismatch():
    arch = MlpArchitecture(3, [2], 2)
    with pytest.raises(ConfigError):
        forward(arch, np.zeros(arch.num_params), np.zeros(4))
    with pytest.raises(ConfigError):
        forward(arch, np.zeros(arch.num_params + 1), np.zeros(3))


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(0.01, 50.0),
    dims=st.lists(st.integers(1, 8), min_size=2, max_size=4),
)
def test_softmax_normalizes(seed, scale, dims):
    r = np.random.default_rng(seed)
    arch = MlpArchitecture(dims[0], dims[1:-1], dims[-1])
    params = scale * r.normal(size=arch.num_params)
    X = scale * r.normal(size=(5, dims[0]))
    P = predict_proba(arch, params, X)
    assert np.all(P >= 0)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, rtol=0, atol=1e-9)


@pytest.mark.parametrize(
    "probs, label, expected",
    [
        (np.full(10, 0.1), 3, math.log(10)),
        (np.array([0.0, 1.0, 0.0]), 1, 0.0),
        (np.array([0.5, 0.5]), 0, math.log(2)),
    ],
)
def test_cross_entropy_values(probs, label, expected):
    assert abs(cross_entropy(probs, label) - expected) <= 1e-12


def test_cross_entropy_floor_keeps_loss_finite():
    assert cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))
    assert math.isfinite(cross_entropy(np.array([1.0, 1e-300]), 1))


def test_gradient_vanishes_at_convex_minimum():
    # logistic regression, two opposite labels at one point: zero weights are optimal
    arch = MlpArchitecture(3, [], 2)
    X = np.array([[0.4, -1.2, 2.0], [0.4, -1.2, 2.0]])
    y = np.array([0, 1])
    assert np.linalg.norm(gradient(arch, np.zeros(arch.num_params), X, y)) < 1e-6


@pytest.mark.parametrize("instance", range(12))
def test_gradient_matches_finite_differences(instance):
    r = np.random.default_rng(100 + instance)
    dims = [int(r.integers(2, 6)), int(r.integers(2, 6)), int(r.integers(2, 5))]
    arch = MlpArchitecture(dims[0], dims[1:-1], dims[-1])
    params = init_params(arch, r)
    params[arch.num_params - dims[-1]:] = r.normal(size=dims[-1])
    X = r.normal(size=(4, dims[0]))
    y = r.integers(0, dims[-1], size=4)
    g = gradient(arch, params, X, y)
    fd = central_difference(lambda p: scalar_mean_loss(dims, p, X, y), params)
    rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-6)
    assert rel.max() < 1e-4


def test_gradient_of_duplicated_batch(rng):
    arch = MlpArchitecture(4, [5], 3)
    params = init_params(arch, rng)
    x = rng.normal(size=(1, 4))
    y = np.array([2])
    np.testing.assert_allclose(
        gradient(arch, params, np.vstack([x, x]), np.array([2, 2])),
        gradient(arch, params, x, y),
        rtol=1e-13, atol=1e-15,
    )


def test_gradient_rejects_empty_batch():
    arch = MlpArchitecture(2, [], 2)
    with pytest.raises(ValueError):
        gradient(arch, np.zeros(arch.num_params), np.zeros((0, 2)), np.zeros(0, dtype=int))


def _toy(rng, n=10, d=4, classes=3):
    return rng.normal(size=(n, d)), rng.integers(0, classes, size=n)


def test_zero_epochs_is_a_noop(rng):
    arch = MlpArchitecture(4, [5], 3)
    params = init_params(arch, rng)
    X, y = _toy(rng)
    out, loss = local_train(arch, params, X, y, TrainingConfig(local_epochs=0), rng)
    assert np.array_equal(out, params)
    assert loss == pytest.approx(scalar_mean_loss([4, 5, 3], params, X, y), rel=1e-12)


def test_zero_learning_rate_keeps_params(rng):
    arch = MlpArchitecture(4, [5], 3)
    params = init_params(arch, rng)
    X, y = _toy(rng)
    cfg = TrainingConfig(learning_rate=0.0, local_epochs=4, batch_size=3)
    out, loss = local_train(arch, params, X, y, cfg, rng)
    assert np.array_equal(out, params)
    assert loss == pytest.approx(scalar_mean_loss([4, 5, 3], params, X, y), rel=1e-12)


def test_single_full_batch_step(rng):
    arch = MlpArchitecture(4, [5], 3)
    params = init_params(arch, rng)
    X, y = _toy(rng)
    cfg = TrainingConfig(learning_rate=0.3, local_epochs=1, batch_size=len(y))
    out, _ = local_train(arch, params, X, y, cfg, np.random.default_rng(0))
    np.testing.assert_allclose(out, params - 0.3 * gradient(arch, params, X, y), atol=1e-14)


def test_local_train_deterministic(rng):
    arch = MlpArchitecture(4, [5], 3)
    params = init_params(arch, rng)
    X, y = _toy(rng, n=17)
    cfg = TrainingConfig()
    a = local_train(arch, params, X, y, cfg, np.random.default_rng(42))
    b = local_train(arch, params, X, y, cfg, np.random.default_rng(42))
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_loss_halves_on_separable_toy_data():
    r = np.random.default_rng(5)
    X = np.vstack([r.normal(-2.0, 0.5, size=(10, 2)), r.normal(2.0, 0.5, size=(10, 2))])
    y = np.repeat([0, 1], 10)
    arch = MlpArchitecture(2, [8], 2)
    params = init_params(arch, r)
    cfg = TrainingConfig(local_epochs=50)
    before = scalar_mean_loss([2, 8, 2], params, X, y)
    out, _ = local_train(arch, params, X, y, cfg, r)
    after = scalar_mean_loss([2, 8, 2], out, X, y)
    assert after <= 0.5 * before


def test_training_config_validation():
    with pytest.raises(ConfigError):
        TrainingConfig(learning_rate=-0.1)
    with pytest.raises(ConfigError):
        TrainingConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainingConfig(local_epochs=-1)
