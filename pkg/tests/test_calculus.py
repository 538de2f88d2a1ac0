import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from requ_forge.calculus import (
    Stage, concatenate, identity_block, identity_net, parallelize, select, summation,
    sync_depth, wire,
)
from requ_forge.gadgets import product2, relu_square
from requ_forge.network import Network, complexity, realize


def random_net(rng, widths):
    layers = [(rng.normal(size=(o, i)), rng.normal(size=o))
              for i, o in zip(widths[:-1], widths[1:])]
    return Network(layers)


def test_identity_examples():
    assert realize(identity_net(1), [0.5])[0] == pytest.approx(0.5, abs=1e-15)
    assert realize(identity_net(2), [1.0])[0] == 1.0
    assert realize(identity_net(1), [-1.0])[0] == -1.0


@pytest.mark.parametrize("s", [1.0, 2.0, 7.5, 100.0])
def test_identity_exact_on_range(s):
    t = np.linspace(-s, s, 1000)
    err = np.abs(realize(identity_net(s), t[:, None])[:, 0] - t)
    assert err.max() <= 1e-12 * s


def test_identity_not_identity_outside():
    s = 1.0
    # for t > s the negative branch is clamped: ((t + s)^2) / (4 s)
    assert realize(identity_net(s), [2 * s])[0] == pytest.approx(9 * s / 4)


def test_identity_rejects_bad_range():
    with pytest.raises(ValueError):
        identity_net(0.0)
    with pytest.raises(ValueError):
        identity_block(2, -1.0)


def test_concatenate_examples():
    net = concatenate(identity_net(1), identity_net(1))
    assert realize(net, [0.3])[0] == pytest.approx(0.3, abs=1e-15)
    assert complexity(net).hidden_layers == 2
    pair = parallelize(concatenate(identity_net(10), select(2, [{0: 1.0}])),
                       concatenate(identity_net(10), select(2, [{1: 1.0}])))
    assert realize(concatenate(product2(), pair), [2.0, 5.0])[0] == pytest.approx(10.0)


def test_concatenate_layer_count():
    rng = np.random.default_rng(0)
    a = random_net(rng, [2, 3, 1])          # 2 layers
    b = random_net(rng, [1, 4, 4, 2])       # 3 layers
    assert concatenate(a, b).num_layers == 4


def test_concatenate_dim_mismatch():
    with pytest.raises(ValueError):
        concatenate(product2(), identity_net(1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(1, 5), min_size=1, max_size=3),
       st.lists(st.integers(1, 5), min_size=1, max_size=3))
def test_concatenate_compositional(seed, hidden_a, hidden_b):
    rng = np.random.default_rng(seed)
    b = random_net(rng, [3] + hidden_b + [2])
    a = random_net(rng, [2] + hidden_a + [2])
    x = rng.uniform(-1, 1, (100, 3))
    want = realize(a, realize(b, x))
    got = realize(concatenate(a, b), x)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * np.abs(want).max())


def test_parallelize_examples():
    out = realize(parallelize(identity_net(1), identity_net(1)), [0.7])
    np.testing.assert_allclose(out, [0.7, 0.7], atol=1e-15)
    rho = relu_square(1)
    out = realize(parallelize(identity_net(1), rho), [-1.0])
    np.testing.assert_allclose(out, [-1.0, 0.0], atol=1e-15)


def test_parallelize_widths_add():
    rng = np.random.default_rng(1)
    a, b = random_net(rng, [3, 2, 1]), random_net(rng, [3, 4, 2])
    assert complexity(parallelize(a, b)).max_width == 6


def test_parallelize_bit_identical_branches():
    rng = np.random.default_rng(2)
    nets = [random_net(rng, [2, 5, 3, 2]) for _ in range(3)]
    x = rng.normal(size=(50, 2))
    out = realize(parallelize(*nets), x)
    for k, n in enumerate(nets):
        assert np.array_equal(out[:, 2 * k:2 * k + 2], realize(n, x))


def test_parallelize_fold_associative():
    rng = np.random.default_rng(3)
    a, b, c = (random_net(rng, [2, 3, 1]) for _ in range(3))
    x = rng.normal(size=(20, 2))
    left = realize(parallelize(parallelize(a, b), c), x)
    right = realize(parallelize(a, parallelize(b, c)), x)
    flat = realize(parallelize([a, b, c]), x)
    assert np.array_equal(left, right) and np.array_equal(left, flat)


def test_parallelize_rejects_mismatch():
    rng = np.random.default_rng(4)
    with pytest.raises(ValueError, match="synchronize"):
        parallelize(random_net(rng, [2, 3, 1]), random_net(rng, [2, 3, 3, 1]))
    with pytest.raises(ValueError, match="input dims"):
        parallelize(random_net(rng, [2, 3, 1]), random_net(rng, [3, 3, 1]))
    with pytest.raises(ValueError):
        parallelize()


def test_identity_block_and_sync():
    x = [0.1, -0.2, 0.9]
    np.testing.assert_allclose(realize(identity_block(3, 1), x), x, atol=1e-15)
    net = sync_depth(identity_net(1), 4, 1)
    assert complexity(net).hidden_layers == 4
    assert realize(net, [0.5])[0] == pytest.approx(0.5, abs=1e-14)
    with pytest.raises(ValueError):
        sync_depth(identity_net(1), 0, 1)


def test_sync_depth_uses_recorded_bound():
    net = product2().with_bound(4.0)
    synced = sync_depth(net, 3)
    x = np.random.default_rng(5).uniform(-2, 2, (1000, 2))
    np.testing.assert_allclose(realize(synced, x), realize(net, x), atol=1e-12 * 4)
    assert synced.bound == 4.0
    with pytest.raises(ValueError, match="bound"):
        sync_depth(product2(), 2)


def test_select_wire_summation():
    net = wire(product2(), 3, [{0: 1.0, 2: 1.0}, {1: 2.0}], [0.0, 1.0])
    assert realize(net, [1.0, 2.0, 3.0])[0] == pytest.approx((1 + 3) * (4 + 1))
    assert realize(summation(3, [1, 2, 3], 1.0), [1.0, 1.0, 1.0])[0] == 7.0


def test_stage_layout():
    stage = Stage(2)
    a = stage.carry([0, 1], 5.0)
    (p,) = stage.add(product2(), [{0: 1.0}, {1: 1.0}])
    assert a == [0, 1] and p == 2
    out = realize(stage.build(), [3.0, -4.0])
    np.testing.assert_allclose(out, [3.0, -4.0, -12.0], atol=1e-13)
    with pytest.raises(ValueError):
        Stage(1).build()
