import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from requ_forge.gadgets import (
    gated_value_net, grlex_exponents, indicator_net, monomial_count, monomial_net,
    polynomial_net, product2, product_d, sqrt_iterations, sqrt_net,
)
from requ_forge.network import complexity, realize

rng = np.random.default_rng(2024)


def rel_err(got, want):
    return np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want)))


def test_product2_examples():
    assert realize(product2(), [3.0, -2.0])[0] == -6.0
    assert realize(product2(), [123.4, 0.0])[0] == 0.0
    y = rng.normal(size=20)
    X = np.column_stack([np.ones(20), y])
    np.testing.assert_allclose(realize(product2(), X)[:, 0], y, rtol=1e-12, atol=1e-15)


def test_product2_complexity_exact():
    c = complexity(product2())
    assert (c.hidden_layers, c.max_width) == (1, 4)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_product2_all_reals(x, y):
    assert realize(product2(), [x, y])[0] == pytest.approx(x * y, rel=1e-9, abs=1e-9)


def test_product_d_examples():
    assert realize(product_d(3), [2.0, 3.0, 4.0])[0] == pytest.approx(24.0)
    assert realize(product_d(1), [0.37])[0] == 0.37
    assert realize(product_d(4), [1.0] * 4)[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        product_d(0)


@pytest.mark.parametrize("d", range(1, 9))
def test_product_d_exact_and_budget(d):
    X = rng.uniform(-2, 2, (1000, d))
    net = product_d(d)
    assert rel_err(realize(net, X)[:, 0], X.prod(axis=1)) <= 1e-9
    c = complexity(net)
    q = math.ceil(math.log2(d)) if d > 1 else 0
    assert c.hidden_layers <= 2 * q
    assert c.hidden_layers == q
    assert c.max_width <= 4 * d


def test_monomial_examples():
    assert realize(monomial_net([2], 10), [3.0, 2.0])[0] == pytest.approx(18.0)
    assert realize(monomial_net([1, 1], 2), [0.5, -2.0, 1.0])[0] == pytest.approx(-1.0)
    assert realize(monomial_net([3], 2), [0.0, 5.0])[0] == 0.0


def test_monomial_zero_exponents_returns_gate():
    net = monomial_net([0, 0], 2)
    assert realize(net, [0.3, -1.2, 1.5])[0] == pytest.approx(1.5)
    assert complexity(net).hidden_layers == 1


@pytest.mark.parametrize("exps", [[1], [2], [3], [7], [1, 1], [2, 3], [5, 0, 2], [4, 4]])
def test_monomial_exact_and_budget(exps):
    s = 1.5
    d = len(exps)
    X = rng.uniform(-s, s, (1000, d + 1))
    want = X[:, d] * np.prod(X[:, :d] ** np.array(exps), axis=1)
    net = monomial_net(exps, s)
    assert rel_err(realize(net, X)[:, 0], want) <= 1e-9
    logs = [int(math.log2(r)) for r in exps if r > 0]
    Z = d + 1 + sum(logs)
    c = complexity(net)
    assert c.hidden_layers <= max(logs) + 2 * int(math.log2(Z))
    assert c.max_width <= 2 * Z


def test_grlex_order():
    assert grlex_exponents(2, 2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert grlex_exponents(1, 3) == [(0,), (1,), (2,), (3,)]
    for d, N in [(1, 4), (2, 3), (3, 3)]:
        assert len(grlex_exponents(d, N)) == monomial_count(d, N) == math.comb(d + N, d)


def test_polynomial_examples():
    assert realize(polynomial_net(1, [1, 1], 3, 1), [0.5, 2.0, 3.0])[0] == pytest.approx(3.5)
    assert realize(polynomial_net(2, [0, 0, 1], 2, 1), [2.0, 0.0, 0.0, 1.0])[0] == pytest.approx(4.0)
    X = rng.uniform(-1, 1, (50, 1 + 3))
    assert np.all(realize(polynomial_net(2, [0, 0, 0], 1, 1), X) == 0.0)
    with pytest.raises(ValueError):
        polynomial_net(2, [1, 1], 1, 1)


@pytest.mark.parametrize("d, N", [(1, 1), (1, 5), (2, 2), (2, 3), (3, 3), (2, 7)])
def test_polynomial_exact_and_budget(d, N):
    s = 2.0
    K = monomial_count(d, N)
    w = rng.normal(size=K)
    X = rng.uniform(-s, s, (1000, d + K))
    want = sum(w[i] * X[:, d + i] * np.prod(X[:, :d] ** np.array(e), axis=1)
               for i, e in enumerate(grlex_exponents(d, N)))
    net = polynomial_net(N, w, s, d)
    assert rel_err(realize(net, X)[:, 0], want) <= 1e-9
    S = int(math.log2(N))
    c = complexity(net)
    assert c.hidden_layers <= S + 2 * int(math.log2(d + 1 + d * S)) + 1
    assert c.max_width <= 2 * K * (d + 1 + d * S)


def test_indicator_examples():
    net = indicator_net([0.0], [1.0], 4.0)
    out = realize(net, np.array([[0.5], [-0.5], [0.1]]))[:, 0]
    np.testing.assert_allclose(out, [1.0, 0.0, 0.4096], atol=1e-12)
    c = complexity(net)
    assert c.hidden_layers == 2 and net.widths[1:3] == [2, 1]


def test_indicator_rejects_narrow_box():
    with pytest.raises(ValueError):
        indicator_net([0.0], [0.4], 4.0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_indicator_sandwich_and_exactness(d):
    s = 8.0
    a, b = -np.ones(d) * 0.5, np.ones(d) * 0.5
    net = indicator_net(a, b, s)
    X = rng.uniform(-10 * s, 10 * s, (3000, d))
    out = realize(net, X)[:, 0]
    assert out.min() >= 0 and out.max() <= 1
    Y = rng.uniform(-1, 1, (3000, d))
    out = realize(net, Y)[:, 0]
    inside = np.all((Y >= a + 1 / s) & (Y <= b - 1 / s), axis=1)
    outside = np.any((Y <= a) | (Y >= b), axis=1)
    assert np.all(out[inside] == 1.0)
    assert np.all(out[outside] == 0.0)


def test_gated_examples():
    net = gated_value_net([0.0], [1.0], 4.0)
    out = realize(net, np.array([[0.5, 3.0], [-0.5, 3.0], [0.37, 0.0], [-3.0, 0.0]]))[:, 0]
    np.testing.assert_allclose(out, [3.0, 0.0, 0.0, 0.0], atol=1e-12)
    assert complexity(net).hidden_layers == 3


def test_gated_bound():
    s = 5.0
    net = gated_value_net([-0.5, 0.0], [0.5, 1.0], s)
    X = np.column_stack([rng.uniform(-2, 2, (5000, 2)), rng.uniform(-s, s, 5000)])
    out = realize(net, X)[:, 0]
    ind = np.all((X[:, :2] >= [-0.5, 0.0]) & (X[:, :2] < [0.5, 1.0]), axis=1)
    assert np.all(np.abs(out - X[:, 2] * ind) <= np.abs(X[:, 2]) * (1 + 1e-12) + 1e-12)
    sharp = np.all((X[:, :2] >= [-0.5 + 1 / s, 1 / s]) & (X[:, :2] <= [0.5 - 1 / s, 1 - 1 / s]), axis=1)
    np.testing.assert_allclose(out[sharp], X[sharp, 2], rtol=1e-12, atol=1e-12)


def test_sqrt_iteration_count():
    assert sqrt_iterations(1, 0.1) == 10
    with pytest.raises(ValueError):
        sqrt_iterations(0.5, 0.1)
    with pytest.raises(ValueError):
        sqrt_net(1, 1.5)


@pytest.mark.parametrize("t, eps", [(1, 0.1), (4, 0.1), (9, 0.05), (4, 0.01)])
def test_sqrt_accuracy(t, eps):
    net = sqrt_net(t, eps)
    x = np.linspace(0, t, 4001)
    out = realize(net, x[:, None])[:, 0]
    assert np.max(np.abs(out - np.sqrt(x))) <= eps * (1 + 1e-9)
    assert abs(out[0]) <= eps * (1 + 1e-9)
    assert abs(out[-1] - math.sqrt(t)) <= eps


def test_sqrt_recursion_error_monotone_in_n():
    # the iterates converge to sqrt(x + eps^2); that error never grows with n
    t, eps = 4, 0.05
    x = np.linspace(0, t, 2001)
    target = np.sqrt(x + eps ** 2)
    errs = [np.max(np.abs(realize(sqrt_net(t, eps, n), x[:, None])[:, 0] - target))
            for n in (1, 2, 4, 8, 16, 32)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_sqrt_error_against_root_not_monotone():
    # near x = 0 early iterates sit closer to sqrt(0) than the shifted limit eps,
    # so the error against sqrt(x) can grow with n before settling at eps
    x = np.linspace(0, 4, 2001)
    err = {n: np.max(np.abs(realize(sqrt_net(4, 0.05, n), x[:, None])[:, 0] - np.sqrt(x)))
           for n in (7, 14)}
    assert err[14] > err[7]
    assert err[14] <= 0.05 * (1 + 1e-9)


def test_sqrt_depth_linear_in_n():
    for n in (3, 5, 10):
        a = complexity(sqrt_net(1, 0.1, n)).hidden_layers + 1
        b = complexity(sqrt_net(1, 0.1, 2 * n)).hidden_layers + 1
        assert abs(b - 2 * a) <= 1
