"""Exact ReQU building blocks: products, monomials, polynomials, indicators, roots."""

from __future__ import annotations

import math
from itertools import combinations_with_replacement

import numpy as np

from .calculus import Stage, concatenate, summation
from .network import Network, affine

# ``xy = (rho(x+y) + rho(-x-y) - rho(-x+y) - rho(x-y)) / 4``
_PRODUCT_IN = np.array([[1.0, 1.0], [-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0]])
_PRODUCT_OUT = np.array([[0.25, 0.25, -0.25, -0.25]])


def product2():
    """Two-input product, exact for all reals; one hidden layer of 4 neurons."""
    return Network([(_PRODUCT_IN, np.zeros(4)), (_PRODUCT_OUT, np.zeros(1))])


def signed_square():
    """``t -> t**2`` as ``rho(t) + rho(-t)``; one hidden layer of 2 neurons."""
    return Network([(np.array([[1.0], [-1.0]]), np.zeros(2)),
                    (np.array([[1.0, 1.0]]), np.zeros(1))])


def relu_square(k=1, out=None, out_bias=None):
    """``k`` bare ReQU neurons read out by ``out`` (identity by default)."""
    out = np.eye(k) if out is None else np.atleast_2d(np.asarray(out, dtype=np.float64))
    out_bias = np.zeros(out.shape[0]) if out_bias is None else out_bias
    return Network([(np.eye(k), np.zeros(k)), (out, out_bias)])


def product_d(d):
    """Exact ``prod_k x_k`` via a binary tree of two-input products.

    Inputs are padded with ones to ``2**ceil(log2 d)`` entries; pairs of
    padding ones collapse to constants, so the tree costs exactly
    ``ceil(log2 d)`` hidden layers and at most ``4 d`` neurons per layer.
    """
    if d < 1:
        raise ValueError(f"product_d needs d >= 1, got {d}")
    if d == 1:
        return affine(np.eye(1))
    q = math.ceil(math.log2(d))
    items = list(range(d)) + [1.0] * (2 ** q - d)
    net = affine(np.eye(d))
    while len(items) > 1:
        stage = Stage(net.output_dim)
        nxt = []
        for a, b in zip(items[0::2], items[1::2]):
            if isinstance(a, float) and isinstance(b, float):
                nxt.append(a * b)
                continue
            rows = [{} if isinstance(a, float) else {a: 1.0},
                    {} if isinstance(b, float) else {b: 1.0}]
            bias = [a if isinstance(a, float) else 0.0,
                    b if isinstance(b, float) else 0.0]
            nxt.append(stage.add(product2(), rows, bias)[0])
        net = stage.then(net)
        items = nxt
    return net


# -- monomials and polynomials ------------------------------------------------


def grlex_exponents(d, N):
    """Exponent multi-indices of total degree ``<= N`` in graded-lex order.

    Ascending by total degree, ties broken lexicographically, so for
    ``d = 2, N = 2``: ``(0,0), (0,1), (1,0), (0,2), (1,1), (2,0)``.
    """
    if d < 1 or N < 0:
        raise ValueError("need d >= 1 and N >= 0")
    out = []
    for deg in range(N + 1):
        for combo in combinations_with_replacement(range(d), deg):
            e = [0] * d
            for k in combo:
                e[k] += 1
            out.append(tuple(e))
    return sorted(set(out), key=lambda e: (sum(e),) + e)


def monomial_count(d, N):
    return math.comb(d + N, d)


def _polynomial(d, exponents, weights, s):
    """Shared construction for monomial and polynomial networks.

    Inputs are ``(x_1..x_d, y_1..y_K)``. A squaring phase computes each
    needed ``x_k**(2**j)``; a product tree per monomial then multiplies
    ``y_m`` with the binary-digit powers of ``x``. Unpaired factors and
    finished monomials are carried by identity cells with per-factor bounds.
    """
    K = len(exponents)
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    s = float(s)
    needed = [set() for _ in range(d)]
    for e in exponents:
        for k, r in enumerate(e):
            needed[k].update(j for j in range(r.bit_length()) if r >> j & 1)
    top = [max(n) if n else -1 for n in needed]
    S = max(max(top), 0)

    net = affine(np.eye(d + K))
    # pow_idx[k][j] -> output index of x_k**(2**j) in the current net
    pow_idx = [{0: k} for k in range(d)]
    y_idx = list(range(d, d + K))

    for ell in range(1, S + 1):
        stage = Stage(net.output_dim)
        new_pow = [dict() for _ in range(d)]
        for k in range(d):
            for j in sorted(needed[k]):
                if j < ell:
                    (new_pow[k][j],) = stage.carry([pow_idx[k][j]], s ** (2 ** j))
            if top[k] >= ell:
                src = pow_idx[k][ell - 1]
                cell = signed_square() if ell == 1 else relu_square(1)
                (new_pow[k][ell],) = stage.add(cell, [{src: 1.0}])
        y_idx = stage.carry(y_idx, s)
        net = stage.then(net)
        pow_idx = new_pow

    # (index, bound) factor lists per monomial
    trees = []
    for m, e in enumerate(exponents):
        factors = [(y_idx[m], s)]
        for k, r in enumerate(e):
            factors += [(pow_idx[k][j], s ** (2 ** j))
                        for j in range(r.bit_length()) if r >> j & 1]
        trees.append(factors)

    while any(len(f) > 1 for f in trees):
        stage = Stage(net.output_dim)
        nxt = []
        for factors in trees:
            level = []
            for pair in range(0, len(factors) - 1, 2):
                (ia, ba), (ib, bb) = factors[pair], factors[pair + 1]
                (out,) = stage.add(product2(), [{ia: 1.0}, {ib: 1.0}])
                level.append((out, ba * bb))
            if len(factors) % 2:
                idx, bd = factors[-1]
                (out,) = stage.carry([idx], bd)
                level.append((out, bd))
            nxt.append(level)
        net = stage.then(net)
        trees = nxt

    if net.hidden_layers == 0:
        # degree-0 monomials only: still return a ReQU network
        stage = Stage(net.output_dim)
        trees = [[(stage.carry([f[0][0]], f[0][1])[0], f[0][1])] for f in trees]
        net = stage.then(net)

    coeffs = np.zeros(net.output_dim)
    for w, factors in zip(weights, trees):
        coeffs[factors[0][0]] += w
    bound = sum(abs(w) * f[0][1] for w, f in zip(weights, trees))
    return concatenate(summation(net.output_dim, coeffs), net).with_bound(bound)


def monomial_net(exponents, s):
    """``(x, y) -> y * prod_k x_k**r_k``, exact on ``[-s, s]^(d+1)``.

    All-zero exponents give the gate ``y`` itself through an identity cell.
    """
    exponents = tuple(int(r) for r in exponents)
    if not exponents or min(exponents) < 0:
        raise ValueError("exponents must be a non-empty vector of nonnegative integers")
    return _polynomial(len(exponents), [exponents], [1.0], s)


def polynomial_net(N, weights, s, d=1):
    """``(x, y) -> sum_i w_i y_i m_i(x)`` over all monomials of degree ``<= N``.

    Monomials ``m_i`` follow :func:`grlex_exponents`; ``y`` has one entry per
    monomial. Exact on ``[-s, s]^(d + K)``.
    """
    if N < 1 or d < 1:
        raise ValueError("need N >= 1 and d >= 1")
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    K = monomial_count(d, N)
    if weights.shape[0] != K:
        raise ValueError(
            f"expected {K} weights for degree {N} in dimension {d}, got {weights.shape[0]}"
        )
    return _polynomial(d, grlex_exponents(d, N), weights, s)


# -- indicators ----------------------------------------------------------------


def _box(a, b, s):
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("box corners must be vectors of equal length")
    if not s > 0:
        raise ValueError(f"sharpness must be positive, got {s}")
    # tiny slack so boxes built at exactly 2/s survive rounding
    if np.any(b - a < 2.0 / s * (1 - 1e-12)):
        raise ValueError(f"box sides must be at least 2/s = {2.0 / s:g}")
    return a, b


def indicator_first_half(a, b, s):
    """Rows and bias of the ``2d`` fringe neurons, and their readout ``s**2 * sum``.

    Returns ``(matrix, bias, readout)`` for inputs ``x``; the detector and
    the partition selectors reuse this layer inside larger stages.
    """
    d = a.shape[0]
    eye = np.eye(d)
    mat = np.vstack([-eye, eye])
    bias = np.concatenate([a + 1.0 / s, -b + 1.0 / s])
    return mat, bias, np.full((1, 2 * d), s * s)


def indicator_net(a, b, s):
    """``rho(1 - s^2 sum_i(rho(-x_i + a_i + 1/s) + rho(x_i - b_i + 1/s)))``.

    Equal to the indicator of ``[a, b)`` away from the two fringe strips of
    width ``1/s`` inside each side, and always in ``[0, 1]``.
    """
    a, b = _box(a, b, s)
    mat, bias, readout = indicator_first_half(a, b, s)
    return Network([
        (mat, bias),
        (-readout, np.ones(1)),
        (np.ones((1, 1)), np.zeros(1)),
    ], bound=1.0)


def gated_value_net(a, b, s, value_bound=None):
    """``(x, y) -> y * 1[a, b)(x)`` on the sharp region, ``|err| <= |y|`` elsewhere.

    ``y`` is carried by two identity layers of range ``value_bound``
    (default ``s``) and multiplied with the indicator in the last layer.
    """
    a, b = _box(a, b, s)
    d = a.shape[0]
    vb = float(s if value_bound is None else value_bound)
    mat, bias, readout = indicator_first_half(a, b, s)
    first = np.zeros((2 * d + 2, d + 1))
    first[:2 * d, :d] = mat
    first[2 * d, d], first[2 * d + 1, d] = 1.0, -1.0
    b1 = np.concatenate([bias, [vb, vb]])
    # layer 2: indicator neuron, then the identity pair for y again
    second = np.zeros((3, 2 * d + 2))
    second[0, :2 * d] = -readout
    second[1, 2 * d:], second[2, 2 * d:] = [1, -1], [-1, 1]
    second[1:, 2 * d:] /= 4 * vb
    b2 = np.array([1.0, vb, vb])
    # layer 3: product of y and the indicator
    y_row = np.array([0.0, 1.0, -1.0]) / (4 * vb)
    ind_row = np.array([1.0, 0.0, 0.0])
    third = _PRODUCT_IN @ np.vstack([y_row, ind_row])
    return Network([
        (first, b1), (second, b2), (third, np.zeros(4)),
        (_PRODUCT_OUT, np.zeros(1)),
    ], bound=vb)


# -- square root -----------------------------------------------------------------


def sqrt_iterations(t, eps):
    """Smallest ``n`` with ``2**n >= t (ln(1/2) + 3 ln(1/eps)) / eps**2``."""
    _check_sqrt(t, eps)
    return math.ceil(math.log2(t * (math.log(0.5) + 3 * math.log(1 / eps)) / eps ** 2))


def _check_sqrt(t, eps):
    if not t >= 1:
        raise ValueError(f"sqrt range t must be >= 1, got {t}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def sqrt_net(t, eps, n=None):
    """Approximate ``sqrt`` on ``[0, t]`` to within ``eps``.

    Runs ``n`` steps of the coupled recursion
    ``s <- s (1 - c / (2 t))``, ``c <- c^2 (c - 3 t) / (4 t^2)`` from
    ``s_0 = (x + eps^2) / sqrt(t)``, ``c_0 = x + eps^2 - t``. Each step takes
    two hidden layers except the last, whose ``c`` update is unused.
    """
    _check_sqrt(t, eps)
    t, eps = float(t), float(eps)
    if n is None:
        n = sqrt_iterations(t, eps)
    if n < 1:
        raise ValueError("need at least one iteration")
    # start from (x) and compute (s_0, c_0) as a merged affine
    net = affine(np.array([[1 / math.sqrt(t)], [1.0]]),
                 np.array([eps ** 2 / math.sqrt(t), eps ** 2 - t]))
    si, ci = 0, 1
    c_bound = t
    s_bound = t + 1.0
    for step in range(n):
        stage = Stage(net.output_dim)
        (s_next,) = stage.add(product2(), [{si: 1.0}, {ci: -1.0 / (2 * t)}], [0.0, 1.0])
        if step == n - 1:
            net = stage.then(net)
            si = s_next
            break
        (c_sq,) = stage.add(signed_square(), [{ci: 1.0}])
        (c_keep,) = stage.carry([ci], c_bound)
        net = stage.then(net)
        stage = Stage(net.output_dim)
        (c_next,) = stage.add(product2(), [{c_sq: 1.0}, {c_keep: 1.0 / (4 * t * t)}],
                               [0.0, -3.0 / (4 * t)])
        (s_keep,) = stage.carry([s_next], s_bound)
        net = stage.then(net)
        si, ci = s_keep, c_next
    out = np.zeros((1, net.output_dim))
    out[0, si] = 1.0
    return concatenate(affine(out), net).with_bound(math.sqrt(t) + eps)
