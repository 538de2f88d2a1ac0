"""Full approximation networks: interior Taylor selector, bump, boundary detector.

All three pieces share the same front end. Four hidden layers locate the
coarse cube (weights ``theta_j``) and then the fine offset inside it
(weights ``lambda_i``) using sharp indicator gadgets. Each piece then adds
its own read-out layers. The windowed network multiplies the clipped
interior value by the bump and by ``1 - detector``, and the full network
sums ``2**d`` windowed copies over shifted partitions.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .calculus import Stage, concatenate, identity_block, parallelize, select, summation, sync_depth
from .gadgets import monomial_count, polynomial_net, product2, product_d, relu_square
from .network import ComplexityReport, Network, affine, complexity
from .partition import PartitionPair, shell_width
from .taylor import (
    ApproximationSpec, multi_factorial, sufficient_M, taylor_constant,
    validate_taylor_constant,
)

# identity range for carried coordinates; covers every shifted partition
X_BOUND = 2.0

# bump indicators use their own, much sharper, fringe so the bump is exact
# wherever the detector lets a value through
BUMP_FRINGE = 2.0 ** -30


def clip_bound(R, d):
    """``R e^(2d)``, the global bound on the interior approximator."""
    return R * math.exp(2 * d)


def _log2_floor(n):
    return int(math.floor(math.log2(n)))


def predicted_interior_depth(d, r):
    k = int(math.floor(r))
    S = _log2_floor(k)
    return S + 2 * _log2_floor(d + 1 + d * S) + 5


def predicted_interior_width(d, r, M):
    k = int(math.floor(r))
    S = _log2_floor(k)
    K = monomial_count(d, k)
    return max((1 + K) * M ** d * max(4, 2 * d + 1) + 2, 2 * K * (d + 1 + d * S))


def predicted_depth(d, r):
    """Hidden-layer budget of the full network."""
    return predicted_interior_depth(d, r) + 3


def predicted_width(d, r, M):
    """Width budget of the full network."""
    per_shift = (
        predicted_interior_width(d, r, M)
        + 2 * (M ** d * (2 * d + 1) + 2 * d + 2 * d * M ** d)
        + 2
        + M ** d * max(4, 2 * d + 1)
    )
    return 2 ** d * per_shift


# -- shared front end -----------------------------------------------------------------


def _half_indicator(stage, w, a, b, s):
    """Add the ``2d`` fringe neurons of an indicator on affine inputs ``w``.

    ``w`` lists ``(row, const)`` pairs, one per coordinate. Returns the
    output index of ``s^2 * sum(neurons)``.
    """
    d = len(w)
    rows, bias = [], []
    for (row, c0), ak in zip(w, a):
        rows.append({k: -v for k, v in row.items()})
        bias.append(-c0 + ak + 1.0 / s)
    for (row, c0), bk in zip(w, b):
        rows.append(dict(row))
        bias.append(c0 - bk + 1.0 / s)
    (q,) = stage.add(relu_square(2 * d, out=np.full((1, 2 * d), s * s)), rows, bias)
    return q


def _sharp_layer(stage, qs, readout=None, out_bias=None):
    """``rho(1 - q)`` for each previous output ``q``; optional linear read-out."""
    rows = [{q: -1.0} for q in qs]
    cell = relu_square(len(qs), out=readout, out_bias=out_bias)
    return stage.add(cell, rows, np.ones(len(qs)))


def _locator(pp, s, fine_shrink=0.0):
    """Four hidden layers producing ``(x, theta, lambda)``.

    ``theta_j`` marks the coarse cube, ``lambda_i`` the fine offset box
    (shrunk by ``fine_shrink``) of ``u = x - sum_j theta_j B_j``. Both are
    exact 0/1 at distance ``>= 1/s`` (plus the shrink) from cube faces and
    lie in ``[0, 1]`` elsewhere, with at most one of each family nonzero.
    """
    d, n = pp.d, pp.size
    B, V, h = pp.coarse_corners, pp.offsets, pp.fine_side
    net = affine(np.eye(d))
    x = list(range(d))

    stage = Stage(net.output_dim)
    xs = stage.carry(x, X_BOUND)
    q = [_half_indicator(stage, [({x[k]: 1.0}, 0.0) for k in range(d)],
                         B[j], B[j] + pp.coarse_side, s) for j in range(n)]
    net, x = stage.then(net), xs

    stage = Stage(net.output_dim)
    xs = stage.carry(x, X_BOUND)
    theta = _sharp_layer(stage, q)
    net, x = stage.then(net), xs

    stage = Stage(net.output_dim)
    xs = stage.carry(x, X_BOUND)
    ts = stage.carry(theta, 1.0)
    u = [({x[k]: 1.0, **{theta[j]: -B[j, k] for j in range(n)}}, 0.0) for k in range(d)]
    q = [_half_indicator(stage, u, V[i] + fine_shrink, V[i] + h - fine_shrink, s)
         for i in range(n)]
    net, x, theta = stage.then(net), xs, ts

    stage = Stage(net.output_dim)
    xs = stage.carry(x, X_BOUND)
    ts = stage.carry(theta, 1.0)
    lam = _sharp_layer(stage, q)
    return stage.then(net), xs, ts, lam


def _check(f, pp, spec):
    if f.d != pp.d:
        raise ValueError(f"function has d={f.d} but partition has d={pp.d}")
    if spec.M != pp.M:
        raise ValueError(f"spec has M={spec.M} but partition has M={pp.M}")
    spec.check(f)


def interior_approximator(f, pp, spec):
    """Network equal to the piecewise Taylor polynomial of ``f`` on fine-cube interiors.

    Exact (up to rounding) at distance ``>= M^-(2r+2)`` from fine-cube faces,
    where it is within the piecewise Taylor error of ``f``; bounded by
    ``R e^(2d)`` everywhere on ``[-1, 1)^d``.
    """
    _check(f, pp, spec)
    d, n, M = f.d, pp.size, pp.M
    s = 1.0 / shell_width(M, f.r)
    tau = max(2.0, f.R)
    alphas = f.multi_indices
    B, V = pp.coarse_corners, pp.offsets
    net, x, theta, lam = _locator(pp, s)

    # derivative tables D^alpha f(B_j + v_i), shape (n_offsets, n_coarse)
    anchors = (V[:, None, :] + B[None, :, :]).reshape(-1, d)
    tables = {a: f.deriv(a, anchors).reshape(n, n) for a in alphas}

    stage = Stage(net.output_dim)
    xs = stage.carry(x, X_BOUND)
    zeta = {a: [] for a in alphas}
    for i in range(n):
        for a in alphas:
            row = {theta[j]: tables[a][i, j] for j in range(n)}
            zeta[a] += stage.add(product2(), [{lam[i]: 1.0}, row])
    # (sum_i lambda_i) * (sum_j theta_j B_j), one product per coordinate
    lam_sum = {li: 1.0 for li in lam}
    corner = [stage.add(product2(), [lam_sum, {theta[j]: B[j, k] for j in range(n)}])[0]
              for k in range(d)]
    ls = stage.carry(lam, 1.0)
    net = stage.then(net)

    # read out z = x - corner - sum_i lambda_i v_i and zeta_alpha
    rows = []
    for k in range(d):
        row = {xs[k]: 1.0, corner[k]: -1.0}
        for i in range(n):
            row[ls[i]] = row.get(ls[i], 0.0) - V[i, k]
        rows.append(row)
    rows += [{idx: 1.0 for idx in zeta[a]} for a in alphas]
    net = concatenate(select(net.output_dim, rows), net)

    weights = [1.0 / multi_factorial(a) for a in alphas]
    poly = polynomial_net(f.order, weights, tau, d)
    return concatenate(poly, net).with_bound(clip_bound(f.R, d))


def bump_net(pp, variant="symmetric", fringe=BUMP_FRINGE):
    """Product over coordinates of a quadratic bump on the containing fine cube.

    With ``t = M^2 (x_k - C_k)`` for the fine corner ``C``, each factor is
    ``G(t) = 2 rho(t) - 4 rho(t - 1/2) + 4 rho(t - 3/2) - 2 rho(t - 2)``: 0 on
    the faces, 1 at the center, and the shifted copies sum to 1.
    ``variant="printed"`` instead uses ``u = M^2/2 (C_k - x_k)`` with shifts
    ``2, 3/2, 1/2, 0``, which rises from 0 to 1 across the cube; it is kept
    for comparison only.
    """
    if variant not in ("symmetric", "printed"):
        raise ValueError(f"unknown bump variant {variant!r}")
    d, n, M = pp.d, pp.size, pp.M
    B, V = pp.coarse_corners, pp.offsets
    net, x, theta, lam = _locator(pp, 1.0 / fringe)
    if variant == "symmetric":
        scale, shifts = float(M * M), np.array([0.0, -0.5, -1.5, -2.0])
    else:
        scale, shifts = -M * M / 2.0, np.array([2.0, 1.5, 0.5, 0.0])
    stage = Stage(net.output_dim)
    values = []
    for k in range(d):
        t = {x[k]: scale}
        for j in range(n):
            t[theta[j]] = -scale * B[j, k]
        for i in range(n):
            if V[i, k]:
                t[lam[i]] = -scale * V[i, k]
        cell = relu_square(4, out=[[2.0, -4.0, 4.0, -2.0]])
        values += stage.add(cell, [t] * 4, shifts)
    net = stage.then(net)
    if d > 1:
        net = concatenate(product_d(d), net)
    return net.with_bound(1.0)


def boundary_detector(pp, r=2.0):
    """Flags the shells of width ``delta = M^-(2r+2)`` next to fine-cube faces.

    Output is exactly 1 within ``delta`` of a face, exactly 0 at distance
    ``>= 2 delta``, and in ``[0, 1]`` in between. Computed as
    ``1 - rho(1 - phi_2 - phi_1)`` where ``phi_1`` flags the coarse shells and
    ``phi_2`` the fine shells relative to the located coarse corner.
    """
    d, n = pp.d, pp.size
    delta = shell_width(pp.M, r)
    s = 1.0 / delta
    B, V, h = pp.coarse_corners, pp.offsets, pp.fine_side
    net = affine(np.eye(d))
    x = list(range(d))
    w = [({x[k]: 1.0}, 0.0) for k in range(d)]

    stage = Stage(net.output_dim)
    xs = stage.carry(x, X_BOUND)
    q = [_half_indicator(stage, w, B[j], B[j] + pp.coarse_side, s) for j in range(n)]
    qs = [_half_indicator(stage, w, B[j] + delta, B[j] + pp.coarse_side - delta, s)
          for j in range(n)]
    net, x = stage.then(net), xs

    stage = Stage(net.output_dim)
    xs = stage.carry(x, X_BOUND)
    theta = _sharp_layer(stage, q)
    (phi1,) = _sharp_layer(stage, qs, readout=-np.ones((1, n)), out_bias=np.ones(1))
    net, x = stage.then(net), xs

    stage = Stage(net.output_dim)
    (p1,) = stage.carry([phi1], 1.0)
    u = [({x[k]: 1.0, **{theta[j]: -B[j, k] for j in range(n)}}, 0.0) for k in range(d)]
    q = [_half_indicator(stage, u, V[i] + delta, V[i] + h - delta, s) for i in range(n)]
    net = stage.then(net)

    stage = Stage(net.output_dim)
    (p1,) = stage.carry([p1], 1.0)
    (phi2,) = _sharp_layer(stage, q, readout=-np.ones((1, n)), out_bias=np.ones(1))
    net = stage.then(net)

    stage = Stage(net.output_dim)
    stage.add(relu_square(1, out=[[-1.0]], out_bias=np.ones(1)),
              [{p1: -1.0, phi2: -1.0}], [1.0])
    return stage.then(net).with_bound(1.0)


def windowed_approximator(f, pp, spec):
    """``bump(x) * (1 - detector(x)) * clip(Psi(x))`` for one partition.

    The clip ``(rho(Psi + B g) - rho(-Psi + B g)) / (4B)`` with ``g = 1 -
    detector`` and ``B = R e^(2d)`` equals ``g Psi`` wherever
    ``|Psi| <= B g``, and never exceeds ``|Psi|``.
    """
    psi = interior_approximator(f, pp, spec)
    det = boundary_detector(pp, f.r)
    bump = bump_net(pp)
    B = clip_bound(f.R, f.d)
    depth = max(psi.hidden_layers, det.hidden_layers, bump.hidden_layers)
    net = parallelize(sync_depth(psi, depth), sync_depth(det, depth), sync_depth(bump, depth))
    P, D, W = 0, 1, 2

    stage = Stage(3)
    (clip,) = stage.add(relu_square(2, out=[[1.0 / (4 * B), -1.0 / (4 * B)]]),
                        [{P: 1.0, D: -B}, {P: -1.0, D: -B}], [B, B])
    (g,) = stage.add(identity_block(1, 1.0), [{D: -1.0}], [1.0])
    (w,) = stage.carry([W], 1.0)
    net = stage.then(net)

    stage = Stage(net.output_dim)
    (gated,) = stage.add(product2(), [{g: 1.0}, {clip: 1.0}])
    (w,) = stage.carry([w], 1.0)
    net = stage.then(net)

    stage = Stage(net.output_dim)
    stage.add(product2(), [{w: 1.0}, {gated: 1.0}])
    return stage.then(net).with_bound(B)


@dataclass
class BuildReport:
    network: Network
    spec: ApproximationSpec
    predicted_L: int
    predicted_N: int
    measured: ComplexityReport
    clip_bound: float
    function: str = ""
    d: int = 1
    r: float = 1.0
    R: float = 1.0

    @property
    def within_budget(self):
        return (self.measured.hidden_layers <= self.predicted_L
                and self.measured.max_width <= self.predicted_N)

    def to_dict(self):
        return {
            "function": self.function,
            "d": self.d,
            "r": self.r,
            "R": self.R,
            "domain_half_width": self.spec.domain_half_width,
            "eps": self.spec.eps,
            "M": self.spec.M,
            "c": self.spec.c,
            "clip_bound": self.clip_bound,
            "predicted_L": self.predicted_L,
            "predicted_N": self.predicted_N,
            "measured": self.measured.as_dict(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _warn_if_tight(M, r):
    # the indicator gadgets need each fine side to exceed twice the fringe
    side, fringe = 2.0 / M ** 2, shell_width(M, r)
    if side < 2 * fringe:
        raise ValueError(f"M={M} leaves fine cubes narrower than their fringe shells")
    if side < 8 * fringe:
        warnings.warn(f"M={M}: fringe shells take over a quarter of each fine cube",
                      RuntimeWarning, stacklevel=3)


def full_approximator(f, eps, domain_half_width=0.5, M=None, c=None, validate=True):
    """Network within ``eps`` of ``f`` on ``[-a, a)^d``, ``a = domain_half_width``.

    Inputs are scaled by ``1/(2a)`` so the construction runs on
    ``[-1/2, 1/2]^d`` with the pulled-back function ``y -> f(2a y)``; the
    declared ``R`` of ``f`` must hold on ``[-2a, 2a]^d``. Each of the ``2^d``
    shifted windowed networks gets the budget ``eps / 2^d``.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not domain_half_width > 0:
        raise ValueError("domain half-width must be positive")
    a = float(domain_half_width)
    d = f.d
    g = f if a == 0.5 else f.rescaled(2 * a)
    if c is None:
        c = taylor_constant(g.r, d)
    if validate:
        validate_taylor_constant(g, c)
    eps_term = eps / 2 ** d
    if M is None:
        M = sufficient_M(eps_term, g.r, g.R, d, c)
    term_spec = ApproximationSpec(eps_term, c, int(M), a)
    term_spec.check(g)
    _warn_if_tight(int(M), g.r)

    pieces = [windowed_approximator(g, PartitionPair(M, d, kappa), term_spec)
              for kappa in range(1, 2 ** d + 1)]
    net = parallelize(*pieces)
    net = concatenate(summation(net.output_dim), net)
    net = concatenate(net, affine(np.eye(d) / (2 * a)))
    net = net.with_bound(2 ** d * clip_bound(g.R, d))
    return BuildReport(
        network=net,
        spec=ApproximationSpec(eps, c, int(M), a),
        predicted_L=predicted_depth(d, g.r),
        predicted_N=predicted_width(d, g.r, M),
        measured=complexity(net),
        clip_bound=clip_bound(g.R, d),
        function=f.name,
        d=d,
        r=f.r,
        R=f.R,
    )
