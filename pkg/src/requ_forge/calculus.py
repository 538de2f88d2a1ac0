"""Network algebra: concatenation, parallelization, identity gadgets, depth sync."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .network import Network, affine


def concatenate(outer, inner):
    """Compose ``outer(inner(x))`` into ``L_1 + L_2 - 1`` layers.

    The last (affine) layer of ``inner`` is merged with the first layer of
    ``outer``: ``(A_1^o A_L^i, A_1^o b_L^i + b_1^o)``.
    """
    if outer.input_dim != inner.output_dim:
        raise ValueError(
            f"cannot concatenate: outer reads {outer.input_dim} inputs, "
            f"inner produces {inner.output_dim}"
        )
    inner_layers = inner.layers
    outer_layers = outer.layers
    a_in, b_in = inner_layers[-1]
    a_out, b_out = outer_layers[0]
    merged = (a_out @ a_in, a_out @ b_in + b_out)
    layers = list(inner_layers[:-1]) + [merged] + list(outer_layers[1:])
    return Network(layers, input_dim=inner.input_dim, bound=outer.bound)


def parallelize(*nets):
    """Stack equal-depth networks reading the same input.

    First-layer matrices are stacked vertically, later ones block-diagonally,
    so ``realize(P(a, b), x) == (realize(a, x), realize(b, x))``. With more
    than two arguments this is the left fold of the binary operation,
    assembled in one pass.
    """
    if len(nets) == 1 and not isinstance(nets[0], Network):
        nets = tuple(nets[0])
    if not nets:
        raise ValueError("nothing to parallelize")
    depth = nets[0].num_layers
    dim = nets[0].input_dim
    for net in nets[1:]:
        if net.num_layers != depth:
            raise ValueError(
                f"cannot parallelize networks with {depth} and {net.num_layers} "
                "layers; synchronize depths first"
            )
        if net.input_dim != dim:
            raise ValueError(
                f"cannot parallelize networks with input dims {dim} and {net.input_dim}"
            )
    if len(nets) == 1:
        return nets[0]
    per_layer = [net.layers for net in nets]
    layers = []
    for ell in range(depth):
        mats = [layers_[ell][0] for layers_ in per_layer]
        bias = np.concatenate([layers_[ell][1] for layers_ in per_layer])
        if ell == 0:
            mat = sp.vstack(mats, format="csr")
        else:
            mat = sp.block_diag(mats, format="csr")
        layers.append((mat, bias))
    bound = max(net.bound for net in nets)
    return Network(layers, input_dim=dim, bound=bound)


def identity_net(s=1.0):
    """``t -> (rho(t + s) - rho(-t + s)) / (4 s)``, exact on ``[-s, s]``."""
    if not s > 0:
        raise ValueError(f"identity range must be positive, got {s}")
    s = float(s)
    return Network(
        [
            (np.array([[1.0], [-1.0]]), np.array([s, s])),
            (np.array([[1.0, -1.0]]) / (4.0 * s), np.zeros(1)),
        ],
        bound=s,
    )


def identity_block(d, s=1.0):
    """Componentwise identity on ``[-s, s]^d`` with one hidden layer of 2d neurons."""
    if d < 1:
        raise ValueError("identity block needs at least one coordinate")
    if not s > 0:
        raise ValueError(f"identity range must be positive, got {s}")
    s = float(s)
    eye = sp.identity(d, format="csr")
    first = sp.vstack([eye, -eye], format="csr")
    last = sp.hstack([eye, -eye], format="csr") / (4.0 * s)
    return Network(
        [(first, np.full(2 * d, s)), (last, np.zeros(d))],
        bound=s,
    )


def sync_depth(net, target_hidden, s=None):
    """Append identity blocks until ``net`` has ``target_hidden`` hidden layers.

    ``s`` defaults to the network's recorded output bound; the padding is
    exact only while the outputs stay inside ``[-s, s]``.
    """
    missing = target_hidden - net.hidden_layers
    if missing < 0:
        raise ValueError(
            f"network already has {net.hidden_layers} hidden layers, "
            f"cannot shrink to {target_hidden}"
        )
    if missing == 0:
        return net
    if s is None:
        s = net.bound
    if not (s > 0 and math.isfinite(s)):
        raise ValueError("sync_depth needs a finite output bound")
    block = identity_block(net.output_dim, s)
    out = net
    for _ in range(missing):
        out = concatenate(block, out)
    return out.with_bound(net.bound)


def select(n_in, rows, bias=None):
    """Affine wiring network from a list of ``{input_index: coefficient}`` rows."""
    data, ri, ci = [], [], []
    for r, row in enumerate(rows):
        for c, v in row.items():
            if v != 0.0:
                ri.append(r)
                ci.append(c)
                data.append(float(v))
    mat = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n_in))
    return affine(mat, bias)


def wire(gadget, n_in, rows, bias=None):
    """Feed ``gadget`` from affine combinations of an ``n_in``-vector."""
    return concatenate(gadget, select(n_in, rows, bias))


def summation(n_in, coeffs=None, bias=0.0):
    """One-output affine network ``sum_i c_i x_i + bias``."""
    coeffs = np.ones(n_in) if coeffs is None else np.asarray(coeffs, dtype=np.float64)
    return affine(coeffs.reshape(1, -1), np.array([bias]))


class Stage:
    """One hidden layer's worth of cells fed from the previous output vector.

    Each cell is a one-hidden-layer gadget wired to affine combinations of
    the ``n_in`` previous outputs; ``build`` parallelizes the wired cells, so
    the stage output is the concatenation of cell outputs in insertion order.
    """

    def __init__(self, n_in):
        self.n_in = n_in
        self._cells = []
        self.n_out = 0

    def add(self, gadget, rows, bias=None):
        """Add a cell; returns the indices of its outputs in the stage output."""
        wired = wire(gadget, self.n_in, rows, bias)
        if wired.hidden_layers != 1:
            raise ValueError("stage cells must have exactly one hidden layer")
        self._cells.append(wired)
        start = self.n_out
        self.n_out += wired.output_dim
        return list(range(start, self.n_out))

    def carry(self, indices, s):
        """Pass previous outputs through unchanged (exact on ``[-s, s]``)."""
        if not indices:
            return []
        rows = [{i: 1.0} for i in indices]
        return self.add(identity_block(len(indices), s), rows)

    def build(self):
        if not self._cells:
            raise ValueError("empty stage")
        return parallelize(*self._cells)

    def then(self, net):
        """Append this stage after ``net`` (whose outputs feed the stage)."""
        return concatenate(self.build(), net)
