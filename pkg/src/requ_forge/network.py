"""ReQU feedforward networks: representation, evaluation, accounting, JSON I/O."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

ACTIVATION = "requ"

# Layers with more entries than this are written as coordinate lists.
DENSE_SERIALIZATION_LIMIT = 250_000

# Points per forward-pass chunk; keeps activation buffers small for wide nets.
EVAL_CHUNK = 2048


def requ(x):
    """Rectified quadratic unit, ``max(0, x)**2``; works on scalars and arrays."""
    if np.isscalar(x):
        return max(0.0, float(x)) ** 2
    y = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    return y * y


class NetworkFormatError(ValueError):
    """Raised when a serialized network cannot be parsed or is malformed."""


@dataclass(frozen=True)
class ComplexityReport:
    hidden_layers: int
    max_width: int
    nonzero_weights: int

    def as_dict(self):
        return {
            "hidden_layers": self.hidden_layers,
            "max_width": self.max_width,
            "nonzero_weights": self.nonzero_weights,
        }


class Network:
    """A ReQU network ``((A_1, b_1), ..., (A_L, b_L))``.

    ``rho_2`` is applied after every layer except the last, which is affine.
    Weight matrices are stored as CSR matrices; explicit zeros are dropped at
    construction so ``nnz`` is the structural nonzero count.

    ``bound`` is a conservative sup-norm bound on the outputs over the domain
    the network was built for (``inf`` when unknown). It is construction
    metadata and is not serialized.
    """

    __slots__ = ("_weights", "_biases", "input_dim", "bound", "_nnz")

    def __init__(self, layers, input_dim=None, bound=math.inf):
        if len(layers) == 0:
            raise ValueError("a network needs at least one layer")
        weights, biases = [], []
        for ell, (a, b) in enumerate(layers, start=1):
            a = sp.csr_matrix(a, dtype=np.float64)
            a.eliminate_zeros()
            a.sort_indices()
            b = np.array(b, dtype=np.float64).reshape(-1)
            if b.shape[0] != a.shape[0]:
                raise ValueError(
                    f"layer {ell}: bias length {b.shape[0]} != rows {a.shape[0]}"
                )
            if weights and a.shape[1] != weights[-1].shape[0]:
                raise ValueError(
                    f"layer {ell}: {a.shape[1]} columns but previous layer "
                    f"has {weights[-1].shape[0]} outputs"
                )
            weights.append(a)
            biases.append(b)
        if input_dim is None:
            input_dim = weights[0].shape[1]
        if weights[0].shape[1] != input_dim:
            raise ValueError(
                f"layer 1 has {weights[0].shape[1]} columns, input_dim is {input_dim}"
            )
        if input_dim < 1:
            raise ValueError("input_dim must be positive")
        for b in biases:
            b.setflags(write=False)
        self._weights = tuple(weights)
        self._biases = tuple(biases)
        self.input_dim = int(input_dim)
        self.bound = float(bound)
        self._nnz = sum(a.nnz + int(np.count_nonzero(b)) for a, b in zip(weights, biases))

    @property
    def layers(self):
        return tuple(zip(self._weights, self._biases))

    @property
    def output_dim(self):
        return self._weights[-1].shape[0]

    @property
    def num_layers(self):
        return len(self._weights)

    @property
    def hidden_layers(self):
        return len(self._weights) - 1

    @property
    def widths(self):
        """``[N_0, N_1, ..., N_L]``."""
        return [self.input_dim] + [a.shape[0] for a in self._weights]

    def with_bound(self, bound):
        net = Network.__new__(Network)
        net._weights = self._weights
        net._biases = self._biases
        net.input_dim = self.input_dim
        net.bound = float(bound)
        net._nnz = self._nnz
        return net

    def __call__(self, x):
        return realize(self, x)

    def __repr__(self):
        return (
            f"Network(widths={self.widths}, nnz={self._nnz}, bound={self.bound:g})"
        )


def realize(net, x):
    """Forward pass.

    ``x`` is a vector of length ``input_dim`` or a batch of shape
    ``(n, input_dim)``; the result has matching leading shape.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ValueError(
            f"expected input of length {net.input_dim}, got shape {x.shape}"
        )
    out = np.empty((batch.shape[0], net.output_dim))
    for start in range(0, batch.shape[0], EVAL_CHUNK):
        h = batch[start:start + EVAL_CHUNK].T
        last = net.num_layers - 1
        for ell, (a, b) in enumerate(zip(net._weights, net._biases)):
            h = a @ h
            h += b[:, None]
            if ell < last:
                np.maximum(h, 0.0, out=h)
                h *= h
        out[start:start + EVAL_CHUNK] = h.T
    return out[0] if single else out


def complexity(net):
    """Hidden layers ``L``, max width ``N`` and nonzero weight count ``M``."""
    return ComplexityReport(
        hidden_layers=net.hidden_layers,
        max_width=max(net.widths[:-1]),
        nonzero_weights=net._nnz,
    )


def affine(matrix, bias=None):
    """Single-layer (affine-only) network ``x -> A x + b``."""
    matrix = sp.csr_matrix(matrix, dtype=np.float64)
    if bias is None:
        bias = np.zeros(matrix.shape[0])
    return Network([(matrix, bias)])


# -- serialization -----------------------------------------------------------


def to_dict(net):
    layers = []
    for a, b in net.layers:
        rows, cols = a.shape
        if rows * cols <= DENSE_SERIALIZATION_LIMIT:
            entry = {"weights": a.toarray().tolist()}
        else:
            coo = a.tocoo()
            order = np.lexsort((coo.col, coo.row))
            entry = {
                "shape": [rows, cols],
                "rows": coo.row[order].tolist(),
                "cols": coo.col[order].tolist(),
                "values": coo.data[order].tolist(),
            }
        entry["bias"] = b.tolist()
        layers.append(entry)
    return {"input_dim": net.input_dim, "activation": ACTIVATION, "layers": layers}


def save(net, fp=None):
    """Serialize to JSON text; also write it to ``fp`` (path or file) if given."""
    text = json.dumps(to_dict(net), separators=(",", ":"))
    if fp is not None:
        if hasattr(fp, "write"):
            fp.write(text)
        else:
            with open(fp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    return text


def _require(cond, field, msg):
    if not cond:
        raise NetworkFormatError(f"{field}: {msg}")


def from_dict(doc):
    _require(isinstance(doc, dict), "document", "expected a JSON object")
    _require("input_dim" in doc, "input_dim", "missing")
    d = doc["input_dim"]
    _require(isinstance(d, int) and not isinstance(d, bool) and d >= 1,
             "input_dim", f"expected a positive integer, got {d!r}")
    act = doc.get("activation", ACTIVATION)
    _require(act == ACTIVATION, "activation", f"unsupported activation {act!r}")
    _require(isinstance(doc.get("layers"), list) and doc["layers"],
             "layers", "expected a non-empty list")
    layers = []
    for ell, entry in enumerate(doc["layers"], start=1):
        where = f"layers[{ell - 1}]"
        _require(isinstance(entry, dict), where, "expected an object")
        _require("bias" in entry, f"{where}.bias", "missing")
        try:
            bias = np.array(entry["bias"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"{where}.bias: {exc}") from None
        _require(bias.ndim == 1, f"{where}.bias", "expected a list of reals")
        if "weights" in entry:
            try:
                w = np.array(entry["weights"], dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise NetworkFormatError(f"{where}.weights: {exc}") from None
            _require(w.ndim == 2, f"{where}.weights",
                     "expected a rectangular list of rows")
            mat = sp.csr_matrix(w)
        else:
            for key in ("shape", "rows", "cols", "values"):
                _require(key in entry, f"{where}.{key}", "missing")
            shape = tuple(entry["shape"])
            _require(len(shape) == 2, f"{where}.shape", "expected [rows, cols]")
            try:
                mat = sp.csr_matrix(
                    (np.array(entry["values"], dtype=np.float64),
                     (np.array(entry["rows"], dtype=np.int64),
                      np.array(entry["cols"], dtype=np.int64))),
                    shape=shape,
                )
            except (TypeError, ValueError) as exc:
                raise NetworkFormatError(f"{where}: {exc}") from None
        _require(mat.shape[0] == bias.shape[0], f"{where}.bias",
                 f"length {bias.shape[0]} does not match {mat.shape[0]} rows")
        expected_cols = d if ell == 1 else layers[-1][0].shape[0]
        _require(mat.shape[1] == expected_cols, f"{where}.weights",
                 f"{mat.shape[1]} columns, expected {expected_cols}")
        layers.append((mat, bias))
    return Network(layers, input_dim=d)


def load(source):
    """Parse a network from JSON text, bytes, a path, or an open file."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, os.PathLike) or (
            isinstance(source, str) and source.strip() and not source.lstrip().startswith("{")):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if not text or not text.strip():
        raise NetworkFormatError("document: empty stream")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"document: invalid JSON ({exc.msg})") from None
    return from_dict(doc)
