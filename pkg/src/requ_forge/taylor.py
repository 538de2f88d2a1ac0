"""Scalar reference evaluators: Hölder functions, Taylor polynomials, grid sizing.

Nothing here builds a network. These are the ground truths the network
constructions are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_hermite

from .gadgets import grlex_exponents


class TaylorConstantError(ValueError):
    """The remainder constant failed its brute-force validation."""

    def __init__(self, measured, c):
        super().__init__(
            f"Taylor remainder constant {c:g} is too small: measured ratio {measured:.6g}; "
            f"rerun with a constant of at least {measured:.6g}"
        )
        self.measured = measured
        self.c = c


def multi_factorial(alpha):
    return math.prod(math.factorial(a) for a in alpha)


@dataclass
class HolderFunction:
    """A function with analytic derivatives up to order ``floor(r)``.

    ``deriv(alpha, X)`` evaluates ``D^alpha f`` at the rows of ``X`` (shape
    ``(n, d)``); ``alpha`` is a tuple of ``d`` nonnegative ints and the zero
    tuple gives ``f`` itself. ``R`` is the declared Hölder radius.
    """

    name: str
    d: int
    r: float
    R: float
    deriv: callable = field(repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if not self.r >= 1:
            raise ValueError(f"smoothness r must be >= 1, got {self.r}")
        if not self.R > 0:
            raise ValueError(f"radius R must be positive, got {self.R}")

    @property
    def order(self):
        """``floor(r)``, the highest derivative order used."""
        return int(math.floor(self.r))

    @property
    def multi_indices(self):
        return grlex_exponents(self.d, self.order)

    def __call__(self, X):
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        out = self.deriv((0,) * self.d, np.atleast_2d(X))
        return out[0] if single else out

    def derivative(self, alpha, X):
        return self.deriv(tuple(alpha), np.atleast_2d(np.asarray(X, dtype=np.float64)))

    def check_radius(self, half_width=1.0, per_axis=None):
        """Assert ``|D^alpha f| <= R`` for ``|alpha| <= floor(r)`` on a grid.

        This is a necessary condition for membership in the Hölder ball;
        returns the largest value seen.
        """
        if per_axis is None:
            per_axis = {1: 2001, 2: 201, 3: 41}.get(self.d, 11)
        axis = np.linspace(-half_width, half_width, per_axis)
        grid = np.stack(np.meshgrid(*([axis] * self.d), indexing="ij"), -1).reshape(-1, self.d)
        worst = max(float(np.max(np.abs(self.deriv(a, grid)))) for a in self.multi_indices)
        if worst > self.R * (1 + 1e-12):
            raise ValueError(
                f"{self.name}: derivative magnitude {worst:.6g} exceeds declared R={self.R:g}"
            )
        return worst

    def rescaled(self, scale):
        """``g(y) = f(scale * y)`` with its radius adjusted for the chain rule."""
        f = self

        def deriv(alpha, Y):
            return scale ** sum(alpha) * f.deriv(alpha, scale * Y)

        R = self.R * max(1.0, abs(scale)) ** self.order
        return HolderFunction(f"{self.name}(x*{scale:g})", self.d, self.r, R, deriv)


@dataclass(frozen=True)
class ApproximationSpec:
    """Target accuracy and grid choice for one construction."""

    eps: float
    c: float
    M: int
    domain_half_width: float = 0.5

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not self.c > 0:
            raise ValueError("the Taylor constant must be positive")

    def check(self, f):
        """Raise unless ``M`` satisfies ``M > (c R d^(r/2) / eps)^(1/(2r))`` for ``f``."""
        need = m_lower_bound(self.eps, f.r, f.R, f.d, self.c)
        if not self.M > need:
            raise ValueError(
                f"M={self.M} too small: need M > {need:.6g} for eps={self.eps:g}"
            )


def taylor_poly(f, x0, x):
    """``sum_{|alpha| <= floor(r)} D^alpha f(x0) (x - x0)^alpha / alpha!``.

    ``x0`` and ``x`` are points or matching batches of points.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    h = x - x0
    total = np.zeros(np.broadcast_shapes(x.shape, x0.shape)[0])
    for alpha in f.multi_indices:
        mono = np.prod(h ** np.array(alpha), axis=1)
        total = total + f.deriv(alpha, x0) * mono / multi_factorial(alpha)
    return total[0] if single else total


def taylor_constant(r, d):
    """Default remainder constant ``2 d^floor(r) / floor(r)!``."""
    if not r >= 1:
        raise ValueError(f"smoothness r must be >= 1, got {r}")
    k = int(math.floor(r))
    return 2.0 * d ** k / math.factorial(k)


def measure_taylor_ratio(f, n=10_000, seed=0, half_width=1.0):
    """Max of ``|f(x) - T f(x0; x)| / (R |x - x0|^r)`` over random pairs."""
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-half_width, half_width, (n, f.d))
    x = rng.uniform(-half_width, half_width, (n, f.d))
    dist = np.linalg.norm(x - x0, axis=1)
    keep = dist > 1e-6
    err = np.abs(f(x[keep]) - taylor_poly(f, x0[keep], x[keep]))
    return float(np.max(err / (f.R * dist[keep] ** f.r), initial=0.0))


def validate_taylor_constant(f, c=None, n=10_000, seed=0):
    """Check ``c`` against measured remainders; returns the measured ratio."""
    if c is None:
        c = taylor_constant(f.r, f.d)
    measured = measure_taylor_ratio(f, n=n, seed=seed)
    if measured > c:
        raise TaylorConstantError(measured, c)
    return measured


def m_lower_bound(eps, r, R, d, c):
    return (c * R * d ** (r / 2) / eps) ** (1.0 / (2 * r))


def choose_M(eps, r, R, d, c):
    """Smallest integer strictly above ``(c R d^(r/2) / eps)^(1/(2r))``, at least 2."""
    bound = m_lower_bound(eps, r, R, d, c)
    return max(2, math.floor(bound) + 1)


def piecewise_error_bound(M, r, R, d, c):
    """``c R (2 sqrt(d) / M^2)^r``, the sup error of the piecewise Taylor surrogate."""
    return c * R * (2 * math.sqrt(d) / M ** 2) ** r


def sufficient_M(eps, r, R, d, c):
    """Smallest ``M >= choose_M`` whose piecewise error bound is at most ``eps``.

    The strict hypothesis on ``M`` alone leaves a factor ``2^r`` between the
    bound and ``eps``; this closes it.
    """
    M = choose_M(eps, r, R, d, c)
    while piecewise_error_bound(M, r, R, d, c) > eps:
        M += 1
    return M


def psi_reference(f, pp, X):
    """Scalar evaluation of the selector recursion behind the network.

    The coarse corner comes from floor arithmetic, the offset is picked by
    testing ``x - corner`` against every offset box, and derivative values
    are read at ``corner + offset``. Equals ``taylor_poly`` anchored at the
    fine cube containing ``x``.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    g = pp.grid_indices(X, 1)
    phi1 = pp.origin + pp.coarse_side * g
    u = X - phi1
    n = X.shape[0]
    corner = np.zeros_like(X)
    psi_alpha = {alpha: np.zeros(n) for alpha in f.multi_indices}
    for v in pp.offsets:
        inside = np.all((u >= v) & (u < v + pp.fine_side), axis=1).astype(np.float64)
        anchor = phi1 + v
        corner += inside[:, None] * anchor
        for alpha in psi_alpha:
            psi_alpha[alpha] += inside * f.deriv(alpha, anchor)
    z = X - corner
    out = np.zeros(n)
    for alpha, val in psi_alpha.items():
        out += val * np.prod(z ** np.array(alpha), axis=1) / multi_factorial(alpha)
    return out[0] if single else out


# -- registry ------------------------------------------------------------------------


def _const(d, r, h):
    def deriv(alpha, X):
        return np.ones(X.shape[0]) if sum(alpha) == 0 else np.zeros(X.shape[0])
    return HolderFunction("const", d, r, 1.0, deriv)


def _linear(d, r, h):
    def deriv(alpha, X):
        k = sum(alpha)
        if k == 0:
            return X.mean(axis=1)
        return np.full(X.shape[0], 1.0 / d) if k == 1 else np.zeros(X.shape[0])
    return HolderFunction("linear", d, r, max(h, 1.0), deriv)


def _quadratic(d, r, h):
    def deriv(alpha, X):
        k = sum(alpha)
        if k == 0:
            return (X ** 2).mean(axis=1)
        if k == 1:
            return 2.0 * X[:, alpha.index(1)] / d
        if k == 2 and max(alpha) == 2:
            return np.full(X.shape[0], 2.0 / d)
        return np.zeros(X.shape[0])
    return HolderFunction("quadratic", d, r, max(h * h, 2.0 * h, 2.0), deriv)


def _sin_sum(d, r, h):
    def deriv(alpha, X):
        return np.sin(X.sum(axis=1) + sum(alpha) * math.pi / 2)
    return HolderFunction("sin_sum", d, r, 1.0, deriv)


# sup over the real line of |d^a/dx^a exp(-x^2)| = |H_a(x)| exp(-x^2)
def _gauss_sup(a):
    x = np.linspace(-8.0, 8.0, 160_001)
    return float(np.max(np.abs(eval_hermite(a, x) * np.exp(-x * x))))


def _exp_neg_sq(d, r, h):
    k = int(math.floor(r))
    sups = [_gauss_sup(a) for a in range(k + 1)]
    R = max(math.prod(sups[a] for a in alpha) for alpha in grlex_exponents(d, k))
    R *= 1 + 1e-6

    def deriv(alpha, X):
        out = np.ones(X.shape[0])
        for a, col in zip(alpha, X.T):
            out *= (-1) ** a * eval_hermite(a, col) * np.exp(-col * col)
        return out
    return HolderFunction("exp_neg_sq", d, r, R, deriv)


REGISTRY = {
    "const": _const,
    "linear": _linear,
    "quadratic": _quadratic,
    "sin_sum": _sin_sum,
    "exp_neg_sq": _exp_neg_sq,
}


def registry_function(name, d, r, R=None, half_width=1.0):
    """Build a registry function; ``R`` overrides the default radius.

    Default radii hold on ``[-half_width, half_width]^d``.
    """
    if name not in REGISTRY:
        raise KeyError(f"unknown function {name!r}; choose from {', '.join(REGISTRY)}")
    f = REGISTRY[name](d, r, half_width)
    if R is not None:
        f = HolderFunction(f.name, f.d, f.r, float(R), f.deriv)
    return f
