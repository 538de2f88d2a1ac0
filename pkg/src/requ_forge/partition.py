"""Half-open cube partitions of [-1, 1)^d: a coarse level, a fine level, and shifts.

The coarse level P1 has ``M**d`` cubes of side ``2/M``; the fine level P2
splits each coarse cube into ``M**d`` cubes of side ``2/M**2``. Fine cube
``(i, j)`` sits at ``B_j + v_i``: coarse corner ``B_j`` plus an offset ``v_i``
that does not depend on ``j``. Multi-indices are flattened row-major.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class OutOfDomainError(ValueError):
    """Raised when a point lies outside the region a partition covers."""


@dataclass(frozen=True)
class Cube:
    """Half-open cube ``[C, C + side)^d`` anchored at its bottom-left corner."""

    bottom_left: tuple
    side: float

    @property
    def d(self):
        return len(self.bottom_left)

    @property
    def center(self):
        return np.asarray(self.bottom_left) + self.side / 2

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        lo = np.asarray(self.bottom_left)
        return bool(np.all(x >= lo) and np.all(x < lo + self.side))

    def shrink(self, delta):
        return shrink(self, delta)


def shrink(cube, delta):
    """Membership predicate for the points at distance ``>= delta`` inside ``cube``.

    Matches the half-open convention: ``C + delta <= x < C + side - delta``.
    """
    if not 0 < 2 * delta < cube.side:
        raise ValueError(f"shrink width {delta} too large for side {cube.side}")
    lo = np.asarray(cube.bottom_left) + delta
    hi = np.asarray(cube.bottom_left) + cube.side - delta

    def inside(x):
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= lo) and np.all(x < hi))

    return inside


def unravel(index, M, d):
    """Row-major multi-index of ``index`` in ``{0..M-1}^d``."""
    return np.array(np.unravel_index(index, (M,) * d)).T


class PartitionPair:
    """The coarse and fine partitions for grid parameter ``M``, optionally shifted.

    ``kappa`` in ``1..2**d`` selects the shift: bit ``k`` of ``kappa - 1``
    moves coordinate ``k`` by ``1/M**2``. ``kappa = 1`` is unshifted.
    """

    def __init__(self, M, d, kappa=1):
        if int(M) != M or M < 2:
            raise ValueError(f"M must be an integer >= 2, got {M}")
        if int(d) != d or d < 1:
            raise ValueError(f"d must be a positive integer, got {d}")
        if not 1 <= kappa <= 2 ** d:
            raise ValueError(f"shift index must lie in 1..{2 ** d}, got {kappa}")
        self.M, self.d, self.kappa = int(M), int(d), int(kappa)
        self.shift = np.array(
            [1.0 / M ** 2 if (kappa - 1) >> k & 1 else 0.0 for k in range(d)]
        )
        self.origin = -1.0 + self.shift
        self.coarse_side = 2.0 / M
        self.fine_side = 2.0 / M ** 2

    def __repr__(self):
        return f"PartitionPair(M={self.M}, d={self.d}, kappa={self.kappa})"

    @property
    def size(self):
        """Number of coarse cubes, also the number of fine cubes per coarse cube."""
        return self.M ** self.d

    @cached_property
    def coarse_corners(self):
        """``(M**d, d)`` array of coarse bottom-left corners ``B_j``."""
        return self.origin + self.coarse_side * unravel(np.arange(self.size), self.M, self.d)

    @cached_property
    def offsets(self):
        """``(M**d, d)`` array of offsets ``v_i`` with entries in ``{0, 2/M^2, ...}``."""
        return self.fine_side * unravel(np.arange(self.size), self.M, self.d)

    def fine_corner(self, i, j):
        return self.coarse_corners[j] + self.offsets[i]

    @property
    def P1(self):
        return [Cube(tuple(c), self.coarse_side) for c in self.coarse_corners]

    @property
    def P2(self):
        """Fine cubes ordered by ``(j, i)``: index ``j * M**d + i``."""
        return [Cube(tuple(self.fine_corner(i, j)), self.fine_side)
                for j in range(self.size) for i in range(self.size)]

    def _left_edge(self, g, level):
        """Left edge of cell ``g`` computed exactly as the stored corners are."""
        if level == 1:
            return self.origin + self.coarse_side * g
        return self.origin + self.coarse_side * (g // self.M) + self.fine_side * (g % self.M)

    def grid_indices(self, X, level):
        """Per-coordinate integer cell indices of points ``X`` at ``level``.

        Starts from ``floor((x - origin) / side)`` and nudges by one where
        rounding disagrees with the stored corners, so a point on a face
        belongs to the cube on its right. Raises for uncovered points.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        side = self.coarse_side if level == 1 else self.fine_side
        n = self.M if level == 1 else self.M ** 2
        if np.any(X < self.origin) or np.any(X >= self.origin + 2.0):
            raise OutOfDomainError(
                f"point outside [{self.origin.min():g}, {self.origin.max() + 2:g})^{self.d}"
            )
        g = np.clip(np.floor((X - self.origin) / side).astype(np.int64), 0, n - 1)
        g = np.where(X < self._left_edge(g, level), g - 1, g)
        nxt = np.where(g + 1 < n, self._left_edge(g + 1, level), np.inf)
        g = np.where(X >= nxt, g + 1, g)
        return g

    def locate_many(self, X):
        """Return ``(j, i)`` flat coarse and offset indices for each row of ``X``."""
        g = self.grid_indices(X, 2)
        dims = (self.M,) * self.d
        j = np.ravel_multi_index(tuple((g // self.M).T), dims)
        i = np.ravel_multi_index(tuple((g % self.M).T), dims)
        return j, i

    def fine_corners_of(self, X):
        j, i = self.locate_many(X)
        return self.coarse_corners[j] + self.offsets[i]

    def locate(self, x, level=2):
        """The unique cube of ``level`` (1 coarse, 2 fine) containing ``x``.

        Returns ``(index, Cube)``; fine indices follow :attr:`P2` ordering.
        """
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        if level == 1:
            g = self.grid_indices(x, 1)[0]
            j = int(np.ravel_multi_index(tuple(g), (self.M,) * self.d))
            return j, Cube(tuple(self.coarse_corners[j]), self.coarse_side)
        if level != 2:
            raise ValueError("level must be 1 or 2")
        j, i = self.locate_many(x)
        j, i = int(j[0]), int(i[0])
        return j * self.size + i, Cube(tuple(self.fine_corner(i, j)), self.fine_side)

    def in_interior(self, X, delta):
        """Mask of points at distance ``>= delta`` from every face of their fine cube."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        rel = X - self.fine_corners_of(X)
        return np.all((rel >= delta) & (rel < self.fine_side - delta), axis=1)


def build_partitions(M, d, kappa=1):
    return PartitionPair(M, d, kappa)


def shell_width(M, r):
    """Width ``1 / M**(2 r + 2)`` of the fringe shells next to fine-cube faces."""
    return float(M) ** -(2 * r + 2)
