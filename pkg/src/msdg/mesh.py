"""One-dimensional partitions of ``[a, b]``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class MeshPartition:
    """Ordered breakpoints ``a = x_{1/2} < ... < x_{N+1/2} = b``.

    Elements are numbered ``j = 1..N`` in the public helpers; the arrays
    below are ordinary zero-based numpy arrays.
    """

    breakpoints: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.breakpoints, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a partition needs at least two breakpoints")
        if not np.all(np.isfinite(pts)):
            raise ValueError("breakpoints must be finite")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "breakpoints", pts)

    @property
    def a(self) -> float:
        return float(self.breakpoints[0])

    @property
    def b(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def N(self) -> int:
        return self.breakpoints.size - 1

    @property
    def left(self) -> np.ndarray:
        return self.breakpoints[:-1]

    @property
    def right(self) -> np.ndarray:
        return self.breakpoints[1:]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    def locate(self, x) -> np.ndarray:
        """Zero-based index of the element containing each ``x``.

        Interior breakpoints belong to the element on their left.
        """
        x = np.asarray(x, dtype=float)
        if np.any(x < self.a) or np.any(x > self.b):
            raise ValueError(f"point outside the domain [{self.a}, {self.b}]")
        idx = np.searchsorted(self.breakpoints, x, side="left") - 1
        return np.clip(idx, 0, self.N - 1)

    def __eq__(self, other):
        if not isinstance(other, MeshPartition):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints)

    def __hash__(self):
        return hash(self.breakpoints.tobytes())

    def __repr__(self):
        return f"MeshPartition(a={self.a!r}, b={self.b!r}, N={self.N})"


def uniform_partition(a: float, b: float, N: int) -> MeshPartition:
    """Uniform mesh of ``N`` elements on ``[a, b]``."""
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if int(N) != N or N < 1:
        raise ValueError(f"element count must be a positive integer, got {N}")
    N = int(N)
    pts = a + (b - a) * (np.arange(N + 1) / N)
    pts[-1] = b
    return MeshPartition(pts)


def mesh_h(m: MeshPartition) -> float:
    """Largest element width."""
    return float(np.max(m.widths))


def element_midpoint(m: MeshPartition, j: int) -> float:
    """Midpoint of element ``j`` (1-based, ``1 <= j <= N``)."""
    if not 1 <= j <= m.N:
        raise IndexError(f"element index {j} outside 1..{m.N}")
    return 0.5 * (float(m.breakpoints[j - 1]) + float(m.breakpoints[j]))
