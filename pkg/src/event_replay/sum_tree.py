"""Array-backed binary sum tree for proportional prefix sampling."""

from __future__ import annotations

import math

import numpy as np


class SumTree:
    """Fixed-capacity sum tree over non-negative leaf priorities.

    The requested capacity is rounded up to the next power of two; extra
    leaves keep priority zero and are never sampled.  Every update rewrites
    the leaf and recomputes the sums on the path to the root, so each
    internal node is exactly the float64 sum of its two children and the
    root tracks the pairwise sum of all leaves.  Updates and prefix lookups
    are O(log capacity).
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        size = 1
        while size < capacity:
            size *= 2
        self.capacity = size
        # nodes[1] is the root; leaves occupy nodes[capacity:2*capacity]
        self.nodes = np.zeros(2 * size, dtype=np.float64)

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def get(self, index: int) -> float:
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf index {index} out of range [0, {self.capacity})")
        return float(self.nodes[self.capacity + index])

    def leaves(self) -> np.ndarray:
        return self.nodes[self.capacity:].copy()

    def update(self, index: int, priority: float) -> None:
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf index {index} out of range [0, {self.capacity})")
        if not math.isfinite(priority) or priority < 0.0:
            raise ValueError(f"priority must be finite and >= 0, got {priority}")
        i = self.capacity + index
        self.nodes[i] = priority
        i //= 2
        while i >= 1:
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1]
            i //= 2

    def prefix_index(self, u: float) -> int:
        """Return the leaf whose cumulative-priority interval contains ``u``.

        Requires ``0 <= u < total``.  Because internal nodes are exact sums
        of their children, the descent never lands on a zero-priority leaf.
        """
        total = self.total
        if not 0.0 <= u < total:
            raise ValueError(f"u must lie in [0, {total}), got {u}")
        i = 1
        while i < self.capacity:
            left = self.nodes[2 * i]
            if u < left:
                i = 2 * i
            else:
                u -= left
                i = 2 * i + 1
        return i - self.capacity
