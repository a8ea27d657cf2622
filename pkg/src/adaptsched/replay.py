"""Bounded experience store with priority-proportional sampling.

Priorities live in a binary sum tree (plus a max tree for the insertion
default), so pushes, priority updates, and proportional draws are all
O(log capacity), vectorized over a batch.  Sampling is with replacement:
each draw independently picks index i with probability p_i / sum(p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRIORITY_FLOOR = 1e-3  # added to |td error| so every item stays sampleable


@dataclass
class Experience:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool = False


class PriorityStore:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._base = 1
        while self._base < capacity:
            self._base *= 2
        self._depth = self._base.bit_length() - 1
        self._sum = np.zeros(2 * self._base)
        self._max = np.zeros(2 * self._base)
        self._items: list[Experience | None] = [None] * capacity
        self._write = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def total_priority(self) -> float:
        return float(self._sum[1])

    @property
    def max_priority(self) -> float:
        return float(self._max[1])

    def priorities(self) -> np.ndarray:
        """Live priorities by slot (slot order equals age order until the first wrap)."""
        return self._sum[self._base : self._base + self._size].copy()

    def _set_many(self, slots: np.ndarray, priorities: np.ndarray) -> None:
        if slots.size == 0:
            return
        nodes = self._base + slots
        self._sum[nodes] = priorities
        self._max[nodes] = priorities
        # Recompute ancestors from their children; duplicates are idempotent.
        nodes = nodes // 2
        while nodes[0] >= 1:
            left = 2 * nodes
            self._sum[nodes] = self._sum[left] + self._sum[left + 1]
            self._max[nodes] = np.maximum(self._max[left], self._max[left + 1])
            if nodes[0] == 1:
                break
            nodes //= 2

    def push(self, experience: Experience) -> int:
        """Insert at max current priority (1 if empty), evicting the oldest slot."""
        priority = self.max_priority if self._size > 0 else 1.0
        slot = self._write
        self._items[slot] = experience
        self._set_many(np.array([slot]), np.array([priority]))
        self._write = (self._write + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        return slot

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Draw `batch_size` (index, experience) pairs, proportional with replacement."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty store")
        points = rng.random(batch_size) * self._sum[1]
        nodes = np.ones(batch_size, dtype=np.int64)
        for _ in range(self._depth):
            left = 2 * nodes
            left_sum = self._sum[left]
            go_left = points <= left_sum
            points = np.where(go_left, points, points - left_sum)
            nodes = np.where(go_left, left, left + 1)
        slots = np.minimum(nodes - self._base, self._size - 1)
        return [(int(slot), self._items[slot]) for slot in slots]

    def update_priorities(self, indices, td_errors) -> None:
        """Refresh sampled slots: p_i = |td error| + floor."""
        slots = np.asarray(indices, dtype=np.int64)
        if slots.size and (slots.min() < 0 or slots.max() >= self._size):
            raise IndexError(f"slot out of range for store of size {self._size}")
        self._set_many(slots, np.abs(np.asarray(td_errors, dtype=float)) + PRIORITY_FLOOR)

    def sample_probabilities(self) -> np.ndarray:
        """p_i / sum(p) over live slots; used by importance weighting."""
        live = self._sum[self._base : self._base + self._size]
        return live / live.sum()
