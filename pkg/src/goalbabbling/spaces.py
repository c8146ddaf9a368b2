"""Axis-aligned boxes used for task spaces and region bounds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box [low, high] in R^d."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.low, dtype=float)
        high = np.asarray(self.high, dtype=float)
        if low.shape != high.shape or low.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if np.any(high < low):
            raise ValueError("box high must be >= low componentwise")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    @property
    def extent(self) -> np.ndarray:
        return self.high - self.low

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    @property
    def center(self) -> np.ndarray:
        return (self.low + self.high) / 2.0

    def contains(self, point: np.ndarray) -> bool:
        return bool(np.all(point >= self.low) and np.all(point <= self.high))

    def clip(self, point: np.ndarray) -> np.ndarray:
        return np.clip(point, self.low, self.high)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.low + rng.random(self.dim) * self.extent

    def farthest_distance(self, point: np.ndarray) -> float:
        """Distance from `point` to the farthest corner of the box."""
        return float(np.linalg.norm(np.maximum(np.abs(point - self.low), np.abs(point - self.high))))
