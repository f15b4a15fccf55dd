"""Degree sequences: validation, graphicality and the per-pair degree factor."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "DegreeSequence",
    "is_graphical",
    "total_edges",
    "pair_degree_factor",
    "pair_degree_factors",
]


def is_graphical(degrees: Sequence[int]) -> bool:
    """Erdős–Gallai test: can ``degrees`` be realised by a simple graph?"""
    d = sorted((int(x) for x in degrees), reverse=True)
    if any(x < 0 for x in d):
        return False
    if sum(d) % 2:
        return False
    n = len(d)
    # suffix[k] = sum(d[k:]), with d non-increasing
    suffix = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + d[k]
    lhs = 0
    # pointer p: first index >= k whose value is < k (entries before p are >= k)
    p = n
    for k in range(1, n + 1):
        lhs += d[k - 1]
        while p > k and d[p - 1] < k:
            p -= 1
        p = max(p, k)
        # sum_{i>k} min(d_i, k) = k * (#entries in [k, p)) + sum(d[p:])
        rhs = k * (k - 1) + k * (p - k) + suffix[p]
        if lhs > rhs:
            return False
    return True


def total_edges(degrees: Sequence[int]) -> int:
    s = sum(int(x) for x in degrees)
    if s % 2:
        raise ValueError(f"degree sum {s} is odd")
    return s // 2


def pair_degree_factor(d_i: int, d_j: int, m: int) -> float:
    """The static correction ``1 - d_i d_j / (4m)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if d_i * d_j > 4 * m:
        raise ValueError(f"d_i*d_j={d_i * d_j} exceeds 4m={4 * m}")
    return 1.0 - (d_i * d_j) / (4.0 * m)


def pair_degree_factors(degrees: np.ndarray, i: int, m: int) -> np.ndarray:
    """Vectorised ``pair_degree_factor`` of vertex ``i`` against every vertex."""
    return 1.0 - (degrees[i] * degrees.astype(np.float64)) / (4.0 * m)


@dataclass(frozen=True)
class DegreeSequence:
    degrees: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "degrees", tuple(int(x) for x in self.degrees))
        if any(x < 0 for x in self.degrees):
            raise ValueError("degrees must be nonnegative")
        if sum(self.degrees) % 2:
            raise ValueError("degree sum is odd")
        n = len(self.degrees)
        if any(x > n - 1 for x in self.degrees):
            raise ValueError("a degree exceeds n - 1")

    @classmethod
    def regular(cls, n: int, k: int) -> DegreeSequence:
        return cls((k,) * n)

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def m(self) -> int:
        return sum(self.degrees) // 2

    @property
    def d_max(self) -> int:
        return max(self.degrees, default=0)

    @property
    def d_bar(self) -> Fraction:
        return Fraction(sum(self.degrees), self.n) if self.n else Fraction(0)

    def is_graphical(self) -> bool:
        return is_graphical(self.degrees)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.degrees, dtype=np.int64)

    def __len__(self) -> int:
        return self.n
