"""Point clouds on the unit N-torus and periodic distances."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PointCloud",
    "HistogramDensity",
    "generate_uniform",
    "generate_poisson_disk",
    "torus_distance",
    "torus_distance_row",
    "torus_distance_matrix",
    "torus_distance_density",
    "estimate_density_histogram",
    "POISSON_DISK_ATTEMPTS",
]

POISSON_DISK_ATTEMPTS = 30
# additive smoothing, as a fraction of total mass spread evenly over the bins
HISTOGRAM_SMOOTHING = 1e-6


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # shape (n, dim), coordinates in [0, 1)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must have shape (n, dim) with dim >= 1")
        if pts.size and (pts.min() < 0.0 or pts.max() >= 1.0):
            raise ValueError("coordinates must lie in [0, 1)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, idx: np.ndarray) -> PointCloud:
        return PointCloud(self.points[np.asarray(idx)])


def generate_uniform(n: int, dim: int, seed: int) -> PointCloud:
    if n < 1 or dim < 1:
        raise ValueError("need n >= 1 and dim >= 1")
    rng = np.random.default_rng(seed)
    return PointCloud(rng.random((n, dim)))


def _wrap(diff: np.ndarray) -> np.ndarray:
    diff = np.abs(diff)
    return np.minimum(diff, 1.0 - diff)


def torus_distance(x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.sum(_wrap(x - y) ** 2)))


def torus_distance_row(points: np.ndarray, i: int) -> np.ndarray:
    """Distances from point ``i`` to every point (entry ``i`` is 0)."""
    d = _wrap(points - points[i])
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def torus_distance_matrix(points: np.ndarray) -> np.ndarray:
    n, dim = points.shape
    sq = np.zeros((n, n))
    for c in range(dim):
        d = _wrap(points[:, c, None] - points[None, :, c])
        sq += d * d
    return np.sqrt(sq)


def torus_distance_density(r: float, dim: int) -> float:
    """Density of the torus distance between two independent uniform points.

    Exact only for ``r <= 1/2``; beyond that the disc wraps onto itself and a
    histogram estimate has to be used instead.
    """
    if dim not in (1, 2):
        raise ValueError("analytic density available for dim 1 and 2 only")
    if r < 0 or r > 0.5:
        raise ValueError(f"r={r} outside the validity window [0, 1/2]")
    return 2.0 if dim == 1 else 2.0 * math.pi * r


def generate_poisson_disk(radius: float, dim: int, seed: int) -> PointCloud:
    """Bridson dart throwing on the unit torus.

    Every pair of output points is at torus distance >= ``radius``.
    """
    if not 0.0 < radius < 0.5:
        raise ValueError(f"radius must lie in (0, 1/2), got {radius}")
    if dim not in (1, 2, 3):
        raise ValueError("Poisson-disk sampling supports dim 1, 2, 3")
    rng = np.random.default_rng(seed)
    # cell side <= radius/sqrt(dim) so a cell holds at most one point
    ncell = math.ceil(math.sqrt(dim) / radius)
    reach = math.ceil(radius * ncell)
    offsets = np.array(list(itertools.product(range(-reach, reach + 1), repeat=dim)))
    # cell -> index of the point it holds, -1 when empty
    grid = np.full((ncell,) * dim, -1, dtype=np.int64)
    pts = np.empty((64, dim))
    count = 0

    def cell_of(p: np.ndarray) -> tuple[int, ...]:
        return tuple(np.floor(p * ncell).astype(np.int64) % ncell)

    def first_fit(cands: np.ndarray) -> int:
        """Index of the first candidate clear of every placed point, or -1."""
        keys = (np.floor(cands * ncell).astype(np.int64)[:, None, :] + offsets[None]) % ncell
        idx = grid[tuple(np.moveaxis(keys, -1, 0))]
        diff = np.abs(pts[np.maximum(idx, 0)] - cands[:, None, :])
        diff = np.minimum(diff, 1.0 - diff)
        close = (np.einsum("ijk,ijk->ij", diff, diff) < radius * radius) & (idx >= 0)
        ok = np.flatnonzero(~close.any(axis=1))
        return int(ok[0]) if ok.size else -1

    def add(p: np.ndarray) -> None:
        nonlocal pts, count
        if count == len(pts):
            pts = np.concatenate([pts, np.empty_like(pts)])
        grid[cell_of(p)] = count
        pts[count] = p
        count += 1

    add(rng.random(dim))
    active = [0]
    while active:
        a = int(rng.integers(len(active)))
        centre = pts[active[a]]
        # all attempts at once: none is placed before the first that fits
        v = rng.standard_normal((POISSON_DISK_ATTEMPTS, dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        # uniform direction, radial distance uniform in [r, 2r)
        step = radius * (1.0 + rng.random(POISSON_DISK_ATTEMPTS))
        cands = np.mod(centre + v * step[:, None], 1.0)
        cands[cands >= 1.0] = 0.0
        hit = first_fit(cands)
        if hit >= 0:
            add(cands[hit])
            active.append(count - 1)
        else:
            active[a] = active[-1]
            active.pop()
    return PointCloud(pts[:count].copy())


@dataclass(frozen=True)
class HistogramDensity:
    """Piecewise-constant density on ``[edges[0], edges[-1]]``."""

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if edges.ndim != 1 or values.shape != (edges.size - 1,):
            raise ValueError("need len(edges) == len(values) + 1")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)
        mass = values * np.diff(edges)
        cum = np.concatenate([[0.0], np.cumsum(mass)])
        object.__setattr__(self, "_cum", cum / cum[-1])

    @property
    def support(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    @property
    def masses(self) -> np.ndarray:
        return self.values * np.diff(self.edges)

    def _bin(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.edges, x, side="right") - 1
        # right endpoint belongs to the last bin
        return np.where(x == self.edges[-1], self.values.size - 1, idx)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = self._bin(x)
        inside = (x >= self.edges[0]) & (x <= self.edges[-1])
        out = np.where(inside, self.values[np.clip(idx, 0, self.values.size - 1)], 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, self.edges, self._cum)
        return out if out.ndim else float(out)

    def ppf(self, q):
        q = np.asarray(q, dtype=np.float64)
        # drop flat stretches so the inverse is well defined
        keep = np.concatenate([[True], np.diff(self._cum) > 0])
        out = np.interp(q, self._cum[keep], self.edges[keep])
        return out if out.ndim else float(out)


def estimate_density_histogram(samples, bins: int, support: tuple[float, float]) -> HistogramDensity:
    """Normalised histogram density, smoothed to be strictly positive on every bin."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("cannot estimate a density from an empty sample")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo, hi = map(float, support)
    if not lo < hi:
        raise ValueError("support must have positive length")
    if x.min() < lo or x.max() > hi:
        raise ValueError("samples fall outside the support")
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    p = counts / x.size
    p = (p + HISTOGRAM_SMOOTHING / bins) / (1.0 + HISTOGRAM_SMOOTHING)
    return HistogramDensity(edges, p / np.diff(edges))
