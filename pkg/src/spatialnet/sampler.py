"""Sequential importance-weighted sampling of simple graphs with given degrees.

At step ``k`` the unordered pair ``ij`` is added with probability proportional
to

    (f/g)(r_ij) * d_i^k * d_j^k * (1 - d_i d_j / 4m) * [ij not yet placed]

where ``d_i^k`` is the remaining degree of ``i``.

Draws are exact. The sampler keeps the row sums ``S_i = sum_j W_ij`` of the
current pair-weight matrix ``W``; a vertex ``i`` is drawn with probability
``S_i / sum(S)`` and a partner ``j`` with probability ``W_ij / S_i``. Since
``W`` is symmetric, the unordered pair comes out with probability
``2 W_ij / sum(S) = W_ij / Z``. Placing an edge changes only two remaining
degrees, so the row sums are updated in O(n).
"""
from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import DegreeSequence
from .distributions import (
    ReferenceDensity,
    TargetSpec,
    auto_reference,
    importance_log_ratios,
    importance_ratios,
    torus_reference,
)
from .geometry import PointCloud, torus_distance_matrix, torus_distance_row

__all__ = [
    "WeightTable",
    "SamplerState",
    "StepTrace",
    "GraphSample",
    "initialize",
    "run",
    "run_batch",
    "verify_degrees",
    "target_steps",
    "MATERIALIZE_MAX",
    "RESYNC_INTERVAL",
    "default_reference",
]

log = logging.getLogger(__name__)

# geometry-backed tables up to this many points are materialised as a dense matrix
MATERIALIZE_MAX = 3000
# full recomputation of the row sums every this many steps
RESYNC_INTERVAL = 1024

COMPLETE = "complete"
EARLY_STOP = "early_stop"
FAILURE = "failure"


class WeightTable:
    """Symmetric admissible lengths ``r_ij``, either explicit or derived from points."""

    def __init__(self, n: int, *, matrix: np.ndarray | None = None, cloud: PointCloud | None = None):
        if (matrix is None) == (cloud is None):
            raise ValueError("give exactly one of matrix or cloud")
        self.n = int(n)
        self._matrix = matrix
        self.cloud = cloud

    @classmethod
    def from_matrix(cls, matrix) -> WeightTable:
        mat = np.array(matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("weight matrix must be square")
        off = ~np.eye(mat.shape[0], dtype=bool)
        if not np.all(np.isfinite(mat[off])) or np.any(mat[off] < 0):
            raise ValueError("weights must be finite and nonnegative")
        if not np.array_equal(mat, mat.T):
            raise ValueError("weight matrix must be symmetric")
        np.fill_diagonal(mat, 0.0)
        mat.setflags(write=False)
        return cls(mat.shape[0], matrix=mat)

    @classmethod
    def from_points(cls, cloud: PointCloud) -> WeightTable:
        return cls(cloud.n, cloud=cloud)

    @property
    def materializable(self) -> bool:
        return self._matrix is not None or self.n <= MATERIALIZE_MAX

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = torus_distance_matrix(self.cloud.points)
            self._matrix.setflags(write=False)
        return self._matrix

    def row(self, i: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix[i]
        return torus_distance_row(self.cloud.points, i)

    def r(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("r(i, i) is undefined")
        return float(self.row(i)[j])

    def pair_lengths(self) -> np.ndarray:
        """All ``r_ij`` with ``i < j`` (row-major upper triangle)."""
        if self.materializable:
            return self.matrix()[np.triu_indices(self.n, 1)]
        return np.concatenate([self.row(i)[i + 1:] for i in range(self.n - 1)])


@dataclass
class StepTrace:
    k: list[int] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)
    r: list[float] = field(default_factory=list)
    Z: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.k)

    def rows(self):
        return zip(self.k, self.alpha, self.r, self.Z)


@dataclass
class GraphSample:
    edges: list[tuple[int, int, float]]  # (i, j, r_ij), 0-based, i < j, in placement order
    status: str
    gamma: float
    seed: object
    n: int
    m: int
    trace: StepTrace = field(default_factory=StepTrace)
    max_z_drift: float = 0.0

    @property
    def k_final(self) -> int:
        return len(self.edges)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=np.float64)

    def realized_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def target_steps(gamma: float, m: int) -> int:
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    # tolerate representation error such as 0.7 * 10 = 7.000000000000001
    return min(m, math.floor(gamma * m + 1e-9))


class SamplerState:
    """Mutable state of one run; confined to a single thread."""

    def __init__(self, degrees: DegreeSequence, weights: WeightTable, target: TargetSpec,
                 reference: ReferenceDensity, degree_correction: bool = True):
        if weights.n != degrees.n:
            raise ValueError(f"weight table has n={weights.n}, degree sequence n={degrees.n}")
        if not degrees.is_graphical():
            raise ValueError("degree sequence is not graphical")
        self.weights = weights
        self.target = target
        self.reference = reference
        self.n = degrees.n
        self.m = degrees.m
        d_all = degrees.as_array()
        zero = np.flatnonzero(d_all == 0)
        if zero.size:
            log.warning("dropping %d vertices of degree 0", zero.size)
        # the sampler works on the compact index space of vertices with d_i > 0
        self.vertices = np.flatnonzero(d_all > 0)
        self.d = d_all[self.vertices].astype(np.float64)
        if self.d.size >= 2:
            top = np.sort(self.d)[-2:]
            if degree_correction and top[0] * top[1] > 4 * self.m:
                raise ValueError("negative degree factor: d_i*d_j > 4m for some pair")
        self.degree_correction = degree_correction
        self.dhat = self.d.copy()
        self.nbrs: list[list[int]] = [[] for _ in range(self.d.size)]
        self.edges: list[tuple[int, int, float]] = []
        # placed pairs in compact indices, for the vectorised resync
        self._pa: list[int] = []
        self._pb: list[int] = []
        self.k = 1
        self.max_z_drift = 0.0
        self._steps_since_sync = 0
        self._base: np.ndarray | None = None
        if weights.materializable:
            self._base = self._build_base_matrix()
        self.S = self.exact_row_sums()

    # -- static base weights b_ij = (f/g)(r_ij) w_ij ---------------------------------------

    def _factor_row(self, a: int) -> np.ndarray:
        if not self.degree_correction:
            return np.ones(self.d.size)
        return 1.0 - self.d[a] * self.d / (4.0 * self.m)

    def _build_base_matrix(self) -> np.ndarray:
        v = self.vertices
        r = self.weights.matrix()[np.ix_(v, v)]
        iu = np.triu_indices(v.size, 1)
        base = np.zeros((v.size, v.size))
        base[iu] = importance_ratios(self.target, self.reference, r[iu])
        if self.degree_correction:
            base[iu] *= 1.0 - self.d[iu[0]] * self.d[iu[1]] / (4.0 * self.m)
        base += base.T
        return base

    def base_row(self, a: int) -> np.ndarray:
        if self._base is not None:
            return self._base[a]
        r = self.weights.row(self.vertices[a])[self.vertices]
        others = np.arange(self.d.size) != a
        ratio = np.zeros(self.d.size)
        ratio[others] = importance_ratios(self.target, self.reference, r[others])
        return ratio * self._factor_row(a)

    def _length(self, a: int, b: int) -> float:
        return self.weights.r(int(self.vertices[a]), int(self.vertices[b]))

    # -- weights of the current step ---------------------------------------------------

    def _unit_row(self, a: int) -> np.ndarray:
        """Row ``a`` of the current weight matrix divided by ``dhat[a]``."""
        row = self.base_row(a) * self.dhat
        row[a] = 0.0
        if self.nbrs[a]:
            row[self.nbrs[a]] = 0.0
        return row

    def exact_row_sums(self) -> np.ndarray:
        if self._base is not None:
            s = self._base @ self.dhat
            if self._pa:
                pa, pb = np.array(self._pa), np.array(self._pb)
                w = self._base[pa, pb]
                np.subtract.at(s, pa, w * self.dhat[pb])
                np.subtract.at(s, pb, w * self.dhat[pa])
            s = np.maximum(s, 0.0)
        else:
            s = np.array([self._unit_row(a).sum() for a in range(self.d.size)])
        return s * self.dhat

    def resync(self) -> float:
        """Recompute the row sums from scratch; returns the exact ``Z``."""
        exact = self.exact_row_sums()
        z_exact = exact.sum() / 2.0
        z_inc = self.S.sum() / 2.0
        if z_exact > 0:
            self.max_z_drift = max(self.max_z_drift, abs(z_inc - z_exact) / z_exact)
        self.S = exact
        self._steps_since_sync = 0
        return z_exact

    @property
    def Z(self) -> float:
        return float(self.S.sum() / 2.0)

    @property
    def remaining(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.int64)
        out[self.vertices] = self.dhat.astype(np.int64)
        return out

    def pair_probabilities(self) -> dict[tuple[int, int], float]:
        """Exact ``p_ij`` of the next step over pairs with positive weight (original ids)."""
        rows = {a: self._unit_row(a) * self.dhat[a] for a in range(self.d.size)}
        z = sum(r.sum() for r in rows.values()) / 2.0
        out = {}
        for a, row in rows.items():
            for b in np.flatnonzero(row[a + 1:]) + a + 1:
                out[(int(self.vertices[a]), int(self.vertices[b]))] = float(row[b] / z)
        return out

    # -- sampling -------------------------------------------------------------------------

    def step(self, rng: np.random.Generator) -> tuple[int, int, float] | None:
        """Draw and place one edge; ``None`` when every unplaced pair has zero weight."""
        resynced = False
        while True:
            cs = self.S.cumsum()
            total = cs[-1] if cs.size else 0.0
            if not total > 0:
                if resynced or self.resync() <= 0:
                    return self._log_domain_step(rng)
                resynced = True
                continue
            a = int(cs.searchsorted(rng.random() * total, side="right"))
            row = self._unit_row(a)
            rcs = row.cumsum()
            if not rcs[-1] > 0:
                # stale row sum from rounding drift
                self.S[a] = 0.0
                continue
            b = int(rcs.searchsorted(rng.random() * rcs[-1], side="right"))
            break
        z = total / 2.0
        self._place(a, b)
        i, j = sorted((int(self.vertices[a]), int(self.vertices[b])))
        edge = (i, j, self._length(a, b))
        self.edges.append(edge)
        self._last_z = float(z)
        self.k += 1
        self._steps_since_sync += 1
        if self._steps_since_sync >= RESYNC_INTERVAL:
            self.resync()
        return edge

    def _log_domain_step(self, rng: np.random.Generator) -> tuple[int, int, float] | None:
        """Exact draw when every remaining weight underflows to 0.0 in linear scale.

        Reached only once ``Z`` is exactly zero in floating point, so pairs with a
        representable weight are already gone and nothing is lost by ignoring them.
        """
        act = np.flatnonzero(self.dhat > 0)
        if act.size < 2:
            return None
        r = np.array([self.weights.row(int(self.vertices[a]))[self.vertices[act]] for a in act])
        ia, ib = np.triu_indices(act.size, 1)
        lw = importance_log_ratios(self.target, self.reference, r[ia, ib])
        a_idx, b_idx = act[ia], act[ib]
        with np.errstate(divide="ignore"):
            lw = lw + np.log(self.dhat[a_idx] * self.dhat[b_idx])
            if self.degree_correction:
                lw = lw + np.log(1.0 - self.d[a_idx] * self.d[b_idx] / (4.0 * self.m))
        if not np.isfinite(lw).any():
            return None
        for t in np.flatnonzero(np.isfinite(lw)):
            if b_idx[t] in self.nbrs[a_idx[t]]:
                lw[t] = -np.inf
        if not np.isfinite(lw).any():
            return None
        top = lw.max()
        cs = np.cumsum(np.exp(lw - top))
        t = int(np.searchsorted(cs, rng.random() * cs[-1], side="right"))
        a, b = int(a_idx[t]), int(b_idx[t])
        self._place(a, b)
        i, j = sorted((int(self.vertices[a]), int(self.vertices[b])))
        edge = (i, j, self._length(a, b))
        self.edges.append(edge)
        # true Z is below the smallest representable double
        self._last_z = float(np.exp(top + np.log(cs[-1])))
        self.k += 1
        return edge

    def _place(self, a: int, b: int) -> None:
        self.dhat[a] -= 1.0
        self.dhat[b] -= 1.0
        self.nbrs[a].append(b)
        self.nbrs[b].append(a)
        self._pa.append(a)
        self._pb.append(b)
        ua = self._unit_row(a)
        ub = self._unit_row(b)
        # ua[b] and ub[a] are already zero: the pair is now placed
        self.S -= ua
        self.S -= ub
        self.S[a] = self.dhat[a] * ua.sum()
        self.S[b] = self.dhat[b] * ub.sum()
        np.maximum(self.S, 0.0, out=self.S)

    def copy(self) -> SamplerState:
        new = object.__new__(SamplerState)
        new.__dict__.update(self.__dict__)
        new.dhat = self.dhat.copy()
        new.S = self.S.copy()
        new.nbrs = [list(x) for x in self.nbrs]
        new.edges = list(self.edges)
        new._pa = list(self._pa)
        new._pb = list(self._pb)
        return new


WeightsLike = Union[WeightTable, PointCloud, np.ndarray]


def _as_table(weights: WeightsLike) -> WeightTable:
    if isinstance(weights, WeightTable):
        return weights
    if isinstance(weights, PointCloud):
        return WeightTable.from_points(weights)
    return WeightTable.from_matrix(weights)


def _as_degrees(degrees) -> DegreeSequence:
    return degrees if isinstance(degrees, DegreeSequence) else DegreeSequence(tuple(degrees))


def initialize(degrees: DegreeSequence | Sequence[int], weights: WeightsLike, target: TargetSpec,
               reference: ReferenceDensity, degree_correction: bool = True) -> SamplerState:
    return SamplerState(_as_degrees(degrees), _as_table(weights), target, reference,
                        degree_correction=degree_correction)


def _drive(state: SamplerState, gamma: float, rng: np.random.Generator, seed) -> GraphSample:
    steps = target_steps(gamma, state.m)
    trace = StepTrace()
    m = state.m
    while len(state.edges) < steps:
        edge = state.step(rng)
        if edge is None:
            break
        k = len(state.edges)
        trace.k.append(k)
        trace.alpha.append(k / m)
        trace.r.append(edge[2])
        trace.Z.append(state._last_z)
    state.resync()
    placed = len(state.edges)
    if placed == m:
        status = COMPLETE
    elif placed == steps:
        status = EARLY_STOP
    else:
        status = FAILURE
    return GraphSample(edges=state.edges, status=status, gamma=gamma, seed=seed, n=state.n, m=m,
                       trace=trace, max_z_drift=state.max_z_drift)


def run(degrees: DegreeSequence | Sequence[int], weights: WeightsLike, target: TargetSpec,
        reference: ReferenceDensity, gamma: float = 1.0, seed=0,
        degree_correction: bool = True) -> GraphSample:
    """Run the sequential sampler until ``floor(gamma*m)`` edges or exhaustion."""
    target_steps(gamma, 1)
    state = initialize(degrees, weights, target, reference, degree_correction)
    return _drive(state, gamma, np.random.default_rng(seed), seed)


def run_batch(degrees: DegreeSequence | Sequence[int], weights: WeightsLike, target: TargetSpec,
              reference: ReferenceDensity, runs: int, seed=0, gamma: float = 1.0,
              degree_correction: bool = True) -> Iterator[GraphSample]:
    """``runs`` independent runs on one instance, sharing the setup.

    All runs consume one random stream seeded with ``seed``, one after the
    other, so the first sample equals ``run(..., seed=seed)``. Sample ``t``
    carries ``seed=(seed, t)``.
    """
    target_steps(gamma, 1)
    if runs < 0:
        raise ValueError("runs must be >= 0")
    base = initialize(degrees, weights, target, reference, degree_correction)
    rng = np.random.default_rng(seed)
    for t in range(runs):
        yield _drive(base.copy(), gamma, rng, (seed, t))


def verify_degrees(sample: GraphSample, degrees: DegreeSequence | Sequence[int]) -> bool:
    degrees = _as_degrees(degrees)
    if sample.status != COMPLETE:
        return False
    return bool(np.array_equal(sample.realized_degrees(), degrees.as_array()))


def default_reference(weights: WeightTable, target: TargetSpec) -> ReferenceDensity:
    """Exact torus density when it applies (dim 1 or 2, target inside ``[0, 1/2]``),
    otherwise a 256-bin histogram of all ``r_ij``."""
    if weights.cloud is not None and weights.cloud.dim in (1, 2) and target.support[1] <= 0.5 \
            and target.support[0] >= 0:
        return torus_reference(weights.cloud.dim)
    return auto_reference(weights.pair_lengths())
