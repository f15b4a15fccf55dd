"""Desk-scale experiments: convergence in n, boundary traces, and the early-stop fraction."""
from __future__ import annotations

import csv
import logging
import math
import statistics
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DegreeSequence
from .distributions import (
    SupportMismatchError,
    TargetSpec,
    make_truncated_normal,
    ratio_bound,
    target_from_params,
)
from .geometry import generate_uniform
from .metrics import empirical_law, w1_empirical_target
from .sampler import COMPLETE, WeightTable, default_reference, run

__all__ = [
    "run_seed",
    "ConvergenceRow",
    "ConvergenceReport",
    "convergence_study",
    "BoundaryRun",
    "boundary_trace_study",
    "GammaEstimate",
    "estimate_gamma_star",
    "GammaBoundInputs",
    "gamma_bound_inputs",
    "gamma_lower_bound",
    "solve_gamma_root",
]

log = logging.getLogger(__name__)

TargetRecipe = TargetSpec | Callable[[int], TargetSpec]


def run_seed(master_seed: int, *cell: int) -> int:
    """64-bit seed for one run, derived from the master seed and the cell index."""
    ss = np.random.SeedSequence([int(master_seed), *(int(c) for c in cell)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _target_for(recipe: TargetRecipe, n: int) -> TargetSpec:
    return recipe if isinstance(recipe, TargetSpec) else recipe(n)


# -- convergence in n --------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    rep: int
    seed: int
    status: str
    edges_placed: int
    d_K: float | None
    C_estimate: float | None


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]

    def median_dK(self) -> dict[int, float]:
        out = {}
        for n in sorted({r.n for r in self.rows}):
            vals = [r.d_K for r in self.rows if r.n == n and r.status == COMPLETE]
            out[n] = statistics.median(vals) if vals else math.nan
        return out

    def completion_rate(self) -> dict[int, float]:
        out = {}
        for n in sorted({r.n for r in self.rows}):
            rows = [r for r in self.rows if r.n == n]
            out[n] = sum(r.status == COMPLETE for r in rows) / len(rows)
        return out

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "rep", "seed", "status", "edges_placed", "d_K", "C_estimate"])
            for r in self.rows:
                w.writerow([r.n, r.rep, r.seed, r.status, r.edges_placed,
                            "" if r.d_K is None else repr(r.d_K),
                            "" if r.C_estimate is None else repr(r.C_estimate)])


def _convergence_cell(n: int, rep: int, degree: int, target_params: dict, master_seed: int,
                      dim: int) -> ConvergenceRow:
    target = target_from_params(target_params)
    seed = run_seed(master_seed, n, rep)
    cloud = generate_uniform(n, dim, run_seed(master_seed, n, rep, 1))
    weights = WeightTable.from_points(cloud)
    reference = default_reference(weights, target)
    sample = run(DegreeSequence.regular(n, degree), weights, target, reference, gamma=1.0, seed=seed)
    d_k = w1_empirical_target(empirical_law(sample), target) if sample.status == COMPLETE else None
    try:
        c_est = ratio_bound(target, reference).C_estimate
    except SupportMismatchError:
        c_est = None
    return ConvergenceRow(n, rep, seed, sample.status, sample.k_final, d_k, c_est)


def convergence_study(n_list: Sequence[int], degree: int, target: TargetRecipe, reps: int,
                      master_seed: int, dim: int = 2, workers: int = 1) -> ConvergenceReport:
    """Full runs on fresh uniform torus clouds for every ``(n, rep)``; one row per run."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    for n in n_list:
        if (n * degree) % 2:
            raise ValueError(f"n*degree must be even (n={n}, degree={degree})")
    jobs = [(n, rep, degree, _target_for(target, n).params, master_seed, dim)
            for n in n_list for rep in range(reps)]
    rows = _map(_convergence_cell, jobs, workers)
    rows.sort(key=lambda r: (r.n, r.rep))
    return ConvergenceReport(rows)


# -- boundary regime traces --------------------------------------------------------------


@dataclass
class BoundaryRun:
    mean: float
    rep: int
    seed: int
    status: str
    m: int
    k: list[int] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)
    r: list[float] = field(default_factory=list)

    @property
    def final_alpha(self) -> float:
        return self.alpha[-1] if self.alpha else 0.0

    def window_mean(self, lo: float, hi: float) -> float:
        """Mean placed length over steps with ``lo < alpha <= hi`` (nan if none)."""
        a = np.asarray(self.alpha)
        sel = (a > lo) & (a <= hi)
        return float(np.mean(np.asarray(self.r)[sel])) if sel.any() else math.nan

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "alpha", "r"])
            for row in zip(self.k, self.alpha, self.r):
                w.writerow([row[0], repr(row[1]), repr(row[2])])


def _boundary_cell(n: int, degree: int, mi: int, mean: float, rel_sd: float, rep: int,
                   master_seed: int, dim: int) -> BoundaryRun:
    # full torus-distance range: lengths far from the mean keep a tiny positive weight
    target = make_truncated_normal(mean, rel_sd * mean, (0.0, math.sqrt(dim) / 2.0))
    cloud = generate_uniform(n, dim, run_seed(master_seed, rep, 1))
    weights = WeightTable.from_points(cloud)
    reference = default_reference(weights, target)
    seed = run_seed(master_seed, mi, rep)
    sample = run(DegreeSequence.regular(n, degree), weights, target, reference, gamma=1.0, seed=seed)
    t = sample.trace
    return BoundaryRun(mean, rep, seed, sample.status, sample.m, list(t.k), list(t.alpha), list(t.r))


def boundary_trace_study(n: int, degree: int, means: Sequence[float], rel_sd: float, reps: int,
                         master_seed: int, dim: int = 2, workers: int = 1) -> list[BoundaryRun]:
    """Per-step placed lengths for normal targets with sd ``rel_sd * mean``.

    Clouds are shared across means for the same rep, so the means are compared
    on identical point sets.
    """
    if (n * degree) % 2:
        raise ValueError("n*degree must be even")
    jobs = [(n, degree, mi, float(mean), rel_sd, rep, master_seed, dim)
            for mi, mean in enumerate(means) for rep in range(reps)]
    runs = _map(_boundary_cell, jobs, workers)
    order = {float(m): i for i, m in enumerate(means)}
    runs.sort(key=lambda b: (order[b.mean], b.rep))
    return runs


# -- empirical early-stop fraction ---------------------------------------------------------


@dataclass
class GammaEstimate:
    gamma_hat: float
    warning: bool
    # grid value -> fraction of reps that reached floor(gamma m) edges within tolerance
    pass_fraction: dict[float, float]


def _prefix_cell(n: int, degree: int, target_params: dict, rep: int, master_seed: int, dim: int,
                 grid: tuple[float, ...]) -> list[float | None]:
    target = target_from_params(target_params)
    cloud = generate_uniform(n, dim, run_seed(master_seed, rep, 1))
    weights = WeightTable.from_points(cloud)
    reference = default_reference(weights, target)
    # an early-stopped run with the same seed is exactly a prefix of the full run
    sample = run(DegreeSequence.regular(n, degree), weights, target, reference, gamma=1.0,
                 seed=run_seed(master_seed, rep))
    lengths = sample.lengths
    out: list[float | None] = []
    for g in grid:
        k = math.floor(g * sample.m + 1e-9)
        if k < 1 or k > lengths.size:
            out.append(None)
        else:
            out.append(w1_empirical_target(empirical_law(lengths[:k]), target))
    return out


def estimate_gamma_star(n: int, degree: int, target: TargetSpec, tol_dK: float, reps: int,
                        master_seed: int, grid_step: float = 0.05, quorum: float = 0.9,
                        dim: int = 2, workers: int = 1) -> GammaEstimate:
    """Largest grid ``gamma`` at which a ``quorum`` of runs place ``floor(gamma m)``
    edges with ``d_K`` of that prefix at most ``tol_dK``."""
    if not tol_dK > 0:
        raise ValueError("tol_dK must be positive")
    steps = round(1.0 / grid_step)
    grid = tuple(round(grid_step * i, 12) for i in range(1, steps + 1))
    jobs = [(n, degree, target.params, rep, master_seed, dim, grid) for rep in range(reps)]
    per_rep = _map(_prefix_cell, jobs, workers)
    frac = {}
    for gi, g in enumerate(grid):
        ok = sum(1 for row in per_rep if row[gi] is not None and row[gi] <= tol_dK)
        frac[g] = ok / reps
    good = [g for g in grid if frac[g] >= quorum]
    if not good:
        log.warning("no gamma on the grid meets the tolerance")
        return GammaEstimate(0.0, True, frac)
    return GammaEstimate(max(good), False, frac)


# -- analytic lower bound for the early-stop fraction ---------------------------------------


@dataclass(frozen=True)
class GammaBoundInputs:
    C: float
    d_max: int
    d_bar: float
    eta: float = 1.0
    c: float = 1.0
    epsilons: tuple[float, ...] = tuple(round(0.01 * i, 2) for i in range(1, 100))

    def __post_init__(self) -> None:
        if not (self.C > 0 and self.d_max > 0 and self.d_bar > 0):
            raise ValueError("C, d_max and d_bar must be positive")
        if not (0 < self.eta <= 1 and 0 < self.c <= 1):
            raise ValueError("eta and c must lie in (0, 1]")
        if not self.epsilons or any(not 0 < e < 1 for e in self.epsilons):
            raise ValueError("epsilons must lie in (0, 1)")


def gamma_bound_inputs(degrees: DegreeSequence, C: float, eta: float = 1.0, c: float | None = None,
                       **kw) -> GammaBoundInputs:
    """Inputs from a degree sequence; ``c`` defaults to ``1 - d_max^2 / 4m``."""
    if c is None:
        c = 1.0 - degrees.d_max ** 2 / (4.0 * degrees.m)
    return GammaBoundInputs(C=C, d_max=degrees.d_max, d_bar=float(degrees.d_bar), eta=eta, c=c, **kw)


def solve_gamma_root(rhs: float, tol: float = 1e-14) -> float:
    """Root in (0, 1) of ``gamma / (1 - gamma)^2 = rhs`` by bisection."""
    if not rhs > 0:
        raise ValueError("rhs must be positive")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid / (1.0 - mid) ** 2 < rhs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gamma_lower_bound(inputs: GammaBoundInputs) -> float:
    """Largest admissible early-stop fraction, using the ``epsilon`` on the grid
    that minimises ``L(eps) = d^2 / (c (1 - eps)) + 1 / eps^2``."""
    d2 = float(inputs.d_max) ** 2
    best_L = min(d2 / (inputs.c * (1.0 - e)) + 1.0 / e ** 2 for e in inputs.epsilons)
    return solve_gamma_root(best_L * inputs.d_bar * inputs.eta / (inputs.C * d2))
