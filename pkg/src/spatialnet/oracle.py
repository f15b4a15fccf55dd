"""Brute-force ground truth for tiny instances.

Nothing here shares code with :mod:`spatialnet.sampler`; step probabilities are
recomputed from the formula with exact rational arithmetic.
"""
from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from fractions import Fraction

import numpy as np

from .distributions import ReferenceDensity, TargetSpec, importance_ratio

__all__ = [
    "RunDistribution",
    "OracleTooLarge",
    "enumerate_run_distribution",
    "first_step_distribution",
    "matching_distribution",
    "conditional_weight_law_check",
    "all_simple_graph_degree_sequences",
]

MAX_N = 5
MAX_M = 6

Edge = tuple[int, int]
RunDistribution = dict[tuple[Edge, ...], Fraction]


class OracleTooLarge(ValueError):
    pass


def _pair_weights(degrees: Sequence[int], weights, target: TargetSpec, reference: ReferenceDensity,
                  degree_correction: bool) -> dict[Edge, Fraction]:
    """Static part ``(f/g)(r_ij) (1 - d_i d_j / 4m)`` as exact rationals."""
    n = len(degrees)
    m = sum(degrees) // 2
    w = np.asarray(weights, dtype=np.float64)
    out = {}
    for i, j in itertools.combinations(range(n), 2):
        if degrees[i] == 0 or degrees[j] == 0:
            continue
        ratio = Fraction(importance_ratio(target, reference, float(w[i, j])))
        corr = 1 - Fraction(degrees[i] * degrees[j], 4 * m) if degree_correction else Fraction(1)
        out[(i, j)] = ratio * corr
    return out


def _step_law(static: dict[Edge, Fraction], remaining: list[int], placed: set[Edge]) -> dict[Edge, Fraction]:
    mass = {
        e: s * remaining[e[0]] * remaining[e[1]]
        for e, s in static.items()
        if e not in placed and remaining[e[0]] and remaining[e[1]]
    }
    mass = {e: v for e, v in mass.items() if v > 0}
    z = sum(mass.values())
    return {e: v / z for e, v in mass.items()} if z else {}


def enumerate_run_distribution(degrees: Sequence[int], weights, target: TargetSpec,
                               reference: ReferenceDensity,
                               degree_correction: bool = True) -> RunDistribution:
    """Exact law of the full ordered edge sequence, failure branches included.

    Keys are tuples of 0-based ``(i, j)`` pairs with ``i < j``; a key shorter
    than ``m`` is a run that ended in failure.
    """
    degrees = [int(x) for x in degrees]
    n, m = len(degrees), sum(degrees) // 2
    if n > MAX_N or m > MAX_M:
        raise OracleTooLarge(f"instance too large for enumeration (n={n}, m={m})")
    static = _pair_weights(degrees, weights, target, reference, degree_correction)
    out: RunDistribution = {}

    def expand(prefix: tuple[Edge, ...], remaining: list[int], prob: Fraction) -> None:
        if len(prefix) == m:
            out[prefix] = out.get(prefix, Fraction(0)) + prob
            return
        law = _step_law(static, remaining, set(prefix))
        if not law:
            out[prefix] = out.get(prefix, Fraction(0)) + prob
            return
        for (i, j), p in law.items():
            remaining[i] -= 1
            remaining[j] -= 1
            expand(prefix + ((i, j),), remaining, prob * p)
            remaining[i] += 1
            remaining[j] += 1

    expand((), list(degrees), Fraction(1))
    return out


def first_step_distribution(degrees: Sequence[int], weights, target: TargetSpec,
                            reference: ReferenceDensity, degree_correction: bool = True) -> dict[Edge, Fraction]:
    degrees = [int(x) for x in degrees]
    static = _pair_weights(degrees, weights, target, reference, degree_correction)
    return _step_law(static, list(degrees), set())


def matching_distribution(dist: RunDistribution) -> dict[frozenset, Fraction]:
    """Collapse edge orderings: law of the unordered edge set (failures keep their partial set)."""
    out: dict[frozenset, Fraction] = {}
    for seq, p in dist.items():
        key = frozenset(seq)
        out[key] = out.get(key, Fraction(0)) + p
    return out


def all_simple_graph_degree_sequences(n: int) -> set[tuple[int, ...]]:
    """Degree sequences (vertex-labelled) of every simple graph on ``n`` vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    seen = set()
    for mask in range(1 << len(pairs)):
        deg = [0] * n
        for b, (i, j) in enumerate(pairs):
            if mask >> b & 1:
                deg[i] += 1
                deg[j] += 1
        seen.add(tuple(deg))
    return seen


def _normalise_law(discrete_law) -> list[tuple[float, float]]:
    items = list(discrete_law)
    if not items:
        raise ValueError("empty law")
    if all(isinstance(x, (int, float)) for x in items):
        items = [(float(x), 1.0 / len(items)) for x in items]
    law = [(float(v), float(p)) for v, p in items]
    if any(p < 0 for _, p in law) or not math.isclose(sum(p for _, p in law), 1.0, rel_tol=0, abs_tol=1e-12):
        raise ValueError("probabilities must be nonnegative and sum to 1")
    if all(v == 0 for v, p in law if p > 0):
        raise ValueError("degenerate law: every atom is zero")
    if any(v < 0 for v, _ in law):
        raise ValueError("atoms must be nonnegative")
    return law


def conditional_weight_law_check(n: int, c: Sequence[float], discrete_law, k: int):
    """``P(X_k = x | I != k)`` for every atom ``x``, computed two ways.

    ``X_1..X_n`` are i.i.d. with ``discrete_law`` (either ``(value, prob)``
    pairs or bare values taken as equally likely) and
    ``P(I = i | X) = c_i X_i / sum_j c_j X_j``. ``k`` is 0-based.

    Returns ``(atoms, by_enumeration, by_formula)``: direct Bayes over every
    tuple of atoms, and the product formula
    ``E[A/(A + c_k X_k)]^-1 * E[A/(A + c_k x)] * g(x)`` with
    ``A = sum_{i != k} c_i X_i`` and both expectations enumerated.
    """
    if not 1 <= n <= 6:
        raise ValueError("n must be between 1 and 6")
    law = _normalise_law(discrete_law)
    if len(law) > 8:
        raise ValueError("at most 8 atoms")
    c = [float(x) for x in c]
    if len(c) != n or any(x <= 0 for x in c):
        raise ValueError("need n positive coefficients")
    if not 0 <= k < n:
        raise ValueError("k out of range")
    atoms = [v for v, _ in law]
    probs = [p for _, p in law]

    tuples = list(itertools.product(range(len(law)), repeat=n))
    for t in tuples:
        if math.prod(probs[a] for a in t) > 0 and sum(c[i] * atoms[a] for i, a in enumerate(t)) == 0:
            raise ValueError("I is undefined when every weight can vanish simultaneously")

    # route 1: Bayes over the joint law
    joint = np.zeros(len(law))
    p_not_k = 0.0
    for t in tuples:
        pt = math.prod(probs[a] for a in t)
        if pt == 0:
            continue
        total = sum(c[i] * atoms[a] for i, a in enumerate(t))
        q = (total - c[k] * atoms[t[k]]) / total
        joint[t[k]] += pt * q
        p_not_k += pt * q
    if p_not_k == 0:
        raise ValueError("P(I != k) = 0: the conditioning event is null")
    by_enum = joint / p_not_k

    # route 2: the closed-form product, expectations over the other n-1 variables
    others = [i for i in range(n) if i != k]
    rest = []
    for t in itertools.product(range(len(law)), repeat=n - 1):
        pt = math.prod(probs[a] for a in t)
        if pt > 0:
            rest.append((pt, sum(c[i] * atoms[a] for i, a in zip(others, t))))

    def frac_not_chosen(x: float) -> float:
        return sum(pt * (a / (a + c[k] * x)) for pt, a in rest)

    expect_denominator = sum(probs[xi] * frac_not_chosen(atoms[xi]) for xi in range(len(law)) if probs[xi] > 0)
    by_formula = np.array([frac_not_chosen(x) * p / expect_denominator if p > 0 else 0.0
                           for x, p in zip(atoms, probs)])
    return np.array(atoms), by_enum, by_formula
