"""Flat-file formats and CLI spec strings. Vertices are 1-indexed in every file."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .distributions import (
    ReferenceDensity,
    TargetSpec,
    auto_reference,
    histogram_reference,
    make_histogram_target,
    make_truncated_normal,
    make_uniform,
    torus_reference,
)
from .geometry import HistogramDensity, PointCloud
from .sampler import GraphSample, WeightTable, default_reference

SCHEMA_VERSION = 1


class SpecError(ValueError):
    """Malformed spec string or input file."""


def fmt(x: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


# -- degrees ----------------------------------------------------------------------------


def read_degrees(path: str | Path) -> list[int]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            d = int(line)
        except ValueError:
            raise SpecError(f"{path}:{lineno}: not an integer: {line!r}") from None
        if d < 0:
            raise SpecError(f"{path}:{lineno}: negative degree")
        out.append(d)
    return out


def write_degrees(path: str | Path, degrees) -> None:
    Path(path).write_text("".join(f"{int(d)}\n" for d in degrees))


def parse_degrees_source(source: str, n: int | None) -> list[int]:
    """``regular:<k>`` (needs ``n``) or a degrees file path."""
    if source.startswith("regular:"):
        if n is None:
            raise SpecError("regular:<k> needs the number of vertices from the weight source")
        try:
            k = int(source.split(":", 1)[1])
        except ValueError:
            raise SpecError(f"bad degree source {source!r}") from None
        return [k] * n
    return read_degrees(source)


# -- points -----------------------------------------------------------------------------


def write_points(path: str | Path, cloud: PointCloud) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *(f"x{c}" for c in range(cloud.dim))])
        for i, p in enumerate(cloud.points, 1):
            w.writerow([i, *(fmt(x) for x in p)])


def read_points(path: str | Path) -> PointCloud:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "id":
        raise SpecError(f"{path}: expected header 'id,x0,...'")
    dim = len(rows[0]) - 1
    pts = np.empty((len(rows) - 1, dim))
    for k, row in enumerate(rows[1:]):
        if len(row) != dim + 1 or int(row[0]) != k + 1:
            raise SpecError(f"{path}: malformed row {k + 2}")
        pts[k] = [float(x) for x in row[1:]]
    return PointCloud(pts)


# -- explicit weights ----------------------------------------------------------------------


def read_weights_tsv(path: str | Path) -> WeightTable:
    """``i<TAB>j<TAB>r`` for every pair ``i < j``; ``n`` is the largest index seen."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise SpecError(f"{path}:{lineno}: expected i<TAB>j<TAB>r")
        entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
    n = max(max(i, j) for i, j, _ in entries)
    mat = np.full((n, n), np.nan)
    np.fill_diagonal(mat, 0.0)
    for i, j, r in entries:
        if i == j or not (1 <= i <= n and 1 <= j <= n):
            raise SpecError(f"{path}: bad pair ({i}, {j})")
        mat[i - 1, j - 1] = mat[j - 1, i - 1] = r
    if np.isnan(mat).any():
        raise SpecError(f"{path}: weights missing for some pairs")
    return WeightTable.from_matrix(mat)


# -- edges, trace, metadata -------------------------------------------------------------------


def write_edges(path: str | Path, sample: GraphSample) -> None:
    with open(path, "w") as fh:
        for i, j, r in sample.edges:
            fh.write(f"{i + 1}\t{j + 1}\t{fmt(r)}\n")


def read_edge_lengths(path: str | Path) -> np.ndarray:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise SpecError(f"{path}:{lineno}: expected i<TAB>j<TAB>r")
        out.append(float(parts[2]))
    return np.array(out)


def write_trace(path: str | Path, sample: GraphSample) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "alpha", "r", "Z"])
        for k, a, r, z in sample.trace.rows():
            w.writerow([k, fmt(a), fmt(r), fmt(z)])


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_metadata(path: str | Path, meta: dict) -> None:
    meta = {"schema": SCHEMA_VERSION, **{k: _clean(v) for k, v in meta.items()}}
    Path(path).write_text(json.dumps(meta, sort_keys=True, allow_nan=False, indent=2) + "\n")


# -- spec strings -------------------------------------------------------------------------------


def _kv(body: str, spec: str) -> dict[str, float]:
    out = {}
    for part in filter(None, body.split(",")):
        if "=" not in part:
            raise SpecError(f"bad parameter {part!r} in {spec!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise SpecError(f"bad number {v!r} in {spec!r}") from None
    return out


def read_histogram_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSV rows ``lo,hi,mass``; a header row is allowed."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                if rows:
                    raise SpecError(f"{path}: non-numeric row {row}") from None
    if not rows or any(len(r) != 3 for r in rows):
        raise SpecError(f"{path}: expected rows lo,hi,mass")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def parse_target(spec: str, default_hi: float | None = None) -> TargetSpec:
    """``normal:mu=..,sigma=..[,lo=..,hi=..]``, ``uniform:a=..,b=..`` or ``hist:<path>``.

    A normal without ``lo``/``hi`` is truncated to ``[0, default_hi]`` (the
    largest admissible length when known), falling back to ``mu + 12 sigma``.
    """
    kind, _, body = spec.partition(":")
    try:
        if kind == "normal":
            p = _kv(body, spec)
            mu, sigma = p.pop("mu"), p.pop("sigma")
            lo = p.pop("lo", 0.0)
            hi = p.pop("hi", default_hi if default_hi is not None else mu + 12.0 * sigma)
            if p:
                raise SpecError(f"unknown parameters {sorted(p)} in {spec!r}")
            return make_truncated_normal(mu, sigma, (lo, hi))
        if kind == "uniform":
            p = _kv(body, spec)
            a, b = p.pop("a"), p.pop("b")
            if p:
                raise SpecError(f"unknown parameters {sorted(p)} in {spec!r}")
            return make_uniform(a, b)
        if kind == "hist":
            return make_histogram_target(*read_histogram_csv(body))
    except KeyError as exc:
        raise SpecError(f"missing parameter {exc.args[0]!r} in {spec!r}") from None
    raise SpecError(f"unknown target spec {spec!r}")


def parse_reference(spec: str | None, weights: WeightTable, target: TargetSpec) -> ReferenceDensity:
    """``torus-analytic``, ``auto``, ``hist:<path>``, or ``None`` for the default rule."""
    if spec is None:
        return default_reference(weights, target)
    if spec == "auto":
        return auto_reference(weights.pair_lengths())
    if spec == "torus-analytic":
        if weights.cloud is None:
            raise SpecError("torus-analytic needs a points file")
        return torus_reference(weights.cloud.dim)
    if spec.startswith("hist:"):
        lo, hi, mass = read_histogram_csv(spec[5:])
        order = np.argsort(lo)
        edges = np.concatenate([lo[order], hi[order][-1:]])
        mass = mass[order] / mass.sum()
        return histogram_reference(HistogramDensity(edges, mass / np.diff(edges)), name=spec)
    raise SpecError(f"unknown reference spec {spec!r}")
