"""Command-line front end.

Exit codes: 0 success, 1 negative check result, 2 usage or validation error,
3 sampler failure (partial outputs are still written).
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .core import DegreeSequence, is_graphical
from .distributions import SupportMismatchError, ratio_bound
from .experiments import (
    boundary_trace_study,
    convergence_study,
    estimate_gamma_star,
    gamma_bound_inputs,
    gamma_lower_bound,
)
from .geometry import generate_poisson_disk, generate_uniform
from .metrics import empirical_law, w1_empirical_target
from .sampler import FAILURE, WeightTable, run

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2, 3

log = logging.getLogger("spatialnet")


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


# -- subcommands ------------------------------------------------------------------------------


def cmd_gen_points(args) -> int:
    if args.mode == "uniform":
        if args.radius is not None:
            raise UsageError("--radius is only valid with --mode poisson-disk")
        if args.n is None:
            raise UsageError("--n is required with --mode uniform")
        cloud = generate_uniform(args.n, args.dim, args.seed)
    else:
        if args.radius is None:
            raise UsageError("--mode poisson-disk needs --radius")
        if not 0 < args.radius < 0.5:
            raise UsageError(f"--radius must lie in (0, 0.5), got {args.radius}")
        cloud = generate_poisson_disk(args.radius, args.dim, args.seed)
        if args.n is not None:
            if cloud.n < args.n:
                raise UsageError(f"radius {args.radius} yields only {cloud.n} points, fewer than --n {args.n}")
            keep = np.sort(np.random.default_rng([args.seed, 1]).choice(cloud.n, args.n, replace=False))
            cloud = cloud.subset(keep)
    io.write_points(args.out, cloud)
    log.info("wrote %d points to %s", cloud.n, args.out)
    return EXIT_OK


def _load_weights(args) -> WeightTable:
    if args.points:
        return WeightTable.from_points(io.read_points(args.points))
    return io.read_weights_tsv(args.weights)


def cmd_sample(args) -> int:
    if not 0 < args.gamma <= 1:
        raise UsageError("--gamma must lie in (0, 1]")
    weights = _load_weights(args)
    degrees = io.parse_degrees_source(args.degrees, weights.n)
    if len(degrees) != weights.n:
        raise UsageError(f"{len(degrees)} degrees but {weights.n} vertices in the weight source")
    if not is_graphical(degrees):
        print("not graphical", file=sys.stderr)
        return EXIT_USAGE
    max_len = float(weights.pair_lengths().max()) if weights.n > 1 else None
    target = io.parse_target(args.target, default_hi=max_len)
    reference = io.parse_reference(args.reference, weights, target)
    degree_seq = DegreeSequence(tuple(degrees))

    t0 = time.perf_counter()
    sample = run(degree_seq, weights, target, reference, gamma=args.gamma, seed=args.seed,
                 degree_correction=not args.no_degree_correction)
    wall_ms = (time.perf_counter() - t0) * 1e3

    try:
        c_est = ratio_bound(target, reference).C_estimate
    except SupportMismatchError:
        c_est = None
    d_k = None
    if sample.status != FAILURE and sample.k_final:
        d_k = w1_empirical_target(empirical_law(sample), target)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_edges(out / "edges.tsv", sample)
    io.write_trace(out / "trace.csv", sample)
    io.write_metadata(out / "meta.json", {
        "n": sample.n,
        "m": sample.m,
        "status": sample.status,
        "edges_placed": sample.k_final,
        "gamma": args.gamma,
        "seed": args.seed,
        "C_estimate": c_est,
        "d_K": d_k,
        "target": target.name,
        "reference": reference.name,
        "degree_correction": not args.no_degree_correction,
        "wall_time_ms": round(wall_ms, 3) if args.record_time else None,
    })
    print(f"{sample.status} {sample.k_final}/{sample.m}")
    return EXIT_FAILURE if sample.status == FAILURE else EXIT_OK


def cmd_distance(args) -> int:
    lengths = io.read_edge_lengths(args.edges)
    target = io.parse_target(args.target)
    print(f"{w1_empirical_target(empirical_law(lengths), target):#.9g}")
    return EXIT_OK


def cmd_check_degrees(args) -> int:
    degrees = io.read_degrees(args.file)
    ok = is_graphical(degrees)
    print("graphical" if ok else "not graphical")
    return EXIT_OK if ok else EXIT_NEGATIVE


def _experiment_target(spec: str, dim: int):
    return io.parse_target(spec, default_hi=math.sqrt(dim) / 2.0)


def cmd_experiment_convergence(args) -> int:
    target = _experiment_target(args.target, args.dim)
    report = convergence_study(args.n_list, args.degree, target, args.reps, args.seed,
                               dim=args.dim, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "report.csv")
    for n, med in report.median_dK().items():
        print(f"n={n} median_dK={med:#.9g} completion={report.completion_rate()[n]:.3f}")
    return EXIT_OK


def cmd_experiment_boundary(args) -> int:
    runs = boundary_trace_study(args.n, args.degree, args.means, args.rel_sd, args.reps, args.seed,
                                dim=args.dim, workers=args.workers)
    out = Path(args.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    with open(out / "report.csv", "w") as fh:
        fh.write("mean,rep,seed,status,edges_placed,final_alpha\n")
        for b in runs:
            fh.write(f"{io.fmt(b.mean)},{b.rep},{b.seed},{b.status},{len(b.k)},{io.fmt(b.final_alpha)}\n")
            b.write_csv(out / "traces" / f"{io.fmt(b.mean)}_{b.rep}.csv")
    return EXIT_OK


def cmd_experiment_gamma(args) -> int:
    target = _experiment_target(args.target, args.dim)
    est = estimate_gamma_star(args.n, args.degree, target, args.tol, args.reps, args.seed,
                              dim=args.dim, workers=args.workers)
    print(f"gamma_hat={est.gamma_hat:g}" + (" (warning: no grid value qualified)" if est.warning else ""))
    if args.C is not None:
        bound = gamma_lower_bound(gamma_bound_inputs(DegreeSequence.regular(args.n, args.degree), args.C,
                                                     eta=args.eta))
        print(f"gamma_lower_bound={bound:#.9g}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spatialnet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-points", help="generate a point cloud on the unit torus")
    g.add_argument("--n", type=int)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--mode", choices=["uniform", "poisson-disk"], default="uniform")
    g.add_argument("--radius", type=float)
    g.add_argument("--seed", type=_seed, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_points)

    s = sub.add_parser("sample", help="sample a graph with given degrees and edge-length law")
    s.add_argument("--degrees", required=True, help="degrees file or regular:<k>")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--points", help="points CSV; lengths are torus distances")
    src.add_argument("--weights", help="explicit weights TSV i<TAB>j<TAB>r")
    s.add_argument("--target", required=True)
    s.add_argument("--reference", help="torus-analytic | auto | hist:<path>")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--no-degree-correction", action="store_true")
    s.add_argument("--record-time", action="store_true", help="fill wall_time_ms in meta.json")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sample)

    d = sub.add_parser("distance", help="W1 distance of an edge file's lengths to a target")
    d.add_argument("--edges", required=True)
    d.add_argument("--target", required=True)
    d.set_defaults(func=cmd_distance)

    c = sub.add_parser("check-degrees", help="Erdős–Gallai graphicality check")
    c.add_argument("file")
    c.set_defaults(func=cmd_check_degrees)

    e = sub.add_parser("experiment", help="run a study")
    esub = e.add_subparsers(dest="study", required=True)

    def common(x):
        x.add_argument("--degree", type=int, default=3)
        x.add_argument("--dim", type=int, default=2)
        x.add_argument("--reps", type=int, default=20)
        x.add_argument("--seed", type=_seed, required=True)
        x.add_argument("--workers", type=int, default=1)

    ec = esub.add_parser("convergence")
    common(ec)
    ec.add_argument("--n-list", type=_int_list, default=[200, 400, 800])
    ec.add_argument("--target", default="normal:mu=0.2,sigma=0.03")
    ec.add_argument("--out", required=True)
    ec.set_defaults(func=cmd_experiment_convergence)

    eb = esub.add_parser("boundary")
    common(eb)
    eb.add_argument("--n", type=int, default=1000)
    eb.add_argument("--means", type=_float_list, default=[0.2, 0.1, 0.04])
    eb.add_argument("--rel-sd", type=float, default=0.15)
    eb.add_argument("--out", required=True)
    eb.set_defaults(func=cmd_experiment_boundary)

    eg = esub.add_parser("gamma")
    common(eg)
    eg.add_argument("--n", type=int, default=1000)
    eg.add_argument("--target", required=True)
    eg.add_argument("--tol", type=float, required=True, help="d_K tolerance")
    eg.add_argument("--C", type=float, help="also print the analytic bound for this ratio constant")
    eg.add_argument("--eta", type=float, default=1.0)
    eg.set_defaults(func=cmd_experiment_gamma)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, io.SpecError, SupportMismatchError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
