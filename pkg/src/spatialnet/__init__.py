"""Sampling spatial graphs with a prescribed degree sequence and edge-length law."""
from .core import DegreeSequence, is_graphical, pair_degree_factor, total_edges
from .distributions import (
    ReferenceDensity,
    TargetSpec,
    auto_reference,
    importance_ratio,
    make_truncated_normal,
    make_uniform,
    normal_rel,
    ratio_bound,
    target_as_reference,
    torus_reference,
)
from .geometry import PointCloud, generate_poisson_disk, generate_uniform, torus_distance
from .metrics import EmpiricalLaw, empirical_law, w1_empirical_empirical, w1_empirical_target
from .sampler import GraphSample, SamplerState, WeightTable, initialize, run, run_batch, verify_degrees

__version__ = "0.1.0"
