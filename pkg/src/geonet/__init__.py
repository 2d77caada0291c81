"""Geometric problems on simulated asynchronous message-passing networks."""
from .algorithms import (
    AlgorithmResult,
    CellGrid,
    evaluate,
    run_closest_pair,
    run_eps_diameter,
    run_eps_hull,
    run_eps_kernel,
)
from .geometry import (
    GridPoint,
    KernelSet,
    build_kernel,
    closest_pair_oracle,
    combine_kernels,
    convex_hull,
    diameter_oracle,
    directional_width,
    distance_to_hull,
    extreme_points_for_line,
    make_direction_set,
    verify_eps_kernel,
)
from .netsim import AdversarialHook, GeoNetwork, RandomDelay, RestrictedFifo, run
from .topology import make_network
from .tree import SpanningTree, build_spanning_tree

__version__ = "0.1.0"

__all__ = [
    "AlgorithmResult", "CellGrid", "evaluate", "run_closest_pair", "run_eps_diameter", "run_eps_hull",
    "run_eps_kernel", "GridPoint", "KernelSet", "build_kernel", "closest_pair_oracle", "combine_kernels",
    "convex_hull", "diameter_oracle", "directional_width", "distance_to_hull", "extreme_points_for_line",
    "make_direction_set", "verify_eps_kernel", "AdversarialHook", "GeoNetwork", "RandomDelay",
    "RestrictedFifo", "run", "make_network", "SpanningTree", "build_spanning_tree",
]
