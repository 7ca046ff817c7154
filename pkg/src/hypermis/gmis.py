"""GMIS on constant-dimension linear hypergraphs: the threshold-classed
instance of the core solver.

Edges of the strict active subhypergraph are classed by their residual
threshold, the class range is 1..d-1, the marking polynomial is
sum_i u_i*a^i, and the single-election branch maximizes d_1.
"""

from __future__ import annotations

from typing import Mapping

from .config import SolverConfig
from .congest import Engine
from .core import GMIS, ClusterSolution, CoreRun, compute_a_hat_gmis, solve_hypergraph
from .hypergraph import Hypergraph, dimension

__all__ = [
    "DimensionError",
    "compute_a_hat_gmis",
    "part1_equitable_strict",
    "part2_mark_and_include_gmis",
    "part3_update_gmis",
    "solve_gmis_cluster",
]


class DimensionError(ValueError):
    pass


def check_dimension(h: Hypergraph, d: int) -> None:
    dim = dimension(h)
    if dim > d:
        raise DimensionError(f"instance dimension {dim} exceeds the solver bound d={d}")


def part1_equitable_strict(run: CoreRun, n_hat: int) -> tuple[int, dict[int, int], int]:
    return run.part1(n_hat)


def part2_mark_and_include_gmis(run: CoreRun, n_prime: int, u: Mapping[int, int]) -> tuple[set[int], dict]:
    return run.part2(n_prime, u)


def part3_update_gmis(run: CoreRun, included: set[int]) -> set[int]:
    return run.part3(included)


def solve_gmis_cluster(h: Hypergraph, config: SolverConfig | None = None, seed: int = 0, engine: Engine | None = None) -> ClusterSolution:
    cfg = config or SolverConfig()
    check_dimension(h, cfg.d)
    return solve_hypergraph(h, GMIS, cfg, seed, engine)
