"""MIS on linear hypergraphs: the size-classed instance of the core solver.

Edges are classed by their number of active members, the class range is
2..floor(log2 n'), the marking polynomial is sum_i i*u_i*a^(i-1), and the
single-election branch maximizes d_2.
"""

from __future__ import annotations

from typing import Mapping

from .config import SolverConfig
from .congest import Engine
from .core import MIS, ClusterSolution, CoreRun, compute_a_hat_mis, solve_hypergraph
from .hypergraph import Hypergraph

__all__ = [
    "compute_a_hat_mis",
    "part1_equitable",
    "part2_mark_and_include",
    "part3_update",
    "solve_mis_cluster",
]


def part1_equitable(run: CoreRun, n_hat: int) -> tuple[int, dict[int, int], int]:
    """Idle high-degree nodes until the active set is equitable.

    Returns (n', u, inner iterations used).
    """
    return run.part1(n_hat)


def part2_mark_and_include(run: CoreRun, n_prime: int, u: Mapping[int, int]) -> tuple[set[int], dict]:
    return run.part2(n_prime, u)


def part3_update(run: CoreRun, included: set[int]) -> set[int]:
    return run.part3(included)


def solve_mis_cluster(h: Hypergraph, config: SolverConfig | None = None, seed: int = 0, engine: Engine | None = None) -> ClusterSolution:
    if not h.is_mis_instance():
        raise ValueError("MIS solver needs thresholds |e| - 1 on every edge")
    return solve_hypergraph(h, MIS, config, seed, engine)
