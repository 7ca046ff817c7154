"""Hypergraph data model, validation, degree statistics and random instances.

Nodes are plain integers. A hypergraph is an immutable value: every
operation that "changes" it returns a new instance.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

BY_SIZE = "by-size"
BY_THRESHOLD = "by-threshold"


class GenerationWarning(UserWarning):
    """The random generator hit its attempt cap before reaching the edge target."""


@dataclass(frozen=True)
class Hyperedge:
    members: frozenset[int]
    threshold: int

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, v: object) -> bool:
        return v in self.members


@dataclass(frozen=True)
class Hypergraph:
    node_ids: tuple[int, ...]
    edges: tuple[Hyperedge, ...] = ()
    linear: bool = False

    @classmethod
    def from_edges(
        cls,
        node_ids: Iterable[int],
        edges: Iterable[tuple[Iterable[int], int]],
        linear: bool = False,
    ) -> "Hypergraph":
        return cls(
            tuple(sorted(set(node_ids))),
            tuple(Hyperedge(frozenset(m), int(t)) for m, t in edges),
            linear,
        )

    @classmethod
    def mis(cls, node_ids: Iterable[int], edge_sets: Iterable[Iterable[int]], linear: bool = False) -> "Hypergraph":
        """Build an instance with MIS thresholds t_e = |e| - 1."""
        sets = [frozenset(e) for e in edge_sets]
        return cls.from_edges(node_ids, [(e, len(e) - 1) for e in sets], linear)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def node_set(self) -> frozenset[int]:
        return frozenset(self.node_ids)

    @cached_property
    def incidence(self) -> dict[int, tuple[int, ...]]:
        """Node id -> indices of the edges containing it."""
        inc: dict[int, list[int]] = {v: [] for v in self.node_ids}
        for k, e in enumerate(self.edges):
            for v in e.members:
                inc[v].append(k)
        return {v: tuple(ks) for v, ks in inc.items()}

    def is_mis_instance(self) -> bool:
        return all(e.threshold == len(e) - 1 for e in self.edges)

    def neighbours(self, v: int) -> set[int]:
        out: set[int] = set()
        for k in self.incidence[v]:
            out |= self.edges[k].members
        out.discard(v)
        return out

    def _check_subset(self, subset: Iterable[int]) -> frozenset[int]:
        s = frozenset(subset)
        unknown = s - self.node_set
        if unknown:
            raise KeyError(f"unknown node ids: {sorted(unknown)[:5]}")
        return s


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(h: Hypergraph, require_linear: bool = False) -> ValidationReport:
    """Collect every structural violation of ``h``; never raises."""
    report = ValidationReport()
    bad = report.violations
    nodes = h.node_set
    if len(nodes) != len(h.node_ids):
        bad.append("duplicate node ids")
    seen: dict[frozenset[int], int] = {}
    for k, e in enumerate(h.edges):
        size = len(e.members)
        if not e.members <= nodes:
            bad.append(f"edge {k}: unknown members {sorted(e.members - nodes)}")
        if size < 2:
            bad.append(f"edge {k}: size {size} < 2")
        elif not 1 <= e.threshold <= size - 1:
            bad.append(f"edge {k}: threshold {e.threshold} outside [1, {size - 1}]")
        if e.members in seen:
            bad.append(f"edge {k}: duplicate of edge {seen[e.members]}")
        else:
            seen[e.members] = k
    if require_linear:
        n = h.n
        if h.m > n * (n - 1) // 2:
            bad.append(f"edge count {h.m} exceeds n(n-1)/2 = {n * (n - 1) // 2}")
        owner: dict[tuple[int, int], int] = {}
        for k, e in enumerate(h.edges):
            for pair in combinations(sorted(e.members), 2):
                j = owner.setdefault(pair, k)
                if j != k and h.edges[j].members != e.members:
                    bad.append(f"edges {j} and {k} share more than one node")
                    break
    return report


def dimension(h: Hypergraph) -> int:
    return max((len(e) for e in h.edges), default=0)


@dataclass(frozen=True)
class DegreeProfile:
    """Per-node class degrees and per-class edge counts.

    In by-size mode the class of an edge is its size; in by-threshold mode it
    is its threshold.
    """

    mode: str
    degrees: Mapping[int, Mapping[int, int]]
    counts: Mapping[int, int]
    n: int

    def d(self, i: int, v: int) -> int:
        return self.degrees[v].get(i, 0)

    def u(self, i: int) -> int:
        return self.counts.get(i, 0)

    def max_degree(self, i: int) -> int:
        return max((self.d(i, v) for v in self.degrees), default=0)


def degree_profile(h: Hypergraph, active: Iterable[int], mode: str = BY_SIZE) -> DegreeProfile:
    act = h._check_subset(active)
    if mode == BY_SIZE:
        sub = induced_subhypergraph(h, act)
        key = len
    elif mode == BY_THRESHOLD:
        sub = strict_subhypergraph(h, act)
        key = lambda e: e.threshold  # noqa: E731
    else:
        raise ValueError(f"unknown mode {mode!r}")
    degrees: dict[int, dict[int, int]] = {v: {} for v in act}
    counts: dict[int, int] = defaultdict(int)
    for e in sub.edges:
        i = key(e)
        counts[i] += 1
        for v in e.members:
            degrees[v][i] = degrees[v].get(i, 0) + 1
    return DegreeProfile(mode, degrees, dict(counts), len(act))


def class_range(mode: str, n: int, d: int | None = None) -> range:
    """Classes inspected by the equitability test and the marking polynomial.

    by-size: 2..floor(log2 n); by-threshold: 1..d-1.
    """
    if mode == BY_SIZE:
        return range(2, int(math.log2(n)) + 1) if n >= 1 else range(0)
    if d is None:
        raise ValueError("by-threshold range needs the dimension bound d")
    return range(1, d)


def is_equitable(profile: DegreeProfile, c_eq: int = 16, exponent_alpha: float = 5, range_bound: int | None = None) -> bool:
    n = profile.n
    if n <= c_eq:
        return True
    if range_bound is None:
        range_bound = int(math.log2(n)) if profile.mode == BY_SIZE else max(profile.counts, default=0)
    lo = 2 if profile.mode == BY_SIZE else 1
    factor = math.log2(n) ** exponent_alpha
    for i in range(lo, range_bound + 1):
        bound = i * profile.u(i) / n * factor
        if profile.max_degree(i) > bound:
            return False
    return True


def induced_subhypergraph(h: Hypergraph, v_subset: Iterable[int]) -> Hypergraph:
    keep = h._check_subset(v_subset)
    nodes = tuple(v for v in h.node_ids if v in keep)
    return Hypergraph(nodes, tuple(e for e in h.edges if e.members <= keep), h.linear)


def strict_subhypergraph(h: Hypergraph, w_subset: Iterable[int]) -> Hypergraph:
    """Shrink every edge to ``w_subset``; keep it only while it can still bind."""
    keep = h._check_subset(w_subset)
    nodes = tuple(v for v in h.node_ids if v in keep)
    edges = []
    for e in h.edges:
        shrunk = e.members & keep
        if len(shrunk) > e.threshold:
            edges.append(e if len(shrunk) == len(e.members) else Hyperedge(shrunk, e.threshold))
    return Hypergraph(nodes, tuple(edges), h.linear)


def _size_sampler(size_distribution, rng: np.random.Generator):
    if isinstance(size_distribution, Mapping):
        sizes = np.array(list(size_distribution.keys()), dtype=int)
        w = np.array(list(size_distribution.values()), dtype=float)
        p = w / w.sum()
        return lambda: int(rng.choice(sizes, p=p))
    sizes = np.array(list(size_distribution), dtype=int)
    return lambda: int(sizes[rng.integers(len(sizes))])


def gen_random_linear(
    n: int,
    target_edges: int,
    size_distribution: Sequence[int] | Mapping[int, float] = (2, 3),
    threshold_mode: str = "mis",
    seed: int = 0,
    attempt_cap: int | None = None,
) -> Hypergraph:
    """Random linear hypergraph on nodes 0..n-1 by rejection sampling.

    Candidate edges are drawn with a size from ``size_distribution`` and
    accepted only if they share no node pair with an accepted edge. Emits a
    ``GenerationWarning`` and returns the partial instance when the attempt
    cap runs out first.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if target_edges > n * (n - 1) // 2:
        raise ValueError(f"target_edges {target_edges} exceeds n(n-1)/2")
    if threshold_mode not in ("mis", "uniform"):
        raise ValueError(f"unknown threshold mode {threshold_mode!r}")
    rng = np.random.default_rng(seed)
    draw_size = _size_sampler(size_distribution, rng)
    if attempt_cap is None:
        attempt_cap = 50 * target_edges + 1000
    covered: set[tuple[int, int]] = set()
    edges: list[tuple[frozenset[int], int]] = []
    attempts = 0
    while len(edges) < target_edges and attempts < attempt_cap:
        attempts += 1
        s = draw_size()
        if s < 2 or s > n:
            continue
        members = sorted(int(x) for x in rng.choice(n, size=s, replace=False))
        pairs = list(combinations(members, 2))
        if any(p in covered for p in pairs):
            continue
        covered.update(pairs)
        t = s - 1 if threshold_mode == "mis" else int(rng.integers(1, s))
        edges.append((frozenset(members), t))
    if len(edges) < target_edges:
        warnings.warn(
            f"attempt cap {attempt_cap} reached with {len(edges)}/{target_edges} edges",
            GenerationWarning,
            stacklevel=2,
        )
    return Hypergraph.from_edges(range(n), edges, linear=True)
