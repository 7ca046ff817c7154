"""Centralized ground truth: checkers, greedy solver, exhaustive enumeration,
and progress statistics over solver transcripts."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .hypergraph import Hypergraph

INCLUDED = "included"
EXCLUDED = "excluded"


@dataclass(frozen=True)
class SolutionAssignment:
    included: frozenset[int]
    excluded: frozenset[int]
    witness: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def from_included(cls, h: Hypergraph, included: Iterable[int]) -> "SolutionAssignment":
        inc = frozenset(included)
        return cls(inc, h.node_set - inc)

    def decision(self, v: int) -> str:
        if v in self.included:
            return INCLUDED
        if v in self.excluded:
            return EXCLUDED
        raise KeyError(v)

    def covers(self, h: Hypergraph) -> bool:
        return (self.included | self.excluded) == h.node_set and not (self.included & self.excluded)

    def to_dict(self) -> dict:
        return {
            "included": sorted(self.included),
            "excluded": sorted(self.excluded),
            "witness": {str(v): k for v, k in sorted(self.witness.items())},
        }


@dataclass
class CheckResult:
    ok: bool
    violations: list[str] = field(default_factory=list)
    witness: dict[int, int] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _included(assignment) -> frozenset[int]:
    return assignment.included if isinstance(assignment, SolutionAssignment) else frozenset(assignment)


def check_valid(h: Hypergraph, assignment) -> CheckResult:
    inc = _included(assignment)
    bad = []
    for k, e in enumerate(h.edges):
        load = len(e.members & inc)
        if load > e.threshold:
            bad.append(f"edge {k}: {load} included > threshold {e.threshold}")
    if isinstance(assignment, SolutionAssignment) and not assignment.covers(h):
        bad.append("assignment does not decide every node exactly once")
    return CheckResult(not bad, bad)


def check_maximal(h: Hypergraph, assignment) -> CheckResult:
    """Every non-included node must have a tight edge: |e & I| == t_e."""
    inc = _included(assignment)
    res = CheckResult(True)
    for v in h.node_ids:
        if v in inc:
            continue
        for k in h.incidence[v]:
            e = h.edges[k]
            if len(e.members & inc) == e.threshold:
                res.witness[v] = k
                break
        else:
            res.ok = False
            res.violations.append(f"node {v} excluded without a tight edge")
    return res


def greedy_solve(h: Hypergraph, order: Sequence[int] | None = None) -> SolutionAssignment:
    """Scan nodes in ``order`` (ascending id by default), adding each that fits."""
    if order is None:
        order = h.node_ids
    load = [0] * h.m
    inc: set[int] = set()
    witness: dict[int, int] = {}
    for v in order:
        tight = next((k for k in h.incidence[v] if load[k] >= h.edges[k].threshold), None)
        if tight is None:
            inc.add(v)
            for k in h.incidence[v]:
                load[k] += 1
        else:
            witness[v] = tight
    # an early exclusion's witness stays tight because loads only grow
    return SolutionAssignment(frozenset(inc), h.node_set - inc, witness)


class EnumerationTooLarge(ValueError):
    pass


def enumerate_maximal(h: Hypergraph, max_n: int = 15) -> set[frozenset[int]]:
    """All maximal generalized independent sets, by branch and bound."""
    if h.n > max_n:
        raise EnumerationTooLarge(f"n = {h.n} > {max_n}")
    nodes = list(h.node_ids)
    inc_lists = [h.incidence[v] for v in nodes]
    thresholds = [e.threshold for e in h.edges]
    load = [0] * h.m
    chosen: list[int] = []
    family: set[frozenset[int]] = set()

    def fits(j: int) -> bool:
        return all(load[k] < thresholds[k] for k in inc_lists[j])

    def walk(j: int) -> None:
        if j == len(nodes):
            # maximal iff every skipped node is blocked now
            chosen_set = set(chosen)
            if all(nodes[i] in chosen_set or not fits(i) for i in range(len(nodes))):
                family.add(frozenset(chosen))
            return
        if fits(j):
            for k in inc_lists[j]:
                load[k] += 1
            chosen.append(nodes[j])
            walk(j + 1)
            chosen.pop()
            for k in inc_lists[j]:
                load[k] -= 1
        walk(j + 1)

    walk(0)
    return family


def is_maximal_gis(h: Hypergraph, assignment) -> bool:
    return bool(check_valid(h, assignment)) and bool(check_maximal(h, assignment))


@dataclass
class ProgressSummary:
    per_branch: dict[str, dict]
    iterations_total: int
    slope: float | None = None
    intercept: float | None = None
    points: list[tuple[float, float]] = field(default_factory=list)


def progress_stats(transcripts: Iterable, n_values: Sequence[int] | None = None) -> ProgressSummary:
    """Summarize per-iteration decided fractions by marking branch.

    ``transcripts`` yields objects with an ``iterations`` list of dicts holding
    ``branch``, ``decided`` and ``n_hat``. When ``n_values`` is given (one per
    transcript) the log-log regression of iteration count against log2 n is
    reported as ``slope``.
    """
    fractions: dict[str, list[float]] = defaultdict(list)
    counts: dict[str, int] = defaultdict(int)
    total = 0
    per_run: list[int] = []
    for tr in transcripts:
        its = tr.iterations if hasattr(tr, "iterations") else tr
        per_run.append(len(its))
        for it in its:
            total += 1
            counts[it["branch"]] += 1
            if it["n_hat"]:
                fractions[it["branch"]].append(it["decided"] / it["n_hat"])
    per_branch = {}
    for b, fr in sorted(fractions.items()):
        arr = np.asarray(fr)
        per_branch[b] = {
            "count": counts[b],
            "median": float(np.median(arr)),
            "mean": float(arr.mean()),
            "min": float(arr.min()),
            "positive_fraction": float((arr > 0).mean()),
        }
    for b in counts:
        per_branch.setdefault(b, {"count": counts[b]})
    summary = ProgressSummary(per_branch, total)
    if n_values is not None:
        pts = [(math.log(math.log2(n)), math.log(max(k, 1))) for n, k in zip(n_values, per_run)]
        summary.points = pts
        summary.slope, summary.intercept = loglog_slope([p[0] for p in pts], [p[1] for p in pts])
    return summary


def loglog_slope(log_log_n: Sequence[float], log_y: Sequence[float]) -> tuple[float, float]:
    fit = stats.linregress(np.asarray(log_log_n), np.asarray(log_y))
    return float(fit.slope), float(fit.intercept)
