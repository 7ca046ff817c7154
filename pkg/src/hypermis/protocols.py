"""Distributed building blocks: leader election, BFS trees and tree aggregation.

All protocols run over a *scope*: a mapping from node to the neighbours it
may talk to (a restriction of the bipartite network). Ties are always broken
towards the smaller id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .congest import Engine, Protocol

Scope = Mapping[int, Sequence[int]]

SUM = "sum"
MAX = "max"
OR = "or"


@dataclass(frozen=True)
class TreeOverlay:
    root: int
    parent: Mapping[int, int | None]
    depth: Mapping[int, int]
    children: Mapping[int, tuple[int, ...]]

    @property
    def nodes(self) -> list[int]:
        return sorted(self.parent)

    @property
    def height(self) -> int:
        return max(self.depth.values(), default=0)

    def covers(self, nodes: Iterable[int]) -> bool:
        return all(v in self.parent for v in nodes)


class LeaderElection(Protocol):
    def __init__(self, scope: Scope):
        self.scope = scope
        self.best = {v: v for v in scope}

    def start(self):
        return [(v, w, ("LEADER", v)) for v in self.scope for w in self.scope[v]]

    def step(self, node, inbox):
        top = max(msg[1] for _, msg in inbox)
        if top <= self.best[node]:
            return []
        self.best[node] = top
        return [(node, w, ("LEADER", top)) for w in self.scope[node]]


def elect_leader(engine: Engine, scope: Scope, d_cap: int | None = None) -> dict[int, int]:
    """Max-id flooding. With ``d_cap`` the run is padded to exactly that many rounds."""
    proto = LeaderElection(scope)
    start = engine.rounds
    engine.run(proto, max_rounds=d_cap)
    if d_cap is not None:
        engine.pad_to(start, d_cap)
    return proto.best


class BfsTree(Protocol):
    def __init__(self, scope: Scope, root: int):
        self.scope = scope
        self.root = root
        self.parent: dict[int, int | None] = {root: None}
        self.depth = {root: 0}
        self.children: dict[int, list[int]] = {v: [] for v in scope}

    def start(self):
        return [(self.root, w, ("BFS", 0, self.root)) for w in self.scope[self.root]]

    def step(self, node, inbox):
        if node in self.parent:
            for src, (_, _, par) in inbox:
                if par == node:
                    self.children[node].append(src)
            return []
        src, (_, dist, _) = min(inbox)
        self.parent[node] = src
        self.depth[node] = dist + 1
        return [(node, w, ("BFS", dist + 1, src)) for w in self.scope[node]]


def build_bfs_tree(engine: Engine, scope: Scope, root: int, d_cap: int | None = None) -> TreeOverlay:
    proto = BfsTree(scope, root)
    start = engine.rounds
    engine.run(proto, max_rounds=d_cap)
    if d_cap is not None:
        engine.pad_to(start, d_cap)
    children = {v: tuple(sorted(cs)) for v, cs in proto.children.items() if v in proto.parent}
    return TreeOverlay(root, dict(proto.parent), dict(proto.depth), children)


def _combine_sum(a, b):
    return a + b


def _combine_or(a, b):
    return a | b


def _combine_max(a, b):
    # values are (d, id) pairs or None; larger d wins, then smaller id
    if a is None:
        return b
    if b is None:
        return a
    if a[0] != b[0]:
        return a if a[0] > b[0] else b
    return a if a[1] < b[1] else b


_OPS: dict[str, tuple[Callable, object]] = {
    SUM: (_combine_sum, 0),
    OR: (_combine_or, 0),
    MAX: (_combine_max, None),
}


def _encode(op: str, value) -> tuple:
    if op == MAX:
        return ("AGGMAX", 0, 0) if value is None else ("AGGMAX", value[0] + 1, value[1])
    return ("AGG", int(value))


def _decode(op: str, msg: tuple):
    if op == MAX:
        return None if msg[1] == 0 else (msg[1] - 1, msg[2])
    return msg[1]


class TreeAggregate(Protocol):
    """Converge-cast to the root followed by a broadcast down the tree.

    With ``width > 1`` the values are vectors summed coordinate-wise; the
    coordinates are pipelined one per round on every tree link.
    """

    def __init__(self, tree: TreeOverlay, values: Mapping[int, object], op: str = SUM, width: int = 1):
        if width > 1 and op != SUM:
            raise ValueError("vector aggregation supports sum only")
        self.tree = tree
        self.op = op
        self.width = width
        combine, ident = _OPS[op]
        self.combine = combine
        nodes = tree.nodes
        if width == 1:
            self.acc = {v: [values.get(v, ident)] for v in nodes}
        else:
            self.acc = {v: list(values.get(v, (0,) * width)) for v in nodes}
        self.pending = {v: [len(tree.children[v])] * width for v in nodes}
        self.sent_up = {v: 0 for v in nodes}
        self.result: dict[int, list] = {}
        self.sent_down = {v: 0 for v in nodes}
        self._wake: set[int] = set()

    def _up_ready(self, v: int) -> bool:
        k = self.sent_up[v]
        return k < self.width and self.pending[v][k] == 0

    def _emit(self, v: int) -> list:
        out = []
        tree = self.tree
        if v == tree.root or v in self.result:
            src = self.result.get(v)
            k = self.sent_down[v]
            if src is not None and k < len(src) and tree.children[v]:
                msg = _encode(self.op, src[k]) if self.width == 1 else ("AGGVEC", k, src[k])
                out = [(v, c, msg) for c in tree.children[v]]
                self.sent_down[v] = k + 1
                if k + 1 < len(src):
                    self._wake.add(v)
            return out
        if self._up_ready(v):
            k = self.sent_up[v]
            val = self.acc[v][k]
            msg = _encode(self.op, val) if self.width == 1 else ("AGGVEC", k, val)
            out = [(v, tree.parent[v], msg)]
            self.sent_up[v] = k + 1
            if self._up_ready(v):
                self._wake.add(v)
        return out

    def _root_check(self) -> None:
        r = self.tree.root
        if r not in self.result and all(p == 0 for p in self.pending[r]):
            self.result[r] = list(self.acc[r])

    def start(self):
        self._root_check()
        out = []
        for v in self.tree.nodes:
            out.extend(self._emit(v))
        return out

    def wakeups(self):
        w, self._wake = self._wake, set()
        return w

    def step(self, node, inbox):
        tree = self.tree
        for src, msg in inbox:
            if src == tree.parent.get(node):
                k, val = (0, _decode(self.op, msg)) if self.width == 1 else (msg[1], msg[2])
                self.result.setdefault(node, []).append(val)
            else:
                k, val = (0, _decode(self.op, msg)) if self.width == 1 else (msg[1], msg[2])
                self.acc[node][k] = self.combine(self.acc[node][k], val)
                self.pending[node][k] -= 1
        if node == tree.root:
            self._root_check()
        return self._emit(node)

    def finished(self):
        return len(self.result) == len(self.acc) and all(len(r) == self.width for r in self.result.values())


def aggregation_schedule(tree: TreeOverlay, width: int) -> list[int]:
    """Per-round message counts of one :class:`TreeAggregate` run, in closed form.

    Going up, node v sends coordinate k in round
    ``s_k(v) = max(s_{k-1}(v), max over children c of s_k(c)) + 1``; the root
    holds everything after ``R = max_c s_{w-1}(c)`` rounds, and a node at depth
    d receives coordinate k on the way down in round ``R + d + k``. The
    pattern does not depend on the aggregated values.
    """
    nodes = tree.nodes
    if len(nodes) <= 1:
        return []
    idx = {v: i for i, v in enumerate(nodes)}
    depth = np.array([tree.depth[v] for v in nodes], dtype=np.int64)
    parent = np.array([idx[tree.parent[v]] if tree.parent[v] is not None else -1 for v in nodes], dtype=np.int64)
    ks = np.arange(width, dtype=np.int64)
    child_max = np.zeros((len(nodes), width), dtype=np.int64)
    send = np.zeros((len(nodes), width), dtype=np.int64)
    height = int(depth.max())
    for d in range(height, 0, -1):
        level = np.nonzero(depth == d)[0]
        s = ks + 1 + np.maximum(0, np.maximum.accumulate(child_max[level] - ks, axis=1))
        send[level] = s
        np.maximum.at(child_max, parent[level], s)
    root = idx[tree.root]
    ready = int(child_max[root, -1])
    up = np.bincount(send[depth > 0].ravel(), minlength=ready + 1)
    per_depth = np.bincount(depth[depth > 0], minlength=height + 1)
    total = ready + height + width - 1
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[: len(up)] += up
    for d in range(1, height + 1):
        counts[ready + d : ready + d + width] += per_depth[d]
    return [int(c) for c in counts[1:]]


def _schedule(engine: Engine, tree: TreeOverlay, width: int) -> list[int]:
    cache = engine.__dict__.setdefault("_agg_schedules", {})
    key = (id(tree), width)
    hit = cache.get(key)
    if hit is not None and hit[0] is tree:
        return hit[1]
    cache[key] = (tree, aggregation_schedule(tree, width))
    return cache[key][1]


def charge(engine: Engine, tree: TreeOverlay, width: int, kind: str) -> None:
    """Account the rounds of one tree aggregation without running it."""
    msg = {"AGG": ("AGG", 0), "AGGMAX": ("AGGMAX", 0, 0), "AGGVEC": ("AGGVEC", 0, 0)}[kind]
    engine.replay(_schedule(engine, tree, width), engine.acct.cost(msg))


def _fold(op: str, values: Iterable):
    combine, acc = _OPS[op]
    for x in values:
        acc = combine(acc, x)
    return acc


def aggregate(engine: Engine, tree: TreeOverlay, local_values: Mapping[int, object], combine: str = SUM):
    """Aggregate over the tree and return the value every node ends up holding.

    Unless the engine records individual messages, the run is replayed from
    its cached schedule: same rounds, message counts and bit costs as the
    message-level protocol, with the result folded directly.
    """
    if engine.messages is not None:
        res = converge_broadcast(engine, tree, local_values, combine)
        vals = set(res.values())
        if len(vals) != 1:
            raise AssertionError(f"tree nodes disagree on an aggregate: {vals}")
        return vals.pop()
    kind = ("AGGMAX", 0, 0) if combine == MAX else ("AGG", 0)
    engine.replay(_schedule(engine, tree, 1), engine.acct.cost(kind))
    return _fold(combine, (local_values[v] for v in local_values if v in tree.parent))


def aggregate_vector(engine: Engine, tree: TreeOverlay, contributions: Mapping[int, Mapping[int, int]], index_range: Sequence[int]) -> dict[int, int]:
    """Single-valued form of :func:`count_ui` with the same replay shortcut."""
    idx = list(index_range)
    if engine.messages is not None or not idx:
        res = count_ui(engine, tree, contributions, idx)
        vals = {tuple(sorted(r.items())) for r in res.values()}
        if len(vals) != 1:
            raise AssertionError("tree nodes disagree on the class counts")
        return dict(vals.pop())
    width = len(idx)
    kind = ("AGG", 0) if width == 1 else ("AGGVEC", 0, 0)
    engine.replay(_schedule(engine, tree, width), engine.acct.cost(kind))
    out = dict.fromkeys(idx, 0)
    for v, c in contributions.items():
        if v in tree.parent:
            for i, x in c.items():
                if i in out:
                    out[i] += x
    return out


def converge_broadcast(engine: Engine, tree: TreeOverlay, local_values: Mapping[int, object], combine: str = SUM) -> dict[int, object]:
    """Aggregate ``local_values`` over the tree; every tree node learns the result.

    Nodes absent from ``local_values`` contribute the identity but still relay.
    """
    proto = TreeAggregate(tree, local_values, combine)
    engine.run(proto)
    return {v: r[0] for v, r in proto.result.items()}


def count_ui(engine: Engine, tree: TreeOverlay, contributions: Mapping[int, Mapping[int, int]], index_range: Sequence[int]) -> dict[int, dict[int, int]]:
    """Pipelined per-class edge counts; every tree node learns the full vector."""
    idx = list(index_range)
    if not idx:
        return {v: {} for v in tree.nodes}
    values = {v: tuple(c.get(i, 0) for i in idx) for v, c in contributions.items() if c}
    if len(idx) == 1:
        proto = TreeAggregate(tree, {v: t[0] for v, t in values.items()}, SUM)
    else:
        proto = TreeAggregate(tree, values, SUM, width=len(idx))
    engine.run(proto)
    return {v: dict(zip(idx, r)) for v, r in proto.result.items()}
