"""Strong-diameter network decomposition, the per-color combiner and the
LOCAL-mode reference solver.

The decomposition runs exponential-shift carving on the *server graph* (two
nodes adjacent iff they share an edge), simulated over the server-client
network: one server-graph hop is a server -> client -> server relay. Shift
values are fixed point with ``L = ceil(log2 n)`` fractional bits, so every
message carries integers only.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .config import C_COL, C_DIAM, SolverConfig
from .congest import LOCAL, BipartiteNetwork, BitAccounting, Engine, SimulationError, node_uniform
from .core import DECIDED, EXCLUDED, GMIS, INCLUDED, MIS, STATE_CODE, ClusterProblem, ClusterResult, CoreRun
from .hypergraph import Hypergraph
from .oracle import SolutionAssignment


class DecompositionFailure(SimulationError):
    """Some server was never carved within the stage/phase schedule."""


# ---------------------------------------------------------------- partition


@dataclass
class ColoredPartition:
    clusters: list[frozenset[int]]
    colors: list[int]
    diameters: list[int] = field(default_factory=list)
    rounds: int = 0
    phases: int = 0
    truncated: int = 0
    retries: int = 0
    center_mismatch: int = 0
    seed: int = 0
    over_cap: bool = False
    # attempt 0 was complete and within the caps (nothing redrawn)
    first_draw_ok: bool = True

    @property
    def num_colors(self) -> int:
        return max(self.colors, default=0)

    @property
    def max_diameter(self) -> int:
        return max(self.diameters, default=0)

    def cluster_of(self) -> dict[int, int]:
        return {v: k for k, c in enumerate(self.clusters) for v in c}

    def by_color(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for k, c in enumerate(self.colors):
            out.setdefault(c, []).append(k)
        return out

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {"label": min(c), "color": col, "diameter": dia, "members": sorted(c)}
                for c, col, dia in zip(self.clusters, self.colors, self.diameters)
            ],
            "colors": self.num_colors,
            "max_diameter": self.max_diameter,
            "rounds": self.rounds,
            "phases": self.phases,
            "truncated": self.truncated,
            "retries": self.retries,
            "center_mismatch": self.center_mismatch,
            "seed": self.seed,
            "over_cap": self.over_cap,
            "first_draw_ok": self.first_draw_ok,
        }

    def within_caps(self, n: int) -> bool:
        """Colors and strong diameters inside the frozen C_COL / C_DIAM log2 n caps."""
        L = math.log2(max(n, 2))
        return self.num_colors <= C_COL * L and self.max_diameter <= C_DIAM * L

    @classmethod
    def single(cls, h: Hypergraph) -> "ColoredPartition":
        """Trivial partition: one cluster per connected component, one color."""
        comps = components(h, h.node_ids)
        return cls(comps, [1] * len(comps), [strong_diameter(h, c) for c in comps])


def server_graph(h: Hypergraph) -> dict[int, set[int]]:
    return {v: h.neighbours(v) for v in h.node_ids}


def components(h: Hypergraph, nodes) -> list[frozenset[int]]:
    """Connected components of the server graph induced on ``nodes``, ordered by smallest member."""
    keep = set(nodes)
    seen: set[int] = set()
    out = []
    for s in sorted(keep):
        if s in seen:
            continue
        comp = {s}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for k in h.incidence[v]:
                for w in h.edges[k].members:
                    if w in keep and w not in comp:
                        comp.add(w)
                        queue.append(w)
        seen |= comp
        out.append(frozenset(comp))
    return out


def _bfs_distances(adj: sp.csr_matrix, sources: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Hop distances from ``sources`` (rows) to every vertex; -1 when unreachable."""
    out = np.empty((len(sources), adj.shape[0]), dtype=np.int64)
    for lo in range(0, len(sources), chunk):
        d = csgraph.shortest_path(adj, unweighted=True, directed=False, indices=sources[lo : lo + chunk])
        d[np.isinf(d)] = -1
        out[lo : lo + chunk] = d.astype(np.int64)
    return out


def server_adjacency(h: Hypergraph, nodes) -> tuple[list[int], sp.csr_matrix]:
    """Server graph induced on ``nodes`` as a sparse adjacency matrix."""
    order = sorted(nodes)
    pos = {v: i for i, v in enumerate(order)}
    rows, cols = [], []
    for k, e in enumerate(h.edges):
        inside = [pos[v] for v in e.members if v in pos]
        if len(inside) > 1:
            rows.extend([k] * len(inside))
            cols.extend(inside)
    inc = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(max(h.m, 1), len(order)))
    adj = (inc.T @ inc).tocsr()
    adj.setdiag(0)
    adj.eliminate_zeros()
    return order, adj


def graph_diameter(adj: sp.csr_matrix) -> int:
    """Exact diameter of a connected graph by eccentricity bounding; -1 if disconnected.

    Each BFS from v tightens every node's eccentricity interval with
    ``max(d(v,w), ecc(v) - d(v,w)) <= ecc(w) <= ecc(v) + d(v,w)``; nodes whose
    interval can no longer change the answer are dropped. Usually a handful of
    BFS runs suffice instead of one per node.
    """
    n = adj.shape[0]
    if n <= 1:
        return 0
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, n, dtype=np.int64)
    live = np.ones(n, dtype=bool)
    best = 0
    pick_high = True
    degree = np.diff(adj.indptr)
    v = int(np.argmax(degree))
    while live.any():
        d = _bfs_distances(adj, np.array([v]))[0]
        if (d < 0).any():
            return -1
        ecc = int(d.max())
        best = max(best, ecc)
        lo = np.maximum(lo, np.maximum(d, ecc - d))
        hi = np.minimum(hi, ecc + d)
        live[v] = False
        best = max(best, int(lo.max()))
        live &= ~((hi <= best) | (lo == hi))
        if not live.any():
            break
        cand = np.nonzero(live)[0]
        v = int(cand[np.argmax(hi[cand])] if pick_high else cand[np.argmin(lo[cand])])
        pick_high = not pick_high
    return best


def strong_diameter(h: Hypergraph, cluster) -> int:
    """Diameter of the server graph induced on ``cluster``; -1 if disconnected."""
    if len(cluster) <= 1:
        return 0
    _, adj = server_adjacency(h, cluster)
    return graph_diameter(adj)


@dataclass
class PartitionReport:
    ok: bool
    violations: list[str]
    diameters: list[int]
    colors: int


def verify_partition(h: Hypergraph, partition: ColoredPartition, diam_cap: float | None = None) -> PartitionReport:
    bad = []
    seen: dict[int, int] = {}
    for k, c in enumerate(partition.clusters):
        for v in c:
            if v in seen:
                bad.append(f"node {v} in clusters {seen[v]} and {k}")
            seen[v] = k
    missing = h.node_set - set(seen)
    if missing:
        bad.append(f"unassigned nodes {sorted(missing)[:5]}")
    extra = set(seen) - h.node_set
    if extra:
        bad.append(f"unknown nodes {sorted(extra)[:5]}")
    if len(partition.colors) != len(partition.clusters):
        bad.append("color list length differs from cluster list length")
    for k, e in enumerate(h.edges):
        touched: dict[int, int] = {}
        for v in e.members:
            if v not in seen:
                continue
            cl = seen[v]
            col = partition.colors[cl]
            other = touched.setdefault(col, cl)
            if other != cl:
                bad.append(f"edge {k} spans clusters {other} and {cl} of color {col}")
                break
    diams = []
    for k, c in enumerate(partition.clusters):
        dia = strong_diameter(h, c)
        diams.append(dia)
        if dia < 0:
            bad.append(f"cluster {k} is disconnected")
        elif diam_cap is not None and dia > diam_cap:
            bad.append(f"cluster {k} diameter {dia} > cap {diam_cap:g}")
    return PartitionReport(not bad, bad, diams, partition.num_colors)


# ---------------------------------------------------------------- carving


def decomposition_schedule(n: int, c: float = 4.0, m: int | None = None) -> list[tuple[int, int, float]]:
    """(stage, phases, beta) per stage."""
    n = max(n, 2)
    if m is None:
        m = max(1, math.ceil(math.log(c * n)))
    stages = max(1, math.ceil(math.log(n)))
    out = []
    for i in range(1, stages + 1):
        base = c * n / math.e**i
        out.append((i, math.ceil(2 * base ** (1 / m)), math.log(base) / m))
    return out


def r_max_for(n: int, c_r: float = 4.0) -> float:
    return c_r * max(math.log(max(n, 2)), 1.0)


def _push(top: list, g: int, src: int) -> bool:
    """Insert (g, src) into a top-2 list with distinct sources; True if it changed.

    Order: larger g first, smaller source id on ties.
    """
    if top and top[0][1] == src:
        if g <= top[0][0]:
            return False
        top[0] = (g, src)
        return True
    if len(top) > 1 and top[1][1] == src:
        if g <= top[1][0]:
            return False
        top.pop()
    if not top or (g, -src) > (top[0][0], -top[0][1]):
        top.insert(0, (g, src))
    elif len(top) == 1 or (g, -src) > (top[1][0], -top[1][1]):
        top[1:] = [(g, src)]
        return True
    else:
        return False
    del top[2:]
    return True


class _Carver:
    def __init__(self, h: Hypergraph, net: BipartiteNetwork, engine: Engine, seed: int, c_r: float):
        self.h = h
        self.net = net
        self.engine = engine
        self.seed = seed
        n = h.n
        self.r_max = r_max_for(n, c_r)
        self.frac = engine.acct.frac_bits
        self.unit = 2**self.frac
        self.q_max = int(self.r_max * self.unit)
        self.alive = set(h.node_ids)
        # clients learn carved members and stop relaying to them
        self.client_alive = {net.client_of(k): set(e.members) for k, e in enumerate(h.edges)}
        split = engine.acct.table["SHIFT2"] > engine.budget
        self.rps = 2 if split else 1
        self.slots = 2 * math.floor(self.r_max) + 2
        self.phase_len = self.rps * self.slots + 1
        self.truncated = 0

    def _send(self, node: int, top: list, targets) -> list:
        if self.rps == 1:
            flat = []
            for g, s in top:
                flat += [s, g]
            kind = "SHIFT2" if len(top) == 2 else "SHIFT"
            return [[(node, t, (kind, *flat)) for t in targets]]
        return [[(node, t, ("SHIFT", s, g)) for t in targets] for g, s in top]

    def phase(self, label, beta: float) -> tuple[set[int], dict[int, int]]:
        net, eng = self.net, self.engine
        start = eng.rounds
        top: dict[int, list] = {}
        for v in sorted(self.alive):
            u = node_uniform(self.seed, v, "shift", *label)
            r = -math.log1p(-u) / beta
            if r > self.r_max:
                r = self.r_max
                self.truncated += 1
            top[v] = [(min(int(r * self.unit), self.q_max), v)]
        changed = set(self.alive)
        for _ in range(self.slots):
            if not changed:
                break
            batches: list[list] = [[] for _ in range(self.rps)]
            for x in sorted(changed):
                if net.is_client(x):
                    targets = sorted(self.client_alive[x])
                else:
                    targets = [c for c in net.adjacency[x]]
                for k, batch in enumerate(self._send(x, top[x], targets)):
                    batches[k].extend(batch)
            changed = set()
            for batch in batches:
                for dst, msgs in eng.exchange(batch).items():
                    is_server = not net.is_client(dst)
                    cur = top.setdefault(dst, [])
                    for src, msg in msgs:
                        vals = msg[1:]
                        for j in range(0, len(vals), 2):
                            s, g = vals[j], vals[j + 1]
                            if is_server:
                                g -= self.unit
                                if g < 0:
                                    continue
                            if _push(cur, g, s):
                                changed.add(dst)
        if changed:
            raise SimulationError("shift propagation overran the phase schedule")
        carved = set()
        center = {}
        for v in self.alive:
            t = top[v]
            if len(t) == 1 or t[0][0] - t[1][0] > self.unit:
                carved.add(v)
                center[v] = t[0][1]
        out = [(v, c, ("STATUS", STATE_CODE[EXCLUDED])) for v in sorted(carved) for c in net.adjacency[v]]
        for c, msgs in eng.exchange(out).items():
            for src, _ in msgs:
                self.client_alive[c].discard(src)
        eng.pad_to(start, self.phase_len)
        self.alive -= carved
        return carved, center


def decompose(h: Hypergraph, c_param: float = 4.0, m_param: int | None = None, seed: int = 0, c_r: float = 4.0, c_msg: int = 8, engine: Engine | None = None) -> ColoredPartition:
    """Carve the server graph into colored clusters of small strong diameter.

    Each stage/phase carves a block; nodes whose best shifted value beats the
    runner-up by more than one hop join the block. Connected components of a
    block are its clusters and share the block's color. Raises
    :class:`DecompositionFailure` if a node survives every phase.
    """
    net = BipartiteNetwork.build(h)
    if engine is None:
        acct = BitAccounting(h.n, h.m, c_msg, r_max_for(h.n, c_r))
        engine = Engine(net, c_msg=c_msg, accounting=acct)
    carver = _Carver(h, net, engine, seed, c_r)
    start = engine.rounds
    clusters: list[frozenset[int]] = []
    colors: list[int] = []
    mismatch = 0
    phases = 0
    color = 0
    for stage, count, beta in decomposition_schedule(h.n, c_param, m_param):
        for p in range(count):
            if not carver.alive:
                break
            phases += 1
            carved, center = carver.phase((stage, p), beta)
            if not carved:
                continue
            color += 1
            comps = components(h, carved)
            for comp in comps:
                clusters.append(comp)
                colors.append(color)
                if len({center[v] for v in comp}) != 1:
                    mismatch += 1
    if carver.alive:
        raise DecompositionFailure(f"{len(carver.alive)} nodes never carved (seed {seed})")
    diams = [strong_diameter(h, c) for c in clusters]
    return ColoredPartition(clusters, colors, diams, engine.rounds - start, phases, carver.truncated, 0, mismatch, seed)


def derived_seed(seed: int, attempt: int) -> int:
    return seed if attempt == 0 else int(node_uniform(seed, -1, "retry", attempt) * 2**31)


def decompose_with_retry(h: Hypergraph, config: SolverConfig | None = None, seed: int = 0, engine: Engine | None = None) -> ColoredPartition:
    """Decompose, redrawing with a derived seed on failure.

    A complete partition that breaks the calibrated color or diameter cap is
    also redrawn; if every attempt is over the cap the last complete one is
    returned with ``over_cap`` set. Rounds of discarded attempts stay charged.
    """
    cfg = config or SolverConfig()
    last = None
    fallback = None
    for attempt in range(cfg.decomp_retries + 1):
        try:
            part = decompose(h, cfg.c_decomp, cfg.m_decomp, derived_seed(seed, attempt), cfg.c_r, cfg.c_msg, engine)
        except DecompositionFailure as exc:
            last = exc
            continue
        part.retries = attempt
        part.first_draw_ok = attempt == 0 and part.within_caps(h.n)
        if part.within_caps(h.n):
            return part
        part.over_cap = True
        fallback = part
    if fallback is not None:
        return fallback
    raise DecompositionFailure(f"no complete decomposition after {cfg.decomp_retries} retries: {last}")


# ---------------------------------------------------------------- combiner


@dataclass
class CombineResult:
    assignment: SolutionAssignment
    iterations: list[dict]
    cluster_runs: list[dict]
    agreement: float = 1.0
    capped: bool = False


def cluster_d_cap(r_max: float) -> int:
    return 4 * math.floor(r_max) + 4


class _Combiner:
    """Color-by-color residual construction shared by both combiners."""

    def __init__(self, h: Hypergraph, partition: ColoredPartition, engine: Engine):
        self.h = h
        self.part = partition
        self.engine = engine
        self.net = engine.net
        self.cluster_of = partition.cluster_of()
        self.color_of = {v: partition.colors[k] for v, k in self.cluster_of.items()}
        self.decision: dict[int, str] = {}
        self.witness: dict[int, int] = {}
        # client-side caches filled by the announce round
        self.member_color: dict[int, dict[int, int]] = {}

    def announce_colors(self) -> None:
        out = [(v, c, ("COLOR", self.color_of[v], 0)) for v in self.h.node_ids for c in self.net.adjacency[v]]
        for c, msgs in self.engine.exchange(out).items():
            self.member_color[c] = {src: msg[1] for src, msg in msgs}

    def residual(self, color: int) -> dict[int, tuple[bool, int, tuple[int, ...]]]:
        """Client-side residual computation and the reply round.

        Returns client -> (exists, residual threshold, color members).
        """
        res = {}
        out = []
        for c, colors in self.member_color.items():
            cur = tuple(sorted(v for v, col in colors.items() if col == color))
            if not cur:
                continue
            e = self.h.edges[self.net.edge_of(c)]
            later = sum(1 for col in colors.values() if col > color)
            earlier_x = sum(1 for v, col in colors.items() if col < color and self.decision[v] == EXCLUDED)
            y = sum(1 for v, col in colors.items() if col < color and self.decision[v] == INCLUDED)
            exists = later + earlier_x < len(e) - e.threshold
            t_res = e.threshold - y
            res[c] = (exists, t_res, cur)
            out.extend((c, v, ("RESIDUAL", int(exists), t_res)) for v in cur)
        self.engine.exchange(out)
        return res

    def pre_exclude(self, res) -> set[int]:
        """Members of a residual edge with no threshold left cannot join."""
        pre: dict[int, int] = {}
        for c, (exists, t_res, cur) in sorted(res.items()):
            if exists and t_res == 0:
                for v in cur:
                    pre.setdefault(v, self.net.edge_of(c))
        out = [(v, c, ("STATUS", STATE_CODE[EXCLUDED])) for v in sorted(pre) for c in self.net.adjacency[v]]
        self.engine.exchange(out)
        for v, k in pre.items():
            self.decision[v] = EXCLUDED
            self.witness[v] = k
        return set(pre)

    def problems(self, color: int, res, pre: set[int], d_cap: int) -> list[ClusterProblem]:
        out = []
        scopes: set[int] = set()
        for k in self.part.by_color()[color]:
            members = self.part.clusters[k]
            edges = {}
            relays = []
            for c in sorted({c for v in members for c in self.net.adjacency[v]}):
                exists, t_res, cur = res[c]
                if len(cur) < 2:
                    continue
                if c in scopes:
                    raise SimulationError(f"client {c} shared by two clusters of color {color}")
                scopes.add(c)
                live = frozenset(v for v in cur if v not in pre)
                if exists and len(live) > t_res:
                    edges[c] = (live, t_res)
                else:
                    relays.append(c)
            decided = {v: EXCLUDED for v in members if v in pre}
            out.append(ClusterProblem(self.net, tuple(sorted(members)), edges, tuple(relays), decided, d_cap))
        return out

    def announce_decisions(self, nodes) -> None:
        out = []
        for v in sorted(nodes):
            code = STATE_CODE[self.decision[v]]
            out.extend((v, c, ("STATUS", code)) for c in self.net.adjacency[v])
        self.engine.exchange(out)

    def assignment(self) -> SolutionAssignment:
        inc = frozenset(v for v, d in self.decision.items() if d == INCLUDED)
        return SolutionAssignment(inc, self.h.node_set - inc, dict(self.witness))


def combine_per_color(h: Hypergraph, partition: ColoredPartition, mode: str = MIS, config: SolverConfig | None = None, seed: int = 0, engine: Engine | None = None) -> CombineResult:
    """Solve color by color; same-colored clusters run side by side.

    ``mode`` selects the core solver (``"mis"`` or ``"gmis"``).
    """
    cfg = config or SolverConfig()
    net = BipartiteNetwork.build(h)
    r_max = r_max_for(h.n, cfg.c_r)
    acct = engine.acct if engine is not None else BitAccounting(h.n, h.m, cfg.c_msg, r_max)
    engine = engine or Engine(net, c_msg=cfg.c_msg, accounting=acct)
    d_cap = cluster_d_cap(r_max)
    comb = _Combiner(h, partition, engine)
    comb.announce_colors()
    iterations: list[dict] = []
    runs: list[dict] = []
    capped = False
    for color in sorted(partition.by_color()):
        res = comb.residual(color)
        pre = comb.pre_exclude(res)
        engines = []
        for k, prob in enumerate(comb.problems(color, res, pre, d_cap)):
            sub = Engine(net, c_msg=cfg.c_msg, accounting=acct, record_messages=engine.messages is not None)
            run = CoreRun(prob, mode, cfg, seed, sub)
            result: ClusterResult = run.run()
            engines.append(sub)
            capped |= result.capped
            for v in result.included:
                comb.decision[v] = INCLUDED
            for v in result.excluded:
                comb.decision.setdefault(v, EXCLUDED)
            comb.witness.update(result.witness)
            for it in result.iterations:
                iterations.append({"color": color, "cluster": min(prob.servers), **it})
            runs.append({"color": color, "cluster": min(prob.servers), "size": len(prob.servers), "edges": len(prob.edges),
                         "rounds": sub.rounds, "tree_rounds": result.tree_rounds, "iterations": len(result.iterations)})
            if result.capped:
                for v in prob.servers:
                    comb.decision.setdefault(v, EXCLUDED)
        engine.merge_parallel(engines)
        comb.announce_decisions(v for k in partition.by_color()[color] for v in partition.clusters[k])
    return CombineResult(comb.assignment(), iterations, runs, 1.0, capped)


# ---------------------------------------------------------------- LOCAL reference


def _local_greedy(facts) -> dict[int, bool]:
    """Ascending-id greedy over flooded facts; shared by every cluster node."""
    nodes = sorted(members[0] for key, members, t in facts if t == -1)
    edges = [(set(members), t) for key, members, t in sorted(facts) if t >= 0]
    inc_of: dict[int, list[int]] = {v: [] for v in nodes}
    for k, (mem, _) in enumerate(edges):
        for v in mem:
            inc_of.setdefault(v, []).append(k)
    load = [0] * len(edges)
    out = {members[0]: False for key, members, t in facts if t == -2}
    for v in nodes:
        ok = all(load[k] < edges[k][1] for k in inc_of[v])
        out[v] = ok
        if ok:
            for k in inc_of[v]:
                load[k] += 1
    return out


def _flood_messages(engine: Engine, scope, know: dict[int, set], d_cap: int) -> None:
    """Explicit flooding: each node forwards the facts it learned last round."""
    fresh = {v: set(k) for v, k in know.items()}
    start = engine.rounds
    for _ in range(d_cap):
        out = [(v, w, ("FLOOD", tuple(sorted(fresh[v])))) for v in sorted(scope) if fresh[v] for w in scope[v]]
        if not out:
            break
        fresh = {v: set() for v in scope}
        for dst, msgs in engine.exchange(out).items():
            for _, msg in msgs:
                for fact in msg[1]:
                    if fact not in know[dst]:
                        know[dst].add(fact)
                        fresh[dst].add(fact)
    engine.pad_to(start, d_cap)


def _flood_replay(engine: Engine, scope, know: dict[int, set], d_cap: int) -> dict[int, frozenset]:
    """Same rounds, counts and costs as :func:`_flood_messages`, from BFS distances.

    A fact that starts at node o reaches x in round dist(o, x), and x forwards
    it to all its neighbours one round later.
    """
    nodes = sorted(scope)
    pos = {v: i for i, v in enumerate(nodes)}
    rows = [pos[v] for v in nodes for w in scope[v]]
    cols = [pos[w] for v in nodes for w in scope[v]]
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(nodes), len(nodes)))
    facts = [(f, pos[v]) for v in nodes for f in sorted(know[v])]
    origins = np.array(sorted({o for _, o in facts}), dtype=np.int64)
    opos = {o: i for i, o in enumerate(origins)}
    dist = _bfs_distances(adj, origins)
    fact_dist = dist[[opos[o] for _, o in facts]]  # facts x nodes
    tag, nid = engine.acct.tag_bits, engine.acct.widths["nid"]
    weight = np.array([(len(f[1]) + 2) * nid for f, _ in facts], dtype=np.int64)
    reach = (fact_dist >= 0) & (fact_dist < d_cap)
    horizon = int(fact_dist[reach].max()) + 1 if reach.any() else 0
    payload = np.zeros((max(horizon, 1), len(nodes)), dtype=np.int64)
    fi, xi = np.nonzero(reach)
    np.add.at(payload, (fact_dist[fi, xi], xi), weight[fi])
    degree = np.diff(adj.indptr)
    start = engine.rounds
    for r in range(horizon):
        senders = payload[r] > 0
        count = int(degree[senders].sum())
        if not count:
            break
        engine._tick(count, int(tag + payload[r][senders & (degree > 0)].max()) if (senders & (degree > 0)).any() else 0)
    engine.pad_to(start, d_cap)
    known = (fact_dist >= 0) & (fact_dist <= d_cap)
    if known.all():
        everything = frozenset(f for f, _ in facts)
        return {v: everything for v in nodes}
    packed = np.packbits(known, axis=0)
    views: dict[bytes, frozenset] = {}
    out = {}
    for v in nodes:
        col = known[:, pos[v]]
        key = packed[:, pos[v]].tobytes()
        if key not in views:
            views[key] = frozenset(f for (f, _), ok in zip(facts, col) if ok)
        out[v] = views[key]
    return out


def local_reference_solve(h: Hypergraph, partition: ColoredPartition, config: SolverConfig | None = None, engine: Engine | None = None) -> CombineResult:
    """Flood each cluster's residual instance, then decide locally by greedy.

    Runs in LOCAL mode: the flooding messages are unbounded. Every cluster
    node computes the solution of its whole cluster; ``agreement`` is the
    fraction of clusters in which all nodes computed the same solution.
    """
    cfg = config or SolverConfig()
    net = BipartiteNetwork.build(h)
    r_max = r_max_for(h.n, cfg.c_r)
    acct = BitAccounting(h.n, h.m, cfg.c_msg, r_max)
    engine = engine or Engine(net, mode=LOCAL, c_msg=cfg.c_msg, accounting=acct)
    d_cap = cluster_d_cap(r_max)
    comb = _Combiner(h, partition, engine)
    comb.announce_colors()
    runs = []
    agree = 0
    total = 0
    for color in sorted(partition.by_color()):
        res = comb.residual(color)
        pre = comb.pre_exclude(res)
        engines = []
        for prob in comb.problems(color, res, pre, d_cap):
            sub = Engine(net, mode=LOCAL, c_msg=cfg.c_msg, accounting=acct, record_messages=engine.messages is not None)
            scope = prob.scope()
            know: dict[int, set] = {v: set() for v in scope}
            for v in prob.servers:
                know[v].add((v, (v,), -2 if v in pre else -1))
            for c, (mem, t_res) in prob.edges.items():
                know[c].add((c, tuple(sorted(mem)), t_res))
            if sub.messages is not None:
                _flood_messages(sub, scope, know, d_cap)
            else:
                know = _flood_replay(sub, scope, know, d_cap)
            solved: dict[frozenset, dict[int, bool]] = {}
            views = {}
            for v in prob.servers:
                k = frozenset(know[v])
                if k not in solved:
                    solved[k] = _local_greedy(k)
                views[v] = solved[k]
            ref = views[prob.servers[0]]
            total += 1
            agree += all(view == ref for view in views.values())
            for v in prob.servers:
                if v not in pre:
                    comb.decision[v] = INCLUDED if views[v][v] else EXCLUDED
            engines.append(sub)
            runs.append({"color": color, "cluster": min(prob.servers), "size": len(prob.servers), "rounds": sub.rounds})
        engine.merge_parallel(engines)
        comb.announce_decisions(v for k in partition.by_color()[color] for v in partition.clusters[k])
    asg = comb.assignment()
    return CombineResult(asg, [], runs, agree / total if total else 1.0, False)
