"""Shared per-cluster engine of the MIS and GMIS solvers.

The two algorithms differ only in how an edge is classed (by residual size
for MIS, by residual threshold for GMIS), which classes are inspected, the
marking polynomial, and which degree MaxD maximizes. Everything else,
including the client-side bookkeeping, is common.

Client bookkeeping: each edge-client keeps the decision state of its members
and the remaining threshold ``t_rem = t - #included members``. An edge binds
while it has more undecided members than ``t_rem``; it belongs to the active
subhypergraph H' while it has more *active* members than ``t_rem``. With MIS
thresholds (t = |e| - 1) this is exactly the induced subhypergraph, and with
general thresholds it is the strict subhypergraph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .config import SolverConfig
from .congest import BipartiteNetwork, Engine, node_uniform
from .hypergraph import BY_SIZE, BY_THRESHOLD, Hypergraph, class_range, degree_profile, is_equitable, strict_subhypergraph
from .protocols import MAX, OR, SUM, aggregate, aggregate_vector, build_bfs_tree, charge, elect_leader

MIS = "mis"
GMIS = "gmis"

ACTIVE, IDLE, ELECTED, INCLUDED, EXCLUDED = "A", "I", "E", "N", "X"
STATE_CODE = {ACTIVE: 0, IDLE: 1, ELECTED: 2, INCLUDED: 3, EXCLUDED: 4}
DECIDED = (INCLUDED, EXCLUDED)

SINGLE, MID, HIGH = "single", "mid", "high"


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class AHatResult:
    a_hat: float
    achieved_sum: float
    clamped: bool
    lower: float = 0.0
    upper: float = 0.0


def _poly(mode: str, u: Mapping[int, int]):
    if mode == MIS:
        terms = [(i * c, i - 1) for i, c in u.items() if c]
    else:
        terms = [(c, i) for i, c in u.items() if c]
    return lambda a: sum(c * a**p for c, p in terms), bool(terms)


def compute_a_hat(mode: str, n_prime: int, u: Mapping[int, int], band_exponent: float = 8, halvings: int = 64) -> AHatResult:
    """Bisection for a_hat with n'/L^k <= S(a_hat) <= 2n'/L^k, L = log2 n'.

    S is sum_i i*u_i*a^(i-1) for MIS and sum_i u_i*a^i for GMIS. The target is
    the band midpoint 1.5 n'/L^k. When even S(1) is below the band, the
    result is clamped to 1.
    """
    if n_prime < 2:
        return AHatResult(1.0, 0.0, True)
    lower = n_prime / math.log2(n_prime) ** band_exponent
    upper = 2 * lower
    S, nonzero = _poly(mode, u)
    if not nonzero:
        return AHatResult(1.0, 0.0, True, lower, upper)
    s1 = S(1.0)
    if s1 < lower:
        return AHatResult(1.0, s1, True, lower, upper)
    target = 1.5 * lower
    if s1 <= target:
        return AHatResult(1.0, s1, False, lower, upper)
    lo, hi = 0.0, 1.0
    for _ in range(halvings):
        mid = (lo + hi) / 2
        if S(mid) < target:
            lo = mid
        else:
            hi = mid
    a = (lo + hi) / 2
    return AHatResult(a, S(a), False, lower, upper)


def compute_a_hat_mis(n_prime: int, u: Mapping[int, int], band_exponent: float = 8) -> AHatResult:
    return compute_a_hat(MIS, n_prime, u, band_exponent)


def compute_a_hat_gmis(n_prime: int, u: Mapping[int, int], band_exponent: float = 8) -> AHatResult:
    return compute_a_hat(GMIS, n_prime, u, band_exponent)


@dataclass
class ClusterProblem:
    """One connected piece of the residual instance handed to a core solver.

    ``edges`` maps an edge-client id to its residual members (all in
    ``servers``) and residual threshold; ``relays`` are further clients used
    only to keep the cluster's communication graph connected. ``decided``
    holds servers whose decision was fixed before the solver started.
    """

    net: BipartiteNetwork
    servers: tuple[int, ...]
    edges: dict[int, tuple[frozenset[int], int]]
    relays: tuple[int, ...] = ()
    decided: dict[int, str] = field(default_factory=dict)
    d_cap: int | None = None

    @classmethod
    def whole(cls, h: Hypergraph, servers=None) -> "ClusterProblem":
        net = BipartiteNetwork.build(h)
        servers = tuple(sorted(servers if servers is not None else h.node_ids))
        keep = set(servers)
        edges = {}
        for k, e in enumerate(h.edges):
            if e.members <= keep:
                edges[net.client_of(k)] = (e.members, e.threshold)
        return cls(net, servers, edges)

    @property
    def scope_nodes(self) -> list[int]:
        return list(self.servers) + sorted(self.edges) + list(self.relays)

    def scope(self) -> dict[int, tuple[int, ...]]:
        return self.net.restrict(self.scope_nodes)

    def hypergraph(self) -> Hypergraph:
        undecided = [v for v in self.servers if v not in self.decided]
        h = Hypergraph.from_edges(self.servers, [self.edges[c] for c in sorted(self.edges)])
        return strict_subhypergraph(h, undecided)


@dataclass
class ClusterResult:
    included: set[int]
    excluded: set[int]
    iterations: list[dict]
    engine: Engine
    capped: bool = False
    witness: dict[int, int] = field(default_factory=dict)
    tree_rounds: int = 0


class CoreRun:
    """Message-level execution of the three-part iteration on one cluster.

    Client and server state is kept incrementally (active-member counts,
    class histogram, per-server class degrees) so that an iteration costs
    time proportional to what changed, not to the cluster size.
    """

    def __init__(self, problem: ClusterProblem, mode: str, config: SolverConfig | None = None, seed: int = 0, engine: Engine | None = None):
        if mode not in (MIS, GMIS):
            raise ValueError(f"unknown mode {mode!r}")
        self.p = problem
        self.mode = mode
        self.cfg = config or SolverConfig()
        self.seed = seed
        self.engine = engine or Engine(problem.net, c_msg=self.cfg.c_msg)
        self.profile_mode = BY_SIZE if mode == MIS else BY_THRESHOLD
        self.maxd_class = 2 if mode == MIS else 1
        net = problem.net
        self.state: dict[int, str] = {v: problem.decided.get(v, ACTIVE) for v in problem.servers}
        self.active = {v for v, s in self.state.items() if s == ACTIVE}
        self.idle: set[int] = set()
        # server side: client -> class last reported, and class -> degree
        self.srv_class: dict[int, dict[int, int]] = {v: {} for v in problem.servers}
        self.srv_deg: dict[int, dict[int, int]] = {v: {} for v in problem.servers}
        self.srv_edges: dict[int, list[int]] = {v: [] for v in problem.servers}
        # client side
        self.members: dict[int, tuple[int, ...]] = {}
        self.t_rem: dict[int, int] = {}
        self.view: dict[int, dict[int, str]] = {}
        self.n_act: dict[int, int] = {}
        self.cls: dict[int, int] = {}
        self.sent_class: dict[int, dict[int, int]] = {}
        self.hist: dict[int, int] = {}
        self.dirty: set[int] = set()
        self.tight: set[int] = set()
        for c in sorted(problem.edges):
            mem, t = problem.edges[c]
            if not all(net.edge_of(c) >= 0 and v in net.adjacency_sets[c] for v in mem):
                raise ValueError(f"client {c} is not linked to all of its residual members")
            self.members[c] = tuple(sorted(mem))
            self.t_rem[c] = t
            self.view[c] = {v: self.state[v] if self.state[v] in DECIDED else ACTIVE for v in mem}
            self.n_act[c] = sum(1 for s in self.view[c].values() if s == ACTIVE)
            self.cls[c] = 0
            self.sent_class[c] = {v: 0 for v in mem}
            self.dirty.add(c)
            if t == 0:
                self.tight.add(c)
            for v in mem:
                self.srv_edges[v].append(c)
        self.iterations: list[dict] = []
        self.witness: dict[int, int] = {}
        self.tree = None
        self.tree_rounds = 0
        self.iteration = 0

    # ------------------------------------------------------------ helpers
    def _agree(self, values: Mapping[int, object]):
        vals = set(values.values()) if values else set()
        if len(vals) > 1:
            raise InvariantViolation(f"tree nodes disagree on an aggregate: {sorted(map(str, vals))[:3]}")
        return next(iter(vals)) if vals else None

    def _set_view(self, c: int, v: int, code: str) -> None:
        view = self.view[c]
        old = view[v]
        if old == code:
            return
        if old == ACTIVE:
            self.n_act[c] -= 1
        elif code == ACTIVE:
            self.n_act[c] += 1
        if code == INCLUDED:
            self.t_rem[c] -= 1
            if self.t_rem[c] == 0:
                self.tight.add(c)
        view[v] = code
        self.dirty.add(c)

    def _set_state(self, v: int, code: str) -> None:
        old = self.state[v]
        if old == ACTIVE:
            self.active.discard(v)
        elif old == IDLE:
            self.idle.discard(v)
        if code == ACTIVE:
            self.active.add(v)
        elif code == IDLE:
            self.idle.add(v)
        self.state[v] = code

    def _announce(self, senders, code: str) -> None:
        """One round: every sender tells all its edge-clients its new state."""
        out = [(v, c, ("STATUS", STATE_CODE[code])) for v in senders for c in self.srv_edges[v]]
        for c, msgs in self.engine.exchange(out).items():
            for src, _ in msgs:
                self._set_view(c, src, code)

    def _client_class(self, c: int) -> int:
        """Class of the client's edge in H' (0 when it is not in H')."""
        a = self.n_act[c]
        t = self.t_rem[c]
        if a <= t:
            return 0
        return a if self.mode == MIS else t

    def _refresh_classes(self) -> None:
        """CLASS round: clients whose class view changed notify active members."""
        out = []
        hist = self.hist
        for c in sorted(self.dirty):
            k = self._client_class(c)
            old = self.cls[c]
            if k != old:
                if old:
                    hist[old] -= 1
                if k:
                    hist[k] = hist.get(k, 0) + 1
                self.cls[c] = k
            sent = self.sent_class[c]
            for v, s in self.view[c].items():
                if s == ACTIVE and sent[v] != k:
                    out.append((c, v, ("CLASS", k)))
                    sent[v] = k
        self.dirty.clear()
        for v, msgs in self.engine.exchange(out).items():
            cls = self.srv_class[v]
            deg = self.srv_deg[v]
            for c, msg in msgs:
                old = cls.get(c, 0)
                k = msg[1]
                if old:
                    deg[old] -= 1
                if k:
                    deg[k] = deg.get(k, 0) + 1
                cls[c] = k

    def _count_nodes(self) -> int:
        if self.engine.messages is None:
            charge(self.engine, self.tree, 1, "AGG")
            return len(self.active)
        return aggregate(self.engine, self.tree, {v: 1 for v in self.active}, SUM)

    def _count_ui(self, rng: range) -> dict[int, int]:
        if self.engine.messages is None:
            if len(rng):
                charge(self.engine, self.tree, len(rng), "AGG" if len(rng) == 1 else "AGGVEC")
            return {i: self.hist.get(i, 0) for i in rng}
        contrib = {}
        for c in self.members:
            k = self._client_class(c)
            if k in rng:
                contrib[c] = {k: 1}
        return aggregate_vector(self.engine, self.tree, contrib, rng)

    def _violators(self, rng: range, n_prime: int, u: Mapping[int, int], factor: float) -> list[int]:
        """Active servers with d_i(v) > (i u_i / n') * factor for some i in range."""
        out = []
        for v in sorted(self.active):
            for i, d in self.srv_deg[v].items():
                if d and i in rng and d * n_prime > i * u[i] * factor:
                    out.append(v)
                    break
        return out

    def _range(self, n_prime: int) -> range:
        return class_range(self.profile_mode, n_prime, self.cfg.d)

    # ------------------------------------------------------------ setup
    def setup(self) -> None:
        scope = self.p.scope()
        start = self.engine.rounds
        leaders = elect_leader(self.engine, scope, self.p.d_cap)
        leader = self._agree(leaders)
        self.tree = build_bfs_tree(self.engine, scope, leader, self.p.d_cap)
        if not self.tree.covers(scope):
            raise InvariantViolation("cluster communication graph is disconnected")
        self.tree_rounds = self.engine.rounds - start

    # ------------------------------------------------------------ part I
    def part1(self, n_hat: int) -> tuple[int, dict[int, int], int]:
        cfg = self.cfg
        log_hat = math.log2(n_hat) if n_hat > 1 else 0.0
        if self.mode == MIS:
            cap = cfg.inner_cap_factor * math.ceil(log_hat) ** 2 + 1
        else:
            cap = cfg.inner_cap_factor * cfg.d * math.ceil(log_hat) + 1
        n_prime = n_hat
        for l2 in range(cap + 1):
            if l2:
                n_prime = self._count_nodes()
            self._refresh_classes()
            rng = self._range(n_prime)
            u = self._count_ui(rng)
            L = math.log2(n_prime) if n_prime > 1 else 0.0
            if n_prime <= cfg.c_eq:
                equitable = True
            else:
                flags = {v: 1 for v in self._violators(rng, n_prime, u, L**cfg.eq_exponent)}
                equitable = not aggregate(self.engine, self.tree, flags, OR)
            if equitable:
                return n_prime, u, l2 + 1
            if l2 == cap:
                break
            going_idle = self._violators(rng, n_prime, u, L**cfg.idle_exponent)
            for v in going_idle:
                self._set_state(v, IDLE)
            self._announce(going_idle, IDLE)
        raise InvariantViolation(f"no equitable subhypergraph after {cap} inner iterations (n_hat={n_hat})")

    def audit_part1(self, n_hat: int, n_prime: int, u: Mapping[int, int]) -> None:
        """Centralized recount from server states only (not from client caches)."""
        state = self.state
        active = [v for v in self.p.servers if state[v] == ACTIVE]
        if len(active) != n_prime:
            raise InvariantViolation(f"CountNode returned {n_prime}, {len(active)} servers are active")
        if 2 * len(active) < n_hat:
            raise InvariantViolation(f"only {len(active)} of {n_hat} undecided nodes active after part I")
        snap = self.snapshot()
        prof = degree_profile(snap, active, self.profile_mode)
        rng = self._range(n_prime)
        for i in rng:
            if prof.u(i) != u.get(i, 0):
                raise InvariantViolation(f"distributed u_{i}={u.get(i, 0)} != centralized {prof.u(i)}")
        bound = rng.stop - 1 if len(rng) else 0
        if not is_equitable(prof, self.cfg.c_eq, self.cfg.eq_exponent, bound):
            raise InvariantViolation("active set is not equitable after part I")

    def snapshot(self) -> Hypergraph:
        """Centralized copy of the current residual hypergraph (undecided nodes)."""
        state = self.state
        undecided = [v for v in self.p.servers if state[v] not in DECIDED]
        edges = []
        for c, mem in self.members.items():
            t = self.p.edges[c][1] - sum(1 for v in mem if state[v] == INCLUDED)
            rest = [v for v in mem if state[v] not in DECIDED]
            if len(rest) > t:
                edges.append((rest, t))
        return Hypergraph.from_edges(undecided, edges)

    # ------------------------------------------------------------ part II
    def part2(self, n_prime: int, u: Mapping[int, int]) -> tuple[set[int], dict]:
        cfg = self.cfg
        ah = compute_a_hat(self.mode, n_prime, u, cfg.band_exponent)
        cap = math.exp(-cfg.mark_cap_exponent)
        p0 = min(ah.a_hat, cap)
        L = math.log2(n_prime) if n_prime > 1 else 0.0
        single = n_prime < 4 or p0 <= L**cfg.band_exponent / n_prime
        branch = SINGLE if single else (HIGH if ah.a_hat >= cap else MID)
        active = sorted(self.active)
        if single:
            k = self.maxd_class
            vals = {v: (self.srv_deg[v].get(k, 0), v) for v in active}
            best = aggregate(self.engine, self.tree, vals, MAX)
            elected = [best[1]] if best is not None else []
        else:
            elected = [v for v in active if node_uniform(self.seed, v, "mark", self.iteration) <= p0]
        for v in elected:
            self._set_state(v, ELECTED)
        # elected servers tell their clients; clients in H' flag overloads
        out = [(v, c, ("STATUS", STATE_CODE[ELECTED])) for v in elected for c in self.srv_edges[v]]
        inbox = self.engine.exchange(out)
        out = []
        for c, msgs in inbox.items():
            if self._client_class(c) == 0:
                continue
            if len(msgs) > self.t_rem[c]:
                out.extend((c, src, ("FLAG", 1)) for src, _ in msgs)
        blocked = set(self.engine.exchange(out))
        included = set()
        for v in elected:
            if v in blocked:
                self._set_state(v, ACTIVE)
            else:
                self._set_state(v, INCLUDED)
                included.add(v)
        info = {"a_hat": ah.a_hat, "clamped": ah.clamped, "branch": branch, "p0": p0, "elected": len(elected)}
        return included, info

    # ------------------------------------------------------------ part III
    def part3(self, included: set[int]) -> set[int]:
        self._announce(sorted(included), INCLUDED)
        out = []
        for c in sorted(self.tight):
            if self.t_rem[c] < 0:
                raise InvariantViolation(f"client {c} over its threshold")
            for v, s in self.view[c].items():
                if s not in DECIDED:
                    out.append((c, v, ("FLAG", 1)))
        self.tight.clear()
        excluded = set()
        for v, msgs in self.engine.exchange(out).items():
            if self.state[v] not in DECIDED:
                self._set_state(v, EXCLUDED)
                excluded.add(v)
                self.witness[v] = self.p.net.edge_of(min(src for src, _ in msgs))
        self._announce(sorted(excluded), EXCLUDED)
        return excluded

    # ------------------------------------------------------------ driver
    def run(self) -> ClusterResult:
        if self.tree is None:
            self.setup()
        capped = True
        for _ in range(self.cfg.outer_cap):
            self.iteration += 1
            start = self.engine.rounds
            # undecided nodes rejoin; clients apply the same rule locally
            for v in sorted(self.idle):
                self._set_state(v, ACTIVE)
                for c in self.srv_edges[v]:
                    self._set_view(c, v, ACTIVE)
            n_hat = self._count_nodes()
            if not n_hat:
                capped = False
                break
            n_prime, u, inner = self.part1(n_hat)
            self.audit_part1(n_hat, n_prime, u)
            included, info = self.part2(n_prime, u)
            excluded = self.part3(included)
            self.iterations.append(
                {
                    "iteration": self.iteration,
                    "n_hat": n_hat,
                    "n_prime": n_prime,
                    "inner": inner,
                    "included": len(included),
                    "excluded": len(excluded),
                    "decided": len(included) + len(excluded),
                    "rounds": self.engine.rounds - start,
                    **info,
                }
            )
        included = {v for v, s in self.state.items() if s == INCLUDED}
        excluded = {v for v, s in self.state.items() if s == EXCLUDED}
        return ClusterResult(included, excluded, self.iterations, self.engine, capped, dict(self.witness), self.tree_rounds)


def solve_cluster(problem: ClusterProblem, mode: str, config: SolverConfig | None = None, seed: int = 0, engine: Engine | None = None) -> ClusterResult:
    return CoreRun(problem, mode, config, seed, engine).run()


@dataclass
class ClusterSolution:
    """Outcome of running the core solver directly on a whole hypergraph."""

    included: frozenset[int]
    excluded: frozenset[int]
    witness: dict[int, int]
    iterations: list[dict]
    engine: Engine
    capped: bool = False

    @property
    def decided_per_iteration(self) -> list[int]:
        return [it["decided"] for it in self.iterations]

    @property
    def outer_iterations(self) -> int:
        """Outer iterations of the slowest component (components run side by side)."""
        return max((it["iteration"] for it in self.iterations), default=0)


def solve_hypergraph(h: Hypergraph, mode: str, config: SolverConfig | None = None, seed: int = 0, engine: Engine | None = None) -> ClusterSolution:
    """Run the core solver with every connected component as its own cluster.

    Components share no links, so their runs are merged round by round as if
    they had executed side by side.
    """
    cfg = config or SolverConfig()
    net = BipartiteNetwork.build(h)
    engine = engine or Engine(net, c_msg=cfg.c_msg)
    runs = []
    engines = []
    for comp in _components(h):
        sub = Engine(net, c_msg=cfg.c_msg, accounting=engine.acct, record_messages=engine.messages is not None)
        runs.append(CoreRun(ClusterProblem.whole(h, comp), mode, cfg, seed, sub).run())
        engines.append(sub)
    engine.merge_parallel(engines)
    inc = frozenset(v for r in runs for v in r.included)
    witness = {v: k for r in runs for v, k in r.witness.items()}
    iterations = [it for r in runs for it in r.iterations]
    return ClusterSolution(inc, h.node_set - inc, witness, iterations, engine, any(r.capped for r in runs))


def _components(h: Hypergraph) -> list[list[int]]:
    seen: set[int] = set()
    out = []
    for s in h.node_ids:
        if s in seen:
            continue
        seen.add(s)
        comp, stack = [s], [s]
        while stack:
            v = stack.pop()
            for w in h.neighbours(v):
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        out.append(sorted(comp))
    return out
