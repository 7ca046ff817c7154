"""Synchronous round engine over the server-client realization of a hypergraph.

Servers carry the hypergraph node ids. Clients get the ids
``offset + edge_index`` where ``offset = max(node_ids) + 1``, so the two id
ranges never overlap.

Messages are tuples ``(kind, *fields)``. The cost of a message is fixed by
its kind through :data:`MESSAGE_FIELDS` and :class:`BitAccounting`; only the
LOCAL-mode flooding message has a payload-dependent cost.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

from .hypergraph import Hypergraph

CONGEST = "congest"
LOCAL = "local"


class SimulationError(RuntimeError):
    pass


class BudgetViolation(SimulationError):
    def __init__(self, round_no: int, src: int, dst: int, kind: str, bits: int, budget: int):
        super().__init__(f"round {round_no}: {kind} on link {src}->{dst} costs {bits} bits > budget {budget}")
        self.round_no, self.src, self.dst, self.bits, self.budget = round_no, src, dst, bits, budget


class LinkError(SimulationError):
    pass


class RoundCapExceeded(SimulationError):
    pass


@dataclass(frozen=True)
class BipartiteNetwork:
    hypergraph: Hypergraph
    offset: int

    @classmethod
    def build(cls, h: Hypergraph) -> "BipartiteNetwork":
        return cls(h, (max(h.node_ids) + 1) if h.node_ids else 0)

    @property
    def servers(self) -> tuple[int, ...]:
        return self.hypergraph.node_ids

    @cached_property
    def clients(self) -> tuple[int, ...]:
        return tuple(self.offset + k for k in range(self.hypergraph.m))

    @property
    def n(self) -> int:
        return self.hypergraph.n

    def client_of(self, edge_index: int) -> int:
        return self.offset + edge_index

    def edge_of(self, client: int) -> int:
        return client - self.offset

    def is_client(self, node: int) -> bool:
        return node >= self.offset

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.servers}
        for k, e in enumerate(self.hypergraph.edges):
            c = self.offset + k
            members = sorted(e.members)
            adj[c] = members
            for v in members:
                adj[v].append(c)
        return {x: tuple(sorted(ys)) for x, ys in adj.items()}

    @cached_property
    def adjacency_sets(self) -> dict[int, frozenset[int]]:
        return {x: frozenset(ys) for x, ys in self.adjacency.items()}

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    @property
    def link_count(self) -> int:
        return sum(len(e) for e in self.hypergraph.edges)

    def restrict(self, nodes: Iterable[int]) -> dict[int, tuple[int, ...]]:
        """Adjacency of the subgraph induced by ``nodes``."""
        keep = set(nodes)
        return {x: tuple(y for y in self.adjacency[x] if y in keep) for x in sorted(keep)}


def build_network(h: Hypergraph) -> BipartiteNetwork:
    return BipartiteNetwork.build(h)


def _ceil_log2(x: int) -> int:
    return max(1, math.ceil(math.log2(x))) if x > 1 else 1


def message_budget(n: int, c_msg: int = 8) -> int:
    """B = c_msg * ceil(log2 n) bits."""
    return c_msg * _ceil_log2(max(n, 2))


# Field kinds:
#   sid   server id                 ceil(log2 n)
#   nid   any network id            ceil(log2(n + m))
#   count counter in [0, n^2]       ceil(log2(n^2 + 1))
#   flag  boolean                   1
#   state node decision state       3
#   fixed decomposition shift value ceil(log2(r_max * 2^L + 1)), L = ceil(log2 n)
MESSAGE_FIELDS: dict[str, tuple[str, ...]] = {
    "LEADER": ("nid",),
    "BFS": ("count", "nid"),
    "AGG": ("count",),
    "AGGMAX": ("count", "nid"),
    "AGGVEC": ("count", "count"),
    "SHIFT": ("sid", "fixed"),
    "SHIFT2": ("sid", "fixed", "sid", "fixed"),
    "STATUS": ("state",),
    "CLASS": ("count",),
    "FLAG": ("flag",),
    "COLOR": ("count", "state"),
    "RESIDUAL": ("flag", "count"),
    "ECHO": ("sid",),
}
LOCAL_ONLY = {"FLOOD"}


# Below four servers c_msg * ceil(log2 n) cannot hold a kind tag plus one id
# and one counter, so the enforced budget uses n >= 4.
MIN_BUDGET_N = 4


class BitAccounting:
    """Documented bit cost of every message kind for one network size."""

    def __init__(self, n: int, m: int, c_msg: int = 8, r_max: float | None = None):
        self.n, self.m, self.c_msg = n, m, c_msg
        self.budget = message_budget(max(n, MIN_BUDGET_N), c_msg)
        self.log_n = _ceil_log2(max(n, 2))
        self.frac_bits = self.log_n
        if r_max is None:
            r_max = 4.0 * max(math.log(max(n, 2)), 1.0)
        self.r_max = r_max
        self.widths = {
            "sid": self.log_n,
            "nid": _ceil_log2(n + m),
            "count": _ceil_log2(n * n + 1),
            "flag": 1,
            "state": 3,
            "fixed": _ceil_log2(int(r_max * 2**self.frac_bits) + 1),
        }
        self.tag_bits = _ceil_log2(len(MESSAGE_FIELDS) + len(LOCAL_ONLY))
        self.table = {k: self.tag_bits + sum(self.widths[f] for f in fs) for k, fs in MESSAGE_FIELDS.items()}

    def cost(self, msg: tuple) -> int:
        kind = msg[0]
        try:
            return self.table[kind]
        except KeyError:
            if kind == "FLOOD":
                # each flooded fact: one id per member, a threshold and an edge id
                facts = msg[1]
                return self.tag_bits + sum(
                    (len(members) + 2) * self.widths["nid"] for _, members, _ in facts
                )
            raise KeyError(f"unknown message kind {kind!r}") from None

    def catalogue(self) -> dict[str, int]:
        return dict(self.table)


def node_uniform(seed: int, node: int, *tags: Any) -> float:
    """Uniform [0, 1) draw from the stream keyed by (seed, node, tags).

    Counter-based, so the value depends only on its key and not on the order
    in which nodes are processed.
    """
    key = repr((seed, node) + tags).encode()
    (x,) = struct.unpack("<Q", hashlib.blake2b(key, digest_size=8).digest())
    return (x >> 11) * 2.0**-53


@dataclass
class Transcript:
    seed: int = 0
    config: dict = field(default_factory=dict)
    mode: str = CONGEST
    budget: int = 0
    round_messages: list[int] = field(default_factory=list)
    round_max_bits: list[int] = field(default_factory=list)
    iterations: list[dict] = field(default_factory=list)
    final_states: dict[int, str] = field(default_factory=dict)
    flags: dict[str, Any] = field(default_factory=dict)
    messages: list[tuple] | None = None

    @property
    def rounds_used(self) -> int:
        return len(self.round_messages)

    @property
    def total_messages(self) -> int:
        return sum(self.round_messages)

    @property
    def max_bits(self) -> int:
        return max(self.round_max_bits, default=0)

    def decided_per_iteration(self) -> list[int]:
        return [it["decided"] for it in self.iterations]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "mode": self.mode,
            "budget": self.budget,
            "rounds": self.rounds_used,
            "round_messages": self.round_messages,
            "round_max_bits": self.round_max_bits,
            "iterations": self.iterations,
            "final_states": {str(k): v for k, v in sorted(self.final_states.items())},
            "flags": self.flags,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


class Engine:
    """Lockstep message delivery with link, uniqueness and budget checks.

    Each call to :meth:`exchange` is one synchronous round: every message in
    the outbox is delivered at the start of the next round.
    """

    def __init__(
        self,
        net: BipartiteNetwork,
        mode: str = CONGEST,
        c_msg: int = 8,
        round_cap: int | None = None,
        record_messages: bool = False,
        accounting: BitAccounting | None = None,
    ):
        if mode not in (CONGEST, LOCAL):
            raise ValueError(f"unknown mode {mode!r}")
        self.net = net
        self.mode = mode
        self.acct = accounting or BitAccounting(net.n, net.hypergraph.m, c_msg)
        self.round_cap = round_cap
        self.round_messages: list[int] = []
        self.round_max_bits: list[int] = []
        self.messages: list[tuple] | None = [] if record_messages else None
        self._adj = net.adjacency_sets

    @property
    def rounds(self) -> int:
        return len(self.round_messages)

    @property
    def budget(self) -> int:
        return self.acct.budget

    def _tick(self, count: int, max_bits: int) -> None:
        self.round_messages.append(count)
        self.round_max_bits.append(max_bits)
        if self.round_cap is not None and self.rounds > self.round_cap:
            raise RoundCapExceeded(f"round cap {self.round_cap} exceeded")

    def exchange(self, outbox: Iterable[tuple[int, int, tuple]]) -> dict[int, list[tuple[int, tuple]]]:
        round_no = self.rounds + 1
        inbox: dict[int, list[tuple[int, tuple]]] = {}
        used: set[tuple[int, int]] = set()
        adj = self._adj
        cost = self.acct.cost
        budget = self.acct.budget
        congest = self.mode == CONGEST
        count = 0
        top = 0
        for src, dst, msg in outbox:
            if dst not in adj.get(src, ()):
                raise LinkError(f"round {round_no}: no link {src}->{dst}")
            link = (src, dst)
            if link in used:
                raise LinkError(f"round {round_no}: second message on link {src}->{dst}")
            used.add(link)
            bits = cost(msg)
            if congest and bits > budget:
                raise BudgetViolation(round_no, src, dst, msg[0], bits, budget)
            if bits > top:
                top = bits
            count += 1
            inbox.setdefault(dst, []).append((src, msg))
            if self.messages is not None:
                self.messages.append((round_no, src, dst, msg, bits))
        self._tick(count, top)
        return inbox

    def replay(self, counts: Iterable[int], bits: int) -> None:
        """Append rounds of a precomputed schedule whose messages all cost ``bits``."""
        if self.mode == CONGEST and bits > self.acct.budget:
            raise BudgetViolation(self.rounds + 1, -1, -1, "replay", bits, self.acct.budget)
        for c in counts:
            self._tick(c, bits if c else 0)

    def idle(self, rounds: int) -> None:
        """Advance the clock by silent rounds."""
        for _ in range(rounds):
            self._tick(0, 0)

    def pad_to(self, start: int, length: int) -> None:
        """Pad a fixed-length schedule that began at round ``start``."""
        used = self.rounds - start
        if used > length:
            raise SimulationError(f"schedule of {length} rounds overran ({used})")
        self.idle(length - used)

    def merge_parallel(self, engines: Iterable["Engine"]) -> int:
        """Append the rounds of engines that ran side by side on disjoint links.

        Returns the number of rounds appended (the longest of the runs).
        """
        engines = list(engines)
        length = max((e.rounds for e in engines), default=0)
        counts = [0] * length
        bits = [0] * length
        for e in engines:
            for k, (c, b) in enumerate(zip(e.round_messages, e.round_max_bits)):
                counts[k] += c
                if b > bits[k]:
                    bits[k] = b
            if self.messages is not None and e.messages is not None:
                base = self.rounds
                self.messages.extend((base + r, s, d, msg, b) for r, s, d, msg, b in e.messages)
        for c, b in zip(counts, bits):
            self._tick(c, b)
        return length

    def run(self, protocol: "Protocol", max_rounds: int | None = None) -> int:
        """Drive a per-node protocol until it is quiet and reports completion."""
        start = self.rounds
        outbox = protocol.start()
        while True:
            if not outbox and protocol.finished():
                break
            if max_rounds is not None and self.rounds - start >= max_rounds:
                protocol.timed_out = True
                break
            inbox = self.exchange(outbox)
            outbox = []
            for node in sorted(set(inbox) | protocol.wakeups()):
                outbox.extend(protocol.step(node, inbox.get(node, ())))
        return self.rounds - start

    def transcript(self, seed: int = 0, config: Mapping | None = None) -> Transcript:
        return Transcript(
            seed=seed,
            config=dict(config or {}),
            mode=self.mode,
            budget=self.acct.budget,
            round_messages=list(self.round_messages),
            round_max_bits=list(self.round_max_bits),
            messages=list(self.messages) if self.messages is not None else None,
        )


class Protocol:
    """Per-node state machine driven by :meth:`Engine.run`.

    ``start`` returns the first-round outbox; ``step`` consumes one node's
    inbox and returns that node's messages for the next round.
    """

    timed_out = False

    def start(self) -> list[tuple[int, int, tuple]]:
        return []

    def step(self, node: int, inbox) -> list[tuple[int, int, tuple]]:
        return []

    def wakeups(self) -> set[int]:
        """Nodes that must act next round even without incoming messages."""
        return set()

    def finished(self) -> bool:
        return True


class EchoProtocol(Protocol):
    """Every server sends its id to each adjacent client once."""

    def __init__(self, net: BipartiteNetwork):
        self.net = net
        self.heard: dict[int, list[int]] = {}

    def start(self):
        return [(v, c, ("ECHO", v)) for v in self.net.servers for c in self.net.adjacency[v]]

    def step(self, node, inbox):
        self.heard[node] = sorted(src for src, _ in inbox)
        return []


def run_protocol(
    net: BipartiteNetwork,
    protocol: Protocol,
    seed: int = 0,
    round_cap: int | None = None,
    mode: str = CONGEST,
    c_msg: int = 8,
    record_messages: bool = False,
) -> Transcript:
    engine = Engine(net, mode=mode, c_msg=c_msg, round_cap=round_cap, record_messages=record_messages)
    engine.run(protocol, max_rounds=round_cap)
    tr = engine.transcript(seed, {"mode": mode, "c_msg": c_msg, "round_cap": round_cap})
    if protocol.timed_out:
        tr.flags["terminated"] = False
    return tr
