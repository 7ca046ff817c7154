"""End-to-end solving: decompose, combine per color, audit with the oracle.

Also the benchmark sweep behind ``hypermis bench`` and the metrics records
it emits.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import C_COL, C_DIAM, SolverConfig
from .congest import LOCAL, BipartiteNetwork, BitAccounting, Engine, Transcript
from .core import GMIS, MIS
from .decomposition import ColoredPartition, combine_per_color, decompose_with_retry, local_reference_solve, r_max_for
from .gmis import check_dimension
from .hypergraph import Hypergraph, dimension, gen_random_linear, validate
from .oracle import SolutionAssignment, check_maximal, check_valid, greedy_solve, loglog_slope

ALGORITHMS = ("mis", "gmis", "local-ref", "greedy")


class InstanceError(ValueError):
    """The instance is malformed or unsuitable for the requested algorithm."""


@dataclass
class SolveResult:
    algorithm: str
    seed: int
    assignment: SolutionAssignment
    transcript: Transcript
    partition: ColoredPartition | None
    valid: bool
    maximal: bool
    violations: list[str] = field(default_factory=list)
    agreement: float = 1.0
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.valid and self.maximal and not self.transcript.flags.get("capped", False)

    def record(self, h: Hypergraph) -> dict:
        """One metrics row; the config snapshot makes it reproducible on its own."""
        tr = self.transcript
        part = self.partition
        return {
            "n": h.n,
            "m": h.m,
            "dimension": dimension(h),
            "algorithm": self.algorithm,
            "seed": self.seed,
            "rounds": tr.rounds_used,
            "messages": tr.total_messages,
            "max_bits": tr.max_bits,
            "budget": tr.budget,
            "mode": tr.mode,
            "colors": part.num_colors if part else None,
            "max_diameter": part.max_diameter if part else None,
            "diameters": part.diameters if part else None,
            "decomposition_rounds": part.rounds if part else None,
            "decomposition_retries": part.retries if part else None,
            "truncated": part.truncated if part else None,
            "decomposition_over_cap": part.over_cap if part else None,
            "first_draw_ok": part.first_draw_ok if part else None,
            "iterations": len(tr.iterations),
            "decided_per_iteration": tr.decided_per_iteration(),
            "branches": [it.get("branch") for it in tr.iterations],
            "valid": self.valid,
            "maximal": self.maximal,
            "capped": bool(tr.flags.get("capped", False)),
            "agreement": self.agreement,
            "seconds": round(self.seconds, 4),
            "digest": tr.digest(),
            "config": tr.config,
        }


def _check_instance(h: Hypergraph, algorithm: str, cfg: SolverConfig) -> None:
    if algorithm not in ALGORITHMS:
        raise InstanceError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    report = validate(h, require_linear=h.linear)
    if not report.ok:
        raise InstanceError("; ".join(report.violations[:5]))
    if algorithm == "mis" and not h.is_mis_instance():
        raise InstanceError("mis needs thresholds |e| - 1; use gmis for general thresholds")
    if algorithm == "gmis":
        try:
            check_dimension(h, cfg.d)
        except ValueError as exc:
            raise InstanceError(str(exc)) from None


def solve(h: Hypergraph, algorithm: str = "mis", config: SolverConfig | None = None, seed: int = 0, record_messages: bool = False) -> SolveResult:
    """Solve ``h`` end to end and audit the result.

    ``mis`` / ``gmis`` decompose the network, then run the core solver color
    by color; ``local-ref`` replaces the core solver by flooding plus local
    greedy; ``greedy`` is the sequential oracle with an empty transcript.
    """
    cfg = config or SolverConfig()
    _check_instance(h, algorithm, cfg)
    started = time.perf_counter()
    snapshot = {"algorithm": algorithm, "seed": seed, **cfg.to_dict()}
    partition = None
    agreement = 1.0
    if algorithm == "greedy":
        assignment = greedy_solve(h)
        transcript = Transcript(seed=seed, config=snapshot)
    else:
        net = BipartiteNetwork.build(h)
        acct = BitAccounting(h.n, h.m, cfg.c_msg, r_max_for(h.n, cfg.c_r))
        engine = Engine(net, c_msg=cfg.c_msg, accounting=acct, record_messages=record_messages)
        partition = decompose_with_retry(h, cfg, seed, engine)
        if algorithm == "local-ref":
            combined = local_reference_solve(h, partition, cfg, engine)
        else:
            combined = combine_per_color(h, partition, MIS if algorithm == "mis" else GMIS, cfg, seed, engine)
        assignment = combined.assignment
        agreement = combined.agreement
        transcript = engine.transcript(seed, snapshot)
        if algorithm == "local-ref":
            transcript.mode = LOCAL
        transcript.iterations = combined.iterations
        transcript.flags = {
            "capped": combined.capped,
            "colors": partition.num_colors,
            "max_diameter": partition.max_diameter,
            "decomposition_rounds": partition.rounds,
            "decomposition_retries": partition.retries,
            "truncated": partition.truncated,
            "decomposition_over_cap": partition.over_cap,
            "first_draw_ok": partition.first_draw_ok,
            "center_mismatch": partition.center_mismatch,
            "agreement": agreement,
        }
    transcript.final_states = {v: ("N" if v in assignment.included else "X") for v in h.node_ids}
    valid = check_valid(h, assignment)
    maximal = check_maximal(h, assignment)
    return SolveResult(
        algorithm,
        seed,
        assignment,
        transcript,
        partition,
        valid.ok,
        maximal.ok,
        valid.violations + maximal.violations,
        agreement,
        time.perf_counter() - started,
    )


# ---------------------------------------------------------------- bench


def bench_instance(n: int, seed: int, mode: str = "mis", density: float = 2.0, sizes=(2, 3, 4)) -> Hypergraph:
    """Random linear instance for sweeps: about ``density * n`` edges."""
    target = min(int(density * n), n * (n - 1) // 2)
    return gen_random_linear(n, target, sizes, "mis" if mode == "mis" else "uniform", seed)


@dataclass
class BenchSummary:
    records: list[dict]
    slope: float | None
    intercept: float | None
    max_bits_ok: bool
    colors_ok_fraction: float
    diameter_ok_fraction: float


def summarize(records: Sequence[dict]) -> BenchSummary:
    """Trend regression of rounds against log2 n plus the budget and partition audits."""
    xs, ys = [], []
    bits_ok = True
    col_ok = dia_ok = total = 0
    for r in records:
        n = r["n"]
        if n > 1 and r["rounds"] > 0:
            xs.append(math.log(math.log2(n)))
            ys.append(math.log(r["rounds"]))
        if r["mode"] != LOCAL and r["max_bits"] > r["budget"]:
            bits_ok = False
        if r.get("colors") is not None:
            total += 1
            L = math.log2(max(n, 2))
            col_ok += r["colors"] <= C_COL * L
            dia_ok += r["max_diameter"] <= C_DIAM * L
    slope = intercept = None
    if len(set(xs)) > 1:
        slope, intercept = loglog_slope(xs, ys)
    frac = (lambda k: k / total if total else 1.0)
    return BenchSummary(list(records), slope, intercept, bits_ok, frac(col_ok), frac(dia_ok))


def bench(
    n_values: Iterable[int],
    seeds: Iterable[int],
    algorithm: str = "mis",
    config: SolverConfig | None = None,
    density: float = 2.0,
    sizes=(2, 3, 4),
    sink=None,
) -> BenchSummary:
    """Sweep n and seeds; ``sink`` (if given) receives each record as it is produced."""
    records = []
    seeds = list(seeds)
    for n in n_values:
        for s in seeds:
            h = bench_instance(n, s, "gmis" if algorithm == "gmis" else "mis", density, sizes)
            rec = solve(h, algorithm, config, s).record(h)
            records.append(rec)
            if sink is not None:
                sink(rec)
    return summarize(records)
