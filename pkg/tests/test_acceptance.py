"""Acceptance criteria, one printed PASS/FAIL line each.

The heavy sweeps are module-scoped fixtures shared between criteria; raw
trend data is kept under ``acceptance_data/`` at the repository root.
Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
are produced; they are repeated in the terminal summary either way.
"""

from __future__ import annotations

import json
import math
import warnings
from pathlib import Path

import numpy as np
import pytest

from hypermis.config import C_COL, C_DIAM, SolverConfig
from hypermis.decomposition import verify_partition
from hypermis.hypergraph import GenerationWarning, gen_random_linear, strict_subhypergraph, validate
from hypermis.oracle import enumerate_maximal
from hypermis.pipeline import bench_instance, solve, summarize

DATA_DIR = Path(__file__).resolve().parent.parent / "acceptance_data"

SWEEP_N = (16, 64, 256, 1024)
DENSITIES = (0.5, 1.0, 2.0, 4.0)
SWEEP_SIZE = 500
TREND_N = tuple(2**k for k in range(6, 13))
TREND_SEEDS = 20
SLOPE_MAX = 6.0
# exponents used for the trend check; the defaults are reported alongside
DESK_PROFILE = SolverConfig(band_exponent=1, mark_cap_exponent=2)
SPOT_CHECKS = 50

RESULTS: list[str] = []

pytestmark = pytest.mark.acceptance


def _popcount(x: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):  # numpy >= 2
        return np.bitwise_count(x)
    out = np.zeros_like(x)
    while x.any():
        out += x & 1
        x = x >> 1
    return out


def report(k: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {k:>2} {title:<28} {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print("\n" + line)


def _run(h, algorithm, cfg, seed) -> dict:
    """Solve and keep only what the criteria need."""
    try:
        res = solve(h, algorithm, cfg, seed)
    except Exception as exc:  # any raise is a criterion failure, not a crash
        return {"error": f"{type(exc).__name__}: {exc}", "n": h.n}
    rec = res.record(h)
    out = {
        "n": h.n,
        "ok": res.valid and res.maximal,
        "capped": rec["capped"],
        "max_bits": rec["max_bits"],
        "budget": rec["budget"],
        "mode": rec["mode"],
        "rounds": rec["rounds"],
        "agreement": res.agreement,
        "digest": rec["digest"],
        "halving": [(it["n_hat"], it["n_prime"]) for it in res.transcript.iterations if "n_hat" in it],
    }
    if res.partition is not None:
        part = res.partition
        out.update(
            verified=verify_partition(h, part).ok,
            colors=part.num_colors,
            max_diameter=part.max_diameter,
            over_cap=part.over_cap,
            retries=part.retries,
            first_draw_ok=part.first_draw_ok,
        )
    return out


def _sweep_case(mode: str, i: int):
    n = SWEEP_N[i % len(SWEEP_N)]
    density = DENSITIES[(i // len(SWEEP_N)) % len(DENSITIES)]
    seed = (1 if mode == "mis" else 2) * 100_000 + i
    if mode == "mis":
        sizes = ((2,), (2, 3), (2, 3, 4))[(i // 16) % 3]
        cfg = SolverConfig()
    else:
        d = (3, 4, 5)[(i // 16) % 3]
        sizes = tuple(range(2, d + 1))
        cfg = SolverConfig(d=d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenerationWarning)
        h = bench_instance(n, seed, mode, density, sizes)
    return h, cfg, seed


def _sweep(mode: str) -> dict:
    core, ref = [], []
    for i in range(SWEEP_SIZE):
        h, cfg, seed = _sweep_case(mode, i)
        core.append(_run(h, mode, cfg, seed))
        ref.append(_run(h, "local-ref", cfg, seed))
    return {"core": core, "ref": ref}


@pytest.fixture(scope="module")
def mis_sweep():
    return _sweep("mis")


@pytest.fixture(scope="module")
def gmis_sweep():
    return _sweep("gmis")


@pytest.fixture(scope="module")
def trend():
    DATA_DIR.mkdir(exist_ok=True)
    rows = []
    with (DATA_DIR / "trend_desk_profile.jsonl").open("w") as fh:
        for n in TREND_N:
            for seed in range(TREND_SEEDS):
                h = bench_instance(n, seed, "mis")
                rec = solve(h, "mis", DESK_PROFILE, seed).record(h)
                rec.pop("diameters")
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                rows.append(rec)
    return rows


def _failures(rows) -> list[str]:
    out = []
    for r in rows:
        if "error" in r:
            out.append(f"n={r['n']}: {r['error']}")
        elif not r["ok"] or r["capped"]:
            out.append(f"n={r['n']}: ok={r['ok']} capped={r['capped']}")
    return out


def _correctness(k, title, sweep):
    bad = _failures(sweep["core"])
    report(k, title, not bad, f"{SWEEP_SIZE - len(bad)}/{SWEEP_SIZE} valid+maximal, uncapped" + (f"; first: {bad[0]}" if bad else ""))
    assert not bad, bad[:5]


def test_criterion_01_mis_correctness(mis_sweep):
    _correctness(1, "MIS correctness", mis_sweep)


def test_criterion_02_gmis_correctness(gmis_sweep):
    _correctness(2, "GMIS correctness", gmis_sweep)


def test_criterion_03_exhaustive_oracle():
    rng = np.random.default_rng(3)
    total = bad = 0
    for mode in ("mis", "gmis"):
        for _ in range(250):
            n = int(rng.integers(2, 13))
            target = int(rng.integers(0, min(2 * n, n * (n - 1) // 2) + 1))
            seed = int(rng.integers(2**31))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", GenerationWarning)
                h = gen_random_linear(n, target, (2, 3, 4), "mis" if mode == "mis" else "uniform", seed)
            res = solve(h, mode, SolverConfig(d=4), seed)
            total += 1
            bad += res.assignment.included not in enumerate_maximal(h)
    report(3, "exhaustive oracle", bad == 0, f"{total - bad}/{total} outputs in the maximal family")
    assert bad == 0


def test_criterion_04_halving_and_equitability(mis_sweep, gmis_sweep):
    # the solver audits both predicates centrally after every part I and raises
    # on a violation; here the recorded counts are re-checked as well
    rows = mis_sweep["core"] + gmis_sweep["core"]
    raised = [r["error"] for r in rows if "error" in r and "Invariant" in r["error"]]
    pairs = [p for r in rows if "halving" in r for p in r["halving"]]
    short = [p for p in pairs if 2 * p[1] < p[0]]
    ok = not raised and not short and pairs
    report(4, "halving + equitable", bool(ok), f"{len(pairs)} per-cluster outer iterations audited, {len(short) + len(raised)} violations")
    assert ok


def test_criterion_05_generator_and_strict_safety():
    rng = np.random.default_rng(5)
    gen_bad = 0
    for _ in range(1000):
        n = int(rng.integers(2, 41))
        target = int(rng.integers(0, n * (n - 1) // 2 + 1))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GenerationWarning)
            h = gen_random_linear(n, target, (2, 3, 4), "uniform", int(rng.integers(2**31)), attempt_cap=3000)
        gen_bad += h.m > n * (n - 1) // 2 or not validate(h, require_linear=True).ok

    safe_bad = trials = 0
    while trials < 10_000:
        n = int(rng.integers(2, 13))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GenerationWarning)
            h = gen_random_linear(n, int(rng.integers(0, n * (n - 1) // 2 + 1)), (2, 3, 4),
                                  "uniform" if trials % 2 else "mis", int(rng.integers(2**31)), attempt_cap=500)
        w = [v for v in h.node_ids if rng.random() < rng.uniform(0.3, 1.0)]
        trials += 1
        safe_bad += not _strict_safe(h, w)
    ok = gen_bad == 0 and safe_bad == 0
    report(5, "generator + strict safety", ok,
           f"generator {1000 - gen_bad}/1000 within n(n-1)/2 and linear; strict safety {trials - safe_bad}/{trials}")
    assert ok


def _strict_safe(h, w) -> bool:
    """Every subset of W that is a GIS of the strict subhypergraph is a GIS of h."""
    pos = {v: j for j, v in enumerate(w)}
    masks = np.arange(1 << len(w), dtype=np.int64)

    def gis(edges):
        ok = np.ones(len(masks), dtype=bool)
        for members, t in edges:
            em = sum(1 << pos[v] for v in members if v in pos)
            ok &= _popcount(masks & em) <= t
        return ok

    sub = strict_subhypergraph(h, w)
    in_sub = gis([(e.members, e.threshold) for e in sub.edges])
    in_h = gis([(e.members, e.threshold) for e in h.edges])
    return bool(np.all(in_h[in_sub]))


def test_criterion_06_partition_audit(mis_sweep, gmis_sweep):
    # core and reference runs of one instance share its partition (same seed),
    # so the seed-level fraction is taken over the core rows only
    everything = [r for s in (mis_sweep, gmis_sweep) for key in ("core", "ref") for r in s[key] if "colors" in r]
    seeds = [r for s in (mis_sweep, gmis_sweep) for r in s["core"] if "colors" in r]
    unverified = sum(not r["verified"] for r in everything)

    def within(r):
        L = math.log2(max(r["n"], 2))
        return r["colors"] <= C_COL * L and r["max_diameter"] <= C_DIAM * L

    first = sum(r["first_draw_ok"] for r in seeds) / len(seeds)
    final = sum(within(r) for r in seeds) / len(seeds)
    # a seed whose first draw broke a cap must show up as a retry
    unflagged = sum(1 for r in seeds if not r["first_draw_ok"] and not (r["retries"] or r["over_cap"]))
    by_n = {}
    for r in seeds:
        by_n.setdefault(r["n"], []).append(r["first_draw_ok"])
    per_n = ", ".join(f"n={n}: {sum(v) / len(v):.1%}" for n, v in sorted(by_n.items()))
    ok = unverified == 0 and unflagged == 0 and first >= 0.95
    report(6, "partition audit", ok,
           f"{len(everything)} partitions verified ({unverified} violations); first draw within caps "
           f"(c_col={C_COL}, c_diam={C_DIAM}) for {first:.1%} of {len(seeds)} seeds [{per_n}]; "
           f"{final:.1%} after redraws, all redraws flagged")
    assert ok


def test_criterion_07_congest_budget(mis_sweep, gmis_sweep, trend):
    rows = [r for s in (mis_sweep, gmis_sweep) for r in s["core"] if "max_bits" in r] + trend
    over = [r for r in rows if r["max_bits"] > 8 * math.ceil(math.log2(r["n"]))]
    peak = max(r["max_bits"] / (8 * math.ceil(math.log2(r["n"]))) for r in rows)
    report(7, "CONGEST budget", not over, f"{len(rows)} runs, {len(over)} over 8*ceil(log2 n), peak use {peak:.0%} of budget")
    assert not over


def test_criterion_08_polylog_trend(trend):
    summary = summarize(trend)
    bad = sum(not (r["valid"] and r["maximal"]) or r["capped"] for r in trend)
    default_rows = []
    for n in TREND_N:
        for seed in range(3):
            h = bench_instance(n, seed, "mis")
            default_rows.append(solve(h, "mis", SolverConfig(), seed).record(h))
    default_slope = summarize(default_rows).slope
    ok = summary.slope is not None and summary.slope <= SLOPE_MAX and bad == 0
    report(8, "polylog trend", ok,
           f"slope {summary.slope:.2f} <= {SLOPE_MAX} with band/mark-cap exponents (1, 2) over n=2^6..2^12 x {TREND_SEEDS} seeds; "
           f"default exponents give {default_slope:.2f} (3 seeds, informational); raw data in acceptance_data/")
    assert ok


def test_criterion_09_local_reference(mis_sweep, gmis_sweep):
    rows = mis_sweep["ref"] + gmis_sweep["ref"]
    bad = _failures(rows)
    disagree = sum(1 for r in rows if "agreement" in r and r["agreement"] != 1.0)
    ok = not bad and disagree == 0
    report(9, "LOCAL reference agreement", ok, f"{len(rows) - len(bad)}/{len(rows)} valid+maximal, {disagree} runs below 100% agreement")
    assert ok


def test_criterion_10_determinism(mis_sweep, gmis_sweep):
    mismatches = 0
    for j in range(SPOT_CHECKS):
        mode = "mis" if j % 2 == 0 else "gmis"
        sweep = mis_sweep if mode == "mis" else gmis_sweep
        i = 20 * (j // 2) + j % 4
        algorithm = (mode, "local-ref")[j // 2 % 2]
        h, cfg, seed = _sweep_case(mode, i)
        first = sweep["core" if algorithm == mode else "ref"][i]["digest"]
        mismatches += solve(h, algorithm, cfg, seed).transcript.digest() != first
    report(10, "determinism", mismatches == 0, f"{SPOT_CHECKS - mismatches}/{SPOT_CHECKS} transcript digests reproduced")
    assert mismatches == 0
