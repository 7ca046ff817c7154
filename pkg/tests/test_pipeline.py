"""End-to-end solve, metrics records and the bench sweep."""

import math

import pytest

from hypermis.config import SolverConfig
from hypermis.congest import LOCAL
from hypermis.hypergraph import Hypergraph, gen_random_linear
from hypermis.oracle import greedy_solve
from hypermis.pipeline import ALGORITHMS, InstanceError, bench, bench_instance, solve, summarize


@pytest.fixture(scope="module")
def mis_instance():
    return bench_instance(120, 4, "mis")


@pytest.fixture(scope="module")
def gmis_instance():
    return bench_instance(120, 4, "gmis")


class TestSolve:
    @pytest.mark.parametrize("algorithm", ["mis", "local-ref", "greedy"])
    def test_mis_instance_all_algorithms(self, mis_instance, algorithm):
        res = solve(mis_instance, algorithm, seed=2)
        assert res.valid and res.maximal and res.ok
        assert res.violations == []

    @pytest.mark.parametrize("algorithm", ["gmis", "local-ref", "greedy"])
    def test_gmis_instance(self, gmis_instance, algorithm):
        res = solve(gmis_instance, algorithm, seed=2)
        assert res.ok

    def test_mis_rejects_general_thresholds(self, gmis_instance):
        with pytest.raises(InstanceError, match="gmis"):
            solve(gmis_instance, "mis")

    def test_gmis_dimension_check(self):
        h = Hypergraph.from_edges(range(5), [(range(5), 2)], linear=True)
        with pytest.raises(InstanceError):
            solve(h, "gmis", SolverConfig(d=4))
        assert solve(h, "gmis", SolverConfig(d=5)).ok

    def test_unknown_algorithm(self, mis_instance):
        with pytest.raises(InstanceError, match="unknown"):
            solve(mis_instance, "bogus")

    def test_greedy_matches_oracle_and_has_no_rounds(self, mis_instance):
        res = solve(mis_instance, "greedy")
        assert res.assignment.included == greedy_solve(mis_instance).included
        assert res.transcript.rounds_used == 0 and res.partition is None

    def test_local_ref_runs_in_local_mode(self, mis_instance):
        res = solve(mis_instance, "local-ref", seed=1)
        assert res.transcript.mode == LOCAL
        assert res.agreement == 1.0

    def test_budget_respected(self, mis_instance):
        res = solve(mis_instance, "mis", seed=5)
        assert res.transcript.max_bits <= res.transcript.budget == 8 * math.ceil(math.log2(120))

    def test_final_states_cover_every_node(self, gmis_instance):
        res = solve(gmis_instance, "gmis", seed=3)
        states = res.transcript.final_states
        assert set(states) == set(gmis_instance.node_ids)
        assert {v for v, s in states.items() if s == "N"} == res.assignment.included

    def test_empty_and_single_node(self):
        assert solve(Hypergraph.mis([], []), "mis").assignment.included == set()
        assert solve(Hypergraph.mis([7], []), "mis").assignment.included == {7}


class TestDeterminism:
    @pytest.mark.parametrize("algorithm", ["mis", "gmis", "local-ref"])
    def test_same_seed_same_digest(self, algorithm):
        h = bench_instance(80, 9, "gmis" if algorithm == "gmis" else "mis")
        a = solve(h, algorithm, seed=9).transcript.digest()
        b = solve(h, algorithm, seed=9).transcript.digest()
        assert a == b

    def test_config_changes_digest(self, mis_instance):
        a = solve(mis_instance, "mis", seed=1).transcript.digest()
        b = solve(mis_instance, "mis", SolverConfig(c_msg=9), seed=1).transcript.digest()
        assert a != b

    def test_recorded_run_same_digest(self, mis_instance):
        a = solve(mis_instance, "mis", seed=6)
        b = solve(mis_instance, "mis", seed=6, record_messages=True)
        assert a.transcript.digest() == b.transcript.digest()
        assert b.transcript.messages


class TestRecord:
    def test_fields(self, mis_instance):
        rec = solve(mis_instance, "mis", seed=1).record(mis_instance)
        for key in ("n", "m", "rounds", "max_bits", "budget", "colors", "max_diameter", "diameters",
                    "decided_per_iteration", "valid", "maximal", "capped", "digest", "config"):
            assert key in rec
        assert rec["config"]["seed"] == 1 and rec["config"]["algorithm"] == "mis"
        assert sum(rec["decided_per_iteration"]) <= rec["n"]

    def test_record_reproduces_run(self, gmis_instance):
        rec = solve(gmis_instance, "gmis", SolverConfig(band_exponent=1, mark_cap_exponent=2), seed=4).record(gmis_instance)
        cfg = dict(rec["config"])
        algorithm, seed = cfg.pop("algorithm"), cfg.pop("seed")
        again = solve(gmis_instance, algorithm, SolverConfig.from_dict(cfg), seed).record(gmis_instance)
        assert again["digest"] == rec["digest"]


class TestBench:
    def test_one_record_per_run(self):
        got = []
        summary = bench([16, 32], range(3), "mis", sink=got.append)
        assert len(summary.records) == len(got) == 6
        assert summary.max_bits_ok
        assert summary.slope is not None

    def test_summarize_flags_budget_overrun(self):
        rows = [
            {"n": 16, "rounds": 10, "mode": "CONGEST", "max_bits": 40, "budget": 32, "colors": 2, "max_diameter": 1},
            {"n": 64, "rounds": 40, "mode": "CONGEST", "max_bits": 20, "budget": 48, "colors": 100, "max_diameter": 1},
        ]
        s = summarize(rows)
        assert not s.max_bits_ok
        assert s.colors_ok_fraction == 0.5 and s.diameter_ok_fraction == 1.0
        # rounds 10 -> 40 while log2 n goes 4 -> 6
        assert s.slope == pytest.approx(math.log(4) / math.log(1.5))

    def test_local_rows_exempt_from_budget(self):
        rows = [{"n": 16, "rounds": 3, "mode": LOCAL, "max_bits": 10**4, "budget": 32, "colors": None}]
        assert summarize(rows).max_bits_ok

    def test_all_algorithms_named(self):
        assert set(ALGORITHMS) == {"mis", "gmis", "local-ref", "greedy"}

    def test_bench_instance_density(self):
        h = bench_instance(64, 0, "mis", density=1.0)
        assert h.m <= 64 and h.is_mis_instance()
        assert gen_random_linear(64, 64, (2, 3, 4), "mis", 0).m == h.m
