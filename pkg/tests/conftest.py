from __future__ import annotations

import warnings
from itertools import combinations

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hypermis.hypergraph import GenerationWarning, Hypergraph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def linear_hypergraphs(draw, min_n=1, max_n=12, max_size=4, mis=None):
    """Small linear instances: candidate edges are kept greedily while linear.

    ``mis=True`` forces t = |e| - 1, ``mis=False`` draws t in [1, |e| - 1],
    ``None`` lets hypothesis pick per instance.
    """
    n = draw(st.integers(min_n, max_n))
    if mis is None:
        mis = draw(st.booleans())
    nodes = list(range(n))
    edges = []
    covered = set()
    if n >= 2:
        cands = draw(
            st.lists(
                st.lists(st.sampled_from(nodes), min_size=2, max_size=min(max_size, n), unique=True),
                max_size=3 * n,
            )
        )
        for members in cands:
            pairs = set(combinations(sorted(members), 2))
            if pairs & covered:
                continue
            covered |= pairs
            t = len(members) - 1 if mis else draw(st.integers(1, len(members) - 1))
            edges.append((frozenset(members), t))
    return Hypergraph.from_edges(nodes, edges, linear=True)


@pytest.fixture(autouse=True)
def _quiet_generator():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenerationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
