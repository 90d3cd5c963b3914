"""Shared builders and hypothesis strategies."""

import sys
from itertools import combinations

import numpy as np
import pytest
from hypothesis import strategies as st

from forestz.graph import InteractionGraph
from forestz.model import table_model


def ring(n):
    return InteractionGraph.from_pairs(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n):
    return InteractionGraph.from_pairs(n, combinations(range(n), 2))


def book(pages):
    pairs = [(0, 1)] + [(v, p) for p in range(2, pages + 2) for v in (0, 1)]
    return InteractionGraph.from_pairs(pages + 2, pairs)


def random_tree(n, rng):
    """Random recursive tree: node i attaches to a uniform earlier node."""
    return InteractionGraph.from_pairs(n, [(i, int(rng.integers(i))) for i in range(1, n)])


def random_model(g, rng, beta=1.0, max_states=2, low=-1.0, high=1.0):
    sizes = [int(rng.integers(2, max_states + 1)) for _ in range(g.n_nodes)]
    tables = []
    for k in range(g.n_edges):
        i, j = g.endpoints(k)
        tables.append(rng.uniform(low, high, size=(sizes[i], sizes[j])))
    return table_model(g, tables, beta, sizes)


@st.composite
def graphs(draw, min_nodes=1, max_nodes=6, max_edges=None):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = list(combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=max_edges)) if pairs else []
    weights = draw(st.lists(st.floats(0.0, 10.0), min_size=len(chosen), max_size=len(chosen)))
    return InteractionGraph.from_pairs(n, chosen, weights)


@st.composite
def trees(draw, min_nodes=1, max_nodes=8):
    n = draw(st.integers(min_nodes, max_nodes))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    return InteractionGraph.from_pairs(n, [(i, p) for i, p in zip(range(1, n), parents)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
