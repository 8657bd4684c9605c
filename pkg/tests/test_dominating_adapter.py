"""The dominating set reduction."""

import pytest

from dynsetcover import DominatingSetAdapter, EngineAuditor, GraphError, NotFoundError
from dynsetcover.oracle_verify import exact_opt
from dynsetcover.core_model import ParameterError
import math


def _opt(g):
    return exact_opt(range(g.n), {v: (g.costs[v], [v] + sorted(g.adj[v])) for v in range(g.n)})


def test_single_vertex():
    g = DominatingSetAdapter([1.0], 0.2, 1)
    assert g.dominating_set() == [(0, 1.0)]


def test_empty_graph_takes_every_vertex():
    g = DominatingSetAdapter([1.0] * 3, 0.2, 2)
    assert [v for v, _ in g.dominating_set()] == [0, 1, 2]


def test_edge_is_four_inner_updates():
    g = DominatingSetAdapter([1.0] * 3, 0.2, 2)
    before = g.engine.updates
    g.insert_edge(0, 1)
    assert g.last_inner == 4 and g.engine.updates - before == 4
    assert g.undominated() == []
    assert sorted(g.engine.system.alive_elements()[0]) == [0, 1]


def test_delete_restores_singletons():
    g = DominatingSetAdapter([1.0] * 3, 0.2, 2)
    g.insert_edge(0, 1)
    g.delete_edge(0, 1)
    alive = g.engine.system.alive_elements()
    assert {v: tuple(ms) for v, ms in alive.items()} == {0: (0,), 1: (1,), 2: (2,)}
    assert g.edges() == []


def test_graph_errors():
    g = DominatingSetAdapter([1.0] * 3, 0.2, 1)
    g.insert_edge(0, 1)
    with pytest.raises(GraphError):
        g.insert_edge(1, 0)
    with pytest.raises(GraphError):
        g.insert_edge(1, 2)            # degree bound 1
    with pytest.raises(GraphError):
        g.insert_edge(2, 2)
    with pytest.raises(GraphError):
        g.delete_edge(0, 2)
    with pytest.raises(NotFoundError):
        g.insert_edge(0, 7)
    with pytest.raises(ParameterError):
        DominatingSetAdapter([], 0.2, 1)


def test_star_within_envelope():
    g = DominatingSetAdapter([1.0] * 6, 0.2, 5)
    for leaf in range(1, 6):
        g.insert_edge(0, leaf)
    assert g.undominated() == []
    assert _opt(g) == 1.0
    assert g.cost() <= (1 + 10 * 0.2) * math.log(6) * 1 + 1
    assert EngineAuditor().audit(g).ok


def test_single_edge_within_envelope():
    g = DominatingSetAdapter([1.0] * 2, 0.2, 1)
    g.insert_edge(0, 1)
    assert _opt(g) == 1.0
    assert g.cost() <= (1 + 10 * 0.2) * math.log(2) + 1
