"""Dynamic minimum-weight dominating set through the set cover engines.

Vertex ``i`` is both an element ``e_i`` and a set ``S_i`` (its closed
neighbourhood) with the vertex's cost.  The sets never change their
identity; instead, when an edge ``(u, v)`` appears or disappears the two
endpoint elements are deleted and re-inserted with their new membership
lists, i.e. every edge operation is exactly four element updates.
"""

from __future__ import annotations

from typing import Dict, Hashable, List, Optional, Sequence, Set, Tuple

from .core_model import (COST_TOL, CoverError, DuplicateError, NotFoundError, ParameterError,
                         derive_params)
from .window_engine import WindowedEngine


class GraphError(CoverError, ValueError):
    """Invalid edge operation (self-loop, duplicate, missing edge, degree overflow)."""


class DominatingSetAdapter:
    """Maintains a dominating set of a graph on the fixed vertex set ``0 .. n-1``.

    ``engine_class`` defaults to the windowed greedy engine; it is built
    with frequency bound ``delta_cap + 1``.
    """

    def __init__(self, costs: Sequence[float], eps: float, delta_cap: int,
                 engine_class=WindowedEngine, **engine_kw):
        n = len(costs)
        if n < 1:
            raise ParameterError("a graph needs at least one vertex")
        if int(delta_cap) != delta_cap or delta_cap < 1:
            raise ParameterError(f"delta_cap must be a positive integer, got {delta_cap}")
        lo = min(costs)
        if lo <= 0 or max(costs) > 1.0 + COST_TOL:
            raise ParameterError("vertex costs must lie in (0, 1]")
        self.n = n
        self.delta_cap = int(delta_cap)
        self.costs = [float(c) for c in costs]
        # the windowed engine needs n_cap >= 2, harmless for one vertex
        params = derive_params(eps, C=max(1.0, 1.0 / lo), n_cap=max(n, 2), f_cap=delta_cap + 1)
        self.engine = engine_class(params, **engine_kw)
        self.adj: List[Set[int]] = [set() for _ in range(n)]
        self.inner_updates = 0
        self.last_inner = 0
        self.last_steps = 0
        self.max_steps = 0
        self.max_degree = 0
        for v in range(n):
            self.engine.add_set(v, self.costs[v])
        for v in range(n):
            self.engine.insert(v, [v])

    @classmethod
    def new_graph(cls, costs: Sequence[float], eps: float, delta_cap: int, **kw):
        return cls(costs, eps, delta_cap, **kw)

    # -- edge updates ---------------------------------------------------------
    def _check_pair(self, u: int, v: int) -> None:
        for x in (u, v):
            if not (0 <= x < self.n):
                raise NotFoundError(f"vertex {x} does not exist")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")

    def _reinsert(self, x: int) -> int:
        eng = self.engine
        eng.delete(x)
        steps = eng.last_steps
        eng.insert(x, [x] + sorted(self.adj[x]))
        return steps + eng.last_steps

    def _apply(self, u: int, v: int) -> None:
        steps = self._reinsert(u) + self._reinsert(v)
        self.inner_updates += 4
        self.last_inner = 4
        self.last_steps = steps
        self.max_steps = max(self.max_steps, steps)
        self.max_degree = max(self.max_degree, len(self.adj[u]), len(self.adj[v]))

    def insert_edge(self, u: int, v: int) -> None:
        self._check_pair(u, v)
        if v in self.adj[u]:
            raise GraphError(f"edge ({u}, {v}) already present")
        if len(self.adj[u]) >= self.delta_cap or len(self.adj[v]) >= self.delta_cap:
            raise GraphError(f"edge ({u}, {v}) would exceed degree bound {self.delta_cap}")
        self.adj[u].add(v)
        self.adj[v].add(u)
        self._apply(u, v)

    def delete_edge(self, u: int, v: int) -> None:
        self._check_pair(u, v)
        if v not in self.adj[u]:
            raise GraphError(f"edge ({u}, {v}) not present")
        self.adj[u].discard(v)
        self.adj[v].discard(u)
        self._apply(u, v)

    # -- output ---------------------------------------------------------------
    def dominating_set(self) -> List[Tuple[int, float]]:
        return [(v, self.costs[v]) for v, _lev, _c in self.engine.cover()]

    def cost(self) -> float:
        return sum(c for _, c in self.dominating_set())

    def cover(self):
        return self.engine.cover()

    def cover_cost(self) -> float:
        return self.cost()

    def undominated(self) -> List[int]:
        """Vertices with neither themselves nor a neighbour in the output."""
        chosen = {v for v, _ in self.dominating_set()}
        return [v for v in range(self.n)
                if v not in chosen and not (self.adj[v] & chosen)]

    def edges(self) -> List[Tuple[int, int]]:
        return sorted((u, v) for u in range(self.n) for v in self.adj[u] if u < v)
