"""Removing the dependence on the cost ratio with overlapping windows.

Every set gets a *top level* ``ceil(log_beta(n / cost))`` and belongs to
the two consecutive windows ``l`` and ``l + 1`` whose top-level ranges
``[lK, (l+2)K)`` contain it.  One inner engine runs per window on the
sets of that window and the elements whose cheapest set lives there.
Inner engines see a re-based level range: costs are multiplied by
``beta**o_l`` so inner level ``j`` means outer level ``j + o_l``.

The reported cover is the cheaper of the union over even windows and
the union over odd windows; each of them covers every alive element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Tuple

from .core_model import (REL_GUARD, NotFoundError, ParameterError, Params, SetSystem,
                         ceil_log, derive_params, inner_params)
from .scheduler import GreedyEngine


@dataclass
class WindowReport:
    """Per-update summary: total inner steps and the windows that did work."""

    index: int
    op: str
    steps: int
    touched: Tuple[int, ...]


class WindowedEngine:
    """Runs one inner engine per window and combines their covers.

    ``inner`` is the engine class used per window (``GreedyEngine`` by
    default, or the primal-dual engine); it must accept a ``Params`` as
    first argument plus ``inner_kw``.
    """

    def __init__(self, params: Params, inner: Callable = GreedyEngine, **inner_kw):
        if params.n_cap < 2 or not params.eps > 2.0 / params.n_cap ** 8:
            raise ParameterError(
                f"windowed mode needs eps > 2/n^8 (eps={params.eps}, n_cap={params.n_cap})")
        self.params = params
        self.inner = inner
        self.inner_kw = inner_kw
        beta = params.beta
        self.K = ceil_log(params.n_cap ** 10, beta)
        self.log_n = ceil_log(params.n_cap, beta)
        self.slack = params.L - params.top_cap
        # the wrapper keeps its own copy of the set system for routing
        self.system = SetSystem(params)
        self.engines: Dict[int, object] = {}
        self.route: Dict[Hashable, int] = {}
        self.updates = 0
        self.last_steps = 0
        self.max_steps = 0
        self.last_touched: Tuple[int, ...] = ()
        self.history: List[WindowReport] = []
        self.keep_history = False
        self.on_engine: Optional[Callable[[int, object], None]] = None

    @classmethod
    def create(cls, eps: float, C: float = 1.0, n_cap: int = 2, f_cap: int = 1, **kw):
        return cls(derive_params(eps, C, n_cap, f_cap), **kw)

    # -- window arithmetic -----------------------------------------------------
    def toplev(self, cost: float) -> int:
        return ceil_log(self.params.n_cap / cost, self.params.beta)

    def windows_of_set(self, cost: float) -> Tuple[int, int]:
        l = self.toplev(cost) // self.K - 1
        return l, l + 1

    def offset(self, l: int) -> int:
        """Outer level of inner level 0 in window ``l``."""
        return max(l * self.K - self.log_n - 1, 0)

    def window_params(self, l: int) -> Params:
        p = self.params
        o = self.offset(l)
        top = (l + 2) * self.K - o
        floor = p.n_cap * p.beta ** (1 - (l + 2) * self.K + o)
        return inner_params(p, top + self.slack, top, min(1.0, floor) * (1 - 1e-9))

    def _engine(self, l: int):
        eng = self.engines.get(l)
        if eng is None:
            eng = self.inner(self.window_params(l), **self.inner_kw)
            scale = self.params.beta ** self.offset(l)
            for sid, set_id in enumerate(self.system.set_ids):
                if l in self.windows_of_set(self.system.cost[sid]):
                    eng.add_set(set_id, min(1.0, self.system.cost[sid] * scale))
            self.engines[l] = eng
            if self.on_engine is not None:
                self.on_engine(l, eng)
        return eng

    # -- updates ---------------------------------------------------------------
    def add_set(self, set_id: Hashable, cost: float) -> None:
        self.system.add_set(set_id, cost)
        for l in self.windows_of_set(cost):
            eng = self.engines.get(l)
            if eng is not None:
                eng.add_set(set_id, min(1.0, cost * self.params.beta ** self.offset(l)))

    def _home(self, sids: Tuple[int, ...]) -> int:
        cost = self.system.cost
        best = min(sids, key=lambda s: (cost[s], s))
        return self.windows_of_set(cost[best])[0]

    def insert(self, eid: Hashable, member_sets: Iterable[Hashable]) -> WindowReport:
        life = self.system.open_life(eid, member_sets)
        l = self._home(life.members)
        self.route[eid] = l
        steps = 0
        for w in (l, l + 1):
            eng = self._engine(w)
            sids = [s for s in life.members if w in self.windows_of_set(self.system.cost[s])]
            eng.insert(eid, [self.system.set_ids[s] for s in sids])
            steps += eng.last_steps
        return self._finish("ins", steps, (l, l + 1))

    def delete(self, eid: Hashable) -> WindowReport:
        life = self.system.alive_life(eid)
        life.alive = False
        l = self.route.pop(eid, None)
        if l is None:
            raise NotFoundError(f"element {eid!r} is not routed")
        steps = 0
        for w in (l, l + 1):
            eng = self.engines[w]
            eng.delete(eid)
            steps += eng.last_steps
        return self._finish("del", steps, (l, l + 1))

    def _finish(self, op: str, steps: int, touched: Tuple[int, ...]) -> WindowReport:
        self.updates += 1
        self.last_steps = steps
        self.max_steps = max(self.max_steps, steps)
        self.last_touched = touched
        rep = WindowReport(self.updates, op, steps, touched)
        if self.keep_history:
            self.history.append(rep)
        return rep

    # -- output ------------------------------------------------------------------
    def union(self, parity: int) -> List[Tuple[Hashable, int, float]]:
        """Union of inner covers over windows ``l`` with ``l % 2 == parity``.

        Levels are translated back to the outer range.
        """
        out: Dict[Hashable, Tuple[int, float]] = {}
        for l, eng in self.engines.items():
            if l % 2 != parity:
                continue
            o = self.offset(l)
            for set_id, lev, _c in eng.cover():
                out[set_id] = (lev + o, self.system.cost[self.system.sid(set_id)])
        return sorted((s, lev, c) for s, (lev, c) in out.items())

    def output_cover(self) -> Tuple[List[Tuple[Hashable, int, float]], str]:
        even, odd = self.union(0), self.union(1)
        ce = sum(c for _, _, c in even)
        co = sum(c for _, _, c in odd)
        if co < ce:
            return odd, "odd"
        return even, "even"

    def cover(self) -> List[Tuple[Hashable, int, float]]:
        return self.output_cover()[0]

    def cover_cost(self) -> float:
        return sum(c for _, _, c in self.cover())

    def bound_L(self) -> int:
        """Largest inner top level among the windows touched last."""
        return max((self.engines[l].params.L for l in self.last_touched), default=0)

    def stats(self) -> dict:
        return {
            "last_update_steps": self.last_steps,
            "max_update_steps": self.max_steps,
            "windows": sorted(self.engines),
            "K": self.K,
        }

    def union_valid(self, parity: int) -> Optional[str]:
        """None if the parity union covers every alive element, else a message."""
        chosen = {s for s, _, _ in self.union(parity)}
        for eid, sids in self.system.alive_elements().items():
            if not any(self.system.set_ids[s] in chosen for s in sids):
                return f"element {eid!r} is not covered by the {'even' if parity == 0 else 'odd'} union"
        return None
