"""A resumable greedy rebuild of all levels ``0 .. k``.

The instance snapshots the foreground level lists (by reference) when it
starts, then does all of its work in small atomic chunks driven by a
generator.  Each chunk reports the number of primitive steps it used, so
the scheduler can hand out a fixed budget per update.  Updates that
arrive while the instance is running are applied to its private copy
immediately by ``feed_insert`` / ``feed_delete``.

Phases: ``INIT`` (capture elements, build the heap), ``ROUND`` (greedy
rounds ``k+1`` down to ``0``), ``DONE`` (waiting for the termination
scan), then ``SWITCHED`` or ``ABORTED``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from .core_model import Params, PowerTable, ProtocolError, SetSystem, StaleInstanceError
from .truncated_heap import TruncatedHeap
from .versioned_levels import ELEM, SET, Cell, Column, VersionTable

INIT = "init"
ROUND = "round"
DONE = "done"
SWITCHED = "switched"
ABORTED = "aborted"


def step_budget(params: Params, factor: int = 8) -> int:
    """Per-update step budget of one background instance: ceil(8 f / eps)."""
    return math.ceil(factor * params.f_cap / params.eps)


@dataclass
class Progress:
    steps: int
    phase: str


@dataclass
class SwitchPlan:
    """What the scheduler needs to promote a finished instance."""

    k: int
    column: Column
    participants: int
    dropped: int = 0


@dataclass
class RoundEntry:
    """Recorded at every round entry; used by the pace checks."""

    k: int
    i: int
    hi: int
    size: int
    update: int


class ResetInstance:
    """reset(k) over the foreground held in ``vt`` and ``system``."""

    def __init__(self, k: int, params: Params, table: PowerTable, system: SetSystem,
                 vt: VersionTable, clock: Callable[[], int] = lambda: 0):
        self.k = k
        self.params = params
        self.table = table
        self.system = system
        self.vt = vt
        self.meter = vt.meter
        self.clock = clock
        self.col: Optional[Column] = None
        self.phase = INIT
        self.round = k + 1
        self.ecell: Dict[int, Cell] = {}
        self.scell: Dict[int, Cell] = {}
        self.unc: Dict[int, None] = {}
        self.cap: Dict[int, Dict[int, None]] = {}
        self.heap: Optional[TruncatedHeap] = None
        self.pend: Dict[int, None] = {}
        self.pend_set = -1
        self.pend_lev = -1
        self.entries: List[RoundEntry] = []
        self.round_hook: Optional[Callable[["ResetInstance", int], None]] = None
        self.started_at = 0
        self.done_at = -1
        self._work = None

    # -- lifecycle --------------------------------------------------------
    def start(self) -> "ResetInstance":
        if self.col is not None:
            raise ProtocolError(f"reset({self.k}) already started")
        self.col = self.vt.open_column(self.k)
        # copy the list-head references of E_0 .. E_k (O(k))
        self._snap = self.vt.segs[ELEM][:self.k + 1]
        self.meter.charge(self.k + 1)
        self.started_at = self.clock()
        self._work = self._plan()
        self._final_left = 0
        next(self._work)
        return self

    @property
    def live(self) -> bool:
        return self.phase in (INIT, ROUND, DONE)

    def _check_live(self) -> None:
        if not self.live:
            raise StaleInstanceError(f"reset({self.k}) is {self.phase}")

    def step(self, budget: int) -> Progress:
        """Run planned work until at least ``budget`` steps are used.

        The plan generator receives the budget through ``send`` and yields
        the (non-positive) remainder once it is used up, so one call costs
        a single generator resume.
        """
        self._check_live()
        if self.phase == DONE or budget <= 0:
            return Progress(0, self.phase)
        try:
            left = self._work.send(budget)
        except StopIteration:
            left = self._final_left
        used = budget - left
        if self.phase == ROUND and self.params.eps * len(self.unc) < 2:
            # closing sprint: fewer than 2/eps uncovered elements remain, so
            # the rest of the rounds is O(f/eps) work and is done right away
            try:
                left = self._work.send(1 << 62)
            except StopIteration:
                left = self._final_left
            used += (1 << 62) - left
        self.meter.charge(used)
        return Progress(used, self.phase)

    def run_to_completion(self) -> int:
        return self.step(1 << 62).steps

    def abort(self) -> None:
        if self.phase == ABORTED:
            return
        self.phase = ABORTED
        if self.col is not None:
            self.vt.abort(self.col)
        self._work = None

    def finalize(self) -> SwitchPlan:
        if self.phase != DONE:
            raise ProtocolError(f"reset({self.k}) cannot finalize in phase {self.phase}")
        self.phase = SWITCHED
        self._work = None
        return SwitchPlan(self.k, self.col, len(self.ecell))

    # -- planned work ---------------------------------------------------------
    def _plan(self):
        # Every chunk subtracts its cost from ``left``; when the budget is
        # used up the generator hands back the overshoot and waits.
        left = yield 0
        k = self.k
        lives = self.system.lives
        ecell, scell, cap, unc = self.ecell, self.scell, self.cap, self.unc
        vt, col = self.vt, self.col
        new_cell = vt.new_cell
        # Phase I: capture alive elements of levels 0..k
        for lst in self._snap:
            left -= 1
            if not lst:
                continue
            j = 0
            while j < len(lst):
                head = lst[j]
                j += 1
                left -= 1
                if left <= 0:
                    left = yield left
                for idx, fcell in list(head.members.items()):
                    life = lives[idx]
                    if idx in ecell or not life.alive:
                        left -= 1
                        if left <= 0:
                            left = yield left
                        continue
                    members = life.members
                    cell = new_cell(ELEM, idx, col)
                    cell.plev = fcell.plev if fcell.plev > k + 1 else k + 1
                    ecell[idx] = cell
                    unc[idx] = None
                    for s in members:
                        c = cap.get(s)
                        if c is None:
                            scell[s] = new_cell(SET, s, col)
                            c = cap[s] = {}
                        c[idx] = None
                    left -= 2 + len(members)
                    if left <= 0:
                        left = yield left
        self._snap = None
        heap = TruncatedHeap(self.table, k + 1, k + 1)
        self.heap = heap
        cost = self.system.cost
        for s in list(scell):
            if s not in heap and scell[s].lev < 0:
                heap.insert(s, len(cap[s]), cost[s])
            left -= 1
            if left <= 0:
                left = yield left
        # Phase II: rounds k+1 .. 0.  Runs of empty rounds are skipped in one
        # step using the heap's non-empty-bucket mask.
        self.phase = ROUND
        i = k + 1
        self._enter_round(i, i)
        pend = None
        while True:
            s = heap.extract_at_threshold()
            if s is not None:
                self._commit(s, i)
                left -= 2
                if left <= 0:
                    left = yield left
                pend = self.pend
                while pend:
                    e = next(iter(pend))
                    del pend[e]
                    left -= self._assign(e, s, i)
                    if left <= 0:
                        left = yield left
                    pend = self.pend
                self.pend_set = -1
                continue
            j = heap.highest_nonempty(i - 1) if i > 0 else -1
            if j < 0:
                if i > 0:
                    heap.set_round(0)
                    self._enter_round(0, i - 1)
                self.round = 0
                self.phase = DONE
                self.done_at = self.clock()
                self._final_left = left - 1
                return
            heap.set_round(j)
            i = j
            self._enter_round(j, self.round - 1)
            left -= 1
            if left <= 0:
                left = yield left

    def _enter_round(self, i: int, hi: int) -> None:
        """Record entry into round ``i`` (rounds ``hi .. i`` entered at once)."""
        self.round = i
        self.entries.append(RoundEntry(self.k, i, hi, len(self.unc), self.clock()))
        if self.round_hook is not None:
            self.round_hook(self, i)

    def _commit(self, s: int, i: int) -> None:
        self.heap.remove(s)
        self.vt.write_background_level(SET, s, self.col, i, self.scell[s])
        self.pend = self.cap.pop(s)
        self.pend_set = s
        self.pend_lev = i

    def _assign(self, e: int, s: int, i: int) -> int:
        """Cover uncovered ``e`` by ``s`` at level ``i``; returns steps used."""
        cell = self.ecell[e]
        self.vt.write_background_level(ELEM, e, self.col, i, cell)
        cell.asn = s
        del self.unc[e]
        if not self.system.lives[e].alive:
            cell.plev = i
        heap, cap = self.heap, self.cap
        steps = 2
        for s2 in self.system.lives[e].members:
            steps += 1
            if s2 != s and s2 in heap:
                c = cap[s2]
                del c[e]
                heap.rekey(s2, len(c))
        return steps

    # -- fed updates ---------------------------------------------------------
    def _cover_level(self, members) -> int:
        best, best_s = -1, -1
        for s in members:
            c = self.scell.get(s)
            if c is not None and c.lev > best:
                best, best_s = c.lev, s
        return best_s

    def feed_insert(self, e: int) -> None:
        """An element inserted at foreground passive level <= k."""
        self._check_live()
        members = self.system.lives[e].members
        steps = 1 + len(members)
        vt, col = self.vt, self.col
        if e in self.ecell:
            return
        if self.phase == INIT:
            cell = vt.new_cell(ELEM, e, col)
            cell.plev = self.k + 1
            self.ecell[e] = cell
            self.unc[e] = None
            self._join_sets(e, members, uncovered=True)
            self.meter.charge(steps)
            return
        best_s = self._cover_level(members)
        cell = vt.new_cell(ELEM, e, col)
        self.ecell[e] = cell
        if best_s >= 0:
            lev = self.scell[best_s].lev
            vt.write_background_level(ELEM, e, col, lev, cell)
            cell.plev = lev
            cell.asn = best_s
            self._join_sets(e, members, uncovered=False)
            self.meter.charge(steps + 1)
            return
        cell.plev = self.round if self.phase == ROUND else 0
        self.unc[e] = None
        self._join_sets(e, members, uncovered=True)
        if self.phase == DONE:
            # round 0 is over but still conceptually open: finish it inline
            s = self.heap.extract_at_threshold()
            self._commit(s, 0)
            steps += 2
            while self.pend:
                x = next(iter(self.pend))
                del self.pend[x]
                steps += self._assign(x, s, 0)
            self.pend_set = -1
        self.meter.charge(steps)

    def _join_sets(self, e: int, members, uncovered: bool) -> None:
        scell, cap, heap = self.scell, self.cap, self.heap
        cost = self.system.cost
        for s in members:
            c = scell.get(s)
            if c is None:
                scell[s] = self.vt.new_cell(SET, s, self.col)
                cap[s] = {}
                if heap is not None:
                    heap.insert(s, 0, cost[s])
            elif c.lev >= 0:
                continue
            if uncovered:
                cap[s][e] = None
                if heap is not None:
                    if s in heap:
                        heap.rekey(s, len(cap[s]))
                    else:
                        heap.insert(s, len(cap[s]), cost[s])

    def feed_delete(self, e: int) -> None:
        """An element deleted at foreground level <= k (already marked dead)."""
        self._check_live()
        cell = self.ecell.get(e)
        if cell is None:
            return
        members = self.system.lives[e].members
        steps = 1
        if e in self.pend:
            del self.pend[e]
            steps += self._assign(e, self.pend_set, self.pend_lev)
        if e in self.unc:
            del self.unc[e]
            del self.ecell[e]
            cap, heap = self.cap, self.heap
            for s in members:
                steps += 1
                c = cap.get(s)
                if c is not None and e in c:
                    del c[e]
                    if heap is not None and s in heap:
                        heap.rekey(s, len(c))
            cell.plev = cell.lev = -1
        elif self.phase == INIT:
            del self.ecell[e]
        else:
            cell.plev = cell.lev
        self.meter.charge(steps)

    # -- views for tests -------------------------------------------------------
    def levels(self):
        """(set levels, element (lev, plev, asn)) of this instance's copy."""
        sets = {s: c.lev for s, c in self.scell.items()}
        elems = {e: (c.lev, c.plev, c.asn) for e, c in self.ecell.items()}
        return sets, elems


def run_short(k: int, params: Params, table: PowerTable, system: SetSystem,
              vt: VersionTable, prefix_size: int) -> SwitchPlan:
    """Run reset(k) to completion within the current update.

    Only allowed when ``f * prefix_size < L`` (a short level).
    """
    if params.f_cap * prefix_size >= params.L:
        raise ProtocolError(
            f"level {k} is not short: f*|prefix| = {params.f_cap * prefix_size} >= L")
    inst = ResetInstance(k, params, table, system, vt).start()
    inst.run_to_completion()
    return inst.finalize()
