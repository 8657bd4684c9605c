"""The foreground controller of the greedy engine.

``GreedyEngine`` owns the set system, the version table and all live
reset instances.  Every update runs the same fixed protocol:

1. apply the update to the foreground (Foreground-Insert/-Delete);
2. feed it to the live instances whose level is high enough;
3. termination scan: the largest finished instance switches in, every
   instance below it is aborted;
4. initiation: every level without an instance gets one; the highest
   missing *short* level is run inline, the others in the background;
5. each background instance receives a budget of ``B`` steps (plus a
   closing sprint once fewer than ``2/eps`` uncovered elements remain);
6. a second termination scan switches in an instance that finished
   during step 5, then the short reset (if any) runs inline.

All work is metered in primitive steps; ``stats()`` reports them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Tuple

from .core_model import (Meter, Params, PowerTable, SetSystem, derive_params)
from .reset_instance import DONE, ResetInstance, step_budget
from .versioned_levels import ELEM, SET, VersionTable


@dataclass
class UpdateReport:
    """What happened during one update; consumed by tests and the CLI."""

    index: int
    op: str
    steps: int
    switched: Optional[int] = None
    short: Optional[int] = None
    aborted: Tuple[int, ...] = ()
    started: Tuple[int, ...] = ()


class GreedyEngine:
    """Dynamic ((1+eps) ln n)-approximate set cover with bounded work per update.

    ``budget_factor`` scales the per-instance budget ``ceil(factor f/eps)``;
    ``unbounded=True`` gives every instance unlimited budget (the
    amortized behaviour, intended for tests only).
    """

    instance_class = ResetInstance

    def __init__(self, params: Params, budget_factor: int = 8, unbounded: bool = False):
        self.params = params
        self.table = PowerTable(params.beta, params.L + 2)
        self.meter = Meter()
        self.system = SetSystem(params)
        self.vt = VersionTable(params.L, self.meter)
        self.instances: Dict[int, ResetInstance] = {}
        self.budget = step_budget(params, budget_factor)
        self.unbounded = unbounded
        self.updates = 0
        self.last_steps = 0
        self.max_steps = 0
        self.history: List[UpdateReport] = []
        self.keep_history = False
        # dead lifespans whose slot rows may still be referenced
        self._dead: List[int] = []
        self._dead_floor = 0
        # optional callbacks used by instrumented tests
        self.on_switch: Optional[Callable[["GreedyEngine", ResetInstance, str], None]] = None
        self.on_start: Optional[Callable[["GreedyEngine", ResetInstance], None]] = None

    @classmethod
    def create(cls, eps: float, C: float = 1.0, n_cap: int = 1, f_cap: int = 1, **kw):
        return cls(derive_params(eps, C, n_cap, f_cap), **kw)

    # -- registration --------------------------------------------------------
    def add_set(self, set_id: Hashable, cost: float) -> None:
        self.system.add_set(set_id, cost)

    # -- updates -------------------------------------------------------------
    def insert(self, eid: Hashable, member_sets: Iterable[Hashable]) -> UpdateReport:
        life = self.system.open_life(eid, member_sets)
        self._begin()
        plev = self._fg_insert(life.idx, life.members)
        for k, inst in list(self.instances.items()):
            if k >= plev:
                inst.feed_insert(life.idx)
        return self._protocol("ins")

    def delete(self, eid: Hashable) -> UpdateReport:
        life = self.system.alive_life(eid)
        self._begin()
        lev = self._fg_delete(life.idx)
        for k, inst in list(self.instances.items()):
            if k >= lev:
                inst.feed_delete(life.idx)
        return self._protocol("del")

    def _begin(self) -> None:
        self.updates += 1
        self.meter.count = 0

    def _fg_insert(self, idx: int, members: Tuple[int, ...]) -> int:
        vt = self.vt
        best, best_s = -1, -1
        for s in members:
            lev = vt.read_foreground_level(SET, s)
            if lev > best:
                best, best_s = lev, s
        if best < 0:
            # all containing sets are outside the cover: raise the lowest id
            best_s = min(members)
            best = 0
            vt.foreground_place(SET, best_s, 0)
        vt.foreground_place(ELEM, idx, best, plev=best, asn=best_s)
        return best

    def _fg_delete(self, idx: int) -> int:
        cell = self.vt.foreground_cell(ELEM, idx)
        cell.plev = cell.lev
        self.system.lives[idx].alive = False
        self._dead.append(idx)
        self.meter.charge(1)
        return cell.lev

    def _protocol(self, op: str) -> UpdateReport:
        report = UpdateReport(self.updates, op, 0)
        L = self.params.L
        self._scan(report)
        # initiation
        self.meter.charge(L + 1)
        j = self._short_boundary()
        live = self.instances
        short = next((k for k in range(min(j, L + 1) - 1, -1, -1) if k not in live), None)
        started = []
        for k in range(j, L + 1):
            if k not in live:
                inst = self.instance_class(k, self.params, self.table, self.system, self.vt,
                                           clock=self._clock).start()
                self.instances[k] = inst
                started.append(k)
                if self.on_start is not None:
                    self.on_start(self, inst)
        report.started = tuple(started)
        # background work
        budget = 1 << 62 if self.unbounded else self.budget
        for k in sorted(self.instances):
            inst = self.instances[k]
            if inst.phase != DONE:
                inst.step(budget)
        # second scan: an instance that finished just now switches at once,
        # before any further update is fed to it
        self._scan(report)
        # the highest short level runs inline
        if short is not None:
            ks = short
            inst = self.instance_class(ks, self.params, self.table, self.system, self.vt,
                                       clock=self._clock).start()
            if self.on_start is not None:
                self.on_start(self, inst)
            inst.run_to_completion()
            self._switch(inst, "short")
            report.short = ks
            report.aborted = report.aborted + self._abort_below(ks)
        report.steps = self.meter.count
        self._collect()
        self.last_steps = self.meter.count
        self.max_steps = max(self.max_steps, self.meter.count)
        if self.keep_history:
            self.history.append(report)
        return report

    def _collect(self) -> None:
        """Drop slot rows of dead lifespans that nothing can reach any more.

        This is memory housekeeping only (not part of the metered work);
        a full pass runs whenever the backlog doubles, so it is amortized
        constant time per deletion.
        """
        if len(self._dead) < 64 + len(self.system.current) + 2 * self._dead_floor:
            return
        vt = self.vt
        keep = []
        for idx in self._dead:
            if vt.collectable(ELEM, idx):
                vt.forget(ELEM, idx)
            else:
                keep.append(idx)
        self._dead = keep
        self._dead_floor = len(keep)

    def _scan(self, report: UpdateReport) -> None:
        """Termination scan: the largest finished instance switches in."""
        done = [k for k, inst in self.instances.items() if inst.phase == DONE]
        self.meter.charge(self.params.L + 1)
        if done:
            k = max(done)
            self._switch(self.instances.pop(k), "background")
            report.switched = k
            report.aborted = report.aborted + self._abort_below(k)

    def _clock(self) -> int:
        return self.updates

    def _switch(self, inst: ResetInstance, how: str) -> None:
        if self.on_switch is not None:
            self.on_switch(self, inst, "before")
        plan = inst.finalize()
        self.vt.switch_to_foreground(plan.column)
        if self.on_switch is not None:
            self.on_switch(self, inst, "after")

    def _abort_below(self, k: int) -> Tuple[int, ...]:
        gone = tuple(sorted(x for x in self.instances if x < k))
        for x in gone:
            self.instances.pop(x).abort()
        self.meter.charge(len(gone) + 1)
        return gone

    def _short_boundary(self) -> int:
        """Level of the ceil(L/f)-th element counted from level 0 upwards.

        Levels strictly below it are short; if there are fewer elements
        the boundary is past the top level and every level is short.
        """
        need = math.ceil(self.params.L / self.params.f_cap)
        seen = 0
        heads = 0
        segs = self.vt.segs[ELEM]
        for level in range(self.params.L + 2):
            seg = segs[level]
            if seg:
                for h in seg:
                    heads += 1
                    if h.fg:
                        seen += len(h.members)
                if seen >= need:
                    self.meter.charge(heads)
                    return level
        self.meter.charge(heads)
        return self.params.L + 2

    # -- queries ---------------------------------------------------------------
    def set_level(self, set_id: Hashable) -> int:
        return self.vt.read_foreground_level(SET, self.system.sid(set_id))

    def cover(self) -> List[Tuple[Hashable, int, float]]:
        out = []
        sys = self.system
        for sid, cell in self.vt.foreground_entities(SET):
            out.append((sid, cell.lev))
        out.sort()
        return [(sys.set_ids[sid], lev, sys.cost[sid]) for sid, lev in out]

    def cover_cost(self) -> float:
        return sum(c for _, _, c in self.cover())

    def stats(self) -> dict:
        counts: Dict[int, int] = {}
        for _idx, cell in self.vt.foreground_entities(ELEM):
            counts[cell.lev] = counts.get(cell.lev, 0) + 1
        return {
            "last_update_steps": self.last_steps,
            "max_update_steps": self.max_steps,
            "live_instances": len(self.instances),
            "counts_per_level": dict(sorted(counts.items())),
        }

    def element_state(self):
        """eid -> (alive, lev, plev, asn set index) for present elements."""
        out = {}
        lives = self.system.lives
        for idx, cell in self.vt.foreground_entities(ELEM):
            life = lives[idx]
            out[idx] = (life.alive, cell.lev, cell.plev, cell.asn)
        return out

    def audit_view(self):
        """Snapshot of the foreground for :class:`~dynsetcover.oracle_verify.Auditor`."""
        from .oracle_verify import AuditView

        sys = self.system
        p = self.params
        set_lev = [-1] * len(sys.cost)
        dup = []
        seen = set()
        for sid, cell in self.vt.foreground_entities(SET):
            if sid in seen:
                dup.append(sid)
            seen.add(sid)
            set_lev[sid] = cell.lev
        view = AuditView("greedy", p.eps, p.beta, p.L, p.top_cap, list(sys.cost), set_lev,
                         [], [], [], [], [], [], duplicate_foreground=dup)
        seen = set()
        for idx, cell in self.vt.foreground_entities(ELEM):
            if idx in seen:
                dup.append(idx)
                continue
            seen.add(idx)
            life = sys.lives[idx]
            view.elem_idx.append(idx)
            view.elem_alive.append(life.alive)
            view.elem_lev.append(cell.lev)
            view.elem_plev.append(cell.plev)
            view.elem_asn.append(cell.asn)
            view.elem_members.append(life.members)
        view.alive_expected = sum(1 for i in sys.current.values() if sys.lives[i].alive)
        return view
