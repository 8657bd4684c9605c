"""The low-frequency engine: element weights, tight sets, water-filling resets.

Every set has a level ``>= 0`` and a weight ``w(s)``, the sum of the
weights of the present elements it contains; a set is *tight* when
``w(s) > cost(s) / beta``.  The output cover is the collection of tight
sets.  Elements are active (weight exactly ``beta**-lev``), passive
(weight at most that) or dead (weight frozen until a reset removes them).

The foreground handles insertions lazily: a new element gets weight 0
if one of its sets is tight, otherwise the smallest remaining slack of
its sets, which saturates that set.  The background rebuild of levels
``0 .. k`` is a water-filling procedure with the same resumable shape,
scheduling and memory switch as the greedy engine:

* initialization: every participant gets weight ``min(slack, beta**-(k+1))``
  (previously active elements first, so they always get the full
  amount); sets that are already tight go to level ``k+1``;
* rounds ``k .. 0``: the slack elements ``U`` rise together; a set whose
  *target level* (the highest round at which raising its slack elements
  would make it tight) equals the current round is placed there and its
  slack elements become active at that level;
* an insertion that arrives while round ``i`` is open joins the slack
  elements if every containing set can still absorb one more rising
  element; otherwise it gets the largest weight its sets allow, which
  makes one of them tight at round ``i``, and stays passive at level
  ``i``; should a later deletion undo that saturation, the element is
  settled again once the rounds are over.  Insertions during the late part of initialization wait for
  round ``k`` to open; those after the last round use the foreground
  rule on the rebuilt copy.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Callable, Dict, Hashable, List, Optional

from .core_model import Params, PowerTable, SetSystem
from .reset_instance import (DONE, INIT, ROUND, ResetInstance, RoundEntry, SwitchPlan)
from .scheduler import GreedyEngine
from .truncated_heap import TruncatedHeap
from .versioned_levels import ELEM, SET, VersionTable

# Tightness is decided with this relative tolerance in favour of "tight".
TIGHT_TOL = 1e-12


def is_tight(weight: float, cost: float, beta: float) -> bool:
    return weight > cost / beta - TIGHT_TOL * cost


class WaterFillInstance(ResetInstance):
    """reset(k) for the primal-dual engine.

    Participants are the elements of levels ``0 .. k`` at the moment the
    instance starts.  Their set weights are read as of that moment:
    later foreground increments are undone through each set cell's
    increment log, so a participant's contribution can be subtracted
    exactly and replaced by the weight this instance assigns.
    """

    def __init__(self, k: int, params: Params, table: PowerTable, system: SetSystem,
                 vt: VersionTable, clock: Callable[[], int] = lambda: 0):
        super().__init__(k, params, table, system, vt, clock)
        self.W = table.pow(k + 1) ** -1
        self.base: Dict[int, float] = {}
        self.sub: Dict[int, float] = {}
        self.mem: Dict[int, Dict[int, None]] = {}
        self.ucount: Dict[int, int] = {}
        self.committed: Dict[int, None] = {}
        self.deferred: Dict[int, None] = {}
        # elements placed passive by a late insertion that saturated a set
        self.joined: Dict[int, None] = {}
        self.prior_active: Dict[int, bool] = {}
        # slack elements whose initial weight is below W, and per set the
        # total shortfall sum(W - w) over its slack elements
        self.short: Dict[int, float] = {}
        self.gap: Dict[int, float] = {}
        self.t0 = 0
        self._late = False
        self._open = False

    def start(self) -> "WaterFillInstance":
        super().start()
        vt, k = self.vt, self.k
        # copy the head lists so later switches and appends are not seen
        self._snapS = [list(vt.segs[SET][i]) for i in range(k + 1)]
        self._snap = [list(vt.segs[ELEM][i]) for i in range(k + 1)]
        self.meter.charge(sum(len(x) for x in self._snapS) + sum(len(x) for x in self._snap))
        self.t0 = self.clock()
        return self

    # -- helpers -----------------------------------------------------------
    def _tight(self, s: int) -> bool:
        return is_tight(self.scell[s].w, self.system.cost[s], self.params.beta)

    def _touch_set(self, s: int):
        c = self.scell.get(s)
        if c is None:
            c = self.scell[s] = self.vt.new_cell(SET, s, self.col)
            self.mem[s] = {}
        return c

    def _tarlev(self, s: int) -> int:
        """Highest round at which raising the slack elements of ``s`` makes it tight."""
        u = self.ucount.get(s, 0)
        if u == 0:
            return -1
        cost = self.system.cost[s]
        need = cost / self.params.beta - TIGHT_TOL * cost - self.scell[s].w - self.gap.get(s, 0.0)
        t = need / u + self.W
        if t <= self.W:
            return self.k + 1
        j = bisect_left(self.table.powers, 1.0 / t) - 1
        return max(0, min(j, self.k + 1))

    def _place_elem(self, e: int, level: int, w: float, active: bool, asn: int) -> None:
        cell = self.ecell[e]
        self.vt.write_background_level(ELEM, e, self.col, level, cell)
        cell.plev = level
        cell.w = w
        cell.act = active
        cell.asn = asn

    def _fg_rule(self, e: int) -> int:
        """Place ``e`` in this copy the way the foreground inserts an element."""
        members = self.system.lives[e].members
        cost = self.system.cost
        best_lev, tight_s = 0, -1
        for s in members:
            c = self._touch_set(s)
            if c.lev < 0:
                self.vt.write_background_level(SET, s, self.col, 0, c)
            if c.lev > best_lev:
                best_lev = c.lev
            if tight_s < 0 and self._tight(s):
                tight_s = s
        if tight_s >= 0:
            w, asn = 0.0, tight_s
        else:
            asn = min(members, key=lambda s: (cost[s] - self.scell[s].w, s))
            w = max(0.0, cost[asn] - self.scell[asn].w)
            for s in members:
                self.scell[s].w += w
        for s in members:
            self.mem[s][e] = None
        self._place_elem(e, best_lev, w, False, asn)
        return 2 + 2 * len(members)

    # -- planned work -----------------------------------------------------------
    def _plan(self):
        left = yield 0
        k, t0 = self.k, self.t0
        lives = self.system.lives
        cost = self.system.cost
        ecell, scell, unc = self.ecell, self.scell, self.unc
        vt, col = self.vt, self.col
        base, sub = self.base, self.sub
        # Phase I(a): set weights as of the start
        for lst in self._snapS:
            left -= 1
            for head in lst:
                left -= 1
                for s, fcell in list(head.members.items()):
                    if fcell.born > t0:
                        left -= 1
                        continue
                    w = fcell.w
                    n = 1
                    if fcell.log:
                        for t, d in reversed(fcell.log):
                            if t <= t0:
                                break
                            w -= d
                            n += 1
                    self._touch_set(s)
                    base[s] = w
                    left -= 1 + n
                    if left <= 0:
                        left = yield left
        self._snapS = None
        # Phase I(b): capture elements; dead ones are dropped
        for lst in self._snap:
            left -= 1
            for head in lst:
                left -= 1
                for idx, fcell in list(head.members.items()):
                    if fcell.born > t0 or idx in ecell:
                        left -= 1
                        continue
                    life = lives[idx]
                    for s in life.members:
                        self._touch_set(s)
                        sub[s] = sub.get(s, 0.0) + fcell.w
                    if life.alive:
                        ecell[idx] = vt.new_cell(ELEM, idx, col)
                        self.prior_active[idx] = fcell.act
                        for s in life.members:
                            self.mem[s][idx] = None
                    left -= 2 + len(life.members)
                    if left <= 0:
                        left = yield left
        self._snap = None
        # Phase I(c): weights without the participants
        for s, c in scell.items():
            w = base.get(s, 0.0) - sub.get(s, 0.0)
            c.w = w if w > 1e-12 else 0.0
            left -= 1
            if left <= 0:
                left = yield left
        # Phase I(d): initial participant weights, previously active first
        W = self.W
        order = [e for e in ecell if self.prior_active.get(e)]
        order += [e for e in ecell if not self.prior_active.get(e)]
        self._init_w: Dict[int, float] = {}
        self._late = True
        for e in order:
            if e not in ecell:
                left -= 1
                continue
            members = lives[e].members
            w = W
            for s in members:
                slack = cost[s] - scell[s].w
                if slack < w:
                    w = slack
            w = max(w, 0.0)
            for s in members:
                scell[s].w += w
            self._init_w[e] = w
            left -= 1 + 2 * len(members)
            if left <= 0:
                left = yield left
        # sets tight already go to level k+1 with all their participants
        for s in list(scell):
            if scell[s].lev < 0 and self._tight(s) and self.mem[s]:
                self._commit_set(s, k + 1)
            left -= 1
            if left <= 0:
                left = yield left
        for e in list(ecell):
            if e not in self._init_w:
                left -= 1
                continue
            members = lives[e].members
            tight_s = -1
            for s in members:
                if s in self.committed:
                    tight_s = s
                    break
            w = self._init_w.pop(e)
            if tight_s >= 0:
                self._place_elem(e, k + 1, w, w >= W, tight_s)
            else:
                unc[e] = None
                for s in members:
                    self.ucount[s] = self.ucount.get(s, 0) + 1
                if w < W:
                    # a deletion undid the saturation that limited this weight
                    self.short[e] = W - w
                    for s in members:
                        self.gap[s] = self.gap.get(s, 0.0) + W - w
            left -= 1 + len(members)
            if left <= 0:
                left = yield left
        heap = TruncatedHeap(self.table, k, k)
        self.heap = heap
        for s in list(scell):
            if s not in self.committed and self.ucount.get(s, 0) > 0:
                heap.insert_key(s, self._tarlev(s))
            left -= 1
            if left <= 0:
                left = yield left
        # Phase II: rounds k .. 0
        self.phase = ROUND
        i = k
        self._enter_round(i, k + 1)
        self._open = True
        while self.deferred:
            e = next(iter(self.deferred))
            del self.deferred[e]
            left -= self._join(e, k)
            if left <= 0:
                left = yield left
        while True:
            s = heap.extract_at_threshold()
            if s is not None:
                heap.remove(s)
                self._commit_set(s, i)
                # pending raises, recorded together with the commit; a
                # deletion of a pending element raises it first
                self.pend = {x: None for x in self.mem[s] if x in unc}
                self.pend_set, self.pend_lev = s, i
                left -= 2
                if left <= 0:
                    left = yield left
                while self.pend:
                    e = next(iter(self.pend))
                    del self.pend[e]
                    left -= self._raise(e, s, i)
                    if left <= 0:
                        left = yield left
                self.pend_set = -1
                continue
            j = heap.highest_nonempty(i - 1) if i > 0 else -1
            if j < 0:
                if i > 0:
                    heap.set_round(0)
                    self._enter_round(0, i - 1)
                self.round = 0
                self._open = False
                break
            heap.set_round(j)
            i = j
            self._enter_round(j, self.round - 1)
            left -= 1
            if left <= 0:
                left = yield left
        # Phase III: write the remaining set levels, then place insertions
        # that came after the last round (the drain is last, so nothing can
        # be deferred after it)
        for s in list(scell):
            c = scell[s]
            if c.lev < 0:
                vt.write_background_level(SET, s, col, 0, c)
            left -= 1
            if left <= 0:
                left = yield left
        for e in list(self.joined):
            left -= self._settle(e)
            if left <= 0:
                left = yield left
        self.joined.clear()
        while self.deferred:
            e = next(iter(self.deferred))
            del self.deferred[e]
            left -= self._fg_rule(e)
            if left <= 0:
                left = yield left
        self.phase = DONE
        self.done_at = self.clock()
        self._final_left = left - 1

    def _commit_set(self, s: int, i: int) -> None:
        self.vt.write_background_level(SET, s, self.col, i, self.scell[s])
        self.committed[s] = None

    def _drop(self, s: int) -> None:
        """Take a set without slack elements out of the heap.

        A set that is tight by then (a late insertion saturated it while
        it waited in the current round's bucket) is placed at this round.
        """
        self.heap.remove(s)
        if s not in self.committed and self._tight(s):
            self._commit_set(s, self.round)

    def _raise(self, e: int, s: int, i: int) -> int:
        """Make slack element ``e`` active at level ``i`` (set ``s`` went tight)."""
        w = self.table.pow(i) ** -1
        del self.unc[e]
        members = self.system.lives[e].members
        heap, scell, ucount = self.heap, self.scell, self.ucount
        lack = self.short.pop(e, 0.0)
        delta = w - self.W + lack
        for s2 in members:
            scell[s2].w += delta
            ucount[s2] -= 1
            if lack:
                self.gap[s2] -= lack
        for s2 in members:
            if s2 in heap:
                if ucount[s2] == 0:
                    self._drop(s2)
                else:
                    heap.rekey_key(s2, self._tarlev(s2))
        self._place_elem(e, i, w, True, s)
        return 2 + 2 * len(members)

    def _join(self, e: int, i: int) -> int:
        """Place an element inserted while round ``i`` is open."""
        members = self.system.lives[e].members
        scell, cost, heap = self.scell, self.system.cost, self.heap
        top, top_s = -1, -1
        for s in members:
            self._touch_set(s)
            self.mem[s][e] = None
            if s in self.committed and scell[s].lev > top:
                top, top_s = scell[s].lev, s
        steps = 2 + 2 * len(members)
        if top_s >= 0:
            # already covered by a tight set of the copy
            self._place_elem(e, top, 0.0, False, top_s)
            return steps
        W = self.W
        wi = self.table.pow(i) ** -1
        # room(s): what is left of cost(s) once the slack elements of s
        # have risen to beta^-i
        room = {s: cost[s] - (scell[s].w + self.gap.get(s, 0.0)
                              + self.ucount.get(s, 0) * (wi - W)) for s in members}
        tightest = min(members, key=lambda s: (room[s], s))
        if room[tightest] >= wi:
            self.unc[e] = None
            for s in members:
                scell[s].w += W
                self.ucount[s] = self.ucount.get(s, 0) + 1
            for s in members:
                if s in heap:
                    heap.rekey_key(s, self._tarlev(s))
                else:
                    heap.insert_key(s, self._tarlev(s))
            return steps
        # the weight that saturates the tightest set at round i; that set
        # is extracted in this round (or committed now if it has no slack
        # elements left)
        w = max(room[tightest], 0.0)
        for s in members:
            scell[s].w += w
        for s in members:
            if s in heap:
                heap.rekey_key(s, self._tarlev(s))
            elif self._tight(s):
                self._commit_set(s, i)
        self._place_elem(e, i, w, False, tightest)
        self.joined[e] = None
        return steps

    def _settle(self, e: int) -> int:
        """Final placement of a joined element once all set levels are known.

        A later deletion may have undone the saturation the element relied
        on: its set then went tight at a lower round, or not at all.  In the
        first case the element follows its highest set; in the second its
        weight is withdrawn and it is placed like a foreground insertion.
        """
        life = self.system.lives[e]
        if not life.alive or e not in self.ecell:
            return 1
        members = life.members
        scell = self.scell
        tight = [s for s in members if self._tight(s)]
        if tight:
            cell = self.ecell[e]
            lev = max(scell[s].lev for s in members)
            if lev != cell.lev:
                asn = max(tight, key=lambda s: (scell[s].lev, -s))
                self._place_elem(e, lev, cell.w, False, asn)
            return 1 + len(members)
        w = self.ecell[e].w
        for s in members:
            scell[s].w -= w
        return 1 + len(members) + self._fg_rule(e)

    def _enter_round(self, i: int, hi: int) -> None:
        self.round = i
        self.entries.append(RoundEntry(self.k, i, hi, len(self.unc), self.clock()))
        if self.round_hook is not None:
            self.round_hook(self, i)

    # -- fed updates ------------------------------------------------------------
    def feed_insert(self, e: int) -> None:
        self._check_live()
        if e in self.ecell:
            return
        members = self.system.lives[e].members
        self.ecell[e] = self.vt.new_cell(ELEM, e, self.col)
        if self.phase == INIT and not self._late:
            for s in members:
                self._touch_set(s)
                self.mem[s][e] = None
            self.prior_active[e] = False
            self.meter.charge(1 + len(members))
        elif self._open:
            self.meter.charge(self._join(e, self.round))
        elif self.phase != DONE:
            self.deferred[e] = None
            self.meter.charge(1)
        else:
            self.meter.charge(self._fg_rule(e))

    def feed_delete(self, e: int) -> None:
        self._check_live()
        cell = self.ecell.get(e)
        if cell is None:
            return
        members = self.system.lives[e].members
        steps = 1
        if e in self.pend:
            del self.pend[e]
            steps += self._raise(e, self.pend_set, self.pend_lev)
        if e in self.deferred:
            del self.deferred[e]
            del self.ecell[e]
        elif e in self.unc:
            del self.unc[e]
            del self.ecell[e]
            heap = self.heap
            lack = self.short.pop(e, 0.0)
            for s in members:
                self.scell[s].w -= self.W - lack
                if lack:
                    self.gap[s] -= lack
                self.ucount[s] -= 1
                self.mem[s].pop(e, None)
                if heap is not None and s in heap:
                    if self.ucount[s] == 0:
                        self._drop(s)
                    else:
                        heap.rekey_key(s, self._tarlev(s))
                steps += 2
        elif self.phase == INIT and cell.lev < 0 and not self._init_w_pop(e):
            # not placed yet: the participant simply leaves the rebuild
            del self.ecell[e]
            for s in members:
                self.mem[s].pop(e, None)
            steps += len(members)
        # otherwise the element is placed: it stays, dead, with its weight
        self.meter.charge(steps)

    def _init_w_pop(self, e: int) -> bool:
        """Undo the initial weight of a deleted participant.

        Returns True when the element has to stay instead: a set already
        placed at ``k+1`` relies on its weight, so it is placed there, dead.
        """
        iw = getattr(self, "_init_w", None)
        if not iw or e not in iw:
            return False
        members = self.system.lives[e].members
        w = iw.pop(e)
        for s in members:
            if s in self.committed:
                self._place_elem(e, self.k + 1, w, w >= self.W, s)
                return True
        for s in members:
            self.scell[s].w -= w
        return False

    def finalize(self) -> SwitchPlan:
        return super().finalize()

    def levels(self):
        sets = {s: (c.lev, c.w) for s, c in self.scell.items()}
        elems = {e: (c.lev, c.w, c.act) for e, c in self.ecell.items()}
        return sets, elems


class PDEngine(GreedyEngine):
    """Dynamic ((1+eps) f)-approximate set cover via tight sets."""

    instance_class = WaterFillInstance

    def _fg_insert(self, idx: int, members) -> int:
        vt = self.vt
        cost = self.system.cost
        beta = self.params.beta
        cells = [vt.foreground_cell(SET, s) for s in members]
        lev = 0
        tight = False
        slack = None
        for s, c in zip(members, cells):
            w = 0.0 if c is None else c.w
            if c is not None and c.lev > lev:
                lev = c.lev
            if is_tight(w, cost[s], beta):
                tight = True
            sl = cost[s] - w
            if slack is None or sl < slack:
                slack = sl
        w = 0.0 if tight else max(0.0, slack)
        if w > 0.0:
            for s, c in zip(members, cells):
                if c is None:
                    c = vt.foreground_place(SET, s, 0)
                    c.born = self.updates
                    c.w = 0.0
                if c.log is None:
                    c.log = []
                c.w += w
                c.log.append((self.updates, w))
                self.meter.charge(1)
        cell = vt.foreground_place(ELEM, idx, lev, plev=lev, asn=-1)
        cell.w = w
        cell.act = False
        cell.born = self.updates
        return lev

    def _fg_delete(self, idx: int) -> int:
        cell = self.vt.foreground_cell(ELEM, idx)
        self.system.lives[idx].alive = False
        self._dead.append(idx)
        self.meter.charge(1)
        return cell.lev

    # -- queries -----------------------------------------------------------------
    def set_level(self, set_id: Hashable) -> int:
        return max(0, super().set_level(set_id))

    def set_weight(self, set_id: Hashable) -> float:
        c = self.vt.foreground_cell(SET, self.system.sid(set_id))
        return 0.0 if c is None else c.w

    def cover(self):
        """All tight sets as sorted (set_id, level, cost)."""
        sys = self.system
        beta = self.params.beta
        out = []
        for sid, cell in self.vt.foreground_entities(SET):
            if is_tight(cell.w, sys.cost[sid], beta):
                out.append((sid, cell.lev))
        out.sort()
        return [(sys.set_ids[sid], lev, sys.cost[sid]) for sid, lev in out]

    tight_cover = cover

    def element_state(self):
        """idx -> (status, lev, weight) for present elements."""
        out = {}
        lives = self.system.lives
        for idx, cell in self.vt.foreground_entities(ELEM):
            st = "dead" if not lives[idx].alive else ("active" if cell.act else "passive")
            out[idx] = (st, cell.lev, cell.w)
        return out

    def audit_view(self):
        from .oracle_verify import AuditView

        sys = self.system
        p = self.params
        m = len(sys.cost)
        set_lev = [0] * m
        set_w = [0.0] * m
        dup = []
        seen = set()
        for sid, cell in self.vt.foreground_entities(SET):
            if sid in seen:
                dup.append(sid)
            seen.add(sid)
            set_lev[sid] = cell.lev
            set_w[sid] = cell.w
        view = AuditView("pd", p.eps, p.beta, p.L, p.top_cap, list(sys.cost), set_lev,
                         [], [], [], [], [], [], elem_weight=[], set_weight=set_w,
                         elem_status=[], duplicate_foreground=dup)
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
            view.elem_plev.append(cell.lev)
            view.elem_asn.append(cell.asn)
            view.elem_members.append(life.members)
            view.elem_weight.append(cell.w)
            view.elem_status.append(
                "dead" if not life.alive else ("active" if cell.act else "passive"))
        view.alive_expected = sum(1 for i in sys.current.values() if sys.lives[i].alive)
        return view
