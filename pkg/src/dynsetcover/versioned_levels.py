"""Per-instance level slots and the foreground/background switch.

Every entity (set or element lifespan) has a small column map
``col -> Cell``.  Column ``k`` belongs to the reset instance at level
``k``; column ``F = L + 1`` holds cells written directly by the
foreground.  A cell records the entity's level in that column and the
list head it is linked into.

Whether a cell is the *foreground* one is decided by its head: a head is
foreground iff it carries a token that is still live.  All heads of one
foreground level share a token, so replacing a level is a single token
kill, and the whole switch of a finished instance touches ``O(k)``
heads and no entity.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from .core_model import ConsistencyPanic, Meter, ProtocolError, StaleInstanceError

SET = 0
ELEM = 1


class Token:
    __slots__ = ("live",)

    def __init__(self):
        self.live = True


class Head:
    """Head of one level list; ``members`` maps entity -> Cell."""

    __slots__ = ("kind", "level", "owner", "members", "token")

    def __init__(self, kind: int, level: int, owner: int):
        self.kind = kind
        self.level = level
        self.owner = owner
        self.members: Dict[int, "Cell"] = {}
        self.token: Optional[Token] = None

    @property
    def fg(self) -> bool:
        tok = self.token
        return tok is not None and tok.live


class Cell:
    """One slot value: level, passive level and assignment of an entity."""

    __slots__ = ("lev", "plev", "asn", "head", "owner", "w", "act", "born", "log")

    def __init__(self, lev: int = -1, plev: int = -1, asn: int = -1, owner=None):
        self.lev = lev
        self.plev = plev
        self.asn = asn
        self.head: Optional[Head] = None
        # the Column that wrote this cell; None for foreground writes
        self.owner: Optional["Column"] = owner
        # primal-dual fields: weight, active flag, update index of a
        # foreground write, and (update, delta) weight increments of a set
        self.w = 0.0
        self.act = False
        self.born = 0
        self.log: Optional[list] = None

    @property
    def fg(self) -> bool:
        h = self.head
        return h is not None and h.fg


class Column:
    """The heads and liveness of one reset instance's slot column."""

    __slots__ = ("k", "live", "finished", "heads", "made")

    def __init__(self, k: int):
        self.k = k
        self.live = True
        self.finished = False
        # heads[kind][level] for levels 0 .. k+1, created on first use
        self.heads: List[List[Optional[Head]]] = [[None] * (k + 2), [None] * (k + 2)]
        self.made: List[Head] = []

    def head(self, kind: int, level: int) -> Head:
        h = self.heads[kind][level]
        if h is None:
            h = Head(kind, level, self.k)
            self.heads[kind][level] = h
            self.made.append(h)
        return h

    def release(self) -> None:
        """Drop the member maps of a dead column.

        Stale cells can linger in entity rows until the next instance at
        this level overwrites them; without this they would keep every
        other cell of the column reachable.
        """
        for h in self.made:
            if not h.fg:
                h.members = {}
        self.made = []
        self.heads = None


class VersionTable:
    """Slot table plus the foreground level lists.

    ``segs[kind][i]`` is the list of heads forming foreground level ``i``;
    a finished instance's level ``k+1`` lists are appended as segments.
    """

    def __init__(self, L: int, meter: Optional[Meter] = None):
        self.L = L
        self.F = L + 1
        self.top = L + 1
        self.meter = meter if meter is not None else Meter()
        self.slots: List[Dict[int, Dict[int, Cell]]] = [{}, {}]
        self.tok: List[Token] = [Token() for _ in range(self.top + 1)]
        self.segs: List[List[List[Head]]] = [
            [[] for _ in range(self.top + 1)] for _ in range(2)]
        self.own: List[List[Optional[Head]]] = [
            [None] * (self.top + 1) for _ in range(2)]
        self.columns: Dict[int, Column] = {}

    # -- columns -------------------------------------------------------
    def open_column(self, k: int) -> Column:
        if not (0 <= k <= self.L):
            raise ProtocolError(f"instance level {k} outside [0, {self.L}]")
        old = self.columns.get(k)
        if old is not None and old.live and not old.finished:
            raise ProtocolError(f"instance {k} is already live")
        col = Column(k)
        self.columns[k] = col
        self.meter.charge(1)
        return col

    def abort(self, col: Column) -> None:
        """Make ``col`` stale; idempotent, never touches the foreground."""
        col.live = False
        col.release()

    # -- slot access ---------------------------------------------------
    def _link(self, cell: Cell, head: Optional[Head], ent: int) -> None:
        old = cell.head
        if old is head:
            return
        if old is not None:
            old.members.pop(ent, None)
        if head is not None:
            head.members[ent] = cell
        cell.head = head

    def write_background_level(self, kind: int, ent: int, col: Column, level: int,
                               cell: Optional[Cell] = None) -> Cell:
        """Set ``slot[ent][col.k]`` to ``level`` and link it into col's list.

        Passing the instance's own ``cell`` skips the column lookup.  A
        cell left in the column by an earlier instance is replaced; if
        that cell is still the foreground one it is first moved to the
        foreground column so the entity keeps its foreground level.
        Background writes are metered by the calling instance.
        """
        if not col.live or col.finished:
            raise StaleInstanceError(f"instance {col.k} is no longer live")
        if cell is None:
            row = self.slots[kind].setdefault(ent, {})
            cell = row.get(col.k)
            if cell is None or cell.owner is not col:
                cell = self._fresh(row, col)
        self._link(cell, col.head(kind, level) if level >= 0 else None, ent)
        cell.lev = level
        return cell

    def new_cell(self, kind: int, ent: int, col: Column) -> Cell:
        """Fresh level -1 cell in ``col`` for ``ent`` (first touch by an instance)."""
        if not col.live or col.finished:
            raise StaleInstanceError(f"instance {col.k} is no longer live")
        row = self.slots[kind].setdefault(ent, {})
        return self._fresh(row, col)

    def _fresh(self, row: Dict[int, Cell], col: Column) -> Cell:
        old = row.get(col.k)
        if old is not None and old.fg:
            spare = row.get(self.F)
            if spare is not None and spare.fg:
                raise ConsistencyPanic("two foreground slots while relocating")
            row[self.F] = old
        cell = Cell(owner=col)
        row[col.k] = cell
        return cell

    def foreground_cell(self, kind: int, ent: int) -> Optional[Cell]:
        """The unique foreground cell of ``ent`` (O(L) scan), or None."""
        row = self.slots[kind].get(ent)
        if not row:
            self.meter.charge(1)
            return None
        self.meter.charge(len(row))
        found = None
        for cell in row.values():
            if cell.fg:
                if found is not None and found is not cell:
                    raise ConsistencyPanic(f"entity {ent} has two foreground slots")
                found = cell
        return found

    def read_foreground_level(self, kind: int, ent: int) -> int:
        cell = self.foreground_cell(kind, ent)
        return -1 if cell is None else cell.lev

    # -- foreground writes ----------------------------------------------
    def _own_head(self, kind: int, level: int) -> Head:
        h = self.own[kind][level]
        if h is None or not h.fg:
            h = Head(kind, level, self.F)
            h.token = self.tok[level]
            self.own[kind][level] = h
            self.segs[kind][level].append(h)
        return h

    def foreground_place(self, kind: int, ent: int, level: int, plev: int = -1,
                         asn: int = -1) -> Cell:
        """Create a foreground cell for an entity that currently has none."""
        self.meter.charge(1)
        row = self.slots[kind].setdefault(ent, {})
        old = row.get(self.F)
        if old is not None and old.fg:
            raise ConsistencyPanic(f"entity {ent} already has a foreground slot")
        cell = Cell(level, plev, asn)
        row[self.F] = cell
        self._link(cell, self._own_head(kind, level), ent)
        return cell

    def forget(self, kind: int, ent: int) -> None:
        """Drop every slot of an entity that left the system."""
        self.slots[kind].pop(ent, None)

    def collectable(self, kind: int, ent: int) -> bool:
        """True if no cell of ``ent`` is foreground or owned by a live instance."""
        row = self.slots[kind].get(ent)
        if not row:
            return True
        for cell in row.values():
            if cell.fg:
                return False
            col = cell.owner
            if col is not None and col.live and not col.finished:
                return False
        return True

    # -- switch -----------------------------------------------------------
    def switch_to_foreground(self, col: Column) -> None:
        """Promote a finished instance's lists: replace 0..k, append k+1."""
        if not col.live or col.finished:
            raise StaleInstanceError(f"instance {col.k} cannot switch")
        k = col.k
        heads, segs = col.heads, self.segs
        hs, he, ss, se = heads[SET], heads[ELEM], segs[SET], segs[ELEM]
        for i in range(k + 1):
            # a level that is empty before and after needs no new token
            if hs[i] is None and he[i] is None and not ss[i] and not se[i]:
                continue
            self.tok[i].live = False
            tok = Token()
            self.tok[i] = tok
            for kind in (SET, ELEM):
                h = heads[kind][i]
                if h is None:
                    segs[kind][i] = []
                else:
                    h.token = tok
                    segs[kind][i] = [h]
                self.own[kind][i] = None
        self.meter.charge(k + 1)
        tok = self.tok[k + 1]
        for kind in (SET, ELEM):
            h = col.heads[kind][k + 1]
            if h is not None and h.members:
                h.token = tok
                self.segs[kind][k + 1].append(h)
        self.meter.charge(1)
        col.finished = True
        col.release()

    # -- enumeration (auditor / tests; not metered) -------------------------
    def foreground_members(self, kind: int, level: int):
        """Yield (entity, cell) for the foreground list of ``level``."""
        for h in self.segs[kind][level]:
            if not h.fg:
                continue
            for ent, cell in h.members.items():
                yield ent, cell

    def foreground_entities(self, kind: int):
        """All (entity, cell) pairs of the foreground, lowest level first."""
        return [pair for seg in self.segs[kind] for h in seg if h.fg
                for pair in h.members.items()]
