"""Bucketed "truncated max-heap" used by the greedy rounds.

Sets are kept in buckets indexed by ``floor(log_beta(count / cost))``,
except that during round ``i`` every key at or above ``i`` is parked in
bucket ``i``.  Extraction therefore only ever looks at one bucket, and
moving a set after its count changed is a constant number of dict
operations.  Sets whose count fell to zero sit in a sentinel bucket.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Tuple

from .core_model import EMPTY, NotFoundError, PowerTable, ProtocolError

SENTINEL = -1


class TruncatedHeap:
    """Buckets ``0 .. top`` plus a sentinel for unextractable sets."""

    __slots__ = ("table", "top", "round", "buckets", "sentinel", "where", "cost", "mask")

    def __init__(self, table: PowerTable, top: int, round_: int):
        if not (0 <= round_ <= top):
            raise ProtocolError(f"round {round_} outside [0, {top}]")
        self.table = table
        self.top = top
        self.round = round_
        # buckets are created on first use; None reads as empty
        self.buckets: List[Optional[Dict[int, None]]] = [None] * (top + 1)
        self.sentinel: Dict[int, None] = {}
        self.where: Dict[int, int] = {}
        self.cost: Dict[int, float] = {}
        # bit j set iff bucket j is non-empty
        self.mask = 0

    @classmethod
    def build(cls, candidates: Iterable[Tuple[int, int, float]], round_: int,
              table: PowerTable, top: Optional[int] = None) -> "TruncatedHeap":
        heap = cls(table, round_ if top is None else top, round_)
        for sid, count, cost in candidates:
            heap.insert(sid, count, cost)
        return heap

    def __len__(self) -> int:
        return len(self.where)

    def __contains__(self, sid: int) -> bool:
        return sid in self.where

    def bucket_of(self, count: int, cost: float) -> int:
        j = self.table.level_bucket(count, cost)
        if j == EMPTY or j < 0:
            return SENTINEL
        return j if j < self.round else self.round

    def _place(self, sid: int, b: int) -> None:
        self.where[sid] = b
        if b == SENTINEL:
            self.sentinel[sid] = None
        else:
            bucket = self.buckets[b]
            if bucket is None:
                bucket = self.buckets[b] = {}
            bucket[sid] = None
            self.mask |= 1 << b

    def _unplace(self, sid: int) -> int:
        b = self.where.pop(sid)
        if b == SENTINEL:
            del self.sentinel[sid]
        else:
            bucket = self.buckets[b]
            del bucket[sid]
            if not bucket:
                self.mask &= ~(1 << b)
        return b

    def insert(self, sid: int, count: int, cost: float) -> None:
        if sid in self.where:
            raise ProtocolError(f"set {sid} already in heap")
        self.cost[sid] = cost
        self._place(sid, self.bucket_of(count, cost))

    def rekey(self, sid: int, new_count: int) -> None:
        if sid not in self.where:
            raise NotFoundError(f"set {sid} not in heap")
        b = self.bucket_of(new_count, self.cost[sid])
        if b != self.where[sid]:
            self._unplace(sid)
            self._place(sid, b)

    def _clamp(self, key: int) -> int:
        if key < 0:
            return SENTINEL
        return key if key < self.round else self.round

    def insert_key(self, sid: int, key: int) -> None:
        """Insert with a precomputed bucket key (used by the water-filling rounds)."""
        if sid in self.where:
            raise ProtocolError(f"set {sid} already in heap")
        self.cost[sid] = 0.0
        self._place(sid, self._clamp(key))

    def rekey_key(self, sid: int, key: int) -> None:
        if sid not in self.where:
            raise NotFoundError(f"set {sid} not in heap")
        b = self._clamp(key)
        if b != self.where[sid]:
            self._unplace(sid)
            self._place(sid, b)

    def remove(self, sid: int) -> None:
        if sid not in self.where:
            raise NotFoundError(f"set {sid} not in heap")
        self._unplace(sid)
        del self.cost[sid]

    def extract_at_threshold(self) -> Optional[int]:
        """Lowest set id in the current round's bucket, without removing it."""
        bucket = self.buckets[self.round]
        if not bucket:
            return None
        return min(bucket)

    def set_round(self, i: int) -> None:
        if self.buckets[self.round]:
            raise ProtocolError(
                f"cannot leave round {self.round}: its bucket still holds sets")
        if not (0 <= i <= self.top):
            raise ProtocolError(f"round {i} outside [0, {self.top}]")
        if i > self.round:
            raise ProtocolError("rounds only move downwards")
        self.round = i

    def highest_nonempty(self, at_most: int) -> int:
        """Highest non-empty bucket index <= at_most, or -1."""
        if at_most < 0:
            return -1
        return (self.mask & ((1 << (at_most + 1)) - 1)).bit_length() - 1

    def placement(self) -> Dict[int, int]:
        """Copy of set -> bucket (sentinel is -1); used by tests."""
        return dict(self.where)
