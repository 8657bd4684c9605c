"""Parameters, level arithmetic and the static set system.

Everything that the other modules agree on lives here: the error types,
the ``Params`` record with its derived top level ``L``, the table of
``beta`` powers used for every logarithm, the step meter, and the set
system (set costs plus element lifespans).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

# Relative guard used when a ratio sits on a power of beta.
REL_GUARD = 1e-12
# Absolute tolerance for cost range validation.
COST_TOL = 1e-12
# Returned by level_bucket for an empty intersection.
EMPTY = -2


class CoverError(Exception):
    """Base class for every error raised by the engines."""


class ParameterError(CoverError, ValueError):
    pass


class DuplicateError(CoverError, KeyError):
    pass


class NotFoundError(CoverError, KeyError):
    pass


class UnknownSetError(NotFoundError):
    pass


class FrequencyError(CoverError, ValueError):
    pass


class ProtocolError(CoverError, RuntimeError):
    pass


class StaleInstanceError(ProtocolError):
    pass


class InfeasibleError(CoverError, ValueError):
    pass


class SizeGuardError(CoverError, ValueError):
    pass


class ConsistencyPanic(CoverError, AssertionError):
    """Raised when two foreground slots claim the same entity."""


def _ceil_log(x: float, beta: float) -> int:
    """Exact-ish ceil(log_beta(x)) for x >= 1, robust to float noise."""
    if x <= 1.0 + REL_GUARD:
        return 0
    j = math.ceil(math.log(x) / math.log(beta))
    # correct by at most one in either direction
    while j > 0 and beta ** (j - 1) >= x * (1 - REL_GUARD):
        j -= 1
    while beta ** j < x * (1 - REL_GUARD):
        j += 1
    return j


def ceil_log(x: float, beta: float) -> int:
    """ceil(log_beta(x)); accepts x in (0, inf)."""
    if x >= 1.0:
        return _ceil_log(x, beta)
    return -floor_log(1.0 / x, beta)


def floor_log(x: float, beta: float) -> int:
    """floor(log_beta(x)) for x > 0, ties at an exact power round down to it."""
    if x < 1.0:
        return -ceil_log(1.0 / x, beta)
    j = int(math.floor(math.log(x) / math.log(beta)))
    while j > 0 and beta ** j > x * (1 + REL_GUARD):
        j -= 1
    while beta ** (j + 1) <= x * (1 + REL_GUARD):
        j += 1
    return j


@dataclass(frozen=True)
class Params:
    """Global engine parameters.

    ``top_cap`` is the highest level a set may legally occupy,
    ``ceil(log_beta(C * n_cap))``; ``L`` adds the ``10 log_beta(1/eps)``
    slack levels on top of it.
    """

    eps: float
    beta: float
    C: float
    n_cap: int
    f_cap: int
    L: int
    top_cap: int
    cost_floor: float

    def __post_init__(self):
        if not (0.0 < self.eps < 0.25):
            raise ParameterError(f"eps must lie strictly inside (0, 1/4), got {self.eps}")
        if self.L < 0:
            raise ParameterError("L must be non-negative")


def derive_params(eps: float, C: float = 1.0, n_cap: int = 1, f_cap: int = 1) -> Params:
    """Build ``Params`` with ``L = ceil(log_b(C n)) + ceil(10 log_b(1/eps))``."""
    eps = float(eps)
    if not (0.0 < eps < 0.25):
        raise ParameterError(f"eps must lie strictly inside (0, 1/4), got {eps}")
    if C < 1:
        raise ParameterError(f"C must be >= 1, got {C}")
    if int(n_cap) != n_cap or n_cap < 1:
        raise ParameterError(f"n_cap must be a positive integer, got {n_cap}")
    if int(f_cap) != f_cap or f_cap < 1:
        raise ParameterError(f"f_cap must be a positive integer, got {f_cap}")
    beta = 1.0 + eps
    top = ceil_log(C * n_cap, beta)
    # the second term is ceil(10 log_beta(1/eps)), not 10 ceil(...)
    slack = math.ceil(10.0 * math.log(1.0 / eps) / math.log(beta) - REL_GUARD)
    return Params(eps=eps, beta=beta, C=float(C), n_cap=int(n_cap), f_cap=int(f_cap),
                  L=top + slack, top_cap=top, cost_floor=1.0 / C)


def inner_params(outer: Params, L: int, top_cap: int, cost_floor: float) -> Params:
    """Params for an engine whose level range is fixed by a wrapper."""
    return Params(eps=outer.eps, beta=outer.beta, C=1.0 / cost_floor, n_cap=outer.n_cap,
                  f_cap=outer.f_cap, L=L, top_cap=top_cap, cost_floor=cost_floor)


class PowerTable:
    """Precomputed ``beta**0 .. beta**top`` with floor-log lookups."""

    def __init__(self, beta: float, top: int):
        self.beta = beta
        self.top = top
        self.powers: List[float] = [beta ** j for j in range(top + 2)]

    def pow(self, j: int) -> float:
        if 0 <= j < len(self.powers):
            return self.powers[j]
        return self.beta ** j

    def level_bucket(self, count: int, cost: float) -> int:
        """floor(log_beta(count / cost)), clamped to ``[-1, top + 1]``.

        Returns ``EMPTY`` for ``count == 0``.  A ratio below 1 (possible
        only for costs above 1 in re-based engines) maps to -1.
        """
        if count <= 0:
            return EMPTY
        ratio = count / cost
        j = bisect_right(self.powers, ratio * (1 + REL_GUARD)) - 1
        return j


@dataclass
class Meter:
    """Counts primitive steps charged to the current update."""

    count: int = 0

    def charge(self, n: int = 1) -> None:
        self.count += n


@dataclass
class ElementLife:
    """One lifespan of an element: its id, member sets and alive flag."""

    idx: int
    eid: Hashable
    members: Tuple[int, ...]
    alive: bool = True


@dataclass
class SetRecord:
    """Read-only view of a set in the maintained solution."""

    set_id: Hashable
    cost: float
    lev: int
    cov: Tuple[Hashable, ...] = ()


@dataclass
class ElementRecord:
    """Read-only view of a present (alive or dead) element."""

    element_id: Hashable
    alive: bool
    lev: int
    plev: int
    asn: Optional[Hashable]
    member_sets: Tuple[Hashable, ...] = ()


class SetSystem:
    """Registered sets and element lifespans.

    External set ids are mapped to dense integers in registration order;
    every insertion of an element opens a fresh lifespan with its own
    dense index, so a re-inserted element never aliases its dead self.
    """

    def __init__(self, params: Params):
        self.params = params
        self.set_ids: List[Hashable] = []
        self.set_index: Dict[Hashable, int] = {}
        self.cost: List[float] = []
        self.lives: List[ElementLife] = []
        self.current: Dict[Hashable, int] = {}

    def add_set(self, set_id: Hashable, cost: float) -> int:
        if set_id in self.set_index:
            raise DuplicateError(f"set {set_id!r} already registered")
        cost = float(cost)
        lo = self.params.cost_floor
        if not (lo - COST_TOL <= cost <= 1.0 + COST_TOL):
            raise ParameterError(f"cost {cost} of set {set_id!r} outside [{lo}, 1]")
        sid = len(self.set_ids)
        self.set_ids.append(set_id)
        self.set_index[set_id] = sid
        self.cost.append(cost)
        return sid

    def sid(self, set_id: Hashable) -> int:
        try:
            return self.set_index[set_id]
        except KeyError:
            raise UnknownSetError(f"unknown set {set_id!r}") from None

    def open_life(self, eid: Hashable, member_sets: Iterable[Hashable]) -> ElementLife:
        cur = self.current.get(eid)
        if cur is not None and self.lives[cur].alive:
            raise DuplicateError(f"element {eid!r} is already present")
        sids = []
        for s in member_sets:
            sid = self.sid(s)
            if sid not in sids:
                sids.append(sid)
        if not sids:
            raise FrequencyError(f"element {eid!r} has no member sets")
        if len(sids) > self.params.f_cap:
            raise FrequencyError(
                f"element {eid!r} has frequency {len(sids)} > f_cap={self.params.f_cap}")
        life = ElementLife(len(self.lives), eid, tuple(sids))
        self.lives.append(life)
        self.current[eid] = life.idx
        return life

    def alive_life(self, eid: Hashable) -> ElementLife:
        cur = self.current.get(eid)
        if cur is None or not self.lives[cur].alive:
            raise NotFoundError(f"element {eid!r} is not alive")
        return self.lives[cur]

    def alive_elements(self) -> Dict[Hashable, Tuple[int, ...]]:
        """eid -> member set indices for every alive element."""
        out = {}
        for eid, idx in self.current.items():
            life = self.lives[idx]
            if life.alive:
                out[eid] = life.members
        return out


def is_valid_cover(elements: Mapping[Hashable, Tuple[Sequence[Hashable], Optional[Hashable]]],
                   set_levels: Mapping[Hashable, int]) -> bool:
    """True iff every alive element's assigned set contains it and is in the cover.

    ``elements`` maps each alive element to ``(member_sets, asn)``;
    ``set_levels`` maps set ids to levels (missing means -1).
    """
    for _eid, (members, asn) in elements.items():
        if asn is None or asn not in members:
            return False
        if set_levels.get(asn, -1) < 0:
            return False
    return True
