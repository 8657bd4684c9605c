"""Ground-truth oracles and the from-scratch invariant auditor.

* ``static_greedy`` runs the level-assigning greedy rounds statically.
* ``exact_opt`` finds a minimum-cost cover by enumerating subsets.
* ``Auditor`` recomputes every maintained invariant from an engine's
  ``audit_view()`` and reports a counterexample for each failed check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core_model import InfeasibleError, PowerTable, SizeGuardError

REL_TOL = 1e-9
WEIGHT_TOL = 1e-9
DRIFT_TOL = 1e-6
OPT_MAX_SETS = 20


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------
@dataclass
class GreedyResult:
    set_levels: Dict[Hashable, int]
    elem_levels: Dict[Hashable, int]
    asn: Dict[Hashable, Hashable]

    @property
    def cover(self) -> List[Hashable]:
        return sorted(s for s, lev in self.set_levels.items() if lev >= 0)


def static_greedy(universe: Iterable[Hashable],
                  sets: Mapping[Hashable, Tuple[float, Iterable[Hashable]]],
                  eps: float, top_level: int) -> GreedyResult:
    """Static greedy rounds ``top_level .. 0`` with lowest-id tie-breaking.

    In round ``i`` the lowest-id unpicked set whose
    ``floor(log_beta(|s & U| / cost))`` is at least ``i`` (everything at
    or above ``top_level`` counts as ``top_level``) is picked, until none
    is left.  Sets are compared by their keys' natural order.
    """
    table = PowerTable(1.0 + eps, top_level + 2)
    U = set(universe)
    order = sorted(sets)
    members = {s: set(sets[s][1]) for s in order}
    cost = {s: float(sets[s][0]) for s in order}
    set_levels = {s: -1 for s in order}
    elem_levels: Dict[Hashable, int] = {}
    asn: Dict[Hashable, Hashable] = {}
    for i in range(top_level, -1, -1):
        while True:
            pick = None
            for s in order:
                if set_levels[s] >= 0:
                    continue
                cnt = len(members[s] & U)
                if cnt and min(table.level_bucket(cnt, cost[s]), top_level) >= i:
                    pick = s
                    break
            if pick is None:
                break
            set_levels[pick] = i
            for e in sorted(members[pick] & U, key=repr):
                elem_levels[e] = i
                asn[e] = pick
            U -= members[pick]
    if U:
        raise InfeasibleError(f"elements not coverable: {sorted(map(repr, U))[:5]}")
    return GreedyResult(set_levels, elem_levels, asn)


def exact_opt(universe: Iterable[Hashable],
              sets: Mapping[Hashable, Tuple[float, Iterable[Hashable]]]) -> float:
    """Minimum total cost of a cover of ``universe``; ``inf`` if none exists."""
    order = sorted(sets, key=repr)
    m = len(order)
    if m > OPT_MAX_SETS:
        raise SizeGuardError(f"exact_opt refuses {m} sets (limit {OPT_MAX_SETS})")
    elems = sorted(set(universe), key=repr)
    if not elems:
        return 0.0
    pos = {e: j for j, e in enumerate(elems)}
    words = (len(elems) + 62) // 63
    sm = np.zeros((m, words), dtype=np.int64)
    for r, s in enumerate(order):
        for e in sets[s][1]:
            j = pos.get(e)
            if j is not None:
                sm[r, j // 63] |= np.int64(1) << np.int64(j % 63)
    full = np.zeros(words, dtype=np.int64)
    for j in range(len(elems)):
        full[j // 63] |= np.int64(1) << np.int64(j % 63)
    covered = np.zeros((1 << m, words), dtype=np.int64)
    total = np.zeros(1 << m, dtype=np.float64)
    costs = np.array([float(sets[s][0]) for s in order], dtype=np.float64)
    for r in range(m):
        lo = 1 << r
        covered[lo:2 * lo] = covered[:lo] | sm[r]
        total[lo:2 * lo] = total[:lo] + costs[r]
    ok = np.all(covered == full, axis=1)
    if not ok.any():
        return math.inf
    return float(total[ok].min())


# ---------------------------------------------------------------------------
# auditor
# ---------------------------------------------------------------------------
@dataclass
class AuditView:
    """Flat snapshot of an engine's foreground for the auditor.

    Elements are indexed by lifespan; ``status`` is ``"active"``,
    ``"passive"`` or ``"dead"`` for weighted engines and ``None`` otherwise.
    """

    kind: str
    eps: float
    beta: float
    L: int
    top_cap: int
    set_cost: List[float]
    set_lev: List[int]
    elem_idx: List[int]
    elem_alive: List[bool]
    elem_lev: List[int]
    elem_plev: List[int]
    elem_asn: List[int]
    elem_members: List[Tuple[int, ...]]
    elem_weight: Optional[List[float]] = None
    set_weight: Optional[List[float]] = None
    elem_status: Optional[List[str]] = None
    alive_expected: Optional[int] = None
    duplicate_foreground: List[int] = field(default_factory=list)


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class AuditReport:
    checks: List[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.ok]

    def summary(self) -> str:
        bad = self.failures()
        if not bad:
            return "all checks pass"
        return "; ".join(f"{c.name}: {c.detail}" for c in bad)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _check(name: str, bad: Optional[str]) -> CheckResult:
    return CheckResult(name, bad is None, bad or "")


class Auditor:
    """Recomputes the invariants of one engine after every update.

    The auditor keeps a shadow of each alive element's passive level so
    it can check monotonicity within a lifespan.  It never mutates the
    engine and is not metered.
    """

    def __init__(self):
        self.shadow: Dict[int, int] = {}

    def audit(self, engine) -> AuditReport:
        view = engine.audit_view()
        checks = audit_view(view, self.shadow)
        shadow = {}
        for j, idx in enumerate(view.elem_idx):
            if view.elem_alive[j]:
                shadow[idx] = view.elem_plev[j]
        self.shadow = shadow
        return AuditReport(checks)


def audit_view(view: AuditView, shadow: Optional[Mapping[int, int]] = None) -> List[CheckResult]:
    checks: List[CheckResult] = []
    n = len(view.elem_idx)
    m = len(view.set_cost)
    beta, eps, L = view.beta, view.eps, view.L
    lev = np.asarray(view.elem_lev, dtype=np.int64)
    plev = np.asarray(view.elem_plev, dtype=np.int64)
    alive = np.asarray(view.elem_alive, dtype=bool)
    cost = np.asarray(view.set_cost, dtype=np.float64)
    slev = np.asarray(view.set_lev, dtype=np.int64)
    # plain lists for the per-element loops (numpy scalar indexing is slow)
    levl, plevl, alivel, slevl = view.elem_lev, view.elem_plev, view.elem_alive, view.set_lev
    top = L + 2
    pw = beta ** np.arange(top + 2, dtype=np.float64)

    def name_elem(j):
        return f"element lifespan {view.elem_idx[j]}"

    # slot uniqueness
    checks.append(_check("unique_foreground", None if not view.duplicate_foreground else
                         f"entity {view.duplicate_foreground[0]} has two foreground slots"))
    # plev >= lev, dead plev == lev
    bad = None
    for j in range(n):
        if plevl[j] < levl[j]:
            bad = f"{name_elem(j)}: plev {plevl[j]} < lev {levl[j]}"
            break
        if not alivel[j] and view.kind == "greedy" and plevl[j] != levl[j]:
            bad = f"{name_elem(j)} is dead with plev {plevl[j]} != lev {levl[j]}"
            break
        if levl[j] < 0 or plevl[j] > top:
            bad = f"{name_elem(j)}: level pair ({levl[j]}, {plevl[j]}) out of range"
            break
    checks.append(_check("plev_ge_lev", bad))
    # plev monotone within a lifespan
    bad = None
    if shadow and view.kind == "greedy":
        for j in range(n):
            if alivel[j]:
                old = shadow.get(view.elem_idx[j])
                if old is not None and plevl[j] < old:
                    bad = f"{name_elem(j)}: plev dropped from {old} to {plevl[j]}"
                    break
    checks.append(_check("plev_monotone", bad))
    # cover validity and level consistency
    bad = None
    for j in range(n):
        if not alivel[j]:
            continue
        a = view.elem_asn[j]
        if view.kind == "pd":
            if not any(_tight(view, s) for s in view.elem_members[j]):
                bad = f"{name_elem(j)} lies in no tight set"
                break
            continue
        if a < 0 or a not in view.elem_members[j]:
            bad = f"{name_elem(j)} is assigned to set {a} that does not contain it"
            break
        if slevl[a] < 0:
            bad = f"{name_elem(j)} is assigned to set {a} outside the cover"
            break
        if slevl[a] != levl[j]:
            bad = f"{name_elem(j)} has level {levl[j]} but its set {a} has level {slevl[a]}"
            break
    if bad is None and view.alive_expected is not None and int(alive.sum()) != view.alive_expected:
        bad = f"{int(alive.sum())} alive elements present, expected {view.alive_expected}"
    checks.append(_check("valid_cover", bad))

    # per-set k-active counts via difference arrays over [lev, plev)
    act = np.zeros((m, top + 2), dtype=np.int64)
    if n:
        rows, los, his = [], [], []
        for j in range(n):
            if levl[j] < plevl[j]:
                for s in view.elem_members[j]:
                    rows.append(s)
                    los.append(levl[j])
                    his.append(plevl[j])
        if rows:
            np.add.at(act, (np.asarray(rows), np.asarray(los)), 1)
            np.add.at(act, (np.asarray(rows), np.asarray(his)), -1)
    nk = np.cumsum(act, axis=1)[:, :L + 1]
    if view.kind == "greedy":
        # inv(1): |N_k(s)| / cost(s) < beta^(k+1)
        bound = cost[:, None] * pw[None, 1:L + 2] * (1 + REL_TOL)
        viol = nk >= bound
        bad = None
        if m and viol.any():
            s, k = map(int, np.argwhere(viol)[0])
            bad = f"set {s} at k={k}: |N_k|={nk[s, k]} >= cost*beta^(k+1)={cost[s] * pw[k + 1]:.6g}"
        checks.append(_check("inv1", bad))
        # inv(2)
        covcnt = np.zeros(m, dtype=np.int64)
        for j in range(n):
            a = view.elem_asn[j]
            if a >= 0 and slevl[a] >= 0:
                covcnt[a] += 1
        bad = None
        for s in range(m):
            if slevl[s] >= 0:
                if covcnt[s] < cost[s] * pw[slevl[s]] * (1 - REL_TOL):
                    bad = (f"set {s} at level {slevl[s]}: |cov|={covcnt[s]} < "
                           f"cost*beta^lev={cost[s] * pw[slevl[s]]:.6g}")
                    break
                if slevl[s] > view.top_cap:
                    bad = f"set {s} at level {slevl[s]} above cap {view.top_cap}"
                    break
        checks.append(_check("inv2", bad))
        active_mask = np.ones(n, dtype=bool)
    else:
        checks.extend(_pd_checks(view, pw))
        active_mask = np.array([st == "active" for st in view.elem_status], dtype=bool) \
            if n else np.zeros(0, dtype=bool)

    # inv(3): |P_k| <= 2 eps |A_k|
    A = np.zeros(top + 2, dtype=np.int64)
    P = np.zeros(top + 2, dtype=np.int64)
    if view.kind == "greedy":
        for j in range(n):
            if levl[j] < plevl[j]:
                A[levl[j]] += 1
                A[plevl[j]] -= 1
            P[plevl[j]] += 1
    else:
        for j in range(n):
            if alivel[j] and active_mask[j]:
                A[levl[j]] += 1
            else:
                P[levl[j]] += 1
    A = np.cumsum(A)[:L + 1]
    P = np.cumsum(P)[:L + 1]
    viol = P > 2 * eps * A * (1 + REL_TOL)
    bad = None
    if viol.any():
        k = int(np.argmax(viol))
        bad = f"k={k}: |P_k|={P[k]} > 2 eps |A_k| = {2 * eps * A[k]:.6g}"
    checks.append(_check("inv3", bad))

    if view.kind == "greedy":
        # numeric lemma: sum(b^-lev - b^-L) <= (1+2eps) sum(b^-lev - b^-plev)
        bad = None
        if n:
            inv_lev = beta ** (-lev.astype(np.float64))
            lhs = float(np.sum(inv_lev - beta ** (-float(L))))
            rhs = float(np.sum(inv_lev - beta ** (-plev.astype(np.float64))))
            if lhs > (1 + 2 * eps) * rhs * (1 + REL_TOL) + 1e-12:
                bad = f"lhs {lhs:.12g} > (1+2eps) rhs {(1 + 2 * eps) * rhs:.12g}"
        checks.append(_check("basicub", bad))
    return checks


def _tight(view: AuditView, s: int) -> bool:
    return view.set_weight[s] > view.set_cost[s] / view.beta * (1 - 1e-12)


def _pd_checks(view: AuditView, pw) -> List[CheckResult]:
    out = []
    m = len(view.set_cost)
    n = len(view.elem_idx)
    recomputed = [0.0] * m
    for j in range(n):
        w = view.elem_weight[j]
        for s in view.elem_members[j]:
            recomputed[s] += w
    bad = None
    for s in range(m):
        if abs(recomputed[s] - view.set_weight[s]) > DRIFT_TOL:
            bad = f"set {s}: stored weight {view.set_weight[s]:.12g} vs summed {recomputed[s]:.12g}"
            break
    out.append(_check("weight_drift", bad))
    bad = None
    for s in range(m):
        if view.set_weight[s] > view.set_cost[s] + WEIGHT_TOL:
            bad = f"set {s}: weight {view.set_weight[s]:.12g} > cost {view.set_cost[s]:.12g}"
            break
    out.append(_check("lastinv1", bad))
    bad = None
    for s in range(m):
        if view.set_lev[s] >= 1 and not _tight(view, s):
            bad = f"set {s} at level {view.set_lev[s]} is slack"
            break
    out.append(_check("lastinv2", bad))
    bad = None
    for j in range(n):
        st = view.elem_status[j]
        w = view.elem_weight[j]
        cap = pw[view.elem_lev[j]] ** -1 if view.elem_lev[j] < len(pw) else 0.0
        if st == "active" and abs(w - cap) > 1e-12 * max(1.0, cap):
            bad = f"element lifespan {view.elem_idx[j]} active with weight {w} != beta^-lev"
            break
        if st == "passive" and w > cap * (1 + 1e-12):
            bad = f"element lifespan {view.elem_idx[j]} passive with weight {w} > beta^-lev"
            break
        lv = view.elem_lev[j]
        mx = max(view.set_lev[s] for s in view.elem_members[j])
        if view.elem_alive[j] and lv != mx:
            bad = f"element lifespan {view.elem_idx[j]} at level {lv}, max set level {mx}"
            break
    out.append(_check("weights", bad))
    return out


class EngineAuditor:
    """Audits any engine mode after every update.

    Plain engines are audited directly.  Windowed engines (anything with
    an ``engines`` map) get one :class:`Auditor` per inner engine plus a
    check that both the even and the odd union cover every alive element
    and that the last update touched exactly two windows.  A dominating
    set adapter additionally checks that every vertex is dominated.
    """

    def __init__(self):
        self.auditors: Dict[Hashable, Auditor] = {}

    def audit(self, engine) -> AuditReport:
        checks: List[CheckResult] = []
        graph = None
        if hasattr(engine, "undominated"):
            graph, engine = engine, engine.engine
        if hasattr(engine, "engines"):
            for l in sorted(engine.engines):
                rep = self.auditors.setdefault(l, Auditor()).audit(engine.engines[l])
                for c in rep.checks:
                    checks.append(CheckResult(f"{c.name}", c.ok,
                                              f"window {l}: {c.detail}" if c.detail else ""))
            for parity, name in ((0, "even_union"), (1, "odd_union")):
                checks.append(_check(name, engine.union_valid(parity)))
            touched = engine.last_touched
            checks.append(_check("two_windows", None if engine.updates == 0 or len(touched) == 2
                                 else f"last update touched windows {touched}"))
        else:
            checks.extend(self.auditors.setdefault(None, Auditor()).audit(engine).checks)
        if graph is not None:
            bad = graph.undominated()
            checks.append(_check("dominated", None if not bad else f"vertex {bad[0]} undominated"))
        return AuditReport(checks)
