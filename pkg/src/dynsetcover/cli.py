"""Command line: run update streams through any engine and generate streams.

Stream files hold one record per line (``#`` starts a comment)::

    param eps 0.1 | param C 16 | param ncap 300 | param f 4
    set <set_id> <cost>
    ins <elem_id> <set_id> [<set_id> ...]
    del <elem_id>
    edge+ <u> <v>
    edge- <u> <v>

In ``ds`` mode every ``set`` record declares a vertex with its cost and
``param f`` is the degree bound plus one.

``dynsetcover run`` writes one CSV row per update with the columns
``update_idx, op, cover_cost, cover_size, max_steps_so_far,
steps_this_update, audit_ok`` and, with ``--opt``, ``opt_cost, ratio``.
``dynsetcover gen`` writes a deterministic stream for a generator kind.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import random
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .core_model import CoverError, SizeGuardError, ceil_log, derive_params
from .dominating_adapter import DominatingSetAdapter
from .oracle_verify import OPT_MAX_SETS, EngineAuditor, exact_opt
from .primal_dual import PDEngine
from .scheduler import GreedyEngine
from .window_engine import WindowedEngine

MODES = ("greedy", "windowed", "pd", "pd-windowed", "ds")
KINDS = ("random", "churn", "level_attack", "window_boundary", "ds_random")
PARAM_KEYS = {"eps": float, "C": float, "ncap": int, "f": int}
CSV_COLUMNS = ["update_idx", "op", "cover_cost", "cover_size", "max_steps_so_far",
               "steps_this_update", "audit_ok"]


class StreamError(ValueError):
    """Malformed stream line; the message carries the line number."""


@dataclass
class Record:
    op: str
    args: Tuple[str, ...]
    line: int


@dataclass
class Stream:
    params: Dict[str, float] = field(default_factory=dict)
    records: List[Record] = field(default_factory=list)

    @property
    def registrations(self) -> List[Record]:
        return [r for r in self.records if r.op == "set"]

    @property
    def updates(self) -> List[Record]:
        return [r for r in self.records if r.op != "set"]


def parse_lines(lines: Sequence[str]) -> Stream:
    stream = Stream()
    for no, raw in enumerate(lines, 1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        tok = text.split()
        op, args = tok[0], tuple(tok[1:])
        try:
            if op == "param":
                if len(args) != 2 or args[0] not in PARAM_KEYS:
                    raise ValueError("expected 'param <eps|C|ncap|f> <value>'")
                stream.params[args[0]] = PARAM_KEYS[args[0]](args[1])
                continue
            if op == "set":
                if len(args) != 2:
                    raise ValueError("expected 'set <set_id> <cost>'")
                float(args[1])
            elif op == "ins":
                if len(args) < 2:
                    raise ValueError("expected 'ins <elem_id> <set_id>+'")
            elif op == "del":
                if len(args) != 1:
                    raise ValueError("expected 'del <elem_id>'")
            elif op in ("edge+", "edge-"):
                if len(args) != 2:
                    raise ValueError(f"expected '{op} <u> <v>'")
            else:
                raise ValueError(f"unknown record '{op}'")
        except ValueError as exc:
            raise StreamError(f"line {no}: {exc}") from None
        stream.records.append(Record(op, args, no))
    return stream


def parse_stream(path: str) -> Stream:
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh.readlines())


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------
def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return format(x, ".12g")


def _derive(stream: Stream, eps: float, mode: str):
    """Fill in parameters that the stream does not state explicitly."""
    p = stream.params
    costs = [float(r.args[1]) for r in stream.registrations]
    C = p.get("C") or (1.0 / min(costs) if costs else 1.0)
    if "f" in p:
        f = int(p["f"])
    else:
        f = max((len(set(r.args[1:])) for r in stream.records if r.op == "ins"), default=1)
    if "ncap" in p:
        ncap = int(p["ncap"])
    else:
        alive, peak = set(), 0
        for r in stream.records:
            if r.op == "ins":
                alive.add(r.args[0])
            elif r.op == "del":
                alive.discard(r.args[0])
            peak = max(peak, len(alive))
        ncap = max(peak, len(costs) if mode == "ds" else 1)
    if mode in ("windowed", "pd-windowed"):
        ncap = max(ncap, 2)
    return derive_params(eps, max(1.0, C), ncap, f)


def build_engine(mode: str, stream: Stream, eps: float):
    params = _derive(stream, eps, mode)
    if mode == "greedy":
        return GreedyEngine(params)
    if mode == "pd":
        return PDEngine(params)
    if mode == "windowed":
        return WindowedEngine(params)
    if mode == "pd-windowed":
        return WindowedEngine(params, inner=PDEngine)
    if mode == "ds":
        regs = stream.registrations
        adapter = DominatingSetAdapter([float(r.args[1]) for r in regs], eps,
                                       max(1, params.f_cap - 1))
        adapter.names = {r.args[0]: j for j, r in enumerate(regs)}
        return adapter
    raise ValueError(f"unknown mode {mode!r}")


class Runner:
    """Drives one stream through one engine and produces CSV rows."""

    def __init__(self, mode: str, stream: Stream, eps: float, audit: bool = False,
                 opt: bool = False):
        self.mode = mode
        self.stream = stream
        self.engine = build_engine(mode, stream, eps)
        self.audit = audit
        self.opt = opt
        self.auditor = EngineAuditor() if audit else None
        self.max_steps = 0
        # shadow of the alive instance, used by the OPT oracle
        self.sets: Dict[str, float] = {}
        self.members: Dict[str, Tuple[str, ...]] = {}
        if opt:
            m = len(stream.registrations)
            if m > OPT_MAX_SETS:
                raise SizeGuardError(
                    f"--opt needs at most {OPT_MAX_SETS} sets, the stream registers {m}")

    def _opt_value(self) -> float:
        if self.mode == "ds":
            g = self.engine
            sets = {v: (g.costs[v], [v] + sorted(g.adj[v])) for v in range(g.n)}
            return exact_opt(range(g.n), sets)
        sets = {s: (c, []) for s, c in self.sets.items()}
        for e, ms in self.members.items():
            for s in ms:
                sets[s][1].append(e)
        return exact_opt(self.members.keys(), sets)

    def apply(self, rec: Record) -> None:
        eng = self.engine
        if rec.op == "set":
            if self.mode == "ds":
                return
            eng.add_set(rec.args[0], float(rec.args[1]))
            self.sets[rec.args[0]] = float(rec.args[1])
        elif rec.op == "ins":
            eng.insert(rec.args[0], list(rec.args[1:]))
            self.members[rec.args[0]] = tuple(dict.fromkeys(rec.args[1:]))
        elif rec.op == "del":
            eng.delete(rec.args[0])
            self.members.pop(rec.args[0], None)
        elif rec.op in ("edge+", "edge-"):
            if self.mode != "ds":
                raise StreamError(f"line {rec.line}: edge records need --mode ds")
            u, v = (eng.names[x] for x in rec.args)
            if rec.op == "edge+":
                eng.insert_edge(u, v)
            else:
                eng.delete_edge(u, v)
        if self.mode != "ds" and rec.op in ("edge+", "edge-"):
            raise StreamError(f"line {rec.line}: edge records need --mode ds")

    def rows(self):
        """Yield ``(row, audit_report)`` for every update of the stream."""
        idx = 0
        for rec in self.stream.records:
            if self.mode == "ds" and rec.op in ("ins", "del"):
                raise StreamError(f"line {rec.line}: element records are not allowed in ds mode")
            self.apply(rec)
            if rec.op == "set":
                continue
            idx += 1
            eng = self.engine
            steps = eng.last_steps
            self.max_steps = max(self.max_steps, steps)
            cover = eng.cover()
            cost = sum(c for _, _, c in cover)
            report = self.auditor.audit(eng) if self.auditor else None
            row = [str(idx), rec.op, _fmt(cost), str(len(cover)), str(self.max_steps),
                   str(steps), "" if report is None else ("1" if report.ok else "0")]
            if self.opt:
                opt = self._opt_value()
                if opt == 0:
                    ratio = 1.0 if cost == 0 else math.inf
                else:
                    ratio = cost / opt
                row += [_fmt(opt), _fmt(ratio)]
            yield row, report, rec


def run(mode: str, input_path: str, out, eps: Optional[float] = None, audit: bool = False,
        opt: bool = False, seed: Optional[int] = None, err=sys.stderr) -> int:
    """Process a stream file; returns the process exit code."""
    try:
        stream = parse_stream(input_path)
    except (OSError, StreamError) as exc:
        print(f"error: {exc}", file=err)
        return 2
    if eps is None:
        eps = float(stream.params.get("eps", 0.1))
    try:
        runner = Runner(mode, stream, eps, audit=audit, opt=opt)
    except CoverError as exc:
        print(f"error: {exc}", file=err)
        return 2
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + (["opt_cost", "ratio"] if opt else []))
    idx = 0
    try:
        for row, report, rec in runner.rows():
            idx += 1
            writer.writerow(row)
            if report is not None and not report.ok:
                print(f"audit failed at update {idx} (line {rec.line}): {report.summary()}",
                      file=err)
                return 1
    except (CoverError, StreamError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error at update {idx + 1}: {msg}", file=err)
        return 1
    return 0


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------
def _cost(rng: random.Random, C: float) -> str:
    # log-uniform in [1/C, 1], rounded so the text form is exact
    x = C ** (-rng.random())
    return format(max(x, 1.0 / C), ".6g") if x * C >= 1.0000001 else format(1.0 / C, ".12g")


def _header(out: List[str], kind: str, seed: int, **params) -> None:
    out.append(f"# kind={kind} seed={seed}")
    for k in ("ncap", "f", "C"):
        if k in params:
            out.append(f"param {k} {params[k]}")


def _gen_random(rng, size, ncap, f, C, m) -> List[str]:
    lines = [f"set s{j} {_cost(rng, C)}" for j in range(m)]
    alive: List[str] = []
    nxt = 0
    for _ in range(size):
        if alive and (len(alive) >= ncap or rng.random() < 0.45):
            e = alive.pop(rng.randrange(len(alive)))
            lines.append(f"del {e}")
        else:
            e = f"e{nxt}"
            nxt += 1
            ms = rng.sample(range(m), rng.randint(1, min(f, m)))
            lines.append("ins " + e + " " + " ".join(f"s{j}" for j in ms))
            alive.append(e)
    return lines


def _gen_churn(rng, size, ncap, f, C, m) -> List[str]:
    lines = [f"set s{j} {_cost(rng, C)}" for j in range(m)]
    hot = max(1, min(10, ncap // 4))
    base = ncap - hot
    members = {}
    out = 0
    nxt = 0
    alive: List[str] = []
    hot_ids = [f"h{j}" for j in range(hot)]
    hot_alive = set()
    while out < size:
        if len(alive) < base and out < size // 3:
            e = f"e{nxt}"
            nxt += 1
            ms = rng.sample(range(m), rng.randint(1, min(f, m)))
            lines.append("ins " + e + " " + " ".join(f"s{j}" for j in ms))
            alive.append(e)
        else:
            h = hot_ids[out % hot]
            if h in hot_alive:
                lines.append(f"del {h}")
                hot_alive.discard(h)
            else:
                ms = members.setdefault(h, rng.sample(range(m), rng.randint(1, min(f, m))))
                lines.append("ins " + h + " " + " ".join(f"s{j}" for j in ms))
                hot_alive.add(h)
        out += 1
    return lines


def _gen_level_attack(rng, size, ncap, f, C, m) -> List[str]:
    # a few cheap "hub" sets pull elements to high levels, expensive
    # private sets keep the rest low; then the low ones are deleted in bulk
    hubs = max(1, m // 6)
    lines = [f"set s{j} {format(1.0 / C, '.12g')}" for j in range(hubs)]
    lines += [f"set s{j} 1" for j in range(hubs, m)]
    # with a single set there are no private sets; the hub serves both roles
    private = range(hubs, m) if m > hubs else range(m)
    alive: List[Tuple[str, bool]] = []
    nxt = 0
    out = 0
    while out < size:
        start = out
        # fill phase
        while len(alive) < ncap and out < size:
            e = f"e{nxt}"
            nxt += 1
            high = rng.random() < 0.3
            if high:
                ms = [rng.randrange(hubs)] + rng.sample(range(hubs, m), min(f - 1, m - hubs))
            else:
                ms = rng.sample(private, rng.randint(1, min(f, len(private))))
            lines.append("ins " + e + " " + " ".join(f"s{j}" for j in ms[:f]))
            alive.append((e, high))
            out += 1
        # mass deletion of the low elements
        low = [x for x in alive if not x[1]]
        rng.shuffle(low)
        for e, _ in low[: max(1, int(len(low) * 0.8))]:
            if out >= size:
                break
            lines.append(f"del {e}")
            alive.remove((e, False))
            out += 1
        # and some of the high ones
        high = [x for x in alive if x[1]]
        # a full batch of fewer than three high elements would stall the
        # stream; drop one of them so every pass makes progress
        quota = len(high) // 3 if out > start else max(1, len(high) // 3)
        for x in high[:quota]:
            if out >= size:
                break
            lines.append(f"del {x[0]}")
            alive.remove(x)
            out += 1
    return lines


def _gen_window_boundary(rng, size, ncap, f, C, m, eps) -> List[str]:
    # costs whose top level sits on, just below and just above a window
    # boundary lK when the cost range allows it, else exact powers of beta
    beta = 1.0 + eps
    K = ceil_log(ncap ** 10, beta)
    costs = []
    for j in range(m):
        t = K + (j % 3) - 1
        c = ncap * beta ** (-t) * (1 + 1e-9)
        if c * C < 1.0:
            c = beta ** -(rng.randrange(0, max(1, int(math.log(C) / math.log(beta)) + 1)))
        costs.append(max(min(c, 1.0), 1.0 / C))
    lines = [f"set s{j} {format(c, '.12g')}" for j, c in enumerate(costs)]
    return lines + _gen_random(rng, size, ncap, f, C, m)[m:]


def _gen_ds(rng, size, n, delta) -> List[str]:
    lines = [f"set v{j} {rng.choice(['1', '0.5', '0.25', '0.75'])}" for j in range(n)]
    adj = [set() for _ in range(n)]
    edges: List[Tuple[int, int]] = []
    out = 0
    while out < size:
        if edges and rng.random() < 0.4:
            u, v = edges.pop(rng.randrange(len(edges)))
            adj[u].discard(v)
            adj[v].discard(u)
            lines.append(f"edge- v{u} v{v}")
            out += 1
            continue
        u, v = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if u == v or v in adj[u] or len(adj[u]) >= delta or len(adj[v]) >= delta:
            if not edges:
                break
            continue
        adj[u].add(v)
        adj[v].add(u)
        edges.append((u, v))
        lines.append(f"edge+ v{u} v{v}")
        out += 1
    return lines


def gen(kind: str, seed: int, size: int, ncap: int = 60, f: int = 3, C: float = 16.0,
        m: int = 20, eps: float = 0.1) -> str:
    """Deterministic stream text for ``(kind, seed, size)`` and the shape knobs."""
    if kind not in KINDS:
        raise ValueError(f"unknown generator kind {kind!r}; expected one of {', '.join(KINDS)}")
    rng = random.Random(f"{kind}:{seed}")
    lines: List[str] = []
    if kind == "ds_random":
        _header(lines, kind, seed, ncap=ncap, f=f)
        lines += _gen_ds(rng, size, ncap, max(1, f - 1))
    elif kind == "window_boundary":
        beta = 1.0 + eps
        K = ceil_log(ncap ** 10, beta)
        # use the full window range unless the caller restricts C
        _header(lines, kind, seed, ncap=ncap, f=f, C=format(C, ".12g"))
        lines += _gen_window_boundary(rng, size, ncap, f, C, m, eps)
        lines.insert(1, f"# K={K}")
    else:
        _header(lines, kind, seed, ncap=ncap, f=f, C=format(C, ".12g"))
        body = {"random": _gen_random, "churn": _gen_churn,
                "level_attack": _gen_level_attack}[kind]
        lines += body(rng, size, ncap, f, C, m)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynsetcover", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="process an update stream and write per-update CSV")
    r.add_argument("--mode", choices=MODES, default="greedy")
    r.add_argument("--input", required=True)
    r.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    r.add_argument("--eps", type=float, default=None)
    r.add_argument("--audit", action="store_true", help="audit after every update")
    r.add_argument("--opt", action="store_true", help="add exact OPT and ratio columns")
    r.add_argument("--seed", type=int, default=None, help="accepted for symmetry; runs are deterministic")
    g = sub.add_parser("gen", help="write a deterministic adversarial stream")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--size", type=int, default=1000, help="number of updates")
    g.add_argument("--out", default="-")
    g.add_argument("--ncap", type=int, default=60, help="max alive elements (vertices for ds_random)")
    g.add_argument("--f", type=int, default=3, help="frequency bound (degree bound + 1 for ds_random)")
    g.add_argument("--C", type=float, default=16.0, help="cost ratio bound")
    g.add_argument("--m", type=int, default=20, help="number of sets")
    g.add_argument("--eps", type=float, default=0.1, help="eps used to place window boundaries")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "gen":
        text = gen(args.kind, args.seed, args.size, ncap=args.ncap, f=args.f, C=args.C,
                   m=args.m, eps=args.eps)
        if args.out == "-":
            sys.stdout.write(text)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return 0
    if args.out == "-":
        return run(args.mode, args.input, sys.stdout, args.eps, args.audit, args.opt, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        return run(args.mode, args.input, fh, args.eps, args.audit, args.opt, args.seed)


if __name__ == "__main__":
    sys.exit(main())
