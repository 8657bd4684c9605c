"""Measure the worst-case step constant over the benchmark corpus.

For every update the metered step count is divided by ``f * L / eps``,
with ``f`` and ``L`` taken from the engine that did the work:

* greedy / pd: the engine's own parameters;
* windowed modes: the largest inner ``L`` of the two windows touched;
* ds: the inner windowed engine (``f = Delta + 1``, largest window ``L``),
  and the bound covers the four inner updates of one edge operation.

``c_impl`` is the largest such ratio.  Running this script rewrites
``c_impl.json`` next to it; the test suite re-runs the corpus and
fails if any ratio exceeds the committed value.

    python3 benchmarks/measure_c_impl.py
"""

from __future__ import annotations

import json
import math
import os
import sys
import time

from dynsetcover.cli import Runner, gen, parse_lines

HERE = os.path.dirname(os.path.abspath(__file__))
CORPUS = os.path.join(HERE, "corpus.json")
RESULT = os.path.join(HERE, "c_impl.json")


def load_corpus():
    with open(CORPUS, encoding="utf-8") as fh:
        return json.load(fh)["streams"]


def stream_for(entry):
    text = gen(entry["kind"], entry["seed"], entry["size"], ncap=entry["ncap"], f=entry["f"],
               C=float(entry["C"]), m=entry["m"], eps=entry["eps"])
    return parse_lines(text.splitlines())


def _scale(mode, eng):
    """``(f, L, ops)`` for the update the engine just processed."""
    if mode in ("greedy", "pd"):
        return eng.params.f_cap, eng.params.L, 1
    if mode in ("windowed", "pd-windowed"):
        return eng.params.f_cap, eng.bound_L(), 1
    inner = eng.engine
    L = max(e.params.L for e in inner.engines.values())
    return inner.params.f_cap, L, eng.last_inner


def measure(entry):
    """Per-stream summary: worst ratio, its update, and structural counts."""
    mode, eps = entry["mode"], entry["eps"]
    runner = Runner(mode, stream_for(entry), eps)
    eng = runner.engine
    worst, at, max_steps = 0.0, 0, 0
    touched, inner = set(), set()
    for row, _report, _rec in runner.rows():
        f, L, ops = _scale(mode, eng)
        steps = eng.last_steps
        ratio = steps / (ops * f * L / eps)
        if ratio > worst:
            worst, at = ratio, int(row[0])
        max_steps = max(max_steps, steps)
        if mode in ("windowed", "pd-windowed"):
            touched.add(len(eng.last_touched))
        if mode == "ds":
            inner.add(eng.last_inner)
    return {"ratio": worst, "at_update": at, "max_steps": max_steps,
            "windows_touched": sorted(touched), "inner_updates": sorted(inner)}


def main() -> int:
    rows = []
    for entry in load_corpus():
        t0 = time.time()
        res = measure(entry)
        res["stream"] = entry
        rows.append(res)
        print(f"{entry['mode']:12s} {entry['kind']:16s} eps={entry['eps']:<4} "
              f"ratio={res['ratio']:.4f} max_steps={res['max_steps']} "
              f"({time.time() - t0:.0f}s)", flush=True)
    worst = max(r["ratio"] for r in rows)
    # round up to two significant digits so small float noise cannot trip the guard
    digits = 1 - math.floor(math.log10(worst))
    c_impl = math.ceil(worst * 10 ** digits) / 10 ** digits
    with open(RESULT, "w", encoding="utf-8") as fh:
        json.dump({"c_impl": c_impl, "measured_max": worst, "per_stream": rows}, fh, indent=1)
        fh.write("\n")
    print(f"c_impl = {c_impl} (measured max {worst:.6f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
