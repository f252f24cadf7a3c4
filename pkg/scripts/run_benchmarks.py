#!/usr/bin/env python3
"""Run one or more benchmark suites and write a CSV per suite.

    python3 scripts/run_benchmarks.py benchmarks/flat_scaling.json --out-dir results

Equivalent to ``geoshoot bench SUITE --out CSV`` for each suite, plus a
short summary of BH/exact time ratios per (case, N).
"""
import argparse
import os
from collections import defaultdict
from pathlib import Path

from geoshoot import set_threads
from geoshoot.pipeline.benchmark import load_suite, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("suites", nargs="+")
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--threads", type=int, default=1,
                    help="kernel threads (default 1, for comparable timings)")
    args = ap.parse_args()
    set_threads(args.threads)
    os.makedirs(args.out_dir, exist_ok=True)
    for suite_path in args.suites:
        out = Path(args.out_dir) / (Path(suite_path).stem + ".csv")
        records = run_suite(load_suite(suite_path), out)
        by_key = defaultdict(dict)
        for r in records:
            if r.status == "ok":
                by_key[(r.case, r.n)][r.backend] = r.total_ms
        print(f"{suite_path} -> {out}")
        for (case, n), t in sorted(by_key.items()):
            if {"exact", "bh"} <= t.keys():
                print(f"  {case:<16} n={n:<6d} exact {t['exact'] / 1e3:8.2f}s "
                      f"bh {t['bh'] / 1e3:8.2f}s  bh/exact {t['bh'] / t['exact']:.2f}")


if __name__ == "__main__":
    main()
